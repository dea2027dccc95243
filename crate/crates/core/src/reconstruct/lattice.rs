use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forward::ForwardOp;
use crate::manifolds::{euclid, FamilySpec, ManifoldFamily};
use crate::measurement::{format_f64, packed_len, Measurement};

use super::model::{ForwardModel, MeasuredMap};

pub const TABLE_FORMAT_VERSION: u32 = 1;
const TABLE_MAGIC: &str = "# chartrecon lattice table";

/// Default guard on the number of grid cells.
pub const DEFAULT_LATTICE_CAP: usize = 5_000_000;

/// Offline table: lattice points of K (flattened, `chart_dim` per point)
/// and their measurements (flattened, `measurement_len` per point).
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeTable {
    pub family: FamilySpec,
    pub op: ForwardOp,
    pub bandwidth: usize,
    pub measurement_dim: usize,
    pub radius: f64,
    pub spacing: f64,
    pub seed: u64,
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
    pub chart_dim: usize,
    pub points: Vec<f64>,
    pub measurements: Vec<f64>,
}

/// Chart spacing whose cells have ambient covering radius at most `r`:
/// half the cell diagonal `s√m/2` must satisfy `(s√m/2)^α <= ℓ_H r`.
pub fn lattice_spacing(r: f64, ell_holder: f64, alpha: f64, m: usize) -> Result<f64> {
    if !(r > 0.0 && ell_holder > 0.0 && alpha > 0.0 && m > 0) {
        return Err(invalid("lattice spacing needs r, ℓ, α > 0 and m >= 1"));
    }
    Ok(2.0 * (r * ell_holder).powf(1.0 / alpha) / (m as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeOptions {
    pub cap: usize,
    pub seed: u64,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        LatticeOptions { cap: DEFAULT_LATTICE_CAP, seed: 0 }
    }
}

/// Regular grid over the box of K, kept where a cell meets K and projected
/// onto K (projection is non-expansive, so covering is preserved), in
/// row-major order with the first coordinate outermost.
pub fn build_lattice(model: &ForwardModel<'_>, radius: f64, opts: LatticeOptions) -> Result<LatticeTable> {
    let family = model.family;
    let k = family.compact();
    let m = family.chart_dim();
    let hd = family.holder_data();
    let s = lattice_spacing(radius, hd.ell_holder, hd.alpha, m)?;
    let counts: Vec<usize> = k
        .lo
        .iter()
        .zip(&k.hi)
        .map(|(l, h)| (((h - l) / s).ceil() as usize).max(1))
        .collect();
    let total: u128 = counts.iter().map(|c| *c as u128).product();
    if total > opts.cap as u128 {
        return Err(Error::LatticeTooLarge { points: total, cap: opts.cap });
    }
    let widths: Vec<f64> = (0..m).map(|i| (k.hi[i] - k.lo[i]) / counts[i] as f64).collect();
    let half_diag = 0.5 * widths.iter().map(|w| w * w).sum::<f64>().sqrt();
    let candidates: Vec<Vec<f64>> = (0..total as usize)
        .into_par_iter()
        .filter_map(|idx| {
            let mut rest = idx;
            let mut c = vec![0.0; m];
            for i in (0..m).rev() {
                let j = rest % counts[i];
                rest /= counts[i];
                c[i] = k.lo[i] + (j as f64 + 0.5) * widths[i];
            }
            let p = k.project(&c);
            (euclid(&p, &c) <= half_diag).then_some(p)
        })
        .collect();
    let mut seen = HashSet::with_capacity(candidates.len());
    let mut points = Vec::with_capacity(candidates.len() * m);
    for p in candidates {
        let key: Vec<u64> = p.iter().map(|x| x.to_bits()).collect();
        if seen.insert(key) {
            points.extend_from_slice(&p);
        }
    }
    let per_point: Vec<Measurement> = points
        .par_chunks(m)
        .map(|h| model.measure(h))
        .collect::<Result<_>>()?;
    let measurement_dim = per_point.first().map_or(1, |mm| mm.dim);
    let measurements = per_point.into_iter().flat_map(|mm| mm.coeffs).collect();
    Ok(LatticeTable {
        family: family.spec().clone(),
        op: model.op,
        bandwidth: model.bandwidth,
        measurement_dim,
        radius,
        spacing: s,
        seed: opts.seed,
        box_lo: k.lo.clone(),
        box_hi: k.hi.clone(),
        chart_dim: m,
        points,
        measurements,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    /// The first lattice point in scan order below the threshold.
    FirstHit,
    /// The lattice point with the smallest residual, if it is below the threshold.
    ArgMin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub index: usize,
    pub point: Vec<f64>,
    pub residual: f64,
}

impl LatticeTable {
    pub fn len(&self) -> usize {
        self.points.len() / self.chart_dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn measurement_len(&self) -> usize {
        packed_len(self.bandwidth, self.measurement_dim)
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.chart_dim..(j + 1) * self.chart_dim]
    }

    pub fn measurement(&self, j: usize) -> &[f64] {
        let l = self.measurement_len();
        &self.measurements[j * l..(j + 1) * l]
    }

    fn residual(&self, j: usize, data: &[f64]) -> f64 {
        self.measurement(j).iter().zip(data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Initial guess: a lattice point whose measurement is within `threshold` of the data.
    pub fn select_initial(&self, data: &Measurement, threshold: f64, mode: SelectionMode) -> Result<Selection> {
        if data.bandwidth != self.bandwidth || data.coeffs.len() != self.measurement_len() {
            return Err(invalid(format!(
                "data has bandwidth {} but the table was built for {}",
                data.bandwidth, self.bandwidth
            )));
        }
        if self.is_empty() {
            return Err(Error::Degenerate("empty lattice table".into()));
        }
        let res = |j: usize| self.residual(j, &data.coeffs);
        let found = match mode {
            SelectionMode::FirstHit => (0..self.len()).into_par_iter().position_first(|j| res(j) < threshold),
            SelectionMode::ArgMin => {
                let (j, r) = (0..self.len())
                    .into_par_iter()
                    .map(|j| (j, res(j)))
                    .reduce(|| (usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a });
                (r < threshold).then_some(j)
            }
        };
        match found {
            Some(index) => Ok(Selection { index, point: self.point(index).to_vec(), residual: res(index) }),
            None => {
                let best = (0..self.len()).into_par_iter().map(res).reduce(|| f64::INFINITY, f64::min);
                Err(Error::NoInitialGuess { best_residual: best, threshold })
            }
        }
    }

    /// Largest ambient distance from `samples` points of K to the lattice.
    pub fn covering_radius_estimate(&self, family: &ManifoldFamily, samples: usize, seed: u64) -> Result<f64> {
        let pts = family.sample_compact(samples, seed)?;
        let worst = pts
            .par_iter()
            .map(|x| {
                let mut best = f64::INFINITY;
                for j in 0..self.len() {
                    best = best.min(family.distance(&x.coords, self.point(j))?);
                }
                Ok(best)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(worst.into_iter().fold(0.0, f64::max))
    }

    pub fn write_to(&self, w: impl Write) -> Result<()> {
        let mut w = BufWriter::new(w);
        writeln!(w, "{TABLE_MAGIC}")?;
        writeln!(w, "# version: {TABLE_FORMAT_VERSION}")?;
        writeln!(w, "# family: {}", to_json(&self.family))?;
        writeln!(w, "# op: {}", to_json(&self.op))?;
        writeln!(w, "# bandwidth: {}", self.bandwidth)?;
        writeln!(w, "# measurement_dim: {}", self.measurement_dim)?;
        writeln!(w, "# radius: {}", format_f64(self.radius))?;
        writeln!(w, "# spacing: {}", format_f64(self.spacing))?;
        writeln!(w, "# seed: {}", self.seed)?;
        writeln!(w, "# box_lo: {}", join(&self.box_lo))?;
        writeln!(w, "# box_hi: {}", join(&self.box_hi))?;
        writeln!(w, "# chart_dim: {}", self.chart_dim)?;
        writeln!(w, "# points: {}", self.len())?;
        let mut line = String::new();
        for j in 0..self.len() {
            line.clear();
            for (i, x) in self.point(j).iter().chain(self.measurement(j)).enumerate() {
                if i > 0 {
                    line.push(',');
                }
                let _ = write!(line, "{}", format_f64(*x));
            }
            writeln!(w, "{line}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<LatticeTable> {
        let mut lines = BufReader::new(r).lines();
        let mut next = || -> Result<String> {
            lines.next().ok_or_else(|| Error::Parse("unexpected end of table".into()))?.map_err(Error::from)
        };
        if next()?.trim_end() != TABLE_MAGIC {
            return Err(Error::Parse("not a lattice table".into()));
        }
        let header = |key: &str, next: &mut dyn FnMut() -> Result<String>| -> Result<String> {
            let line = next()?;
            let prefix = format!("# {key}: ");
            line.strip_prefix(&prefix)
                .map(|s| s.trim_end().to_string())
                .ok_or_else(|| Error::Parse(format!("expected header {key:?}, found {line:?}")))
        };
        let version: u32 = parse(&header("version", &mut next)?)?;
        if version != TABLE_FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported table version {version}")));
        }
        let family: FamilySpec = serde_json::from_str(&header("family", &mut next)?).map_err(|e| Error::Parse(e.to_string()))?;
        let op: ForwardOp = serde_json::from_str(&header("op", &mut next)?).map_err(|e| Error::Parse(e.to_string()))?;
        let bandwidth: usize = parse(&header("bandwidth", &mut next)?)?;
        let measurement_dim: usize = parse(&header("measurement_dim", &mut next)?)?;
        let radius: f64 = parse(&header("radius", &mut next)?)?;
        let spacing: f64 = parse(&header("spacing", &mut next)?)?;
        let seed: u64 = parse(&header("seed", &mut next)?)?;
        let box_lo = parse_list(&header("box_lo", &mut next)?)?;
        let box_hi = parse_list(&header("box_hi", &mut next)?)?;
        let chart_dim: usize = parse(&header("chart_dim", &mut next)?)?;
        let count: usize = parse(&header("points", &mut next)?)?;
        if !(1..=2).contains(&measurement_dim) || chart_dim == 0 {
            return Err(Error::Parse("bad table dimensions".into()));
        }
        let mlen = packed_len(bandwidth, measurement_dim);
        let mut points = Vec::with_capacity(count * chart_dim);
        let mut measurements = Vec::with_capacity(count * mlen);
        for row in 0..count {
            let values = parse_list(&next()?)?;
            if values.len() != chart_dim + mlen {
                return Err(Error::Parse(format!("row {row} has {} values, expected {}", values.len(), chart_dim + mlen)));
            }
            points.extend_from_slice(&values[..chart_dim]);
            measurements.extend_from_slice(&values[chart_dim..]);
        }
        Ok(LatticeTable {
            family,
            op,
            bandwidth,
            measurement_dim,
            radius,
            spacing,
            seed,
            box_lo,
            box_hi,
            chart_dim,
            points,
            measurements,
        })
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format_f64(*x)).collect::<Vec<_>>().join(",")
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse().map_err(|e| Error::Parse(format!("{s:?}: {e}")))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse::<f64>).collect()
}
