//! Global reconstruction: lattice radius, offline measurement table,
//! initial-guess selection and Landweber iteration in chart coordinates.
//!
//! Measurements carry the Parseval (L²) structure, so `L_{F,K}`, `‖Q‖` and
//! the stability constant C are all taken with respect to that norm on Y.

mod lattice;
mod model;

pub use lattice::{
    build_lattice, lattice_spacing, LatticeOptions, LatticeTable, Selection, SelectionMode, DEFAULT_LATTICE_CAP,
    TABLE_FORMAT_VERSION,
};
pub use model::{ForwardModel, MeasuredMap};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forward::ForwardOp;
use crate::manifolds::{euclid, FamilySpec, FamilyTag, ManifoldFamily, SimplexChart};
use crate::geometry::SimplexParams;
use crate::measurement::{qn_operator_norm_bound, Measurement};
use crate::sampling::{stream_rng, unit_vector};
use crate::stabilitylab::{empirical_stability, projected_stability, StabilityOptions, YNorm};
use crate::stats::linear_fit;

/// `r = (min{ρℓ, δ}/(2C))^{1/α} / (L_{F,K} ‖Q‖)`.
pub fn lattice_radius(l_fk: f64, q_norm: f64, rho: f64, ell: f64, delta_km: f64, alpha: f64, c: f64) -> Result<f64> {
    Ok(initial_threshold(rho, ell, delta_km, alpha, c)? / (positive("L_FK", l_fk)? * positive("‖Q‖", q_norm)?))
}

/// `(min{ρℓ, δ}/(2C))^{1/α}`: data misfit below which a lattice point is a
/// valid initial guess.
pub fn initial_threshold(rho: f64, ell: f64, delta_km: f64, alpha: f64, c: f64) -> Result<f64> {
    if !(alpha > 0.5 && alpha <= 1.0) {
        return Err(invalid(format!("α must lie in (1/2, 1], got {alpha}")));
    }
    positive("ρ", rho)?;
    positive("ℓ", ell)?;
    positive("C", c)?;
    if !(delta_km > 0.0) {
        return Err(invalid("δ must be positive"));
    }
    Ok(((rho * ell).min(delta_km) / (2.0 * c)).powf(1.0 / alpha))
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopRule {
    /// Residual (Parseval norm) at which the iteration counts as converged.
    pub tolerance: f64,
    pub max_iters: usize,
    /// Residual growth over the initial residual treated as divergence.
    pub divergence_factor: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule { tolerance: 1e-9, max_iters: 100_000, divergence_factor: 1e3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandweberTrajectory {
    pub iterates: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    /// Chart distance to the truth, when it is known.
    pub chart_errors: Option<Vec<f64>>,
    pub ambient_errors: Option<Vec<f64>>,
    pub step: f64,
    pub termination: Termination,
    /// Iterations whose update left the chart image and was projected onto K.
    pub projections: Vec<usize>,
}

impl LandweberTrajectory {
    pub fn iterations(&self) -> usize {
        self.iterates.len() - 1
    }

    pub fn final_point(&self) -> &[f64] {
        self.iterates.last().expect("trajectory is never empty")
    }

    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().expect("trajectory is never empty")
    }

    /// `k, h…, residual, chart error, ambient error` rows.
    pub fn to_csv(&self) -> String {
        let m = self.iterates[0].len();
        let mut out = String::from("k");
        for i in 0..m {
            out.push_str(&format!(",h{i}"));
        }
        out.push_str(",residual,chart_error,ambient_error\n");
        let fmt = crate::measurement::format_f64;
        for (k, h) in self.iterates.iter().enumerate() {
            out.push_str(&k.to_string());
            for x in h {
                out.push(',');
                out.push_str(&fmt(*x));
            }
            out.push(',');
            out.push_str(&fmt(self.residuals[k]));
            for errs in [&self.chart_errors, &self.ambient_errors] {
                out.push(',');
                if let Some(e) = errs {
                    out.push_str(&fmt(e[k]));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// `1/σ_max²` for the measured Jacobian at `h`.
pub fn spectral_step(model: &dyn MeasuredMap, h: &[f64]) -> Result<f64> {
    let j = model.jacobian(h)?;
    let sigma = j.singular_values().iter().copied().fold(0.0, f64::max);
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Degenerate("measured Jacobian vanishes".into()));
    }
    Ok(1.0 / (sigma * sigma))
}

/// `h_{k+1} = h_k − μ J(h_k)ᵀ (Q F(h_k) − data)`; the Parseval packing makes
/// the transpose the adjoint, and `Q*` acts as the identity on measurements.
pub fn landweber(
    model: &dyn MeasuredMap,
    h0: &[f64],
    data: &Measurement,
    step: f64,
    stop: StopRule,
    truth: Option<&[f64]>,
) -> Result<LandweberTrajectory> {
    positive("step size", step)?;
    if !model.in_chart(h0) {
        return Err(Error::OutsideDomain(format!("initial point {h0:?} is outside the chart image")));
    }
    let errors = |h: &[f64]| -> Result<Option<(f64, f64)>> {
        truth.map(|t| Ok((euclid(h, t), model.ambient_distance(h, t)?))).transpose()
    };
    let mut h = h0.to_vec();
    let mut r = model.measure(&h)?.sub(data)?;
    let mut res = r.norm();
    let res0 = res;
    let mut traj = LandweberTrajectory {
        iterates: vec![h.clone()],
        residuals: vec![res],
        chart_errors: truth.map(|_| Vec::new()),
        ambient_errors: truth.map(|_| Vec::new()),
        step,
        termination: Termination::MaxIterations,
        projections: Vec::new(),
    };
    let push_errors = |traj: &mut LandweberTrajectory, e: Option<(f64, f64)>| {
        if let (Some(c), Some(a), Some((ec, ea))) = (traj.chart_errors.as_mut(), traj.ambient_errors.as_mut(), e) {
            c.push(ec);
            a.push(ea);
        }
    };
    push_errors(&mut traj, errors(&h)?);
    for k in 0..=stop.max_iters {
        if res <= stop.tolerance {
            traj.termination = Termination::Converged;
            break;
        }
        if k == stop.max_iters {
            break;
        }
        let j = model.jacobian(&h)?;
        let grad = j.transpose() * DVector::from_column_slice(&r.coeffs);
        let mut next: Vec<f64> = h.iter().zip(grad.iter()).map(|(x, g)| x - step * g).collect();
        if !model.in_chart(&next) {
            next = model.project(&next);
            traj.projections.push(k + 1);
        }
        h = next;
        r = model.measure(&h)?.sub(data)?;
        res = r.norm();
        if !res.is_finite() || res > stop.divergence_factor * res0.max(stop.tolerance) {
            return Err(Error::Divergence { iteration: k + 1, residual: res });
        }
        traj.iterates.push(h.clone());
        traj.residuals.push(res);
        push_errors(&mut traj, errors(&h)?);
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub c_hat: f64,
    pub rho_hat: f64,
    pub tail_start: usize,
    pub tail_len: usize,
    pub bound_satisfied: bool,
}

/// Chart errors below this are treated as round-off.
const ERROR_FLOOR: f64 = 1e-13;

/// `(ck(1−α)/α + ρ^{−(1−α)/α})^{−α²/(2(1−α))} / ℓ` for `α ∈ (1/2, 1)`.
pub fn power_law_envelope(k: usize, rho: f64, c: f64, alpha: f64, ell: f64) -> f64 {
    let base = c * k as f64 * (1.0 - alpha) / alpha + rho.powf(-(1.0 - alpha) / alpha);
    base.powf(-alpha * alpha / (2.0 * (1.0 - alpha))) / ell
}

/// Least-squares geometric rate on the tail of the chart errors and a check
/// of the convergence envelope: `ρc^k/ℓ` for `α = 1`, the power law
/// otherwise. `envelope` supplies `(ρ, c)`; the fitted values are used when absent.
pub fn rate_fit(
    chart_errors: &[f64],
    ambient_errors: Option<&[f64]>,
    alpha: f64,
    ell: f64,
    envelope: Option<(f64, f64)>,
) -> Result<RateFit> {
    if !(alpha > 0.5 && alpha <= 1.0) || !(ell > 0.0) {
        return Err(invalid("rate fit needs α ∈ (1/2, 1] and ℓ > 0"));
    }
    let end = chart_errors.iter().rposition(|e| *e > ERROR_FLOOR).map_or(0, |i| i + 1);
    let mut start = end / 2;
    // Shrink to the strictly decreasing suffix.
    let mut i = end.saturating_sub(1);
    while i > start && chart_errors[i] < chart_errors[i - 1] {
        i -= 1;
    }
    start = start.max(i);
    let tail_len = end.saturating_sub(start);
    if tail_len < 5 {
        return Err(Error::Degenerate(format!("only {tail_len} strictly decreasing tail errors")));
    }
    let pts: Vec<(f64, f64)> = (start..end).map(|k| (k as f64, chart_errors[k].ln())).collect();
    let fit = linear_fit(&pts).expect("tail has distinct abscissae");
    let c_hat = fit.slope.exp();
    let rho_hat = (start..end).map(|k| chart_errors[k] / c_hat.powi(k as i32)).fold(0.0, f64::max);
    let (rho, c) = envelope.unwrap_or((rho_hat, c_hat));
    let observed = ambient_errors.unwrap_or(chart_errors);
    let slack = 1.0 + 1e-9;
    let bound_satisfied = if alpha == 1.0 {
        c < 1.0 && (start..end).all(|k| observed[k] <= slack * rho * c.powi(k as i32) / ell)
    } else {
        (0..observed.len()).all(|k| observed[k] <= slack * power_law_envelope(k, rho, c, alpha, ell))
    };
    Ok(RateFit { c_hat, rho_hat, tail_start: start, tail_len, bound_satisfied })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsConfig {
    /// Stability constant C used in the threshold; estimated when unset.
    pub stability: Option<f64>,
    /// `L_{F,K}`; analytic for integration on intervals, estimated otherwise.
    pub lipschitz: Option<f64>,
    /// Basin radius ρ in chart units; calibrated when unset.
    pub basin_radius: Option<f64>,
    /// Landweber step μ; `1/σ_max²` at the initial guess when unset.
    pub step: Option<f64>,
    pub safety_factor: f64,
    pub stability_pairs: usize,
    pub calibration_trials: usize,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        ConstantsConfig {
            stability: None,
            lipschitz: None,
            basin_radius: None,
            step: None,
            safety_factor: 2.0,
            stability_pairs: 10_000,
            calibration_trials: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iters: usize,
    pub divergence_factor: f64,
    pub selection: SelectionMode,
    pub lattice_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let stop = StopRule::default();
        SolverConfig {
            tolerance: stop.tolerance,
            max_iters: stop.max_iters,
            divergence_factor: stop.divergence_factor,
            selection: SelectionMode::FirstHit,
            lattice_cap: DEFAULT_LATTICE_CAP,
        }
    }
}

impl SolverConfig {
    pub fn stop(&self) -> StopRule {
        StopRule { tolerance: self.tolerance, max_iters: self.max_iters, divergence_factor: self.divergence_factor }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructConfig {
    pub family: FamilySpec,
    pub op: ForwardOp,
    pub bandwidth: usize,
    #[serde(default)]
    pub constants: ConstantsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Analytic,
    Configured,
    /// Sampled estimate, multiplied by the safety factor where it enters.
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Sampled `Ĉ` for F with Y = L².
    pub c_f: Option<f64>,
    /// Sampled `Ĉ` for `Q_N F` in the Parseval norm.
    pub c_qf: Option<f64>,
    /// The C entering the threshold.
    pub c: f64,
    pub c_source: Source,
    pub l_fk: f64,
    pub l_fk_source: Source,
    pub q_norm: f64,
    pub rho: f64,
    pub rho_source: Source,
    pub ell: f64,
    pub ell_holder: f64,
    pub alpha: f64,
    pub delta_km: f64,
    pub threshold: f64,
    pub radius: f64,
}

/// Constants from overrides, closed forms or sampling, in that order of preference.
pub fn acquire_constants(cfg: &ReconstructConfig, family: &ManifoldFamily) -> Result<Constants> {
    let cc = &cfg.constants;
    positive("safety factor", cc.safety_factor)?;
    let hd = family.holder_data();
    let opts = |y_norm| StabilityOptions {
        pairs: cc.stability_pairs,
        seed: cfg.seed,
        alpha: Some(hd.alpha),
        y_norm,
        near: Default::default(),
    };
    let needs_sampling = cc.stability.is_none() || (cc.lipschitz.is_none() && !analytic_lipschitz(cfg));
    let (c_f, c_qf, l_hat) = if needs_sampling {
        let f = empirical_stability(family, cfg.op, &opts(YNorm::Lp { q: 2.0 }))?.0;
        let q = projected_stability(family, cfg.op, cfg.bandwidth, &opts(YNorm::Parseval))?.0;
        if !q.is_stable() {
            return Err(Error::Unstable(format!("sampled constant for the projected map is {}", q.c_hat)));
        }
        (Some(f.c_hat), Some(q.c_hat), Some(q.lipschitz_hat))
    } else {
        (None, None, None)
    };
    let (c, c_source) = match cc.stability {
        Some(c) => (positive("C", c)?, Source::Configured),
        None => (cc.safety_factor * c_f.unwrap().max(c_qf.unwrap()), Source::Empirical),
    };
    let (l_fk, l_fk_source) = match cc.lipschitz {
        Some(l) => (positive("L_FK", l)?, Source::Configured),
        None if analytic_lipschitz(cfg) => (1.0, Source::Analytic),
        None => (cc.safety_factor * l_hat.unwrap(), Source::Empirical),
    };
    let (rho, rho_source) = match cc.basin_radius {
        Some(r) => (positive("ρ", r)?, Source::Configured),
        None => {
            let model = ForwardModel::new(cfg.op, family, cfg.bandwidth);
            (calibrate_basin(&model, &DEFAULT_BASIN_RADII, cc.calibration_trials, cfg.seed, cfg.solver.stop())?, Source::Empirical)
        }
    };
    let q_norm = qn_operator_norm_bound();
    let delta_km = family.delta_km();
    let threshold = initial_threshold(rho, hd.ell, delta_km, hd.alpha, c)?;
    let radius = lattice_radius(l_fk, q_norm, rho, hd.ell, delta_km, hd.alpha, c)?;
    Ok(Constants {
        c_f,
        c_qf,
        c,
        c_source,
        l_fk,
        l_fk_source,
        q_norm,
        rho,
        rho_source,
        ell: hd.ell,
        ell_holder: hd.ell_holder,
        alpha: hd.alpha,
        delta_km,
        threshold,
        radius,
    })
}

/// `‖F u‖_{L²} <= ‖F u‖_∞ <= ‖u‖_{L¹}` for the integration operator.
fn analytic_lipschitz(cfg: &ReconstructConfig) -> bool {
    matches!((cfg.op, &cfg.family), (ForwardOp::Integration, FamilySpec::Intervals { .. }))
}

/// Chart radii tried by the basin calibration, largest first.
pub const DEFAULT_BASIN_RADII: [f64; 8] = [0.5, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005];

/// Largest radius in `radii` from which Landweber converged in every trial:
/// truths spread over K, starts at that chart distance in random directions.
pub fn calibrate_basin(model: &ForwardModel<'_>, radii: &[f64], trials: usize, seed: u64, stop: StopRule) -> Result<f64> {
    if trials == 0 || radii.is_empty() {
        return Err(invalid("basin calibration needs trials and radii"));
    }
    let truths = model.family.sample_compact(trials, seed ^ 0xba51)?;
    let stop = StopRule { max_iters: stop.max_iters.min(20_000), ..stop };
    let mut sorted = radii.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    for &radius in &sorted {
        let ok = truths.iter().enumerate().all(|(i, t)| {
            let mut rng = stream_rng(seed ^ 0xba51, i as u64);
            let u = unit_vector(&mut rng, t.coords.len());
            let mut h0: Vec<f64> = t.coords.iter().zip(&u).map(|(x, d)| x + radius * d).collect();
            if !model.in_chart(&h0) {
                h0 = model.project(&h0);
            }
            converges(model, &h0, &t.coords, stop)
        });
        if ok {
            return Ok(radius);
        }
    }
    Err(Error::Degenerate("Landweber did not converge from any tested radius".into()))
}

fn converges(model: &ForwardModel<'_>, h0: &[f64], truth: &[f64], stop: StopRule) -> bool {
    let run = || -> Result<bool> {
        let data = model.measure(truth)?;
        let step = spectral_step(model, h0)?;
        let traj = landweber(model, h0, &data, step, stop, None)?;
        Ok(traj.termination == Termination::Converged && euclid(traj.final_point(), truth) <= 1e-6)
    };
    run().unwrap_or(false)
}

/// Data for the online phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum DataSource {
    /// Measurements synthesized from a known truth, optionally with noise.
    Synthetic {
        truth: Vec<f64>,
        #[serde(default)]
        noise: f64,
    },
    Blind { measurement: Measurement },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub family: FamilySpec,
    pub op: ForwardOp,
    pub bandwidth: usize,
    pub seed: u64,
    pub constants: Constants,
    pub lattice_points: usize,
    pub selection_mode: SelectionMode,
    pub selected_index: usize,
    pub x0: Vec<f64>,
    pub x0_residual: f64,
    /// `‖x0 − x†‖_X` and the bound `min{ρℓ, δ}` it should respect.
    pub x0_ambient_error: Option<f64>,
    pub x0_bound: f64,
    /// Centre of the simplex chart used by Landweber.
    pub chart_centre: Option<Vec<f64>>,
    pub step: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub final_point: Vec<f64>,
    pub final_residual: f64,
    pub final_chart_error: Option<f64>,
    pub final_ambient_error: Option<f64>,
    pub projections: usize,
    pub rate: Option<RateFit>,
    /// Forward evaluations during the online phase.
    pub online_measurements: usize,
}

/// Constants, family and offline table, ready to solve any number of instances.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: ReconstructConfig,
    pub family: ManifoldFamily,
    pub constants: Constants,
    pub table: LatticeTable,
}

impl Pipeline {
    /// Acquires the constants and builds the offline table.
    pub fn prepare(config: ReconstructConfig) -> Result<Pipeline> {
        let family = ManifoldFamily::new(config.family.clone())?;
        let constants = acquire_constants(&config, &family)?;
        let model = ForwardModel::new(config.op, &family, config.bandwidth);
        let table = build_lattice(
            &model,
            constants.radius,
            LatticeOptions { cap: config.solver.lattice_cap, seed: config.seed },
        )?;
        Ok(Pipeline { config, family, constants, table })
    }

    /// Reuses previously computed constants and table.
    pub fn with_table(config: ReconstructConfig, constants: Constants, table: LatticeTable) -> Result<Pipeline> {
        if table.family != config.family || table.op != config.op || table.bandwidth != config.bandwidth {
            return Err(invalid("lattice table was built for a different family, operator or bandwidth"));
        }
        let family = ManifoldFamily::new(config.family.clone())?;
        Ok(Pipeline { config, family, constants, table })
    }

    pub fn solve(&self, data: &DataSource) -> Result<(ReconstructionReport, LandweberTrajectory)> {
        let cfg = &self.config;
        let base = ForwardModel::new(cfg.op, &self.family, cfg.bandwidth);
        let (measurement, truth) = match data {
            DataSource::Synthetic { truth, noise } => {
                if !self.family.in_chart(truth) {
                    return Err(Error::OutsideDomain(format!("truth {truth:?} is outside the chart image")));
                }
                let m = base.measure(truth)?;
                let m = if *noise > 0.0 { m.with_noise(*noise, cfg.seed)? } else { m };
                (m, Some(truth.clone()))
            }
            DataSource::Blind { measurement } => (measurement.clone(), None),
        };
        let c = &self.constants;
        let sel = self.table.select_initial(&measurement, c.threshold, cfg.solver.selection)?;
        let x0_ambient_error = truth.as_ref().map(|t| self.family.distance(&sel.point, t)).transpose()?;

        // Simplexes: Landweber runs in the chart centred at the initial guess.
        let (model, chart_centre) = match self.family.tag() {
            FamilyTag::Simplices => {
                let n = self.family.simplex_chart().unwrap().dim();
                let t0 = SimplexParams::new(sel.point.chunks(n).map(|v| v.to_vec()).collect())?;
                let chart = SimplexChart::new(&t0);
                let centre = chart.centre_coords();
                (ForwardModel::new(cfg.op, &self.family, cfg.bandwidth).with_chart(chart), Some(centre))
            }
            _ => (ForwardModel::new(cfg.op, &self.family, cfg.bandwidth), None),
        };
        let h0 = match model.chart() {
            Some(chart) if chart_centre.is_some() => chart.transition(&sel.point).ok_or_else(|| {
                Error::OutsideDomain("initial guess is not covered by its own chart".into())
            })?,
            _ => sel.point.clone(),
        };
        let truth_h = match (&truth, model.chart()) {
            (Some(t), Some(chart)) if chart_centre.is_some() => Some(chart.transition(t).unwrap_or_else(|| t.clone())),
            (t, _) => t.clone(),
        };
        let step = match cfg.constants.step {
            Some(mu) => positive("step", mu)?,
            None => spectral_step(&model, &h0)?,
        };
        let traj = landweber(&model, &h0, &measurement, step, cfg.solver.stop(), truth_h.as_deref())?;
        let rate = match (&traj.chart_errors, traj.termination) {
            (Some(errs), Termination::Converged) => {
                rate_fit(errs, traj.ambient_errors.as_deref(), c.alpha, c.ell, None).ok()
            }
            _ => None,
        };
        let final_point = match (self.family.simplex_chart(), &chart_centre) {
            (Some(reference), Some(_)) => {
                reference.transition(traj.final_point()).unwrap_or_else(|| traj.final_point().to_vec())
            }
            _ => traj.final_point().to_vec(),
        };
        let report = ReconstructionReport {
            family: cfg.family.clone(),
            op: cfg.op,
            bandwidth: cfg.bandwidth,
            seed: cfg.seed,
            constants: c.clone(),
            lattice_points: self.table.len(),
            selection_mode: cfg.solver.selection,
            selected_index: sel.index,
            x0: sel.point,
            x0_residual: sel.residual,
            x0_ambient_error,
            x0_bound: (c.rho * c.ell).min(c.delta_km),
            chart_centre,
            step,
            iterations: traj.iterations(),
            termination: traj.termination,
            final_point,
            final_residual: traj.final_residual(),
            final_chart_error: traj.chart_errors.as_ref().map(|e| *e.last().unwrap()),
            final_ambient_error: traj.ambient_errors.as_ref().map(|e| *e.last().unwrap()),
            projections: traj.projections.len(),
            rate,
            online_measurements: model.measure_calls(),
        };
        Ok((report, traj))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_formula() {
        let r = lattice_radius(1.0, 1.0, 2.0, 0.1, 0.5, 1.0, 1.0).unwrap();
        assert!((r - 0.1).abs() < 1e-15);
        let r2 = lattice_radius(1.0, 1.0, 2.0, 0.1, 0.5, 1.0, 2.0).unwrap();
        assert!((r2 - 0.05).abs() < 1e-15);
        assert!(lattice_radius(1.0, 1.0, 2.0, 0.1, 0.5, 0.5, 1.0).is_err());
        assert!(lattice_radius(0.0, 1.0, 2.0, 0.1, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn geometric_fit_is_exact() {
        let errs: Vec<f64> = (0..40).map(|k| 0.3 * 0.5f64.powi(k)).collect();
        let fit = rate_fit(&errs, None, 1.0, 0.1, None).unwrap();
        assert!((fit.c_hat - 0.5).abs() < 1e-12);
        assert!(fit.bound_satisfied);
        assert!(rate_fit(&[1.0, 2.0, 3.0], None, 1.0, 0.1, None).is_err());
    }
}
