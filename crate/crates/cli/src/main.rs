//! `chartrecon` command-line front end.
//!
//! Exit codes: 0 success, 1 run finished without the requested outcome
//! (grid exhausted, Landweber not converged, other runtime failure),
//! 2 invalid input, 3 unstable configuration, 4 no initial guess,
//! 5 Landweber divergence.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{Map, Value};

use chartrecon::config::{
    Command, CounterexampleConfig, DataConfig, ExperimentConfig, OutputFormat, ShapePair, StabilityConfig,
    SymmdiffConfig,
};
use chartrecon::geometry::{
    ball_symmdiff_exact, ball_symmdiff_montecarlo, bilip_certify, simplex_symmdiff, simplex_symmdiff_montecarlo,
    BallParams, SimplexParams,
};
use chartrecon::manifolds::ManifoldFamily;
use chartrecon::measurement::{format_f64, Measurement};
use chartrecon::reconstruct::{acquire_constants, DataSource, LatticeTable, Pipeline, Termination};
use chartrecon::stabilitylab::{
    counterexample_sin, counterexample_weight, deficit_scan, empirical_stability, projected_stability,
    sampled_threshold_inputs, StabilityOptions,
};
use chartrecon::Error;

#[derive(Parser, Debug)]
#[command(name = "chartrecon", version, about = "Stability and reconstruction experiments for manifold-constrained inverse problems")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "CHARTRECON_WORKERS")]
    workers: Option<usize>,
    /// Output directory; reports go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Symmetric difference of two balls or simplexes, exact and Monte Carlo.
    Symmdiff(SymmdiffArgs),
    /// Empirical stability constants and Hölder exponent.
    Stability,
    /// Smallest bandwidth whose projection deficit meets the threshold.
    FindN,
    /// Global reconstruction from synthetic or recorded data.
    Reconstruct,
    /// Builds and persists the offline lattice table.
    Table,
    /// Instability witnesses.
    Counterexample,
}

#[derive(Args, Debug)]
struct SymmdiffArgs {
    /// Ball as `c1,c2,...:r`; give exactly two.
    #[arg(long)]
    ball: Vec<String>,
    /// Simplex as `x1,y1;x2,y2;...`; give exactly two.
    #[arg(long)]
    simplex: Vec<String>,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    /// Parameter box for the certifier: `|a| <= a_max`.
    #[arg(long, default_value_t = 1.0)]
    a_max: f64,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 1.5)]
    r_max: f64,
}

/// Error paired with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParameter(_)
            | Error::Parse(_)
            | Error::Unsupported(_)
            | Error::DomainMismatch(_)
            | Error::OutsideDomain(_)
            | Error::NotInFamily(_)
            | Error::LatticeTooLarge { .. } => 2,
            Error::Unstable(_) => 3,
            Error::NoInitialGuess { .. } => 4,
            Error::Divergence { .. } => 5,
            Error::Degenerate(_) | Error::GridExhausted(_) | Error::Io(_) => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn invalid(message: impl Into<String>) -> Failure {
    fail(2, message)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = std::panic::catch_unwind(|| dispatch(&cli));
    match outcome {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(f)) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8, Failure> {
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.common.workers {
            if n == 0 {
                return Err(invalid("--workers must be at least 1"));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(|e| fail(1, e.to_string()))?
    };
    pool.install(|| {
        if let Verb::Symmdiff(args) = &cli.verb {
            if cli.common.config.is_none() {
                let out = Output::from_flags(&cli.common, None);
                return cmd_symmdiff(&symmdiff_from_flags(args)?, &out);
            }
        }
        let cfg = load_config(cli)?;
        let out = Output::from_flags(&cli.common, Some(&cfg));
        match cfg.command {
            Command::Symmdiff => cmd_symmdiff(cfg.symmdiff.as_ref().unwrap(), &out),
            Command::Stability => cmd_stability(&cfg, &out),
            Command::FindN => cmd_find_n(&cfg, &out),
            Command::Reconstruct => cmd_reconstruct(&cfg, &out),
            Command::Table => cmd_table(&cfg, &out),
            Command::Counterexample => cmd_counterexample(cfg.counterexample.as_ref().unwrap(), &out),
        }
    })
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let path = cli.common.config.as_ref().ok_or_else(|| invalid("--config is required for this command"))?;
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    let verb = match cli.verb {
        Verb::Symmdiff(_) => Command::Symmdiff,
        Verb::Stability => Command::Stability,
        Verb::FindN => Command::FindN,
        Verb::Reconstruct => Command::Reconstruct,
        Verb::Table => Command::Table,
        Verb::Counterexample => Command::Counterexample,
    };
    if cfg.command != verb {
        return Err(invalid(format!("config is for {:?}, not {verb:?}", cfg.command)));
    }
    if let Some(seed) = cli.common.seed {
        cfg.seed = seed;
    }
    // Paths inside the config are relative to the config file.
    let base = path.parent().unwrap_or(Path::new("."));
    if let Some(rec) = cfg.reconstruct.as_mut() {
        if let Some(t) = rec.table.as_mut() {
            *t = base.join(&*t);
        }
        if let DataConfig::Blind { measurement } = &mut rec.data {
            *measurement = base.join(&*measurement);
        }
    }
    Ok(cfg)
}

struct Output {
    dir: Option<PathBuf>,
    format: OutputFormat,
}

impl Output {
    fn from_flags(common: &Common, cfg: Option<&ExperimentConfig>) -> Output {
        let format = match common.format {
            Some(Format::Csv) => OutputFormat::Csv,
            Some(Format::Json) => OutputFormat::Json,
            None => cfg.map(|c| c.output.format).unwrap_or_default(),
        };
        let dir = common.out.clone().or_else(|| cfg.and_then(|c| c.output.dir.clone()));
        Output { dir, format }
    }

    /// Writes the main report: `<dir>/<name>.{csv,json}` or stdout.
    fn report<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<(), Failure> {
        let values: Vec<Value> =
            rows.iter().map(serde_json::to_value).collect::<Result<_, _>>().map_err(|e| fail(1, e.to_string()))?;
        let (text, ext) = match self.format {
            OutputFormat::Json => {
                let v = if values.len() == 1 { values[0].clone() } else { Value::Array(values) };
                (serde_json::to_string_pretty(&v).map_err(|e| fail(1, e.to_string()))? + "\n", "json")
            }
            OutputFormat::Csv => (csv_table(&values), "csv"),
        };
        match &self.dir {
            Some(_) => self.file(&format!("{name}.{ext}"), &text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    /// Writes an auxiliary file; skipped without an output directory.
    fn file(&self, name: &str, text: &str) -> Result<(), Failure> {
        if let Some(dir) = &self.dir {
            fs::create_dir_all(dir).map_err(Error::from)?;
            fs::write(dir.join(name), text).map_err(Error::from)?;
        }
        Ok(())
    }
}

/// One CSV line per row; columns are the union of flattened keys in sorted order.
fn csv_table(rows: &[Value]) -> String {
    let flat: Vec<Map<String, Value>> = rows
        .iter()
        .map(|r| {
            let mut m = Map::new();
            flatten("", r, &mut m);
            m
        })
        .collect();
    let mut keys: Vec<String> = flat.iter().flat_map(|m| m.keys().cloned()).collect();
    keys.sort();
    keys.dedup();
    let mut out = keys.join(",");
    out.push('\n');
    for m in &flat {
        let cells: Vec<String> = keys.iter().map(|k| m.get(k).map(cell).unwrap_or_default()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn flatten(prefix: &str, v: &Value, out: &mut Map<String, Value>) {
    match v {
        Value::Object(obj) => {
            for (k, x) in obj {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        _ => {
            let key = if prefix.is_empty() { "value".to_string() } else { prefix.to_string() };
            out.insert(key, v.clone());
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.to_string(),
            (_, Some(u)) => u.to_string(),
            _ => format_f64(n.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) => s.replace([',', '\n'], " "),
        Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(";"),
        Value::Object(_) => serde_json::to_string(v).unwrap_or_default().replace(',', ";"),
    }
}

fn parse_floats(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| invalid(format!("not a number: {x:?}"))))
        .collect()
}

fn symmdiff_from_flags(args: &SymmdiffArgs) -> Result<SymmdiffConfig, Failure> {
    let shapes = match (args.ball.len(), args.simplex.len()) {
        (2, 0) => {
            let mut centres = Vec::new();
            let mut radii = Vec::new();
            for b in &args.ball {
                let (c, r) = b.split_once(':').ok_or_else(|| invalid(format!("ball {b:?} is not `c1,c2,...:r`")))?;
                centres.push(parse_floats(c)?);
                radii.push(parse_floats(r)?.first().copied().unwrap_or(f64::NAN));
            }
            ShapePair::Balls {
                centres: [centres[0].clone(), centres[1].clone()],
                radii: [radii[0], radii[1]],
                a_max: args.a_max,
                rho: args.rho,
                r_max: args.r_max,
            }
        }
        (0, 2) => {
            let parse = |s: &String| s.split(';').map(parse_floats).collect::<Result<Vec<_>, _>>();
            ShapePair::Simplices { first: parse(&args.simplex[0])?, second: parse(&args.simplex[1])? }
        }
        _ => return Err(invalid("give either two --ball or two --simplex arguments, or --config")),
    };
    Ok(SymmdiffConfig { shapes, samples: args.samples })
}

#[derive(Serialize)]
struct SymmdiffRow {
    shape: &'static str,
    exact: f64,
    monte_carlo: f64,
    stderr: f64,
    samples: u64,
    certificate: Option<chartrecon::geometry::BoundReport>,
}

fn cmd_symmdiff(cfg: &SymmdiffConfig, out: &Output) -> Result<u8, Failure> {
    let row = match &cfg.shapes {
        ShapePair::Balls { centres, radii, a_max, rho, r_max } => {
            let b1 = BallParams::new(centres[0].clone(), radii[0])?;
            let b2 = BallParams::new(centres[1].clone(), radii[1])?;
            let mc = ball_symmdiff_montecarlo(&b1, &b2, cfg.samples, 0)?;
            SymmdiffRow {
                shape: "balls",
                exact: ball_symmdiff_exact(&b1, &b2)?,
                monte_carlo: mc.estimate,
                stderr: mc.stderr,
                samples: mc.samples,
                certificate: Some(bilip_certify(&b1, &b2, *a_max, *rho, *r_max)?),
            }
        }
        ShapePair::Simplices { first, second } => {
            let s1 = SimplexParams::new(first.clone())?;
            let s2 = SimplexParams::new(second.clone())?;
            let mc = simplex_symmdiff_montecarlo(&s1, &s2, cfg.samples, 0)?;
            SymmdiffRow {
                shape: "simplices",
                exact: simplex_symmdiff(&s1, &s2)?,
                monte_carlo: mc.estimate,
                stderr: mc.stderr,
                samples: mc.samples,
                certificate: None,
            }
        }
    };
    out.report("symmdiff", &[row])?;
    Ok(0)
}

fn family_of(cfg: &ExperimentConfig) -> Result<ManifoldFamily, Failure> {
    Ok(ManifoldFamily::new(cfg.family.clone().ok_or_else(|| invalid("missing [family]"))?)?)
}

fn cmd_stability(cfg: &ExperimentConfig, out: &Output) -> Result<u8, Failure> {
    let family = family_of(cfg)?;
    let op = cfg.op.unwrap();
    let sc = cfg.stability.unwrap_or_else(StabilityConfig::default);
    let opts = |y_norm| StabilityOptions { pairs: sc.pairs, seed: cfg.seed, alpha: sc.alpha, y_norm, near: sc.near() };
    let mut reports = vec![empirical_stability(&family, op, &opts(sc.y_norm))?.0];
    if let Some(n) = cfg.bandwidth {
        reports.push(projected_stability(&family, op, n, &opts(sc.projected_norm))?.0);
    }
    out.report("stability", &reports)?;
    if let Some(r) = reports.iter().find(|r| !r.is_stable()) {
        return Err(fail(3, format!("sampled stability constant {} flags an unstable configuration", r.c_hat)));
    }
    Ok(0)
}

#[derive(Serialize)]
struct DeficitRow {
    bandwidth: usize,
    deficit: f64,
    threshold: f64,
    stability: f64,
    delta: f64,
    meets_threshold: bool,
}

fn cmd_find_n(cfg: &ExperimentConfig, out: &Output) -> Result<u8, Failure> {
    let family = family_of(cfg)?;
    let op = cfg.op.unwrap();
    let fc = cfg.find_n.clone().unwrap_or_default();
    let (c, delta) = match (fc.stability, fc.delta) {
        (Some(c), Some(d)) => (c, d),
        (c, d) => {
            let (c_hat, diam) = sampled_threshold_inputs(&family, op, fc.stability_pairs, cfg.seed)?;
            (c.unwrap_or(c_hat), d.unwrap_or(diam))
        }
    };
    let scan = deficit_scan(&family, op, c, delta, &fc.grid, fc.samples, cfg.seed)?;
    let rows: Vec<DeficitRow> = scan
        .curve
        .iter()
        .map(|&(n, d)| DeficitRow {
            bandwidth: n,
            deficit: d,
            threshold: scan.threshold,
            stability: c,
            delta,
            meets_threshold: d <= scan.threshold,
        })
        .collect();
    out.report("find_n", &rows)?;
    match scan.n_star {
        Some(n) => {
            eprintln!("sufficient bandwidth: N = {n}");
            Ok(0)
        }
        None => Err(fail(1, format!("no bandwidth in the grid meets the threshold {:e}", scan.threshold))),
    }
}

fn cmd_table(cfg: &ExperimentConfig, out: &Output) -> Result<u8, Failure> {
    let pipeline = Pipeline::prepare(cfg.reconstruct_config()?)?;
    let mut bytes = Vec::new();
    pipeline.table.write_to(&mut bytes)?;
    match &out.dir {
        Some(_) => {
            out.file("table.csv", &String::from_utf8_lossy(&bytes))?;
            out.report("constants", &[&pipeline.constants])?;
        }
        None => print!("{}", String::from_utf8_lossy(&bytes)),
    }
    Ok(0)
}

fn read_measurement(path: &Path) -> Result<Measurement, Failure> {
    let text = fs::read_to_string(path).map_err(Error::from)?;
    let row = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .ok_or_else(|| invalid(format!("{} holds no measurement", path.display())))?;
    Ok(Measurement::from_csv_row(row)?)
}

fn cmd_reconstruct(cfg: &ExperimentConfig, out: &Output) -> Result<u8, Failure> {
    let rc = cfg.reconstruct_config()?;
    let section = cfg.reconstruct.as_ref().unwrap();
    let pipeline = match &section.table {
        None => Pipeline::prepare(rc)?,
        Some(path) => {
            let file = fs::File::open(path).map_err(Error::from)?;
            let table = LatticeTable::read_from(std::io::BufReader::new(file))?;
            let family = ManifoldFamily::new(rc.family.clone())?;
            let constants = acquire_constants(&rc, &family)?;
            if table.radius.to_bits() != constants.radius.to_bits() {
                return Err(invalid(format!(
                    "table radius {} does not match the configured constants (radius {})",
                    table.radius, constants.radius
                )));
            }
            Pipeline::with_table(rc, constants, table)?
        }
    };
    let data = match &section.data {
        DataConfig::Synthetic { truth, noise } => DataSource::Synthetic { truth: truth.clone(), noise: *noise },
        DataConfig::Blind { measurement } => DataSource::Blind { measurement: read_measurement(measurement)? },
    };
    let (report, traj) = pipeline.solve(&data)?;
    if let DataSource::Synthetic { truth, noise } = &data {
        let model = chartrecon::reconstruct::ForwardModel::new(cfg.op.unwrap(), &pipeline.family, pipeline.config.bandwidth);
        let m = chartrecon::reconstruct::MeasuredMap::measure(&model, truth)?;
        let m = if *noise > 0.0 { m.with_noise(*noise, cfg.seed)? } else { m };
        out.file("measurement.csv", &(m.to_csv_row() + "\n"))?;
    }
    if section.trajectory {
        out.file("trajectory.csv", &traj.to_csv())?;
    }
    out.report("reconstruction", &[&report])?;
    match report.termination {
        Termination::Converged => Ok(0),
        Termination::MaxIterations => Err(fail(1, "Landweber stopped at the iteration cap without converging")),
    }
}

#[derive(Serialize)]
struct SinRow {
    k: u64,
    derivative: f64,
    expected: f64,
}

fn cmd_counterexample(cfg: &CounterexampleConfig, out: &Output) -> Result<u8, Failure> {
    match cfg {
        CounterexampleConfig::Sin { k_max } => {
            if *k_max == 0 {
                return Err(invalid("k_max must be at least 1"));
            }
            let ks: Vec<u64> = (1..=*k_max).collect();
            let values = counterexample_sin(&ks)?;
            let rows: Vec<SinRow> = ks
                .iter()
                .zip(values)
                .map(|(&k, v)| SinRow { k, derivative: v, expected: 1.0 / (k as f64 * std::f64::consts::PI) })
                .collect();
            out.report("counterexample", &rows)?;
        }
        CounterexampleConfig::Weight { ts, alphas } => {
            let mut rows = Vec::new();
            for &alpha in alphas {
                rows.extend(counterexample_weight(ts, alpha)?);
            }
            out.report("counterexample", &rows)?;
        }
    }
    Ok(0)
}
