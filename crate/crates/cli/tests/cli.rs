use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chartrecon::config::ExperimentConfig;
use chartrecon::reconstruct::LatticeTable;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_chartrecon"));
    c.env_remove("CHARTRECON_WORKERS");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const INTERVALS: &str = r#"
seed = 7
bandwidth = 16

[family]
kind = "intervals"
epsilon = 0.1

[op]
kind = "integration"
"#;

#[test]
fn stability_reports_are_byte_identical_and_worker_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("stability_intervals.toml");
    let mut outputs = Vec::new();
    for (i, workers) in ["1", "4", "4"].iter().enumerate() {
        let out_dir = dir.path().join(format!("run{i}"));
        let o = run(&["stability", "--config", path(&cfg), "--workers", workers, "--out", path(&out_dir)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(fs::read(out_dir.join("stability.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn table_round_trips_bit_exactly_and_ignores_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("table_intervals.toml");
    let (one, eight) = (dir.path().join("w1"), dir.path().join("w8"));
    for (workers, out) in [("1", &one), ("8", &eight)] {
        let o = run(&["table", "--config", path(&cfg), "--workers", workers, "--out", path(out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let bytes = fs::read(one.join("table.csv")).unwrap();
    assert_eq!(bytes, fs::read(eight.join("table.csv")).unwrap());

    let table = LatticeTable::read_from(bytes.as_slice()).unwrap();
    let mut again = Vec::new();
    table.write_to(&mut again).unwrap();
    assert_eq!(bytes, again);
}

#[test]
fn blind_mode_matches_synthetic_mode() {
    let dir = tempfile::tempdir().unwrap();
    let synth = dir.path().join("synth");
    let o = run(&[
        "reconstruct",
        "--config",
        path(&configs().join("reconstruct_intervals.toml")),
        "--out",
        path(&synth),
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["table", "--config", path(&configs().join("table_intervals.toml")), "--out", path(&dir.path().join("tab"))]);
    assert_eq!(code(&o), 0);

    let blind_cfg = dir.path().join("blind.toml");
    let text = format!(
        "command = \"reconstruct\"\n{INTERVALS}\n[reconstruct]\ntable = \"tab/table.csv\"\n\n[reconstruct.data]\nmode = \"blind\"\nmeasurement = \"synth/measurement.csv\"\n"
    );
    fs::write(&blind_cfg, text).unwrap();
    let o = run(&["reconstruct", "--config", path(&blind_cfg), "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let read = |bytes: &[u8]| -> serde_json::Value { serde_json::from_slice(bytes).unwrap() };
    let a = read(&fs::read(synth.join("reconstruction.json")).unwrap());
    let b = read(&o.stdout);
    let point = |v: &serde_json::Value| -> Vec<f64> {
        v["final_point"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
    };
    for (x, y) in point(&a).iter().zip(point(&b)) {
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }
    assert!((point(&a)[0] - 0.33).abs() < 1e-6 && (point(&a)[1] - 0.71).abs() < 1e-6);
    assert!(b["final_ambient_error"].is_null());

    let traj = fs::read_to_string(synth.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("k,h0,h1,residual,chart_error,ambient_error\n"));
}

#[test]
fn reconstruct_report_is_deterministic() {
    let cfg = configs().join("reconstruct_intervals.toml");
    let a = run(&["reconstruct", "--config", path(&cfg), "--workers", "1"]);
    let b = run(&["reconstruct", "--config", path(&cfg), "--workers", "3"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn shipped_configs_round_trip() {
    let mut seen = 0;
    for entry in fs::read_dir(configs()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().map_or(true, |e| e != "toml") {
            continue;
        }
        let cfg = ExperimentConfig::load(&p).unwrap();
        let emitted = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&emitted).unwrap(), cfg, "{}", p.display());
        seen += 1;
    }
    assert!(seen >= 5);
}

#[test]
fn exit_codes_follow_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    };

    let unknown = write("unknown.toml", &format!("command = \"table\"\ncolour = 1\n{INTERVALS}"));
    assert_eq!(code(&run(&["table", "--config", path(&unknown)])), 2);
    assert_eq!(code(&run(&["table", "--config", "/no/such/file.toml"])), 2);
    assert_eq!(code(&run(&["stability"])), 2);
    let wrong_verb = configs().join("table_intervals.toml");
    assert_eq!(code(&run(&["stability", "--config", path(&wrong_verb)])), 2);

    // All-zero data is far from every model point.
    write("zeros.csv", &format!("16,1{}\n", ",0".repeat(33)));
    let blind = write(
        "blind.toml",
        &format!("command = \"reconstruct\"\n{INTERVALS}\n[reconstruct.data]\nmode = \"blind\"\nmeasurement = \"zeros.csv\"\n"),
    );
    assert_eq!(code(&run(&["reconstruct", "--config", path(&blind)])), 4);

    // Starting next to a lattice point with a huge step overshoots at once.
    let diverge = write(
        "diverge.toml",
        &format!(
            "command = \"reconstruct\"\n{INTERVALS}\n[constants]\nstep = 1e4\nbasin_radius = 0.5\n\n[reconstruct.data]\nmode = \"synthetic\"\ntruth = [0.1007557, 0.3007557]\n"
        ),
    );
    assert_eq!(code(&run(&["reconstruct", "--config", path(&diverge)])), 5);
}

#[test]
fn malformed_input_never_panics() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "",
        "command = 3",
        "command = \"reconstruct\"\nbandwidth = -1",
        "command = \"reconstruct\"\nbandwidth = 4\n[family]\nkind = \"intervals\"\nepsilon = 0.9\n[op]\nkind = \"integration\"\n[reconstruct.data]\nmode = \"synthetic\"\ntruth = [0.5]",
        "command = \"symmdiff\"\n[symmdiff.shapes]\nkind = \"simplices\"\nfirst = [[0.0, 0.0], [1.0, 0.0]]\nsecond = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]",
        "command = \"counterexample\"\n[counterexample]\nkind = \"weight\"\nts = [2.0]\nalphas = [0.5]",
        "command = \"find-n\"\n[family]\nkind = \"balls\"\ndim = 2\np = 2.0\na_max = 1.0\nrho = 0.5\nr_max = 1.5\n[op]\nkind = \"integration\"",
    ];
    for (i, text) in cases.iter().enumerate() {
        let p = dir.path().join(format!("bad{i}.toml"));
        fs::write(&p, text).unwrap();
        let verb = text
            .lines()
            .next()
            .and_then(|l| l.split('"').nth(1))
            .unwrap_or("reconstruct");
        let o = run(&[verb, "--config", path(&p)]);
        let stderr = String::from_utf8_lossy(&o.stderr);
        assert!(matches!(code(&o), 1 | 2), "case {i}: {stderr}");
        assert!(!stderr.contains("panicked"), "case {i}: {stderr}");
    }
    assert_eq!(code(&run(&["symmdiff", "--ball", "0,0:1"])), 2);
    assert_eq!(code(&run(&["symmdiff", "--ball", "0,x:1", "--ball", "0,0:1"])), 2);
}

#[test]
fn symmdiff_flags_give_exact_and_monte_carlo() {
    let o = run(&["symmdiff", "--ball", "0,0:1", "--ball", "3,0:1", "--samples", "200000", "--a-max", "3", "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let exact = v["exact"].as_f64().unwrap();
    assert!((exact - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    let (mc, se) = (v["monte_carlo"].as_f64().unwrap(), v["stderr"].as_f64().unwrap());
    assert!((mc - exact).abs() < 4.0 * se);
    assert_eq!(v["certificate"]["case"], "disjoint");
}

#[test]
fn counterexample_tables() {
    let o = run(&["counterexample", "--config", path(&configs().join("counterexample_sin.toml"))]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("derivative,expected,k"));
    assert_eq!(text.lines().count(), 1001);
}
