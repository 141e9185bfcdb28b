use std::path::Path;
use std::process::{Command, Output as ProcOutput};
use std::time::Instant;

use probe_cli::commands::{self, Output, RunOptions};
use probe_cli::config::RunConfig;
use probe_cli::dataset::{Cell, Dataset};

const PI: &str = "3.141592653589793";

fn square(zeeman: f64) -> String {
    format!(
        r#"schema = 1
[model]
lattice = "square"
exchange = 1.0
anisotropy = 0.01
spin = 0.5
zeeman = {zeeman:?}
[sweep]
compare_zero_field = true
path = [
  {{ start = [0.0, 0.0, 0.0], end = [{PI}, 0.0, 0.0], count = 30 }},
  {{ start = [{PI}, 0.0, 0.0], end = [{PI}, {PI}, 0.0], count = 30 }},
  {{ start = [{PI}, {PI}, 0.0], end = [0.0, 0.0, 0.0], count = 30 }},
]
"#
    )
}

const RABI: &str = r#"schema = 1
[model]
lattice = "cubic"
exchange = 1.0
anisotropy = 0.01
spin = 0.5
field_tesla = 1.0
[cavity]
a0 = 0.05
omega_c = 0.05
[transmon]
tune = "zero-detuning"
[sweep]
compare_zero_field = true
path = [{ start = [0.3, 0.0, 0.0], end = [0.3, 0.0, 3.0], count = 25 }]
"#;

fn opts(dir: &Path) -> RunOptions {
    RunOptions { out: Some(dir.to_owned()), workers: Some(1) }
}

fn num(ds: &Dataset, row: &[Cell], name: &str) -> f64 {
    match row[ds.column_index(name).unwrap_or_else(|| panic!("column {name}"))] {
        Cell::Num(v) => v,
        other => panic!("{name}: expected a number, got {other:?}"),
    }
}

fn flag(ds: &Dataset, row: &[Cell], name: &str) -> bool {
    match row[ds.column_index(name).unwrap()] {
        Cell::Flag(b) => b,
        other => panic!("{name}: expected a flag, got {other:?}"),
    }
}

fn run(f: impl Fn(&RunConfig, &RunOptions) -> Result<Output, commands::CommandError>, text: &str) -> Output {
    let dir = tempfile::tempdir().unwrap();
    f(&RunConfig::parse(text).unwrap(), &opts(dir.path())).unwrap()
}

fn probe(args: &[&str], config: Option<&str>) -> (ProcOutput, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_probe"));
    cmd.args(args).arg("--out").arg(dir.path().join("out"));
    if let Some(text) = config {
        let path = dir.path().join("run.toml");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    (cmd.output().unwrap(), dir)
}

fn body(csv: &str) -> String {
    csv.lines().filter(|l| !l.starts_with("# timestamp")).collect::<Vec<_>>().join("\n")
}

#[test]
fn unknown_key_is_a_config_error_with_location() {
    let (out, _d) = probe(&["dispersion"], Some(&square(0.1).replace("exchange", "exchang")));
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("exchang") && err.contains("line"), "{err}");
}

#[test]
fn empty_path_is_rejected() {
    let text = "schema = 1\n[model]\nlattice = \"square\"\nexchange = 1.0\nanisotropy = 0.01\nspin = 0.5\n";
    let (out, _d) = probe(&["dispersion"], Some(text));
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep.path"));
}

#[test]
fn missing_config_file_is_exit_one() {
    let out =
        Command::new(env!("CARGO_BIN_EXE_probe")).args(["rabi", "--config", "/nonexistent.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dispersion_splits_by_twice_the_zeeman_energy() {
    let z = 0.1;
    let out = run(commands::dispersion, &square(z));
    let ds = &out.dataset;
    assert_eq!(ds.rows().len(), 2 * 88);
    for row in ds.rows() {
        let split = num(ds, row, "omega_alpha") - num(ds, row, "omega_beta");
        let zeeman = num(ds, row, "zeeman");
        if zeeman == 0.0 {
            assert_eq!(split, 0.0);
        } else {
            assert!((split - 2.0 * z).abs() < 1e-12, "{split}");
        }
        assert!(flag(ds, row, "stable"));
    }
}

#[test]
fn outputs_are_deterministic_and_named_by_hash() {
    let text = square(0.05);
    let a = run(commands::dispersion, &text);
    let b = run(commands::dispersion, &text);
    assert_eq!(body(&a.dataset.to_csv()), body(&b.dataset.to_csv()));
    let names = |o: &Output| o.files.iter().map(|f| f.file_name().unwrap().to_owned()).collect::<Vec<_>>();
    assert_eq!(names(&a), names(&b));
    let c = run(commands::dispersion, &square(0.06));
    assert_ne!(names(&a), names(&c));
    let csv = a.dataset.to_csv();
    assert!(csv.starts_with("# schema: probe.dispersion/v1\n# config_hash: "));
}

#[test]
fn format_flag_limits_outputs() {
    let (out, d) = probe(&["dispersion", "--format", "json"], Some(&square(0.1)));
    assert!(out.status.success());
    let files: Vec<_> = std::fs::read_dir(d.path().join("out")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 1);
    assert_eq!(files[0].extension().unwrap(), "json");
    let j: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files[0]).unwrap()).unwrap();
    assert_eq!(j["rows"].as_array().unwrap().len(), 2 * 88);
}

#[test]
fn entanglement_against_r() {
    let text =
        "schema = 1\n[sweep]\nr_grid = { start = 0.0, stop = 1.5, count = 16 }\npairs = [[0, 0], [1, 0], [2, 2]]\n";
    let out = run(commands::entanglement, text);
    let ds = &out.dataset;
    let first = &ds.rows()[0];
    assert_eq!(num(ds, first, "r"), 0.0);
    assert_eq!(num(ds, first, "E_0_0"), 0.0);
    assert_eq!(num(ds, first, "epr_phipi"), 1.0);
    for col in ["E_0_0", "E_1_0", "E_2_2"] {
        let e: Vec<f64> = ds.rows().iter().map(|r| num(ds, r, col)).collect();
        assert!(e.windows(2).all(|w| w[1] > w[0]), "{col} not increasing: {e:?}");
    }
    for r in ds.rows() {
        assert!(num(ds, r, "epr_phipi") <= 1.0 && num(ds, r, "epr_phi0") >= 1.0);
        assert!(flag(ds, r, "ok"));
    }
}

#[test]
fn entanglement_against_epr_flags_nonlocal() {
    let text = "schema = 1\n[sweep]\nepr_grid = { start = 0.2, stop = 3.0, count = 15 }\npairs = [[0, 0]]\n";
    let out = run(commands::entanglement, text);
    let ds = &out.dataset;
    for r in ds.rows() {
        let epr = num(ds, r, "epr");
        assert_eq!(flag(ds, r, "nonlocal"), epr < 1.0, "Δ = {epr}");
    }
}

#[test]
fn entanglement_grid_choice_is_exclusive() {
    let text = "schema = 1\n[sweep]\nr_grid = { start = 0.0, stop = 1.0, count = 3 }\nepr_grid = { start = 0.5, stop = 1.0, count = 3 }\npairs = [[0, 0]]\n";
    let (out, _d) = probe(&["entanglement"], Some(text));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rabi_probes_coincide_without_field() {
    let out = run(commands::rabi, RABI);
    let ds = &out.dataset;
    let mut zero_field = 0;
    for row in ds.rows() {
        if num(ds, row, "zeeman") == 0.0 {
            zero_field += 1;
            assert_eq!(num(ds, row, "f_alpha"), num(ds, row, "f_beta"));
        } else {
            assert!((num(ds, row, "f_alpha") - num(ds, row, "f_beta")).abs() > 0.0);
        }
    }
    assert_eq!(zero_field, 25);
}

#[test]
fn invert_recovers_the_rabi_state() {
    let out = run(commands::rabi, RABI);
    let ds = &out.dataset;
    // the inversion config carries the field, so only rows at that field apply
    for row in ds.rows().iter().filter(|r| num(ds, r, "zeeman") != 0.0).step_by(4) {
        let k = [num(ds, row, "kx"), num(ds, row, "ky"), num(ds, row, "kz")];
        let f = num(ds, row, "f_alpha");
        let text = format!("{RABI}[invert]\nbranch = \"pi\"\nk = [{:?}, {:?}, {:?}]\n", k[0], k[1], k[2]);
        let inv = run(|c, o| commands::invert(c, o, Some(f)), &text);
        let got = &inv.dataset.rows()[0];
        let want_epr = num(ds, row, "epr");
        assert!(
            (num(&inv.dataset, got, "epr") - want_epr).abs() < 1e-10,
            "{} vs {want_epr}, omega_q {}",
            num(&inv.dataset, got, "epr"),
            num(&inv.dataset, got, "omega_q")
        );
        assert!((num(&inv.dataset, got, "r") - num(ds, row, "r")).abs() < 1e-8);
        assert!((num(&inv.dataset, got, "E_ground") - num(ds, row, "E_ground")).abs() < 1e-8);
    }
}

const INVERT: &str = "schema = 1\n[cavity]\na0 = 0.05\nomega_c = 0.05\n[transmon]\nomega_q = 3.0\n[invert]\nbranch = \"pi\"\nlambda = 0.8\n";

#[test]
fn invert_boundary_is_reported_local() {
    let f = 0.8f64 * 0.8 / (3.0 - 0.05);
    let out = run(|c, o| commands::invert(c, o, Some(f)), INVERT);
    assert!(
        out.dataset.provenance.notes.iter().any(|n| n == "verdict: local boundary"),
        "{:?}",
        out.dataset.provenance.notes
    );
    assert!(out.dataset.rows()[0].contains(&Cell::Flag(false)));
}

#[test]
fn invert_branch_mismatch_is_a_physics_error() {
    let (out, _d) = probe(&["invert", "--f", "0.5"], Some(INVERT));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("branch = \"zero\""));
    let (ok, _d) = probe(&["invert", "--f", "0.5"], Some(&INVERT.replace("\"pi\"", "\"zero\"")));
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("verdict: local"));
}

#[test]
fn quick_verify_is_fast_and_writes_a_report() {
    let start = Instant::now();
    let (out, d) = probe(&["verify", "--quick"], None);
    assert!(start.elapsed().as_secs_f64() < 10.0);
    // exit 0 when every check passes, 3 otherwise
    assert!(matches!(out.status.code(), Some(0 | 3)));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("out/verify-report.json")).unwrap()).unwrap();
    assert_eq!(report["quick"], true);
    let failed = report["failed"].as_u64().unwrap();
    assert_eq!(out.status.code() == Some(0), failed == 0);
    for c in report["checks"].as_array().unwrap() {
        for k in ["check_id", "comparator", "tolerance", "measured", "pass"] {
            assert!(c.get(k).is_some(), "{k} missing in {c}");
        }
    }
}
