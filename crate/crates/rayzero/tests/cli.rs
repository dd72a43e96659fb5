use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rayzero::bundled::{sha256_hex, CESIUM, LITHIUM};
use rayzero::csv_io::{read_spectrum_csv, read_zeros_csv};
use rayzero::ProblemFile;
use rayzero_core::inversion::forward_zeros;
use rayzero_core::{evaluate_point, zero_below_pole, GuardPolicy, SolverConfig};

fn rayzero(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rayzero"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn version_lists_dataset_hashes() {
    let o = rayzero(&["--version"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("rayzero "));
    assert!(text.contains(&format!("li sha256:{}", sha256_hex(LITHIUM.as_bytes()))));
    assert!(text.contains(&format!("cs sha256:{}", sha256_hex(CESIUM.as_bytes()))));
}

#[test]
fn missing_dataset_is_an_input_error() {
    let o = rayzero(&["zeros", "--dataset", "/nonexistent/levels.dat", "--n", "3"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("dataset not found"), "{}", stderr(&o));
}

#[test]
fn corrupted_dataset_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.dat");
    std::fs::write(&path, "species=X energy_unit=cm-1 value=f\n2 1 1 100.0 0.5 0.01\n3 1 3 twenty 0.1 0.01\n")
        .unwrap();
    let o = rayzero(&["zeros", "--dataset", path.to_str().unwrap(), "--n", "3"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn unknown_flags_and_zero_threads_are_rejected() {
    assert_eq!(code(&rayzero(&["zeros", "--bogus"])), 2);
    assert_eq!(code(&rayzero(&["--threads", "0", "polarizability", "--dataset", "@li"])), 2);
    assert_eq!(code(&rayzero(&[])), 2);
}

fn write_problem(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("problem.toml");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn under_constrained_problem_is_a_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_problem(
        dir.path(),
        r#"dataset = "@cs"
unknowns = ["7p1/2", "7p3/2"]
fiducials = ["6p"]

[[measurement]]
lower = "6p3/2"
upper = "7p1/2"
omega_zero = 21727.7
sigma = 0.01
"#,
    );
    let o = rayzero(&["invert", "--problem", path.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn zero_sigma_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_problem(
        dir.path(),
        r#"dataset = "@cs"
unknowns = ["7p"]
fiducials = ["6p"]

[[measurement]]
lower = "6p3/2"
upper = "7p1/2"
omega_zero = 21727.7
sigma = 0.0
"#,
    );
    let o = rayzero(&["invert", "--problem", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn empty_range_warns_but_succeeds() {
    let o = rayzero(&["zeros", "--dataset", "@li", "--from", "15000", "--to", "20000"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("warning: no zeros"), "{}", stderr(&o));
    assert_eq!(read_zeros_csv(&stdout(&o)).unwrap().len(), 0);
}

#[test]
fn two_point_grid() {
    let o = rayzero(&["spectrum", "--dataset", "@li", "--from", "20000", "--to", "21000", "--points", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let points = read_spectrum_csv(&stdout(&o)).unwrap();
    assert_eq!(points.len(), 2);
    assert_eq!(points[0].omega, 20000.0);
    assert_eq!(points[1].omega, 21000.0);
    assert_eq!(code(&rayzero(&["spectrum", "--dataset", "@li", "--from", "2e4", "--to", "3e4", "--points", "1"])), 2);
}

#[test]
fn spectrum_csv_round_trips_bitwise() {
    let o = rayzero(&[
        "spectrum", "--dataset", "@cs", "--alpha-ref", "400.9", "--alpha-unc", "0.3", "--rel-to", "7p3/2",
        "--from", "-300", "--to", "100", "--points", "97",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let points = read_spectrum_csv(&stdout(&o)).unwrap();
    assert!(!points.is_empty());
    let problem = ProblemFile::parse(&std::fs::read_to_string(data("cs_synthetic.toml")).unwrap()).unwrap();
    let system = problem.system(Some(&data(""))).unwrap();
    for p in &points {
        let q = evaluate_point(&system, p.omega, &GuardPolicy::default()).unwrap();
        assert_eq!(p.a_zz.to_bits(), q.a_zz.to_bits());
        assert_eq!(p.a_xz.to_bits(), q.a_xz.to_bits());
        assert_eq!(p.sigma_zz.to_bits(), q.sigma_zz.to_bits());
        assert_eq!(p.sigma_xz.to_bits(), q.sigma_xz.to_bits());
    }
}

#[test]
fn zeros_table_lists_each_method() {
    let o = rayzero(&[
        "zeros", "--dataset", "@li", "--alpha-ref", "164.11", "--alpha-unc", "0.03", "--n", "3,4,5,6",
        "--methods", "numerical,resonance_only,approx_analytic",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = read_zeros_csv(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 12);
    for n in 3..=6 {
        assert_eq!(rows.iter().filter(|r| r.ref_n == n).count(), 3);
    }
    for r in &rows {
        assert!(r.offset < 0.0 && r.bracket_lo < r.omega_zero && r.omega_zero < r.bracket_hi);
    }
}

fn synth(dir: &Path, name: &str, extra: &[&str]) -> (PathBuf, String) {
    let path = dir.join(name);
    let mut args = vec![
        "synthesize", "--dataset", "@cs", "--alpha-ref", "400.9", "--alpha-unc", "0.3", "--unknowns", "7p1/2,7p3/2",
        "--fiducials", "6p", "--all-gaps", "-o", path.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let o = rayzero(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&path).unwrap();
    (path, text)
}

#[test]
fn synthesis_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (_, a) = synth(dir.path(), "a.toml", &["--noise", "0.01", "--seed", "42"]);
    let (_, b) = synth(dir.path(), "b.toml", &["--noise", "0.01", "--seed", "42"]);
    assert_eq!(a.as_bytes(), b.as_bytes());
    let (_, c) = synth(dir.path(), "c.toml", &["--noise", "0.01", "--seed", "43"]);
    assert_ne!(a, c);
}

#[test]
fn noiseless_synthesis_equals_forward_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let (_, text) = synth(dir.path(), "clean.toml", &["--noise", "0"]);
    let file = ProblemFile::parse(&text).unwrap();
    let problem = file.build(None).unwrap();
    let config = SolverConfig::default();
    let forward = forward_zeros(&problem, problem.initial_values(), &config).unwrap();
    let system = file.system(None).unwrap();
    assert_eq!(forward.len(), system.poles().len() - 1);
    for (k, (m, f)) in problem.measurements().iter().zip(&forward).enumerate() {
        assert_eq!(m.omega_zero, *f);
        assert_eq!(m.omega_zero, zero_below_pole(&system, k + 1, &config).unwrap().omega_zero);
    }
}

#[test]
fn noise_has_the_requested_spread() {
    let dir = tempfile::tempdir().unwrap();
    let (_, clean) = synth(dir.path(), "clean.toml", &["--noise", "0"]);
    let clean = ProblemFile::parse(&clean).unwrap();
    let mut deviations = Vec::new();
    let mut seed = 0u64;
    while deviations.len() < 100 {
        let s = seed.to_string();
        let (_, noisy) = synth(dir.path(), "noisy.toml", &["--noise", "0.01", "--seed", &s]);
        let noisy = ProblemFile::parse(&noisy).unwrap();
        for (a, b) in noisy.measurements.iter().zip(&clean.measurements) {
            assert_eq!(a.sigma, 0.01);
            deviations.push(a.omega_zero - b.omega_zero);
        }
        seed += 1;
    }
    let n = deviations.len() as f64;
    let mean = deviations.iter().sum::<f64>() / n;
    let std = (deviations.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((std / 0.01 - 1.0).abs() < 0.3, "sample std {std}");
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("rayzero.toml");
    std::fs::write(
        &config,
        r#"guard_band = 0.5

[spectrum]
dataset = "@li"
from = 20000.0
to = 21000.0
points = 5
"#,
    )
    .unwrap();
    let cfg = config.to_str().unwrap();
    let o = rayzero(&["--config", cfg, "spectrum"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read_spectrum_csv(&stdout(&o)).unwrap().len(), 5);
    let o = rayzero(&["--config", cfg, "spectrum", "--points", "3"]);
    assert_eq!(read_spectrum_csv(&stdout(&o)).unwrap().len(), 3);
    std::fs::write(&config, "[spectrum]\nno_such_key = 1\n").unwrap();
    assert_eq!(code(&rayzero(&["--config", cfg, "spectrum"])), 2);
}

#[test]
fn bundled_problem_inverts_to_its_truth() {
    let o = rayzero(&["invert", "--problem", data("cs_synthetic.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), rayzero::csv_io::FIT_HEADER);
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let value: f64 = cols[1].parse().unwrap();
        let stat: f64 = cols[2].parse().unwrap();
        let truth: f64 = cols[6].parse().unwrap();
        assert!((value - truth).abs() < 5.0 * stat, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 2);
    let o = rayzero(&["invert", "--problem", data("li_3p.toml").to_str().unwrap(), "--format", "human"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("3p"));
}

#[test]
fn polarizability_reports_the_tail() {
    let o = rayzero(&["--format", "human", "polarizability", "--dataset", "@li", "--alpha-ref", "164.11", "--alpha-unc", "0.03"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("resonance multiplet share of the reference"));
}
