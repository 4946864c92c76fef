use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_slowfast");

/// Overrides that shrink a rate ladder to a fraction of a second.
const SMALL: &[&str] = &[
    "--set",
    "problem.m=4",
    "--set",
    "integrator.h=0.015625",
    "--set",
    "integrator.t_end=0.25",
    "--set",
    "rate.epsilons=[0.25, 0.0625, 0.015625]",
    "--set",
    "rate.strong_samples=128",
    "--set",
    "rate.weak_samples=128",
];

fn run(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    if let Some(o) = out {
        cmd.arg("--out").arg(o);
    }
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn rate_csv_header_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["strong-rate", "--deterministic"];
    args.extend_from_slice(SMALL);
    let o = run(&args, Some(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("strong-rate.csv")).unwrap();
    let golden = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/rate_header.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), golden.trim_end());
    assert_eq!(csv.lines().count(), 4);
    for f in ["manifest.txt", "strong-rate.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn missing_config_exits_1_without_output_dir() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("results");
    let o = run(&["strong-rate", "--config", "/nonexistent/default.toml"], Some(&out));
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
    assert!(stderr(&o).contains("/nonexistent/default.toml"));
}

#[test]
fn p_at_least_alpha_is_a_config_error_citing_the_restriction() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("results");
    let o = run(&["strong-rate", "--alpha", "1.5", "--set", "rate.p=1.5"], Some(&out));
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("rate.p") && e.contains("1 <= p < alpha"), "{e}");
    assert!(!out.exists());
}

#[test]
fn bad_flags_are_config_errors() {
    let o = run(&["strong-rate", "--threads", "many"], None);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["no-such-experiment"], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_default_config_passes() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.toml");
    let o = run(&["validate", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("checks pass"));
}

#[test]
fn validate_names_dissipativity_failure() {
    let o = run(&["validate", "--set", "problem.b=12"], None);
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    let line = s.lines().find(|l| l.starts_with("FAIL")).unwrap();
    assert!(line.contains("problem.b") && line.contains("lambda_1 - L_F"), "{s}");
    assert_eq!(s.lines().filter(|l| l.starts_with("FAIL")).count(), 1, "{s}");
}

#[test]
fn validate_names_second_series_failure_for_constant_fast_weights() {
    let o = run(&["validate", "--set", "noise.fast_rho=0"], None);
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    let fails: Vec<&str> = s.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(fails.len(), 1, "{s}");
    assert!(fails[0].contains("noise.fast_rho"), "{s}");
}

#[test]
fn default_config_file_matches_built_in_defaults() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.toml");
    let loaded = slowfast::cli::load_config(Some(&cfg), &[]).unwrap();
    assert_eq!(loaded, slowfast::harness::ExperimentConfig::default());
}

#[test]
fn assert_flag_maps_failed_checks_to_exit_2() {
    // a slope tolerance no finite ladder can meet
    let mut args = vec!["strong-rate", "--assert", "--set", "rate.slope_tolerance=-1"];
    args.extend_from_slice(SMALL);
    let o = run(&args, None);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    args[1] = "--deterministic";
    assert_eq!(run(&args, None).status.code(), Some(0));
}

#[test]
fn noise_check_with_alpha_flag_passes() {
    let o = run(&["noise-check", "--alpha", "1.5", "--assert", "--set", "noise_check.samples=20000"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.ends_with("PASS")).count(), 6);
}

#[test]
fn rerun_from_manifest_reproduces_csv_and_svg() {
    let root = tempfile::tempdir().unwrap();
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    let mut args = vec!["strong-rate", "--deterministic", "--seed", "5"];
    args.extend_from_slice(SMALL);
    assert_eq!(run(&args, Some(&a)).status.code(), Some(0));
    let manifest = a.join("manifest.txt");
    let o = run(&["strong-rate", "--deterministic", "--config", manifest.to_str().unwrap()], Some(&b));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["strong-rate.csv", "strong-rate.svg", "manifest.txt"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn svg_timestamp_only_without_deterministic() {
    let root = tempfile::tempdir().unwrap();
    let mut args = vec!["strong-rate"];
    args.extend_from_slice(SMALL);
    assert_eq!(run(&args, Some(root.path())).status.code(), Some(0));
    let svg = std::fs::read_to_string(root.path().join("strong-rate.svg")).unwrap();
    assert!(svg.contains("<!-- generated at"));
    let manifest = std::fs::read_to_string(root.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("duration_seconds"));
}
