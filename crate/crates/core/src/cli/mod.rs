//! Command-line front end: config loading, experiment dispatch and output
//! files (manifest, CSV tables, SVG charts).

mod svg;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::{
    bbar_check, ergodicity_check, galerkin_convergence_experiment, noise_check, phi_check, run_ladder,
    strong_rate_experiment, weak_dominates_strong, with_threads, ExperimentConfig, LadderPlan, RateOutcome,
};

pub use svg::{Chart, Series, Style};

/// Column order of every rate table.
pub const RATE_HEADER: &str = "epsilon,error,stderr,n_effective,aborted";

/// Minimum `R^2` of the ergodic decay fit.
const DECAY_MIN_R2: f64 = 0.95;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_ASSERT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "slowfast", version, about = "Averaging-rate experiments for slow-fast SPDEs with stable noise")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Strong averaging error over the epsilon ladder.
    StrongRate(RunArgs),
    /// Weak averaging error over the epsilon ladder, with the strong ladder
    /// from the same samples for comparison.
    WeakRate(RunArgs),
    /// Galerkin truncation error against the finest resolution.
    Galerkin(RunArgs),
    /// Decay of the frozen equation towards its invariant measure.
    Ergodicity(RunArgs),
    /// Characteristic-function test of the stable samplers.
    NoiseCheck(RunArgs),
    /// Ergodic averaged drift against its closed form.
    BbarCheck(RunArgs),
    /// Poisson-equation solution against its closed form.
    PhiCheck(RunArgs),
    /// Run every configuration check without simulating.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML configuration file, or a manifest from an earlier run.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override one value, e.g. `--set rate.p=1.2`.
    #[arg(long = "set", value_name = "K=V")]
    pub set: Vec<String>,
    /// Stability index; for `noise-check` the only index tested.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output directory; without it only the report is printed.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Master seed; every noise stream derives from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Exit with status 2 when the experiment's check fails.
    #[arg(long)]
    pub assert: bool,
    /// Omit wall-clock values from every output file.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

/// Loads a config file (or the `config` table of a manifest) and applies
/// `section.key=value` overrides. The result is not validated.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut table = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            let mut t: toml::Table =
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            if t.contains_key("tool_version") {
                match t.remove("config") {
                    Some(toml::Value::Table(c)) => c,
                    _ => return Err(Error::Config(format!("{}: manifest has no config table", p.display()))),
                }
            } else {
                t
            }
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not KEY=VALUE")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key `{key}` is malformed")));
    }
    // TOML literal when it parses, bare string otherwise
    let value = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let (last, parents) = path.split_last().expect("nonempty path");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key `{key}`: `{p}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn resolve(args: &ConfigArgs, noise_check: bool) -> Result<ExperimentConfig> {
    let mut cfg = load_config(args.config.as_deref(), &args.set)?;
    if let Some(a) = args.alpha {
        if noise_check {
            cfg.noise_check.alphas = vec![a];
        } else {
            cfg.problem.alpha = a;
        }
    }
    Ok(cfg)
}

/// One CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: String,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", self.header);
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Everything an experiment hands back for printing and persistence.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub tables: Vec<Table>,
    pub charts: Vec<(String, Chart)>,
    pub lines: Vec<String>,
    pub passed: bool,
    pub aborted: BTreeMap<String, usize>,
}

impl Report {
    fn new() -> Self {
        Self {
            tables: Vec::new(),
            charts: Vec::new(),
            lines: Vec::new(),
            passed: true,
            aborted: BTreeMap::new(),
        }
    }
}

fn rate_table(name: &str, outcome: &RateOutcome) -> Table {
    Table {
        name: name.to_string(),
        header: RATE_HEADER.to_string(),
        rows: outcome
            .table
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.epsilon.to_string(),
                    r.error.to_string(),
                    r.stderr.to_string(),
                    r.n_effective.to_string(),
                    r.aborted.to_string(),
                ]
            })
            .collect(),
    }
}

/// Log-log chart of `error^{1/p}` with the fitted line and a reference line
/// of the theoretical slope through the geometric centre of the data.
pub fn rate_chart(outcome: &RateOutcome) -> Chart {
    let pts: Vec<(f64, f64)> = outcome
        .table
        .points(outcome.p)
        .iter()
        .map(|p| (p.epsilon, p.error))
        .collect();
    let mut series = vec![Series {
        label: "measured".into(),
        points: pts.clone(),
        style: Style::Markers,
    }];
    let (e_lo, e_hi) = pts
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    if let Ok(f) = &outcome.fit {
        series.push(Series {
            label: format!("fit slope {:.3}", f.slope),
            points: vec![(e_lo, f.predict(e_lo)), (e_hi, f.predict(e_hi))],
            style: Style::Line,
        });
    }
    let positive: Vec<&(f64, f64)> = pts.iter().filter(|p| p.1 > 0.0).collect();
    if !positive.is_empty() {
        let n = positive.len() as f64;
        let cx = positive.iter().map(|p| p.0.ln()).sum::<f64>() / n;
        let cy = positive.iter().map(|p| p.1.ln()).sum::<f64>() / n;
        let at = |e: f64| (cy + outcome.reference_slope * (e.ln() - cx)).exp();
        series.push(Series {
            label: format!("reference slope {:.3}", outcome.reference_slope),
            points: vec![(e_lo, at(e_lo)), (e_hi, at(e_hi))],
            style: Style::Dashed,
        });
    }
    Chart {
        title: outcome.name.to_string(),
        x_label: "epsilon".into(),
        y_label: if outcome.p == 1.0 {
            "error".into()
        } else {
            format!("error^(1/{})", outcome.p)
        },
        log_x: true,
        log_y: true,
        series,
    }
}

fn describe_rate(report: &mut Report, outcome: &RateOutcome) {
    for r in &outcome.table.rows {
        report.lines.push(format!(
            "{} eps={:<12} error={:.6e} se={:.2e} n={} aborted={}",
            outcome.name, r.epsilon, r.error, r.stderr, r.n_effective, r.aborted
        ));
    }
    report.lines.push(match &outcome.fit {
        Ok(f) => format!(
            "{} slope {:.4} +- {:.4} (reference {:.4}, r2 {:.4})",
            outcome.name, f.slope, f.slope_stderr, outcome.reference_slope, f.r2
        ),
        Err(e) => format!("{} fit failed: {e}", outcome.name),
    });
    report
        .aborted
        .insert(outcome.name.to_string(), outcome.table.total_aborted());
}

fn strong_report(cfg: &ExperimentConfig) -> Result<Report> {
    let outcome = strong_rate_experiment(cfg)?;
    let mut r = Report::new();
    describe_rate(&mut r, &outcome);
    r.passed = outcome.slope_within(cfg.rate.slope_tolerance);
    r.lines.push(format!(
        "slope within {} of {:.4}: {}",
        cfg.rate.slope_tolerance,
        outcome.reference_slope,
        verdict(r.passed)
    ));
    r.tables.push(rate_table("strong-rate", &outcome));
    r.charts.push(("strong-rate".into(), rate_chart(&outcome)));
    Ok(r)
}

fn weak_report(cfg: &ExperimentConfig) -> Result<Report> {
    let out = run_ladder(
        cfg,
        LadderPlan {
            strong_samples: cfg.rate.strong_samples,
            weak_samples: cfg.rate.weak_samples,
            coupled: true,
        },
    )?;
    let weak = out.weak.expect("weak ladder requested");
    let strong = out.strong.expect("strong ladder requested");
    let mut r = Report::new();
    describe_rate(&mut r, &weak);
    describe_rate(&mut r, &strong);
    let dominates = weak_dominates_strong(&weak, &strong);
    let above_min = matches!(&weak.fit, Ok(f) if f.slope >= cfg.rate.weak_min_slope);
    r.passed = dominates == Some(true) && above_min;
    r.lines.push(format!(
        "weak slope >= strong slope - 2 se: {}",
        dominates.map_or("no fit", verdict)
    ));
    r.lines.push(format!(
        "weak slope >= {}: {}",
        cfg.rate.weak_min_slope,
        verdict(above_min)
    ));
    r.tables.push(rate_table("weak-rate", &weak));
    r.tables.push(rate_table("strong-rate", &strong));
    r.charts.push(("weak-rate".into(), rate_chart(&weak)));
    r.charts.push(("strong-rate".into(), rate_chart(&strong)));
    Ok(r)
}

fn galerkin_report(cfg: &ExperimentConfig) -> Result<Report> {
    let out = galerkin_convergence_experiment(cfg)?;
    let mut r = Report::new();
    for row in &out.rows {
        r.lines
            .push(format!("galerkin m={:<4} error={:.6e} se={:.2e}", row.m, row.error, row.stderr));
    }
    r.passed = out.strictly_decreasing();
    r.lines.push(format!(
        "strictly decreasing beyond joint stderr: {}{}",
        verdict(r.passed),
        if out.violations.is_empty() {
            String::new()
        } else {
            format!(" (violations after rungs {:?})", out.violations)
        }
    ));
    r.aborted.insert("galerkin".into(), out.aborted);
    r.tables.push(Table {
        name: "galerkin".into(),
        header: "m,error,stderr".into(),
        rows: out
            .rows
            .iter()
            .map(|x| vec![x.m.to_string(), x.error.to_string(), x.stderr.to_string()])
            .collect(),
    });
    r.charts.push((
        "galerkin".into(),
        Chart {
            title: "galerkin".into(),
            x_label: "m".into(),
            y_label: "error".into(),
            log_x: true,
            log_y: true,
            series: vec![Series {
                label: "error against the finest rung".into(),
                points: out.rows.iter().map(|x| (x.m as f64, x.error)).collect(),
                style: Style::Markers,
            }],
        },
    ));
    Ok(r)
}

fn ergodicity_report(cfg: &ExperimentConfig) -> Result<Report> {
    let rep = ergodicity_check(cfg)?;
    let mut r = Report::new();
    for (i, t) in rep.times.iter().enumerate() {
        r.lines.push(format!(
            "ergodicity t={t:<6.3} gap={:.6e} se={:.2e}",
            rep.gaps[i], rep.gap_stderr[i]
        ));
    }
    let r2_ok = rep.fit.as_ref().map_or(rep.unresolvable, |f| f.r2 >= DECAY_MIN_R2);
    r.passed = rep.meets_bound(cfg.ergodicity.slack) && r2_ok;
    r.lines.push(match &rep.fit {
        Some(f) => format!(
            "decay rate {:.4} +- {:.4} (r2 {:.4}), bound {:.4} - slack {}: {}",
            f.rate,
            f.rate_stderr,
            f.r2,
            rep.bound_rate,
            cfg.ergodicity.slack,
            verdict(r.passed)
        ),
        None => format!("decay unresolvable above the noise floor: {}", verdict(r.passed)),
    });
    r.tables.push(Table {
        name: "ergodicity".into(),
        header: "t,gap,stderr".into(),
        rows: rep
            .times
            .iter()
            .enumerate()
            .map(|(i, t)| vec![t.to_string(), rep.gaps[i].to_string(), rep.gap_stderr[i].to_string()])
            .collect(),
    });
    let mut series = vec![Series {
        label: "measured gap".into(),
        points: rep.times.iter().copied().zip(rep.gaps.iter().copied()).collect(),
        style: Style::Markers,
    }];
    if let Some(f) = &rep.fit {
        let (t0, t1) = (rep.times[f.used[0]], rep.times[*f.used.last().expect("fit uses points")]);
        let g0 = rep.gaps[f.used[0]];
        let line = |rate: f64| vec![(t0, g0), (t1, g0 * (-rate * (t1 - t0)).exp())];
        series.push(Series {
            label: format!("fit rate {:.3}", f.rate),
            points: line(f.rate),
            style: Style::Line,
        });
        series.push(Series {
            label: format!("bound rate {:.3}", rep.bound_rate),
            points: line(rep.bound_rate),
            style: Style::Dashed,
        });
    }
    r.charts.push((
        "ergodicity".into(),
        Chart {
            title: "ergodicity".into(),
            x_label: "t".into(),
            y_label: "gap".into(),
            log_x: false,
            log_y: true,
            series,
        },
    ));
    Ok(r)
}

fn noise_report(cfg: &ExperimentConfig) -> Result<Report> {
    let rows = noise_check(cfg, &cfg.noise_check.alphas)?;
    let mut r = Report::new();
    for c in &rows {
        r.lines.push(format!(
            "alpha={} {:<11} u={:<4} cf={:.5} target={:.5} z={:+.2} {}",
            c.alpha,
            c.source,
            c.u,
            c.empirical,
            c.target,
            c.z(),
            verdict(c.passes())
        ));
    }
    r.passed = rows.iter().all(|c| c.passes());
    r.tables.push(Table {
        name: "noise-check".into(),
        header: "alpha,source,u,empirical,stderr,target,z".into(),
        rows: rows
            .iter()
            .map(|c| {
                vec![
                    c.alpha.to_string(),
                    c.source.to_string(),
                    c.u.to_string(),
                    c.empirical.to_string(),
                    c.stderr.to_string(),
                    c.target.to_string(),
                    c.z().to_string(),
                ]
            })
            .collect(),
    });
    Ok(r)
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn bbar_report(cfg: &ExperimentConfig) -> Result<Report> {
    let c = bbar_check(cfg)?;
    let mut r = Report::new();
    for k in 0..c.estimate.value.len() {
        let a = c.analytic.as_ref().map(|a| a[k]);
        r.lines.push(format!(
            "bbar mode {} estimate={:.6} se={:.2e} analytic={}",
            k + 1,
            c.estimate.value[k],
            c.estimate.stderr[k],
            a.map_or("-".into(), |v| format!("{v:.6}"))
        ));
    }
    r.passed = c.passes();
    r.lines.push(format!(
        "max z {} and max se {:.2e} <= {}: {}{}",
        c.max_z().map_or("-".into(), |z| format!("{z:.2}")),
        c.estimate.max_stderr(),
        c.target_stderr,
        verdict(r.passed),
        if c.estimate.non_converged {
            " (early and late blocks disagree)"
        } else {
            ""
        }
    ));
    r.tables.push(Table {
        name: "bbar-check".into(),
        header: "mode,estimate,stderr,analytic".into(),
        rows: (0..c.estimate.value.len())
            .map(|k| {
                vec![
                    (k + 1).to_string(),
                    c.estimate.value[k].to_string(),
                    c.estimate.stderr[k].to_string(),
                    opt(c.analytic.as_ref().map(|a| a[k])),
                ]
            })
            .collect(),
    });
    Ok(r)
}

fn phi_report(cfg: &ExperimentConfig) -> Result<Report> {
    let c = phi_check(cfg)?;
    let mut r = Report::new();
    let e = &c.estimate;
    for k in 0..e.value.len() {
        r.lines.push(format!(
            "phi mode {} estimate={:.6} se={:.2e} closed form={}",
            k + 1,
            e.value[k],
            e.stderr[k],
            c.closed_form.as_ref().map_or("-".into(), |v| format!("{:.6}", v[k]))
        ));
    }
    r.passed = c.passes();
    r.lines.push(format!(
        "truncation bound {:.2e}, max z {}: {}",
        e.truncation_bound,
        c.max_z().map_or("-".into(), |z| format!("{z:.2}")),
        verdict(r.passed)
    ));
    r.tables.push(Table {
        name: "phi-check".into(),
        header: "mode,estimate,stderr,closed_form,truncation_bound".into(),
        rows: (0..e.value.len())
            .map(|k| {
                vec![
                    (k + 1).to_string(),
                    e.value[k].to_string(),
                    e.stderr[k].to_string(),
                    opt(c.closed_form.as_ref().map(|v| v[k])),
                    e.truncation_bound.to_string(),
                ]
            })
            .collect(),
    });
    Ok(r)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool_version: &'a str,
    subcommand: &'a str,
    seed: u64,
    threads: usize,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    duration_seconds: Option<f64>,
    outputs: Vec<String>,
    summary: &'a [String],
    aborted: &'a BTreeMap<String, usize>,
    config: &'a ExperimentConfig,
}

/// Writes the report's tables and charts plus `manifest.txt` into `dir`.
fn persist(
    dir: &Path,
    subcommand: &str,
    cfg: &ExperimentConfig,
    report: &Report,
    duration: Option<f64>,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut outputs = Vec::new();
    for t in &report.tables {
        let name = format!("{}.csv", t.name);
        fs::write(dir.join(&name), t.to_csv())?;
        outputs.push(name);
    }
    let stamp = duration.map(|_| {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        format!("generated at unix time {secs}")
    });
    for (name, chart) in &report.charts {
        let name = format!("{name}.svg");
        fs::write(dir.join(&name), chart.render(stamp.as_deref()))?;
        outputs.push(name);
    }
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        subcommand,
        seed: cfg.run.seed,
        threads: cfg.run.threads,
        passed: report.passed,
        duration_seconds: duration,
        outputs: outputs.clone(),
        summary: &report.lines,
        aborted: &report.aborted,
        config: cfg,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(format!("manifest: {e}")))?;
    fs::write(dir.join("manifest.txt"), text)?;
    outputs.push("manifest.txt".into());
    Ok(outputs.into_iter().map(|o| dir.join(o)).collect())
}

/// Runs one subcommand and returns its report; `Error::Config` means the
/// run never started.
pub fn execute(subcommand: &str, args: &RunArgs) -> Result<(ExperimentConfig, Report)> {
    let mut cfg = resolve(&args.config, subcommand == "noise-check")?;
    if let Some(s) = args.seed {
        cfg.run.seed = s;
    }
    if let Some(t) = args.threads {
        cfg.run.threads = t;
    }
    cfg.validate()?;
    let run = match subcommand {
        "strong-rate" => strong_report,
        "weak-rate" => weak_report,
        "galerkin" => galerkin_report,
        "ergodicity" => ergodicity_report,
        "noise-check" => noise_report,
        "bbar-check" => bbar_report,
        "phi-check" => phi_report,
        other => return Err(Error::Config(format!("unknown subcommand {other}"))),
    };
    let report = with_threads(cfg.run.threads, || run(&cfg))??;
    Ok((cfg, report))
}

fn run_subcommand(name: &str, args: &RunArgs) -> i32 {
    let start = Instant::now();
    let (cfg, report) = match execute(name, args) {
        Ok(v) => v,
        Err(e @ (Error::Config(_) | Error::InvalidParameter { .. } | Error::DimensionMismatch { .. })) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
        Err(e) => {
            eprintln!("experiment failed: {e}");
            return EXIT_ASSERT;
        }
    };
    for l in &report.lines {
        println!("{l}");
    }
    if let Some(dir) = &args.out {
        let duration = (!args.deterministic).then(|| start.elapsed().as_secs_f64());
        match persist(dir, name, &cfg, &report, duration) {
            Ok(paths) => {
                for p in paths {
                    println!("wrote {}", p.display());
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
        }
    }
    if args.assert && !report.passed {
        EXIT_ASSERT
    } else {
        EXIT_OK
    }
}

fn run_validate(args: &ValidateArgs) -> i32 {
    let cfg = match resolve(&args.config, false) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let checks = cfg.checks();
    for c in &checks {
        println!("{} {}: {}", if c.ok { "ok  " } else { "FAIL" }, c.field, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.ok).count();
    if failed == 0 {
        println!("all {} checks pass", checks.len());
        EXIT_OK
    } else {
        let mut s = format!("{failed} check(s) failed:");
        for c in checks.iter().filter(|c| !c.ok) {
            let _ = write!(s, " {}", c.field);
        }
        eprintln!("{s}");
        EXIT_CONFIG
    }
}

/// Parses `args` (program name first) and runs; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match &cli.command {
        Command::StrongRate(a) => run_subcommand("strong-rate", a),
        Command::WeakRate(a) => run_subcommand("weak-rate", a),
        Command::Galerkin(a) => run_subcommand("galerkin", a),
        Command::Ergodicity(a) => run_subcommand("ergodicity", a),
        Command::NoiseCheck(a) => run_subcommand("noise-check", a),
        Command::BbarCheck(a) => run_subcommand("bbar-check", a),
        Command::PhiCheck(a) => run_subcommand("phi-check", a),
        Command::Validate(a) => run_validate(a),
    }
}
