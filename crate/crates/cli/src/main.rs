//! `qslab` — command-line front end for the sphere quasi-state laboratory.
//!
//! Fields enter as closed-form expressions in the ambient coordinates
//! (see [`expr`]), experiments run on an icosphere of the requested
//! subdivision level, and results come back as text plus optional CSV,
//! JSON, and SVG artifacts. Runs are deterministic: the same options,
//! config file, and seed produce byte-identical output files.
//!
//! Exit status: 0 on success, 1 when a requested check fails, 2 on
//! invalid input (with `--json-errors`, the failure reason is printed to
//! stdout as a one-key JSON object instead of plain text on stderr).

mod expr;
mod output;

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use qslab_core::checklist;
use qslab_core::dynamics::{
    simulate_measurement, MeasurementReport, MeasurementSettings, DEFAULT_STEP_SIZE,
};
use qslab_core::geometry::{poisson_bracket, sample_field, ScalarField, SphereMesh};
use qslab_core::partitions::scaling_experiment;
use qslab_core::quasistate::{
    bracket_inequality_report, pi_functional, robustness_report, zeta, QuasiStateConfig,
};

use output::Series;

const DEFAULT_LEVEL: u32 = 6;

#[derive(Parser)]
#[command(
    name = "qslab",
    version,
    about = "Numerical laboratory for the median quasi-state on the unit sphere"
)]
struct Cli {
    /// Flat `key = value` file supplying defaults for any long option
    /// (explicit flags win; `#` starts a comment line).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Report errors as `{"error": "..."}` JSON on stdout.
    #[arg(long, global = true)]
    json_errors: bool,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the quasi-state value of a field.
    Zeta {
        /// Field expression, e.g. "x^2 + y^2".
        #[arg(long)]
        f: Option<String>,
        /// Icosphere subdivision level (default 6).
        #[arg(long)]
        level: Option<u32>,
    },
    /// Print the additivity defect of a pair of fields.
    Pi {
        /// First field expression.
        #[arg(long)]
        f: Option<String>,
        /// Second field expression.
        #[arg(long)]
        g: Option<String>,
        #[arg(long)]
        level: Option<u32>,
    },
    /// Print the uniform norm of the Poisson bracket of two fields.
    Bracket {
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        g: Option<String>,
        #[arg(long)]
        level: Option<u32>,
        /// Also write the bracket field as vertex,x,y,z,bracket rows.
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Check the additivity defect against its bracket bound.
    Inequality {
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        g: Option<String>,
        #[arg(long)]
        level: Option<u32>,
        /// Defect constant C (default 0.5).
        #[arg(long = "C", value_name = "C")]
        c: Option<f64>,
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
    /// Perturbation-robustness lower bounds and the Upsilon curve.
    Robustness {
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        g: Option<String>,
        #[arg(long)]
        level: Option<u32>,
        /// Defect constant C (default 0.5).
        #[arg(long = "C", value_name = "C")]
        c: Option<f64>,
        /// Perturbation sizes: "start:step:end" or a comma list
        /// (default 0.05:0.05:0.45).
        #[arg(long)]
        eps: Option<String>,
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
    /// Weak-coupling measurement sweep over a (T, epsilon) grid.
    Measure {
        /// First observable.
        #[arg(long)]
        f1: Option<String>,
        /// Second observable.
        #[arg(long)]
        f2: Option<String>,
        /// Comma list of measurement times T (default 50).
        #[arg(long)]
        t: Option<String>,
        /// Comma list of coupling strengths (default 1).
        #[arg(long)]
        epsilon: Option<String>,
        /// Integrator step in flow time (default 0.01).
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        level: Option<u32>,
        /// Defect constant C (default 0.5).
        #[arg(long = "C", value_name = "C")]
        c: Option<f64>,
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
    /// Cap-partition scaling experiment over base sizes and multiplicities.
    Partition {
        #[arg(long)]
        level: Option<u32>,
        /// Comma list of base partition sizes (default 8,16,32).
        #[arg(long)]
        n: Option<String>,
        /// Comma list of duplication multiplicities (default 1,2,4,8).
        #[arg(long)]
        m: Option<String>,
        /// Fractional cap overlap (default 0.3).
        #[arg(long)]
        overlap: Option<f64>,
        /// Defect constant C (default 0.5).
        #[arg(long = "C", value_name = "C")]
        c: Option<f64>,
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
    /// Run the numbered claim suite and print a pass/fail table.
    Verify {
        #[arg(long)]
        level: Option<u32>,
        /// Random sweep size for the sampled claims (default 200).
        #[arg(long)]
        cases: Option<usize>,
        /// Sweep seed; 0 reproduces the canonical acceptance run.
        #[arg(long)]
        seed: Option<u64>,
        /// Comma list of claim numbers to run (default: all ten).
        #[arg(long)]
        claims: Option<String>,
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json_errors = cli.json_errors;
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            if json_errors {
                println!("{}", serde_json::json!({ "error": format!("{err:#}") }));
            } else {
                eprintln!("error: {err:#}");
            }
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Cmd::Zeta { f, level } => {
            let src = cfg.require("f", f)?;
            let mesh = build_mesh(cfg.value("level", level, DEFAULT_LEVEL)?)?;
            let value = zeta(&build_field(&src, &mesh)?)?;
            println!("zeta({src}) = {value:.6}");
            Ok(0)
        }
        Cmd::Pi { f, g, level } => {
            let (fs, gs) = (cfg.require("f", f)?, cfg.require("g", g)?);
            let mesh = build_mesh(cfg.value("level", level, DEFAULT_LEVEL)?)?;
            let value = pi_functional(&build_field(&fs, &mesh)?, &build_field(&gs, &mesh)?)?;
            println!("pi({fs}, {gs}) = {value:.6}");
            Ok(0)
        }
        Cmd::Bracket { f, g, level, csv } => {
            let (fs, gs) = (cfg.require("f", f)?, cfg.require("g", g)?);
            let mesh = build_mesh(cfg.value("level", level, DEFAULT_LEVEL)?)?;
            let bracket = poisson_bracket(&build_field(&fs, &mesh)?, &build_field(&gs, &mesh)?)?;
            println!("bracket_norm({fs}, {gs}) = {:.6}", bracket.uniform_norm());
            if let Some(path) = csv {
                let mut rows = String::from("vertex,x,y,z,bracket\n");
                for (i, (p, v)) in mesh.vertices().iter().zip(bracket.values()).enumerate() {
                    rows.push_str(&output::csv_record(&[
                        i.to_string(),
                        p.x.to_string(),
                        p.y.to_string(),
                        p.z.to_string(),
                        v.to_string(),
                    ]));
                    rows.push('\n');
                }
                write_artifact(&path, &rows)?;
            }
            Ok(0)
        }
        Cmd::Inequality { f, g, level, c, csv, json } => {
            let (fs, gs) = (cfg.require("f", f)?, cfg.require("g", g)?);
            let mesh = build_mesh(cfg.value("level", level, DEFAULT_LEVEL)?)?;
            let config = QuasiStateConfig::new(cfg.value("C", c, 0.5)?)?;
            let report =
                bracket_inequality_report(&build_field(&fs, &mesh)?, &build_field(&gs, &mesh)?, config)?;
            print!("{}", report.text());
            if let Some(path) = csv {
                write_artifact(
                    &path,
                    &format!("{}\n{}\n", qslab_core::quasistate::BracketReport::CSV_HEADER, report.csv_row()),
                )?;
            }
            if let Some(path) = json {
                write_json(
                    &path,
                    &InequalityJson {
                        pi: report.pi,
                        bracket_norm: report.bracket_norm,
                        bound: report.bound,
                        c: report.defect_c,
                        satisfied: report.satisfied,
                    },
                )?;
            }
            Ok(if report.satisfied { 0 } else { 1 })
        }
        Cmd::Robustness { f, g, level, c, eps, csv, svg, json } => {
            let (fs, gs) = (cfg.require("f", f)?, cfg.require("g", g)?);
            let mesh = build_mesh(cfg.value("level", level, DEFAULT_LEVEL)?)?;
            let config = QuasiStateConfig::new(cfg.value("C", c, 0.5)?)?;
            let grid = cfg.grid("eps", eps, "0.05:0.05:0.45")?;
            let report = robustness_report(
                &build_field(&fs, &mesh)?,
                &build_field(&gs, &mesh)?,
                config,
                &grid,
            )?;
            print!("{}", report.text());
            if let Some(path) = csv {
                let mut rows = String::from("epsilon,upsilon_lower\n");
                for (e, lower) in &report.upsilon_curve {
                    rows.push_str(&output::csv_record(&[e.to_string(), lower.to_string()]));
                    rows.push('\n');
                }
                write_artifact(&path, &rows)?;
            }
            if let Some(path) = svg {
                let series = [Series {
                    name: "Upsilon lower bound".into(),
                    points: report.upsilon_curve.clone(),
                }];
                write_artifact(
                    &path,
                    &output::line_plot(
                        "Perturbation robustness",
                        "epsilon",
                        "Upsilon lower bound",
                        &series,
                        false,
                    ),
                )?;
            }
            if let Some(path) = json {
                write_json(
                    &path,
                    &RobustnessJson {
                        pi: report.pi_value,
                        upsilon_lower: report.upsilon_lower,
                        eps_max_lower: report.eps_max_lower,
                        vacuous: report.vacuous,
                        curve: report
                            .upsilon_curve
                            .iter()
                            .map(|&(epsilon, upsilon_lower)| CurvePoint { epsilon, upsilon_lower })
                            .collect(),
                    },
                )?;
            }
            Ok(0)
        }
        Cmd::Measure { f1, f2, t, epsilon, step, level, c, csv, json } => {
            let (f1s, f2s) = (cfg.require("f1", f1)?, cfg.require("f2", f2)?);
            let mesh = build_mesh(cfg.value("level", level, DEFAULT_LEVEL)?)?;
            let settings = MeasurementSettings {
                step_size: cfg.value("step", step, DEFAULT_STEP_SIZE)?,
                config: QuasiStateConfig::new(cfg.value("C", c, 0.5)?)?,
            };
            let times = cfg.list::<f64>("t", t, &[50.0])?;
            let couplings = cfg.list::<f64>("epsilon", epsilon, &[1.0])?;
            let (field1, field2) = (build_field(&f1s, &mesh)?, build_field(&f2s, &mesh)?);
            let mut all_ok = true;
            let mut rows = format!("{}\n", MeasurementReport::CSV_HEADER);
            let mut reports = Vec::new();
            for &t in &times {
                for &eps in &couplings {
                    let report = simulate_measurement(&field1, &field2, t, eps, &settings)?;
                    println!("{}", report.text());
                    all_ok &= report.satisfied();
                    rows.push_str(&report.csv_row());
                    rows.push('\n');
                    reports.push(MeasureJson {
                        t: report.t,
                        epsilon: report.epsilon,
                        delta: report.delta,
                        bound: report.bound,
                        satisfied: report.satisfied(),
                        conservation_residual: report.conservation_residual,
                    });
                }
            }
            if let Some(path) = csv {
                write_artifact(&path, &rows)?;
            }
            if let Some(path) = json {
                write_json(&path, &reports)?;
            }
            Ok(if all_ok { 0 } else { 1 })
        }
        Cmd::Partition { level, n, m, overlap, c, csv, svg, json } => {
            let mesh = build_mesh(cfg.value("level", level, DEFAULT_LEVEL)?)?;
            let ns = cfg.list::<usize>("n", n, &[8, 16, 32])?;
            let ms = cfg.list::<usize>("m", m, &[1, 2, 4, 8])?;
            let overlap = cfg.value("overlap", overlap, 0.3)?;
            let config = QuasiStateConfig::new(cfg.value("C", c, 0.5)?)?;
            let experiment = scaling_experiment(&mesh, &ns, &ms, overlap, config)?;
            for row in experiment.rows() {
                println!(
                    "N = {:<3} m = {:<2} N_eff = {:<4} measured = {:.6e}  bound = {:.6e}  {}",
                    row.n,
                    row.m,
                    row.n_eff,
                    row.measured,
                    row.bound,
                    if row.satisfied { "ok" } else { "VIOLATED" }
                );
            }
            let mut slopes = Vec::new();
            for &n in &ns {
                if let Some(slope) = experiment.slope_for_base(n) {
                    println!("slope(N = {n}) = {slope:.4}");
                    slopes.push(SlopeJson { n, slope });
                }
            }
            println!("all rows satisfied: {}", experiment.all_satisfied());
            if let Some(path) = csv {
                write_artifact(&path, &format!("{}\n", experiment.csv()))?;
            }
            if let Some(path) = svg {
                let mut series = Vec::new();
                for &n in &ns {
                    let pick = |f: fn(&qslab_core::partitions::ScalingRow) -> f64| {
                        experiment
                            .rows()
                            .iter()
                            .filter(|r| r.n == n)
                            .map(|r| (r.n_eff as f64, f(r)))
                            .collect::<Vec<_>>()
                    };
                    series.push(Series {
                        name: format!("N={n} measured"),
                        points: pick(|r| r.measured),
                    });
                    series.push(Series {
                        name: format!("N={n} bound"),
                        points: pick(|r| r.bound),
                    });
                }
                write_artifact(
                    &path,
                    &output::line_plot(
                        "Partition scaling",
                        "effective member count",
                        "max pairwise bracket",
                        &series,
                        true,
                    ),
                )?;
            }
            if let Some(path) = json {
                write_json(
                    &path,
                    &PartitionJson {
                        rows: experiment
                            .rows()
                            .iter()
                            .map(|r| PartitionRowJson {
                                n: r.n,
                                m: r.m,
                                n_eff: r.n_eff,
                                measured: r.measured,
                                bound: r.bound,
                                slack: r.slack,
                                satisfied: r.satisfied,
                            })
                            .collect(),
                        slopes,
                        all_satisfied: experiment.all_satisfied(),
                    },
                )?;
            }
            Ok(if experiment.all_satisfied() { 0 } else { 1 })
        }
        Cmd::Verify { level, cases, seed, claims, json } => {
            let level = cfg.value("level", level, DEFAULT_LEVEL)?;
            let cases = cfg.value("cases", cases, 200)?;
            let seed = cfg.value("seed", seed, 0u64)?;
            let numbers = cfg.list::<u32>("claims", claims, &[])?;
            let outcomes = checklist::run_claims(level, cases, seed, &numbers)?;
            for outcome in &outcomes {
                println!(
                    "claim {:>2}  {:<4}  {:<24}  {}",
                    outcome.number,
                    outcome.status(),
                    outcome.key,
                    outcome.detail
                );
            }
            let passed = outcomes.iter().filter(|o| o.pass).count();
            println!("{passed}/{} claims passed at level {level}", outcomes.len());
            if let Some(path) = json {
                let mirror: Vec<ClaimJson> = outcomes
                    .iter()
                    .map(|o| ClaimJson {
                        number: o.number,
                        key: o.key,
                        pass: o.pass,
                        detail: o.detail.clone(),
                    })
                    .collect();
                write_json(&path, &mirror)?;
            }
            Ok(if passed == outcomes.len() { 0 } else { 1 })
        }
    }
}

fn build_mesh(level: u32) -> Result<Arc<SphereMesh>> {
    Ok(Arc::new(SphereMesh::build_icosphere(level)?))
}

fn build_field(source: &str, mesh: &Arc<SphereMesh>) -> Result<ScalarField> {
    let ast = expr::parse(source).map_err(|e| anyhow!("in expression '{source}': {e}"))?;
    sample_field(mesh, |p| ast.eval(p)).with_context(|| format!("evaluating '{source}'"))
}

fn write_artifact(path: &Path, content: &str) -> Result<()> {
    output::write_text(path, content)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).context("serializing JSON report")?;
    text.push('\n');
    write_artifact(path, &text)
}

#[derive(Serialize)]
struct InequalityJson {
    pi: f64,
    bracket_norm: f64,
    bound: f64,
    c: f64,
    satisfied: bool,
}

#[derive(Serialize)]
struct CurvePoint {
    epsilon: f64,
    upsilon_lower: f64,
}

#[derive(Serialize)]
struct RobustnessJson {
    pi: f64,
    upsilon_lower: f64,
    eps_max_lower: f64,
    vacuous: bool,
    curve: Vec<CurvePoint>,
}

#[derive(Serialize)]
struct MeasureJson {
    t: f64,
    epsilon: f64,
    delta: f64,
    bound: f64,
    satisfied: bool,
    conservation_residual: f64,
}

#[derive(Serialize)]
struct PartitionRowJson {
    n: usize,
    m: usize,
    n_eff: usize,
    measured: f64,
    bound: f64,
    slack: f64,
    satisfied: bool,
}

#[derive(Serialize)]
struct SlopeJson {
    n: usize,
    slope: f64,
}

#[derive(Serialize)]
struct PartitionJson {
    rows: Vec<PartitionRowJson>,
    slopes: Vec<SlopeJson>,
    all_satisfied: bool,
}

#[derive(Serialize)]
struct ClaimJson {
    number: u32,
    key: &'static str,
    pass: bool,
    detail: String,
}

/// Option values resolved as: explicit flag, then config file, then default.
struct Config {
    map: HashMap<String, String>,
}

impl Config {
    fn load(path: Option<&Path>) -> Result<Config> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    anyhow!(
                        "{}:{}: expected `key = value`, got '{raw}'",
                        path.display(),
                        lineno + 1
                    )
                })?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Config { map })
    }

    fn require(&self, key: &str, cli: Option<String>) -> Result<String> {
        cli.or_else(|| self.map.get(key).cloned())
            .ok_or_else(|| anyhow!("missing required option --{key} (and no config value '{key}')"))
    }

    fn value<T>(&self, key: &str, cli: Option<T>, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        if let Some(v) = cli {
            return Ok(v);
        }
        match self.map.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|e| anyhow!("config key '{key}' = '{raw}': {e}")),
            None => Ok(default),
        }
    }

    fn list<T>(&self, key: &str, cli: Option<String>, default: &[T]) -> Result<Vec<T>>
    where
        T: FromStr + Clone,
        T::Err: fmt::Display,
    {
        match cli.or_else(|| self.map.get(key).cloned()) {
            Some(raw) => parse_list(&raw).with_context(|| format!("option --{key}")),
            None => Ok(default.to_vec()),
        }
    }

    /// An epsilon grid: either `start:step:end` (inclusive) or a comma list.
    fn grid(&self, key: &str, cli: Option<String>, default: &str) -> Result<Vec<f64>> {
        let raw = cli
            .or_else(|| self.map.get(key).cloned())
            .unwrap_or_else(|| default.to_string());
        if !raw.contains(':') {
            return parse_list(&raw).with_context(|| format!("option --{key}"));
        }
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 3 {
            bail!("option --{key}: grid '{raw}' must be start:step:end or a comma list");
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| anyhow!("option --{key}: '{}': {e}", s.trim()))
            })
            .collect::<Result<_>>()?;
        let (start, step, end) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0 && step.is_finite() && start.is_finite() && end >= start) {
            bail!("option --{key}: grid '{raw}' needs a positive step and end >= start");
        }
        let mut grid = Vec::new();
        let mut k = 0u32;
        loop {
            let eps = start + step * f64::from(k);
            if eps > end + 1e-9 * step {
                break;
            }
            grid.push(eps);
            k += 1;
        }
        Ok(grid)
    }
}

fn parse_list<T>(raw: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    raw.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<T>().map_err(|e| anyhow!("'{s}': {e}"))
        })
        .collect()
}
