//! Command-line front end: run scenarios, verify against the acceptance
//! suite, and emit trajectories and comparison reports.
//!
//! Output is deterministic: identical configurations produce byte-identical
//! CSV files. Floats are printed with 17 significant digits; group matrices
//! are emitted row-major.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::acceptance;
use crate::dynamics::{energy, integrate_reduced, momentum, ReducedTrajectory};
use crate::error::{LprError, Result};
use crate::reconstruction::{
    direct_integrate, reconstruct_route, FullTrajectory, ReconstructionMode,
};
use crate::scenarios::{self, System};

/// Exit code for configuration errors.
pub const EXIT_CONFIG: u8 = 1;
/// Exit code for numerical failures.
pub const EXIT_NUMERICAL: u8 = 2;
/// Exit code when verification fails.
pub const EXIT_VERIFY: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "lpr",
    about = "Symmetry reduction and reconstruction of invariant Lagrangian systems",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a scenario and write trajectory files.
    Run(RunArgs),
    /// Run the full acceptance suite and print a pass/fail table.
    Verify,
    /// List registered scenarios with parameters and initial-condition names.
    ListScenarios,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario id (see `list-scenarios`).
    #[arg(long)]
    scenario: Option<String>,
    /// Scenario parameter, `name=value`; repeatable.
    #[arg(long = "param", value_parser = parse_assignment)]
    params: Vec<(String, f64)>,
    /// Initial condition, `name=value`; repeatable.
    #[arg(long = "ic", value_parser = parse_assignment)]
    ics: Vec<(String, f64)>,
    /// Final time.
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Time step.
    #[arg(long)]
    dt: Option<f64>,
    /// What to integrate and emit.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Output directory.
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
    /// JSON configuration file; explicit flags win on conflict.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Reduced,
    Mech,
    Principal,
    Direct,
    Compare,
}

fn parse_assignment(s: &str) -> std::result::Result<(String, f64), String> {
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let value: f64 = value
        .parse()
        .map_err(|e| format!("bad numeric value in `{s}`: {e}"))?;
    Ok((key.to_string(), value))
}

/// A fully resolved run request.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub ics: BTreeMap<String, f64>,
    pub t_end: f64,
    pub dt: f64,
    pub mode: ModeArg,
    pub output: PathBuf,
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(LprError::Config("dt must be positive".into()));
        }
        if !self.t_end.is_finite() || self.t_end <= 0.0 {
            return Err(LprError::Config("t-end must be positive".into()));
        }
        Ok(())
    }
}

/// Partial configuration as stored in a `--config` JSON file.
#[derive(Debug, Default, Deserialize)]
struct FileConfig {
    scenario: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    #[serde(default)]
    ics: BTreeMap<String, f64>,
    t_end: Option<f64>,
    dt: Option<f64>,
    mode: Option<ModeArg>,
    output: Option<PathBuf>,
}

fn resolve_config(args: &RunArgs) -> Result<RunConfig> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|e| LprError::Config(format!("bad config file: {e}")))?
        }
        None => FileConfig::default(),
    };
    let mut params = file.params;
    for (k, v) in &args.params {
        params.insert(k.clone(), *v);
    }
    let mut ics = file.ics;
    for (k, v) in &args.ics {
        ics.insert(k.clone(), *v);
    }
    let config = RunConfig {
        scenario: args
            .scenario
            .clone()
            .or(file.scenario)
            .ok_or_else(|| LprError::Config("no scenario given".into()))?,
        params,
        ics,
        t_end: args
            .t_end
            .or(file.t_end)
            .ok_or_else(|| LprError::Config("no t-end given".into()))?,
        dt: args
            .dt
            .or(file.dt)
            .ok_or_else(|| LprError::Config("no dt given".into()))?,
        mode: args
            .mode
            .or(file.mode)
            .ok_or_else(|| LprError::Config("no mode given".into()))?,
        output: args
            .output
            .clone()
            .or(file.output)
            .ok_or_else(|| LprError::Config("no output directory given".into()))?,
    };
    config.validate()?;
    Ok(config)
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// CSV for a reduced trajectory:
/// `t,x_1..x_m,v_1..v_m,w_1..w_k,energy,momentum_1..momentum_k`.
pub fn reduced_csv(sys: &System, rt: &ReducedTrajectory) -> Result<String> {
    let m = sys.base_dim();
    let k = sys.fiber_dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|i| format!("x_{i}")));
    header.extend((1..=m).map(|i| format!("v_{i}")));
    header.extend((1..=k).map(|a| format!("w_{a}")));
    header.push("energy".to_string());
    header.extend((1..=k).map(|a| format!("momentum_{a}")));
    let mut out = header.join(",");
    out.push('\n');
    for (i, s) in rt.states.iter().enumerate() {
        let mut row = vec![fmt_float(rt.times[i])];
        row.extend(s.x.iter().map(|v| fmt_float(*v)));
        row.extend(s.v.iter().map(|v| fmt_float(*v)));
        row.extend(s.w.iter().map(|v| fmt_float(*v)));
        row.push(fmt_float(energy(sys, s)?));
        let p = momentum(sys, s)?;
        row.extend(p.iter().map(|v| fmt_float(*v)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// CSV for a full trajectory:
/// `t,x_1..x_m,v_1..v_m,w_1..w_k,g_11..g_nn` (group matrix row-major).
pub fn full_csv(sys: &System, ft: &FullTrajectory) -> String {
    let m = sys.base_dim();
    let k = sys.fiber_dim();
    let n = sys.matrix_dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|i| format!("x_{i}")));
    header.extend((1..=m).map(|i| format!("v_{i}")));
    header.extend((1..=k).map(|a| format!("w_{a}")));
    for r in 1..=n {
        for c in 1..=n {
            header.push(format!("g_{r}{c}"));
        }
    }
    let mut out = header.join(",");
    out.push('\n');
    for (i, s) in ft.states.iter().enumerate() {
        let mut row = vec![fmt_float(ft.times[i])];
        row.extend(s.x.iter().map(|v| fmt_float(*v)));
        row.extend(s.v.iter().map(|v| fmt_float(*v)));
        row.extend(s.w.iter().map(|v| fmt_float(*v)));
        for r in 0..n {
            for c in 0..n {
                row.push(fmt_float(s.g.matrix()[(r, c)]));
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Pairwise route errors and conservation drifts reported by compare mode.
#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub scenario: String,
    pub t_end: f64,
    pub dt: f64,
    pub pairwise_max_error: BTreeMap<String, f64>,
    pub energy_drift: f64,
    pub momentum_drift: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Scale factor applied to comparison tolerances, from `LPR_TOL_SCALE`.
pub fn tol_scale() -> f64 {
    std::env::var("LPR_TOL_SCALE")
        .ok()
        .and_then(|s| s.parse::<f64>().ok())
        .filter(|v| *v > 0.0)
        .unwrap_or(1.0)
}

fn run(config: &RunConfig) -> Result<()> {
    let sys = scenarios::build(&config.scenario, &config.params)?;
    let ic = sys.initial_state(&config.ics)?;
    let out_dir = &config.output;
    match config.mode {
        ModeArg::Reduced => {
            let rt = integrate_reduced(&sys, &ic.reduced(), config.t_end, config.dt)?;
            write_file(&out_dir.join("reduced.csv"), &reduced_csv(&sys, &rt)?)?;
        }
        ModeArg::Mech => {
            let ft =
                reconstruct_route(&sys, &ic, config.t_end, config.dt, ReconstructionMode::Mech)?;
            write_file(&out_dir.join("mech.csv"), &full_csv(&sys, &ft))?;
        }
        ModeArg::Principal => {
            let ft = reconstruct_route(
                &sys,
                &ic,
                config.t_end,
                config.dt,
                ReconstructionMode::Principal,
            )?;
            write_file(&out_dir.join("principal.csv"), &full_csv(&sys, &ft))?;
        }
        ModeArg::Direct => {
            let ft = direct_integrate(&sys, &ic, config.t_end, config.dt)?;
            write_file(&out_dir.join("direct.csv"), &full_csv(&sys, &ft))?;
        }
        ModeArg::Compare => {
            let mech =
                reconstruct_route(&sys, &ic, config.t_end, config.dt, ReconstructionMode::Mech)?;
            let principal = reconstruct_route(
                &sys,
                &ic,
                config.t_end,
                config.dt,
                ReconstructionMode::Principal,
            )?;
            let direct = direct_integrate(&sys, &ic, config.t_end, config.dt)?;
            write_file(&out_dir.join("mech.csv"), &full_csv(&sys, &mech))?;
            write_file(&out_dir.join("principal.csv"), &full_csv(&sys, &principal))?;
            write_file(&out_dir.join("direct.csv"), &full_csv(&sys, &direct))?;

            let rt = integrate_reduced(&sys, &ic.reduced(), config.t_end, config.dt)?;
            let mut pairwise = BTreeMap::new();
            pairwise.insert(
                "mech_vs_principal".to_string(),
                mech.max_distance(&principal)?,
            );
            pairwise.insert("mech_vs_direct".to_string(), mech.max_distance(&direct)?);
            pairwise.insert(
                "principal_vs_direct".to_string(),
                principal.max_distance(&direct)?,
            );
            let tolerance = 1e-6 * tol_scale();
            let worst = pairwise.values().fold(0.0f64, |m, v| m.max(*v));
            let report = CompareReport {
                scenario: sys.id.clone(),
                t_end: config.t_end,
                dt: config.dt,
                pairwise_max_error: pairwise,
                energy_drift: crate::dynamics::energy_drift(&sys, &rt)?,
                momentum_drift: crate::dynamics::momentum_drift(&sys, &rt)?,
                tolerance,
                pass: worst <= tolerance,
            };
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| LprError::Config(format!("report serialization: {e}")))?;
            write_file(&out_dir.join("report.json"), &(json + "\n"))?;
        }
    }
    Ok(())
}

fn verify() -> Result<bool> {
    let results = acceptance::run_all(tol_scale())?;
    let mut all_pass = true;
    for r in &results {
        println!("{}", r.line());
        all_pass &= r.passed;
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} criteria passed", results.len());
    Ok(all_pass)
}

fn list_scenarios() -> Result<()> {
    for (id, description) in scenarios::registry() {
        let sys = scenarios::build(id, &BTreeMap::new())?;
        println!("{id}: {description}");
        if !sys.params.is_empty() {
            let params: Vec<String> = sys.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!("  params: {}", params.join(", "));
        }
        let ics: Vec<String> = sys
            .default_ics()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        println!("  ics: {}", ics.join(", "));
    }
    Ok(())
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version through errors with exit code 0.
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Run(args) => {
            let config = match resolve_config(&args) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            };
            match run(&config) {
                Ok(()) => 0,
                Err(e @ (LprError::Config(_) | LprError::UnknownScenario { .. })) => {
                    eprintln!("error: {e}");
                    EXIT_CONFIG
                }
                Err(e) => {
                    eprintln!("numerical failure: {e}");
                    EXIT_NUMERICAL
                }
            }
        }
        Command::Verify => match verify() {
            Ok(true) => 0,
            Ok(false) => EXIT_VERIFY,
            Err(e) => {
                eprintln!("verification aborted: {e}");
                EXIT_VERIFY
            }
        },
        Command::ListScenarios => match list_scenarios() {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_CONFIG
            }
        },
    }
}
