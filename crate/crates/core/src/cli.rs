//! Command-line front end. Every subcommand is a thin wrapper over the
//! library; settings come from defaults, then an optional TOML file, then flags.

use std::ffi::OsString;
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::bellfn::{catalog, primary_functional, standardized_set, CATALOG_NAMES};
use crate::error::{Error, Result};
use crate::gainrates::{gain_curve, write_gain_table, Sweep};
use crate::optim::OptimizerControls;
use crate::protocols::{
    run_full_pbr, run_martingale, run_simplified_pbr, write_report_file, ReportRow,
    DEFAULT_BLOCK_SIZE, DEFAULT_FULL_PBR_FLOOR,
};
use crate::quantum::named_config;
use crate::scenario::{
    distribution_to_json, parse_scenario, read_distribution, read_trial_header, read_trials,
    write_trials, Scenario,
};
use crate::sim::{
    parse_protocols, run_experiment, run_seeds, write_experiment, write_seed_summary, Protocol,
    SimulationPlan,
};

#[derive(Debug, Parser)]
#[command(name = "bellpbr", version, about = "p-value certificates for Bell tests")]
pub struct Cli {
    /// TOML file with default values for any flag (flags win).
    #[arg(long, global = true, value_name = "PATH")]
    pub config_file: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run protocols on recorded trials.
    Analyze(AnalyzeArgs),
    /// Sample trials from a source and run protocols on them.
    Simulate(SimulateArgs),
    /// Tabulate asymptotic gain rates over a parameter sweep.
    Gain(GainArgs),
    /// Emit the trial distribution of a named quantum configuration.
    Quantum(QuantumArgs),
    /// List the shipped Bell functions.
    Catalog(CatalogArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct OptimizerArgs {
    /// Stopping tolerance on the certified optimality gap.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Uniform floor mixed into the full-PBR estimate.
    #[arg(long)]
    pub floor: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Trial file (JSON lines).
    pub input: PathBuf,
    /// `l,s,d`; defaults to the file's header.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Comma-separated catalog names.
    #[arg(long)]
    pub functions: Option<String>,
    /// Comma-separated subset of mart, spbr, fpbr.
    #[arg(long)]
    pub protocol: Option<String>,
    #[arg(long)]
    pub block: Option<usize>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Directory for running reports.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report every k-th trial (the last trial is always reported).
    #[arg(long)]
    pub every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Named quantum configuration such as `cglmp:3` or `chsh:0.7854`.
    #[arg(long)]
    pub config: Option<String>,
    /// Distribution file to sample from instead of a named configuration.
    #[arg(long, conflicts_with = "config")]
    pub distribution: Option<PathBuf>,
    #[arg(long)]
    pub functions: Option<String>,
    #[arg(long)]
    pub protocol: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub block: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of consecutive seeds starting at `--seed`.
    #[arg(long)]
    pub seeds: Option<u64>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub every: Option<usize>,
    /// Also write the sampled trials (single-seed runs only).
    #[arg(long)]
    pub save_trials: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GainArgs {
    /// `cglmp`, `chsh` or `chsh-ns` (CHSH plus no-signaling functionals).
    #[arg(long)]
    pub sweep: Option<String>,
    /// Dimensions for the CGLMP sweep: `2..7`, `2..=7` or `3,5`.
    #[arg(long)]
    pub d: Option<String>,
    /// Angles for the CHSH sweeps: comma-separated, `pi/8` style allowed.
    #[arg(long)]
    pub theta: Option<String>,
    /// Skip the optimal rate `S_q`.
    #[arg(long)]
    pub no_optimal: bool,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Output file (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QuantumArgs {
    #[arg(long)]
    pub config: Option<String>,
    /// Output file (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    /// Also list the concrete functionals with their bounds for `l,s,d`.
    #[arg(long)]
    pub scenario: Option<String>,
}

/// Keys accepted in the `--config-file` TOML; they mirror the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub scenario: Option<String>,
    pub functions: Option<String>,
    pub protocol: Option<String>,
    pub block: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub floor: Option<f64>,
    pub seed: Option<u64>,
    pub seeds: Option<u64>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
    pub every: Option<usize>,
    pub sweep: Option<String>,
    pub d: Option<String>,
    pub theta: Option<String>,
    pub config: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e
                .span()
                .map_or(0, |s| text[..s.start].lines().count().max(1)),
            message: e.message().to_string(),
        })
    }
}

/// Exit status for an error: 2 for unparsable input or unknown names,
/// 3 for data that does not fit the scenario, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. }
        | Error::Json(_)
        | Error::UnknownFunctional(_)
        | Error::InvalidScenario(_)
        | Error::InvalidInput(_) => 2,
        Error::ScenarioMismatch(_) | Error::EmptyTrials | Error::OutOfRange(_) => 3,
        _ => 1,
    }
}

/// Parses arguments and runs; returns the process exit status.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: Cli, out: &mut impl Write, err: &mut impl Write) -> Result<()> {
    let file = match &cli.config_file {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Analyze(args) => cmd_analyze(args, &file, out, err),
        Command::Simulate(args) => cmd_simulate(args, &file, out, err),
        Command::Gain(args) => cmd_gain(args, &file, out),
        Command::Quantum(args) => cmd_quantum(args, &file, out),
        Command::Catalog(args) => cmd_catalog(args, &file, out),
    }
}

fn io_out(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn controls(args: &OptimizerArgs, file: &FileConfig, default_floor: f64) -> Result<OptimizerControls> {
    let base = OptimizerControls::default();
    let c = OptimizerControls {
        tolerance: args.tol.or(file.tol).unwrap_or(base.tolerance),
        max_iterations: args.max_iter.or(file.max_iter).unwrap_or(base.max_iterations),
        floor: args.floor.or(file.floor).unwrap_or(default_floor),
    };
    c.validate()?;
    Ok(c)
}

/// Catalog names used when `--functions` is absent.
fn default_functions(scenario: &Scenario) -> Result<String> {
    match (scenario.parties(), scenario.settings(), scenario.outcomes()) {
        (2, 2, 2) => Ok("chsh".into()),
        (2, 2, d) if d > 2 => Ok(format!("cglmp:{d}")),
        _ => Err(Error::InvalidInput(
            "no default Bell function for this scenario; pass --functions".into(),
        )),
    }
}

fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

fn protocols_or_default(flag: &Option<String>, file: &FileConfig) -> Result<Vec<Protocol>> {
    match pick(flag, &file.protocol) {
        Some(text) => parse_protocols(&text),
        None => Ok(Protocol::ALL.to_vec()),
    }
}

fn summary_line(out: &mut impl Write, protocol: Protocol, row: Option<&ReportRow>) -> Result<()> {
    match row {
        Some(r) => writeln!(
            out,
            "{protocol}: n={} statistic={} p_value={:e} log2_p={}",
            r.n, r.statistic, r.p_value, r.log2_p
        ),
        None => writeln!(out, "{protocol}: n=0 p_value=1"),
    }
    .map_err(io_out)
}

fn cmd_analyze(args: AnalyzeArgs, file: &FileConfig, out: &mut impl Write, err: &mut impl Write) -> Result<()> {
    let scenario = match pick(&args.scenario, &file.scenario) {
        Some(text) => parse_scenario(&text)?,
        None => read_trial_header(&args.input)?.ok_or_else(|| {
            Error::InvalidInput(format!(
                "{} has no scenario header; pass --scenario",
                args.input.display()
            ))
        })?,
    };
    let trials = read_trials(&args.input, &scenario)?;
    if trials.is_empty() {
        return Err(Error::EmptyTrials);
    }
    let functions = match pick(&args.functions, &file.functions) {
        Some(f) => f,
        None => default_functions(&scenario)?,
    };
    let protocols = protocols_or_default(&args.protocol, file)?;
    let block = args.block.or(file.block).unwrap_or(DEFAULT_BLOCK_SIZE);
    let every = args.every.or(file.every);
    let out_dir = pick(&args.out, &file.out);
    if let Some(dir) = &out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    // validate all names before running anything
    let set = standardized_set(&functions, &scenario)?;
    for protocol in protocols {
        let (rows, warned, zero) = match protocol {
            Protocol::Mart => {
                let f = primary_functional(&functions, &scenario)?;
                (run_martingale(&trials, &f)?.history, false, false)
            }
            Protocol::Spbr => {
                let c = controls(&args.optimizer, file, 0.0)?;
                let s = run_simplified_pbr(&trials, set.clone(), block, &c)?;
                (s.history, s.optimizer_warning, s.zero_ratio)
            }
            Protocol::Fpbr => {
                let c = controls(&args.optimizer, file, DEFAULT_FULL_PBR_FLOOR)?;
                let s = run_full_pbr(&trials, &scenario, block, &c)?;
                (s.history, s.optimizer_warning, s.zero_ratio)
            }
        };
        if warned {
            let _ = writeln!(err, "warning: {protocol}: optimizer hit the iteration limit in some block");
        }
        if zero {
            let _ = writeln!(err, "warning: {protocol}: a trial scored a zero ratio; p-value is 1");
        }
        summary_line(out, protocol, rows.last())?;
        if let Some(dir) = &out_dir {
            write_report_file(dir.join(format!("{protocol}.csv")), &rows, every)?;
        }
    }
    Ok(())
}

fn simulation_plan(args: &SimulateArgs, file: &FileConfig) -> Result<SimulationPlan> {
    let (source, distribution) = if let Some(path) = &args.distribution {
        (path.display().to_string(), read_distribution(path)?)
    } else {
        let name = pick(&args.config, &file.config)
            .ok_or_else(|| Error::InvalidInput("pass --config or --distribution".into()))?;
        let cfg = named_config(&name)?;
        (name, cfg.distribution()?)
    };
    let functions = match pick(&args.functions, &file.functions) {
        Some(f) => f,
        None => default_functions(distribution.scenario())?,
    };
    let mut plan = SimulationPlan::new(source, distribution, functions);
    plan.protocols = protocols_or_default(&args.protocol, file)?;
    plan.trials = args.trials.or(file.trials).unwrap_or(plan.trials);
    plan.block_size = args.block.or(file.block).unwrap_or(plan.block_size);
    plan.seed = args.seed.or(file.seed).unwrap_or(plan.seed);
    plan.controls = controls(&args.optimizer, file, 0.0)?;
    plan.full_floor = args.optimizer.floor.or(file.floor).unwrap_or(DEFAULT_FULL_PBR_FLOOR);
    // check names up front so errors surface before sampling
    standardized_set(&plan.functions, plan.distribution.scenario())?;
    if plan.protocols.contains(&Protocol::Mart) {
        plan.martingale_functional()?;
    }
    Ok(plan)
}

fn cmd_simulate(args: SimulateArgs, file: &FileConfig, out: &mut impl Write, err: &mut impl Write) -> Result<()> {
    let plan = simulation_plan(&args, file)?;
    let every = args.every.or(file.every).unwrap_or(1);
    let seeds = args.seeds.or(file.seeds).unwrap_or(1);
    let out_dir = pick(&args.out, &file.out);
    if seeds == 0 {
        return Err(Error::InvalidInput("--seeds must be at least 1".into()));
    }
    if seeds == 1 {
        if let Some(path) = &args.save_trials {
            let trials = crate::sim::sample_trials(&plan.distribution, plan.trials, plan.seed)?;
            write_trials(path, plan.distribution.scenario(), &trials)?;
        }
        let report = run_experiment(&plan)?;
        writeln!(out, "{}", report.header()).map_err(io_out)?;
        for run in &report.runs {
            if run.optimizer_warning {
                let _ = writeln!(err, "warning: {}: optimizer hit the iteration limit in some block", run.protocol);
            }
            summary_line(out, run.protocol, run.rows.last())?;
            if let Some(rate) = run.rate {
                writeln!(out, "{}: asymptotic rate {rate} bits/trial", run.protocol).map_err(io_out)?;
            }
        }
        if let Some(dir) = &out_dir {
            write_experiment(dir, &report, every)?;
        }
        return Ok(());
    }
    if args.save_trials.is_some() {
        return Err(Error::InvalidInput("--save-trials needs a single seed".into()));
    }
    let list: Vec<u64> = (plan.seed..plan.seed + seeds).collect();
    let reports = run_seeds(&plan, &list)?;
    let mut buf = Vec::new();
    write_seed_summary(&mut buf, &reports).map_err(io_out)?;
    out.write_all(&buf).map_err(io_out)?;
    if let Some(dir) = &out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("summary.csv");
        std::fs::write(&path, &buf).map_err(|e| Error::io(&path, e))?;
        for report in &reports {
            write_experiment(dir.join(format!("seed-{}", report.seed)), report, every)?;
        }
    }
    Ok(())
}

/// `2..7` (inclusive), `2..=7`, `5` or `3,5`.
pub fn parse_dims(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidInput(format!("cannot parse dimension list `{text}`"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        let (lo, hi) = (num(lo)?, num(hi)?);
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',').map(num).collect()
}

/// A float, or `pi`, `pi/8`, `3pi/16`, `3*pi/16`.
pub fn parse_angle(text: &str) -> Result<f64> {
    let t = text.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let bad = || Error::InvalidInput(format!("cannot parse angle `{text}`"));
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim().parse::<f64>().map_err(|_| bad())?),
        None => (t, 1.0),
    };
    let coeff = num
        .strip_suffix("pi")
        .map(|c| c.trim().trim_end_matches('*').trim())
        .ok_or_else(bad)?;
    let coeff = if coeff.is_empty() {
        1.0
    } else {
        coeff.parse::<f64>().map_err(|_| bad())?
    };
    Ok(coeff * PI / den)
}

fn cmd_gain(args: GainArgs, file: &FileConfig, out: &mut impl Write) -> Result<()> {
    let sweep_name = pick(&args.sweep, &file.sweep).unwrap_or_else(|| "cglmp".into());
    let sweep = match sweep_name.as_str() {
        "cglmp" => Sweep::Cglmp {
            dims: parse_dims(&pick(&args.d, &file.d).unwrap_or_else(|| "2..7".into()))?,
        },
        "chsh" | "chsh-ns" => {
            let thetas = pick(&args.theta, &file.theta).unwrap_or_else(|| "pi/16,pi/8,3pi/16,pi/4".into());
            Sweep::Chsh {
                thetas: thetas.split(',').map(parse_angle).collect::<Result<_>>()?,
                no_signaling: sweep_name == "chsh-ns",
            }
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown sweep `{other}` (expected cglmp, chsh or chsh-ns)"
            )))
        }
    };
    let controls = controls(&args.optimizer, file, 0.0)?;
    let reports = gain_curve(&sweep, !args.no_optimal, &controls)?;
    let mut buf = Vec::new();
    write_gain_table(&mut buf, &reports).map_err(io_out)?;
    match pick(&args.out, &file.out) {
        Some(path) => std::fs::write(&path, buf).map_err(|e| Error::io(&path, e)),
        None => out.write_all(&buf).map_err(io_out),
    }
}

fn cmd_quantum(args: QuantumArgs, file: &FileConfig, out: &mut impl Write) -> Result<()> {
    let name = pick(&args.config, &file.config)
        .ok_or_else(|| Error::InvalidInput("pass --config, e.g. chsh:0.7854 or cglmp:3".into()))?;
    let dist = named_config(&name)?.distribution()?;
    let text = distribution_to_json(&dist)? + "\n";
    match pick(&args.out, &file.out) {
        Some(path) => std::fs::write(&path, text).map_err(|e| Error::io(&path, e)),
        None => out.write_all(text.as_bytes()).map_err(io_out),
    }
}

fn cmd_catalog(args: CatalogArgs, file: &FileConfig, out: &mut impl Write) -> Result<()> {
    let Some(text) = pick(&args.scenario, &file.scenario) else {
        for name in CATALOG_NAMES {
            writeln!(out, "{name}").map_err(io_out)?;
        }
        return Ok(());
    };
    let scenario = parse_scenario(&text)?;
    writeln!(out, "name,B,b,a").map_err(io_out)?;
    for name in CATALOG_NAMES {
        let name = name.replace("<d>", &scenario.outcomes().to_string());
        // names that do not apply to this scenario are skipped
        let Ok(functionals) = catalog(&name, &scenario) else {
            continue;
        };
        for f in functionals {
            writeln!(out, "{},{},{},{}", f.name(), f.bound(), f.inf(), f.sup()).map_err(io_out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_and_angles() {
        assert_eq!(parse_dims("2..7").unwrap(), vec![2, 3, 4, 5, 6, 7]);
        assert_eq!(parse_dims("2..=4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_dims("3,5").unwrap(), vec![3, 5]);
        assert!(parse_dims("7..2").is_err());
        assert!((parse_angle("pi/8").unwrap() - PI / 8.0).abs() < 1e-15);
        assert!((parse_angle("3pi/16").unwrap() - 3.0 * PI / 16.0).abs() < 1e-15);
        assert!((parse_angle("3*pi/16").unwrap() - 3.0 * PI / 16.0).abs() < 1e-15);
        assert_eq!(parse_angle("0.5").unwrap(), 0.5);
        assert!(parse_angle("tau").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::UnknownFunctional("x".into())), 2);
        assert_eq!(exit_code(&Error::EmptyTrials), 3);
        assert_eq!(exit_code(&Error::SizeLimit("x".into())), 1);
    }

    #[test]
    fn file_config_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "block = 10\nbogus = 1\n").unwrap();
        assert!(matches!(FileConfig::load(&path), Err(Error::Parse { .. })));
        std::fs::write(&path, "block = 10\nmax-iter = 50\n").unwrap();
        let cfg = FileConfig::load(&path).unwrap();
        assert_eq!((cfg.block, cfg.max_iter), (Some(10), Some(50)));
    }
}
