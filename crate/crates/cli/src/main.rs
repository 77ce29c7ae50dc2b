// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::HashSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "carbon-risk", version, about = "Carbon risk factors, betas and low-carbon portfolios")]
struct Cli {
    /// `key = value` file whose entries fill in flags not given on the command line.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the brown-minus-green factor from scores, caps and returns.
    BuildBmg(BuildBmgArgs),
    /// Static factor regressions, nested-model tests and factor statistics.
    FitOls(FitOlsArgs),
    /// Time-varying betas by maximum likelihood on the state-space model.
    FitKalman(FitKalmanArgs),
    /// Minimum variance portfolios, with optional carbon constraints.
    OptimizeMv(OptimizeMvArgs),
    /// Tracking-error minimization against a benchmark.
    OptimizeIndex(OptimizeIndexArgs),
    /// Write a seeded synthetic data set in the standard formats.
    Synth(SynthArgs),
    /// Summarize the outputs found in a run directory.
    Report(ReportArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum WeightingArg {
    Cap,
    Equal,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RebalanceArg {
    Monthly,
    Static,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SourceArg {
    Bgs,
    Generic,
}

#[derive(Args, Debug)]
struct BuildBmgArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    caps: PathBuf,
    #[arg(long)]
    returns: PathBuf,
    /// Output factor file (`date,factor,return`).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "cap")]
    weighting: WeightingArg,
    #[arg(long, value_enum, default_value = "monthly")]
    rebalance: RebalanceArg,
    #[arg(long, value_enum, default_value = "bgs")]
    source: SourceArg,
    /// Treat low scores as brown.
    #[arg(long)]
    brown_low: bool,
    #[arg(long, default_value = "BMG")]
    name: String,
    /// Existing factor file to merge the new factor into.
    #[arg(long)]
    merge: Option<PathBuf>,
    /// Also emit the GARCH(1,1)-standardized factor as `<name>_GARCH`.
    #[arg(long)]
    garch: bool,
}

#[derive(Args, Debug)]
struct FitOlsArgs {
    #[arg(long)]
    returns: PathBuf,
    #[arg(long)]
    factors: PathBuf,
    /// Models separated by `;`, factors within a model by `+`.
    #[arg(long, value_delimiter = ';', required = true)]
    models: Vec<String>,
    #[arg(long, default_value_t = carbon_risk::regression::MIN_OLS_OBS)]
    min_obs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FitKalmanArgs {
    #[arg(long)]
    returns: PathBuf,
    #[arg(long)]
    factors: PathBuf,
    /// Regressors besides the intercept, e.g. `MKT+BMG`.
    #[arg(long, default_value = "MKT+BMG")]
    model: String,
    #[arg(long, default_value_t = carbon_risk::kalman::DEFAULT_BURN_IN)]
    burn_in: usize,
    /// `asset,group` file for aggregated beta paths.
    #[arg(long)]
    groups: Option<PathBuf>,
    #[arg(long, default_value = "mean")]
    aggregate: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct OptimizeMvArgs {
    /// `asset,beta_mkt,beta_bmg,idio_vol[,intensity][,cap][,group]`
    #[arg(long)]
    universe: PathBuf,
    #[arg(long)]
    sigma_mkt: f64,
    #[arg(long)]
    sigma_bmg: f64,
    /// Only report long-only portfolios.
    #[arg(long)]
    long_only: bool,
    /// Cap on the portfolio carbon beta.
    #[arg(long, allow_hyphen_values = true)]
    beta_cap: Option<f64>,
    /// Exclude assets whose carbon intensity exceeds this value.
    #[arg(long)]
    ci_cap: Option<f64>,
    /// Carbon-beta caps `start:stop:step`.
    #[arg(long, allow_hyphen_values = true)]
    sweep: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ConstraintArg {
    None,
    Relative,
    Absolute,
    ExcludeM,
    ExcludeWeightedM,
}

#[derive(Args, Debug)]
struct OptimizeIndexArgs {
    #[arg(long)]
    universe: PathBuf,
    #[arg(long)]
    sigma_mkt: f64,
    #[arg(long)]
    sigma_bmg: f64,
    /// `ew`, `cw`, or an `asset,weight` file.
    #[arg(long, default_value = "ew")]
    benchmark: String,
    #[arg(long, value_enum, default_value = "relative")]
    constraint: ConstraintArg,
    #[arg(long, allow_hyphen_values = true)]
    cap: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    /// Carbon-beta reductions `start:stop:step` relative to the benchmark.
    #[arg(long, allow_hyphen_values = true)]
    sweep: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 50)]
    assets: usize,
    #[arg(long, default_value_t = 120)]
    months: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Monthly random-walk step of the market betas.
    #[arg(long, default_value_t = 0.0)]
    mkt_step: f64,
    /// Monthly random-walk step of the carbon betas.
    #[arg(long, default_value_t = 0.0)]
    bmg_step: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    dir: PathBuf,
}

/// Appends `--key value` for config entries whose flag is not already present.
fn with_config(args: Vec<String>) -> anyhow::Result<Vec<String>> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let path = match args[pos].split_once('=') {
        Some((_, p)) => p.to_string(),
        None => args
            .get(pos + 1)
            .cloned()
            .ok_or_else(|| anyhow::anyhow!("--config needs a path"))?,
    };
    let kv = carbon_risk::io::read_key_values(std::path::Path::new(&path))?;
    let given: HashSet<String> = args
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    let mut out = args;
    for (k, v) in kv {
        if given.contains(&k) {
            continue;
        }
        match v.as_str() {
            "true" => out.push(format!("--{k}")),
            "false" => {}
            _ => out.push(format!("--{k}={v}")),
        }
    }
    Ok(out)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use carbon_risk::ErrorKind;
    match err.chain().find_map(|e| e.downcast_ref::<carbon_risk::Error>()).map(|e| e.kind()) {
        Some(ErrorKind::Infeasible) => 3,
        Some(ErrorKind::Numerical) => 4,
        _ => 2,
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("CARBON_BETA_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow::anyhow!("CARBON_BETA_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    match cli.command {
        Command::BuildBmg(a) => commands::build_bmg(a),
        Command::FitOls(a) => commands::fit_ols(a),
        Command::FitKalman(a) => commands::fit_kalman(a),
        Command::OptimizeMv(a) => commands::optimize_mv(a),
        Command::OptimizeIndex(a) => commands::optimize_index(a),
        Command::Synth(a) => commands::synth(a),
        Command::Report(a) => commands::report(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match with_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
