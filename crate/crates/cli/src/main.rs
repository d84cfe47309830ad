use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semtrade_cli::commands::{eval_metrics, market_sweep, train_dla, truthfulness, verify, RunSummary};
use semtrade_cli::config::Config;
use semtrade_cli::engines::read_params;
use semtrade_cli::error::{CliError, CliResult};
use semtrade_cli::output::OutDir;

#[derive(Parser)]
#[command(name = "semtrade", version, about = "Auctions for semantic model and information trading")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train the learned auction and compare its revenue with SPA.
    TrainDla {
        #[command(flatten)]
        common: Common,
    },
    /// Double-auction utilities and win counts over the buyer-count sweep.
    MarketSweep {
        #[command(flatten)]
        common: Common,
        /// Saved network to use instead of training one per buyer count.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Seller ask and buyer bid deviation sweeps.
    TruthfulnessSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Per-line BLEU and sentence similarity of two text files.
    EvalMetrics {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
    },
    /// Run the property suite and print a pass/fail table.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Saved network to include in the market and truthfulness checks.
        #[arg(long)]
        params: Option<PathBuf>,
    },
}

fn load(common: &Common) -> CliResult<Config> {
    let mut cfg = Config::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn with_params(flag: Option<PathBuf>, configured: Option<&Path>) -> CliResult<Option<(PathBuf, semtrade_core::monotone::MonotoneNetParams)>> {
    match flag.or_else(|| configured.map(Path::to_path_buf)) {
        Some(path) => {
            let p = read_params(&path)?;
            Ok(Some((path, p)))
        }
        None => Ok(None),
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let (name, common) = match &cli.command {
        Command::TrainDla { common } => ("train-dla", common),
        Command::MarketSweep { common, .. } => ("market-sweep", common),
        Command::TruthfulnessSweep { common, .. } => ("truthfulness-sweep", common),
        Command::EvalMetrics { common, .. } => ("eval-metrics", common),
        Command::Verify { common, .. } => ("verify", common),
    };
    let cfg = load(common)?;
    let mut out = OutDir::create(&common.out)?;
    let mut summary: RunSummary = match cli.command {
        Command::TrainDla { .. } => train_dla::run(&cfg, &mut out)?,
        Command::MarketSweep { params, .. } => {
            let saved = with_params(params, cfg.market.dla_params.as_deref())?;
            tagged(market_sweep::run(&cfg, saved.as_ref().map(|s| &s.1), &mut out)?, &saved)
        }
        Command::TruthfulnessSweep { params, .. } => {
            let saved = with_params(params, cfg.market.dla_params.as_deref())?;
            tagged(truthfulness::run(&cfg, saved.as_ref().map(|s| &s.1), &mut out)?, &saved)
        }
        Command::EvalMetrics { reference, candidate, .. } => eval_metrics::run(&cfg.metrics, &reference, &candidate, &mut out)?,
        Command::Verify { params, .. } => {
            let saved = with_params(params, cfg.verify.engine_params.as_deref())?;
            tagged(verify::run(&cfg, saved.as_ref().map(|s| &s.1), &mut out)?, &saved)
        }
    };
    let failure = summary.failure.take();
    out.finish(name, &cfg.hash(), cfg.seed, &summary.extras)?;
    match failure {
        Some(msg) => Err(CliError::Check(msg)),
        None => Ok(()),
    }
}

fn tagged<T>(mut summary: RunSummary, saved: &Option<(PathBuf, T)>) -> RunSummary {
    if let Some((path, _)) = saved {
        summary.extras.push(("params_file".into(), path.display().to_string()));
    }
    summary
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("semtrade: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
