use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use paleo_xval::io::ExperimentConfig;
use paleo_xval_cli::{
    cmd_crossval, cmd_figure2, cmd_limit, cmd_synth, load_config, Overrides, SynthOptions,
};

/// Holdout-block ridge reconstructions from proxies and noise pseudoproxies.
#[derive(Debug, Parser)]
#[command(name = "paleo-xval", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cross-validated RMSE of the proxies and one realization per noise experiment.
    Crossval(RunArgs),
    /// White and AR(1) ensembles against the large-p limit and simple kriging.
    Figure2(RunArgs),
    /// Convergence of AR(1) noise reconstructions to the limit as p grows.
    Limit(RunArgs),
    /// Writes a synthetic target, proxies and config.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON config (a previous run's manifest.json also works).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Target series CSV (`year,value`).
    #[arg(long)]
    target: Option<PathBuf>,
    /// Proxy matrix CSV (`year,<id>,...`).
    #[arg(long)]
    proxies: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Holdout block length.
    #[arg(long)]
    nv: Option<usize>,
    /// Ensemble size.
    #[arg(long)]
    ensemble: Option<usize>,
    /// AR(1) coefficients, comma separated; a single value also sets the
    /// limit coefficient.
    #[arg(long, value_delimiter = ',')]
    phi: Option<Vec<f64>>,
    /// Monte Carlo columns for the limit estimate.
    #[arg(long)]
    mc_columns: Option<usize>,
    /// Skip constant proxy columns instead of failing.
    #[arg(long)]
    drop_degenerate: bool,
    /// Subtract the target mean before fitting.
    #[arg(long)]
    center_target: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 149)]
    n: usize,
    #[arg(long, default_value_t = 1850)]
    first_year: i32,
    /// Proxy columns; 0 writes only the target.
    #[arg(long, default_value_t = 1138)]
    p: usize,
    /// Target-to-noise amplitude ratio of each proxy.
    #[arg(long, default_value_t = 0.4)]
    snr: f64,
    /// AR(1) coefficient of the proxy noise.
    #[arg(long, default_value_t = 0.5)]
    phi: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "synthetic")]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentConfig::default(),
        };
        Overrides {
            target: self.target.clone(),
            proxies: self.proxies.clone(),
            seed: self.seed,
            n_v: self.nv,
            ensemble: self.ensemble,
            phi: self.phi.clone(),
            mc_columns: self.mc_columns,
            drop_degenerate: self.drop_degenerate,
            center_target: self.center_target,
            out: self.out.clone(),
        }
        .apply(&mut cfg);
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Crossval(args) => print!("{}", cmd_crossval(&args.config()?)?.table()),
        Command::Figure2(args) => print!("{}", cmd_figure2(&args.config()?)?.table()),
        Command::Limit(args) => print!("{}", cmd_limit(&args.config()?)?.table()),
        Command::Synth(a) => {
            let opts = SynthOptions {
                n: a.n,
                first_year: a.first_year,
                p: a.p,
                snr: a.snr,
                phi: a.phi,
                seed: a.seed,
                out: a.out,
            };
            for f in cmd_synth(&opts)? {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
