use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wapmc_cli::commands::{cmd_diagnose, cmd_fit, cmd_simulate, RunManifest, SimulateArgs};
use wapmc_cli::{init_thread_pool, FitOverrides, FitSettings, KeyValues};
use wapmc_core::{BasisKind, ModelKind};

#[derive(Parser)]
#[command(name = "wapmc", version, about = "Joint Weibull-and-Poisson spatial model fitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to an areal data CSV and write the run artifacts.
    Fit {
        /// Input CSV; may be omitted with --manifest.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        model: Option<ModelKind>,
        #[arg(long)]
        basis: Option<BasisKind>,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        burnin: Option<usize>,
        #[arg(long)]
        thin: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Flat key=value settings file; flags win over it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Replay the data and settings of an earlier run.
        #[arg(long, conflicts_with = "config")]
        manifest: Option<PathBuf>,
    },
    /// Run the joint-versus-separate comparison study.
    Simulate {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report DIC, predictive checks and interval summaries of a fit.
    Diagnose {
        #[arg(long)]
        run: PathBuf,
        #[arg(long = "ppp-B")]
        ppp_b: Option<usize>,
    },
}

fn run(cli: Cli) -> wapmc_cli::Result<()> {
    match cli.command {
        Command::Fit {
            data,
            model,
            basis,
            r,
            iters,
            burnin,
            thin,
            seed,
            out,
            config,
            manifest,
        } => {
            let (mut settings, recorded_data) = match &manifest {
                Some(path) => {
                    let m = RunManifest::read(path)?;
                    (m.settings, Some(m.data))
                }
                None => (FitSettings::default(), None),
            };
            if let Some(path) = &config {
                settings.apply_file(&KeyValues::read(path)?)?;
            }
            settings.apply_overrides(&FitOverrides {
                model,
                basis,
                r,
                iters,
                burnin,
                thin,
                seed,
            });
            let data = data.or(recorded_data).ok_or_else(|| {
                wapmc_cli::CliError::Argument("fit needs --data or --manifest".into())
            })?;
            let dir = cmd_fit(&data, &settings, &out)?;
            println!("wrote {}", dir.display());
        }
        Command::Simulate {
            grid,
            reps,
            seed,
            out,
        } => {
            let res = cmd_simulate(&SimulateArgs {
                grid,
                reps,
                seed,
                out: out.clone(),
            })?;
            let failed: usize = res.cells.iter().map(|c| c.failures.len()).sum();
            println!("{} cells written to {} ({failed} failed replicates)", res.cells.len(), out.display());
        }
        Command::Diagnose { run, ppp_b } => {
            let report = cmd_diagnose(&run, ppp_b)?;
            print!("{}", report.text);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = init_thread_pool() {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
