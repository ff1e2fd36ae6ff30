use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use biphoton_cli::acceptance::{self, run_suite};
use biphoton_cli::config::{ExperimentConfig, ExperimentKind};
use biphoton_cli::csvio::read_csv;
use biphoton_cli::experiments::run_experiment;
use biphoton_cli::CliError;
use biphoton_core::fitting::{fit_fringe, fit_hom};

/// Simulator and analysis toolkit for two-photon interference experiments in
/// a programmable silicon photonic circuit.
#[derive(Parser)]
#[command(name = "biphoton", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file and write its CSV.
    Run {
        /// Path to a TOML experiment config.
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite and print one pass/fail line per criterion.
    Accept {
        /// Master seed of the suite.
        #[arg(long, default_value_t = acceptance::DEFAULT_SEED)]
        seed: u64,
    },
    /// Fit a fringe or HOM-dip model to an existing CSV file.
    Fit {
        /// CSV file in one of the formats written by `run`.
        csv: PathBuf,
        /// Model family to fit.
        #[arg(long)]
        model: FitModel,
    },
    /// List the experiment names accepted in config files.
    ListExperiments,
}

#[derive(Clone, Copy, ValueEnum)]
enum FitModel {
    Fringe,
    Hom,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let master_seed = seed.unwrap_or(cfg.seed);
            let output_path = out.unwrap_or_else(|| cfg.output.clone());
            let run = run_experiment(&cfg, master_seed)?;
            run.dataset.write(&output_path)?;
            for line in run.summary_lines() {
                println!("{line}");
            }
            println!("wrote {}", output_path.display());
            Ok(())
        }
        Command::Accept { seed } => {
            let report = run_suite(seed);
            for outcome in &report.outcomes {
                println!("{}", outcome.line());
            }
            if report.all_passed() {
                println!("acceptance: all {} criteria passed", report.outcomes.len());
                Ok(())
            } else {
                let failed = report.outcomes.iter().filter(|o| !o.passed).count();
                Err(CliError::Core(
                    biphoton_core::error::Error::InvalidParameter(format!(
                        "{failed} acceptance criteria failed"
                    )),
                ))
            }
        }
        Command::Fit { csv, model } => {
            let table = read_csv(&csv)?;
            match model {
                FitModel::Fringe => {
                    let x_col = table.columns[0].clone();
                    let samples = table.xy(&x_col, "coincidences")?;
                    let fit = fit_fringe(&samples).map_err(CliError::from)?;
                    println!(
                        "fringe fit: visibility={:.6} offset={:.3} period={:.6} phase={:.6} rms={:.4}",
                        fit.raw_visibility(),
                        fit.offset,
                        fit.period,
                        fit.phase,
                        fit.residual_rms
                    );
                }
                FitModel::Hom => {
                    let x_col = table.columns[0].clone();
                    let samples = table.xy(&x_col, "coincidences")?;
                    let fit = fit_hom(&samples).map_err(CliError::from)?;
                    println!(
                        "hom fit: visibility={:.6} baseline={:.3} width={:.4} GHz center={:.4} ps rms={:.4}",
                        fit.visibility, fit.baseline, fit.fwhm_ghz, fit.delay_offset_ps, fit.residual_rms
                    );
                }
            }
            Ok(())
        }
        Command::ListExperiments => {
            for kind in ExperimentKind::all() {
                println!("{}", kind.name());
            }
            Ok(())
        }
    }
}
