//! Experiment harness for the block stochastic gradient toolkit.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime or numeric
//! failure.

mod check;
mod config;
mod report;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use blockgrad::problems::{io, BilinearLogisticInstance, LogisticInstance};
use config::ExperimentConfig;
use runner::CliError;

#[derive(Parser)]
#[command(name = "blockgrad", about = "Block stochastic gradient experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (solver, trial) combination of a config file and persist
    /// traces and summaries under the configured output prefix.
    Run {
        /// TOML experiment configuration.
        config: PathBuf,
    },
    /// Aggregate persisted traces into a summary table (one row per prefix,
    /// one column per solver).
    Report {
        /// Output prefixes of completed runs.
        prefixes: Vec<PathBuf>,
        /// Emit machine-readable CSV instead of the aligned table.
        #[arg(long)]
        csv: bool,
    },
    /// Generate datasets.
    #[command(subcommand)]
    GenData(GenData),
    /// Run the numeric property suites.
    Check,
}

#[derive(Subcommand)]
enum GenData {
    /// Two-Gaussian synthetic classification data in sparse text format.
    Logistic {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        path: PathBuf,
    },
    /// Synthetic matrix-valued classification data as a dense matrix
    /// dataset.
    Bilinear {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        truth_rank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        path: PathBuf,
    },
    /// Random column subsampling of a dense matrix dataset: each source
    /// sample yields `reps` samples of `slices` columns.
    Subsample {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        slices: usize,
        #[arg(long)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            match err {
                CliError::Config(_) => ExitCode::from(1),
                CliError::Runtime(_) => ExitCode::from(2),
            }
        }
    }
}

fn dispatch() -> Result<(), CliError> {
    match Cli::parse().command {
        Command::Run { config } => {
            let config = ExperimentConfig::load(&config).map_err(CliError::Config)?;
            let output = runner::run_experiment(&config)?;
            print!("{}", runner::render_summary_table(&output.summaries));
            println!(
                "wrote {}, {}, {}",
                output.traces_path.display(),
                output.summary_csv_path.display(),
                output.summary_text_path.display()
            );
            Ok(())
        }
        Command::Report { prefixes, csv } => {
            print!("{}", report::report(&prefixes, csv)?);
            Ok(())
        }
        Command::GenData(what) => gen_data(what),
        Command::Check => {
            if check::run_check() {
                Ok(())
            } else {
                Err(CliError::Runtime("one or more checks failed".into()))
            }
        }
    }
}

fn gen_data(what: GenData) -> Result<(), CliError> {
    match what {
        GenData::Logistic { dim, samples, seed, path } => {
            let instance = LogisticInstance::synthetic(dim, samples, seed).map_err(config_err)?;
            io::write_libsvm(&path, &instance).map_err(runtime_err)?;
            println!("wrote {} ({} samples, {} features)", path.display(), samples, dim);
            Ok(())
        }
        GenData::Bilinear { rows, cols, samples, truth_rank, seed, path } => {
            let instance =
                BilinearLogisticInstance::synthetic(rows, cols, samples, 1, truth_rank, seed)
                    .map_err(config_err)?;
            let dataset = io::DenseDataset {
                rows,
                cols,
                samples: instance
                    .labels()
                    .iter()
                    .enumerate()
                    .map(|(ell, &y)| {
                        (y, instance.features()[ell * rows * cols..(ell + 1) * rows * cols].to_vec())
                    })
                    .collect(),
            };
            io::write_dense_matrix(&path, &dataset).map_err(runtime_err)?;
            println!("wrote {} ({} samples of {}x{})", path.display(), samples, rows, cols);
            Ok(())
        }
        GenData::Subsample { input, slices, reps, seed, output } => {
            let dataset = io::read_dense_matrix(&input).map_err(config_err)?;
            let sub = io::subsample_columns(&dataset, slices, reps, seed).map_err(config_err)?;
            io::write_dense_matrix(&output, &sub).map_err(runtime_err)?;
            println!(
                "wrote {} ({} samples of {}x{})",
                output.display(),
                sub.samples.len(),
                sub.rows,
                sub.cols
            );
            Ok(())
        }
    }
}

fn config_err(e: blockgrad::Error) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: blockgrad::Error) -> CliError {
    CliError::Runtime(e.to_string())
}
