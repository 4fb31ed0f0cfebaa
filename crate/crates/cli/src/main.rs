use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use cat0_fubini_cli::commands::{self, ConcentrationOptions, SpectralOptions, VerifyOptions};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cat0fubini", version, about = "Barycenters, transport and Fubini inequalities in CAT(0) targets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the property suites of a scenario file
    Verify {
        path: PathBuf,
        /// Run only this suite (empty runs all)
        #[arg(long)]
        suite: Option<String>,
        /// Override the scenario's master seed
        #[arg(long)]
        seed: Option<u64>,
        /// Emit the report as JSON, to stdout or to the given file
        #[arg(long, num_args = 0..=1)]
        json: Option<Option<PathBuf>>,
        /// Write the report as CSV to this file
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Recompute the tripod example and check it against the reference values
    Tripod {
        #[arg(long)]
        json: bool,
    },
    /// Fubini defects on hypercube products Q_n x Q_n
    Concentration {
        #[arg(long, default_value_t = 1)]
        n_min: u32,
        #[arg(long, default_value_t = 4)]
        n_max: u32,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check the spectral bound on V2 for a graph given as an adjacency list
    Spectral {
        graph: PathBuf,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let code = match cli.command {
        Command::Verify { path, suite, seed, json, csv } => {
            commands::verify(&VerifyOptions { path, suite, seed, json, csv }, &mut out, &mut err)
        }
        Command::Tripod { json } => commands::tripod_cmd(json, &mut out, &mut err),
        Command::Concentration { n_min, n_max, trials, seed, csv } => {
            commands::concentration_cmd(&ConcentrationOptions { n_min, n_max, trials, seed, csv }, &mut out, &mut err)
        }
        Command::Spectral { graph, dim, trials, seed } => {
            commands::spectral_cmd(&SpectralOptions { graph, dim, trials, seed }, &mut out, &mut err)
        }
    };
    ExitCode::from(code as u8)
}
