//! Command-line driver for the FHE kernel library and accelerator model.

use clap::{Parser, Subcommand};
use cryptolight_cli::{bench, explain, sweep, verify, CommonArgs};

#[derive(Parser)]
#[command(
    name = "cryptolight",
    version,
    about = "FHE kernel library and accelerator cost model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the oracle-backed correctness suites at desk scale
    Verify(CommonArgs),
    /// Cost an op-program on one or more architecture presets
    Bench(CommonArgs),
    /// Cartesian sweep over --set axes on one architecture
    Sweep(CommonArgs),
    /// Dump the lowered census, residency plan, and schedule for a program
    Explain(CommonArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(args) => verify::run(args),
        Command::Bench(args) => bench::run(args),
        Command::Sweep(args) => sweep::run(args),
        Command::Explain(args) => explain::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
