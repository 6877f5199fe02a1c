//! Library surface behind the `cryptolight` binary, split out so integration
//! tests can drive the interpreter, report writer, and commands directly.

pub mod bench;
pub mod config;
pub mod explain;
pub mod interp;
pub mod report;
pub mod sweep;
pub mod verify;

use std::path::PathBuf;

use clap::Args;

/// Run configuration shared by every subcommand.
#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// Architecture preset name (cryptolight, lake32, bts64), a file under
    /// $CRYPTOLIGHT_PRESET_DIR, or a path to a TOML file. Repeatable.
    #[arg(long = "arch")]
    pub arch: Vec<String>,

    /// Scheme parameter file, or a built-in name (desk, full).
    #[arg(long)]
    pub params: Option<PathBuf>,

    /// Op-program trace file.
    #[arg(long)]
    pub program: Option<PathBuf>,

    /// Report output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// RNG seed; defaults to the parameter file's seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Config override, `key=value`. Keys address the architecture
    /// (`spm_bytes`, `energy.mult_pj`, `freq.512`, ...) or, with a `params.`
    /// prefix, the scheme parameters. Under `sweep`, comma-separated values
    /// declare an axis. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Preset whose rows normalize the ratio columns; defaults to the first
    /// requested architecture.
    #[arg(long)]
    pub baseline: Option<String>,
}
