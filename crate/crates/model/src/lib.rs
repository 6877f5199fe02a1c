//! Calibrated cost model and static scheduler for FHE accelerator studies.
//!
//! The crate mirrors the functional scheme layer at the level the hardware
//! sees: every ciphertext operation becomes staged batches of NTT, modular
//! add/mult, automorphism, and transfer kernels, costed against an
//! architecture description and list-scheduled onto its function units.
//! Kernel counts are kept in lockstep with the functional layer's
//! instrumentation; tests assert exact agreement.

pub mod arch;
pub mod cost;
pub mod lower;
pub mod params;
pub mod program;
pub mod recipes;
pub mod schedule;

pub use arch::{ArchConfig, EnergyTable, FreqEntry};
pub use cost::{
    cost_kernel, ks_kernel_counts, CostReport, EnergyLedger, Kernel, KernelCost, KsCounts,
    UnitClass,
};
pub use lower::{lower_program, LoweredOp, LoweredProgram};
pub use params::ParamSpec;
pub use program::{parse_program, reorder_for_hint_reuse, OpKind, OpProgram, Statement};
pub use recipes::{op_recipe, HintId, HintUse, OpRecipe, Stage};
pub use schedule::{
    estimate_op, map_and_schedule, recipe_graph, schedule_program, Interval, KernelGraph,
    OpTiming, ResidencyPlan, ScheduleResult, Timeline, WaveInterval, SHARD_ELEMS,
};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("schedule error: {0}")]
    Schedule(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
