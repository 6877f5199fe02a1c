//! Per-kernel latency/energy costing and the calibrated key-switch
//! operation-count formulas.
//!
//! Counting convention matches the functional scheme's census: one batch is
//! one pass over one length-N residue vector, and the calibration formulas
//! already fold the paired-operand convention into their counts, so each
//! counted batch costs one uniform pass here.
//!
//! Energy is tracked through an explicit ledger of charged quantities
//! (butterflies, element ops, moved bytes); reported joules are always the
//! dot product of the ledger with the architecture's energy table.

use cryptolight_core::KernelCounts;

use crate::arch::{ArchConfig, EnergyTable};
use crate::Error;

/// Calibrated key-switch kernel counts for a Q_bits-wide ciphertext on a
/// W-bit datapath, with k = ceil(Q_bits / W). The formulas are an exact fit
/// to the two published (Q=1024, W=32/64) data points; they are model
/// calibration, not measured counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KsCounts {
    pub adds: u64,
    pub mults: u64,
    pub ntts: u64,
}

pub fn ks_kernel_counts(q_bits: u64, w_bits: u64) -> KsCounts {
    let k = q_bits.div_ceil(w_bits);
    KsCounts {
        adds: 3 * k * k + 4 * k,
        mults: 3 * k * k + 2 * k,
        ntts: 6 * k,
    }
}

/// Function-unit classes kernels are mapped to. Each compute unit owns one
/// NTT unit, one add/mult block, and one automorphism unit; the TU pool,
/// HBM interface, and NoC are chip-level shared resources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnitClass {
    NttUnit,
    AddMult,
    Auto,
    Tu,
    Hbm,
    /// Zero-latency bookkeeping nodes (barriers, base-conversion tallies).
    Virtual,
}

impl UnitClass {
    /// Units that can work concurrently in one wave. Compute units stream
    /// their operands from the SPM, and a bank sustains one kernel stream
    /// at a time (its sub-arrays pipeline within the stream), so compute
    /// concurrency is capped by the bank count even when more units exist.
    /// TUs permute in place inside the banks and are not stream-limited.
    pub fn pool_size(self, arch: &ArchConfig) -> u64 {
        match self {
            UnitClass::NttUnit | UnitClass::AddMult | UnitClass::Auto => {
                arch.cu_count.min(arch.bank_count)
            }
            UnitClass::Tu => arch.tu_count.max(1),
            UnitClass::Hbm => 1,
            UnitClass::Virtual => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            UnitClass::NttUnit => "ntt",
            UnitClass::AddMult => "addmult",
            UnitClass::Auto => "auto",
            UnitClass::Tu => "tu",
            UnitClass::Hbm => "hbm",
            UnitClass::Virtual => "virtual",
        }
    }
}

/// One schedulable unit of work. `points`/`elems` are element counts of the
/// batch or shard; transfers carry byte sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Ntt { points: u64 },
    Intt { points: u64 },
    ModAdd { elems: u64 },
    ModMult { elems: u64 },
    /// Base-conversion accumulation tally; the arithmetic is carried by the
    /// mult/add kernels it pairs with, so it is structural and free.
    BaseConvAcc { elems: u64 },
    Transpose { side: u64 },
    Automorphism { elems: u64 },
    HbmLoad { bytes: u64 },
    HbmStore { bytes: u64 },
    Barrier,
}

impl Kernel {
    pub fn unit_class(&self) -> UnitClass {
        match self {
            Kernel::Ntt { .. } | Kernel::Intt { .. } => UnitClass::NttUnit,
            Kernel::ModAdd { .. } | Kernel::ModMult { .. } => UnitClass::AddMult,
            Kernel::Automorphism { .. } => UnitClass::Auto,
            Kernel::Transpose { .. } => UnitClass::Tu,
            Kernel::HbmLoad { .. } | Kernel::HbmStore { .. } => UnitClass::Hbm,
            Kernel::BaseConvAcc { .. } | Kernel::Barrier => UnitClass::Virtual,
        }
    }

    /// Census contribution of one batch-level kernel.
    pub fn census(&self) -> KernelCounts {
        let mut c = KernelCounts::zero();
        match self {
            Kernel::Ntt { .. } => c.ntt = 1,
            Kernel::Intt { .. } => c.intt = 1,
            Kernel::ModAdd { .. } => c.mod_add = 1,
            Kernel::ModMult { .. } => c.mod_mult = 1,
            Kernel::BaseConvAcc { .. } => c.base_conv = 1,
            Kernel::Automorphism { .. } => c.automorphism = 1,
            Kernel::Transpose { side } => {
                c.transpose_moves =
                    if *side < 2 { 0 } else { side * side / 2 * side.ilog2() as u64 }
            }
            Kernel::HbmLoad { .. } | Kernel::HbmStore { .. } | Kernel::Barrier => {}
        }
        c
    }
}

/// Charged physical quantities; joules are always derived from this.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnergyLedger {
    pub butterflies: u64,
    pub mult_elems: u64,
    pub add_elems: u64,
    pub auto_elems: u64,
    pub tu_moves: u64,
    pub spm_bytes: u64,
    pub noc_bytes: u64,
    pub hbm_bytes: u64,
}

impl EnergyLedger {
    pub fn joules(&self, e: &EnergyTable) -> f64 {
        let pj = 1e-12;
        (self.butterflies as f64 * e.butterfly_pj
            + self.mult_elems as f64 * e.mult_pj
            + self.add_elems as f64 * e.add_pj
            + self.auto_elems as f64 * e.automorphism_pj
            + self.tu_moves as f64 * e.tu_move_pj
            + self.spm_bytes as f64 * e.spm_pj_per_byte
            + self.noc_bytes as f64 * e.noc_pj_per_byte
            + self.hbm_bytes as f64 * e.hbm_pj_per_byte)
            * pj
    }

    pub fn add(&mut self, other: &EnergyLedger) {
        self.butterflies += other.butterflies;
        self.mult_elems += other.mult_elems;
        self.add_elems += other.add_elems;
        self.auto_elems += other.auto_elems;
        self.tu_moves += other.tu_moves;
        self.spm_bytes += other.spm_bytes;
        self.noc_bytes += other.noc_bytes;
        self.hbm_bytes += other.hbm_bytes;
    }

    pub fn scaled(&self, count: u64) -> EnergyLedger {
        EnergyLedger {
            butterflies: self.butterflies * count,
            mult_elems: self.mult_elems * count,
            add_elems: self.add_elems * count,
            auto_elems: self.auto_elems * count,
            tu_moves: self.tu_moves * count,
            spm_bytes: self.spm_bytes * count,
            noc_bytes: self.noc_bytes * count,
            hbm_bytes: self.hbm_bytes * count,
        }
    }
}

/// Cycles plus the charged-quantity ledger for one kernel instance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KernelCost {
    pub cycles: u64,
    pub ledger: EnergyLedger,
}

impl KernelCost {
    pub fn joules(&self, arch: &ArchConfig) -> f64 {
        self.ledger.joules(&arch.energy)
    }
}

/// Latency and charge for one kernel on the given architecture.
///
/// NTT batches: ceil((n/2)·log2(n) / butterflies) cycles plus one multiplier
/// pipeline fill. Elementwise batches: ceil(n / lanes), mults add the fill.
/// Every compute kernel also charges SPM traffic for its operands.
/// Transposes ride the TU when present (zero NoC bytes); otherwise the full
/// matrix crosses the NoC twice. HBM transfers serialize at the aggregate
/// bandwidth.
pub fn cost_kernel(kernel: &Kernel, arch: &ArchConfig) -> Result<KernelCost, Error> {
    let freq = arch.frequency()?;
    let eb = arch.elem_bytes();
    let mut cost = KernelCost::default();
    let led = &mut cost.ledger;
    match *kernel {
        Kernel::Ntt { points } | Kernel::Intt { points } => {
            if points < 2 {
                return Ok(cost);
            }
            if !points.is_power_of_two() {
                return Err(Error::Config(format!("NTT size {points} not a power of two")));
            }
            let butterflies = points / 2 * points.ilog2() as u64;
            cost.cycles = butterflies.div_ceil(arch.butterflies_per_unit) + arch.fill_cycles();
            led.butterflies = butterflies;
            led.spm_bytes = 2 * points * eb;
        }
        Kernel::ModAdd { elems } => {
            if elems == 0 {
                return Ok(cost);
            }
            cost.cycles = elems.div_ceil(arch.add_lanes);
            led.add_elems = elems;
            led.spm_bytes = 3 * elems * eb;
        }
        Kernel::ModMult { elems } => {
            if elems == 0 {
                return Ok(cost);
            }
            cost.cycles = elems.div_ceil(arch.mult_lanes) + arch.fill_cycles();
            led.mult_elems = elems;
            led.spm_bytes = 3 * elems * eb;
        }
        Kernel::Automorphism { elems } => {
            if elems == 0 {
                return Ok(cost);
            }
            cost.cycles = elems.div_ceil(arch.auto_lanes);
            led.auto_elems = elems;
            led.spm_bytes = 2 * elems * eb;
        }
        Kernel::Transpose { side } => {
            if side < 2 {
                return Ok(cost);
            }
            if !side.is_power_of_two() {
                return Err(Error::Config(format!("transpose side {side} not a power of two")));
            }
            let bytes = 2 * side * side * eb;
            if arch.tu_enabled {
                let moves = side * side / 2 * side.ilog2() as u64;
                cost.cycles = moves.div_ceil(arch.tu_count) + 1;
                led.tu_moves = moves;
                led.spm_bytes = bytes;
            } else {
                let bytes_per_cycle = (arch.noc_bytes_per_sec / freq).max(1.0);
                cost.cycles = (bytes as f64 / bytes_per_cycle).ceil() as u64;
                led.noc_bytes = bytes;
                led.spm_bytes = bytes;
            }
        }
        Kernel::HbmLoad { bytes } | Kernel::HbmStore { bytes } => {
            if bytes == 0 {
                return Ok(cost);
            }
            let bytes_per_cycle = (arch.hbm_bytes_per_sec / freq).max(1.0);
            cost.cycles = (bytes as f64 / bytes_per_cycle).ceil() as u64;
            led.hbm_bytes = bytes;
        }
        Kernel::BaseConvAcc { .. } | Kernel::Barrier => {}
    }
    Ok(cost)
}

/// Pipeline-fill cycles embedded in a kernel's standalone cost. Nonzero only
/// for the multiplier-pipeline kernels (transforms and mod-mult batches)
/// when they carry actual work. The wave scheduler uses this to charge the
/// fill once per wave per unit instead of once per shard: kernels streamed
/// back to back through an already-full pipeline do not refill it.
pub fn kernel_fill(kernel: &Kernel, arch: &ArchConfig) -> u64 {
    match *kernel {
        Kernel::Ntt { points } | Kernel::Intt { points } if points >= 2 => arch.fill_cycles(),
        Kernel::ModMult { elems } if elems > 0 => arch.fill_cycles(),
        _ => 0,
    }
}

/// Cost summary for an op or program: batch-level census plus scheduled
/// cycles, energy, and traffic. The census stays at batch granularity (it
/// must agree with the functional layer); the ledger reflects the expanded
/// kernels actually charged, including four-step correction multiplies and
/// transposes, so `joules == ledger · energy_table` always holds.
#[derive(Debug, Clone, Default)]
pub struct CostReport {
    pub counts: KernelCounts,
    pub cycles: u64,
    pub seconds: f64,
    pub joules: f64,
    pub ledger: EnergyLedger,
    /// Functional chain length from the parameter file and the idealized
    /// calibration chain for this architecture; both reported, labeled.
    pub functional_k: u64,
    pub calibration_k: u64,
    pub hint_loads: u64,
}
