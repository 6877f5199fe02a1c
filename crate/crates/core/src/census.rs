//! Kernel operation counters shared by the scheme instrumentation and the
//! cost model.
//!
//! One count is one batch: a single pass over one length-N residue vector
//! producing one output vector. Conventions, applied everywhere:
//! - A fused loop that multiplies one shared input against a (b, a) pair of
//!   polynomials counts once per residue, not twice.
//! - Base-conversion accumulations count one `mod_add` per (source, target)
//!   residue pair, including the first term.
//! - Per-polynomial subtracts and accumulates count once per polynomial per
//!   residue.
//! - `base_conv` tallies (source, target) pair batches structurally; its
//!   arithmetic is already inside `mod_add`/`mod_mult`, so cost models weigh
//!   it at zero energy.

use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub};

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct KernelCounts {
    pub ntt: u64,
    pub intt: u64,
    pub mod_add: u64,
    pub mod_mult: u64,
    pub base_conv: u64,
    pub transpose_moves: u64,
    pub automorphism: u64,
}

impl KernelCounts {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Forward plus inverse transforms; comparisons against published
    /// key-switch totals use this sum.
    pub fn transforms(&self) -> u64 {
        self.ntt + self.intt
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::default()
    }
}

impl Add for KernelCounts {
    type Output = KernelCounts;
    fn add(self, rhs: KernelCounts) -> KernelCounts {
        KernelCounts {
            ntt: self.ntt + rhs.ntt,
            intt: self.intt + rhs.intt,
            mod_add: self.mod_add + rhs.mod_add,
            mod_mult: self.mod_mult + rhs.mod_mult,
            base_conv: self.base_conv + rhs.base_conv,
            transpose_moves: self.transpose_moves + rhs.transpose_moves,
            automorphism: self.automorphism + rhs.automorphism,
        }
    }
}

impl AddAssign for KernelCounts {
    fn add_assign(&mut self, rhs: KernelCounts) {
        *self = *self + rhs;
    }
}

impl Sub for KernelCounts {
    type Output = KernelCounts;
    fn sub(self, rhs: KernelCounts) -> KernelCounts {
        KernelCounts {
            ntt: self.ntt - rhs.ntt,
            intt: self.intt - rhs.intt,
            mod_add: self.mod_add - rhs.mod_add,
            mod_mult: self.mod_mult - rhs.mod_mult,
            base_conv: self.base_conv - rhs.base_conv,
            transpose_moves: self.transpose_moves - rhs.transpose_moves,
            automorphism: self.automorphism - rhs.automorphism,
        }
    }
}

impl Mul<u64> for KernelCounts {
    type Output = KernelCounts;
    fn mul(self, times: u64) -> KernelCounts {
        KernelCounts {
            ntt: self.ntt * times,
            intt: self.intt * times,
            mod_add: self.mod_add * times,
            mod_mult: self.mod_mult * times,
            base_conv: self.base_conv * times,
            transpose_moves: self.transpose_moves * times,
            automorphism: self.automorphism * times,
        }
    }
}

impl Sum for KernelCounts {
    fn sum<I: Iterator<Item = KernelCounts>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_identities() {
        let a = KernelCounts { ntt: 3, intt: 1, mod_add: 10, mod_mult: 7, base_conv: 2, transpose_moves: 5, automorphism: 1 };
        assert_eq!(a + KernelCounts::zero(), a);
        assert_eq!(a - a, KernelCounts::zero());
        assert_eq!(a * 2, a + a);
        assert_eq!(a.transforms(), 4);
        let total: KernelCounts = [a, a, a].into_iter().sum();
        assert_eq!(total, a * 3);
    }
}
