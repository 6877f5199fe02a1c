//! Residue Number System: decompose big integers over pairwise co-prime
//! prime moduli, reconstruct via CRT, and convert between bases.
//!
//! A basis fixes the datapath width and the residue contexts; keys switching
//! and rescaling build on `BaseConverter`, whose fast path carries the usual
//! small multiple-of-Q error (handled downstream by the callers).

use std::cmp::Ordering;
use std::sync::Arc;

use crate::modarith::{ntt_primes, ModElement, MontgomeryContext};
use crate::wideint::{WideUInt, CAPACITIES};
use crate::Error;

/// Ordered co-prime moduli with precomputed CRT constants.
#[derive(Debug)]
pub struct RnsBasis {
    w_bits: usize,
    contexts: Vec<Arc<MontgomeryContext>>,
    /// Q = product of all moduli, at work_capacity.
    product: WideUInt,
    /// Capacity sized to hold a k-term sum of values below Q.
    work_capacity: usize,
    /// q_hat[i] = Q / q_i, at work_capacity.
    q_hat: Vec<WideUInt>,
    /// q_hat_inv[i] = (Q / q_i)^-1 mod q_i, in Montgomery form.
    q_hat_inv: Vec<ModElement>,
}

impl RnsBasis {
    /// Builds a basis from fresh moduli, creating one context per modulus.
    pub fn new(w_bits: usize, moduli: Vec<WideUInt>) -> Result<Self, Error> {
        let mut contexts = Vec::with_capacity(moduli.len());
        for q in moduli {
            contexts.push(Arc::new(MontgomeryContext::new(w_bits, q)?));
        }
        Self::from_contexts(w_bits, contexts)
    }

    /// Builds a basis around existing contexts, so residues created under them
    /// stay valid across derived bases (level drops share contexts).
    pub fn from_contexts(
        w_bits: usize,
        contexts: Vec<Arc<MontgomeryContext>>,
    ) -> Result<Self, Error> {
        if contexts.is_empty() {
            return Err(Error::InvalidParameter("empty RNS basis".into()));
        }
        for ctx in &contexts {
            if ctx.w_bits() != w_bits {
                return Err(Error::InvalidParameter(format!(
                    "context width {} does not match basis width {w_bits}",
                    ctx.w_bits()
                )));
            }
        }
        for i in 0..contexts.len() {
            for j in i + 1..contexts.len() {
                let g = gcd(contexts[i].modulus(), contexts[j].modulus());
                if g.bit_length() != 1 {
                    return Err(Error::InvalidParameter(format!(
                        "moduli {} and {} share factor {g}",
                        contexts[i].modulus(),
                        contexts[j].modulus()
                    )));
                }
            }
        }
        let k = contexts.len();
        let total_bits: usize = contexts.iter().map(|c| c.modulus().bit_length()).sum();
        let headroom = k.next_power_of_two().trailing_zeros() as usize + 1;
        let work_capacity = *CAPACITIES
            .iter()
            .find(|&&c| c >= total_bits + headroom)
            .ok_or_else(|| {
                Error::InvalidParameter(format!("basis product of {total_bits} bits exceeds 2048"))
            })?;
        let mut product = WideUInt::one(work_capacity);
        for ctx in &contexts {
            product = product.mul_checked(&ctx.modulus().resize(work_capacity));
        }
        let mut q_hat = Vec::with_capacity(k);
        let mut q_hat_inv = Vec::with_capacity(k);
        for i in 0..k {
            let mut hat = WideUInt::one(work_capacity);
            for (j, ctx) in contexts.iter().enumerate() {
                if j != i {
                    hat = hat.mul_checked(&ctx.modulus().resize(work_capacity));
                }
            }
            let ctx = &contexts[i];
            let hat_red = reduce_wide(&hat, ctx);
            let inv = ctx.inverse(&ctx.to_montgomery(&hat_red)).map_err(|_| {
                Error::InvalidParameter(format!("CRT constant not invertible mod {}", ctx.modulus()))
            })?;
            q_hat.push(hat);
            q_hat_inv.push(inv);
        }
        Ok(RnsBasis { w_bits, contexts, product, work_capacity, q_hat, q_hat_inv })
    }

    /// Builds k = ceil(Q_target / (W-2)) max-width NTT-friendly primes whose
    /// product covers at least Q_target bits (overshoot stays below W bits).
    pub fn build_basis(q_target_bits: usize, w_bits: usize, n: usize) -> Result<Self, Error> {
        let usable = w_bits
            .checked_sub(2)
            .filter(|&u| u > 0)
            .ok_or_else(|| Error::InvalidParameter(format!("width {w_bits} too small")))?;
        if q_target_bits < usable {
            return Err(Error::InvalidParameter(format!(
                "target {q_target_bits} bits below the {usable}-bit usable width"
            )));
        }
        let mut k = q_target_bits.div_ceil(usable);
        loop {
            let basis = Self::new(w_bits, ntt_primes(w_bits, n, k)?)?;
            if basis.product_bits() >= q_target_bits {
                return Ok(basis);
            }
            k += 1;
        }
    }

    pub fn k(&self) -> usize {
        self.contexts.len()
    }

    pub fn w_bits(&self) -> usize {
        self.w_bits
    }

    pub fn context(&self, i: usize) -> &Arc<MontgomeryContext> {
        &self.contexts[i]
    }

    pub fn contexts(&self) -> &[Arc<MontgomeryContext>] {
        &self.contexts
    }

    /// Q as a wide integer at the basis working capacity.
    pub fn product(&self) -> &WideUInt {
        &self.product
    }

    pub fn product_bits(&self) -> usize {
        self.product.bit_length()
    }

    pub fn product_decimal(&self) -> String {
        self.product.to_decimal_string()
    }

    pub fn moduli_decimal(&self) -> Vec<String> {
        self.contexts.iter().map(|c| c.modulus().to_decimal_string()).collect()
    }

    pub fn q_hat(&self, i: usize) -> &WideUInt {
        &self.q_hat[i]
    }

    pub fn q_hat_inv(&self, i: usize) -> &ModElement {
        &self.q_hat_inv[i]
    }

    /// Basis over the same contexts minus the last one (rescale support).
    pub fn without_last(&self) -> Result<Self, Error> {
        Self::from_contexts(self.w_bits, self.contexts[..self.contexts.len() - 1].to_vec())
    }

    /// Residues of x under every modulus. x must lie in [0, Q).
    pub fn decompose(&self, x: &WideUInt) -> Result<Vec<ModElement>, Error> {
        if x.bit_length() > self.work_capacity {
            return Err(Error::InvalidParameter(format!(
                "value of {} bits out of range for a {}-bit product",
                x.bit_length(),
                self.product_bits()
            )));
        }
        let x = x.resize(self.work_capacity);
        if x.compare(&self.product) != Ordering::Less {
            return Err(Error::InvalidParameter(format!("value {x} not below the basis product")));
        }
        Ok(self
            .contexts
            .iter()
            .map(|ctx| ctx.to_montgomery(&reduce_wide(&x, ctx)))
            .collect())
    }

    pub fn decompose_decimal(&self, s: &str) -> Result<Vec<ModElement>, Error> {
        self.decompose(&WideUInt::from_decimal_string(self.work_capacity, s)?)
    }

    /// CRT reconstruction: the unique x in [0, Q) matching every residue.
    pub fn reconstruct(&self, residues: &[ModElement]) -> Result<WideUInt, Error> {
        if residues.len() != self.k() {
            return Err(Error::InvalidParameter(format!(
                "expected {} residues, got {}",
                self.k(),
                residues.len()
            )));
        }
        let mut acc = WideUInt::zero(self.work_capacity);
        for (i, r) in residues.iter().enumerate() {
            let ctx = &self.contexts[i];
            let u = ctx.from_montgomery(&ctx.mul(r, &self.q_hat_inv[i]));
            // u < q_i, so u * (Q / q_i) < Q: the product fits work_capacity.
            let term = self.q_hat[i].mul_checked(&u.resize(self.work_capacity));
            let (sum, carry) = acc.add_with_carry(&term);
            debug_assert!(!carry, "CRT accumulator sized for k terms below Q");
            acc = sum;
        }
        Ok(acc.rem(&self.product))
    }

    pub fn reconstruct_decimal(&self, residues: &[ModElement]) -> Result<String, Error> {
        Ok(self.reconstruct(residues)?.to_decimal_string())
    }
}

/// x mod q, landing at the context value capacity. Single-limb moduli take
/// the fast word-division path.
pub(crate) fn reduce_wide(x: &WideUInt, ctx: &MontgomeryContext) -> WideUInt {
    let q = ctx.modulus();
    let capacity = q.capacity_bits();
    if q.bit_length() <= 64 {
        let r = x.div_rem_u64(q.low_u64()).1;
        WideUInt::from_u64(capacity, r)
    } else {
        x.rem(&q.resize(x.capacity_bits())).resize(capacity)
    }
}

fn gcd(a: &WideUInt, b: &WideUInt) -> WideUInt {
    let mut a = a.clone();
    let mut b = b.clone();
    while !b.is_zero() {
        let r = a.rem(&b);
        a = b;
        b = r;
    }
    a
}

/// Converts residues from one basis to another.
///
/// `convert` is the fast floating-point-free path: its output represents
/// x + e*Q for some 0 <= e < k rather than x itself. `convert_exact` goes
/// through full CRT reconstruction and is the testing reference.
pub struct BaseConverter {
    from: Arc<RnsBasis>,
    to: Arc<RnsBasis>,
    /// cross[i][j] = (Q_from / q_i) mod q'_j, in Montgomery form of q'_j.
    cross: Vec<Vec<ModElement>>,
}

impl BaseConverter {
    pub fn new(from: Arc<RnsBasis>, to: Arc<RnsBasis>) -> Result<Self, Error> {
        for src in from.contexts() {
            for dst in to.contexts() {
                let cap = src.modulus().capacity_bits().max(dst.modulus().capacity_bits());
                let g = gcd(&src.modulus().resize(cap), &dst.modulus().resize(cap));
                if g.bit_length() != 1 {
                    return Err(Error::InvalidParameter(format!(
                        "source modulus {} shares factor {g} with target {}",
                        src.modulus(),
                        dst.modulus()
                    )));
                }
            }
        }
        let mut cross = Vec::with_capacity(from.k());
        for i in 0..from.k() {
            let mut row = Vec::with_capacity(to.k());
            for j in 0..to.k() {
                let ctx = to.context(j);
                row.push(ctx.to_montgomery(&reduce_wide(from.q_hat(i), ctx)));
            }
            cross.push(row);
        }
        Ok(BaseConverter { from, to, cross })
    }

    pub fn from_basis(&self) -> &Arc<RnsBasis> {
        &self.from
    }

    pub fn to_basis(&self) -> &Arc<RnsBasis> {
        &self.to
    }

    /// Montgomery-form cross constant (Q_from / q_i) mod q'_j.
    pub fn cross(&self, i: usize, j: usize) -> &ModElement {
        &self.cross[i][j]
    }

    /// Fast base conversion: y_j = sum_i (r_i * q_hat_inv_i mod q_i) * q_hat_i
    /// reduced mod q'_j. The sum equals x + e*Q with 0 <= e < k.
    pub fn convert(&self, residues: &[ModElement]) -> Vec<ModElement> {
        assert_eq!(residues.len(), self.from.k(), "residue count does not match source basis");
        let scaled: Vec<WideUInt> = residues
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let ctx = self.from.context(i);
                ctx.from_montgomery(&ctx.mul(r, self.from.q_hat_inv(i)))
            })
            .collect();
        (0..self.to.k())
            .map(|j| {
                let ctx = self.to.context(j);
                let mut acc = ctx.zero();
                for (i, u) in scaled.iter().enumerate() {
                    let u_j = ctx.to_montgomery(&reduce_wide(u, ctx));
                    acc = ctx.add(&acc, &ctx.mul(&u_j, &self.cross[i][j]));
                }
                acc
            })
            .collect()
    }

    /// Exact conversion via CRT reconstruction; reference for the fast path.
    pub fn convert_exact(&self, residues: &[ModElement]) -> Result<Vec<ModElement>, Error> {
        let x = self.from.reconstruct(residues)?;
        Ok(self
            .to
            .contexts()
            .iter()
            .map(|ctx| ctx.to_montgomery(&reduce_wide(&x, ctx)))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_basis() -> RnsBasis {
        let moduli = vec![WideUInt::from_u64(64, 17), WideUInt::from_u64(64, 19)];
        RnsBasis::new(64, moduli).unwrap()
    }

    #[test]
    fn two_modulus_crt_matches_brute_force() {
        let basis = small_basis();
        // Independent search over the full range.
        let mut expected = None;
        for x in 0..(17 * 19) {
            if x % 17 == 4 && x % 19 == 9 {
                expected = Some(x);
                break;
            }
        }
        assert_eq!(expected, Some(123));
        let residues =
            vec![basis.context(0).from_u64(4), basis.context(1).from_u64(9)];
        assert_eq!(basis.reconstruct(&residues).unwrap().low_u64(), 123);
        assert_eq!(basis.reconstruct_decimal(&residues).unwrap(), "123");
    }

    #[test]
    fn trivial_values_round_trip() {
        let basis = small_basis();
        let zeros = basis.decompose(&WideUInt::zero(64)).unwrap();
        assert!(zeros.iter().all(|r| r.raw().is_zero()));
        assert!(basis.reconstruct(&zeros).unwrap().is_zero());
        let ones = basis.decompose(&WideUInt::one(64)).unwrap();
        for (i, r) in ones.iter().enumerate() {
            assert_eq!(basis.context(i).from_montgomery(r).low_u64(), 1);
        }
        assert_eq!(basis.reconstruct(&ones).unwrap().low_u64(), 1);
    }

    #[test]
    fn out_of_range_rejected() {
        let basis = small_basis();
        assert!(basis.decompose(&WideUInt::from_u64(64, 17 * 19)).is_err());
        assert!(basis.decompose(&WideUInt::from_u64(64, 17 * 19 - 1)).is_ok());
    }

    #[test]
    fn shared_factor_rejected() {
        let moduli = vec![WideUInt::from_u64(64, 15), WideUInt::from_u64(64, 21)];
        assert!(RnsBasis::new(64, moduli).is_err());
    }

    #[test]
    fn residue_counts_by_width() {
        let b32 = RnsBasis::build_basis(1024, 32, 4096).unwrap();
        assert_eq!(b32.k(), 35);
        assert!(b32.product_bits() >= 1024 && b32.product_bits() <= 1024 + 32);

        let b64 = RnsBasis::build_basis(560, 64, 4096).unwrap();
        assert_eq!(b64.k(), 10);
        assert!(b64.product_bits() >= 560 && b64.product_bits() <= 560 + 64);
    }

    #[test]
    fn single_residue_at_full_width() {
        // Target equal to the usable width: one residue carries everything.
        let basis = RnsBasis::build_basis(1022, 1024, 4096).unwrap();
        assert_eq!(basis.k(), 1);
        let x = WideUInt::from_u64(64, 987654321).resize(basis.product().capacity_bits());
        let residues = basis.decompose(&x).unwrap();
        assert_eq!(basis.reconstruct(&residues).unwrap().low_u64(), 987654321);
    }

    #[test]
    fn base_conversion_small() {
        let from = Arc::new(small_basis());
        let to = Arc::new(RnsBasis::new(64, vec![WideUInt::from_u64(64, 23)]).unwrap());
        let bc = BaseConverter::new(Arc::clone(&from), Arc::clone(&to)).unwrap();
        let x = WideUInt::from_u64(64, 123);
        let residues = from.decompose(&x).unwrap();
        let exact = bc.convert_exact(&residues).unwrap();
        assert_eq!(to.context(0).from_montgomery(&exact[0]).low_u64(), 123 % 23);
        // Fast path: off by e * 323 for some e in {0, 1}.
        let fast = bc.convert(&residues);
        let got = to.context(0).from_montgomery(&fast[0]).low_u64();
        assert!((0..2).any(|e| got == (123 + e * 323) % 23), "fast BC out of error bound: {got}");
        // Zero converts to zero on both paths.
        let zeros = from.decompose(&WideUInt::zero(64)).unwrap();
        assert!(bc.convert(&zeros).iter().all(|r| r.raw().is_zero()));
    }

    #[test]
    fn without_last_shares_contexts() {
        let basis = small_basis();
        let dropped = basis.without_last().unwrap();
        assert_eq!(dropped.k(), 1);
        assert_eq!(dropped.context(0).id(), basis.context(0).id());
    }
}
