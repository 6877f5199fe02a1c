//! Montgomery arithmetic over odd moduli at datapath widths from 32 to 1024
//! bits, plus NTT-friendly prime search.
//!
//! A `MontgomeryContext` fixes (W, q) with q odd and q < 2^(W-2). The two
//! guard bits keep every intermediate of the word-iterative reduction inside
//! 2W bits, which is what lets a W-bit datapath run the whole loop without
//! extra overflow words. Elements are stored in Montgomery form (x*R mod q,
//! R = 2^W) and only leave it at the context boundary.

use std::cmp::Ordering;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::wideint::{adc, mul_schoolbook, sbb, WideUInt, LIMB_BITS};
use crate::Error;

/// Datapath widths a context can be built for.
pub const SUPPORTED_WIDTHS: [usize; 6] = [32, 64, 128, 256, 512, 1024];

static NEXT_CTX_ID: AtomicU64 = AtomicU64::new(1);

/// Reduction context for a single odd modulus at a fixed datapath width.
#[derive(Debug)]
pub struct MontgomeryContext {
    w_bits: usize,
    /// Limbs per stored value: 1 for W in {32, 64}, W/64 otherwise.
    words: usize,
    /// WideUInt capacity used for values of this context.
    value_capacity: usize,
    q: WideUInt,
    q_limbs: Vec<u64>,
    /// -q^-1 mod 2^chunk, where chunk is 32 for W=32 and 64 otherwise.
    q_inv_neg: u64,
    r_mod_q: WideUInt,
    r2_mod_q: WideUInt,
    id: u64,
}

/// An element of Z_q in Montgomery form, tied to its context by id.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ModElement {
    value: WideUInt,
    ctx_id: u64,
}

impl ModElement {
    pub fn ctx_id(&self) -> u64 {
        self.ctx_id
    }

    /// Montgomery-form representative, in [0, q).
    pub fn raw(&self) -> &WideUInt {
        &self.value
    }
}

impl MontgomeryContext {
    /// Builds a context. `q` must be odd and strictly below 2^(W-2).
    pub fn new(w_bits: usize, q: WideUInt) -> Result<Self, Error> {
        if !SUPPORTED_WIDTHS.contains(&w_bits) {
            return Err(Error::InvalidParameter(format!("unsupported width {w_bits}")));
        }
        let value_capacity = w_bits.max(64);
        let q = if q.capacity_bits() == value_capacity { q } else { q.resize(value_capacity) };
        if q.limbs()[0] & 1 == 0 || q.is_zero() {
            return Err(Error::InvalidParameter(format!("modulus {q} is even")));
        }
        if q.bit_length() > w_bits - 2 {
            return Err(Error::InvalidParameter(format!(
                "modulus of {} bits leaves no guard bits at width {w_bits}",
                q.bit_length()
            )));
        }
        let chunk_bits = w_bits.min(LIMB_BITS);
        let q_inv_neg = neg_inv_pow2(q.limbs()[0], chunk_bits);
        // R mod q via shift-subtract on a 2W-bit staging value.
        let r = WideUInt::one(2 * value_capacity).shift_left(w_bits);
        let q_wide = q.resize(2 * value_capacity);
        let r_mod_q = r.rem(&q_wide).resize(value_capacity);
        let r2_mod_q = r_mod_q.mul_full(&r_mod_q).rem(&q_wide).resize(value_capacity);
        let words = value_capacity / LIMB_BITS;
        let id = NEXT_CTX_ID.fetch_add(1, AtomicOrdering::Relaxed);
        Ok(MontgomeryContext {
            w_bits,
            words,
            value_capacity,
            q_limbs: q.limbs().to_vec(),
            q,
            q_inv_neg,
            r_mod_q,
            r2_mod_q,
            id,
        })
    }

    pub fn w_bits(&self) -> usize {
        self.w_bits
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn modulus(&self) -> &WideUInt {
        &self.q
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// R mod q: the Montgomery form of one.
    pub fn one(&self) -> ModElement {
        ModElement { value: self.r_mod_q.clone(), ctx_id: self.id }
    }

    pub fn zero(&self) -> ModElement {
        ModElement { value: WideUInt::zero(self.value_capacity), ctx_id: self.id }
    }

    fn check(&self, e: &ModElement) {
        assert_eq!(e.ctx_id, self.id, "element belongs to a different MontgomeryContext");
    }

    /// Converts x (ordinary representation, x < q) into Montgomery form.
    pub fn to_montgomery(&self, x: &WideUInt) -> ModElement {
        let x = x.resize(self.value_capacity);
        assert!(x.compare(&self.q) == Ordering::Less, "input {x} not reduced mod {}", self.q);
        let mut out = vec![0u64; self.words];
        let mut scratch = vec![0u64; 2 * self.words];
        self.mont_mul_slices(x.limbs(), self.r2_mod_q.limbs(), &mut out, &mut scratch);
        ModElement { value: WideUInt::from_limbs(out), ctx_id: self.id }
    }

    pub fn from_montgomery(&self, e: &ModElement) -> WideUInt {
        self.check(e);
        let mut t = vec![0u64; 2 * self.words];
        t[..self.words].copy_from_slice(e.value.limbs());
        let mut out = vec![0u64; self.words];
        self.mont_reduce_slices(&mut t, &mut out);
        WideUInt::from_limbs(out)
    }

    /// Convenience for small constants.
    pub fn from_u64(&self, v: u64) -> ModElement {
        let x = WideUInt::from_u64(self.value_capacity, v).rem(&self.q);
        self.to_montgomery(&x)
    }

    pub fn add(&self, a: &ModElement, b: &ModElement) -> ModElement {
        self.check(a);
        self.check(b);
        let mut out = vec![0u64; self.words];
        self.add_mod_slices(a.value.limbs(), b.value.limbs(), &mut out);
        ModElement { value: WideUInt::from_limbs(out), ctx_id: self.id }
    }

    pub fn sub(&self, a: &ModElement, b: &ModElement) -> ModElement {
        self.check(a);
        self.check(b);
        let mut out = vec![0u64; self.words];
        self.sub_mod_slices(a.value.limbs(), b.value.limbs(), &mut out);
        ModElement { value: WideUInt::from_limbs(out), ctx_id: self.id }
    }

    pub fn neg(&self, a: &ModElement) -> ModElement {
        self.sub(&self.zero(), a)
    }

    pub fn mul(&self, a: &ModElement, b: &ModElement) -> ModElement {
        self.check(a);
        self.check(b);
        let mut out = vec![0u64; self.words];
        let mut scratch = vec![0u64; 2 * self.words];
        self.mont_mul_slices(a.value.limbs(), b.value.limbs(), &mut out, &mut scratch);
        ModElement { value: WideUInt::from_limbs(out), ctx_id: self.id }
    }

    /// Modular exponentiation, exponent in ordinary binary representation.
    pub fn pow(&self, base: &ModElement, exp: &WideUInt) -> ModElement {
        self.check(base);
        let mut acc = self.one();
        for i in (0..exp.bit_length()).rev() {
            acc = self.mul(&acc, &acc);
            if exp.bit_at(i) {
                acc = self.mul(&acc, base);
            }
        }
        acc
    }

    pub fn pow_u64(&self, base: &ModElement, exp: u64) -> ModElement {
        self.pow(base, &WideUInt::from_u64(64, exp).resize(self.value_capacity))
    }

    /// Inverse by Fermat exponentiation with a verification multiply; the
    /// check catches non-invertible elements (and composite moduli).
    pub fn inverse(&self, a: &ModElement) -> Result<ModElement, Error> {
        self.check(a);
        let (q_minus_2, borrow) = self.q.sub_with_borrow(&WideUInt::from_u64(self.value_capacity, 2));
        debug_assert!(!borrow);
        let inv = self.pow(a, &q_minus_2);
        if self.mul(&inv, a) != self.one() {
            return Err(Error::NotInvertible);
        }
        Ok(inv)
    }

    /// Reassembles an element from its Montgomery-form words (inverse of
    /// `ModElement::raw`). The value must already be reduced.
    pub fn element_from_raw(&self, value: WideUInt) -> ModElement {
        let value = value.resize(self.value_capacity);
        assert!(value.compare(&self.q) == Ordering::Less, "raw value {value} not reduced mod {}", self.q);
        ModElement { value, ctx_id: self.id }
    }

    /// Montgomery reduction of a 2W-bit value t < q*R, returning t*R^-1 mod q.
    pub fn montgomery_reduce(&self, t: &WideUInt) -> WideUInt {
        assert_eq!(
            t.capacity_bits(),
            2 * self.value_capacity,
            "montgomery_reduce expects a {}-bit input",
            2 * self.value_capacity
        );
        let q_r = self.q.resize(2 * self.value_capacity).shift_left(self.w_bits);
        assert!(t.compare(&q_r) == Ordering::Less, "montgomery_reduce input must be below q*R");
        let mut work = t.limbs().to_vec();
        let mut out = vec![0u64; self.words];
        self.mont_reduce_slices(&mut work, &mut out);
        WideUInt::from_limbs(out)
    }

    // --- slice engine -----------------------------------------------------
    //
    // The polynomial layer stores residues as flat word arrays (`words` limbs
    // per coefficient) and calls these to avoid per-element allocation.

    pub(crate) fn add_mod_slices(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        let mut carry = 0u64;
        for i in 0..self.words {
            let (v, c) = adc(a[i], b[i], carry);
            out[i] = v;
            carry = c;
        }
        debug_assert_eq!(carry, 0, "reduced inputs cannot carry past W-1 bits");
        if cmp_slices(out, &self.q_limbs) != Ordering::Less {
            sub_assign(out, &self.q_limbs);
        }
    }

    /// a = (a + b) mod q in place.
    pub(crate) fn add_mod_assign_slices(&self, a: &mut [u64], b: &[u64]) {
        let mut carry = 0u64;
        for i in 0..self.words {
            let (v, c) = adc(a[i], b[i], carry);
            a[i] = v;
            carry = c;
        }
        debug_assert_eq!(carry, 0, "reduced inputs cannot carry past W-1 bits");
        if cmp_slices(a, &self.q_limbs) != Ordering::Less {
            sub_assign(a, &self.q_limbs);
        }
    }

    /// a = (a - b) mod q in place.
    pub(crate) fn sub_mod_assign_slices(&self, a: &mut [u64], b: &[u64]) {
        let mut borrow = 0u64;
        for i in 0..self.words {
            let (v, bo) = sbb(a[i], b[i], borrow);
            a[i] = v;
            borrow = bo;
        }
        if borrow != 0 {
            let mut carry = 0u64;
            for (x, &q) in a.iter_mut().zip(&self.q_limbs) {
                let (v, c) = adc(*x, q, carry);
                *x = v;
                carry = c;
            }
        }
    }

    pub(crate) fn sub_mod_slices(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        let mut borrow = 0u64;
        for i in 0..self.words {
            let (v, bo) = sbb(a[i], b[i], borrow);
            out[i] = v;
            borrow = bo;
        }
        if borrow != 0 {
            let mut carry = 0u64;
            for (x, &q) in out.iter_mut().zip(&self.q_limbs) {
                let (v, c) = adc(*x, q, carry);
                *x = v;
                carry = c;
            }
        }
    }

    /// out = a * b * R^-1 mod q. `scratch` must hold 2*words limbs.
    pub(crate) fn mont_mul_slices(&self, a: &[u64], b: &[u64], out: &mut [u64], scratch: &mut [u64]) {
        if self.w_bits == 32 {
            let t = a[0] as u128 * b[0] as u128;
            out[0] = self.reduce_32(t);
            return;
        }
        mul_schoolbook(&a[..self.words], &b[..self.words], &mut scratch[..2 * self.words]);
        self.mont_reduce_slices(scratch, out);
    }

    /// a = a * b * R^-1 mod q in place. `scratch` must hold 2*words limbs.
    pub(crate) fn mont_mul_assign_slices(&self, a: &mut [u64], b: &[u64], scratch: &mut [u64]) {
        if self.w_bits == 32 {
            let t = a[0] as u128 * b[0] as u128;
            a[0] = self.reduce_32(t);
            return;
        }
        mul_schoolbook(&a[..self.words], &b[..self.words], &mut scratch[..2 * self.words]);
        self.mont_reduce_slices(scratch, a);
    }

    /// In-place word-iterative reduction of t (2*words limbs) into out.
    /// Mirrors the datapath loop: each round folds one word with a single
    /// multiply-add of (m, q) and shifts the window up by one word.
    pub(crate) fn mont_reduce_slices(&self, t: &mut [u64], out: &mut [u64]) {
        if self.w_bits == 32 {
            let wide = t[0] as u128 | ((t[1] as u128) << 64);
            out[0] = self.reduce_32(wide);
            t[0] = 0;
            t[1] = 0;
            return;
        }
        let n = self.words;
        debug_assert_eq!(t.len(), 2 * n);
        for i in 0..n {
            let m = t[i].wrapping_mul(self.q_inv_neg);
            let mut carry = 0u64;
            for j in 0..n {
                let acc = t[i + j] as u128 + m as u128 * self.q_limbs[j] as u128 + carry as u128;
                t[i + j] = acc as u64;
                carry = (acc >> 64) as u64;
            }
            let mut idx = i + n;
            while carry != 0 {
                debug_assert!(idx < 2 * n, "reduction carry escaped 2W bits");
                let (v, c) = adc(t[idx], carry, 0);
                t[idx] = v;
                carry = c;
                idx += 1;
            }
        }
        out.copy_from_slice(&t[n..2 * n]);
        if cmp_slices(out, &self.q_limbs) != Ordering::Less {
            sub_assign(out, &self.q_limbs);
        }
        t.fill(0);
    }

    /// 32-bit datapath: one fold of the low word, inputs below q*R < 2^62.
    fn reduce_32(&self, t: u128) -> u64 {
        let q = self.q_limbs[0];
        let m = (t as u32).wrapping_mul(self.q_inv_neg as u32) as u128;
        let folded = (t + m * q as u128) >> 32;
        let mut r = folded as u64;
        if r >= q {
            r -= q;
        }
        r
    }
}

fn cmp_slices(a: &[u64], b: &[u64]) -> Ordering {
    for i in (0..a.len()).rev() {
        match a[i].cmp(&b[i]) {
            Ordering::Equal => continue,
            ord => return ord,
        }
    }
    Ordering::Equal
}

fn sub_assign(a: &mut [u64], b: &[u64]) {
    let mut borrow = 0u64;
    for i in 0..a.len() {
        let (v, bo) = sbb(a[i], b[i], borrow);
        a[i] = v;
        borrow = bo;
    }
    debug_assert_eq!(borrow, 0);
}

/// -q^-1 mod 2^bits by Newton iteration; q must be odd.
fn neg_inv_pow2(q0: u64, bits: usize) -> u64 {
    let mut inv: u64 = 1;
    // Each step doubles the number of correct low bits.
    for _ in 0..6 {
        inv = inv.wrapping_mul(2u64.wrapping_sub(q0.wrapping_mul(inv)));
    }
    let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
    inv.wrapping_neg() & mask
}

// --- primality and NTT-friendly prime search ------------------------------

const SMALL_PRIMES: [u64; 54] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257,
];

/// Witnesses proving primality for every odd number below 3.3 * 10^24.
const SMALL_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Miller-Rabin rounds for candidates above the deterministic-witness range.
pub const LARGE_MR_ROUNDS: usize = 64;

/// Miller-Rabin primality test. Below 2^64 a fixed witness set makes the
/// answer deterministic; above it, 64 rounds with bases drawn from an RNG
/// seeded by the candidate itself keep prime generation reproducible.
/// Candidates must fit under 2^(W-2) so a reduction context can host them.
pub fn is_probable_prime(w_bits: usize, candidate: &WideUInt) -> bool {
    if candidate.bit_length() <= 1 {
        return false;
    }
    if candidate.limbs()[0] & 1 == 0 {
        return candidate.bit_length() == 2 && candidate.low_u64() == 2;
    }
    for p in SMALL_PRIMES {
        if candidate.div_rem_u64(p).1 == 0 {
            return candidate.bit_length() <= 64 && candidate.low_u64() == p;
        }
    }
    let ctx = match MontgomeryContext::new(w_bits, candidate.clone()) {
        Ok(ctx) => ctx,
        Err(_) => return false,
    };
    let one = ctx.one();
    let minus_one = ctx.neg(&one);
    let q_minus_1 = {
        let (v, _) = candidate.sub_with_borrow(&WideUInt::one(candidate.capacity_bits()));
        v.resize(ctx.value_capacity)
    };
    let s = (0..q_minus_1.bit_length()).take_while(|&i| !q_minus_1.bit_at(i)).count();
    let d = q_minus_1.shift_right(s);

    let witness_passes = |a: &ModElement| -> bool {
        let mut x = ctx.pow(a, &d);
        if x == one || x == minus_one {
            return true;
        }
        for _ in 1..s {
            x = ctx.mul(&x, &x);
            if x == minus_one {
                return true;
            }
        }
        false
    };

    if candidate.bit_length() <= 64 {
        for w in SMALL_WITNESSES {
            if candidate.compare(&WideUInt::from_u64(candidate.capacity_bits(), w)) != Ordering::Greater {
                continue;
            }
            if !witness_passes(&ctx.from_u64(w)) {
                return false;
            }
        }
        return true;
    }

    let mut rng = StdRng::seed_from_u64(candidate.limbs()[0] ^ 0x9e37_79b9_7f4a_7c15);
    for _ in 0..LARGE_MR_ROUNDS {
        let base = random_below(&mut rng, candidate);
        if base.bit_length() <= 1 {
            continue;
        }
        if !witness_passes(&ctx.to_montgomery(&base)) {
            return false;
        }
    }
    true
}

fn random_below(rng: &mut StdRng, bound: &WideUInt) -> WideUInt {
    let bits = bound.bit_length();
    let words = bound.capacity_bits() / LIMB_BITS;
    loop {
        let mut limbs = vec![0u64; words];
        for (i, limb) in limbs.iter_mut().enumerate() {
            if i * LIMB_BITS < bits {
                *limb = rng.gen();
            }
        }
        let top = (bits - 1) / LIMB_BITS;
        let used = bits - top * LIMB_BITS;
        if used < LIMB_BITS {
            limbs[top] &= (1u64 << used) - 1;
        }
        let v = WideUInt::from_limbs(limbs);
        if v.compare(bound) == Ordering::Less {
            return v;
        }
    }
}

/// Returns the `index`-th largest prime q with q < 2^(W-2) and q = 1 (mod 2n),
/// i.e. an NTT-friendly modulus for negacyclic transforms of length n.
pub fn find_ntt_prime(w_bits: usize, n: usize, index: usize) -> Result<WideUInt, Error> {
    let primes = ntt_primes(w_bits, n, index + 1)?;
    Ok(primes.into_iter().nth(index).unwrap())
}

/// The `count` largest NTT-friendly primes below 2^(W-2), descending.
pub fn ntt_primes(w_bits: usize, n: usize, count: usize) -> Result<Vec<WideUInt>, Error> {
    ntt_primes_below(w_bits, w_bits - 2, n, count)
}

/// The `count` largest primes below 2^bound_bits with q = 1 (mod 2n),
/// descending, hosted at datapath width `w_bits`. A bound tighter than the
/// W-2 guard limit yields the narrower moduli a rescaling chain wants.
pub fn ntt_primes_below(
    w_bits: usize,
    bound_bits: usize,
    n: usize,
    count: usize,
) -> Result<Vec<WideUInt>, Error> {
    if !SUPPORTED_WIDTHS.contains(&w_bits) {
        return Err(Error::InvalidParameter(format!("unsupported width {w_bits}")));
    }
    if bound_bits > w_bits - 2 {
        return Err(Error::InvalidParameter(format!(
            "prime bound 2^{bound_bits} exceeds the 2^{} guard limit",
            w_bits - 2
        )));
    }
    if !n.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("transform length {n} is not a power of two")));
    }
    let capacity = w_bits.max(64);
    let step = 2 * (n as u64);
    if bound_bits < 64 && step >= (1u64 << bound_bits) {
        return Err(Error::InvalidParameter(format!("2n = {step} leaves no room below 2^{bound_bits}")));
    }
    // Largest candidate = 1 (mod 2n) strictly below 2^bound_bits. Both are
    // powers of two, so (2^b - 1) mod 2n = 2n - 1 and the start is in range.
    let bound = WideUInt::one(capacity).shift_left(bound_bits);
    let (top, _) = bound.sub_with_borrow(&WideUInt::one(capacity));
    let offset = top.div_rem_u64(step).1;
    let (below, _) = top.sub_with_borrow(&WideUInt::from_u64(capacity, offset));
    let (mut candidate, _) = below.add_with_carry(&WideUInt::one(capacity));
    let step_w = WideUInt::from_u64(capacity, step);
    let mut found = Vec::with_capacity(count);
    while found.len() < count {
        if is_probable_prime(w_bits, &candidate) {
            found.push(candidate.clone());
        }
        let (next, borrow) = candidate.sub_with_borrow(&step_w);
        if borrow || next.is_zero() {
            return Err(Error::InvalidParameter(format!(
                "exhausted primes = 1 (mod {step}) below 2^{bound_bits}"
            )));
        }
        candidate = next;
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx64(q: u64) -> MontgomeryContext {
        MontgomeryContext::new(64, WideUInt::from_u64(64, q)).unwrap()
    }

    #[test]
    fn mul_small_case() {
        // 5 * 7 = 35 = 1 (mod 17)
        let ctx = ctx64(17);
        let p = ctx.mul(&ctx.from_u64(5), &ctx.from_u64(7));
        assert_eq!(ctx.from_montgomery(&p).low_u64(), 1);
    }

    #[test]
    fn round_trip_and_identity() {
        const Q: u64 = 0x3fff_ffff_ffff_ffc7; // 2^62 - 57, prime
        let ctx = ctx64(Q);
        assert!(is_probable_prime(64, ctx.modulus()));
        for x in [0u64, 1, 2, 12345, Q - 1] {
            let e = ctx.from_u64(x);
            assert_eq!(ctx.from_montgomery(&e).low_u64(), x % Q);
        }
    }

    #[test]
    fn inverse_of_zero_fails() {
        let ctx = ctx64(17);
        assert!(matches!(ctx.inverse(&ctx.zero()), Err(Error::NotInvertible)));
        let inv5 = ctx.inverse(&ctx.from_u64(5)).unwrap();
        assert_eq!(ctx.from_montgomery(&inv5).low_u64(), 7);
    }

    #[test]
    fn guard_bits_enforced() {
        // 2^62 + 1 needs 63 bits: no guard bits left at W=64.
        let q = WideUInt::one(64).shift_left(62);
        let (q, _) = q.add_with_carry(&WideUInt::one(64));
        assert!(MontgomeryContext::new(64, q).is_err());
    }

    #[test]
    fn even_modulus_rejected() {
        assert!(MontgomeryContext::new(64, WideUInt::from_u64(64, 18)).is_err());
    }

    #[test]
    fn ntt_prime_structure() {
        let q = find_ntt_prime(64, 1024, 0).unwrap();
        assert!(q.bit_length() <= 62);
        let rem = q.rem(&WideUInt::from_u64(64, 2048));
        assert_eq!(rem.low_u64(), 1);
        // Distinct consecutive primes.
        let qs = ntt_primes(64, 1024, 3).unwrap();
        assert_eq!(qs.len(), 3);
        assert!(qs[0].compare(&qs[1]) == std::cmp::Ordering::Greater);
        assert!(qs[1].compare(&qs[2]) == std::cmp::Ordering::Greater);
    }

    #[test]
    fn prime_search_at_32_bits() {
        let q = find_ntt_prime(32, 4096, 0).unwrap();
        assert!(q.bit_length() <= 30);
        assert_eq!(q.rem(&WideUInt::from_u64(64, 8192)).low_u64(), 1);
        assert!(is_probable_prime(32, &q));
    }

    #[test]
    fn montgomery_reduce_bounds() {
        let ctx = ctx64(17);
        // t = 0 reduces to 0; t = q*R - 1 is the largest legal input.
        assert!(ctx.montgomery_reduce(&WideUInt::zero(128)).is_zero());
        let q_r = WideUInt::from_u64(128, 17).shift_left(64);
        let (top, _) = q_r.sub_with_borrow(&WideUInt::one(128));
        let out = ctx.montgomery_reduce(&top);
        assert!(out.compare(&WideUInt::from_u64(64, 17)) == Ordering::Less);
    }
}
