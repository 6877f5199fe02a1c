//! Fixed-capacity unsigned integers built from 64-bit limbs.
//!
//! `WideUInt` models the datapath words of a wide-word accelerator: a value
//! carries its capacity (64 to 2048 bits) at runtime, limbs are stored
//! least-significant first, and arithmetic is exact within the capacity.
//! Capacity is data, not a type parameter, so the same code path serves every
//! datapath width under test.

use std::cmp::Ordering;
use std::fmt;

use crate::Error;

/// Bits per limb. Carry chains and the Montgomery word loop assume this width.
pub const LIMB_BITS: usize = 64;

/// Capacities a `WideUInt` may be constructed with.
pub const CAPACITIES: [usize; 6] = [64, 128, 256, 512, 1024, 2048];

/// Unsigned integer with a runtime-chosen power-of-two bit capacity.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct WideUInt {
    capacity_bits: usize,
    limbs: Vec<u64>,
}

fn assert_capacity(capacity_bits: usize) {
    assert!(
        CAPACITIES.contains(&capacity_bits) || capacity_bits == 2 * 2048,
        "unsupported WideUInt capacity {capacity_bits}"
    );
}

impl WideUInt {
    /// Zero value of the given capacity.
    pub fn zero(capacity_bits: usize) -> Self {
        assert_capacity(capacity_bits);
        WideUInt { capacity_bits, limbs: vec![0; capacity_bits / LIMB_BITS] }
    }

    /// Smallest value: one.
    pub fn one(capacity_bits: usize) -> Self {
        Self::from_u64(capacity_bits, 1)
    }

    pub fn from_u64(capacity_bits: usize, value: u64) -> Self {
        let mut out = Self::zero(capacity_bits);
        out.limbs[0] = value;
        out
    }

    pub fn from_u128(capacity_bits: usize, value: u128) -> Self {
        let mut out = Self::zero(capacity_bits);
        out.limbs[0] = value as u64;
        if out.limbs.len() > 1 {
            out.limbs[1] = (value >> 64) as u64;
        } else {
            assert!(value >> 64 == 0, "value exceeds capacity {capacity_bits}");
        }
        out
    }

    /// Builds a value from little-endian limbs; `limbs.len()` fixes the capacity.
    pub fn from_limbs(limbs: Vec<u64>) -> Self {
        let capacity_bits = limbs.len() * LIMB_BITS;
        assert_capacity(capacity_bits);
        WideUInt { capacity_bits, limbs }
    }

    pub fn capacity_bits(&self) -> usize {
        self.capacity_bits
    }

    pub fn limbs(&self) -> &[u64] {
        &self.limbs
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.iter().all(|&l| l == 0)
    }

    /// Index of the highest set bit plus one; zero for the value zero.
    pub fn bit_length(&self) -> usize {
        for (i, &limb) in self.limbs.iter().enumerate().rev() {
            if limb != 0 {
                return i * LIMB_BITS + (LIMB_BITS - limb.leading_zeros() as usize);
            }
        }
        0
    }

    pub fn bit_at(&self, index: usize) -> bool {
        assert!(index < self.capacity_bits, "bit index {index} out of capacity {}", self.capacity_bits);
        (self.limbs[index / LIMB_BITS] >> (index % LIMB_BITS)) & 1 == 1
    }

    /// Lowest 64 bits.
    pub fn low_u64(&self) -> u64 {
        self.limbs[0]
    }

    fn check_same_capacity(&self, other: &Self, op: &str) {
        assert_eq!(
            self.capacity_bits, other.capacity_bits,
            "{op} on mismatched capacities {} and {}",
            self.capacity_bits, other.capacity_bits
        );
    }

    /// Adds, returning the wrapped sum and the carry out of the top limb.
    pub fn add_with_carry(&self, other: &Self) -> (Self, bool) {
        self.check_same_capacity(other, "add_with_carry");
        let mut out = Self::zero(self.capacity_bits);
        let mut carry = 0u64;
        for i in 0..self.limbs.len() {
            let (limb, c) = adc(self.limbs[i], other.limbs[i], carry);
            out.limbs[i] = limb;
            carry = c;
        }
        (out, carry != 0)
    }

    /// Subtracts, returning the wrapped difference and the borrow out of the top limb.
    pub fn sub_with_borrow(&self, other: &Self) -> (Self, bool) {
        self.check_same_capacity(other, "sub_with_borrow");
        let mut out = Self::zero(self.capacity_bits);
        let mut borrow = 0u64;
        for i in 0..self.limbs.len() {
            let (limb, b) = sbb(self.limbs[i], other.limbs[i], borrow);
            out.limbs[i] = limb;
            borrow = b;
        }
        (out, borrow != 0)
    }

    /// Full product at doubled capacity; never overflows.
    pub fn mul_full(&self, other: &Self) -> Self {
        self.check_same_capacity(other, "mul_full");
        let n = self.limbs.len();
        let mut limbs = vec![0u64; 2 * n];
        mul_schoolbook(&self.limbs, &other.limbs, &mut limbs);
        WideUInt { capacity_bits: 2 * self.capacity_bits, limbs }
    }

    /// Product at the same capacity; panics if the true product does not fit.
    /// Used where the caller can prove the bound (CRT term accumulation).
    pub fn mul_checked(&self, other: &Self) -> Self {
        self.check_same_capacity(other, "mul_checked");
        let n = self.limbs.len();
        let mut wide = vec![0u64; 2 * n];
        mul_schoolbook(&self.limbs, &other.limbs, &mut wide);
        assert!(
            wide[n..].iter().all(|&l| l == 0),
            "mul_checked product exceeds capacity {}",
            self.capacity_bits
        );
        wide.truncate(n);
        WideUInt { capacity_bits: self.capacity_bits, limbs: wide }
    }

    pub fn compare(&self, other: &Self) -> Ordering {
        self.check_same_capacity(other, "compare");
        for i in (0..self.limbs.len()).rev() {
            match self.limbs[i].cmp(&other.limbs[i]) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }

    /// Logical shift left within the capacity; bits shifted past the top are lost.
    pub fn shift_left(&self, bits: usize) -> Self {
        let mut out = Self::zero(self.capacity_bits);
        let limb_shift = bits / LIMB_BITS;
        let bit_shift = bits % LIMB_BITS;
        let n = self.limbs.len();
        for i in (0..n).rev() {
            if i < limb_shift {
                break;
            }
            let src = i - limb_shift;
            let mut limb = self.limbs[src] << bit_shift;
            if bit_shift > 0 && src > 0 {
                limb |= self.limbs[src - 1] >> (LIMB_BITS - bit_shift);
            }
            out.limbs[i] = limb;
        }
        out
    }

    /// Logical shift right; zero fill from the top.
    pub fn shift_right(&self, bits: usize) -> Self {
        let mut out = Self::zero(self.capacity_bits);
        let limb_shift = bits / LIMB_BITS;
        let bit_shift = bits % LIMB_BITS;
        let n = self.limbs.len();
        for i in 0..n {
            let src = i + limb_shift;
            if src >= n {
                break;
            }
            let mut limb = self.limbs[src] >> bit_shift;
            if bit_shift > 0 && src + 1 < n {
                limb |= self.limbs[src + 1] << (LIMB_BITS - bit_shift);
            }
            out.limbs[i] = limb;
        }
        out
    }

    /// Truncates or zero-extends to a new capacity. Truncation asserts that no
    /// set bit is dropped.
    pub fn resize(&self, capacity_bits: usize) -> Self {
        assert_capacity(capacity_bits);
        let mut out = Self::zero(capacity_bits);
        let n = out.limbs.len().min(self.limbs.len());
        out.limbs[..n].copy_from_slice(&self.limbs[..n]);
        assert!(
            self.limbs[n..].iter().all(|&l| l == 0),
            "resize to {capacity_bits} bits drops set bits"
        );
        out
    }

    /// Remainder modulo `m` (shift-subtract long division). `m` must be nonzero
    /// and of the same capacity. Setup-path plumbing, not a hot path.
    pub fn rem(&self, m: &Self) -> Self {
        self.check_same_capacity(m, "rem");
        assert!(!m.is_zero(), "rem by zero");
        if self.compare(m) == Ordering::Less {
            return self.clone();
        }
        let mut r = Self::zero(self.capacity_bits);
        for i in (0..self.bit_length()).rev() {
            // r = (r << 1) | bit_i, then conditionally subtract m.
            r = r.shift_left(1);
            if self.bit_at(i) {
                r.limbs[0] |= 1;
            }
            if r.compare(m) != Ordering::Less {
                let (d, borrow) = r.sub_with_borrow(m);
                debug_assert!(!borrow);
                r = d;
            }
        }
        r
    }

    /// Division by a single limb, returning (quotient, remainder).
    pub fn div_rem_u64(&self, divisor: u64) -> (Self, u64) {
        assert!(divisor != 0, "division by zero");
        let mut out = Self::zero(self.capacity_bits);
        let mut rem: u64 = 0;
        for i in (0..self.limbs.len()).rev() {
            let acc = ((rem as u128) << 64) | self.limbs[i] as u128;
            out.limbs[i] = (acc / divisor as u128) as u64;
            rem = (acc % divisor as u128) as u64;
        }
        (out, rem)
    }

    /// Parses a base-10 string. Fails on empty input, non-digits, or values
    /// that exceed the capacity.
    pub fn from_decimal_string(capacity_bits: usize, s: &str) -> Result<Self, Error> {
        if s.is_empty() {
            return Err(Error::Parse("empty decimal string".into()));
        }
        let mut out = Self::zero(capacity_bits);
        // Consume 19 digits at a time: 10^19 is the largest power of ten in u64.
        const CHUNK: usize = 19;
        const CHUNK_BASE: u64 = 10_000_000_000_000_000_000;
        let bytes = s.as_bytes();
        let mut pos = 0;
        while pos < bytes.len() {
            let take = CHUNK.min(bytes.len() - pos);
            let chunk = &s[pos..pos + take];
            let value: u64 = chunk
                .parse()
                .map_err(|_| Error::Parse(format!("invalid decimal string {s:?}")))?;
            let base = if take == CHUNK { CHUNK_BASE } else { 10u64.pow(take as u32) };
            out.mul_add_u64(base, value)
                .map_err(|_| Error::Parse(format!("decimal value exceeds {capacity_bits} bits")))?;
            pos += take;
        }
        Ok(out)
    }

    /// In-place `self = self * m + a`, erroring on overflow past the capacity.
    fn mul_add_u64(&mut self, m: u64, a: u64) -> Result<(), ()> {
        let mut carry = a as u128;
        for limb in self.limbs.iter_mut() {
            let acc = *limb as u128 * m as u128 + carry;
            *limb = acc as u64;
            carry = acc >> 64;
        }
        if carry != 0 {
            Err(())
        } else {
            Ok(())
        }
    }

    pub fn to_decimal_string(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        const CHUNK_BASE: u64 = 10_000_000_000_000_000_000;
        let mut chunks = Vec::new();
        let mut cur = self.clone();
        while !cur.is_zero() {
            let (q, r) = cur.div_rem_u64(CHUNK_BASE);
            chunks.push(r);
            cur = q;
        }
        let mut s = chunks.pop().unwrap().to_string();
        for chunk in chunks.into_iter().rev() {
            s.push_str(&format!("{chunk:019}"));
        }
        s
    }

    /// Parses a lowercase or uppercase hex string without prefix.
    pub fn from_hex_string(capacity_bits: usize, s: &str) -> Result<Self, Error> {
        if s.is_empty() || s.len() > capacity_bits / 4 {
            return Err(Error::Parse(format!("hex string length {} invalid for {capacity_bits} bits", s.len())));
        }
        let mut out = Self::zero(capacity_bits);
        for (i, c) in s.bytes().rev().enumerate() {
            let digit = (c as char)
                .to_digit(16)
                .ok_or_else(|| Error::Parse(format!("invalid hex string {s:?}")))? as u64;
            out.limbs[i / 16] |= digit << (4 * (i % 16));
        }
        Ok(out)
    }

    pub fn to_hex_string(&self) -> String {
        let mut s = String::new();
        let mut started = false;
        for &limb in self.limbs.iter().rev() {
            if started {
                s.push_str(&format!("{limb:016x}"));
            } else if limb != 0 {
                s.push_str(&format!("{limb:x}"));
                started = true;
            }
        }
        if s.is_empty() {
            s.push('0');
        }
        s
    }
}

impl fmt::Debug for WideUInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WideUInt<{}>(0x{})", self.capacity_bits, self.to_hex_string())
    }
}

impl fmt::Display for WideUInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

/// Add with carry: returns (sum, carry out), carry in/out are 0 or 1.
#[inline]
pub(crate) fn adc(a: u64, b: u64, carry: u64) -> (u64, u64) {
    let acc = a as u128 + b as u128 + carry as u128;
    (acc as u64, (acc >> 64) as u64)
}

/// Subtract with borrow: returns (difference, borrow out).
#[inline]
pub(crate) fn sbb(a: u64, b: u64, borrow: u64) -> (u64, u64) {
    let acc = (a as u128).wrapping_sub(b as u128 + borrow as u128);
    (acc as u64, (acc >> 127) as u64)
}

/// Schoolbook multiply of limb slices into `out`, which must hold
/// `a.len() + b.len()` limbs and is fully overwritten.
pub(crate) fn mul_schoolbook(a: &[u64], b: &[u64], out: &mut [u64]) {
    debug_assert_eq!(out.len(), a.len() + b.len());
    out.fill(0);
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        let mut carry = 0u128;
        for (j, &bj) in b.iter().enumerate() {
            let acc = out[i + j] as u128 + ai as u128 * bj as u128 + carry;
            out[i + j] = acc as u64;
            carry = acc >> 64;
        }
        let mut idx = i + b.len();
        while carry != 0 {
            let acc = out[idx] as u128 + carry;
            out[idx] = acc as u64;
            carry = acc >> 64;
            idx += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_round_trip() {
        let v = WideUInt::from_decimal_string(256, "340282366920938463463374607431768211456").unwrap();
        assert_eq!(v.to_decimal_string(), "340282366920938463463374607431768211456");
        assert_eq!(v.bit_length(), 129);
    }

    #[test]
    fn over_capacity_decimal_rejected() {
        // 2^64 does not fit in 64 bits.
        assert!(WideUInt::from_decimal_string(64, "18446744073709551616").is_err());
        assert!(WideUInt::from_decimal_string(64, "18446744073709551615").is_ok());
    }

    #[test]
    fn add_carry_boundary() {
        let max = WideUInt::from_limbs(vec![u64::MAX, u64::MAX]);
        let one = WideUInt::one(128);
        let (sum, carry) = max.add_with_carry(&one);
        assert!(sum.is_zero());
        assert!(carry);
        let (diff, borrow) = sum.sub_with_borrow(&one);
        assert!(borrow);
        assert_eq!(diff, max);
    }

    #[test]
    fn shift_inverse_on_low_bits() {
        let v = WideUInt::from_u64(128, 0xdead_beef);
        assert_eq!(v.shift_left(40).shift_right(40), v);
        // Bits pushed past the top are lost.
        let top = WideUInt::from_u64(64, 1).shift_left(63);
        assert!(top.shift_left(1).is_zero());
    }

    #[test]
    fn rem_small_cases() {
        let a = WideUInt::from_u64(64, 1000);
        let m = WideUInt::from_u64(64, 17);
        assert_eq!(a.rem(&m).low_u64(), 1000 % 17);
    }

    #[test]
    fn mul_full_doubles_capacity() {
        let a = WideUInt::from_u64(64, u64::MAX);
        let p = a.mul_full(&a);
        assert_eq!(p.capacity_bits(), 128);
        assert_eq!(p.to_decimal_string(), (u64::MAX as u128 * u64::MAX as u128).to_string());
    }

    #[test]
    #[should_panic(expected = "mismatched capacities")]
    fn capacity_mismatch_panics() {
        let a = WideUInt::from_u64(64, 1);
        let b = WideUInt::from_u64(128, 1);
        let _ = a.add_with_carry(&b);
    }

    #[test]
    fn hex_round_trip() {
        let v = WideUInt::from_hex_string(256, "ffee00112233445566778899aabbccdd").unwrap();
        assert_eq!(v.to_hex_string(), "ffee00112233445566778899aabbccdd");
    }
}
