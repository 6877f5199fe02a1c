//! A compact RNS-CKKS layer: enough of the scheme to exercise every kernel
//! the arithmetic stack provides and to count those kernels faithfully.
//!
//! Working conventions:
//! - Ciphertext residues live in evaluation domain, Montgomery form. All
//!   cross-modulus steps (digit decomposition, base conversion, mod-down)
//!   need plain integer values; the conversions in and out of Montgomery
//!   form are folded into constants that some multiply was going to apply
//!   anyway, so they cost nothing extra and the kernel census stays tight.
//! - Key-switch hints cover the doubled basis: the k chain moduli plus k_sp
//!   auxiliary moduli whose product P exceeds any digit. Hint residues over
//!   the chain moduli are pre-multiplied by P^-1, which removes the
//!   standalone mod-down scaling pass.
//! - Every operation takes a `KernelCounts` meter. One count is one batch
//!   over one length-N residue vector; a loop multiplying one shared input
//!   against a (b, a) pair counts once (see `census`).

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;

use crate::census::KernelCounts;
use crate::modarith::{ntt_primes_below, ModElement, MontgomeryContext};
use crate::ntt::{bit_reverse, intt_direct_scaled, ntt_direct, NttTables};
use crate::rns::{reduce_wide, RnsBasis};
use crate::wideint::{WideUInt, CAPACITIES};
use crate::Error;

/// Plain complex value for slot data; the embedding works in f64.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    pub fn conj(self) -> Self {
        Complex { re: self.re, im: -self.im }
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    fn from_angle(theta: f64) -> Self {
        Complex { re: theta.cos(), im: theta.sin() }
    }
}

impl std::ops::Add for Complex {
    type Output = Complex;
    fn add(self, o: Complex) -> Complex {
        Complex { re: self.re + o.re, im: self.im + o.im }
    }
}

impl std::ops::Sub for Complex {
    type Output = Complex;
    fn sub(self, o: Complex) -> Complex {
        Complex { re: self.re - o.re, im: self.im - o.im }
    }
}

impl std::ops::Mul for Complex {
    type Output = Complex;
    fn mul(self, o: Complex) -> Complex {
        Complex { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
}

impl std::ops::Mul<f64> for Complex {
    type Output = Complex;
    fn mul(self, s: f64) -> Complex {
        Complex { re: self.re * s, im: self.im * s }
    }
}

/// Unnormalized radix-2 transform: out[m] = sum_j in[j] e^(sign*2*pi*i*j*m/n).
fn fft(data: &mut [Complex], sign: f64) {
    let n = data.len();
    assert!(n.is_power_of_two());
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = bit_reverse(i, bits);
        if i < j {
            data.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * PI / len as f64;
        for base in (0..n).step_by(len) {
            for j in 0..len / 2 {
                let w = Complex::from_angle(ang * j as f64);
                let u = data[base + j];
                let v = data[base + j + len / 2] * w;
                data[base + j] = u + v;
                data[base + j + len / 2] = u - v;
            }
        }
        len *= 2;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Coefficient,
    Evaluation,
}

/// Residue-wise polynomial: residues[i] holds N packed elements for the i-th
/// modulus of whatever index range the owner assigned it.
#[derive(Debug, Clone)]
pub struct Polynomial {
    residues: Vec<Vec<u64>>,
    domain: Domain,
}

impl Polynomial {
    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn width(&self) -> usize {
        self.residues.len()
    }

    pub fn residue(&self, i: usize) -> &[u64] {
        &self.residues[i]
    }
}

#[derive(Debug, Clone)]
pub struct Ciphertext {
    b: Polynomial,
    a: Polynomial,
    level: usize,
    scale: f64,
}

impl Ciphertext {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn b(&self) -> &Polynomial {
        &self.b
    }

    pub fn a(&self) -> &Polynomial {
        &self.a
    }
}

#[derive(Debug, Clone)]
pub struct Plaintext {
    poly: Polynomial,
    scale: f64,
    level: usize,
}

impl Plaintext {
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn poly(&self) -> &Polynomial {
        &self.poly
    }
}

/// Decryption output: coefficient-domain residues in plain (non-Montgomery)
/// form, ready for reconstruction and decoding.
#[derive(Debug, Clone)]
pub struct DecryptedPoly {
    residues: Vec<Vec<u64>>,
    scale: f64,
    level: usize,
}

impl DecryptedPoly {
    pub fn residues(&self) -> &[Vec<u64>] {
        &self.residues
    }

    pub fn level(&self) -> usize {
        self.level
    }
}

pub struct SecretKey {
    /// Ternary key in evaluation domain over the full main+special range.
    s: Polynomial,
}

pub struct PublicKey {
    b: Polynomial,
    a: Polynomial,
}

/// Scheme parameters: ring degree, the modulus chain (k primes of equal
/// width, descending), and k_sp = k auxiliary primes sitting just above the
/// chain so their product P exceeds the chain product Q.
pub struct SchemeParams {
    n: usize,
    w_bits: usize,
    scale_bits: u32,
    sigma: f64,
    mains: Arc<RnsBasis>,
    specials: Arc<RnsBasis>,
}

impl SchemeParams {
    pub fn build(
        n: usize,
        w_bits: usize,
        q_target_bits: usize,
        k: usize,
        scale_bits: u32,
        sigma: f64,
    ) -> Result<Self, Error> {
        if !n.is_power_of_two() || n < 4 {
            return Err(Error::InvalidParameter(format!("ring degree {n} must be a power of two >= 4")));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("chain length must be positive".into()));
        }
        if sigma < 0.0 {
            return Err(Error::InvalidParameter("sigma must be non-negative".into()));
        }
        let modulus_bits = q_target_bits.div_ceil(k);
        if modulus_bits <= scale_bits as usize {
            return Err(Error::InvalidParameter(format!(
                "scale 2^{scale_bits} does not fit under {modulus_bits}-bit chain moduli"
            )));
        }
        let k_sp = k;
        // One descending scan; the largest primes become the auxiliary basis,
        // so each auxiliary prime exceeds each chain prime and P > Q.
        let primes = ntt_primes_below(w_bits, modulus_bits, n, k_sp + k)?;
        let specials = Arc::new(RnsBasis::new(w_bits, primes[..k_sp].to_vec())?);
        let mains = Arc::new(RnsBasis::new(w_bits, primes[k_sp..].to_vec())?);
        Ok(SchemeParams { n, w_bits, scale_bits, sigma, mains, specials })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.mains.k()
    }

    pub fn k_sp(&self) -> usize {
        self.specials.k()
    }

    pub fn w_bits(&self) -> usize {
        self.w_bits
    }

    pub fn scale(&self) -> f64 {
        (self.scale_bits as f64).exp2()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mains(&self) -> &Arc<RnsBasis> {
        &self.mains
    }

    pub fn specials(&self) -> &Arc<RnsBasis> {
        &self.specials
    }
}

/// Shared shape of every divide-out step (key-switch mod-down, fused
/// multiply mod-down, rescale): take plain digits of the divisor residues
/// via a scaled inverse transform, lift them onto the targets with one
/// constant per (divisor, target) pair, subtract, and optionally apply a
/// final per-target scaling.
struct ModDownPrecomp {
    divisors: Vec<usize>,
    targets: Vec<usize>,
    /// Plain per-divisor factor folded into the inverse transform:
    /// (1/n) * (D/d)^-1 mod d.
    intt_factors: Vec<Vec<u64>>,
    /// cross[d][t], raw Montgomery words of ((D/d) mod t) * F * R^2 where F
    /// is the part of 1/D not handled elsewhere; the R^2 turns the plain
    /// digit back into Montgomery form during the lift multiply.
    cross: Vec<Vec<Vec<u64>>>,
    /// Per-target q_last^-1 in Montgomery form, for the divide steps whose
    /// divisor includes a chain modulus.
    post_scale: Option<Vec<Vec<u64>>>,
}

struct LevelPrecomp {
    /// Divisor = the auxiliary basis P; targets = active chain moduli.
    moddown: ModDownPrecomp,
    /// Divisor = P * q_last; targets = active moduli minus the last. The
    /// combined relinearize-and-rescale step of fmul. None at level 1.
    moddown_fused: Option<ModDownPrecomp>,
    /// Divisor = q_last alone. None at level 1.
    rescale: Option<ModDownPrecomp>,
    /// Chain product and its half, for centered reconstruction.
    q_product: WideUInt,
    q_half: WideUInt,
    basis: Arc<RnsBasis>,
}

/// Per-digit raise tables for one hint at one level: sources are the active
/// group moduli, targets everything else the raised digit must cover.
struct RaiseDigit {
    sources: Vec<usize>,
    targets: Vec<usize>,
    intt_factors: Vec<Vec<u64>>,
    cross: Vec<Vec<Vec<u64>>>,
    /// Scalar on the reused source residues ((Q_gen complement)^-1), absent
    /// when the hint has a single digit and the factor is one.
    own_scalar: Option<Vec<Vec<u64>>>,
}

struct GaloisData {
    steps: i64,
    element: u64,
    perm: Vec<usize>,
}

/// Gadget key-switch hint: `dnum` digit pairs over the doubled basis, with
/// P^-1 folded into the chain-modulus residues. `raise[level-1]` holds the
/// digit decomposition tables active at that level.
pub struct KeySwitchHint {
    dnum: usize,
    h0: Vec<Polynomial>,
    h1: Vec<Polynomial>,
    raise: Vec<Vec<RaiseDigit>>,
    galois: Option<GaloisData>,
}

impl KeySwitchHint {
    pub fn dnum(&self) -> usize {
        self.dnum
    }

    /// Digits the raise step produces at the given level (one per active
    /// chain modulus group).
    pub fn digit_count(&self, level: usize) -> usize {
        self.raise[level - 1].len()
    }

    pub fn rotation_steps(&self) -> Option<i64> {
        self.galois.as_ref().map(|g| g.steps)
    }

    pub fn galois_element(&self) -> Option<u64> {
        self.galois.as_ref().map(|g| g.element)
    }
}

type Residues = Vec<Option<Vec<u64>>>;

pub struct CkksContext {
    params: SchemeParams,
    /// Index space 0..k chain moduli, k..k+k_sp auxiliary moduli.
    contexts: Vec<Arc<MontgomeryContext>>,
    tables: Vec<NttTables>,
    words: usize,
    /// Signed small values pre-mapped to Montgomery words, index v + bound.
    mont_small: Vec<Vec<Vec<u64>>>,
    /// R^2 per context: multiplying a plain residue by this raw constant is
    /// the to-Montgomery conversion.
    r2: Vec<Vec<u64>>,
    /// Plain 1/n per context, the decrypt-side inverse-transform factor.
    n_inv_plain: Vec<Vec<u64>>,
    /// P^-1 per chain context, Montgomery form.
    p_inv: Vec<ModElement>,
    p_product: WideUInt,
    levels: Vec<LevelPrecomp>,
    pow5: Vec<usize>,
}

const SMALL_VALUE_BOUND: i64 = 64;
const GAUSSIAN_TAIL: f64 = 6.0;
const CT_MAGIC: [u8; 4] = *b"CLCT";
const CT_VERSION: u16 = 1;

fn capacity_for(bits: usize) -> usize {
    CAPACITIES
        .iter()
        .copied()
        .find(|&c| c >= bits)
        .unwrap_or_else(|| panic!("no capacity holds {bits} bits"))
}

/// Product of the given moduli at a capacity that cannot overflow.
fn product_of(moduli: &[&WideUInt]) -> WideUInt {
    let bits: usize = moduli.iter().map(|m| m.bit_length()).sum();
    let cap = capacity_for(bits.max(1) + 1);
    let mut acc = WideUInt::one(cap);
    for m in moduli {
        acc = acc.mul_checked(&m.resize(cap));
    }
    acc
}

fn wide_to_f64(x: &WideUInt) -> f64 {
    let mut acc = 0.0;
    for (i, &limb) in x.limbs().iter().enumerate() {
        acc += limb as f64 * 2f64.powi(64 * i as i32);
    }
    acc
}

impl CkksContext {
    pub fn new(params: SchemeParams) -> Result<Self, Error> {
        let k = params.k();
        let k_sp = params.k_sp();
        let n = params.n;
        let mut contexts: Vec<Arc<MontgomeryContext>> = Vec::with_capacity(k + k_sp);
        contexts.extend(params.mains.contexts().iter().cloned());
        contexts.extend(params.specials.contexts().iter().cloned());
        let words = contexts[0].words();

        let mut tables = Vec::with_capacity(contexts.len());
        for ctx in &contexts {
            tables.push(NttTables::negacyclic(Arc::clone(ctx), n)?);
        }

        let mut mont_small = Vec::with_capacity(contexts.len());
        let mut r2 = Vec::with_capacity(contexts.len());
        let mut n_inv_plain = Vec::with_capacity(contexts.len());
        for (ctx, tab) in contexts.iter().zip(&tables) {
            let q = ctx.modulus().clone();
            let mut table = Vec::with_capacity((2 * SMALL_VALUE_BOUND + 1) as usize);
            for v in -SMALL_VALUE_BOUND..=SMALL_VALUE_BOUND {
                let plain = if v >= 0 {
                    WideUInt::from_u64(q.capacity_bits(), v as u64)
                } else {
                    let (d, _) = q.sub_with_borrow(&WideUInt::from_u64(q.capacity_bits(), (-v) as u64));
                    d
                };
                table.push(ctx.to_montgomery(&plain).raw().limbs().to_vec());
            }
            mont_small.push(table);
            r2.push(ctx.to_montgomery(ctx.one().raw()).raw().limbs().to_vec());
            n_inv_plain.push(ctx.from_montgomery(tab.n_inv()).limbs().to_vec());
        }

        let p_product = params.specials.product().clone();
        if p_product.compare(params.mains.product()) != std::cmp::Ordering::Greater {
            return Err(Error::InvalidParameter("auxiliary product P must exceed chain product Q".into()));
        }
        let mut p_inv = Vec::with_capacity(k);
        for ctx in params.mains.contexts() {
            let p_mod = ctx.to_montgomery(&reduce_wide(&p_product, ctx));
            p_inv.push(ctx.inverse(&p_mod)?);
        }

        let mut level_bases = Vec::with_capacity(k);
        let mut basis = Arc::clone(&params.mains);
        level_bases.push(Arc::clone(&basis));
        for _ in 1..k {
            basis = Arc::new(basis.without_last()?);
            level_bases.push(Arc::clone(&basis));
        }
        level_bases.reverse();

        let mut ctxv = CkksContext {
            params,
            contexts,
            tables,
            words,
            mont_small,
            r2,
            n_inv_plain,
            p_inv,
            p_product,
            levels: Vec::new(),
            pow5: Vec::new(),
        };

        let mut levels = Vec::with_capacity(k);
        for level in 1..=k {
            levels.push(ctxv.build_level(level, &level_bases[level - 1])?);
        }
        ctxv.levels = levels;

        let two_n = 2 * n;
        let mut pow5 = Vec::with_capacity(n / 2);
        let mut e = 1usize;
        for _ in 0..n / 2 {
            pow5.push(e);
            e = e * 5 % two_n;
        }
        ctxv.pow5 = pow5;
        Ok(ctxv)
    }

    fn build_level(&self, level: usize, basis: &Arc<RnsBasis>) -> Result<LevelPrecomp, Error> {
        let k = self.params.k();
        let k_sp = self.params.k_sp();
        let specials = &self.params.specials;
        let special_idx: Vec<usize> = (k..k + k_sp).collect();
        let main_idx: Vec<usize> = (0..level).collect();

        // Standalone mod-down by P: the 1/P on the kept residues is already
        // folded into hints, so cross constants carry P^-1 and no post scale.
        let mut intt_factors = Vec::with_capacity(k_sp);
        for j in 0..k_sp {
            let ctx = specials.context(j);
            let tab = &self.tables[k + j];
            let f = ctx.mul(tab.n_inv(), specials.q_hat_inv(j));
            intt_factors.push(ctx.from_montgomery(&f).limbs().to_vec());
        }
        let mut cross = Vec::with_capacity(k_sp);
        for j in 0..k_sp {
            let mut row = Vec::with_capacity(level);
            for &t in &main_idx {
                row.push(self.lift_constant(specials.q_hat(j), t, Some(&self.p_inv[t])));
            }
            cross.push(row);
        }
        let moddown = ModDownPrecomp {
            divisors: special_idx.clone(),
            targets: main_idx.clone(),
            intt_factors,
            cross,
            post_scale: None,
        };

        let (moddown_fused, rescale) = if level >= 2 {
            let last = level - 1;
            let q_last = self.contexts[last].modulus().clone();
            let last_inv_mont: Vec<Vec<u64>> = (0..last)
                .map(|t| {
                    let ctx = &self.contexts[t];
                    let e = ctx.to_montgomery(&reduce_wide(&q_last, ctx));
                    Ok::<_, Error>(ctx.inverse(&e)?.raw().limbs().to_vec())
                })
                .collect::<Result<_, _>>()?;

            // Fused divisor P * q_last: digits over the auxiliary moduli and
            // the last chain modulus, targets the remaining chain moduli.
            let mut divisors = special_idx.clone();
            divisors.push(last);
            let mut intt_factors = Vec::with_capacity(k_sp + 1);
            for j in 0..k_sp {
                let ctx = specials.context(j);
                let tab = &self.tables[k + j];
                let ql = ctx.to_montgomery(&reduce_wide(&q_last, ctx));
                let f = ctx.mul(&ctx.mul(tab.n_inv(), specials.q_hat_inv(j)), &ctx.inverse(&ql)?);
                intt_factors.push(ctx.from_montgomery(&f).limbs().to_vec());
            }
            // The q_last residue already carries the folded P^-1, so its
            // digit factor reduces to 1/n.
            intt_factors.push(self.n_inv_plain[last].clone());
            let mut cross = Vec::with_capacity(k_sp + 1);
            for j in 0..k_sp {
                let d_over = product_of(&[specials.q_hat(j), &q_last]);
                let mut row = Vec::with_capacity(last);
                for t in 0..last {
                    row.push(self.lift_constant(&d_over, t, Some(&self.p_inv[t])));
                }
                cross.push(row);
            }
            {
                let mut row = Vec::with_capacity(last);
                for t in 0..last {
                    row.push(self.lift_constant(&self.p_product, t, Some(&self.p_inv[t])));
                }
                cross.push(row);
            }
            let fused = ModDownPrecomp {
                divisors,
                targets: (0..last).collect(),
                intt_factors,
                cross,
                post_scale: Some(last_inv_mont.clone()),
            };

            // Rescale divisor q_last alone: the digit is the residue itself,
            // the lift constant is a bare R^2.
            let rescale = ModDownPrecomp {
                divisors: vec![last],
                targets: (0..last).collect(),
                intt_factors: vec![self.n_inv_plain[last].clone()],
                cross: vec![(0..last).map(|t| self.r2[t].clone()).collect()],
                post_scale: Some(last_inv_mont),
            };
            (Some(fused), Some(rescale))
        } else {
            (None, None)
        };

        let q_product = basis.product().clone();
        let q_half = q_product.shift_right(1);
        Ok(LevelPrecomp {
            moddown,
            moddown_fused,
            rescale,
            q_product,
            q_half,
            basis: Arc::clone(basis),
        })
    }

    /// Raw words of ((value mod q_t) * extra * R^2) mod q_t: the constant
    /// that lifts a plain digit onto target t in Montgomery form.
    fn lift_constant(&self, value: &WideUInt, t: usize, extra: Option<&ModElement>) -> Vec<u64> {
        let ctx = &self.contexts[t];
        let mut e = ctx.to_montgomery(&reduce_wide(value, ctx));
        if let Some(x) = extra {
            e = ctx.mul(&e, x);
        }
        ctx.to_montgomery(e.raw()).raw().limbs().to_vec()
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn slot_count(&self) -> usize {
        self.params.n / 2
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn level_basis(&self, level: usize) -> &Arc<RnsBasis> {
        &self.levels[level - 1].basis
    }

    // ----- residue batch helpers; each corresponds to one census count -----

    fn zero_residue(&self) -> Vec<u64> {
        vec![0u64; self.params.n * self.words]
    }

    fn pointwise_into(&self, idx: usize, a: &[u64], b: &[u64], out: &mut [u64]) {
        let ctx = self.contexts[idx].as_ref();
        let w = self.words;
        let mut scratch = vec![0u64; 2 * w];
        for ((x, y), o) in a.chunks_exact(w).zip(b.chunks_exact(w)).zip(out.chunks_exact_mut(w)) {
            ctx.mont_mul_slices(x, y, o, &mut scratch);
        }
    }

    fn scalar_mul_acc(&self, idx: usize, src: &[u64], scalar: &[u64], acc: &mut [u64]) {
        let ctx = self.contexts[idx].as_ref();
        let w = self.words;
        let mut tmp = vec![0u64; w];
        let mut scratch = vec![0u64; 2 * w];
        for (x, o) in src.chunks_exact(w).zip(acc.chunks_exact_mut(w)) {
            ctx.mont_mul_slices(x, scalar, &mut tmp, &mut scratch);
            ctx.add_mod_assign_slices(o, &tmp);
        }
    }

    fn scale_residue(&self, idx: usize, data: &mut [u64], scalar: &[u64]) {
        let ctx = self.contexts[idx].as_ref();
        let w = self.words;
        let mut scratch = vec![0u64; 2 * w];
        for chunk in data.chunks_exact_mut(w) {
            ctx.mont_mul_assign_slices(chunk, scalar, &mut scratch);
        }
    }

    fn add_assign_residue(&self, idx: usize, a: &mut [u64], b: &[u64]) {
        let ctx = self.contexts[idx].as_ref();
        for (x, y) in a.chunks_exact_mut(self.words).zip(b.chunks_exact(self.words)) {
            ctx.add_mod_assign_slices(x, y);
        }
    }

    fn sub_assign_residue(&self, idx: usize, a: &mut [u64], b: &[u64]) {
        let ctx = self.contexts[idx].as_ref();
        for (x, y) in a.chunks_exact_mut(self.words).zip(b.chunks_exact(self.words)) {
            ctx.sub_mod_assign_slices(x, y);
        }
    }

    fn neg_residue(&self, idx: usize, a: &mut [u64]) {
        let ctx = self.contexts[idx].as_ref();
        let w = self.words;
        let mut tmp = vec![0u64; w];
        for chunk in a.chunks_exact_mut(w) {
            tmp.copy_from_slice(chunk);
            chunk.fill(0);
            ctx.sub_mod_assign_slices(chunk, &tmp);
        }
    }

    fn poly_ntt(&self, p: &mut Polynomial, meter: &mut KernelCounts) {
        assert_eq!(p.domain, Domain::Coefficient);
        for (i, r) in p.residues.iter_mut().enumerate() {
            ntt_direct(r, &self.tables[i]);
            meter.ntt += 1;
        }
        p.domain = Domain::Evaluation;
    }

    // ----- sampling -----

    fn sample_gaussian<R: Rng>(&self, rng: &mut R) -> i64 {
        let sigma = self.params.sigma;
        if sigma == 0.0 {
            return 0;
        }
        let bound = (GAUSSIAN_TAIL * sigma).ceil() as i64;
        loop {
            let x = rng.gen_range(-bound..=bound);
            let p = (-((x as f64) * (x as f64)) / (2.0 * sigma * sigma)).exp();
            if rng.gen::<f64>() < p {
                return x;
            }
        }
    }

    fn small_coeff_poly(&self, coeffs: &[i64], width: usize) -> Polynomial {
        assert!(coeffs.iter().all(|c| c.abs() <= SMALL_VALUE_BOUND));
        let w = self.words;
        let mut residues = Vec::with_capacity(width);
        for i in 0..width {
            let table = &self.mont_small[i];
            let mut r = vec![0u64; coeffs.len() * w];
            for (slot, &c) in r.chunks_exact_mut(w).zip(coeffs) {
                slot.copy_from_slice(&table[(c + SMALL_VALUE_BOUND) as usize]);
            }
            residues.push(r);
        }
        Polynomial { residues, domain: Domain::Coefficient }
    }

    fn sample_ternary<R: Rng>(&self, rng: &mut R) -> Vec<i64> {
        (0..self.params.n).map(|_| rng.gen_range(0..3i64) - 1).collect()
    }

    fn sample_uniform_residue<R: Rng>(&self, idx: usize, rng: &mut R) -> Vec<u64> {
        let ctx = &self.contexts[idx];
        let q = ctx.modulus();
        let w = self.words;
        let mut out = vec![0u64; self.params.n * w];
        if q.bit_length() <= 64 {
            let qq = q.low_u64();
            let bits = q.bit_length();
            let mask = if bits >= 64 { u64::MAX } else { (1u64 << bits) - 1 };
            for slot in out.chunks_exact_mut(w) {
                loop {
                    let v = rng.gen::<u64>() & mask;
                    if v < qq {
                        slot[0] = v;
                        break;
                    }
                }
            }
        } else {
            let top_bits = q.bit_length() - 64 * (w - 1);
            let mask = if top_bits >= 64 { u64::MAX } else { (1u64 << top_bits) - 1 };
            for slot in out.chunks_exact_mut(w) {
                loop {
                    for limb in slot.iter_mut() {
                        *limb = rng.gen();
                    }
                    slot[w - 1] &= mask;
                    let v = WideUInt::from_limbs(slot.to_vec());
                    if v.compare(&q.resize(64 * w)) == std::cmp::Ordering::Less {
                        break;
                    }
                }
            }
        }
        out
    }

    // ----- keys and hints -----

    pub fn keygen<R: Rng>(&self, rng: &mut R, meter: &mut KernelCounts) -> (SecretKey, PublicKey) {
        let k = self.params.k();
        let full = k + self.params.k_sp();
        let mut s = self.small_coeff_poly(&self.sample_ternary(rng), full);
        self.poly_ntt(&mut s, meter);

        let a = Polynomial {
            residues: (0..k).map(|i| self.sample_uniform_residue(i, rng)).collect(),
            domain: Domain::Evaluation,
        };
        let e: Vec<i64> = (0..self.params.n).map(|_| self.sample_gaussian(rng)).collect();
        let mut e_poly = self.small_coeff_poly(&e, k);
        self.poly_ntt(&mut e_poly, meter);

        let mut b_res = Vec::with_capacity(k);
        for i in 0..k {
            let mut t = self.zero_residue();
            self.pointwise_into(i, &a.residues[i], &s.residues[i], &mut t);
            meter.mod_mult += 1;
            self.neg_residue(i, &mut t);
            meter.mod_add += 1;
            self.add_assign_residue(i, &mut t, &e_poly.residues[i]);
            meter.mod_add += 1;
            b_res.push(t);
        }
        let pk = PublicKey { b: Polynomial { residues: b_res, domain: Domain::Evaluation }, a };
        (SecretKey { s }, pk)
    }

    /// Hint switching decryption under `from_key` to decryption under `sk`.
    /// `galois_steps` tags rotation hints with their permutation.
    pub fn ks_hint_gen<R: Rng>(
        &self,
        from_key: &Polynomial,
        sk: &SecretKey,
        dnum: usize,
        galois_steps: Option<i64>,
        rng: &mut R,
        meter: &mut KernelCounts,
    ) -> Result<KeySwitchHint, Error> {
        let k = self.params.k();
        let k_sp = self.params.k_sp();
        let full = k + k_sp;
        if dnum == 0 || dnum > k {
            return Err(Error::InvalidParameter(format!("dnum {dnum} out of range 1..={k}")));
        }
        assert_eq!(from_key.width(), full, "switching key must cover the doubled basis");

        let group_size = k.div_ceil(dnum);
        let groups: Vec<std::ops::Range<usize>> = (0..dnum)
            .map(|g| g * group_size..((g + 1) * group_size).min(k))
            .filter(|r| !r.is_empty())
            .collect();

        let main_moduli: Vec<&WideUInt> = (0..k).map(|i| self.contexts[i].modulus()).collect();
        let mut h0 = Vec::with_capacity(groups.len());
        let mut h1 = Vec::with_capacity(groups.len());
        for group in &groups {
            // Complement product X_g over the full generation chain.
            let complement: Vec<&WideUInt> = (0..k).filter(|i| !group.contains(i)).map(|i| main_moduli[i]).collect();
            let x_g = product_of(&complement);
            let p_xg = product_of(&[&self.p_product, &x_g]);

            let a = Polynomial {
                residues: (0..full).map(|i| self.sample_uniform_residue(i, rng)).collect(),
                domain: Domain::Evaluation,
            };
            let e: Vec<i64> = (0..self.params.n).map(|_| self.sample_gaussian(rng)).collect();
            let mut e_poly = self.small_coeff_poly(&e, full);
            self.poly_ntt(&mut e_poly, meter);

            let mut b_res = Vec::with_capacity(full);
            for i in 0..full {
                let mut t = self.zero_residue();
                self.pointwise_into(i, &a.residues[i], &sk.s.residues[i], &mut t);
                meter.mod_mult += 1;
                self.neg_residue(i, &mut t);
                meter.mod_add += 1;
                self.add_assign_residue(i, &mut t, &e_poly.residues[i]);
                meter.mod_add += 1;
                if i < k {
                    // Gadget term P * X_g * from_key on the chain moduli
                    // (P kills it on the auxiliary ones).
                    let g_raw = self.contexts[i]
                        .to_montgomery(&reduce_wide(&p_xg, &self.contexts[i]))
                        .raw()
                        .limbs()
                        .to_vec();
                    self.scalar_mul_acc(i, &from_key.residues[i], &g_raw, &mut t);
                    meter.mod_mult += 1;
                    meter.mod_add += 1;
                }
                b_res.push(t);
            }
            let mut b_poly = Polynomial { residues: b_res, domain: Domain::Evaluation };
            let mut a_poly = a;
            // Fold P^-1 into the chain residues of both halves.
            for i in 0..k {
                let p_inv_raw = self.p_inv[i].raw().limbs().to_vec();
                self.scale_residue(i, &mut b_poly.residues[i], &p_inv_raw);
                self.scale_residue(i, &mut a_poly.residues[i], &p_inv_raw);
                meter.mod_mult += 2;
            }
            h0.push(b_poly);
            h1.push(a_poly);
        }

        let mut raise = Vec::with_capacity(k);
        for level in 1..=k {
            let mut digits = Vec::new();
            for group in &groups {
                let sources: Vec<usize> = group.clone().filter(|&i| i < level).collect();
                if sources.is_empty() {
                    continue;
                }
                let complement: Vec<&WideUInt> =
                    (0..k).filter(|i| !group.contains(i)).map(|i| main_moduli[i]).collect();
                let x_g = product_of(&complement);
                let x_is_one = complement.is_empty();
                let targets: Vec<usize> = (0..level)
                    .filter(|i| !sources.contains(i))
                    .chain(k..full)
                    .collect();

                let mut intt_factors = Vec::with_capacity(sources.len());
                let mut own_scalar = if x_is_one { None } else { Some(Vec::with_capacity(sources.len())) };
                let mut cross = Vec::with_capacity(sources.len());
                for &i in &sources {
                    let ctx = &self.contexts[i];
                    let others: Vec<&WideUInt> =
                        sources.iter().filter(|&&j| j != i).map(|&j| main_moduli[j]).collect();
                    let qg_over_qi = product_of(&others);
                    let inv1 = ctx.inverse(&ctx.to_montgomery(&reduce_wide(&qg_over_qi, ctx)))?;
                    let mut f = ctx.mul(self.tables[i].n_inv(), &inv1);
                    if !x_is_one {
                        let xinv = ctx.inverse(&ctx.to_montgomery(&reduce_wide(&x_g, ctx)))?;
                        f = ctx.mul(&f, &xinv);
                        if let Some(os) = own_scalar.as_mut() {
                            os.push(xinv.raw().limbs().to_vec());
                        }
                    }
                    intt_factors.push(ctx.from_montgomery(&f).limbs().to_vec());
                    cross.push(targets.iter().map(|&t| self.lift_constant(&qg_over_qi, t, None)).collect());
                }
                digits.push(RaiseDigit { sources, targets, intt_factors, cross, own_scalar });
            }
            raise.push(digits);
        }

        let galois = galois_steps.map(|steps| {
            let element = self.galois_element(steps);
            GaloisData { steps, element, perm: self.eval_permutation(element) }
        });
        Ok(KeySwitchHint { dnum: groups.len(), h0, h1, raise, galois })
    }

    pub fn relin_hint_gen<R: Rng>(
        &self,
        sk: &SecretKey,
        dnum: usize,
        rng: &mut R,
        meter: &mut KernelCounts,
    ) -> Result<KeySwitchHint, Error> {
        let full = self.params.k() + self.params.k_sp();
        let mut s2 = Vec::with_capacity(full);
        for i in 0..full {
            let mut t = self.zero_residue();
            self.pointwise_into(i, &sk.s.residues[i], &sk.s.residues[i], &mut t);
            meter.mod_mult += 1;
            s2.push(t);
        }
        let s2 = Polynomial { residues: s2, domain: Domain::Evaluation };
        self.ks_hint_gen(&s2, sk, dnum, None, rng, meter)
    }

    pub fn rot_hint_gen<R: Rng>(
        &self,
        sk: &SecretKey,
        steps: i64,
        dnum: usize,
        rng: &mut R,
        meter: &mut KernelCounts,
    ) -> Result<KeySwitchHint, Error> {
        let element = self.galois_element(steps);
        let perm = self.eval_permutation(element);
        let full = self.params.k() + self.params.k_sp();
        let mut rotated = Vec::with_capacity(full);
        for i in 0..full {
            rotated.push(self.permute_residue(&sk.s.residues[i], &perm));
            meter.automorphism += 1;
        }
        let rotated = Polynomial { residues: rotated, domain: Domain::Evaluation };
        self.ks_hint_gen(&rotated, sk, dnum, Some(steps), rng, meter)
    }

    // ----- automorphism -----

    fn galois_element(&self, steps: i64) -> u64 {
        let slots = (self.params.n / 2) as i64;
        let r = steps.rem_euclid(slots) as u64;
        let two_n = 2 * self.params.n as u64;
        let mut g = 1u64;
        for _ in 0..r {
            g = g * 5 % two_n;
        }
        g
    }

    /// out[p] = in[perm[p]] applies x -> x^g to an evaluation-order vector.
    fn eval_permutation(&self, g: u64) -> Vec<usize> {
        let n = self.params.n;
        let bits = n.trailing_zeros();
        let two_n = 2 * n as u64;
        (0..n)
            .map(|p| {
                let i = bit_reverse(p, bits) as u64;
                let e = (2 * i + 1) * g % two_n;
                bit_reverse(((e - 1) / 2) as usize, bits)
            })
            .collect()
    }

    fn permute_residue(&self, src: &[u64], perm: &[usize]) -> Vec<u64> {
        let w = self.words;
        let mut out = vec![0u64; src.len()];
        for (p, &srcp) in perm.iter().enumerate() {
            out[p * w..(p + 1) * w].copy_from_slice(&src[srcp * w..(srcp + 1) * w]);
        }
        out
    }

    // ----- encode / decode -----

    pub fn encode(
        &self,
        values: &[Complex],
        scale: f64,
        level: usize,
        meter: &mut KernelCounts,
    ) -> Result<Plaintext, Error> {
        let residues = self.encode_residues(values, scale)?;
        let mut poly = Polynomial {
            residues: residues[..level].to_vec(),
            domain: Domain::Coefficient,
        };
        for (i, r) in poly.residues.iter_mut().enumerate() {
            self.scale_residue(i, r, &self.r2[i]);
            meter.mod_mult += 1;
        }
        self.poly_ntt(&mut poly, meter);
        Ok(Plaintext { poly, scale, level })
    }

    /// Plain coefficient residues of the encoded message over the full
    /// chain, before any Montgomery or evaluation-domain conversion.
    pub fn encode_residues(&self, values: &[Complex], scale: f64) -> Result<Vec<Vec<u64>>, Error> {
        let n = self.params.n;
        if values.len() != n / 2 {
            return Err(Error::InvalidParameter(format!(
                "expected {} slots, got {}",
                n / 2,
                values.len()
            )));
        }
        let mut spectrum = vec![Complex::default(); n];
        for (t, v) in values.iter().enumerate() {
            let m = (self.pow5[t] - 1) / 2;
            spectrum[m] = *v;
            spectrum[n - 1 - m] = v.conj();
        }
        fft(&mut spectrum, -1.0);
        let inv_n = 1.0 / n as f64;
        let mut coeffs = Vec::with_capacity(n);
        for (j, b) in spectrum.iter().enumerate() {
            let untwist = Complex::from_angle(-PI * j as f64 / n as f64);
            let c = (*b * untwist).re * inv_n * scale;
            if !c.is_finite() || c.abs() >= 4.6e18 {
                return Err(Error::InvalidParameter("encoded coefficient out of range".into()));
            }
            coeffs.push(c.round() as i64);
        }
        let k = self.params.k();
        let w = self.words;
        let mut residues = Vec::with_capacity(k);
        for i in 0..k {
            let ctx = &self.contexts[i];
            let q = ctx.modulus();
            let mut r = vec![0u64; n * w];
            for (slot, &c) in r.chunks_exact_mut(w).zip(&coeffs) {
                let plain = if c >= 0 {
                    reduce_wide(&WideUInt::from_u64(64, c as u64), ctx)
                } else {
                    let m = reduce_wide(&WideUInt::from_u64(64, (-c) as u64), ctx);
                    if m.is_zero() {
                        m
                    } else {
                        q.sub_with_borrow(&m).0
                    }
                };
                slot.copy_from_slice(plain.limbs());
            }
            residues.push(r);
        }
        Ok(residues)
    }

    pub fn decode(&self, dp: &DecryptedPoly) -> Result<Vec<Complex>, Error> {
        let n = self.params.n;
        let w = self.words;
        let level = dp.level;
        let pre = &self.levels[level - 1];
        let basis = &pre.basis;
        let mut coeffs = Vec::with_capacity(n);
        for e in 0..n {
            let elems: Vec<ModElement> = (0..level)
                .map(|i| {
                    let chunk = &dp.residues[i][e * w..(e + 1) * w];
                    self.contexts[i].to_montgomery(&WideUInt::from_limbs(chunk.to_vec()))
                })
                .collect();
            let v = basis.reconstruct(&elems)?;
            let centered = if v.compare(&pre.q_half) == std::cmp::Ordering::Greater {
                -wide_to_f64(&pre.q_product.sub_with_borrow(&v).0)
            } else {
                wide_to_f64(&v)
            };
            coeffs.push(centered);
        }
        let mut twisted: Vec<Complex> = coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| Complex::from_angle(PI * j as f64 / n as f64) * c)
            .collect();
        fft(&mut twisted, 1.0);
        let inv_scale = 1.0 / dp.scale;
        Ok((0..n / 2)
            .map(|t| twisted[(self.pow5[t] - 1) / 2] * inv_scale)
            .collect())
    }

    // ----- encrypt / decrypt -----

    pub fn encrypt<R: Rng>(
        &self,
        pt: &Plaintext,
        pk: &PublicKey,
        rng: &mut R,
        meter: &mut KernelCounts,
    ) -> Ciphertext {
        let level = pt.level;
        let mut v = self.small_coeff_poly(&self.sample_ternary(rng), level);
        self.poly_ntt(&mut v, meter);
        let e0: Vec<i64> = (0..self.params.n).map(|_| self.sample_gaussian(rng)).collect();
        let e1: Vec<i64> = (0..self.params.n).map(|_| self.sample_gaussian(rng)).collect();
        let mut e0 = self.small_coeff_poly(&e0, level);
        let mut e1 = self.small_coeff_poly(&e1, level);
        self.poly_ntt(&mut e0, meter);
        self.poly_ntt(&mut e1, meter);

        let mut b = Vec::with_capacity(level);
        let mut a = Vec::with_capacity(level);
        for i in 0..level {
            let mut tb = self.zero_residue();
            let mut ta = self.zero_residue();
            // One shared mask against the (b, a) pair: paired count.
            self.pointwise_into(i, &v.residues[i], &pk.b.residues[i], &mut tb);
            self.pointwise_into(i, &v.residues[i], &pk.a.residues[i], &mut ta);
            meter.mod_mult += 1;
            self.add_assign_residue(i, &mut tb, &e0.residues[i]);
            meter.mod_add += 1;
            self.add_assign_residue(i, &mut tb, &pt.poly.residues[i]);
            meter.mod_add += 1;
            self.add_assign_residue(i, &mut ta, &e1.residues[i]);
            meter.mod_add += 1;
            b.push(tb);
            a.push(ta);
        }
        Ciphertext {
            b: Polynomial { residues: b, domain: Domain::Evaluation },
            a: Polynomial { residues: a, domain: Domain::Evaluation },
            level,
            scale: pt.scale,
        }
    }

    pub fn decrypt(
        &self,
        ct: &Ciphertext,
        sk: &SecretKey,
        meter: &mut KernelCounts,
    ) -> DecryptedPoly {
        let level = ct.level;
        let mut residues = Vec::with_capacity(level);
        for i in 0..level {
            let mut t = self.zero_residue();
            self.pointwise_into(i, &ct.a.residues[i], &sk.s.residues[i], &mut t);
            meter.mod_mult += 1;
            self.add_assign_residue(i, &mut t, &ct.b.residues[i]);
            meter.mod_add += 1;
            intt_direct_scaled(&mut t, &self.tables[i], &self.n_inv_plain[i]);
            meter.intt += 1;
            residues.push(t);
        }
        DecryptedPoly { residues, scale: ct.scale, level }
    }

    // ----- linear operations -----

    fn check_pair(&self, c1: &Ciphertext, c2: &Ciphertext) -> Result<(), Error> {
        if c1.level != c2.level {
            return Err(Error::InvalidParameter(format!("level mismatch {} vs {}", c1.level, c2.level)));
        }
        if (c1.scale - c2.scale).abs() > 1e-9 * c1.scale.abs() {
            return Err(Error::InvalidParameter(format!("scale mismatch {} vs {}", c1.scale, c2.scale)));
        }
        Ok(())
    }

    pub fn fadd(
        &self,
        c1: &Ciphertext,
        c2: &Ciphertext,
        meter: &mut KernelCounts,
    ) -> Result<Ciphertext, Error> {
        self.check_pair(c1, c2)?;
        let mut out = c1.clone();
        for i in 0..out.level {
            self.add_assign_residue(i, &mut out.b.residues[i], &c2.b.residues[i]);
            meter.mod_add += 1;
            self.add_assign_residue(i, &mut out.a.residues[i], &c2.a.residues[i]);
            meter.mod_add += 1;
        }
        Ok(out)
    }

    pub fn addcp(
        &self,
        ct: &Ciphertext,
        pt: &Plaintext,
        meter: &mut KernelCounts,
    ) -> Result<Ciphertext, Error> {
        if ct.level != pt.level {
            return Err(Error::InvalidParameter(format!("level mismatch {} vs {}", ct.level, pt.level)));
        }
        if (ct.scale - pt.scale).abs() > 1e-9 * ct.scale.abs() {
            return Err(Error::InvalidParameter(format!("scale mismatch {} vs {}", ct.scale, pt.scale)));
        }
        let mut out = ct.clone();
        for i in 0..out.level {
            self.add_assign_residue(i, &mut out.b.residues[i], &pt.poly.residues[i]);
            meter.mod_add += 1;
        }
        Ok(out)
    }

    pub fn multcp(
        &self,
        ct: &Ciphertext,
        pt: &Plaintext,
        meter: &mut KernelCounts,
    ) -> Result<Ciphertext, Error> {
        if ct.level != pt.level {
            return Err(Error::InvalidParameter(format!("level mismatch {} vs {}", ct.level, pt.level)));
        }
        if ct.level < 2 {
            return Err(Error::InvalidParameter("level exhausted".into()));
        }
        let level = ct.level;
        let mut b = Vec::with_capacity(level);
        let mut a = Vec::with_capacity(level);
        for i in 0..level {
            let mut tb = self.zero_residue();
            let mut ta = self.zero_residue();
            self.pointwise_into(i, &ct.b.residues[i], &pt.poly.residues[i], &mut tb);
            self.pointwise_into(i, &ct.a.residues[i], &pt.poly.residues[i], &mut ta);
            meter.mod_mult += 1;
            b.push(tb);
            a.push(ta);
        }
        let pre = self.levels[level - 1].rescale.as_ref().unwrap();
        let b = self.mod_down(&to_residue_set(b, level), pre, meter);
        let a = self.mod_down(&to_residue_set(a, level), pre, meter);
        let q_last = wide_to_f64(self.contexts[level - 1].modulus());
        Ok(Ciphertext {
            b: Polynomial { residues: b, domain: Domain::Evaluation },
            a: Polynomial { residues: a, domain: Domain::Evaluation },
            level: level - 1,
            scale: ct.scale * pt.scale / q_last,
        })
    }

    pub fn rescale(&self, ct: &Ciphertext, meter: &mut KernelCounts) -> Result<Ciphertext, Error> {
        if ct.level < 2 {
            return Err(Error::InvalidParameter("level exhausted".into()));
        }
        let level = ct.level;
        let pre = self.levels[level - 1].rescale.as_ref().unwrap();
        let b = self.mod_down(&to_residue_set(ct.b.residues.clone(), level), pre, meter);
        let a = self.mod_down(&to_residue_set(ct.a.residues.clone(), level), pre, meter);
        let q_last = wide_to_f64(self.contexts[level - 1].modulus());
        Ok(Ciphertext {
            b: Polynomial { residues: b, domain: Domain::Evaluation },
            a: Polynomial { residues: a, domain: Domain::Evaluation },
            level: level - 1,
            scale: ct.scale / q_last,
        })
    }

    // ----- key switching -----

    /// Raised digit over the full index space: converted residues are in
    /// Montgomery form thanks to the R^2 inside the lift constants; source
    /// residues are reused from the input.
    fn raise_digit(
        &self,
        d: &[Vec<u64>],
        rd: &RaiseDigit,
        meter: &mut KernelCounts,
    ) -> Residues {
        let full = self.params.k() + self.params.k_sp();
        let mut out: Residues = vec![None; full];
        let mut digits = Vec::with_capacity(rd.sources.len());
        for (si, &i) in rd.sources.iter().enumerate() {
            let mut u = d[i].clone();
            intt_direct_scaled(&mut u, &self.tables[i], &rd.intt_factors[si]);
            meter.intt += 1;
            digits.push(u);
        }
        for (ti, &t) in rd.targets.iter().enumerate() {
            let mut acc = self.zero_residue();
            for (si, u) in digits.iter().enumerate() {
                self.scalar_mul_acc(t, u, &rd.cross[si][ti], &mut acc);
                meter.mod_mult += 1;
                meter.mod_add += 1;
                meter.base_conv += 1;
            }
            ntt_direct(&mut acc, &self.tables[t]);
            meter.ntt += 1;
            out[t] = Some(acc);
        }
        for (si, &i) in rd.sources.iter().enumerate() {
            out[i] = Some(match &rd.own_scalar {
                None => d[i].clone(),
                Some(os) => {
                    let mut r = d[i].clone();
                    self.scale_residue(i, &mut r, &os[si]);
                    meter.mod_mult += 1;
                    r
                }
            });
        }
        out
    }

    fn mod_down(
        &self,
        resid: &Residues,
        pre: &ModDownPrecomp,
        meter: &mut KernelCounts,
    ) -> Vec<Vec<u64>> {
        let mut digits = Vec::with_capacity(pre.divisors.len());
        for (di, &d) in pre.divisors.iter().enumerate() {
            let mut u = resid[d].as_ref().expect("divisor residue missing").clone();
            intt_direct_scaled(&mut u, &self.tables[d], &pre.intt_factors[di]);
            meter.intt += 1;
            digits.push(u);
        }
        let mut out = Vec::with_capacity(pre.targets.len());
        for (ti, &t) in pre.targets.iter().enumerate() {
            let mut acc = self.zero_residue();
            for (di, u) in digits.iter().enumerate() {
                self.scalar_mul_acc(t, u, &pre.cross[di][ti], &mut acc);
                meter.mod_mult += 1;
                meter.mod_add += 1;
                meter.base_conv += 1;
            }
            ntt_direct(&mut acc, &self.tables[t]);
            meter.ntt += 1;
            let mut y = resid[t].as_ref().expect("target residue missing").clone();
            self.sub_assign_residue(t, &mut y, &acc);
            meter.mod_add += 1;
            if let Some(post) = &pre.post_scale {
                self.scale_residue(t, &mut y, &post[ti]);
                meter.mod_mult += 1;
            }
            out.push(y);
        }
        out
    }

    /// Inner product of the raised digits with the hint pairs. Returns the
    /// accumulated pair over active chain + auxiliary residues.
    fn hint_product(
        &self,
        d: &[Vec<u64>],
        level: usize,
        hint: &KeySwitchHint,
        meter: &mut KernelCounts,
    ) -> (Residues, Residues) {
        let k = self.params.k();
        let full = k + self.params.k_sp();
        let active: Vec<usize> = (0..level).chain(k..full).collect();
        let mut u0: Residues = vec![None; full];
        let mut u1: Residues = vec![None; full];
        for (g, rd) in hint.raise[level - 1].iter().enumerate() {
            let raised = self.raise_digit(d, rd, meter);
            for &idx in &active {
                let r = raised[idx].as_ref().unwrap();
                let mut t0 = self.zero_residue();
                let mut t1 = self.zero_residue();
                // Shared raised digit against the hint pair: paired count.
                self.pointwise_into(idx, r, &hint.h0[g].residues[idx], &mut t0);
                self.pointwise_into(idx, r, &hint.h1[g].residues[idx], &mut t1);
                meter.mod_mult += 1;
                match &mut u0[idx] {
                    slot @ None => *slot = Some(t0),
                    Some(acc) => {
                        self.add_assign_residue(idx, acc, &t0);
                        meter.mod_add += 1;
                    }
                }
                match &mut u1[idx] {
                    slot @ None => *slot = Some(t1),
                    Some(acc) => {
                        self.add_assign_residue(idx, acc, &t1);
                        meter.mod_add += 1;
                    }
                }
            }
        }
        (u0, u1)
    }

    /// Key-switches `d` (evaluation domain over the active chain moduli) and
    /// accumulates the result pair into the destination residues.
    pub fn key_switch_into(
        &self,
        d: &[Vec<u64>],
        level: usize,
        hint: &KeySwitchHint,
        dest_b: &mut [Vec<u64>],
        dest_a: &mut [Vec<u64>],
        meter: &mut KernelCounts,
    ) {
        let (u0, u1) = self.hint_product(d, level, hint, meter);
        let pre = &self.levels[level - 1].moddown;
        let y0 = self.mod_down(&u0, pre, meter);
        let y1 = self.mod_down(&u1, pre, meter);
        for i in 0..level {
            self.add_assign_residue(i, &mut dest_b[i], &y0[i]);
            meter.mod_add += 1;
            self.add_assign_residue(i, &mut dest_a[i], &y1[i]);
            meter.mod_add += 1;
        }
    }

    /// Standalone key switch into a fresh pair (the destination-accumulate
    /// adds are still performed, against zeros, to keep the kernel sequence
    /// identical wherever the unit appears).
    pub fn key_switch(
        &self,
        d: &[Vec<u64>],
        level: usize,
        hint: &KeySwitchHint,
        meter: &mut KernelCounts,
    ) -> (Vec<Vec<u64>>, Vec<Vec<u64>>) {
        let mut b = vec![self.zero_residue(); level];
        let mut a = vec![self.zero_residue(); level];
        self.key_switch_into(d, level, hint, &mut b, &mut a, meter);
        (b, a)
    }

    // ----- compound operations -----

    pub fn fmul(
        &self,
        c1: &Ciphertext,
        c2: &Ciphertext,
        relin: &KeySwitchHint,
        meter: &mut KernelCounts,
    ) -> Result<Ciphertext, Error> {
        self.check_pair_mul(c1, c2)?;
        let level = c1.level;
        let k = self.params.k();
        let full = k + self.params.k_sp();

        let mut d0 = Vec::with_capacity(level);
        let mut d1 = Vec::with_capacity(level);
        let mut d2 = Vec::with_capacity(level);
        for i in 0..level {
            let mut t0 = self.zero_residue();
            let mut t2 = self.zero_residue();
            let mut cross1 = self.zero_residue();
            let mut cross2 = self.zero_residue();
            self.pointwise_into(i, &c1.b.residues[i], &c2.b.residues[i], &mut t0);
            meter.mod_mult += 1;
            self.pointwise_into(i, &c1.a.residues[i], &c2.a.residues[i], &mut t2);
            meter.mod_mult += 1;
            self.pointwise_into(i, &c1.b.residues[i], &c2.a.residues[i], &mut cross1);
            meter.mod_mult += 1;
            self.pointwise_into(i, &c1.a.residues[i], &c2.b.residues[i], &mut cross2);
            meter.mod_mult += 1;
            self.add_assign_residue(i, &mut cross1, &cross2);
            meter.mod_add += 1;
            d0.push(t0);
            d1.push(cross1);
            d2.push(t2);
        }

        let (mut u0, mut u1) = self.hint_product(&d2, level, relin, meter);
        // The hint carries P^-1, so the tensor parts join the chain residues
        // as plain additions of (P * d) * P^-1.
        for i in 0..level {
            self.add_assign_residue(i, u0[i].as_mut().unwrap(), &d0[i]);
            meter.mod_add += 1;
            self.add_assign_residue(i, u1[i].as_mut().unwrap(), &d1[i]);
            meter.mod_add += 1;
        }
        debug_assert!(u0[full - 1].is_some());

        let pre = self.levels[level - 1].moddown_fused.as_ref().unwrap();
        let b = self.mod_down(&u0, pre, meter);
        let a = self.mod_down(&u1, pre, meter);
        let q_last = wide_to_f64(self.contexts[level - 1].modulus());
        Ok(Ciphertext {
            b: Polynomial { residues: b, domain: Domain::Evaluation },
            a: Polynomial { residues: a, domain: Domain::Evaluation },
            level: level - 1,
            scale: c1.scale * c2.scale / q_last,
        })
    }

    fn check_pair_mul(&self, c1: &Ciphertext, c2: &Ciphertext) -> Result<(), Error> {
        if c1.level != c2.level {
            return Err(Error::InvalidParameter(format!("level mismatch {} vs {}", c1.level, c2.level)));
        }
        if c1.level < 2 {
            return Err(Error::InvalidParameter("level exhausted".into()));
        }
        Ok(())
    }

    pub fn frot(
        &self,
        ct: &Ciphertext,
        steps: i64,
        hint: &KeySwitchHint,
        meter: &mut KernelCounts,
    ) -> Result<Ciphertext, Error> {
        let galois = hint
            .galois
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("hint carries no rotation".into()))?;
        if galois.steps != steps {
            return Err(Error::InvalidParameter(format!(
                "hint was generated for rotation {}, not {steps}",
                galois.steps
            )));
        }
        let level = ct.level;
        let mut b = Vec::with_capacity(level);
        let mut a_rot = Vec::with_capacity(level);
        for i in 0..level {
            b.push(self.permute_residue(&ct.b.residues[i], &galois.perm));
            meter.automorphism += 1;
            a_rot.push(self.permute_residue(&ct.a.residues[i], &galois.perm));
            meter.automorphism += 1;
        }
        let mut a = vec![self.zero_residue(); level];
        self.key_switch_into(&a_rot, level, hint, &mut b, &mut a, meter);
        Ok(Ciphertext {
            b: Polynomial { residues: b, domain: Domain::Evaluation },
            a: Polynomial { residues: a, domain: Domain::Evaluation },
            level,
            scale: ct.scale,
        })
    }

    // ----- serialization -----

    pub fn ciphertext_to_bytes(&self, ct: &Ciphertext) -> Vec<u8> {
        let n = self.params.n as u64;
        let mut out = Vec::new();
        out.extend_from_slice(&CT_MAGIC);
        out.extend_from_slice(&CT_VERSION.to_le_bytes());
        out.extend_from_slice(&n.to_le_bytes());
        out.extend_from_slice(&(self.params.k() as u32).to_le_bytes());
        out.extend_from_slice(&(ct.level as u32).to_le_bytes());
        out.push(match ct.b.domain {
            Domain::Coefficient => 0,
            Domain::Evaluation => 1,
        });
        out.extend_from_slice(&ct.scale.to_bits().to_le_bytes());
        for poly in [&ct.b, &ct.a] {
            for r in &poly.residues {
                for &word in r {
                    out.extend_from_slice(&word.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn ciphertext_from_bytes(&self, bytes: &[u8]) -> Result<Ciphertext, Error> {
        let fail = |m: &str| Error::Serialization(m.to_string());
        let mut pos = 0usize;
        let take = |pos: &mut usize, len: usize| -> Result<&[u8], Error> {
            if *pos + len > bytes.len() {
                return Err(Error::Serialization("truncated ciphertext".into()));
            }
            let s = &bytes[*pos..*pos + len];
            *pos += len;
            Ok(s)
        };
        if take(&mut pos, 4)? != CT_MAGIC {
            return Err(fail("bad magic"));
        }
        let ver = u16::from_le_bytes(take(&mut pos, 2)?.try_into().unwrap());
        if ver != CT_VERSION {
            return Err(fail("unsupported version"));
        }
        let n = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
        if n != self.params.n as u64 {
            return Err(fail("ring degree mismatch"));
        }
        let k = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
        if k != self.params.k() as u32 {
            return Err(fail("chain length mismatch"));
        }
        let level = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        if level == 0 || level > self.params.k() {
            return Err(fail("level out of range"));
        }
        let domain = match take(&mut pos, 1)?[0] {
            0 => Domain::Coefficient,
            1 => Domain::Evaluation,
            _ => return Err(fail("bad domain tag")),
        };
        let scale = f64::from_bits(u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()));
        let per_residue = self.params.n * self.words;
        let mut polys = Vec::with_capacity(2);
        for _ in 0..2 {
            let mut residues = Vec::with_capacity(level);
            for _ in 0..level {
                let raw = take(&mut pos, per_residue * 8)?;
                let mut r = Vec::with_capacity(per_residue);
                for c in raw.chunks_exact(8) {
                    r.push(u64::from_le_bytes(c.try_into().unwrap()));
                }
                residues.push(r);
            }
            polys.push(Polynomial { residues, domain });
        }
        if pos != bytes.len() {
            return Err(fail("trailing bytes"));
        }
        let a = polys.pop().unwrap();
        let b = polys.pop().unwrap();
        Ok(Ciphertext { b, a, level, scale })
    }
}

fn to_residue_set(residues: Vec<Vec<u64>>, level: usize) -> Residues {
    let mut out: Residues = residues.into_iter().map(Some).collect();
    debug_assert_eq!(out.len(), level);
    out.resize(level, None);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn small_ctx(sigma: f64) -> CkksContext {
        // 30-bit chain primes, scale 2^26, three levels.
        let params = SchemeParams::build(32, 64, 90, 3, 26, sigma).unwrap();
        CkksContext::new(params).unwrap()
    }

    fn random_slots<R: Rng>(ctx: &CkksContext, rng: &mut R) -> Vec<Complex> {
        (0..ctx.slot_count())
            .map(|_| Complex::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0))
            .collect()
    }

    fn max_rel_err(got: &[Complex], want: &[Complex]) -> f64 {
        got.iter()
            .zip(want)
            .map(|(g, w)| (*g - *w).abs() / w.abs().max(1e-9))
            .fold(0.0, f64::max)
    }

    #[test]
    fn fft_round_trip() {
        let mut rng = StdRng::seed_from_u64(1);
        let n = 64;
        let orig: Vec<Complex> = (0..n).map(|_| Complex::new(rng.gen(), rng.gen())).collect();
        let mut data = orig.clone();
        fft(&mut data, 1.0);
        fft(&mut data, -1.0);
        for (d, o) in data.iter().zip(&orig) {
            assert!((*d * (1.0 / n as f64) - *o).abs() < 1e-12);
        }
    }

    #[test]
    fn encode_decode_round_trip() {
        let ctx = small_ctx(0.0);
        let mut rng = StdRng::seed_from_u64(2);
        let slots = random_slots(&ctx, &mut rng);
        let mut meter = KernelCounts::zero();
        let pt = ctx.encode(&slots, ctx.params().scale(), 3, &mut meter).unwrap();
        assert_eq!(meter.ntt, 3);
        // Decode via the plain residues (skip encryption entirely).
        let residues = ctx.encode_residues(&slots, ctx.params().scale()).unwrap();
        let dp = DecryptedPoly { residues, scale: ctx.params().scale(), level: 3 };
        let out = ctx.decode(&dp).unwrap();
        // Tolerance 2^-(scale_bits - log2(n) - 4).
        assert!(max_rel_err(&out, &slots) < 2f64.powi(-(26 - 5 - 4)));
        assert_eq!(pt.level(), 3);
    }

    #[test]
    fn noiseless_encrypt_decrypt_is_ring_exact() {
        let ctx = small_ctx(0.0);
        let mut rng = StdRng::seed_from_u64(3);
        let slots = random_slots(&ctx, &mut rng);
        let mut meter = KernelCounts::zero();
        let (sk, pk) = ctx.keygen(&mut rng, &mut meter);
        let pt = ctx.encode(&slots, ctx.params().scale(), 3, &mut meter).unwrap();
        let ct = ctx.encrypt(&pt, &pk, &mut rng, &mut meter);
        let dp = ctx.decrypt(&ct, &sk, &mut meter);
        let expected = ctx.encode_residues(&slots, ctx.params().scale()).unwrap();
        assert_eq!(dp.residues(), &expected[..]);
    }

    #[test]
    fn fadd_matches_slotwise_sum() {
        let ctx = small_ctx(3.2);
        let mut rng = StdRng::seed_from_u64(4);
        let va = random_slots(&ctx, &mut rng);
        let vb = random_slots(&ctx, &mut rng);
        let mut meter = KernelCounts::zero();
        let (sk, pk) = ctx.keygen(&mut rng, &mut meter);
        let scale = ctx.params().scale();
        let ca = ctx.encrypt(&ctx.encode(&va, scale, 3, &mut meter).unwrap(), &pk, &mut rng, &mut meter);
        let cb = ctx.encrypt(&ctx.encode(&vb, scale, 3, &mut meter).unwrap(), &pk, &mut rng, &mut meter);
        let mut add_meter = KernelCounts::zero();
        let sum = ctx.fadd(&ca, &cb, &mut add_meter).unwrap();
        assert_eq!(add_meter.mod_add, 6);
        assert_eq!(add_meter.transforms(), 0);
        let out = ctx.decode(&ctx.decrypt(&sum, &sk, &mut meter)).unwrap();
        let want: Vec<Complex> = va.iter().zip(&vb).map(|(x, y)| *x + *y).collect();
        assert!(max_rel_err(&out, &want) < 2f64.powi(-12));
    }

    #[test]
    fn key_switch_census_matches_quadratic_formula() {
        let ctx = small_ctx(3.2);
        let mut rng = StdRng::seed_from_u64(5);
        let mut setup = KernelCounts::zero();
        let (sk, pk) = ctx.keygen(&mut rng, &mut setup);
        // Same-key hint: switching must preserve the plaintext.
        let hint = ctx
            .ks_hint_gen(&sk.s, &sk, 1, None, &mut rng, &mut setup)
            .unwrap();
        let slots = random_slots(&ctx, &mut rng);
        let scale = ctx.params().scale();
        let ct = ctx.encrypt(&ctx.encode(&slots, scale, 3, &mut setup).unwrap(), &pk, &mut rng, &mut setup);

        let mut meter = KernelCounts::zero();
        let (y0, y1) = ctx.key_switch(&ct.a.residues, 3, &hint, &mut meter);
        let k = 3u64;
        assert_eq!(meter.transforms(), 6 * k);
        assert_eq!(meter.mod_mult, 3 * k * k + 2 * k);
        assert_eq!(meter.mod_add, 3 * k * k + 4 * k);
        assert_eq!(meter.automorphism, 0);

        // (b + y0) + y1*s decrypts to the same plaintext.
        let switched = Ciphertext {
            b: Polynomial {
                residues: (0..3)
                    .map(|i| {
                        let mut r = ct.b.residues[i].clone();
                        ctx.add_assign_residue(i, &mut r, &y0[i]);
                        r
                    })
                    .collect(),
                domain: Domain::Evaluation,
            },
            a: Polynomial { residues: y1, domain: Domain::Evaluation },
            level: 3,
            scale: ct.scale,
        };
        let out = ctx.decode(&ctx.decrypt(&switched, &sk, &mut setup)).unwrap();
        assert!(max_rel_err(&out, &slots) < 2f64.powi(-8));
    }

    #[test]
    fn fmul_matches_slotwise_product() {
        let ctx = small_ctx(3.2);
        let mut rng = StdRng::seed_from_u64(6);
        let va = random_slots(&ctx, &mut rng);
        let vb = random_slots(&ctx, &mut rng);
        let mut meter = KernelCounts::zero();
        let (sk, pk) = ctx.keygen(&mut rng, &mut meter);
        let relin = ctx.relin_hint_gen(&sk, 1, &mut rng, &mut meter).unwrap();
        let scale = ctx.params().scale();
        let ca = ctx.encrypt(&ctx.encode(&va, scale, 3, &mut meter).unwrap(), &pk, &mut rng, &mut meter);
        let cb = ctx.encrypt(&ctx.encode(&vb, scale, 3, &mut meter).unwrap(), &pk, &mut rng, &mut meter);
        let mut mul_meter = KernelCounts::zero();
        let prod = ctx.fmul(&ca, &cb, &relin, &mut mul_meter).unwrap();
        assert_eq!(prod.level(), 2);
        // 3k + 3k_sp transforms with k_sp = k.
        assert_eq!(mul_meter.transforms(), 6 * 3);
        let out = ctx.decode(&ctx.decrypt(&prod, &sk, &mut meter)).unwrap();
        let want: Vec<Complex> = va.iter().zip(&vb).map(|(x, y)| *x * *y).collect();
        assert!(max_rel_err(&out, &want) < 2f64.powi(-8));
    }

    #[test]
    fn frot_rotates_slots() {
        let ctx = small_ctx(0.0);
        let mut rng = StdRng::seed_from_u64(7);
        let slots = random_slots(&ctx, &mut rng);
        let mut meter = KernelCounts::zero();
        let (sk, pk) = ctx.keygen(&mut rng, &mut meter);
        let steps = 3i64;
        let hint = ctx.rot_hint_gen(&sk, steps, 1, &mut rng, &mut meter).unwrap();
        let scale = ctx.params().scale();
        let ct = ctx.encrypt(&ctx.encode(&slots, scale, 3, &mut meter).unwrap(), &pk, &mut rng, &mut meter);
        let mut rot_meter = KernelCounts::zero();
        let rot = ctx.frot(&ct, steps, &hint, &mut rot_meter).unwrap();
        assert_eq!(rot_meter.automorphism, 2 * 3);
        let out = ctx.decode(&ctx.decrypt(&rot, &sk, &mut meter)).unwrap();
        let m = ctx.slot_count();
        let want: Vec<Complex> = (0..m).map(|t| slots[(t + steps as usize) % m]).collect();
        assert!(max_rel_err(&out, &want) < 2f64.powi(-12));
    }

    #[test]
    fn multcp_and_rescale_track_scale_and_level() {
        let ctx = small_ctx(3.2);
        let mut rng = StdRng::seed_from_u64(8);
        let va = random_slots(&ctx, &mut rng);
        let vb = random_slots(&ctx, &mut rng);
        let mut meter = KernelCounts::zero();
        let (sk, pk) = ctx.keygen(&mut rng, &mut meter);
        let scale = ctx.params().scale();
        let ct = ctx.encrypt(&ctx.encode(&va, scale, 3, &mut meter).unwrap(), &pk, &mut rng, &mut meter);
        let pt = ctx.encode(&vb, scale, 3, &mut meter).unwrap();
        let prod = ctx.multcp(&ct, &pt, &mut meter).unwrap();
        assert_eq!(prod.level(), 2);
        let q_last = wide_to_f64(ctx.contexts[2].modulus());
        assert!((prod.scale() - scale * scale / q_last).abs() < 1e-3);
        let out = ctx.decode(&ctx.decrypt(&prod, &sk, &mut meter)).unwrap();
        let want: Vec<Complex> = va.iter().zip(&vb).map(|(x, y)| *x * *y).collect();
        assert!(max_rel_err(&out, &want) < 2f64.powi(-8));

        // addcp against an identically scaled plaintext.
        let pt_match = ctx.encode(&vb, prod.scale(), 2, &mut meter).unwrap();
        let sum = ctx.addcp(&prod, &pt_match, &mut meter).unwrap();
        let out = ctx.decode(&ctx.decrypt(&sum, &sk, &mut meter)).unwrap();
        let want: Vec<Complex> = want.iter().zip(&vb).map(|(x, y)| *x + *y).collect();
        assert!(max_rel_err(&out, &want) < 2f64.powi(-8));
    }

    #[test]
    fn two_digit_hint_still_switches_correctly() {
        let ctx = small_ctx(3.2);
        let mut rng = StdRng::seed_from_u64(9);
        let mut meter = KernelCounts::zero();
        let (sk, pk) = ctx.keygen(&mut rng, &mut meter);
        let hint = ctx.ks_hint_gen(&sk.s, &sk, 2, None, &mut rng, &mut meter).unwrap();
        assert_eq!(hint.dnum(), 2);
        assert_eq!(hint.digit_count(3), 2);
        let slots = random_slots(&ctx, &mut rng);
        let scale = ctx.params().scale();
        let ct = ctx.encrypt(&ctx.encode(&slots, scale, 3, &mut meter).unwrap(), &pk, &mut rng, &mut meter);
        let (y0, y1) = ctx.key_switch(&ct.a.residues, 3, &hint, &mut meter);
        let switched = Ciphertext {
            b: Polynomial {
                residues: (0..3)
                    .map(|i| {
                        let mut r = ct.b.residues[i].clone();
                        ctx.add_assign_residue(i, &mut r, &y0[i]);
                        r
                    })
                    .collect(),
                domain: Domain::Evaluation,
            },
            a: Polynomial { residues: y1, domain: Domain::Evaluation },
            level: 3,
            scale: ct.scale,
        };
        let out = ctx.decode(&ctx.decrypt(&switched, &sk, &mut meter)).unwrap();
        assert!(max_rel_err(&out, &slots) < 2f64.powi(-8));
    }

    #[test]
    fn ternary_secret_weight_is_binomial() {
        let params = SchemeParams::build(4096, 64, 126, 3, 40, 3.2).unwrap();
        let ctx = CkksContext::new(params).unwrap();
        let mut rng = StdRng::seed_from_u64(10);
        let coeffs = ctx.sample_ternary(&mut rng);
        let weight = coeffs.iter().filter(|&&c| c != 0).count() as f64;
        let n = ctx.n() as f64;
        let mean = n * 2.0 / 3.0;
        let sd = (n * 2.0 / 9.0).sqrt();
        assert!((weight - mean).abs() < 3.0 * sd, "weight {weight} vs mean {mean}");
    }

    #[test]
    fn ciphertext_bytes_round_trip() {
        let ctx = small_ctx(3.2);
        let mut rng = StdRng::seed_from_u64(11);
        let slots = random_slots(&ctx, &mut rng);
        let mut meter = KernelCounts::zero();
        let (_, pk) = ctx.keygen(&mut rng, &mut meter);
        let scale = ctx.params().scale();
        let ct = ctx.encrypt(&ctx.encode(&slots, scale, 3, &mut meter).unwrap(), &pk, &mut rng, &mut meter);
        let bytes = ctx.ciphertext_to_bytes(&ct);
        let back = ctx.ciphertext_from_bytes(&bytes).unwrap();
        assert_eq!(ctx.ciphertext_to_bytes(&back), bytes);
        assert_eq!(back.level(), ct.level());
        assert_eq!(back.b.residues, ct.b.residues);
        assert_eq!(back.a.residues, ct.a.residues);

        let mut bad = bytes.clone();
        bad[0] ^= 0xff;
        assert!(ctx.ciphertext_from_bytes(&bad).is_err());
        assert!(ctx.ciphertext_from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn automorphism_permutations_compose() {
        let ctx = small_ctx(0.0);
        let n = ctx.n();
        let two_n = (2 * n) as u64;
        let g1 = ctx.galois_element(1);
        let g2 = ctx.galois_element(5);
        let p1 = ctx.eval_permutation(g1);
        let p2 = ctx.eval_permutation(g2);
        let combined = ctx.eval_permutation(g1 * g2 % two_n);
        // Applying g2 then g1 equals applying g1*g2.
        let composed: Vec<usize> = (0..n).map(|p| p2[p1[p]]).collect();
        assert_eq!(composed, combined);
    }

    #[test]
    fn parameter_validation() {
        assert!(SchemeParams::build(31, 64, 90, 3, 26, 3.2).is_err());
        assert!(SchemeParams::build(32, 64, 90, 3, 30, 3.2).is_err());
        assert!(SchemeParams::build(32, 64, 90, 0, 26, 3.2).is_err());
        let ctx = small_ctx(0.0);
        let mut meter = KernelCounts::zero();
        assert!(ctx.encode(&[Complex::default(); 3], 1.0, 3, &mut meter).is_err());
    }
}
