//! Negacyclic number theoretic transforms over Z_q[x]/(x^N + 1), plus the
//! four-step decomposition for large N.
//!
//! Conventions, fixed once and relied on everywhere:
//! - Forward transforms take natural coefficient order to bit-reversed
//!   evaluation order: output[rev(i)] holds a(psi * omega^i), omega = psi^2.
//! - Twiddle tables absorb the powers of psi, so there is no separate
//!   pre/post scaling pass; the loops are pure butterfly chains.
//! - Inverse transforms consume bit-reversed order and restore natural
//!   coefficient order, applying the 1/N factor at the end.
//! - Values are word slices (`ctx.words()` words per element); transforms are
//!   agnostic to whether elements sit in Montgomery form because twiddles are
//!   Montgomery-form constants.
//!
//! The four-step path decimates x^(cn+r) into an n x n matrix, runs
//! negacyclic row transforms (root psi^n), multiplies by correction twiddles,
//! transposes, and runs cyclic row transforms (root psi^2n). With the
//! orderings above, its flat output equals `ntt_direct` with no final
//! permutation: reversing the 2m-bit output index swaps and reverses the two
//! m-bit halves, which is exactly where the transpose and the two row
//! bit-reversals land each element.

use std::sync::Arc;

use crate::modarith::{ModElement, MontgomeryContext};
use crate::transpose::{transpose_recursive, MatrixView, TuHierarchy};
use crate::wideint::WideUInt;
use crate::Error;

/// Element reads/writes grouped by access locality. Row-phase traffic is
/// contiguous; the decimation gather/scatter and the transpose are strided.
/// Counts are in elements; twiddle fetches are not counted.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct TrafficMeter {
    pub contiguous_reads: u64,
    pub contiguous_writes: u64,
    pub strided_reads: u64,
    pub strided_writes: u64,
}

impl TrafficMeter {
    pub fn total(&self) -> u64 {
        self.contiguous_reads + self.contiguous_writes + self.strided_reads + self.strided_writes
    }

    pub fn strided_total(&self) -> u64 {
        self.strided_reads + self.strided_writes
    }
}

pub(crate) fn bit_reverse(i: usize, bits: u32) -> usize {
    if bits == 0 {
        return 0;
    }
    i.reverse_bits() >> (usize::BITS - bits)
}

/// Twiddle state for negacyclic transforms of one length over one modulus.
pub struct NttTables {
    ctx: Arc<MontgomeryContext>,
    n: usize,
    psi: ModElement,
    /// forward[i] = psi^rev(i), Montgomery form, flat at ctx.words() stride.
    forward: Vec<u64>,
    /// inverse[i] = psi^-rev(i).
    inverse: Vec<u64>,
    n_inv: ModElement,
}

impl NttTables {
    /// Builds tables for length n, deriving psi deterministically: the first
    /// generator base g in 2, 3, ... whose (q-1)/2n power has order exactly 2n.
    pub fn negacyclic(ctx: Arc<MontgomeryContext>, n: usize) -> Result<Self, Error> {
        let psi = find_root_of_unity(&ctx, 2 * n)?;
        Self::negacyclic_with_psi(ctx, n, psi)
    }

    pub fn negacyclic_with_psi(
        ctx: Arc<MontgomeryContext>,
        n: usize,
        psi: ModElement,
    ) -> Result<Self, Error> {
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidParameter(format!("transform length {n} must be a power of two >= 2")));
        }
        let minus_one = ctx.neg(&ctx.one());
        if ctx.pow_u64(&psi, n as u64) != minus_one {
            return Err(Error::InvalidParameter("psi^n != -1: not a primitive 2n-th root".into()));
        }
        let psi_inv = ctx.inverse(&psi).map_err(|_| Error::NotInvertible)?;
        let forward = bit_reversed_powers(&ctx, &psi, n);
        let inverse = bit_reversed_powers(&ctx, &psi_inv, n);
        let n_inv = ctx
            .inverse(&ctx.from_u64(n as u64))
            .map_err(|_| Error::NotInvertible)?;
        Ok(NttTables { ctx, n, psi, forward, inverse, n_inv })
    }

    pub fn ctx(&self) -> &Arc<MontgomeryContext> {
        &self.ctx
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn psi(&self) -> &ModElement {
        &self.psi
    }

    pub fn n_inv(&self) -> &ModElement {
        &self.n_inv
    }
}

/// Twiddle state for cyclic (x^n - 1) transforms, used by the four-step
/// column pass. Forward is decimation-in-frequency (natural to bit-reversed),
/// inverse is decimation-in-time.
pub struct CyclicNttTables {
    ctx: Arc<MontgomeryContext>,
    n: usize,
    /// Stage layout: entries [t, 2t) serve the stage with half-block t;
    /// dif[t + j] = omega^((n/2t) * j).
    dif: Vec<u64>,
    /// dit[t + j] = omega^(-(n/2t) * j).
    dit: Vec<u64>,
    n_inv: ModElement,
}

impl CyclicNttTables {
    pub fn new(ctx: Arc<MontgomeryContext>, n: usize, omega: ModElement) -> Result<Self, Error> {
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidParameter(format!("transform length {n} must be a power of two >= 2")));
        }
        let minus_one = ctx.neg(&ctx.one());
        if ctx.pow_u64(&omega, (n / 2) as u64) != minus_one {
            return Err(Error::InvalidParameter("omega^(n/2) != -1: not a primitive n-th root".into()));
        }
        let omega_inv = ctx.inverse(&omega).map_err(|_| Error::NotInvertible)?;
        let dif = stage_powers(&ctx, &omega, n);
        let dit = stage_powers(&ctx, &omega_inv, n);
        let n_inv = ctx
            .inverse(&ctx.from_u64(n as u64))
            .map_err(|_| Error::NotInvertible)?;
        Ok(CyclicNttTables { ctx, n, dif, dit, n_inv })
    }

    pub fn ctx(&self) -> &Arc<MontgomeryContext> {
        &self.ctx
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Deterministic primitive order-th root of unity (order a power of two).
pub fn find_root_of_unity(ctx: &MontgomeryContext, order: usize) -> Result<ModElement, Error> {
    let q = ctx.modulus();
    let (q_minus_1, _) = q.sub_with_borrow(&WideUInt::one(q.capacity_bits()));
    let shift = order.trailing_zeros() as usize;
    if !order.is_power_of_two() || (0..shift).any(|b| q_minus_1.bit_at(b)) {
        return Err(Error::InvalidParameter(format!(
            "modulus {q} does not support order-{order} roots (q != 1 mod {order})"
        )));
    }
    let exp = q_minus_1.shift_right(shift);
    let half = (order / 2) as u64;
    let minus_one = ctx.neg(&ctx.one());
    for g in 2u64..200 {
        let x = ctx.pow(&ctx.from_u64(g), &exp);
        if ctx.pow_u64(&x, half) == minus_one {
            return Ok(x);
        }
    }
    Err(Error::InvalidParameter(format!("no order-{order} root found below base 200 for {q}")))
}

/// table[i] = base^rev(i) for i in [0, n), flat Montgomery words.
fn bit_reversed_powers(ctx: &MontgomeryContext, base: &ModElement, n: usize) -> Vec<u64> {
    let w = ctx.words();
    let bits = n.trailing_zeros();
    let mut pow = ctx.one();
    let mut natural = Vec::with_capacity(n);
    for _ in 0..n {
        natural.push(pow.clone());
        pow = ctx.mul(&pow, base);
    }
    let mut table = vec![0u64; n * w];
    for (i, slot) in table.chunks_exact_mut(w).enumerate() {
        slot.copy_from_slice(natural[bit_reverse(i, bits)].raw().limbs());
    }
    table
}

/// table[t + j] = base^((n/2t) * j) for each stage half-block t; index 0 set
/// to one and unused.
fn stage_powers(ctx: &MontgomeryContext, base: &ModElement, n: usize) -> Vec<u64> {
    let w = ctx.words();
    let mut pow = ctx.one();
    let mut natural = Vec::with_capacity(n);
    for _ in 0..n {
        natural.push(pow.clone());
        pow = ctx.mul(&pow, base);
    }
    let mut table = vec![0u64; n * w];
    table[..w].copy_from_slice(ctx.one().raw().limbs());
    let mut t = n / 2;
    while t >= 1 {
        let stride = n / (2 * t);
        for j in 0..t {
            table[(t + j) * w..(t + j + 1) * w].copy_from_slice(natural[stride * j].raw().limbs());
        }
        if t == 1 {
            break;
        }
        t /= 2;
    }
    table
}

/// Cooley-Tukey butterfly on scalars: (u + w*v, u - w*v).
pub fn butterfly(
    ctx: &MontgomeryContext,
    u: &ModElement,
    v: &ModElement,
    w: &ModElement,
) -> (ModElement, ModElement) {
    let wv = ctx.mul(w, v);
    (ctx.add(u, &wv), ctx.sub(u, &wv))
}

/// Forward negacyclic transform, in place. Cooley-Tukey data flow, natural
/// input order, bit-reversed output order.
pub fn ntt_direct(values: &mut [u64], tables: &NttTables) {
    let ctx = tables.ctx.as_ref();
    let w = ctx.words();
    let n = tables.n;
    assert_eq!(values.len(), n * w, "value length does not match transform size");
    let mut tmp = vec![0u64; w];
    let mut scratch = vec![0u64; 2 * w];
    let mut half = n;
    let mut m = 1;
    while m < n {
        half /= 2;
        for i in 0..m {
            let j1 = 2 * i * half;
            let s = &tables.forward[(m + i) * w..(m + i + 1) * w];
            let (lo, hi) = values[j1 * w..(j1 + 2 * half) * w].split_at_mut(half * w);
            for j in 0..half {
                let u = &mut lo[j * w..(j + 1) * w];
                let v = &mut hi[j * w..(j + 1) * w];
                ctx.mont_mul_slices(v, s, &mut tmp, &mut scratch);
                ctx.sub_mod_slices(u, &tmp, v);
                ctx.add_mod_assign_slices(u, &tmp);
            }
        }
        m *= 2;
    }
}

/// Inverse negacyclic transform, in place. Gentleman-Sande data flow,
/// bit-reversed input order, natural output order, scaled by 1/n.
pub fn intt_direct(values: &mut [u64], tables: &NttTables) {
    intt_butterflies(values, tables);
    scale_all(values, tables.n_inv.raw().limbs(), tables.ctx.as_ref());
}

/// Inverse transform whose final scaling multiplies by `factor` (raw words)
/// instead of 1/n. Callers fold 1/n and any residue-system constant into one
/// factor; passing it in non-Montgomery form also converts the output out of
/// Montgomery representation in the same pass.
pub fn intt_direct_scaled(values: &mut [u64], tables: &NttTables, factor: &[u64]) {
    intt_butterflies(values, tables);
    scale_all(values, factor, tables.ctx.as_ref());
}

fn intt_butterflies(values: &mut [u64], tables: &NttTables) {
    let ctx = tables.ctx.as_ref();
    let w = ctx.words();
    let n = tables.n;
    assert_eq!(values.len(), n * w, "value length does not match transform size");
    let mut tmp = vec![0u64; w];
    let mut scratch = vec![0u64; 2 * w];
    let mut t = 1;
    let mut m = n;
    while m > 1 {
        let h = m / 2;
        let mut j1 = 0;
        for i in 0..h {
            let s = &tables.inverse[(h + i) * w..(h + i + 1) * w];
            let (lo, hi) = values[j1 * w..(j1 + 2 * t) * w].split_at_mut(t * w);
            for j in 0..t {
                let u = &mut lo[j * w..(j + 1) * w];
                let v = &mut hi[j * w..(j + 1) * w];
                ctx.sub_mod_slices(u, v, &mut tmp);
                ctx.add_mod_assign_slices(u, v);
                ctx.mont_mul_slices(&tmp, s, v, &mut scratch);
            }
            j1 += 2 * t;
        }
        t *= 2;
        m = h;
    }
}

/// Forward cyclic transform (x^n - 1 ring), decimation in frequency: natural
/// input, bit-reversed output.
pub fn cyclic_ntt(values: &mut [u64], tables: &CyclicNttTables) {
    let ctx = tables.ctx.as_ref();
    let w = ctx.words();
    let n = tables.n;
    assert_eq!(values.len(), n * w, "value length does not match transform size");
    let mut tmp = vec![0u64; w];
    let mut scratch = vec![0u64; 2 * w];
    let mut t = n / 2;
    while t >= 1 {
        for j1 in (0..n).step_by(2 * t) {
            let (lo, hi) = values[j1 * w..(j1 + 2 * t) * w].split_at_mut(t * w);
            for j in 0..t {
                let s = &tables.dif[(t + j) * w..(t + j + 1) * w];
                let u = &mut lo[j * w..(j + 1) * w];
                let v = &mut hi[j * w..(j + 1) * w];
                ctx.sub_mod_slices(u, v, &mut tmp);
                ctx.add_mod_assign_slices(u, v);
                ctx.mont_mul_slices(&tmp, s, v, &mut scratch);
            }
        }
        if t == 1 {
            break;
        }
        t /= 2;
    }
}

/// Inverse cyclic transform, decimation in time: bit-reversed input, natural
/// output, scaled by 1/n.
pub fn cyclic_intt(values: &mut [u64], tables: &CyclicNttTables) {
    let ctx = tables.ctx.as_ref();
    let w = ctx.words();
    let n = tables.n;
    assert_eq!(values.len(), n * w, "value length does not match transform size");
    let mut tmp = vec![0u64; w];
    let mut scratch = vec![0u64; 2 * w];
    let mut t = 1;
    while t < n {
        for j1 in (0..n).step_by(2 * t) {
            let (lo, hi) = values[j1 * w..(j1 + 2 * t) * w].split_at_mut(t * w);
            for j in 0..t {
                let s = &tables.dit[(t + j) * w..(t + j + 1) * w];
                let u = &mut lo[j * w..(j + 1) * w];
                let v = &mut hi[j * w..(j + 1) * w];
                ctx.mont_mul_slices(v, s, &mut tmp, &mut scratch);
                ctx.sub_mod_slices(u, &tmp, v);
                ctx.add_mod_assign_slices(u, &tmp);
            }
        }
        t *= 2;
    }
    scale_all(values, tables.n_inv.raw().limbs(), ctx);
}

fn scale_all(values: &mut [u64], factor: &[u64], ctx: &MontgomeryContext) {
    let w = ctx.words();
    let mut scratch = vec![0u64; 2 * w];
    for chunk in values.chunks_exact_mut(w) {
        ctx.mont_mul_assign_slices(chunk, factor, &mut scratch);
    }
}

/// Element-wise Montgomery products: a[i] = a[i] * b[i].
pub fn pointwise_mul_assign(a: &mut [u64], b: &[u64], ctx: &MontgomeryContext) {
    let w = ctx.words();
    assert_eq!(a.len(), b.len(), "pointwise length mismatch");
    assert_eq!(a.len() % w, 0, "length not a multiple of the element width");
    let mut scratch = vec![0u64; 2 * w];
    for (x, y) in a.chunks_exact_mut(w).zip(b.chunks_exact(w)) {
        ctx.mont_mul_assign_slices(x, y, &mut scratch);
    }
}

/// Precomputed state for the four-step transform of N = n^2 points.
pub struct FourStepPlan {
    ctx: Arc<MontgomeryContext>,
    n: usize,
    big_n: usize,
    /// Negacyclic row pass, root psi^n.
    row: NttTables,
    /// Cyclic column pass (run as rows after the transpose), root psi^2n.
    col: CyclicNttTables,
    /// corr[r*n + p] = psi^r * omega^(r * rev(p)): the step-2 constants, laid
    /// out against the bit-reversed row-transform output.
    corr: Vec<u64>,
    corr_inv: Vec<u64>,
}

impl FourStepPlan {
    /// Derives the plan from full-size tables so equality with `ntt_direct`
    /// is anchored to the same psi.
    pub fn new(tables: &NttTables) -> Result<Self, Error> {
        let big_n = tables.n;
        let bits = big_n.trailing_zeros();
        if !bits.is_multiple_of(2) || big_n < 4 {
            return Err(Error::InvalidParameter(format!(
                "four-step needs N = n^2 with n a power of two, got {big_n}"
            )));
        }
        let n = 1usize << (bits / 2);
        let ctx = Arc::clone(&tables.ctx);
        let psi = &tables.psi;
        let psi_n = ctx.pow_u64(psi, n as u64);
        let omega_n = ctx.pow_u64(psi, 2 * n as u64);
        let row = NttTables::negacyclic_with_psi(Arc::clone(&ctx), n, psi_n)?;
        let col = CyclicNttTables::new(Arc::clone(&ctx), n, omega_n)?;
        let corr = correction_table(&ctx, psi, n, false);
        let psi_inv = ctx.inverse(psi).map_err(|_| Error::NotInvertible)?;
        let corr_inv = correction_table(&ctx, &psi_inv, n, true);
        Ok(FourStepPlan { ctx, n, big_n, row, col, corr, corr_inv })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn big_n(&self) -> usize {
        self.big_n
    }
}

/// corr[r][p] = base^(r * (1 + 2*rev(p))). With base = psi this is
/// psi^r * omega^(r * rev(p)); with base = psi^-1, its inverse.
fn correction_table(ctx: &MontgomeryContext, base: &ModElement, n: usize, _inverse: bool) -> Vec<u64> {
    let w = ctx.words();
    let bits = n.trailing_zeros();
    let mut table = vec![0u64; n * n * w];
    for r in 0..n {
        // Row r steps through powers of base^(2r), starting at base^r.
        let start = ctx.pow_u64(base, r as u64);
        let step = ctx.pow_u64(base, 2 * r as u64);
        let mut pow = start;
        let mut natural = Vec::with_capacity(n);
        for _ in 0..n {
            natural.push(pow.clone());
            pow = ctx.mul(&pow, &step);
        }
        for p in 0..n {
            let src = natural[bit_reverse(p, bits)].raw().limbs();
            table[(r * n + p) * w..(r * n + p + 1) * w].copy_from_slice(src);
        }
    }
    table
}

/// Four-step forward transform. Output is identical to `ntt_direct` on the
/// same tables the plan was built from. Matrix traffic lands in `meter`;
/// the transpose runs through the `transpose` module.
pub fn ntt_four_step(values: &mut [u64], plan: &FourStepPlan, meter: &mut TrafficMeter) {
    let ctx = plan.ctx.as_ref();
    let w = ctx.words();
    let n = plan.n;
    let big = plan.big_n;
    assert_eq!(values.len(), big * w, "value length does not match transform size");
    let log_n = n.trailing_zeros() as u64;

    // Decimation gather: matrix[r][c] = values[c*n + r].
    let mut matrix = vec![0u64; big * w];
    for r in 0..n {
        for c in 0..n {
            matrix[(r * n + c) * w..(r * n + c + 1) * w]
                .copy_from_slice(&values[(c * n + r) * w..(c * n + r + 1) * w]);
        }
    }
    meter.strided_reads += big as u64;
    meter.contiguous_writes += big as u64;

    // Step 1: negacyclic row transforms.
    for r in 0..n {
        ntt_direct(&mut matrix[r * n * w..(r + 1) * n * w], &plan.row);
    }
    meter.contiguous_reads += big as u64 * log_n;
    meter.contiguous_writes += big as u64 * log_n;

    // Step 2: correction twiddles.
    let mut scratch = vec![0u64; 2 * w];
    for (chunk, tw) in matrix.chunks_exact_mut(w).zip(plan.corr.chunks_exact(w)) {
        ctx.mont_mul_assign_slices(chunk, tw, &mut scratch);
    }
    meter.contiguous_reads += big as u64;
    meter.contiguous_writes += big as u64;

    // Step 3: transpose.
    let mut tu = TuHierarchy::for_matrix(n);
    let mut view = MatrixView::new(&mut matrix, n, w);
    transpose_recursive(&mut view, &mut tu);
    meter.strided_reads += big as u64;
    meter.strided_writes += big as u64;

    // Step 4: cyclic row transforms; flat result is already in direct order.
    for p in 0..n {
        cyclic_ntt(&mut matrix[p * n * w..(p + 1) * n * w], &plan.col);
    }
    meter.contiguous_reads += big as u64 * log_n;
    meter.contiguous_writes += big as u64 * log_n;

    values.copy_from_slice(&matrix);
}

/// Four-step inverse: exact mirror of the forward pass.
pub fn intt_four_step(values: &mut [u64], plan: &FourStepPlan, meter: &mut TrafficMeter) {
    let ctx = plan.ctx.as_ref();
    let w = ctx.words();
    let n = plan.n;
    let big = plan.big_n;
    assert_eq!(values.len(), big * w, "value length does not match transform size");
    let log_n = n.trailing_zeros() as u64;

    let mut matrix = values.to_vec();

    // Undo step 4: inverse cyclic rows.
    for p in 0..n {
        cyclic_intt(&mut matrix[p * n * w..(p + 1) * n * w], &plan.col);
    }
    meter.contiguous_reads += big as u64 * log_n;
    meter.contiguous_writes += big as u64 * log_n;

    // Undo step 3.
    let mut tu = TuHierarchy::for_matrix(n);
    let mut view = MatrixView::new(&mut matrix, n, w);
    transpose_recursive(&mut view, &mut tu);
    meter.strided_reads += big as u64;
    meter.strided_writes += big as u64;

    // Undo step 2.
    let mut scratch = vec![0u64; 2 * w];
    for (chunk, tw) in matrix.chunks_exact_mut(w).zip(plan.corr_inv.chunks_exact(w)) {
        ctx.mont_mul_assign_slices(chunk, tw, &mut scratch);
    }
    meter.contiguous_reads += big as u64;
    meter.contiguous_writes += big as u64;

    // Undo step 1: inverse negacyclic rows.
    for r in 0..n {
        intt_direct(&mut matrix[r * n * w..(r + 1) * n * w], &plan.row);
    }
    meter.contiguous_reads += big as u64 * log_n;
    meter.contiguous_writes += big as u64 * log_n;

    // Scatter back: values[c*n + r] = matrix[r][c].
    for r in 0..n {
        for c in 0..n {
            values[(c * n + r) * w..(c * n + r + 1) * w]
                .copy_from_slice(&matrix[(r * n + c) * w..(r * n + c + 1) * w]);
        }
    }
    meter.contiguous_reads += big as u64;
    meter.strided_writes += big as u64;
}

/// Flattens elements into the word layout the transforms operate on.
pub fn pack_elements(ctx: &MontgomeryContext, elems: &[ModElement]) -> Vec<u64> {
    let w = ctx.words();
    let mut out = vec![0u64; elems.len() * w];
    for (slot, e) in out.chunks_exact_mut(w).zip(elems) {
        slot.copy_from_slice(e.raw().limbs());
    }
    out
}

pub fn unpack_elements(ctx: &MontgomeryContext, words: &[u64]) -> Vec<ModElement> {
    let w = ctx.words();
    assert_eq!(words.len() % w, 0, "length not a multiple of the element width");
    words
        .chunks_exact(w)
        .map(|c| ctx.element_from_raw(WideUInt::from_limbs(c.to_vec())))
        .collect()
}
