//! Statistical accuracy gates for the functional parameter set (N=4096, six
//! 41-bit moduli, scale 2^40): a single multiply stays below 2^-18 slotwise,
//! an addition contributes less than 2^-25 of its own, rotation is an exact
//! slot permutation, and three-op multiply/rotate chains hold 2^-16.

use cryptolight_core::{CkksContext, Complex, KernelCounts, SchemeParams};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn desk_context() -> CkksContext {
    let params = SchemeParams::build(4096, 64, 246, 6, 40, 3.2).unwrap();
    CkksContext::new(params).unwrap()
}

fn random_slots(m: usize, rng: &mut StdRng) -> Vec<Complex> {
    (0..m)
        .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

/// Worst slot deviation, normalized by the larger of 1 and the peak target
/// magnitude so near-zero slots do not blow up the quotient.
fn peak_error(got: &[Complex], want: &[Complex]) -> f64 {
    let peak = want.iter().map(|v| v.abs()).fold(1.0f64, f64::max);
    got.iter()
        .zip(want)
        .map(|(g, w)| Complex::new(g.re - w.re, g.im - w.im).abs())
        .fold(0.0f64, f64::max)
        / peak
}

#[test]
fn single_multiply_stays_below_budget() {
    let ctx = desk_context();
    let mut rng = StdRng::seed_from_u64(101);
    let mut meter = KernelCounts::default();
    let (sk, pk) = ctx.keygen(&mut rng, &mut meter);
    let relin = ctx.relin_hint_gen(&sk, 1, &mut rng, &mut meter).unwrap();
    let scale = ctx.params().scale();
    let top = ctx.params().k();
    let m = ctx.slot_count();
    let budget = (2.0f64).powi(-18);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let va = random_slots(m, &mut rng);
        let vb = random_slots(m, &mut rng);
        let ca = ctx.encrypt(&ctx.encode(&va, scale, top, &mut meter).unwrap(), &pk, &mut rng, &mut meter);
        let cb = ctx.encrypt(&ctx.encode(&vb, scale, top, &mut meter).unwrap(), &pk, &mut rng, &mut meter);
        let prod = ctx.fmul(&ca, &cb, &relin, &mut meter).unwrap();
        let got = ctx.decode(&ctx.decrypt(&prod, &sk, &mut meter)).unwrap();
        let want: Vec<Complex> = va
            .iter()
            .zip(&vb)
            .map(|(x, y)| Complex::new(x.re * y.re - x.im * y.im, x.re * y.im + x.im * y.re))
            .collect();
        worst = worst.max(peak_error(&got, &want));
    }
    assert!(worst < budget, "fmul error {worst:.3e} exceeds 2^-18");
    assert!(meter.ntt > 0 && meter.intt > 0, "multiplies must route through the transform");
}

#[test]
fn addition_contributes_less_than_its_budget() {
    let ctx = desk_context();
    let mut rng = StdRng::seed_from_u64(102);
    let mut meter = KernelCounts::default();
    let (sk, pk) = ctx.keygen(&mut rng, &mut meter);
    let scale = ctx.params().scale();
    let top = ctx.params().k();
    let m = ctx.slot_count();
    let budget = (2.0f64).powi(-25);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let va = random_slots(m, &mut rng);
        let vb = random_slots(m, &mut rng);
        let ca = ctx.encrypt(&ctx.encode(&va, scale, top, &mut meter).unwrap(), &pk, &mut rng, &mut meter);
        let cb = ctx.encrypt(&ctx.encode(&vb, scale, top, &mut meter).unwrap(), &pk, &mut rng, &mut meter);
        // Measure only what the addition adds: compare against the decrypted
        // operands, not the unencrypted inputs, so encryption noise (already
        // near 2^-24) does not drown the 2^-25 bound under test.
        let da = ctx.decode(&ctx.decrypt(&ca, &sk, &mut meter)).unwrap();
        let db = ctx.decode(&ctx.decrypt(&cb, &sk, &mut meter)).unwrap();
        let sum = ctx.fadd(&ca, &cb, &mut meter).unwrap();
        let got = ctx.decode(&ctx.decrypt(&sum, &sk, &mut meter)).unwrap();
        let want: Vec<Complex> = da
            .iter()
            .zip(&db)
            .map(|(x, y)| Complex::new(x.re + y.re, x.im + y.im))
            .collect();
        worst = worst.max(peak_error(&got, &want));
    }
    assert!(worst < budget, "fadd added error {worst:.3e} exceeds 2^-25");
}

#[test]
fn rotation_permutes_slots_exactly() {
    let ctx = desk_context();
    let mut rng = StdRng::seed_from_u64(103);
    let mut meter = KernelCounts::default();
    let (sk, pk) = ctx.keygen(&mut rng, &mut meter);
    let scale = ctx.params().scale();
    let top = ctx.params().k();
    let m = ctx.slot_count();
    let tolerance = (2.0f64).powi(-18);
    let step_set = [1i64, 2, 3, 7, 64, (m as i64) - 1];
    let hints: Vec<_> = step_set
        .iter()
        .map(|&s| ctx.rot_hint_gen(&sk, s, 1, &mut rng, &mut meter).unwrap())
        .collect();
    for trial in 0..100 {
        let steps = step_set[trial % 6];
        let hint = &hints[trial % 6];
        let vals = random_slots(m, &mut rng);
        let ct = ctx.encrypt(&ctx.encode(&vals, scale, top, &mut meter).unwrap(), &pk, &mut rng, &mut meter);
        let rot = ctx.frot(&ct, steps, hint, &mut meter).unwrap();
        let got = ctx.decode(&ctx.decrypt(&rot, &sk, &mut meter)).unwrap();
        // The permutation itself must be exact; only the values carry noise.
        // Random inputs are separated by O(1), so landing on the wrong slot
        // would show up as an O(1) error against this tolerance.
        let want: Vec<Complex> = (0..m).map(|t| vals[(t + steps as usize) % m]).collect();
        let err = peak_error(&got, &want);
        assert!(err < tolerance, "rotation by {steps} off by {err:.3e}");
    }
}

#[test]
fn multiply_rotate_chains_hold_the_relaxed_budget() {
    let ctx = desk_context();
    let mut rng = StdRng::seed_from_u64(104);
    let mut meter = KernelCounts::default();
    let (sk, pk) = ctx.keygen(&mut rng, &mut meter);
    let relin = ctx.relin_hint_gen(&sk, 1, &mut rng, &mut meter).unwrap();
    let steps = 3i64;
    let hint = ctx.rot_hint_gen(&sk, steps, 1, &mut rng, &mut meter).unwrap();
    let scale = ctx.params().scale();
    let top = ctx.params().k();
    let m = ctx.slot_count();
    let budget = (2.0f64).powi(-16);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let va = random_slots(m, &mut rng);
        let vb = random_slots(m, &mut rng);
        let vc = random_slots(m, &mut rng);
        let vd = random_slots(m, &mut rng);
        let enc = |v: &[Complex], rng: &mut StdRng, meter: &mut KernelCounts| {
            ctx.encrypt(&ctx.encode(v, scale, top, meter).unwrap(), &pk, rng, meter)
        };
        let ca = enc(&va, &mut rng, &mut meter);
        let cb = enc(&vb, &mut rng, &mut meter);
        let cc = enc(&vc, &mut rng, &mut meter);
        let cd = enc(&vd, &mut rng, &mut meter);
        // FMUL then FROT then FMUL; the second product supplies a partner at
        // the rotated ciphertext's level and scale.
        let m1 = ctx.fmul(&ca, &cb, &relin, &mut meter).unwrap();
        let r1 = ctx.frot(&m1, steps, &hint, &mut meter).unwrap();
        let m2 = ctx.fmul(&cc, &cd, &relin, &mut meter).unwrap();
        let m3 = ctx.fmul(&r1, &m2, &relin, &mut meter).unwrap();
        let got = ctx.decode(&ctx.decrypt(&m3, &sk, &mut meter)).unwrap();
        let mul = |x: Complex, y: Complex| {
            Complex::new(x.re * y.re - x.im * y.im, x.re * y.im + x.im * y.re)
        };
        let want: Vec<Complex> = (0..m)
            .map(|t| {
                let s = (t + steps as usize) % m;
                mul(mul(va[s], vb[s]), mul(vc[t], vd[t]))
            })
            .collect();
        worst = worst.max(peak_error(&got, &want));
    }
    assert!(worst < budget, "chain error {worst:.3e} exceeds 2^-16");
}
