//! `cryptolight verify`: oracle-backed spot checks of every arithmetic layer
//! at desk scale. The exhaustive property sweeps live in the test suites;
//! this command is the fast field check that a build behaves on the machine
//! it runs on.

use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, ensure, Result};
use cryptolight_core::modarith::find_ntt_prime;
use cryptolight_core::ntt::{
    intt_direct, ntt_direct, pack_elements, pointwise_mul_assign, unpack_elements, NttTables,
};
use cryptolight_core::transpose::{transpose_naive, transpose_recursive, MatrixView, TuHierarchy};
use cryptolight_core::{CkksContext, Complex, KernelCounts, MontgomeryContext, RnsBasis, WideUInt};
use num_bigint::BigUint;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::config::load_params;
use crate::CommonArgs;

fn wide_to_big(x: &WideUInt) -> BigUint {
    let bytes: Vec<u8> = x.limbs().iter().flat_map(|l| l.to_le_bytes()).collect();
    BigUint::from_bytes_le(&bytes)
}

fn big_to_wide(capacity_bits: usize, b: &BigUint) -> WideUInt {
    let mut limbs = vec![0u64; capacity_bits / 64];
    for (i, d) in b.to_u64_digits().into_iter().enumerate() {
        limbs[i] = d;
    }
    WideUInt::from_limbs(limbs)
}

fn random_wide(rng: &mut StdRng, capacity_bits: usize) -> WideUInt {
    WideUInt::from_limbs((0..capacity_bits / 64).map(|_| rng.gen()).collect())
}

fn random_below(rng: &mut StdRng, m: &WideUInt) -> WideUInt {
    random_wide(rng, m.capacity_bits()).rem(m)
}

fn suite_wideint(rng: &mut StdRng) -> Result<u64> {
    let mut trials = 0;
    for w in [64usize, 256, 512, 1024] {
        for _ in 0..400 {
            let a = random_wide(rng, w);
            let b = random_wide(rng, w);
            let (ba, bb) = (wide_to_big(&a), wide_to_big(&b));
            let modulus = BigUint::from(1u8) << w;

            let (sum, carry) = a.add_with_carry(&b);
            let bsum = &ba + &bb;
            ensure!(wide_to_big(&sum) == &bsum % &modulus, "add mismatch at width {w}");
            ensure!(carry == (bsum >= modulus), "carry mismatch at width {w}");

            let (diff, borrow) = a.sub_with_borrow(&b);
            let bdiff = if ba >= bb { &ba - &bb } else { (&modulus + &ba) - &bb };
            ensure!(wide_to_big(&diff) == bdiff, "sub mismatch at width {w}");
            ensure!(borrow == (ba < bb), "borrow mismatch at width {w}");

            let prod = a.mul_full(&b);
            ensure!(wide_to_big(&prod) == &ba * &bb, "mul mismatch at width {w}");

            let mut m = random_wide(rng, w).shift_right(w / 2);
            if m.is_zero() {
                m = WideUInt::from_u64(w, 3);
            }
            let r = a.rem(&m);
            ensure!(wide_to_big(&r) == &ba % wide_to_big(&m), "rem mismatch at width {w}");

            let d = rng.gen::<u64>() | 1;
            let (q, r) = a.div_rem_u64(d);
            ensure!(
                wide_to_big(&q) == &ba / d && BigUint::from(r) == &ba % d,
                "div_rem_u64 mismatch at width {w}"
            );
            trials += 1;
        }
    }
    Ok(trials)
}

fn suite_modarith(rng: &mut StdRng) -> Result<u64> {
    let mut trials = 0;
    for w in [64usize, 512] {
        let q = find_ntt_prime(w, 4096, 0)?;
        let ctx = MontgomeryContext::new(w, q.clone())?;
        let bq = wide_to_big(&q);
        for _ in 0..2000 {
            let a = random_below(rng, &q);
            let b = random_below(rng, &q);
            let ea = ctx.to_montgomery(&a);
            ensure!(ctx.from_montgomery(&ea) == a, "montgomery round trip at width {w}");
            let eb = ctx.to_montgomery(&b);
            let prod = ctx.from_montgomery(&ctx.mul(&ea, &eb));
            let want = (wide_to_big(&a) * wide_to_big(&b)) % &bq;
            ensure!(wide_to_big(&prod) == want, "modular product at width {w}");
            trials += 1;
        }
    }
    Ok(trials)
}

fn suite_rns(rng: &mut StdRng) -> Result<u64> {
    let basis = RnsBasis::build_basis(360, 64, 4096)?;
    let bprod = wide_to_big(basis.product());
    let mut trials = 0;
    for _ in 0..400 {
        let raw = random_wide(rng, basis.product().capacity_bits());
        let x = big_to_wide(basis.product().capacity_bits(), &(wide_to_big(&raw) % &bprod));
        let residues = basis.decompose(&x)?;
        ensure!(basis.reconstruct(&residues)? == x, "rns round trip");
        let shorter = basis.without_last()?;
        let y = x.rem(shorter.product());
        ensure!(
            shorter.reconstruct(&shorter.decompose(&y)?)? == y,
            "rns round trip after dropping a modulus"
        );
        trials += 1;
    }
    Ok(trials)
}

fn suite_ntt(rng: &mut StdRng) -> Result<u64> {
    let mut trials = 0;
    for w in [32usize, 64, 512] {
        let q = find_ntt_prime(w, 1024, 0)?;
        let ctx = Arc::new(MontgomeryContext::new(w, q.clone())?);
        let tables = NttTables::negacyclic(Arc::clone(&ctx), 1024)?;
        for _ in 0..40 {
            let elems: Vec<_> = (0..1024)
                .map(|_| ctx.to_montgomery(&random_below(rng, &q)))
                .collect();
            let original = pack_elements(&ctx, &elems);
            let mut words = original.clone();
            ntt_direct(&mut words, &tables);
            ensure!(words != original, "transform left data unchanged at width {w}");
            intt_direct(&mut words, &tables);
            ensure!(words == original, "ntt round trip at width {w}");
            trials += 1;
        }

        // Convolution theorem against the schoolbook negacyclic product.
        let small = NttTables::negacyclic(Arc::clone(&ctx), 32)?;
        let bq = wide_to_big(&q);
        for _ in 0..40 {
            let a: Vec<u64> = (0..32).map(|_| rng.gen_range(0..1 << 20)).collect();
            let b: Vec<u64> = (0..32).map(|_| rng.gen_range(0..1 << 20)).collect();
            let mut expected = [0i128; 32];
            for i in 0..32 {
                for j in 0..32 {
                    let p = (a[i] * b[j]) as i128;
                    if i + j < 32 {
                        expected[i + j] += p;
                    } else {
                        expected[i + j - 32] -= p;
                    }
                }
            }
            let pack = |vals: &[u64]| {
                let elems: Vec<_> = vals.iter().map(|&v| ctx.from_u64(v)).collect();
                pack_elements(&ctx, &elems)
            };
            let mut fa = pack(&a);
            let mut fb = pack(&b);
            ntt_direct(&mut fa, &small);
            ntt_direct(&mut fb, &small);
            pointwise_mul_assign(&mut fa, &fb, &ctx);
            intt_direct(&mut fa, &small);
            let got: Vec<BigUint> = unpack_elements(&ctx, &fa)
                .iter()
                .map(|e| wide_to_big(&ctx.from_montgomery(e)))
                .collect();
            for (g, &e) in got.iter().zip(&expected) {
                let want = if e >= 0 {
                    BigUint::from(e as u128) % &bq
                } else {
                    (&bq - BigUint::from((-e) as u128) % &bq) % &bq
                };
                ensure!(*g == want, "convolution mismatch at width {w}");
            }
            trials += 1;
        }
    }
    Ok(trials)
}

fn suite_transpose(rng: &mut StdRng) -> Result<u64> {
    let mut trials = 0;
    for e in [2usize, 4, 8, 16] {
        let original: Vec<u64> = (0..(e * e) as u64).collect();
        let mut data = original.clone();
        let mut tu = TuHierarchy::for_matrix(e);
        transpose_recursive(&mut MatrixView::new(&mut data, e, 1), &mut tu);
        for r in 0..e {
            for c in 0..e {
                ensure!(data[r * e + c] == original[c * e + r], "transpose {e}x{e}");
            }
        }
        ensure!(tu.total_moves() > 0, "transpose unit recorded no moves");
        trials += 1;
    }
    let words = 8;
    let e = 64;
    let original: Vec<u64> = (0..e * e * words).map(|_| rng.gen()).collect();
    let mut recursive = original.clone();
    let mut naive = original.clone();
    let mut tu = TuHierarchy::for_matrix(e);
    transpose_recursive(&mut MatrixView::new(&mut recursive, e, words), &mut tu);
    transpose_naive(&mut MatrixView::new(&mut naive, e, words));
    ensure!(recursive == naive, "recursive and naive transpose disagree");
    trials += 1;
    Ok(trials)
}

fn suite_fheops(args: &CommonArgs, rng: &mut StdRng) -> Result<u64> {
    let (spec, _) = load_params(args.params.as_deref(), "desk")?;
    let ctx = CkksContext::new(spec.build_scheme()?)?;
    let mut meter = KernelCounts::zero();
    let (sk, pk) = ctx.keygen(rng, &mut meter);
    let relin = ctx.relin_hint_gen(&sk, 1, rng, &mut meter)?;
    let rot1 = ctx.rot_hint_gen(&sk, 1, 1, rng, &mut meter)?;
    let scale = ctx.params().scale();
    let top = spec.k;
    let slots = ctx.slot_count();

    let rel_err = |got: &[Complex], want: &[Complex]| {
        let peak = want.iter().map(|w| w.abs()).fold(1.0f64, f64::max);
        got.iter()
            .zip(want)
            .map(|(g, w)| (*g - *w).abs())
            .fold(0.0f64, f64::max)
            / peak
    };

    let mut trials = 0;
    for _ in 0..3 {
        let va: Vec<Complex> = (0..slots)
            .map(|_| Complex::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let vb: Vec<Complex> = (0..slots)
            .map(|_| Complex::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let ca = ctx.encrypt(&ctx.encode(&va, scale, top, &mut meter)?, &pk, rng, &mut meter);
        let cb = ctx.encrypt(&ctx.encode(&vb, scale, top, &mut meter)?, &pk, rng, &mut meter);

        // Fresh public-key noise sits just under 2^-24 at these parameters;
        // encode round-trip alone is bounded by 2^-(scale - log2 n - 4).
        let da = ctx.decode(&ctx.decrypt(&ca, &sk, &mut meter))?;
        let e = rel_err(&da, &va);
        ensure!(e < 2f64.powi(-23), "enc/dec error {e:.3e} above 2^-23");

        // FADD itself is exact modular addition; gate the error it adds on
        // top of what the operands already carry.
        let db = ctx.decode(&ctx.decrypt(&cb, &sk, &mut meter))?;
        let sum = ctx.decode(&ctx.decrypt(&ctx.fadd(&ca, &cb, &mut meter)?, &sk, &mut meter))?;
        let want: Vec<Complex> = da.iter().zip(&db).map(|(x, y)| *x + *y).collect();
        let e = rel_err(&sum, &want);
        ensure!(e < 2f64.powi(-25), "fadd added error {e:.3e} above 2^-25");

        let prod =
            ctx.decode(&ctx.decrypt(&ctx.fmul(&ca, &cb, &relin, &mut meter)?, &sk, &mut meter))?;
        let want: Vec<Complex> = va.iter().zip(&vb).map(|(x, y)| *x * *y).collect();
        let e = rel_err(&prod, &want);
        ensure!(e < 2f64.powi(-18), "fmul error {e:.3e} above 2^-18");

        let rot = ctx.decode(&ctx.decrypt(&ctx.frot(&ca, 1, &rot1, &mut meter)?, &sk, &mut meter))?;
        let want: Vec<Complex> = (0..slots).map(|t| va[(t + 1) % slots]).collect();
        let e = rel_err(&rot, &want);
        ensure!(e < 2f64.powi(-18), "frot error {e:.3e} above 2^-18");
        trials += 4;
    }
    Ok(trials)
}

/// Functional execution of the trace named by `--program`, gated on the
/// decrypt-time error of every DEC statement.
fn suite_program(args: &CommonArgs, seed: u64) -> Result<u64> {
    let path = args.program.as_deref().expect("caller checked");
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("reading '{}': {e}", path.display()))?;
    let program = cryptolight_model::parse_program(&text)?;
    let (spec, _) = load_params(args.params.as_deref(), "desk")?;
    let outcome = crate::interp::execute(&program, &spec, seed)?;
    for check in &outcome.dec_checks {
        ensure!(
            check.rel_err < 2f64.powi(-12),
            "DEC '{}' error {:.3e} above 2^-12",
            check.result,
            check.rel_err
        );
    }
    Ok(program.statements.len() as u64)
}

pub fn run(args: &CommonArgs) -> Result<()> {
    let seed = args.seed.unwrap_or(1);
    let mut results: Vec<(&'static str, Result<u64>, u128)> = Vec::new();
    let mut suites: Vec<(&'static str, Box<dyn Fn(&mut StdRng) -> Result<u64> + '_>)> = vec![
        ("wideint", Box::new(suite_wideint)),
        ("modarith", Box::new(suite_modarith)),
        ("rns", Box::new(suite_rns)),
        ("ntt", Box::new(suite_ntt)),
        ("transpose", Box::new(suite_transpose)),
        ("fheops", Box::new(move |rng: &mut StdRng| suite_fheops(args, rng))),
    ];
    if args.program.is_some() {
        suites.push(("program", Box::new(move |_rng: &mut StdRng| suite_program(args, seed))));
    }
    for (name, body) in suites {
        let mut rng = StdRng::seed_from_u64(seed);
        let start = Instant::now();
        let outcome = body(&mut rng);
        results.push((name, outcome, start.elapsed().as_millis()));
    }

    println!("{:<12}{:>8}{:>8}  status", "suite", "trials", "ms");
    let mut failures = Vec::new();
    for (name, outcome, ms) in &results {
        match outcome {
            Ok(trials) => println!("{name:<12}{trials:>8}{ms:>8}  ok"),
            Err(e) => {
                println!("{name:<12}{:>8}{ms:>8}  FAIL: {e:#}", "-");
                failures.push(*name);
            }
        }
    }
    if failures.is_empty() {
        println!("all suites passed");
        Ok(())
    } else {
        bail!("{} suite(s) failed: {}", failures.len(), failures.join(", "));
    }
}
