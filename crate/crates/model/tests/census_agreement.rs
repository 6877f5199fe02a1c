//! The lowered recipes and the instrumented functional layer must agree on
//! kernel counts, op by op, when the calibration chain matches the functional
//! chain (W = 64 on the desk parameter set makes both k = 6).

use std::collections::BTreeMap;

use cryptolight_core::ckks::{PublicKey, SecretKey};
use cryptolight_core::{CkksContext, Complex, KernelCounts, KeySwitchHint};
use cryptolight_model::{lower_program, parse_program, ArchConfig, ParamSpec};
use rand::rngs::StdRng;
use rand::SeedableRng;

const PROGRAM: &str = "\
sk = KEYGEN()
x = ENC(sk)
y = ENC(sk)
s = FADD(x, y)
t = ADDCP(s)
m = FMUL(t, x)
p = MULTCP(m)
r = FROT(p, steps=3)
d = DEC(r, sk)
";

/// Chain sized so ceil(q_target_bits / 64) equals the functional k; counts
/// are data-independent, so the noise behavior of the 60-bit moduli this
/// produces does not matter here.
fn desk_spec() -> ParamSpec {
    ParamSpec {
        n: 4096,
        q_target_bits: 360,
        w_bits: 64,
        k: 6,
        scale_bits: 40,
        sigma: 3.2,
        seed: 1,
    }
}

fn bts64() -> ArchConfig {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("presets/bts64.toml");
    ArchConfig::from_path(&path).unwrap()
}

struct Harness {
    ctx: CkksContext,
    rng: StdRng,
    sk: SecretKey,
    pk: PublicKey,
    relin: KeySwitchHint,
    rot3: KeySwitchHint,
    keygen_counts: KernelCounts,
}

impl Harness {
    fn new(spec: &ParamSpec) -> Self {
        let ctx = CkksContext::new(spec.build_scheme().unwrap()).unwrap();
        let mut rng = StdRng::seed_from_u64(spec.seed);
        let mut meter = KernelCounts::zero();
        let (sk, pk) = ctx.keygen(&mut rng, &mut meter);
        let relin = ctx.relin_hint_gen(&sk, 1, &mut rng, &mut meter).unwrap();
        let rot3 = ctx.rot_hint_gen(&sk, 3, 1, &mut rng, &mut meter).unwrap();
        Harness {
            ctx,
            rng,
            sk,
            pk,
            relin,
            rot3,
            keygen_counts: meter,
        }
    }

    fn slots(&self) -> Vec<Complex> {
        (0..self.ctx.slot_count())
            .map(|i| Complex::new(0.001 * i as f64, -0.0005 * i as f64))
            .collect()
    }

    /// Encodes a plaintext operand without touching the op meter; the model
    /// treats plaintext constants as prepared ahead of time.
    fn constant(&self, scale: f64, level: usize) -> cryptolight_core::Plaintext {
        let mut scratch = KernelCounts::zero();
        self.ctx
            .encode(&self.slots(), scale, level, &mut scratch)
            .unwrap()
    }
}

#[test]
fn lowered_counts_match_instrumented_ops() {
    let spec = desk_spec();
    let arch = bts64();
    let program = parse_program(PROGRAM).unwrap();
    let lowered = lower_program(&program, &spec, &arch).unwrap();
    assert_eq!(lowered.functional_k, 6);
    assert_eq!(lowered.k, 6);

    let mut h = Harness::new(&spec);
    let scale = (1u64 << spec.scale_bits) as f64;
    let mut measured: BTreeMap<&str, KernelCounts> = BTreeMap::new();

    measured.insert("sk", h.keygen_counts);

    let mut meter = KernelCounts::zero();
    let slots = h.slots();
    let pt = h.ctx.encode(&slots, scale, spec.k, &mut meter).unwrap();
    let x = h.ctx.encrypt(&pt, &h.pk, &mut h.rng, &mut meter);
    measured.insert("x", meter);

    let mut meter = KernelCounts::zero();
    let pt = h.ctx.encode(&slots, scale, spec.k, &mut meter).unwrap();
    let y = h.ctx.encrypt(&pt, &h.pk, &mut h.rng, &mut meter);
    measured.insert("y", meter);

    let mut meter = KernelCounts::zero();
    let s = h.ctx.fadd(&x, &y, &mut meter).unwrap();
    measured.insert("s", meter);

    let cpt = h.constant(s.scale(), s.level());
    let mut meter = KernelCounts::zero();
    let t = h.ctx.addcp(&s, &cpt, &mut meter).unwrap();
    measured.insert("t", meter);

    let mut meter = KernelCounts::zero();
    let m = h.ctx.fmul(&t, &x, &h.relin, &mut meter).unwrap();
    measured.insert("m", meter);

    let cpt = h.constant(scale, m.level());
    let mut meter = KernelCounts::zero();
    let p = h.ctx.multcp(&m, &cpt, &mut meter).unwrap();
    measured.insert("p", meter);

    let mut meter = KernelCounts::zero();
    let r = h.ctx.frot(&p, 3, &h.rot3, &mut meter).unwrap();
    measured.insert("r", meter);

    let mut meter = KernelCounts::zero();
    let _ = h.ctx.decrypt(&r, &h.sk, &mut meter);
    measured.insert("d", meter);

    let mut total = KernelCounts::zero();
    for op in &lowered.ops {
        let got = measured
            .get(op.result.as_str())
            .unwrap_or_else(|| panic!("no measurement for {}", op.result));
        assert_eq!(
            *got, op.counts,
            "census mismatch for {} ({}): functional {:?} vs lowered {:?}",
            op.result, op.op_name, got, op.counts
        );
        total = total + op.counts;
    }
    assert_eq!(total, lowered.total_counts);
}

#[test]
fn level_bookkeeping_matches_the_functional_chain() {
    let spec = desk_spec();
    let program = parse_program(PROGRAM).unwrap();
    let lowered = lower_program(&program, &spec, &bts64()).unwrap();

    let mut h = Harness::new(&spec);
    let scale = (1u64 << spec.scale_bits) as f64;
    let mut scratch = KernelCounts::zero();
    let slots = h.slots();
    let pt = h.ctx.encode(&slots, scale, spec.k, &mut scratch).unwrap();
    let x = h.ctx.encrypt(&pt, &h.pk, &mut h.rng, &mut scratch);
    let y = h.ctx.encrypt(&pt, &h.pk, &mut h.rng, &mut scratch);
    let s = h.ctx.fadd(&x, &y, &mut scratch).unwrap();
    let cpt = h.constant(s.scale(), s.level());
    let t = h.ctx.addcp(&s, &cpt, &mut scratch).unwrap();
    let m = h.ctx.fmul(&t, &x, &h.relin, &mut scratch).unwrap();
    let cpt = h.constant(scale, m.level());
    let p = h.ctx.multcp(&m, &cpt, &mut scratch).unwrap();
    let r = h.ctx.frot(&p, 3, &h.rot3, &mut scratch).unwrap();

    // A lowered op records the level it executes at; rescaling ops hand back
    // a ciphertext one level lower, so their functional result sits at
    // execution level minus one.
    let functional: BTreeMap<&str, u64> = [
        ("x", x.level() as u64),
        ("y", y.level() as u64),
        ("s", s.level() as u64),
        ("t", t.level() as u64),
        ("m", m.level() as u64 + 1),
        ("p", p.level() as u64 + 1),
        ("r", r.level() as u64),
    ]
    .into_iter()
    .collect();

    for op in &lowered.ops {
        if let Some(&level) = functional.get(op.result.as_str()) {
            assert_eq!(
                op.level, level,
                "level mismatch for {}: lowered {} vs functional {}",
                op.result, op.level, level
            );
        }
    }
}
