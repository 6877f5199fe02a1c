//! The blocked four-step transform must agree with the direct one word for
//! word, up to and including the 65536-point size whose inner transforms are
//! 256 points on a side.

use std::sync::Arc;

use cryptolight_core::modarith::{find_ntt_prime, MontgomeryContext};
use cryptolight_core::ntt::{
    intt_direct, intt_four_step, ntt_direct, ntt_four_step, pack_elements, FourStepPlan,
    NttTables, TrafficMeter,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_packed(ctx: &MontgomeryContext, n: usize, rng: &mut StdRng) -> Vec<u64> {
    let q = ctx.modulus().low_u64();
    let elems: Vec<_> = (0..n).map(|_| ctx.from_u64(rng.gen_range(0..q))).collect();
    pack_elements(ctx, &elems)
}

fn check_case(w: usize, n: usize, rng: &mut StdRng) {
    let q = find_ntt_prime(w, n, 0).unwrap();
    let ctx = Arc::new(MontgomeryContext::new(w, q).unwrap());
    let tables = NttTables::negacyclic(ctx.clone(), n).unwrap();
    let plan = FourStepPlan::new(&tables).unwrap();
    for _ in 0..3 {
        let origin = random_packed(&ctx, n, rng);
        let mut direct = origin.clone();
        ntt_direct(&mut direct, &tables);

        let mut blocked = origin.clone();
        let mut meter = TrafficMeter::default();
        ntt_four_step(&mut blocked, &plan, &mut meter);
        assert_eq!(blocked, direct, "forward mismatch at w={w} n={n}");
        assert!(meter.total() > 0, "no transpose traffic metered at w={w} n={n}");

        let mut back = blocked.clone();
        intt_four_step(&mut back, &plan, &mut meter);
        assert_eq!(back, origin, "blocked inverse drift at w={w} n={n}");

        intt_direct(&mut blocked, &tables);
        assert_eq!(blocked, origin, "direct inverse drift at w={w} n={n}");
    }
}

#[test]
fn blocked_matches_direct_small_and_mid_sizes() {
    let mut rng = StdRng::seed_from_u64(5);
    for w in [32usize, 64, 512] {
        for n in [16usize, 256] {
            check_case(w, n, &mut rng);
        }
    }
    check_case(64, 4096, &mut rng);
    check_case(512, 4096, &mut rng);
}

#[test]
fn blocked_matches_direct_at_production_size() {
    let mut rng = StdRng::seed_from_u64(6);
    check_case(64, 65536, &mut rng);
}
