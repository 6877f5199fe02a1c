//! Staged kernel decompositions of the scheme operations.
//!
//! Each op becomes a list of stages; kernels within a stage are mutually
//! independent and stages execute in order (barrier between them). The
//! batch-level census of every recipe is kept identical to the functional
//! layer's instrumented counts at matching (N, level, special count); tests
//! assert that equality op by op.
//!
//! Level conventions: `level` is the main-modulus count of the *input*
//! ciphertext, `s` the special-modulus count used for raising digits. The
//! digit decomposition is one digit over the whole main basis, matching the
//! functional layer's default.

use cryptolight_core::KernelCounts;

use crate::cost::Kernel;
use crate::program::OpKind;
use crate::Error;

/// Identity of a key-switch hint, used for reuse grouping and residency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HintId {
    Relin,
    Rotation(i64),
    /// One-shot hints consumed by the bootstrap recipe, numbered per use.
    Bootstrap(u32),
}

/// A hint consumed at `stage` (index into the recipe's stage list); the
/// scheduler must have the hint resident before that stage starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HintUse {
    pub id: HintId,
    pub stage: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Stage {
    pub kernels: Vec<Kernel>,
}

#[derive(Debug, Clone, Default)]
pub struct OpRecipe {
    pub stages: Vec<Stage>,
    pub hints: Vec<HintUse>,
}

impl OpRecipe {
    pub fn census(&self) -> KernelCounts {
        self.stages
            .iter()
            .flat_map(|s| s.kernels.iter())
            .map(|k| k.census())
            .sum()
    }

    pub fn kernel_count(&self) -> usize {
        self.stages.iter().map(|s| s.kernels.len()).sum()
    }

    fn push_stage(&mut self, kernels: Vec<Kernel>) {
        self.stages.push(Stage { kernels });
    }

    /// Appends another recipe's stages, shifting its hint stage indices.
    fn append(&mut self, other: OpRecipe) {
        let base = self.stages.len();
        self.stages.extend(other.stages);
        self.hints
            .extend(other.hints.into_iter().map(|h| HintUse { id: h.id, stage: h.stage + base }));
    }
}

fn rep(kernel: Kernel, count: u64) -> Vec<Kernel> {
    vec![kernel; count as usize]
}

fn mixed(n: u64, mults: u64, adds: u64, convs: u64) -> Vec<Kernel> {
    let mut v = rep(Kernel::ModMult { elems: n }, mults);
    v.extend(rep(Kernel::ModAdd { elems: n }, adds));
    v.extend(rep(Kernel::BaseConvAcc { elems: n }, convs));
    v
}

/// Key-switch stage sequence: raise the single digit to the special basis,
/// multiply against the hint pair, then scale both halves back down and
/// accumulate into the destination. The hint is consumed at relative stage 3.
fn key_switch_stages(recipe: &mut OpRecipe, hint: HintId, n: u64, level: u64, s: u64) {
    let l = level;
    let hint_stage = recipe.stages.len() + 3;
    recipe.push_stage(rep(Kernel::Intt { points: n }, l));
    recipe.push_stage(mixed(n, s * l, s * l, s * l));
    recipe.push_stage(rep(Kernel::Ntt { points: n }, s));
    recipe.push_stage(rep(Kernel::ModMult { elems: n }, l + s));
    recipe.push_stage(rep(Kernel::Intt { points: n }, 2 * s));
    recipe.push_stage(mixed(n, 2 * s * l, 2 * s * l, 2 * s * l));
    recipe.push_stage(rep(Kernel::Ntt { points: n }, 2 * l));
    recipe.push_stage(rep(Kernel::ModAdd { elems: n }, 4 * l));
    recipe.hints.push(HintUse { id: hint, stage: hint_stage });
}

/// Drop-last-modulus rescale of both ciphertext halves.
fn rescale_stages(recipe: &mut OpRecipe, n: u64, level: u64) {
    let t = level - 1;
    recipe.push_stage(rep(Kernel::Intt { points: n }, 2));
    recipe.push_stage(mixed(n, 2 * t, 2 * t, 2 * t));
    recipe.push_stage(rep(Kernel::Ntt { points: n }, 2 * t));
    let mut last = rep(Kernel::ModAdd { elems: n }, 2 * t);
    last.extend(rep(Kernel::ModMult { elems: n }, 2 * t));
    recipe.push_stage(last);
}

pub fn fadd_recipe(n: u64, level: u64) -> OpRecipe {
    let mut r = OpRecipe::default();
    r.push_stage(rep(Kernel::ModAdd { elems: n }, 2 * level));
    r
}

pub fn addcp_recipe(n: u64, level: u64) -> OpRecipe {
    let mut r = OpRecipe::default();
    r.push_stage(rep(Kernel::ModAdd { elems: n }, level));
    r
}

pub fn multcp_recipe(n: u64, level: u64) -> OpRecipe {
    let mut r = OpRecipe::default();
    r.push_stage(rep(Kernel::ModMult { elems: n }, level));
    rescale_stages(&mut r, n, level);
    r
}

pub fn frot_recipe(n: u64, level: u64, s: u64, steps: i64) -> OpRecipe {
    let mut r = OpRecipe::default();
    r.push_stage(rep(Kernel::Automorphism { elems: n }, 2 * level));
    key_switch_stages(&mut r, HintId::Rotation(steps), n, level, s);
    r
}

/// Ciphertext multiply: tensor, relinearize the quadratic term through the
/// relin hint, and fold the rescale into the two hint-product scale-downs
/// (divide by the special product and the last prime in one pass).
pub fn fmul_recipe(n: u64, level: u64, s: u64) -> OpRecipe {
    let l = level;
    let t = l - 1;
    let d = s + 1;
    let mut r = OpRecipe::default();
    let mut tensor = rep(Kernel::ModMult { elems: n }, 4 * l);
    tensor.extend(rep(Kernel::ModAdd { elems: n }, l));
    r.push_stage(tensor);
    r.push_stage(rep(Kernel::Intt { points: n }, l));
    r.push_stage(mixed(n, s * l, s * l, s * l));
    r.push_stage(rep(Kernel::Ntt { points: n }, s));
    r.hints.push(HintUse { id: HintId::Relin, stage: r.stages.len() });
    r.push_stage(rep(Kernel::ModMult { elems: n }, l + s));
    r.push_stage(rep(Kernel::ModAdd { elems: n }, 2 * l));
    r.push_stage(rep(Kernel::Intt { points: n }, 2 * d));
    r.push_stage(mixed(n, 2 * d * t, 2 * d * t, 2 * d * t));
    r.push_stage(rep(Kernel::Ntt { points: n }, 2 * t));
    let mut last = rep(Kernel::ModAdd { elems: n }, 2 * t);
    last.extend(rep(Kernel::ModMult { elems: n }, 2 * t));
    r.push_stage(last);
    r
}

pub fn enc_recipe(n: u64, level: u64) -> OpRecipe {
    let l = level;
    let mut r = OpRecipe::default();
    r.push_stage(rep(Kernel::ModMult { elems: n }, l));
    r.push_stage(rep(Kernel::Ntt { points: n }, l));
    r.push_stage(rep(Kernel::Ntt { points: n }, 3 * l));
    r.push_stage(rep(Kernel::ModMult { elems: n }, l));
    r.push_stage(rep(Kernel::ModAdd { elems: n }, 3 * l));
    r
}

pub fn dec_recipe(n: u64, level: u64) -> OpRecipe {
    let l = level;
    let mut r = OpRecipe::default();
    r.push_stage(rep(Kernel::ModMult { elems: n }, l));
    r.push_stage(rep(Kernel::ModAdd { elems: n }, l));
    r.push_stage(rep(Kernel::Intt { points: n }, l));
    r
}

/// Hint generation over the doubled basis: transform the noise, combine
/// mask, key product, and gadget payload, then fold the special-product
/// inverse into the main residues of both halves.
fn hint_gen_stages(recipe: &mut OpRecipe, n: u64, k: u64, s: u64) {
    let f = k + s;
    recipe.push_stage(rep(Kernel::Ntt { points: n }, f));
    let mut combine = rep(Kernel::ModMult { elems: n }, f + k);
    combine.extend(rep(Kernel::ModAdd { elems: n }, 2 * f + k));
    recipe.push_stage(combine);
    recipe.push_stage(rep(Kernel::ModMult { elems: n }, 2 * k));
}

/// Key generation: public key, relinearization hint, and one rotation hint
/// per requested step.
pub fn keygen_recipe(n: u64, k: u64, s: u64, rotation_steps: &[i64]) -> OpRecipe {
    let f = k + s;
    let mut r = OpRecipe::default();
    r.push_stage(rep(Kernel::Ntt { points: n }, f));
    r.push_stage(rep(Kernel::Ntt { points: n }, k));
    r.push_stage(rep(Kernel::ModMult { elems: n }, k));
    r.push_stage(rep(Kernel::ModAdd { elems: n }, 2 * k));
    r.push_stage(rep(Kernel::ModMult { elems: n }, f));
    hint_gen_stages(&mut r, n, k, s);
    for _ in rotation_steps {
        r.push_stage(rep(Kernel::Automorphism { elems: n }, f));
        hint_gen_stages(&mut r, n, k, s);
    }
    r
}

/// Declared bootstrap recipe: a fixed mix of rotations, multiplies, and
/// plaintext ops at the full chain length. There is no functional backing;
/// the mix is a stated cost profile, and its hints are one-shot.
pub fn fbot_recipe(n: u64, k: u64, s: u64) -> OpRecipe {
    let mut r = OpRecipe::default();
    for i in 0..8u32 {
        let mut rot = frot_recipe(n, k, s, 0);
        rot.hints.clear();
        let hint_stage = 1 + 3;
        rot.hints.push(HintUse { id: HintId::Bootstrap(i), stage: hint_stage });
        r.append(rot);
    }
    for _ in 0..4 {
        r.append(fmul_recipe(n, k, s));
    }
    for _ in 0..2 {
        r.append(multcp_recipe(n, k));
    }
    for _ in 0..2 {
        r.append(fadd_recipe(n, k));
    }
    r
}

/// Recipe for one parsed op at the given input level. `k` and `s` are the
/// full main-chain and special counts of the parameter set.
pub fn op_recipe(
    kind: &OpKind,
    n: u64,
    level: u64,
    k: u64,
    s: u64,
    rotation_steps: &[i64],
) -> Result<OpRecipe, Error> {
    let need = |min: u64| -> Result<(), Error> {
        if level < min {
            Err(Error::Config(format!(
                "{kind:?} requires level >= {min}, have {level}"
            )))
        } else {
            Ok(())
        }
    };
    Ok(match kind {
        OpKind::Keygen => keygen_recipe(n, k, s, rotation_steps),
        OpKind::Enc => {
            need(1)?;
            enc_recipe(n, level)
        }
        OpKind::Dec => {
            need(1)?;
            dec_recipe(n, level)
        }
        OpKind::Fadd => {
            need(1)?;
            fadd_recipe(n, level)
        }
        OpKind::AddCp => {
            need(1)?;
            addcp_recipe(n, level)
        }
        OpKind::MultCp => {
            need(2)?;
            multcp_recipe(n, level)
        }
        OpKind::Fmul => {
            need(2)?;
            fmul_recipe(n, level, s)
        }
        OpKind::Frot { steps } => {
            need(1)?;
            frot_recipe(n, level, s, *steps)
        }
        OpKind::Fbot => fbot_recipe(n, k, s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_switch_census_is_quadratic_in_chain_length() {
        for kk in [2u64, 3, 6, 16] {
            let mut r = OpRecipe::default();
            key_switch_stages(&mut r, HintId::Relin, 4096, kk, kk);
            let c = r.census();
            assert_eq!(c.ntt + c.intt, 6 * kk);
            assert_eq!(c.mod_mult, 3 * kk * kk + 2 * kk);
            assert_eq!(c.mod_add, 3 * kk * kk + 4 * kk);
            assert_eq!(c.base_conv, 3 * kk * kk);
        }
    }

    #[test]
    fn fmul_transform_count_matches_key_switch_calibration() {
        // The raise adds two transforms and the fused rescale removes two,
        // so the total transform count stays at the key-switch figure.
        for kk in [2u64, 6, 16, 48] {
            let c = fmul_recipe(65536, kk, kk).census();
            assert_eq!(c.ntt + c.intt, 6 * kk);
        }
    }

    #[test]
    fn plaintext_ops_have_no_transforms() {
        let fadd = fadd_recipe(4096, 6).census();
        assert_eq!(fadd.mod_add, 12);
        assert!(fadd.transforms() == 0 && fadd.mod_mult == 0);
        let addcp = addcp_recipe(4096, 6).census();
        assert_eq!(addcp.mod_add, 6);
        assert_eq!(addcp.transforms(), 0);
    }

    #[test]
    fn hint_stage_indices_are_in_range() {
        let ops = [
            fmul_recipe(4096, 6, 6),
            frot_recipe(4096, 6, 6, 3),
            fbot_recipe(4096, 6, 6),
        ];
        for r in &ops {
            assert!(!r.hints.is_empty());
            for h in &r.hints {
                assert!(h.stage < r.stages.len());
                let stage = &r.stages[h.stage];
                // The consuming stage is always the hint-product multiply.
                assert!(stage.kernels.iter().all(|k| matches!(k, Kernel::ModMult { .. })));
            }
        }
        assert_eq!(fbot_recipe(4096, 6, 6).hints.len(), 12);
    }

    #[test]
    fn bootstrap_recipe_is_the_declared_mix() {
        let k = 6;
        let one = fbot_recipe(4096, k, k).census();
        let sum = frot_recipe(4096, k, k, 0).census() * 8
            + fmul_recipe(4096, k, k).census() * 4
            + multcp_recipe(4096, k).census() * 2
            + fadd_recipe(4096, k).census() * 2;
        assert_eq!(one, sum);
    }
}
