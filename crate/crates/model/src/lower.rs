//! Lowers a parsed op-program to per-op kernel recipes with level tracking.
//!
//! The chain length used here is the idealized calibration value
//! k = ceil(Q_target / W) for the target datapath, carrying the published
//! key-switch count formulas through every op; the functional layer's own
//! chain length (which reserves headroom bits per modulus) is reported
//! alongside. On the 64-bit desk configuration the two coincide, which is
//! what the census-agreement tests rely on.

use cryptolight_core::KernelCounts;

use crate::arch::ArchConfig;
use crate::params::ParamSpec;
use crate::program::{OpKind, OpProgram};
use crate::recipes::{op_recipe, OpRecipe};
use crate::Error;

#[derive(Debug, Clone)]
pub struct LoweredOp {
    /// Index of the originating statement in the (possibly reordered) program.
    pub statement: usize,
    pub result: String,
    pub op_name: &'static str,
    /// Input chain length the recipe was built at.
    pub level: u64,
    pub recipe: OpRecipe,
    pub counts: KernelCounts,
}

#[derive(Debug, Clone)]
pub struct LoweredProgram {
    pub ops: Vec<LoweredOp>,
    pub n: u64,
    /// Calibration chain length (also the special-modulus count).
    pub k: u64,
    pub functional_k: u64,
    pub rotation_steps: Vec<i64>,
    pub hint_bytes: u64,
    pub twiddle_bytes: u64,
    pub total_counts: KernelCounts,
}

/// Lowers every statement at its tracked level. Level rules: ENC starts at
/// the full chain; FMUL and MULTCP consume one modulus and need two; FBOT
/// restores the full chain; FADD requires equal input levels.
pub fn lower_program(
    program: &OpProgram,
    params: &ParamSpec,
    arch: &ArchConfig,
) -> Result<LoweredProgram, Error> {
    let n = params.n as u64;
    let k = params.calibration_k(arch.w_bits as usize) as u64;
    let s = k;
    let rotation_steps = program.rotation_steps();
    let mut levels: std::collections::HashMap<&str, u64> = std::collections::HashMap::new();
    let mut ops = Vec::with_capacity(program.statements.len());
    let mut total = KernelCounts::zero();

    for (idx, st) in program.statements.iter().enumerate() {
        let err = |msg: String| Error::Config(format!("statement '{}': {msg}", st.result));
        let arg_level = |i: usize| -> u64 { levels[program.statements[idx].args[i].as_str()] };
        let (level, result_level) = match &st.op {
            OpKind::Keygen => (k, None),
            OpKind::Enc => (k, Some(k)),
            OpKind::Dec => (arg_level(0), None),
            OpKind::Fadd => {
                let (a, b) = (arg_level(0), arg_level(1));
                if a != b {
                    return Err(err(format!("FADD needs equal levels, got {a} and {b}")));
                }
                (a, Some(a))
            }
            OpKind::AddCp => (arg_level(0), Some(arg_level(0))),
            OpKind::MultCp => {
                let l = arg_level(0);
                (l, Some(l.saturating_sub(1)))
            }
            OpKind::Fmul => {
                let (a, b) = (arg_level(0), arg_level(1));
                if a != b {
                    return Err(err(format!("FMUL needs equal levels, got {a} and {b}")));
                }
                (a, Some(a.saturating_sub(1)))
            }
            OpKind::Frot { .. } => (arg_level(0), Some(arg_level(0))),
            OpKind::Fbot => (k, Some(k)),
        };
        let mut recipe = op_recipe(&st.op, n, level, k, s, &rotation_steps).map_err(|e| {
            err(format!(
                "{e} (calibration chain is k={k} for Q={} bits on the {}-bit datapath)",
                params.q_target_bits, arch.w_bits
            ))
        })?;
        if matches!(st.op, OpKind::Fbot) {
            // One-shot hints are private to each bootstrap instance; make
            // their ids globally unique so the transfer planner never
            // treats two instances' hints as shareable.
            for hu in recipe.hints.iter_mut() {
                if let crate::recipes::HintId::Bootstrap(i) = hu.id {
                    hu.id = crate::recipes::HintId::Bootstrap((idx as u32) << 4 | i);
                }
            }
        }
        let counts = recipe.census();
        total = total + counts;
        if let Some(l) = result_level {
            levels.insert(st.result.as_str(), l);
        }
        ops.push(LoweredOp {
            statement: idx,
            result: st.result.clone(),
            op_name: st.op.name(),
            level,
            recipe,
            counts,
        });
    }

    Ok(LoweredProgram {
        ops,
        n,
        k,
        functional_k: params.k as u64,
        rotation_steps,
        hint_bytes: params.hint_bytes(arch.w_bits as usize),
        twiddle_bytes: params.twiddle_bytes(arch.w_bits as usize),
        total_counts: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::parse_program;

    fn desk_params() -> ParamSpec {
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

    #[test]
    fn levels_flow_through_the_chain() {
        let text = "\
sk = KEYGEN()
x = ENC(sk)
y = ENC(sk)
m = FMUL(x, y)
p = MULTCP(m)
r = FROT(p, steps=2)
d = DEC(r, sk)
";
        let p = parse_program(text).unwrap();
        let arch = ArchConfig::preset("bts64").unwrap();
        let low = lower_program(&p, &desk_params(), &arch).unwrap();
        assert_eq!(low.k, 6);
        assert_eq!(low.functional_k, 6);
        let by_name: std::collections::HashMap<&str, &LoweredOp> =
            low.ops.iter().map(|o| (o.result.as_str(), o)).collect();
        assert_eq!(by_name["m"].level, 6);
        assert_eq!(by_name["p"].level, 5);
        assert_eq!(by_name["r"].level, 4);
        assert_eq!(by_name["d"].level, 4);
        assert_eq!(low.rotation_steps, vec![2]);
    }

    #[test]
    fn depth_exhaustion_is_an_error() {
        let text = "\
sk = KEYGEN()
x = ENC(sk)
y = ENC(sk)
a = FMUL(x, y)
b = FMUL(a, a)
c = FMUL(b, b)
d = FMUL(c, c)
e = FMUL(d, d)
f = FMUL(e, e)
";
        let p = parse_program(text).unwrap();
        let arch = ArchConfig::preset("bts64").unwrap();
        let err = lower_program(&p, &desk_params(), &arch).unwrap_err().to_string();
        assert!(err.contains("level"), "{err}");
    }

    #[test]
    fn bootstrap_restores_the_chain() {
        let text = "\
sk = KEYGEN()
x = ENC(sk)
y = ENC(sk)
a = FMUL(x, y)
b = FMUL(a, a)
c = FMUL(b, b)
d = FMUL(c, c)
r = FBOT(d)
e = FMUL(r, r)
";
        let p = parse_program(text).unwrap();
        let arch = ArchConfig::preset("bts64").unwrap();
        let low = lower_program(&p, &desk_params(), &arch).unwrap();
        let last = low.ops.last().unwrap();
        assert_eq!(last.op_name, "FMUL");
        assert_eq!(last.level, 6);
    }

    #[test]
    fn calibration_chain_follows_the_datapath() {
        let p = parse_program("sk = KEYGEN()\nx = ENC(sk)\ny = FMUL(x, x)").unwrap();
        let full = ParamSpec {
            n: 65536,
            q_target_bits: 1536,
            w_bits: 64,
            k: 37,
            scale_bits: 40,
            sigma: 3.2,
            seed: 1,
        };
        let lake = ArchConfig::preset("lake32").unwrap();
        let cl = ArchConfig::preset("cryptolight").unwrap();
        assert_eq!(lower_program(&p, &full, &lake).unwrap().k, 48);
        assert_eq!(lower_program(&p, &full, &cl).unwrap().k, 3);
        // Hint bytes depend on the chain, not the word size: 2 polys x
        // 2 bases x k residues of N words.
        let hb = lower_program(&p, &full, &lake).unwrap().hint_bytes;
        assert_eq!(hb, 2 * 2 * 48 * 65536 * 4);
        assert_eq!(lower_program(&p, &full, &cl).unwrap().hint_bytes, hb);
    }
}
