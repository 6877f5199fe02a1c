//! Functional execution of an op-program through the toy scheme, with a
//! per-statement kernel census and end-to-end error tracking against a
//! plaintext reference computation carried alongside every ciphertext.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use cryptolight_core::ckks::{PublicKey, SecretKey};
use cryptolight_core::{Ciphertext, CkksContext, Complex, KernelCounts, KeySwitchHint};
use cryptolight_model::{OpKind, OpProgram, ParamSpec};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub struct KeyMaterial {
    pub sk: SecretKey,
    pub pk: PublicKey,
    pub relin: KeySwitchHint,
    pub rotations: BTreeMap<i64, KeySwitchHint>,
}

enum Value {
    Key(usize),
    Cipher { ct: Ciphertext, reference: Vec<Complex> },
}

/// Decode-time comparison for one DEC statement: largest slot deviation
/// relative to the largest reference magnitude (floored at one).
pub struct DecCheck {
    pub result: String,
    pub rel_err: f64,
}

pub struct ExecOutcome {
    pub per_op: Vec<(String, &'static str, KernelCounts)>,
    pub total: KernelCounts,
    pub dec_checks: Vec<DecCheck>,
}

fn max_rel_err(got: &[Complex], want: &[Complex]) -> f64 {
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for w in want {
        scale = scale.max(w.abs());
    }
    for (g, w) in got.iter().zip(want) {
        worst = worst.max((*g - *w).abs());
    }
    worst / scale
}

fn random_slots(rng: &mut StdRng, count: usize) -> Vec<Complex> {
    (0..count)
        .map(|_| Complex::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect()
}

/// Runs the program statement by statement. Every KEYGEN also generates the
/// relinearization hint and one rotation hint per distinct FROT step in the
/// program, mirroring what the lowered KEYGEN recipe accounts for.
pub fn execute(program: &OpProgram, spec: &ParamSpec, seed: u64) -> Result<ExecOutcome> {
    let ctx = CkksContext::new(spec.build_scheme()?)?;
    let mut rng = StdRng::seed_from_u64(seed);
    let slots = ctx.slot_count();
    let top = spec.k;
    let rotation_steps = program.rotation_steps();

    let mut keys: Vec<KeyMaterial> = Vec::new();
    let mut env: BTreeMap<String, Value> = BTreeMap::new();
    let mut per_op = Vec::new();
    let mut total = KernelCounts::zero();
    let mut dec_checks = Vec::new();

    for stmt in &program.statements {
        let mut meter = KernelCounts::zero();
        let cipher = |env: &BTreeMap<String, Value>, name: &str| -> Result<(Ciphertext, Vec<Complex>)> {
            match env.get(name) {
                Some(Value::Cipher { ct, reference }) => Ok((ct.clone(), reference.clone())),
                _ => bail!("'{name}' does not hold a ciphertext"),
            }
        };
        let key = |env: &BTreeMap<String, Value>, name: &str| -> Result<usize> {
            match env.get(name) {
                Some(Value::Key(i)) => Ok(*i),
                _ => bail!("'{name}' does not hold key material"),
            }
        };

        let value = match stmt.op {
            OpKind::Keygen => {
                let (sk, pk) = ctx.keygen(&mut rng, &mut meter);
                let relin = ctx.relin_hint_gen(&sk, 1, &mut rng, &mut meter)?;
                let mut rotations = BTreeMap::new();
                for &steps in &rotation_steps {
                    let hint = ctx.rot_hint_gen(&sk, steps, 1, &mut rng, &mut meter)?;
                    rotations.insert(steps, hint);
                }
                keys.push(KeyMaterial { sk, pk, relin, rotations });
                Value::Key(keys.len() - 1)
            }
            OpKind::Enc => {
                let km = &keys[key(&env, &stmt.args[0])?];
                let reference = random_slots(&mut rng, slots);
                let pt = ctx.encode(&reference, ctx.params().scale(), top, &mut meter)?;
                let ct = ctx.encrypt(&pt, &km.pk, &mut rng, &mut meter);
                Value::Cipher { ct, reference }
            }
            OpKind::Dec => {
                let (ct, reference) = cipher(&env, &stmt.args[0])?;
                let km = &keys[key(&env, &stmt.args[1])?];
                let out = ctx.decode(&ctx.decrypt(&ct, &km.sk, &mut meter))?;
                dec_checks.push(DecCheck {
                    result: stmt.result.clone(),
                    rel_err: max_rel_err(&out, &reference),
                });
                Value::Cipher { ct, reference }
            }
            OpKind::Fadd => {
                let (a, ra) = cipher(&env, &stmt.args[0])?;
                let (b, rb) = cipher(&env, &stmt.args[1])?;
                let ct = ctx.fadd(&a, &b, &mut meter)?;
                let reference = ra.iter().zip(&rb).map(|(x, y)| *x + *y).collect();
                Value::Cipher { ct, reference }
            }
            OpKind::AddCp => {
                let (a, ra) = cipher(&env, &stmt.args[0])?;
                let constant = random_slots(&mut rng, slots);
                let pt = {
                    let mut scratch = KernelCounts::zero();
                    ctx.encode(&constant, a.scale(), a.level(), &mut scratch)?
                };
                let ct = ctx.addcp(&a, &pt, &mut meter)?;
                let reference = ra.iter().zip(&constant).map(|(x, y)| *x + *y).collect();
                Value::Cipher { ct, reference }
            }
            OpKind::MultCp => {
                let (a, ra) = cipher(&env, &stmt.args[0])?;
                let constant = random_slots(&mut rng, slots);
                let pt = {
                    let mut scratch = KernelCounts::zero();
                    ctx.encode(&constant, ctx.params().scale(), a.level(), &mut scratch)?
                };
                let ct = ctx.multcp(&a, &pt, &mut meter)?;
                let reference = ra.iter().zip(&constant).map(|(x, y)| *x * *y).collect();
                Value::Cipher { ct, reference }
            }
            OpKind::Fmul => {
                let (a, ra) = cipher(&env, &stmt.args[0])?;
                let (b, rb) = cipher(&env, &stmt.args[1])?;
                if keys.is_empty() {
                    bail!("FMUL before any KEYGEN");
                }
                let ct = ctx.fmul(&a, &b, &keys[0].relin, &mut meter)?;
                let reference = ra.iter().zip(&rb).map(|(x, y)| *x * *y).collect();
                Value::Cipher { ct, reference }
            }
            OpKind::Frot { steps } => {
                let (a, ra) = cipher(&env, &stmt.args[0])?;
                if keys.is_empty() {
                    bail!("FROT before any KEYGEN");
                }
                let hint = keys[0]
                    .rotations
                    .get(&steps)
                    .context("rotation hint missing")?;
                let ct = ctx.frot(&a, steps, hint, &mut meter)?;
                let m = ra.len();
                let reference = (0..m)
                    .map(|t| ra[(t as i64 + steps).rem_euclid(m as i64) as usize])
                    .collect();
                Value::Cipher { ct, reference }
            }
            OpKind::Fbot => {
                bail!(
                    "statement '{}': FBOT is model-only; the functional layer \
                     implements no bootstrap",
                    stmt.result
                );
            }
        };
        env.insert(stmt.result.clone(), value);
        total = total + meter;
        per_op.push((stmt.result.clone(), stmt.op.name(), meter));
    }

    Ok(ExecOutcome { per_op, total, dec_checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::builtin_params;
    use cryptolight_model::parse_program;

    #[test]
    fn runs_a_chain_and_decrypts_close_to_reference() {
        let program = parse_program(
            "sk = KEYGEN()\n\
             x = ENC(sk)\n\
             y = ENC(sk)\n\
             s = FADD(x, y)\n\
             m = FMUL(s, x)\n\
             r = FROT(m, steps=2)\n\
             d = DEC(r, sk)\n",
        )
        .unwrap();
        let spec = builtin_params("desk").unwrap();
        let out = execute(&program, &spec, 11).unwrap();
        assert_eq!(out.per_op.len(), 7);
        assert_eq!(out.dec_checks.len(), 1);
        assert!(
            out.dec_checks[0].rel_err < 2f64.powi(-18),
            "rel err {}",
            out.dec_checks[0].rel_err
        );
        assert!(out.total.ntt > 0 && out.total.automorphism > 0);
    }

    #[test]
    fn bootstrap_is_rejected_functionally() {
        let program = parse_program(
            "sk = KEYGEN()\n\
             x = ENC(sk)\n\
             b = FBOT(x)\n",
        )
        .unwrap();
        let spec = builtin_params("desk").unwrap();
        let err = match execute(&program, &spec, 1) {
            Err(e) => e.to_string(),
            Ok(_) => panic!("FBOT executed functionally"),
        };
        assert!(err.contains("model-only"), "{err}");
    }
}
