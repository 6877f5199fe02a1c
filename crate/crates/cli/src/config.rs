//! Run configuration plumbing: preset resolution, parameter files,
//! `key=value` overrides, and content fingerprints for report preambles.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cryptolight_model::{ArchConfig, ParamSpec};

/// Directory searched for `<name>.toml` before the built-in presets.
pub const PRESET_DIR_ENV: &str = "CRYPTOLIGHT_PRESET_DIR";

/// Accepts a built-in preset name, a `<dir>/<name>.toml` under the preset
/// directory env var, or an explicit path to a TOML file.
pub fn resolve_arch(spec: &str) -> Result<ArchConfig> {
    let as_path = Path::new(spec);
    let looks_like_path = spec.contains(std::path::MAIN_SEPARATOR)
        || as_path.extension().is_some_and(|e| e == "toml");
    if looks_like_path {
        return ArchConfig::from_path(as_path)
            .with_context(|| format!("loading architecture file '{spec}'"));
    }
    if let Ok(dir) = std::env::var(PRESET_DIR_ENV) {
        let candidate = PathBuf::from(dir).join(format!("{spec}.toml"));
        if candidate.exists() {
            return ArchConfig::from_path(&candidate)
                .with_context(|| format!("loading '{}'", candidate.display()));
        }
    }
    ArchConfig::preset(spec)
        .with_context(|| format!("no preset or file named '{spec}'"))
}

/// Parameter sets the tool understands without a file: `desk` is the fast
/// functional configuration (the production chain scaled down to six
/// moduli, so ~41-bit primes that keep the scale stable across rescales),
/// `full` the production-scale one used for architecture comparisons.
pub fn builtin_params(name: &str) -> Option<ParamSpec> {
    match name {
        "desk" => Some(ParamSpec {
            n: 4096,
            q_target_bits: 246,
            w_bits: 64,
            k: 6,
            scale_bits: 40,
            sigma: 3.2,
            seed: 1,
        }),
        "full" => Some(ParamSpec {
            n: 65536,
            q_target_bits: 1536,
            w_bits: 64,
            k: 37,
            scale_bits: 40,
            sigma: 3.2,
            seed: 1,
        }),
        _ => None,
    }
}

/// Loads `--params`; bare names fall back to the built-in sets, absent means
/// the given default. Returns the spec and a label for the report preamble.
pub fn load_params(arg: Option<&Path>, default: &str) -> Result<(ParamSpec, String)> {
    match arg {
        None => Ok((
            builtin_params(default).expect("known default"),
            format!("builtin:{default}"),
        )),
        Some(p) => {
            if let Some(name) = p.to_str().and_then(|s| builtin_params(s).map(|_| s)) {
                return Ok((builtin_params(name).unwrap(), format!("builtin:{name}")));
            }
            let spec = ParamSpec::from_path(p)
                .with_context(|| format!("loading parameter file '{}'", p.display()))?;
            Ok((spec, p.display().to_string()))
        }
    }
}

/// One `--set key=value`. Keys with a `params.` prefix target the parameter
/// set; everything else is an architecture key applied to every requested
/// preset. In sweep mode a comma-separated value list declares an axis.
#[derive(Debug, Clone)]
pub struct Override {
    pub key: String,
    pub values: Vec<String>,
}

impl Override {
    pub fn is_axis(&self) -> bool {
        self.values.len() > 1
    }

    pub fn single(&self) -> Result<&str> {
        if self.is_axis() {
            bail!(
                "key '{}' has {} comma-separated values; value lists only make sense under `sweep`",
                self.key,
                self.values.len()
            );
        }
        Ok(&self.values[0])
    }
}

pub fn parse_overrides(sets: &[String]) -> Result<Vec<Override>> {
    sets.iter()
        .map(|s| {
            let (key, value) = s
                .split_once('=')
                .with_context(|| format!("--set '{s}' is not of the form key=value"))?;
            if key.is_empty() || value.is_empty() {
                bail!("--set '{s}' has an empty key or value");
            }
            Ok(Override {
                key: key.to_string(),
                values: value.split(',').map(str::to_string).collect(),
            })
        })
        .collect()
}

pub fn apply_override(
    arch: &mut ArchConfig,
    params: &mut ParamSpec,
    key: &str,
    value: &str,
) -> Result<()> {
    if let Some(pkey) = key.strip_prefix("params.") {
        apply_param_override(params, pkey, value)
    } else {
        arch.apply_override(key, value)
            .with_context(|| format!("applying --set {key}={value}"))
    }
}

fn apply_param_override(params: &mut ParamSpec, key: &str, value: &str) -> Result<()> {
    let bad = || anyhow::anyhow!("bad value '{value}' for parameter key '{key}'");
    match key {
        "n" => params.n = value.parse().map_err(|_| bad())?,
        "q_target_bits" => params.q_target_bits = value.parse().map_err(|_| bad())?,
        "w_bits" => params.w_bits = value.parse().map_err(|_| bad())?,
        "k" => params.k = value.parse().map_err(|_| bad())?,
        "scale_bits" => params.scale_bits = value.parse().map_err(|_| bad())?,
        "sigma" => params.sigma = value.parse().map_err(|_| bad())?,
        "seed" => params.seed = value.parse().map_err(|_| bad())?,
        _ => bail!("unknown parameter key 'params.{key}'"),
    }
    params.validate()?;
    Ok(())
}

/// FNV-1a over the canonical serialized form, so overrides change the
/// fingerprint even when the source file does not.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

pub fn arch_fingerprint(arch: &ArchConfig) -> String {
    let text = toml::to_string(arch).unwrap_or_default();
    format!("{:016x}", fnv1a64(text.as_bytes()))
}

pub fn params_fingerprint(params: &ParamSpec) -> String {
    let text = toml::to_string(params).unwrap_or_default();
    format!("{:016x}", fnv1a64(text.as_bytes()))
}

pub fn text_fingerprint(text: &str) -> String {
    format!("{:016x}", fnv1a64(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_lists_split_on_commas() {
        let ovs = parse_overrides(&[
            "w_bits=256,512,1024".into(),
            "params.seed=7".into(),
        ])
        .unwrap();
        assert!(ovs[0].is_axis());
        assert_eq!(ovs[0].values, ["256", "512", "1024"]);
        assert!(!ovs[1].is_axis());
        assert!(ovs[0].single().is_err());
        assert_eq!(ovs[1].single().unwrap(), "7");
        assert!(parse_overrides(&["nonsense".into()]).is_err());
        assert!(parse_overrides(&["=3".into()]).is_err());
    }

    #[test]
    fn param_overrides_apply_and_validate() {
        let mut arch = ArchConfig::preset("bts64").unwrap();
        let mut params = builtin_params("desk").unwrap();
        apply_override(&mut arch, &mut params, "params.n", "8192").unwrap();
        assert_eq!(params.n, 8192);
        apply_override(&mut arch, &mut params, "spm_bytes", "1073741824").unwrap();
        assert_eq!(arch.spm_bytes, 1 << 30);
        assert!(apply_override(&mut arch, &mut params, "params.n", "1000").is_err());
        assert!(apply_override(&mut arch, &mut params, "params.bogus", "1").is_err());
        assert!(apply_override(&mut arch, &mut params, "bogus", "1").is_err());
    }

    #[test]
    fn fingerprints_track_content() {
        let a = ArchConfig::preset("bts64").unwrap();
        let mut b = a.clone();
        assert_eq!(arch_fingerprint(&a), arch_fingerprint(&b));
        b.apply_override("spm_bytes", "123456789").unwrap();
        assert_ne!(arch_fingerprint(&a), arch_fingerprint(&b));
    }
}
