//! Scheme parameter files: the N / Q / W / chain-length settings shared by
//! the functional scheme and the cost model.

use serde::{Deserialize, Serialize};

use crate::Error;

/// Contents of a scheme parameter file. `k` is the functional chain length
/// (the residue count the scheme actually builds); the cost model works with
/// the idealized per-architecture chain `ceil(q_target_bits / W)`, and
/// reports carry both values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSpec {
    pub n: usize,
    pub q_target_bits: usize,
    pub w_bits: usize,
    pub k: usize,
    pub scale_bits: u32,
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ParamSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, Error> {
        let spec: ParamSpec =
            toml::from_str(text).map_err(|e| Error::Config(format!("parameter file: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !self.n.is_power_of_two() || self.n < 4 {
            return Err(Error::Config(format!("n = {} must be a power of two >= 4", self.n)));
        }
        if self.k == 0 || self.q_target_bits == 0 {
            return Err(Error::Config("k and q_target_bits must be positive".into()));
        }
        if self.sigma < 0.0 {
            return Err(Error::Config("sigma must be non-negative".into()));
        }
        Ok(())
    }

    /// Idealized chain length for a given datapath width, the value the
    /// calibrated kernel-count formulas use.
    pub fn calibration_k(&self, arch_w_bits: usize) -> usize {
        self.q_target_bits.div_ceil(arch_w_bits)
    }

    /// Builds the functional scheme parameters this file describes.
    pub fn build_scheme(&self) -> Result<cryptolight_core::ckks::SchemeParams, Error> {
        cryptolight_core::ckks::SchemeParams::build(
            self.n,
            self.w_bits,
            self.q_target_bits,
            self.k,
            self.scale_bits,
            self.sigma,
        )
        .map_err(|e| Error::Config(format!("scheme build: {e}")))
    }

    /// Ciphertext bytes per polynomial pair at this architecture's width:
    /// 2 polys * k residues * n coefficients. Total coefficient storage is
    /// width-independent because k * W tracks q_target_bits.
    pub fn ciphertext_bytes(&self, arch_w_bits: usize) -> u64 {
        let k = self.calibration_k(arch_w_bits) as u64;
        2 * k * self.n as u64 * (arch_w_bits as u64 / 8)
    }

    /// Key-switch hint bytes at dnum = 1: one (h0, h1) pair over the doubled
    /// basis (k chain + k auxiliary residues).
    pub fn hint_bytes(&self, arch_w_bits: usize) -> u64 {
        let k = self.calibration_k(arch_w_bits) as u64;
        2 * 2 * k * self.n as u64 * (arch_w_bits as u64 / 8)
    }

    /// Twiddle table bytes: forward + inverse per residue of the doubled
    /// basis.
    pub fn twiddle_bytes(&self, arch_w_bits: usize) -> u64 {
        let k = self.calibration_k(arch_w_bits) as u64;
        2 * 2 * k * self.n as u64 * (arch_w_bits as u64 / 8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_validates() {
        let spec = ParamSpec::from_toml_str(
            "n = 4096\nq_target_bits = 360\nw_bits = 64\nk = 6\nscale_bits = 40\nsigma = 3.2\nseed = 1\n",
        )
        .unwrap();
        assert_eq!(spec.calibration_k(64), 6);
        assert_eq!(spec.calibration_k(32), 12);
        assert_eq!(spec.calibration_k(512), 1);
        assert!(ParamSpec::from_toml_str("n = 5\nq_target_bits = 360\nw_bits = 64\nk = 6\nscale_bits = 40\nsigma = 3.2\n").is_err());
    }

    #[test]
    fn byte_sizes_are_width_invariant() {
        let spec = ParamSpec::from_toml_str(
            "n = 65536\nq_target_bits = 1536\nw_bits = 64\nk = 37\nscale_bits = 40\nsigma = 3.2\n",
        )
        .unwrap();
        // k * W == q_target_bits for exact divisors, so bytes match.
        assert_eq!(spec.hint_bytes(32), spec.hint_bytes(64));
        assert_eq!(spec.hint_bytes(64), spec.hint_bytes(512));
        assert_eq!(spec.hint_bytes(64), 2 * 2 * 24 * 65536 * 8);
    }
}
