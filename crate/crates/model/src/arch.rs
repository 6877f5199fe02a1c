//! Accelerator descriptions: datapath width, function-unit counts, memory
//! system rates, and per-operation energies. Three presets ship as TOML
//! files compiled into the binary; all values can be overridden.

use serde::{Deserialize, Serialize};

use crate::Error;

pub const PRESET_CRYPTOLIGHT: &str = include_str!("../presets/cryptolight.toml");
pub const PRESET_LAKE32: &str = include_str!("../presets/lake32.toml");
pub const PRESET_BTS64: &str = include_str!("../presets/bts64.toml");

pub const SUPPORTED_WIDTHS: [u64; 5] = [32, 64, 256, 512, 1024];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreqEntry {
    pub width: u64,
    pub hz: f64,
}

/// Per-operation energy in picojoules (per element op or per byte moved).
/// Preset values are back-solved from published power shares under a
/// utilization assumption declared in the preset files; comparisons should
/// use ratios, not absolute joules.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyTable {
    pub add_pj: f64,
    pub mult_pj: f64,
    pub butterfly_pj: f64,
    pub automorphism_pj: f64,
    pub spm_pj_per_byte: f64,
    pub noc_pj_per_byte: f64,
    pub hbm_pj_per_byte: f64,
    pub tu_move_pj: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArchConfig {
    pub name: String,
    /// Datapath width in bits; also the modular word size of the design.
    pub w_bits: u64,
    /// Clock by adder width; the active entry is the one matching `w_bits`.
    pub freq_table: Vec<FreqEntry>,
    /// Compute units. Each CU carries one 2-butterfly NTT unit, one dual
    /// add/mult block, and one automorphism unit (baseline PE counts are
    /// normalized to this shape in the presets).
    pub cu_count: u64,
    pub butterflies_per_unit: u64,
    pub mult_lanes: u64,
    pub add_lanes: u64,
    pub auto_lanes: u64,
    /// Largest NTT a unit runs natively; larger sizes decompose four-step.
    pub ntt_native_points: u64,
    pub spm_bytes: u64,
    pub bank_count: u64,
    pub noc_bytes_per_sec: f64,
    pub hbm_bytes_per_sec: f64,
    pub tu_enabled: bool,
    pub tu_count: u64,
    pub energy: EnergyTable,
    /// Multiplier pipeline-fill penalty kicks in at this width and above,
    /// modeling register-file pressure on very wide datapaths.
    pub rf_pressure_width: u64,
    pub rf_fill_factor: u64,
    /// Reporting-only figures from the published tables.
    pub power_budget_w: f64,
    pub area_mm2: f64,
}

impl ArchConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, Error> {
        let cfg: ArchConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("arch config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Built-in preset by name.
    pub fn preset(name: &str) -> Result<Self, Error> {
        let text = match name {
            "cryptolight" => PRESET_CRYPTOLIGHT,
            "lake32" => PRESET_LAKE32,
            "bts64" => PRESET_BTS64,
            other => return Err(Error::Config(format!("unknown preset '{other}'"))),
        };
        Self::from_toml_str(text)
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["cryptolight", "lake32", "bts64"]
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !SUPPORTED_WIDTHS.contains(&self.w_bits) {
            return Err(Error::Config(format!(
                "w_bits {} not in supported set {SUPPORTED_WIDTHS:?}",
                self.w_bits
            )));
        }
        let positive = [
            ("cu_count", self.cu_count as f64),
            ("butterflies_per_unit", self.butterflies_per_unit as f64),
            ("mult_lanes", self.mult_lanes as f64),
            ("add_lanes", self.add_lanes as f64),
            ("auto_lanes", self.auto_lanes as f64),
            ("ntt_native_points", self.ntt_native_points as f64),
            ("spm_bytes", self.spm_bytes as f64),
            ("bank_count", self.bank_count as f64),
            ("noc_bytes_per_sec", self.noc_bytes_per_sec),
            ("hbm_bytes_per_sec", self.hbm_bytes_per_sec),
            ("rf_fill_factor", self.rf_fill_factor as f64),
        ];
        for (name, v) in positive {
            if v <= 0.0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        let energies = [
            self.energy.add_pj,
            self.energy.mult_pj,
            self.energy.butterfly_pj,
            self.energy.automorphism_pj,
            self.energy.spm_pj_per_byte,
            self.energy.noc_pj_per_byte,
            self.energy.hbm_pj_per_byte,
            self.energy.tu_move_pj,
        ];
        if energies.iter().any(|&e| e < 0.0) {
            return Err(Error::Config("energies must be non-negative".into()));
        }
        if self.tu_enabled && self.tu_count == 0 {
            return Err(Error::Config("tu_enabled requires tu_count > 0".into()));
        }
        self.frequency()?;
        Ok(())
    }

    /// Clock for the configured datapath width.
    pub fn frequency(&self) -> Result<f64, Error> {
        frequency_for_width(self.w_bits, &self.freq_table)
    }

    /// Multiplier pipeline-fill cycles charged once per batch.
    pub fn fill_cycles(&self) -> u64 {
        if self.w_bits >= self.rf_pressure_width {
            self.w_bits * self.rf_fill_factor
        } else {
            self.w_bits
        }
    }

    pub fn elem_bytes(&self) -> u64 {
        self.w_bits / 8
    }

    /// Applies a `key=value` override. Nested keys use dots: `energy.hbm_pj_per_byte`,
    /// `freq.512`.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<(), Error> {
        let bad_val = |k: &str, v: &str| Error::Config(format!("bad value '{v}' for key '{k}'"));
        macro_rules! num {
            ($t:ty) => {
                value.parse::<$t>().map_err(|_| bad_val(key, value))?
            };
        }
        match key {
            "w_bits" => self.w_bits = num!(u64),
            "cu_count" => self.cu_count = num!(u64),
            "butterflies_per_unit" => self.butterflies_per_unit = num!(u64),
            "mult_lanes" => self.mult_lanes = num!(u64),
            "add_lanes" => self.add_lanes = num!(u64),
            "auto_lanes" => self.auto_lanes = num!(u64),
            "ntt_native_points" => self.ntt_native_points = num!(u64),
            "spm_bytes" => self.spm_bytes = num!(u64),
            "bank_count" => self.bank_count = num!(u64),
            "noc_bytes_per_sec" => self.noc_bytes_per_sec = num!(f64),
            "hbm_bytes_per_sec" => self.hbm_bytes_per_sec = num!(f64),
            "tu_enabled" => self.tu_enabled = num!(bool),
            "tu_count" => self.tu_count = num!(u64),
            "rf_pressure_width" => self.rf_pressure_width = num!(u64),
            "rf_fill_factor" => self.rf_fill_factor = num!(u64),
            "power_budget_w" => self.power_budget_w = num!(f64),
            "area_mm2" => self.area_mm2 = num!(f64),
            "energy.add_pj" => self.energy.add_pj = num!(f64),
            "energy.mult_pj" => self.energy.mult_pj = num!(f64),
            "energy.butterfly_pj" => self.energy.butterfly_pj = num!(f64),
            "energy.automorphism_pj" => self.energy.automorphism_pj = num!(f64),
            "energy.spm_pj_per_byte" => self.energy.spm_pj_per_byte = num!(f64),
            "energy.noc_pj_per_byte" => self.energy.noc_pj_per_byte = num!(f64),
            "energy.hbm_pj_per_byte" => self.energy.hbm_pj_per_byte = num!(f64),
            "energy.tu_move_pj" => self.energy.tu_move_pj = num!(f64),
            _ => {
                if let Some(width) = key.strip_prefix("freq.") {
                    let width = width.parse::<u64>().map_err(|_| bad_val(key, value))?;
                    let hz = num!(f64);
                    match self.freq_table.iter_mut().find(|e| e.width == width) {
                        Some(e) => e.hz = hz,
                        None => self.freq_table.push(FreqEntry { width, hz }),
                    }
                } else {
                    return Err(Error::Config(format!("unknown config key '{key}'")));
                }
            }
        }
        self.validate()
    }
}

/// Clock lookup for an adder width; errors when the table has no entry.
pub fn frequency_for_width(w_bits: u64, table: &[FreqEntry]) -> Result<f64, Error> {
    table
        .iter()
        .find(|e| e.width == w_bits)
        .map(|e| e.hz)
        .ok_or_else(|| Error::Config(format!("no frequency entry for width {w_bits}")))
}

/// Default electro-optical adder clocks: the published 512-bit point plus a
/// declared decay policy for the neighbors.
pub fn default_eo_freqs() -> Vec<FreqEntry> {
    vec![
        FreqEntry { width: 256, hz: 3.4e9 },
        FreqEntry { width: 512, hz: 3.0e9 },
        FreqEntry { width: 1024, hz: 2.0e9 },
    ]
}

/// Default CMOS adder clocks from the published accelerator configurations.
pub fn default_cmos_freqs() -> Vec<FreqEntry> {
    vec![
        FreqEntry { width: 32, hz: 1.0e9 },
        FreqEntry { width: 64, hz: 1.2e9 },
        FreqEntry { width: 512, hz: 0.8e9 },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_load_and_validate() {
        let cl = ArchConfig::preset("cryptolight").unwrap();
        assert_eq!(cl.w_bits, 512);
        assert_eq!(cl.cu_count, 2048);
        assert!(cl.tu_enabled);
        assert_eq!(cl.frequency().unwrap(), 3.0e9);

        let lake = ArchConfig::preset("lake32").unwrap();
        assert_eq!(lake.w_bits, 32);
        assert_eq!(lake.frequency().unwrap(), 1.0e9);
        assert_eq!(lake.spm_bytes, 256 * 1024 * 1024);
        assert!(!lake.tu_enabled);

        let bts = ArchConfig::preset("bts64").unwrap();
        assert_eq!(bts.frequency().unwrap(), 1.2e9);
        assert_eq!(bts.spm_bytes, 512 * 1024 * 1024);

        assert!(ArchConfig::preset("nope").is_err());
    }

    #[test]
    fn frequency_table_has_published_points() {
        let eo = default_eo_freqs();
        assert_eq!(frequency_for_width(512, &eo).unwrap(), 3.0e9);
        let cmos = default_cmos_freqs();
        assert_eq!(frequency_for_width(32, &cmos).unwrap(), 1.0e9);
        assert_eq!(frequency_for_width(64, &cmos).unwrap(), 1.2e9);
        assert_eq!(frequency_for_width(512, &cmos).unwrap(), 0.8e9);
        assert!(frequency_for_width(128, &cmos).is_err());
    }

    #[test]
    fn overrides_apply_and_reject_unknown() {
        let mut cl = ArchConfig::preset("cryptolight").unwrap();
        cl.apply_override("spm_bytes", "268435456").unwrap();
        assert_eq!(cl.spm_bytes, 256 * 1024 * 1024);
        cl.apply_override("w_bits", "256").unwrap();
        assert_eq!(cl.frequency().unwrap(), 3.4e9);
        cl.apply_override("energy.hbm_pj_per_byte", "10.0").unwrap();
        assert_eq!(cl.energy.hbm_pj_per_byte, 10.0);
        cl.apply_override("freq.128", "2.5e9").unwrap();
        assert_eq!(frequency_for_width(128, &cl.freq_table).unwrap(), 2.5e9);
        assert!(cl.apply_override("nonsense", "1").is_err());
        assert!(cl.apply_override("cu_count", "zero").is_err());
    }

    #[test]
    fn fill_cycles_penalizes_wide_datapaths() {
        let mut cl = ArchConfig::preset("cryptolight").unwrap();
        assert_eq!(cl.fill_cycles(), 512);
        cl.apply_override("w_bits", "1024").unwrap();
        assert_eq!(cl.fill_cycles(), 4096);
    }
}
