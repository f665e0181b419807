//! TOML run configuration. Every key has a built-in default (the Table-IV
//! style device values), so all commands run with no config file at all;
//! unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::experiments::{McbConfig, RabiefConfig, ResetMode};
use crate::sim::DeviceParams;
use crate::Result;

/// Full run configuration: one section per module.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub device: DeviceSection,
    pub rabief: RabiefSection,
    pub mcb: McbSection,
    pub mitigation: MitigationSection,
    pub pec: PecSection,
}

impl Config {
    pub fn from_str(text: &str) -> Result<Self> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.device.to_params()?;
        self.rabief.validate()?;
        self.mcb.validate()?;
        self.mitigation.validate()?;
        self.pec.validate()?;
        Ok(())
    }
}

/// Device parameters in the units they are usually quoted in (mK, µs, ns,
/// GHz); converted to SI on load. The assignment matrix is 9 probabilities
/// row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceSection {
    #[serde(rename = "t_eff_mK")]
    pub t_eff_mk: f64,
    pub t1_us: f64,
    pub t2_us: f64,
    pub t1_12_us: f64,
    pub t2_12_us: f64,
    pub omega01_ghz: f64,
    pub delta_ghz: f64,
    pub t_rep_delay_us: f64,
    pub t_meas_ns: f64,
    pub p_leak: f64,
    pub assignment: Vec<f64>,
}

impl Default for DeviceSection {
    fn default() -> Self {
        DeviceSection {
            t_eff_mk: 60.0,
            t1_us: 200.0,
            t2_us: 100.0,
            t1_12_us: 100.0,
            t2_12_us: 50.0,
            omega01_ghz: 4.9,
            delta_ghz: -0.3,
            t_rep_delay_us: 250.0,
            t_meas_ns: 1244.0,
            p_leak: 0.002,
            assignment: vec![0.991, 0.009, 0.0, 0.009, 0.931, 0.06, 0.0, 0.06, 0.94],
        }
    }
}

impl DeviceSection {
    pub fn to_params(&self) -> Result<DeviceParams> {
        if self.assignment.len() != 9 {
            return Err(Error::Config(format!(
                "assignment must hold 9 numbers row-major, got {}",
                self.assignment.len()
            )));
        }
        let mut r = [[0.0; 3]; 3];
        for j in 0..3 {
            for k in 0..3 {
                r[j][k] = self.assignment[3 * j + k];
            }
        }
        let params = DeviceParams {
            t_eff: self.t_eff_mk / 1e3,
            t1: self.t1_us / 1e6,
            t2: self.t2_us / 1e6,
            t1_12: self.t1_12_us / 1e6,
            t2_12: self.t2_12_us / 1e6,
            omega01: self.omega01_ghz * 1e9,
            delta: self.delta_ghz * 1e9,
            t_rep_delay: self.t_rep_delay_us / 1e6,
            t_meas: self.t_meas_ns / 1e9,
            p_leak: self.p_leak,
            r,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RabiefSection {
    pub shots: usize,
    pub n_angles: usize,
    pub angle_max: f64,
}

impl Default for RabiefSection {
    fn default() -> Self {
        RabiefSection { shots: 1000, n_angles: 40, angle_max: 4.0 * std::f64::consts::PI }
    }
}

impl RabiefSection {
    pub fn angles(&self) -> Vec<f64> {
        (0..self.n_angles)
            .map(|k| self.angle_max * k as f64 / (self.n_angles - 1).max(1) as f64)
            .collect()
    }

    pub fn to_config(&self, reset_mode: ResetMode) -> RabiefConfig {
        RabiefConfig { angles: self.angles(), shots: self.shots, reset_mode }
    }

    fn validate(&self) -> Result<()> {
        if self.shots == 0 || self.n_angles < 4 {
            return Err(Error::Config(
                "rabief needs at least 1 shot and 4 angles".into(),
            ));
        }
        if !(self.angle_max > 0.0) {
            return Err(Error::Config("rabief angle_max must be positive".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McbSection {
    pub depths: Vec<usize>,
    pub randomizations: usize,
    pub shots: usize,
}

impl Default for McbSection {
    fn default() -> Self {
        McbSection { depths: vec![0, 1, 2, 5, 8], randomizations: 256, shots: 128 }
    }
}

impl McbSection {
    pub fn to_config(&self) -> McbConfig {
        McbConfig {
            depths: self.depths.clone(),
            randomizations: self.randomizations,
            shots: self.shots,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.depths.is_empty() || self.randomizations == 0 || self.shots == 0 {
            return Err(Error::Config(
                "mcb needs non-empty depths and positive randomizations/shots".into(),
            ));
        }
        if !self.depths.contains(&0) {
            return Err(Error::Config(
                "mcb depths must include 0 to anchor the decay fits".into(),
            ));
        }
        Ok(())
    }
}

/// GHZ mitigation settings. The per-size randomization count is `8·n²`;
/// only the shot counts and the ⟨Z*⟩ reference schedule are configurable.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MitigationSection {
    pub sizes: Vec<usize>,
    pub shots: usize,
    pub zstar_randomizations: usize,
    pub zstar_shots: usize,
    pub two_layer: bool,
}

impl Default for MitigationSection {
    fn default() -> Self {
        MitigationSection {
            sizes: vec![2, 4, 6, 8, 10],
            shots: 128,
            zstar_randomizations: 16,
            zstar_shots: 5000,
            two_layer: false,
        }
    }
}

impl MitigationSection {
    fn validate(&self) -> Result<()> {
        for &n in &self.sizes {
            if !(2..=10).contains(&n) {
                return Err(Error::Config(format!(
                    "mitigation size {n} outside [2, 10]"
                )));
            }
            if self.two_layer && n % 2 != 0 {
                return Err(Error::Config(format!(
                    "two-layer layout needs even sizes, got {n}"
                )));
            }
        }
        if self.sizes.is_empty()
            || self.shots == 0
            || self.zstar_randomizations == 0
            || self.zstar_shots == 0
        {
            return Err(Error::Config("mitigation counts must be positive".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PecSection {
    pub n_thetas: usize,
    pub pool: usize,
    pub shots: usize,
    pub resamples: usize,
    pub resample_size: usize,
}

impl Default for PecSection {
    fn default() -> Self {
        PecSection { n_thetas: 15, pool: 1000, shots: 100, resamples: 300, resample_size: 128 }
    }
}

impl PecSection {
    pub fn thetas(&self) -> Vec<f64> {
        // Interior grid on (0, π): endpoints are trivial teleportations.
        (1..=self.n_thetas)
            .map(|k| std::f64::consts::PI * k as f64 / (self.n_thetas + 1) as f64)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.n_thetas == 0
            || self.pool == 0
            || self.shots == 0
            || self.resamples == 0
            || self.resample_size == 0
        {
            return Err(Error::Config("pec counts must be positive".to_string()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_to_device_params() {
        let cfg = Config::default();
        cfg.validate().unwrap();
        let params = cfg.device.to_params().unwrap();
        assert_eq!(params, DeviceParams::default());
    }

    #[test]
    fn empty_file_is_all_defaults() {
        let cfg = Config::from_str("").unwrap();
        assert_eq!(cfg.rabief.shots, 1000);
        assert_eq!(cfg.mcb.depths, vec![0, 1, 2, 5, 8]);
        assert_eq!(cfg.pec.n_thetas, 15);
    }

    #[test]
    fn section_overrides_apply() {
        let cfg = Config::from_str(
            "[device]\nt_eff_mK = 80.0\n\n[rabief]\nshots = 50\nn_angles = 10\n",
        )
        .unwrap();
        let params = cfg.device.to_params().unwrap();
        assert!((params.t_eff - 0.080).abs() < 1e-12);
        assert_eq!(cfg.rabief.shots, 50);
        assert_eq!(cfg.rabief.angles().len(), 10);
        // Untouched sections keep defaults.
        assert!((params.t1 - 200e-6).abs() < 1e-18);
        assert_eq!(cfg.mcb.randomizations, 256);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::from_str("[device]\nt1_usec = 100.0\n").is_err());
        assert!(Config::from_str("[typo_section]\nx = 1\n").is_err());
        assert!(Config::from_str("stray = true\n").is_err());
    }

    #[test]
    fn malformed_values_rejected() {
        assert!(Config::from_str("[device]\nt1_us = -5.0\n").is_err());
        assert!(Config::from_str("[device]\nassignment = [1.0, 0.0]\n").is_err());
        assert!(Config::from_str("[mcb]\ndepths = [1, 2]\n").is_err());
        assert!(Config::from_str("[mitigation]\nsizes = [12]\n").is_err());
    }

    #[test]
    fn angle_and_theta_grids() {
        let cfg = Config::default();
        let angles = cfg.rabief.angles();
        assert_eq!(angles.len(), 40);
        assert_eq!(angles[0], 0.0);
        assert!((angles[39] - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        let thetas = cfg.pec.thetas();
        assert_eq!(thetas.len(), 15);
        assert!(thetas[0] > 0.0 && thetas[14] < std::f64::consts::PI);
    }
}
