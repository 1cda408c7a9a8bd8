//! JSON run configuration with unit-suffixed keys.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use spectrolimit_core::estimation::RegimeThresholds;
use spectrolimit_core::params::{
    mhz_to_angular, ChemicalState, LaserParams, LoPhotonPolicy, ModelParams, MoleculeParams,
    SampleParams, ThicknessPolicy, CODATA,
};

use crate::error::CliError;

pub const DEFAULT_CONFIG: &str = include_str!("../config/default.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaserConfig {
    pub power_w: f64,
    pub wavelength_nm: f64,
    pub beam_diameter_cm: f64,
    pub measurement_time_s: f64,
}

impl Default for LaserConfig {
    fn default() -> Self {
        LaserConfig {
            power_w: 1e-3,
            wavelength_nm: 500.0,
            beam_diameter_cm: 0.5,
            measurement_time_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoleculeConfig {
    pub dipole_a_debye: f64,
    pub dipole_b_debye: f64,
    pub detuning_a_mhz: f64,
    pub detuning_b_mhz: f64,
    pub gamma_mhz: f64,
    /// B → A
    pub rate_a_mhz: f64,
    /// A → B
    pub rate_b_mhz: f64,
}

impl Default for MoleculeConfig {
    fn default() -> Self {
        MoleculeConfig {
            dipole_a_debye: 1.0,
            dipole_b_debye: 0.0,
            detuning_a_mhz: 40.0,
            detuning_b_mhz: 0.0,
            gamma_mhz: 10.0,
            rate_a_mhz: 1e-4,
            rate_b_mhz: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub density_per_m3: f64,
    /// Absent or null means z_opt.
    pub thickness_m: Option<f64>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            density_per_m3: 1e17,
            thickness_m: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimeConfig {
    pub delta: f64,
    pub theta: f64,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        let t = RegimeThresholds::default();
        RegimeConfig {
            delta: t.delta,
            theta: t.theta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub laser: LaserConfig,
    pub molecule: MoleculeConfig,
    pub sample: SampleConfig,
    pub regime: RegimeConfig,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies `key=value` with a dotted key such as `molecule.rate_a_mhz`.
    /// The value is parsed as JSON, falling back to a plain string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not key=value")))?;
        let value: Value =
            serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().into()));
        let mut tree = serde_json::to_value(&*self).expect("config serializes");
        let mut node = &mut tree;
        let parts: Vec<&str> = key.trim().split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let map = node
                .as_object_mut()
                .ok_or_else(|| CliError::Config(format!("`{key}` does not name a field")))?;
            if !map.contains_key(*part) {
                return Err(CliError::Config(format!("unknown config key `{key}`")));
            }
            if i + 1 == parts.len() {
                map.insert((*part).to_string(), value);
                break;
            }
            node = map.get_mut(*part).expect("checked above");
        }
        *self = serde_json::from_value(tree)
            .map_err(|e| CliError::Config(format!("override `{assignment}`: {e}")))?;
        Ok(())
    }

    pub fn thresholds(&self) -> RegimeThresholds {
        RegimeThresholds {
            delta: self.regime.delta,
            theta: self.regime.theta,
        }
    }

    pub fn to_params(&self) -> ModelParams {
        let l = &self.laser;
        let m = &self.molecule;
        ModelParams {
            laser: LaserParams {
                power: l.power_w,
                wavelength: l.wavelength_nm * 1e-9,
                beam_diameter: l.beam_diameter_cm * 1e-2,
                measurement_time: l.measurement_time_s,
                lo_photon_policy: LoPhotonPolicy::MatchProbe,
            },
            molecule: MoleculeParams {
                state_a: ChemicalState {
                    dipole: m.dipole_a_debye * CODATA.debye,
                    detuning: mhz_to_angular(m.detuning_a_mhz),
                },
                state_b: ChemicalState {
                    dipole: m.dipole_b_debye * CODATA.debye,
                    detuning: mhz_to_angular(m.detuning_b_mhz),
                },
                decay_gamma: mhz_to_angular(m.gamma_mhz),
                rate_a: mhz_to_angular(m.rate_a_mhz),
                rate_b: mhz_to_angular(m.rate_b_mhz),
            },
            sample: SampleParams {
                density: self.sample.density_per_m3,
                thickness: match self.sample.thickness_m {
                    Some(z) => ThicknessPolicy::Fixed(z),
                    None => ThicknessPolicy::Optimal,
                },
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_file_matches_builtin_defaults() {
        assert_eq!(
            Config::from_json(DEFAULT_CONFIG).unwrap(),
            Config::default()
        );
    }

    #[test]
    fn defaults_reproduce_reference_parameters() {
        let p = Config::default().to_params();
        let r = ModelParams::reference();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1e-300);
        assert!(close(p.laser.wavelength, r.laser.wavelength));
        assert!(close(p.laser.beam_diameter, r.laser.beam_diameter));
        assert!(close(
            p.molecule.state_a.detuning,
            r.molecule.state_a.detuning
        ));
        assert!(close(p.molecule.rate_a, r.molecule.rate_a));
        assert_eq!(p.sample.thickness, ThicknessPolicy::Optimal);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::from_json(r#"{"laser": {"power_mw": 1}}"#).is_err());
        let mut c = Config::default();
        assert!(c.apply_override("molecule.rate_mhz=1").is_err());
        assert!(c.apply_override("molecule=1").is_err());
        assert!(c.apply_override("no_equals").is_err());
    }

    #[test]
    fn overrides_are_typed() {
        let mut c = Config::default();
        c.apply_override("molecule.rate_b_mhz=2.5e-3").unwrap();
        c.apply_override("sample.thickness_m=0.01").unwrap();
        assert_eq!(c.molecule.rate_b_mhz, 2.5e-3);
        assert_eq!(c.sample.thickness_m, Some(0.01));
        assert!(c.apply_override("laser.power_w=bright").is_err());
        c.apply_override("sample.thickness_m=null").unwrap();
        assert_eq!(c.sample.thickness_m, None);
    }
}
