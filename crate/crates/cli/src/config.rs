//! Run configurations, loaded from TOML or JSON and overridden by flags.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use symflow_core::semiflat::{Potential, SemiflatConfig, SemiflatFlow};

use crate::CliError;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let is_json = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("symflow-out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub preset: String,
    pub weight: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Initial ansatz parameters; preset default when empty.
    #[serde(default)]
    pub init: Vec<f64>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
    /// Adaptive Dormand-Prince with this relative tolerance instead of RK4.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default = "one")]
    pub record_stride: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn one() -> usize {
    1
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            preset: "nilmanifold".into(),
            weight: "hitchin".into(),
            eps: None,
            init: Vec::new(),
            horizon: 10.0,
            dt: 1e-3,
            rtol: None,
            record_stride: 1,
            out: default_out(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbolConfig {
    pub weight: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub xi: [f64; 6],
    /// Base 3-form, e.g. `"0.5 e^{135} - 0.5 e^{146} - 0.5 e^{245} - 0.5 e^{236}"`;
    /// the adapted model form when absent. `ω` is always `e^{12}+e^{34}+e^{56}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

impl Default for SymbolConfig {
    fn default() -> Self {
        SymbolConfig {
            weight: "hitchin".into(),
            eps: None,
            xi: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            phi: None,
            out: default_out(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemiflatRunConfig {
    pub n: usize,
    pub flow: SemiflatFlow,
    pub dt: f64,
    pub steps: usize,
    #[serde(default)]
    pub potential: Potential,
    #[serde(default = "one")]
    pub residual_stride: usize,
    #[serde(default)]
    pub phase_rotated: bool,
    /// Grid sizes for a refinement study; a single run at `n` when empty.
    #[serde(default)]
    pub sweep: Vec<usize>,
    /// Minimum measured order for a sweep to pass.
    #[serde(default = "min_order")]
    pub min_order: f64,
    /// Maximum residual for a single run to pass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Write the final metric field as a binary dump.
    #[serde(default)]
    pub dump: bool,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn min_order() -> f64 {
    1.8
}

impl Default for SemiflatRunConfig {
    fn default() -> Self {
        let c = SemiflatConfig::default();
        SemiflatRunConfig {
            n: c.n,
            flow: c.flow,
            dt: c.dt,
            steps: c.steps,
            potential: c.potential,
            residual_stride: c.residual_stride,
            phase_rotated: c.phase_rotated,
            sweep: Vec::new(),
            min_order: min_order(),
            tolerance: None,
            dump: false,
            out: default_out(),
        }
    }
}

impl SemiflatRunConfig {
    pub fn core(&self) -> SemiflatConfig {
        SemiflatConfig {
            n: self.n,
            flow: self.flow,
            dt: self.dt,
            steps: self.steps,
            potential: self.potential.clone(),
            residual_stride: self.residual_stride,
            phase_rotated: self.phase_rotated,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Criteria to run; all when empty.
    #[serde(default)]
    pub only: Vec<u8>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { seed: symflow_core::verify::DEFAULT_SEED, only: Vec::new(), out: default_out() }
    }
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<T>().map_err(|_| CliError::Config(format!("cannot parse `{p}` in `{s}`"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_takes_defaults() {
        let c: FlowConfig = toml::from_str("preset = \"torus\"\nT = 2.0\n").unwrap();
        assert_eq!(c.preset, "torus");
        assert_eq!(c.horizon, 2.0);
        assert_eq!(c.dt, 1e-3);
        assert_eq!(c.record_stride, 1);
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(toml::from_str::<SymbolConfig>("wieght = \"hitchin\"").is_err());
        assert!(serde_json::from_str::<VerifyConfig>(r#"{"seed": 1, "extra": 0}"#).is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<usize>("16, 32,64").unwrap(), vec![16, 32, 64]);
        assert_eq!(parse_list::<f64>("-1,2.5").unwrap(), vec![-1.0, 2.5]);
        assert!(parse_list::<u8>("1,x").is_err());
    }

    #[test]
    fn semiflat_core_roundtrip() {
        let c = SemiflatRunConfig::default();
        let core = c.core();
        assert_eq!(core.n, c.n);
        assert_eq!(core.flow, c.flow);
    }
}
