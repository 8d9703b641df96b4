use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fixed_point::FixedPointConfig;
use crate::quadrature::QuadConfig;
use crate::sim::{InitialState, SimConfig};
use crate::system::SystemSpec;

/// Simulation settings plus the initial state, flattened into one section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    pub zero_refine_tol: f64,
    pub tail_fraction: f64,
    pub osc_min_zeros: usize,
    pub proper_eps: f64,
    pub max_steps: usize,
    pub t0: f64,
    pub x1_derivs: Vec<f64>,
    pub x2_derivs: Vec<f64>,
}

impl Default for SimSection {
    fn default() -> Self {
        Self::from_parts(
            &SimConfig::default(),
            &InitialState::new(0.0, vec![1.0, 0.0], vec![1.0, 0.0]),
        )
    }
}

impl SimSection {
    pub fn from_parts(cfg: &SimConfig, init: &InitialState) -> Self {
        Self {
            t_end: cfg.t_end,
            rtol: cfg.rtol,
            atol: cfg.atol,
            zero_refine_tol: cfg.zero_refine_tol,
            tail_fraction: cfg.tail_fraction,
            osc_min_zeros: cfg.osc_min_zeros,
            proper_eps: cfg.proper_eps,
            max_steps: cfg.max_steps,
            t0: init.t0,
            x1_derivs: init.x1_derivs.clone(),
            x2_derivs: init.x2_derivs.clone(),
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            t_end: self.t_end,
            rtol: self.rtol,
            atol: self.atol,
            zero_refine_tol: self.zero_refine_tol,
            tail_fraction: self.tail_fraction,
            osc_min_zeros: self.osc_min_zeros,
            proper_eps: self.proper_eps,
            max_steps: self.max_steps,
        }
    }

    pub fn initial_state(&self) -> InitialState {
        InitialState::new(self.t0, self.x1_derivs.clone(), self.x2_derivs.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub csv: Option<PathBuf>,
    pub format: ReportFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub quad: QuadConfig,
    pub sim: SimSection,
    pub fixed_point: FixedPointConfig,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: SystemSpec::example_case_1(),
            quad: QuadConfig::default(),
            sim: SimSection::default(),
            fixed_point: FixedPointConfig::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.system
            .check_structure()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.quad
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
