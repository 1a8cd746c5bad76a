//! Experiment configuration. Every section and key is optional and falls
//! back to the documented default; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{CodebookConfig, FeedbackConfig, FeedbackMode, PilotKind, RidgeConfig, Scheme};
use crate::geometry::{make_ula, ArrayGeometry, Point2D};
use crate::scene::{CoefficientModel, SceneConfig};
use crate::vom::VomConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrayConfig {
    pub num_elements: usize,
    pub carrier_freq: f64,
    /// Element spacing in wavelengths.
    pub spacing_wavelengths: f64,
    pub speed_of_light: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig {
            num_elements: 64,
            carrier_freq: 2.4e9,
            spacing_wavelengths: 0.5,
            speed_of_light: 3.0e8,
        }
    }
}

impl ArrayConfig {
    pub fn build(&self) -> Result<ArrayGeometry> {
        let lambda = self.speed_of_light / self.carrier_freq;
        make_ula(
            self.num_elements,
            self.carrier_freq,
            Some(self.spacing_wavelengths * lambda),
            self.speed_of_light,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UePlacement {
    #[default]
    Fixed,
    /// Fresh uniform draw over the ROI for every block.
    UniformRoi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UeConfig {
    pub placement: UePlacement,
    /// Used by the fixed placement.
    pub location: Point2D,
}

impl Default for UeConfig {
    fn default() -> Self {
        UeConfig {
            placement: UePlacement::Fixed,
            location: Point2D::new(0.0, 20.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnrConfig {
    /// Per pilot observation symbol.
    pub pilot_db: f64,
    /// Per receive antenna and echo symbol.
    pub echo_db: f64,
    /// `P E[||h||^2] / sigma^2` for data transmission.
    pub data_db: f64,
    /// Channel draws used to calibrate the noise levels.
    pub calibration_draws: usize,
    /// Pilot power per symbol.
    pub pilot_power: f64,
}

impl Default for SnrConfig {
    fn default() -> Self {
        SnrConfig {
            pilot_db: 5.0,
            echo_db: 40.0,
            data_db: 10.0,
            calibration_draws: 200,
            pilot_power: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubspaceConfig {
    pub eta: f64,
    pub rho_max: usize,
}

impl Default for SubspaceConfig {
    fn default() -> Self {
        SubspaceConfig { eta: 0.9, rho_max: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OmpConfig {
    pub sparsity: usize,
}

impl Default for OmpConfig {
    fn default() -> Self {
        OmpConfig { sparsity: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VomOnlyConfig {
    pub n_dyn_atoms: usize,
}

impl Default for VomOnlyConfig {
    fn default() -> Self {
        VomOnlyConfig { n_dyn_atoms: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PilotConfig {
    pub kind: PilotKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub trials: usize,
    pub block_length: usize,
    pub pilot_lengths: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub array: ArrayConfig,
    pub ue: UeConfig,
    pub scene: SceneConfig,
    pub coefficients: CoefficientModel,
    pub vom: VomConfig,
    pub snr: SnrConfig,
    pub subspace: SubspaceConfig,
    pub ridge: RidgeConfig,
    pub codebook: CodebookConfig,
    pub omp: OmpConfig,
    pub vom_only: VomOnlyConfig,
    pub pilots: PilotConfig,
    pub feedback: FeedbackConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            master_seed: 2024,
            trials: 200,
            block_length: 400,
            pilot_lengths: vec![8, 16, 24, 32, 48, 64, 96, 128],
            schemes: Scheme::ALL.to_vec(),
            array: ArrayConfig::default(),
            ue: UeConfig::default(),
            scene: SceneConfig::default(),
            coefficients: CoefficientModel::default(),
            vom: VomConfig::default(),
            snr: SnrConfig::default(),
            subspace: SubspaceConfig::default(),
            ridge: RidgeConfig::default(),
            codebook: CodebookConfig::default(),
            omp: OmpConfig::default(),
            vom_only: VomOnlyConfig::default(),
            pilots: PilotConfig::default(),
            feedback: FeedbackConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.pilot_lengths.is_empty() || self.schemes.is_empty() {
            return bad("pilot_lengths and schemes must be non-empty".into());
        }
        if let Some(&t) = self.pilot_lengths.iter().find(|&&t| t == 0 || t > self.block_length) {
            return bad(format!("pilot length {t} must lie in [1, block_length = {}]", self.block_length));
        }
        let mut seen = std::collections::HashSet::new();
        if !self.pilot_lengths.iter().all(|t| seen.insert(*t)) {
            return bad("pilot_lengths contains duplicates".into());
        }
        let mut seen = std::collections::HashSet::new();
        if !self.schemes.iter().all(|s| seen.insert(*s)) {
            return bad("schemes contains duplicates".into());
        }
        if !(self.subspace.eta > 0.0 && self.subspace.eta <= 1.0) || self.subspace.rho_max == 0 {
            return bad("subspace needs 0 < eta <= 1 and rho_max >= 1".into());
        }
        if self.snr.calibration_draws == 0 || !(self.snr.pilot_power > 0.0) {
            return bad("snr needs calibration_draws >= 1 and pilot_power > 0".into());
        }
        if self.omp.sparsity == 0 {
            return bad("omp sparsity must be at least 1".into());
        }
        if self.feedback.mode == FeedbackMode::ScalarQuantized {
            if let Some(&t) = self.pilot_lengths.iter().find(|&&t| self.feedback.bits_total < 2 * t) {
                return bad(format!("{} feedback bits are too few for T_p = {t}", self.feedback.bits_total));
            }
        }
        if self.pilots.kind == PilotKind::Orthogonal {
            if let Some(&t) = self.pilot_lengths.iter().find(|&&t| t < self.array.num_elements) {
                return bad(format!("orthogonal pilots need T_p >= N, got T_p = {t}"));
            }
        }
        self.vom.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.ridge.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}
