//! JSON configuration documents, one per command.

use std::path::Path;

use povm_forge_core::applications::HermiteGaussianBasis;
use povm_forge_core::detector::{DetectorConfig, FilterDescriptor};
use povm_forge_core::inverse::TargetDescriptor;
use povm_forge_core::uncertainty::TfOptions;
use povm_forge_core::{PolynomialDrive, PolynomialFamily};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::error::CliError;

fn default_points() -> usize {
    4097
}

fn default_prior_nodes() -> usize {
    257
}

fn default_pad() -> usize {
    1
}

/// Polynomial drive sweep over orders.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardConfig {
    pub family: PolynomialFamily,
    pub orders: Vec<u32>,
    pub sigma: f64,
    /// Defaults to `0.2/sigma` (two-sided) or `1/sigma` (one-sided).
    #[serde(default)]
    pub kappa0: Option<f64>,
    /// Two-sided turn-on time; defaults to `t_detect - 2.5 sigma`.
    #[serde(default)]
    pub t_on: Option<f64>,
    #[serde(default)]
    pub t_detect: f64,
    #[serde(default = "default_points")]
    pub n_points: usize,
}

impl ForwardConfig {
    pub fn drive(&self, order: u32) -> PolynomialDrive {
        let mut desc = PolynomialDrive::standard(self.family, order, self.sigma);
        if let Some(k) = self.kappa0 {
            desc.kappa0 = k;
        }
        desc.t_detect = self.t_detect;
        desc.t_on = match self.family {
            PolynomialFamily::TwoSided => {
                Some(self.t_on.unwrap_or(self.t_detect - 2.5 * self.sigma))
            }
            PolynomialFamily::OneSided => self.t_on,
        };
        desc
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvertConfig {
    pub target: TargetDescriptor,
}

/// One mode for the uncertainty table: either a polynomial drive or a
/// target to invert.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub label: String,
    #[serde(default)]
    pub drive: Option<PolynomialDrive>,
    #[serde(default)]
    pub n_points: Option<usize>,
    #[serde(default)]
    pub target: Option<TargetDescriptor>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyConfig {
    pub modes: Vec<ModeSpec>,
    #[serde(default)]
    pub options: Option<TfOptions>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeMatchConfig {
    pub target: TargetDescriptor,
    pub filter: FilterDescriptor,
    pub detector: DetectorConfig,
    /// Zero padding of the target spectrum.
    #[serde(default = "default_pad")]
    pub pad_factor: usize,
}

/// Lattice of detector parameters, plus an optional mode-matching run.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmConfig {
    pub eta: Vec<f64>,
    pub gain: Vec<u32>,
    pub k_min: Vec<u32>,
    pub nbar: Vec<f64>,
    pub nbar_reflected: Vec<f64>,
    pub beta2: Vec<f64>,
    #[serde(default)]
    pub renormalized_posterior: bool,
    #[serde(default)]
    pub mode_match: Option<ModeMatchConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JitterConfig {
    pub sigma: f64,
    /// Jitter widths in units of `sigma`.
    pub ratios: Vec<f64>,
    #[serde(default = "default_prior_nodes")]
    pub prior_nodes: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperresConfig {
    pub epsilon: f64,
    pub eta: f64,
    pub basis: HermiteGaussianBasis,
    pub n_trials: u64,
    /// Overridden by `--seed`.
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Raw text of a config file, kept for the manifest.
pub struct RawConfig {
    pub path: String,
    pub text: String,
    pub value: Value,
}

impl RawConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let path = path.display().to_string();
        let value = serde_json::from_str(&text).map_err(|e| CliError::Config {
            path: path.clone(),
            message: e.to_string(),
        })?;
        Ok(Self { path, text, value })
    }

    pub fn parse<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_json::from_str(&self.text).map_err(|e| CliError::Config {
            path: self.path.clone(),
            message: e.to_string(),
        })
    }
}
