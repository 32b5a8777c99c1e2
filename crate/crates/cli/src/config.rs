//! Run configuration: a schema-versioned TOML document with one section per
//! model plus presets.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use selfrepel_core::model::{RateFunction, RateParams};
use selfrepel_core::polymer::{PolymerConfig, PolymerInit};
use selfrepel_core::presets::{gaussian_mode, gaussian_mode_normalized, simple_walk, srbp_gauss_d3};
use selfrepel_core::spectral::DEFAULT_LADDER;
use selfrepel_core::walk::{EventSampler, InitMode, WalkConfig};

use crate::error::{CliError, CliResult};

pub const CONFIG_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Tsaw,
    Srbp,
    Spectral,
    Fock,
    Field,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub model: ModelKind,
    /// Master seed; replica `i` uses `derive_seed(seed, i)`.
    pub seed: u64,
    pub replicas: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub estimators: Estimators,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walk: Option<WalkConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polymer: Option<PolymerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fock: Option<FockSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Estimators {
    /// Fraction of the horizon discarded before fitting diffusivities.
    pub burn_in: f64,
}

impl Default for Estimators {
    fn default() -> Self {
        Estimators { burn_in: 0.2 }
    }
}

/// Either a named family (`gaussian-mode`, `simple-walk`) with its
/// parameters or explicit coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSection {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s4: Option<f64>,
    /// Shift the even part so that `inf w = gamma`.
    #[serde(default)]
    pub normalize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<RateParams>,
}

impl RateSection {
    pub fn gaussian(gamma: f64, s4: f64, normalize: bool) -> Self {
        RateSection {
            family: "gaussian-mode".into(),
            gamma: Some(gamma),
            s4: Some(s4),
            normalize,
            custom: None,
        }
    }

    pub fn resolve(&self) -> CliResult<RateFunction> {
        let gamma = self.gamma.unwrap_or(1.0);
        let rf = match self.family.as_str() {
            "gaussian-mode" => {
                let s4 = self.s4.unwrap_or(0.25);
                if self.normalize {
                    gaussian_mode_normalized(gamma, s4)?
                } else {
                    gaussian_mode(gamma, s4)?
                }
            }
            "simple-walk" => simple_walk(gamma)?,
            "custom" => {
                let p = self
                    .custom
                    .clone()
                    .ok_or_else(|| CliError::Config("rate family `custom` needs a [rate.custom] table".into()))?;
                RateFunction::new(p)?
            }
            other => return Err(CliError::Config(format!("unknown rate family `{other}`"))),
        };
        Ok(rf)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSection {
    pub d: usize,
    pub ladder: Vec<usize>,
}

impl Default for SpectralSection {
    fn default() -> Self {
        SpectralSection {
            d: 3,
            ladder: DEFAULT_LADDER.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockSection {
    pub d: usize,
    /// Momenta per axis of the lattice grid.
    pub side: usize,
    pub theta: f64,
    pub n_max: usize,
    /// Degrees scanned for block norms (empty: skip the scan).
    #[serde(default)]
    pub degrees: Vec<usize>,
    /// Spectral parameters of the resolvent schedule (empty: skip).
    #[serde(default)]
    pub lambdas: Vec<f64>,
}

impl Default for FockSection {
    fn default() -> Self {
        FockSection {
            d: 3,
            side: 4,
            theta: 0.5,
            n_max: 3,
            degrees: vec![0, 1, 2],
            lambdas: vec![1.0, 0.3, 0.1, 0.03, 0.01],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSampler {
    /// FFT sampler of the lattice free field.
    Gaussian,
    /// Metropolis chain of the gradient Gibbs measure of the rate function.
    Gibbs,
    /// Continuum field of the polymer potential.
    Continuum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub sampler: FieldSampler,
    pub d: usize,
    /// Lattice side or continuum grid nodes per axis.
    pub l: usize,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_len: Option<f64>,
}

fn default_theta() -> f64 {
    1.0
}

impl RunConfig {
    fn base(model: ModelKind) -> Self {
        RunConfig {
            schema_version: CONFIG_SCHEMA,
            model,
            seed: 1,
            replicas: 1,
            output: None,
            estimators: Estimators::default(),
            rate: None,
            walk: None,
            polymer: None,
            spectral: None,
            fock: None,
            field: None,
        }
    }

    pub fn tsaw(d: usize, l: usize, horizon: f64, rate: RateSection, init: InitMode) -> Self {
        let mut c = Self::base(ModelKind::Tsaw);
        c.rate = Some(rate);
        c.walk = Some(WalkConfig {
            d,
            l,
            horizon,
            record_dt: (horizon / 200.0).max(0.5),
            init,
            sampler: EventSampler::Inversion,
            keep_log: true,
            frozen: false,
        });
        c
    }

    pub fn preset(name: &str) -> CliResult<Self> {
        let mut c = match name {
            "gaussian-d3" => Self::tsaw(3, 32, 200.0, RateSection::gaussian(1.0, 0.25, false), InitMode::Stationary),
            "simple-walk" => {
                let mut rate = RateSection::gaussian(1.0, 0.25, false);
                rate.family = "simple-walk".into();
                rate.s4 = None;
                Self::tsaw(3, 32, 200.0, rate, InitMode::Empty)
            }
            "d1-explore" => Self::tsaw(1, 4096, 2000.0, RateSection::gaussian(1.0, 0.25, false), InitMode::Empty),
            "srbp-gauss-d3" => {
                let mut c = Self::base(ModelKind::Srbp);
                c.polymer = Some(PolymerConfig {
                    potential: srbp_gauss_d3(),
                    dt: 0.01,
                    horizon: 50.0,
                    record_dt: 0.5,
                    init: PolymerInit::Stationary,
                    box_len: 24.0,
                    grid: 96,
                    no_interaction: false,
                });
                c
            }
            other => return Err(CliError::Config(format!("unknown preset `{other}`"))),
        };
        c.replicas = 400;
        Ok(c)
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.schema_version != CONFIG_SCHEMA {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {CONFIG_SCHEMA})",
                self.schema_version
            )));
        }
        if !(0.0..1.0).contains(&self.estimators.burn_in) {
            return Err(CliError::Config("estimators.burn_in must lie in [0, 1)".into()));
        }
        let need = |present: bool, section: &str| {
            if present {
                Ok(())
            } else {
                Err(CliError::Config(format!("model needs a [{section}] section")))
            }
        };
        match self.model {
            ModelKind::Tsaw => {
                need(self.walk.is_some(), "walk")?;
                need(self.rate.is_some(), "rate")?;
                self.walk.as_ref().unwrap().validate()?;
                self.rate.as_ref().unwrap().resolve()?;
            }
            ModelKind::Srbp => {
                need(self.polymer.is_some(), "polymer")?;
                self.polymer.as_ref().unwrap().validate()?;
            }
            ModelKind::Fock => {
                need(self.rate.is_some(), "rate")?;
                self.rate.as_ref().unwrap().resolve()?;
            }
            ModelKind::Field => need(self.field.is_some(), "field")?,
            ModelKind::Spectral => {}
        }
        if matches!(self.model, ModelKind::Tsaw | ModelKind::Srbp) && self.replicas == 0 {
            return Err(CliError::Config("replicas must be positive".into()));
        }
        Ok(())
    }
}
