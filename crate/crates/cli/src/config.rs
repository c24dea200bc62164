//! Command configuration files and the shared model/family choices.

use clap::ValueEnum;
use netinfer_core::study::CovariateLaw;
use netinfer_core::{FamilyKind, ModelKind, ModelSpec, ResponseFamily};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelChoice {
    UndirectedExample,
    DirectedApplication,
}

impl ModelChoice {
    pub fn kind(self) -> ModelKind {
        match self {
            ModelChoice::UndirectedExample => ModelKind::UndirectedExample,
            ModelChoice::DirectedApplication => ModelKind::DirectedApplication,
        }
    }

    pub fn from_kind(kind: ModelKind) -> CliResult<Self> {
        match kind {
            ModelKind::UndirectedExample => Ok(ModelChoice::UndirectedExample),
            ModelKind::DirectedApplication => Ok(ModelChoice::DirectedApplication),
            ModelKind::Custom => Err(invalid("custom models are not available from the command line")),
        }
    }

    pub fn is_directed(self) -> bool {
        self == ModelChoice::DirectedApplication
    }

    pub fn spec(self, n: usize, family: ResponseFamily) -> CliResult<ModelSpec> {
        Ok(match self {
            ModelChoice::UndirectedExample => ModelSpec::undirected_example(n, family)?,
            ModelChoice::DirectedApplication => ModelSpec::directed_application(n, family)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyChoice {
    Bernoulli,
    Poisson,
    Gaussian,
}

/// Response family as written in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub kind: FamilyChoice,
    #[serde(default = "one")]
    pub psi: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self { kind: FamilyChoice::Bernoulli, psi: 1.0 }
    }
}

impl FamilyConfig {
    pub fn family(&self) -> CliResult<ResponseFamily> {
        let kind = match self.kind {
            FamilyChoice::Bernoulli => FamilyKind::Bernoulli,
            FamilyChoice::Poisson => FamilyKind::Poisson,
            FamilyChoice::Gaussian => FamilyKind::Gaussian,
        };
        ResponseFamily::new(kind, self.psi).map_err(|e| invalid(format!("family.psi: {e}")))
    }

    pub fn from_family(f: ResponseFamily) -> Self {
        let kind = match f.kind() {
            FamilyKind::Bernoulli => FamilyChoice::Bernoulli,
            FamilyKind::Poisson => FamilyChoice::Poisson,
            FamilyKind::Gaussian => FamilyChoice::Gaussian,
        };
        Self { kind, psi: f.psi() }
    }
}

/// Configuration of `simulate`. Neighborhoods follow the overlapping
/// 50-unit subpopulation layout, so `n` must be a multiple of 25.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub model: ModelChoice,
    pub n: usize,
    #[serde(default)]
    pub family: FamilyConfig,
    #[serde(default = "default_nuisance_mean")]
    pub nuisance_mean: f64,
    #[serde(default = "default_nuisance_sd")]
    pub nuisance_sd: f64,
    /// Interest parameters in model order. Defaults exist for the undirected
    /// example only.
    #[serde(default)]
    pub interest: Option<Vec<f64>>,
    /// Law of the covariate of the undirected example. The directed model
    /// always draws a binary treatment and three three-level attributes.
    #[serde(default = "default_covariates")]
    pub covariates: CovariateLaw,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

fn default_nuisance_mean() -> f64 {
    -1.4
}
fn default_nuisance_sd() -> f64 {
    0.2
}
fn default_covariates() -> CovariateLaw {
    CovariateLaw::Uniform
}
fn default_burn_in() -> usize {
    1000
}

pub const UNDIRECTED_INTEREST: [f64; 6] = [0.3, -2.0, 2.0, 0.2, 0.1, 0.1];

impl SimulateConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.n < 50 || self.n % 25 != 0 {
            return Err(invalid(format!("config field `n`: {} is not a multiple of 25 of at least 50", self.n)));
        }
        if !self.nuisance_mean.is_finite() {
            return Err(invalid("config field `nuisance_mean`: must be finite"));
        }
        if !(self.nuisance_sd.is_finite() && self.nuisance_sd >= 0.0) {
            return Err(invalid("config field `nuisance_sd`: must be finite and non-negative"));
        }
        self.family.family().map_err(|e| e.context("config"))?;
        if let CovariateLaw::Bernoulli { p } = self.covariates {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("config field `covariates.p`: {p} is outside [0, 1]")));
            }
        }
        let want = self.spec()?.n_interest();
        match &self.interest {
            None if self.model == ModelChoice::DirectedApplication => {
                Err(invalid(format!("config field `interest`: the directed model needs {want} values")))
            }
            Some(v) if v.len() != want => {
                Err(invalid(format!("config field `interest`: expected {want} values, got {}", v.len())))
            }
            Some(v) if !v.iter().all(|x| x.is_finite()) => Err(invalid("config field `interest`: values must be finite")),
            _ => Ok(()),
        }
    }

    pub fn spec(&self) -> CliResult<ModelSpec> {
        self.model.spec(self.n, self.family.family()?)
    }

    pub fn interest(&self) -> Vec<f64> {
        self.interest.clone().unwrap_or_else(|| UNDIRECTED_INTEREST.to_vec())
    }
}

/// Hex SHA-256 of the compact JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("configuration serializes");
    hex::encode(Sha256::digest(&bytes))
}
