//! `fit.json` and `truth.json`.

use netinfer_core::optimizer::{FitOptions, FitResult};
use netinfer_core::{ModelSpec, Theta};
use serde::{Deserialize, Serialize};

use crate::config::{FamilyConfig, ModelChoice};
use crate::data::DataDigest;
use crate::error::{invalid, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

/// Parameters that generated a simulated data directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub version: String,
    pub model: ModelChoice,
    pub family: FamilyConfig,
    pub n_units: usize,
    pub seed: u64,
    pub config_hash: String,
    pub mean_degree: f64,
    pub parameters: Vec<NamedValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    pub initial_loglik: f64,
    pub final_loglik: f64,
    pub grad_inf_norm: f64,
    pub ridge_used: bool,
}

/// Settings and provenance of the Godambe standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Uncertainty {
    pub method: String,
    pub draws: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub level: f64,
    pub ridge: Option<f64>,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitArtifact {
    pub version: String,
    pub model: ModelChoice,
    pub family: FamilyConfig,
    pub n_units: usize,
    pub config_hash: String,
    /// Seed of the last randomized step applied to the artifact; fitting
    /// itself uses none.
    pub seed: Option<u64>,
    pub data_dir: String,
    pub data: DataDigest,
    pub options: FitOptions,
    pub convergence: Convergence,
    pub parameters: Vec<Estimate>,
    pub uncertainty: Option<Uncertainty>,
}

impl FitArtifact {
    pub fn new(
        model: ModelChoice,
        spec: &ModelSpec,
        data_dir: String,
        data: DataDigest,
        options: FitOptions,
        config_hash: String,
        fit: &FitResult,
    ) -> Self {
        let parameters = spec
            .param_names()
            .into_iter()
            .zip(fit.theta_hat.values())
            .map(|(name, &estimate)| Estimate { name, estimate, se: None, ci_lo: None, ci_hi: None })
            .collect();
        Self {
            version: VERSION.into(),
            model,
            family: FamilyConfig::from_family(spec.family()),
            n_units: spec.n_units(),
            config_hash,
            seed: None,
            data_dir,
            data,
            options,
            convergence: Convergence {
                converged: fit.converged,
                iterations: fit.iterations,
                initial_loglik: fit.initial_loglik,
                final_loglik: fit.final_loglik,
                grad_inf_norm: fit.final_grad_inf_norm,
                ridge_used: fit.ridge_used,
            },
            parameters,
            uncertainty: None,
        }
    }

    pub fn spec(&self) -> CliResult<ModelSpec> {
        self.model.spec(self.n_units, self.family.family()?)
    }

    pub fn theta(&self, spec: &ModelSpec) -> CliResult<Theta> {
        let names = spec.param_names();
        if names.len() != self.parameters.len() || names.iter().zip(&self.parameters).any(|(a, b)| *a != b.name) {
            return Err(invalid("fit artifact: parameter names do not match the model"));
        }
        Ok(Theta::new(self.parameters.iter().map(|p| p.estimate).collect(), spec.n_nuisance())?)
    }

    /// Estimate of a named parameter.
    pub fn get(&self, name: &str) -> Option<&Estimate> {
        self.parameters.iter().find(|p| p.name == name)
    }
}
