//! Replicated simulate-and-fit studies on the undirected example model with
//! overlapping-subpopulation neighborhoods.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{confidence_intervals, godambe_cov_with, GodambeConfig};
use crate::model::{ModelSpec, ResponseFamily, Theta};
use crate::optimizer::{fit, warm_start, FitOptions};
use crate::sampler::{make_subpopulation_neighborhoods, mean_degree, simulate_with_rng, stream_rng, GibbsConfig};

/// Law of the single covariate column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum CovariateLaw {
    Uniform,
    Bernoulli { p: f64 },
}

impl CovariateLaw {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            CovariateLaw::Uniform => rng.random::<f64>(),
            CovariateLaw::Bernoulli { p } => (rng.random::<f64>() < p) as u8 as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimStudyConfig {
    pub ns: Vec<usize>,
    pub replications: usize,
    /// First replication index; earlier ones are skipped so an interrupted
    /// study can be resumed.
    pub first_replication: usize,
    pub nuisance_mean: f64,
    pub nuisance_sd: f64,
    /// `(lambda, alpha_y, beta_xy, gamma_zz, gamma_xyz, gamma_yyz)`
    pub interest: Vec<f64>,
    pub covariates: CovariateLaw,
    pub burn_in: usize,
    pub thin: usize,
    /// Godambe intervals are computed when set.
    pub godambe: Option<GodambeSettings>,
    pub ci_level: f64,
    pub seed: u64,
    /// Start the fit at the truth instead of the warm start.
    pub init_at_truth: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GodambeSettings {
    pub draws: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl Default for SimStudyConfig {
    fn default() -> Self {
        Self {
            ns: vec![250],
            replications: 10,
            first_replication: 0,
            nuisance_mean: -1.4,
            nuisance_sd: 0.2,
            interest: vec![0.3, -2.0, 2.0, 0.2, 0.1, 0.1],
            covariates: CovariateLaw::Uniform,
            burn_in: 1000,
            thin: 10,
            godambe: None,
            ci_level: 0.95,
            seed: 1,
            init_at_truth: false,
        }
    }
}

impl SimStudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() {
            return Err(Error::Invalid("ns: the list of population sizes is empty".into()));
        }
        if let Some(&n) = self.ns.iter().find(|&&n| n < 50 || n % 25 != 0) {
            return Err(Error::Invalid(format!("ns: {n} is not a multiple of 25 of at least 50")));
        }
        if self.interest.len() != 6 {
            return Err(Error::Invalid(format!("interest: expected 6 values, got {}", self.interest.len())));
        }
        if !(self.nuisance_sd >= 0.0) || !self.nuisance_mean.is_finite() {
            return Err(Error::Invalid("nuisance_mean / nuisance_sd: invalid".into()));
        }
        if self.thin == 0 {
            return Err(Error::Invalid("thin: must be at least 1".into()));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::Invalid(format!("ci_level: {} is outside (0, 1)", self.ci_level)));
        }
        if let CovariateLaw::Bernoulli { p } = self.covariates {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Invalid(format!("covariates.p: {p} is outside [0, 1]")));
            }
        }
        if let Some(g) = self.godambe {
            if g.draws < 2 || g.thin == 0 {
                return Err(Error::Invalid("godambe: need draws >= 2 and thin >= 1".into()));
            }
        }
        Ok(())
    }
}

/// One row per interest component, plus a `max_abs_error` row carrying the
/// sup-norm error over the whole parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub n: usize,
    pub rep: usize,
    pub component: String,
    pub theta_star: Option<f64>,
    pub theta_hat: Option<f64>,
    pub abs_err: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub covered: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub n: usize,
    pub rep: usize,
    pub sup_error: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub mean_degree: f64,
    pub error: Option<String>,
    pub records: Vec<StudyRecord>,
}

pub fn run_simulation_study(config: &SimStudyConfig) -> Result<Vec<Replication>> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = config
        .ns
        .iter()
        .flat_map(|&n| (config.first_replication..config.first_replication + config.replications).map(move |r| (n, r)))
        .collect();
    jobs.into_par_iter().map(|(n, rep)| run_replication(config, n, rep)).collect()
}

/// Replication `rep` at size `n`. Its random stream depends only on
/// `(seed, n, rep)`.
pub fn run_replication(config: &SimStudyConfig, n: usize, rep: usize) -> Result<Replication> {
    config.validate()?;
    let spec = ModelSpec::undirected_example(n, ResponseFamily::bernoulli())?;
    let pop = make_subpopulation_neighborhoods(n)?;
    let mut rng = stream_rng(config.seed, ((n as u64) << 32) | rep as u64);
    let normal = Normal::new(config.nuisance_mean, config.nuisance_sd)
        .map_err(|e| Error::Invalid(format!("nuisance law: {e}")))?;
    let nuisance: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    let truth = Theta::from_parts(&nuisance, &config.interest);
    let x = DMatrix::from_fn(n, 1, |_, _| config.covariates.sample(&mut rng));
    let gibbs = GibbsConfig::new(config.burn_in, config.thin, 0);
    let mut out = Replication {
        n,
        rep,
        sup_error: None,
        converged: false,
        iterations: 0,
        mean_degree: f64::NAN,
        error: None,
        records: Vec::new(),
    };
    let draw = simulate_with_rng(&spec, &pop, &x, &truth, &gibbs, 1, &mut rng)?.remove(0);
    out.mean_degree = mean_degree(&draw.network);
    let data = draw.into_dataset(x)?;
    let init = if config.init_at_truth { truth.clone() } else { warm_start(&spec, &data)? };
    let fitted = match fit(&spec, &pop, &data, &init, &FitOptions::default()) {
        Ok(f) => f,
        Err(e) => {
            out.error = Some(format!("fit: {e}"));
            return Ok(out);
        }
    };
    out.converged = fitted.converged;
    out.iterations = fitted.iterations;
    let theta_hat = fitted.theta_hat;
    let sup = theta_hat.values().iter().zip(truth.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out.sup_error = Some(sup);

    let intervals = match config.godambe {
        Some(g) => {
            let gc = GodambeConfig { draws: g.draws, burn_in: g.burn_in, thin: g.thin, seed: rng.random() };
            match godambe_cov_with(&spec, &pop, &data, &theta_hat, &gc)
                .and_then(|cov| confidence_intervals(&cov, &theta_hat, config.ci_level))
            {
                Ok(ci) => Some(ci),
                Err(e) => {
                    out.error = Some(format!("godambe: {e}"));
                    None
                }
            }
        }
        None => None,
    };
    let q = spec.n_nuisance();
    for (k, name) in spec.interest_names().iter().enumerate() {
        let (star, hat) = (truth.values()[q + k], theta_hat.values()[q + k]);
        let ci = intervals.as_ref().map(|c| c[q + k]);
        out.records.push(StudyRecord {
            n,
            rep,
            component: name.clone(),
            theta_star: Some(star),
            theta_hat: Some(hat),
            abs_err: Some((hat - star).abs()),
            ci_lo: ci.map(|c| c.0),
            ci_hi: ci.map(|c| c.1),
            covered: ci.map(|c| c.0 <= star && star <= c.1),
        });
    }
    out.records.push(StudyRecord {
        n,
        rep,
        component: "max_abs_error".into(),
        theta_star: None,
        theta_hat: None,
        abs_err: Some(sup),
        ci_lo: None,
        ci_hi: None,
        covered: None,
    });
    Ok(out)
}

/// Median of the sup-norm errors of the successful replications at size `n`.
pub fn median_sup_error(reps: &[Replication], n: usize) -> Option<f64> {
    let mut e: Vec<f64> = reps.iter().filter(|r| r.n == n).filter_map(|r| r.sup_error).collect();
    if e.is_empty() {
        return None;
    }
    e.sort_by(f64::total_cmp);
    let m = e.len();
    Some(if m % 2 == 1 { e[m / 2] } else { 0.5 * (e[m / 2 - 1] + e[m / 2]) })
}

/// Empirical interval coverage per interest component at size `n`.
pub fn coverage(reps: &[Replication], n: usize) -> Vec<(String, f64, usize)> {
    let mut names: Vec<String> = Vec::new();
    for r in reps.iter().filter(|r| r.n == n) {
        for rec in &r.records {
            if rec.covered.is_some() && !names.contains(&rec.component) {
                names.push(rec.component.clone());
            }
        }
    }
    names
        .into_iter()
        .map(|name| {
            let hits: Vec<bool> = reps
                .iter()
                .filter(|r| r.n == n)
                .flat_map(|r| r.records.iter())
                .filter(|rec| rec.component == name)
                .filter_map(|rec| rec.covered)
                .collect();
            let rate = hits.iter().filter(|h| **h).count() as f64 / hits.len() as f64;
            (name, rate, hits.len())
        })
        .collect()
}
