//! Sandwich (Godambe) covariance of pseudo-likelihood estimates and Wald
//! intervals.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{Dataset, ModelSpec, Population, Theta};
use crate::pseudolik::{Design, Want};
use crate::sampler::{simulate, GibbsConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovEstimate {
    /// `p x p`, row-major.
    pub sandwich: Vec<f64>,
    pub se: Vec<f64>,
    pub mc_draws: usize,
    /// Ridge added to the negative Hessian when it was not positive definite.
    pub ridge: Option<f64>,
}

impl CovEstimate {
    pub fn dim(&self) -> usize {
        self.se.len()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let p = self.dim();
        DMatrix::from_row_slice(p, p, &self.sandwich)
    }

    pub fn from_matrix(m: DMatrix<f64>, mc_draws: usize, ridge: Option<f64>) -> Self {
        let p = m.nrows();
        let sym = (&m + m.transpose()) * 0.5;
        let se = (0..p).map(|k| sym[(k, k)].max(0.0).sqrt()).collect();
        let sandwich = (0..p).flat_map(|i| (0..p).map(move |j| (i, j))).map(|(i, j)| sym[(i, j)]).collect();
        Self { sandwich, se, mc_draws, ridge }
    }
}

/// Settings of the Monte Carlo score variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GodambeConfig {
    pub draws: usize,
    /// Sweeps before the first retained dataset, starting from the observed
    /// state.
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for GodambeConfig {
    fn default() -> Self {
        Self { draws: 500, burn_in: 500, thin: 10, seed: 0 }
    }
}

/// Negative Hessian of the pseudo-loglikelihood on `data` at `theta`.
pub fn negative_hessian(spec: &ModelSpec, pop: &Population, data: &Dataset, theta: &Theta) -> Result<DMatrix<f64>> {
    spec.check_theta(theta)?;
    let design = Design::new(spec, pop, data)?;
    let obj = design.evaluate(theta.values(), Want::FULL)?;
    Ok(obj.blocks().expect("full Hessian requested").assemble())
}

/// Empirical covariance of the pseudo-score at `theta` over datasets
/// simulated from the model at `theta`, holding the covariates fixed.
pub fn score_covariance(
    spec: &ModelSpec,
    pop: &Population,
    data: &Dataset,
    theta: &Theta,
    config: &GodambeConfig,
) -> Result<DMatrix<f64>> {
    if config.draws < 2 {
        return Err(Error::Invalid(format!("need at least 2 Monte Carlo draws, got {}", config.draws)));
    }
    let p = theta.len();
    let gibbs = GibbsConfig {
        burn_in: config.burn_in,
        thin: config.thin,
        seed: config.seed,
        initial_state: Some((data.responses.clone(), data.network.clone())),
        exact_independent_pairs: true,
    };
    let draws = simulate(spec, pop, &data.covariates, theta, &gibbs, config.draws)?;
    let mut g = DMatrix::zeros(config.draws, p);
    for (r, draw) in draws.into_iter().enumerate() {
        let sim = draw.into_dataset(data.covariates.clone())?;
        let grad = Design::new(spec, pop, &sim)?.evaluate(theta.values(), Want::GRADIENT)?.gradient;
        g.row_mut(r).copy_from(&DVector::from_vec(grad).transpose());
    }
    let mean = g.row_mean();
    for mut row in g.row_iter_mut() {
        row -= &mean;
    }
    Ok(g.transpose() * &g / (config.draws as f64 - 1.0))
}

/// `H^{-1} V H^{-1}`. A ridge of `1e-8 * trace(H) / p` is added when `H`
/// is not positive definite.
pub fn sandwich(h: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<(DMatrix<f64>, Option<f64>)> {
    let p = h.nrows();
    if h.ncols() != p || v.shape() != (p, p) {
        return Err(Error::Dimension(format!("Hessian {:?} and score covariance {:?}", h.shape(), v.shape())));
    }
    let (chol, ridge) = match h.clone().cholesky() {
        Some(c) => (c, None),
        None => {
            let lambda = 1e-8 * h.trace().abs() / p as f64;
            log::warn!("negative Hessian is not positive definite; adding ridge {lambda:e}");
            let c = (h + DMatrix::identity(p, p) * lambda)
                .cholesky()
                .ok_or_else(|| Error::Singular("negative Hessian after ridge".into()))?;
            (c, Some(lambda))
        }
    };
    let left = chol.solve(v);
    let out = chol.solve(&left.transpose());
    Ok((out, ridge))
}

pub fn godambe_cov_with(
    spec: &ModelSpec,
    pop: &Population,
    data: &Dataset,
    theta_hat: &Theta,
    config: &GodambeConfig,
) -> Result<CovEstimate> {
    if !theta_hat.is_finite() {
        return Err(Error::Invalid("theta_hat is not finite".into()));
    }
    let h = negative_hessian(spec, pop, data, theta_hat)?;
    let v = score_covariance(spec, pop, data, theta_hat, config)?;
    let (m, ridge) = sandwich(&h, &v)?;
    Ok(CovEstimate::from_matrix(m, config.draws, ridge))
}

/// Godambe covariance with `r` Monte Carlo datasets and default chain
/// settings.
pub fn godambe_cov(
    spec: &ModelSpec,
    pop: &Population,
    data: &Dataset,
    theta_hat: &Theta,
    r: usize,
    seed: u64,
) -> Result<CovEstimate> {
    let config = GodambeConfig { draws: r, seed, ..GodambeConfig::default() };
    godambe_cov_with(spec, pop, data, theta_hat, &config)
}

/// Inverse negative Hessian. Ignores the dependence among conditionals and
/// is only meant for diagnostics.
pub fn inverse_hessian_cov(spec: &ModelSpec, pop: &Population, data: &Dataset, theta_hat: &Theta) -> Result<CovEstimate> {
    let h = negative_hessian(spec, pop, data, theta_hat)?;
    let p = h.nrows();
    let (m, ridge) = sandwich(&h, &h)?;
    debug_assert_eq!(m.nrows(), p);
    Ok(CovEstimate::from_matrix(m, 0, ridge))
}

/// Two-sided Wald intervals `theta_k +- z * se_k`.
pub fn confidence_intervals(cov: &CovEstimate, theta_hat: &Theta, level: f64) -> Result<Vec<(f64, f64)>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Invalid(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if cov.dim() != theta_hat.len() {
        return Err(Error::Dimension(format!("{} standard errors for {} parameters", cov.dim(), theta_hat.len())));
    }
    let z = normal_quantile((1.0 + level) / 2.0);
    Ok(theta_hat.values().iter().zip(&cov.se).map(|(t, s)| (t - z * s, t + z * s)).collect())
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_interval() {
        let cov = CovEstimate::from_matrix(DMatrix::identity(1, 1), 2, None);
        let t = Theta::new(vec![0.0], 0).unwrap();
        let ci = confidence_intervals(&cov, &t, 0.95).unwrap();
        assert_abs_diff_eq!(ci[0].1, 1.959964, epsilon = 1e-6);
        assert_abs_diff_eq!(ci[0].0, -1.959964, epsilon = 1e-6);
        assert!(confidence_intervals(&cov, &t, 1.0).is_err());
    }

    #[test]
    fn zero_se_is_degenerate() {
        let cov = CovEstimate::from_matrix(DMatrix::zeros(2, 2), 2, None);
        let t = Theta::new(vec![0.3, -1.0], 1).unwrap();
        let ci = confidence_intervals(&cov, &t, 0.9).unwrap();
        assert_eq!(ci, vec![(0.3, 0.3), (-1.0, -1.0)]);
    }

    #[test]
    fn sandwich_of_h_is_inverse() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let (m, ridge) = sandwich(&h, &h).unwrap();
        assert!(ridge.is_none());
        let inv = h.try_inverse().unwrap();
        assert!((m - inv).amax() < 1e-12);
    }

    #[test]
    fn singular_hessian_gets_ridge() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (_, ridge) = sandwich(&h, &DMatrix::identity(2, 2)).unwrap();
        assert_abs_diff_eq!(ridge.unwrap(), 1e-8);
    }
}
