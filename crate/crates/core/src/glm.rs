//! Canonical-link generalized linear models fitted by iteratively
//! reweighted least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::family::ResponseFamily;

#[derive(Debug, Clone, PartialEq)]
pub struct GlmFit {
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Fisher information `X' W X` at the estimate (per unit scale).
    pub information: DMatrix<f64>,
}

impl GlmFit {
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum()
    }
}

/// Fits `y ~ design` under the canonical link of `family`. The design
/// should include an intercept column if one is wanted.
pub fn fit_glm(family: ResponseFamily, design: &DMatrix<f64>, y: &[f64]) -> Result<GlmFit> {
    let (n, p) = design.shape();
    if y.len() != n {
        return Err(Error::Dimension(format!("design has {n} rows, response {}", y.len())));
    }
    let mut beta = DVector::zeros(p);
    let mut information = DMatrix::zeros(p, p);
    for it in 1..=100 {
        let eta = design * &beta;
        let mut score = DVector::zeros(p);
        information.fill(0.0);
        for i in 0..n {
            let mu = family.mean(eta[i])?;
            let w = family.variance_function(eta[i])?;
            let row = design.row(i);
            score += row.transpose() * (y[i] - mu);
            information += row.transpose() * row * w;
        }
        let step = information
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Singular("GLM information matrix".into()))?
            .solve(&score);
        beta += &step;
        if step.amax() < 1e-12 * beta.amax().max(1.0) {
            return Ok(GlmFit { coefficients: beta.as_slice().to_vec(), iterations: it, converged: true, information });
        }
    }
    Ok(GlmFit { coefficients: beta.as_slice().to_vec(), iterations: 100, converged: false, information })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gaussian_is_least_squares() {
        let x = DMatrix::from_row_slice(4, 2, &[1., 0., 1., 1., 1., 2., 1., 3.]);
        let y = [1.0, 3.0, 5.0, 7.0];
        let fit = fit_glm(ResponseFamily::gaussian(1.0).unwrap(), &x, &y).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coefficients[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn logistic_intercept_is_logit_of_mean() {
        let x = DMatrix::from_element(5, 1, 1.0);
        let fit = fit_glm(ResponseFamily::bernoulli(), &x, &[1., 0., 0., 1., 1.]).unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.coefficients[0], (0.6f64 / 0.4).ln(), epsilon = 1e-12);
    }
}
