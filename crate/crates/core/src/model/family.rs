use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest Poisson linear predictor accepted: half the log of the largest
/// finite double, so that `exp(eta)` and its square stay finite.
pub const POISSON_ETA_CAP: f64 = 354.891_356_446_692_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Bernoulli,
    Poisson,
    Gaussian,
}

/// Exponential-family law of a response given its linear predictor, with a
/// known scale `psi` (fixed to 1 for Bernoulli and Poisson).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseFamily {
    kind: FamilyKind,
    psi: f64,
}

impl ResponseFamily {
    pub fn bernoulli() -> Self {
        Self { kind: FamilyKind::Bernoulli, psi: 1.0 }
    }

    pub fn poisson() -> Self {
        Self { kind: FamilyKind::Poisson, psi: 1.0 }
    }

    pub fn gaussian(psi: f64) -> Result<Self> {
        if !(psi.is_finite() && psi > 0.0) {
            return Err(Error::Invalid(format!("scale psi must be positive, got {psi}")));
        }
        Ok(Self { kind: FamilyKind::Gaussian, psi })
    }

    pub fn new(kind: FamilyKind, psi: f64) -> Result<Self> {
        match kind {
            FamilyKind::Gaussian => Self::gaussian(psi),
            _ if psi != 1.0 => Err(Error::Invalid(format!(
                "{kind:?} responses have scale 1, got {psi}"
            ))),
            FamilyKind::Bernoulli => Ok(Self::bernoulli()),
            FamilyKind::Poisson => Ok(Self::poisson()),
        }
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    /// Whether `y` lies in the support of the family.
    pub fn in_support(&self, y: f64) -> bool {
        match self.kind {
            FamilyKind::Bernoulli => y == 0.0 || y == 1.0,
            FamilyKind::Poisson => y >= 0.0 && y.fract() == 0.0 && y.is_finite(),
            FamilyKind::Gaussian => y.is_finite(),
        }
    }

    /// Cumulant function b(eta).
    pub fn cumulant(&self, eta: f64) -> Result<f64> {
        check_eta(self.kind, eta)?;
        Ok(match self.kind {
            FamilyKind::Bernoulli => log1p_exp(eta),
            FamilyKind::Poisson => eta.exp(),
            FamilyKind::Gaussian => 0.5 * eta * eta,
        })
    }

    /// Conditional mean mu(eta) = b'(eta).
    pub fn mean(&self, eta: f64) -> Result<f64> {
        check_eta(self.kind, eta)?;
        Ok(match self.kind {
            FamilyKind::Bernoulli => logistic(eta),
            FamilyKind::Poisson => eta.exp(),
            FamilyKind::Gaussian => eta,
        })
    }

    /// b''(eta); the conditional variance is `psi * b''(eta)`.
    pub fn variance_function(&self, eta: f64) -> Result<f64> {
        check_eta(self.kind, eta)?;
        Ok(match self.kind {
            FamilyKind::Bernoulli => {
                let p = logistic(eta);
                p * (1.0 - p)
            }
            FamilyKind::Poisson => eta.exp(),
            FamilyKind::Gaussian => 1.0,
        })
    }

    /// Log of the base measure a(y) of the conditional density.
    pub fn log_base(&self, y: f64) -> f64 {
        match self.kind {
            FamilyKind::Bernoulli => 0.0,
            FamilyKind::Poisson => -ln_factorial(y),
            FamilyKind::Gaussian => {
                -0.5 * (2.0 * std::f64::consts::PI * self.psi).ln() - y * y / (2.0 * self.psi)
            }
        }
    }

    /// Conditional log-density of `y` at linear predictor `eta`.
    pub fn log_density(&self, y: f64, eta: f64) -> Result<f64> {
        Ok(self.log_base(y) + (eta * y - self.cumulant(eta)?) / self.psi)
    }
}

fn check_eta(kind: FamilyKind, eta: f64) -> Result<()> {
    if !eta.is_finite() {
        return Err(Error::NonFinite { location: "cumulant argument".into() });
    }
    if kind == FamilyKind::Poisson && eta > POISSON_ETA_CAP {
        return Err(Error::PoissonOverflow {
            eta,
            cap: POISSON_ETA_CAP,
            location: "cumulant argument".into(),
        });
    }
    Ok(())
}

/// Numerically stable log(1 + exp(x)).
#[inline]
pub fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Inverse logit.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn ln_factorial(y: f64) -> f64 {
    statrs::function::factorial::ln_factorial(y as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn examples() {
        assert_eq!(ResponseFamily::bernoulli().mean(0.0).unwrap(), 0.5);
        let g = ResponseFamily::gaussian(2.0).unwrap();
        for eta in [-3.0, 0.0, 1.7] {
            assert_eq!(g.mean(eta).unwrap(), eta);
        }
        let p = ResponseFamily::poisson();
        assert_eq!(p.cumulant(0.0).unwrap(), 1.0);
        assert_eq!(p.mean(0.0).unwrap(), 1.0);
    }

    #[test]
    fn bernoulli_cumulant_is_stable() {
        let b = ResponseFamily::bernoulli();
        assert_eq!(b.cumulant(800.0).unwrap(), 800.0);
        assert!(b.cumulant(-800.0).unwrap() >= 0.0);
        assert_relative_eq!(b.cumulant(-40.0).unwrap(), (-40.0f64).exp(), max_relative = 1e-12);
        assert_eq!(b.mean(-800.0).unwrap(), 0.0);
        assert_eq!(b.mean(800.0).unwrap(), 1.0);
    }

    #[test]
    fn poisson_cap() {
        let p = ResponseFamily::poisson();
        assert!(p.mean(POISSON_ETA_CAP).is_ok());
        assert!(matches!(p.mean(400.0), Err(Error::PoissonOverflow { .. })));
        assert!(POISSON_ETA_CAP.exp().is_finite());
        assert!((2.0 * POISSON_ETA_CAP - f64::MAX.ln()).abs() < 1e-12);
    }

    #[test]
    fn scale_validation() {
        assert!(ResponseFamily::gaussian(0.0).is_err());
        assert!(ResponseFamily::new(FamilyKind::Poisson, 2.0).is_err());
        assert!(ResponseFamily::new(FamilyKind::Gaussian, 2.0).is_ok());
    }

    #[test]
    fn densities_normalize() {
        let p = ResponseFamily::poisson();
        let total: f64 = (0..80).map(|y| p.log_density(y as f64, 1.3).unwrap().exp()).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        let b = ResponseFamily::bernoulli();
        let total = b.log_density(0.0, -0.4).unwrap().exp() + b.log_density(1.0, -0.4).unwrap().exp();
        assert_relative_eq!(total, 1.0, epsilon = 1e-14);
        // Gaussian via midpoint quadrature
        let g = ResponseFamily::gaussian(0.7).unwrap();
        let h = 1e-3;
        let total: f64 = (-12000..12000)
            .map(|k| g.log_density((k as f64 + 0.5) * h, 0.3).unwrap().exp() * h)
            .sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-9);
    }

    proptest::proptest! {
        #[test]
        fn mean_is_derivative_of_cumulant(eta in -20.0f64..20.0) {
            for fam in [ResponseFamily::bernoulli(), ResponseFamily::poisson(), ResponseFamily::gaussian(1.5).unwrap()] {
                let h = 1e-5 * eta.abs().max(1.0);
                let fd = (fam.cumulant(eta + h).unwrap() - fam.cumulant(eta - h).unwrap()) / (2.0 * h);
                let mu = fam.mean(eta).unwrap();
                proptest::prop_assert!((fd - mu).abs() <= 1e-7 * mu.abs() + 1e-12, "{:?} eta={} fd={} mu={}", fam.kind(), eta, fd, mu);
            }
        }
    }
}
