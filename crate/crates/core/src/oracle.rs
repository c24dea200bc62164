//! Brute-force ground truth for tiny instances: full enumeration of the
//! joint law, exact conditionals, the Gaussian response law at a fixed
//! network, and finite-difference derivatives.
//!
//! Statistics here are recomputed from their definitions (overlap and
//! two-path indicators by exhaustive search) and share no code with the
//! change-statistic machinery they are used to check.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{FamilyKind, ModelSpec, Network, PairTerm, Population, Theta, UnitTerm};

/// Largest number of binary coordinates that will be enumerated.
pub const MAX_STATE_BITS: usize = 22;

/// A single response or connection coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    Response(usize),
    Pair(usize, usize),
}

fn shares(pop: &Population, i: usize, j: usize) -> bool {
    pop.neighborhood(i).iter().any(|k| pop.neighborhood(j).contains(k))
}

fn two_path(pop: &Population, net: &Network, i: usize, j: usize) -> bool {
    (0..pop.n_units()).any(|k| {
        k != i
            && k != j
            && pop.neighborhood(i).contains(&k)
            && pop.neighborhood(j).contains(&k)
            && net.has_edge(i, k)
            && net.has_edge(k, j)
    })
}

/// Sufficient statistics recomputed term by term from the definitions,
/// laid out like theta. `y` holds raw responses; the scale is taken from
/// the specification.
pub fn brute_statistics(spec: &ModelSpec, pop: &Population, x: &DMatrix<f64>, y: &[f64], net: &Network) -> Vec<f64> {
    let n = spec.n_units();
    let q = spec.n_nuisance();
    let psi = spec.family().psi();
    let ys: Vec<f64> = y.iter().map(|v| v / psi).collect();
    let log_n = (n as f64).ln();
    let mut s = vec![0.0; spec.n_params()];
    for i in 0..n {
        for &(term, k) in spec.unit_terms() {
            s[q + k] += match term {
                UnitTerm::Intercept => ys[i],
                UnitTerm::Covariate { col } => x[(i, col)] * ys[i],
            };
        }
    }
    let pairs: Vec<(usize, usize)> = if spec.is_directed() {
        (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect()
    } else {
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    };
    for (i, j) in pairs {
        if !net.has_edge(i, j) {
            continue;
        }
        let c = if shares(pop, i, j) { 1.0 } else { 0.0 };
        for &(term, slot) in spec.pair_terms() {
            match (term, slot) {
                (PairTerm::Propensity, _) => {
                    s[i] += 1.0;
                    s[j] += 1.0;
                }
                (PairTerm::OutPropensity, _) => s[i] += 1.0,
                (PairTerm::InPropensity, _) => {
                    if j + 1 < n {
                        s[n + j] += 1.0;
                    }
                }
                (_, Some(k)) => {
                    s[q + k] += match term {
                        PairTerm::SparsityPenalty => -(1.0 - c) * log_n,
                        PairTerm::Transitive => two_path(pop, net, i, j) as u8 as f64,
                        PairTerm::TreatmentSpillover { col } => c * (x[(i, col)] * ys[j] + x[(j, col)] * ys[i]),
                        PairTerm::OutcomeSpillover => c * ys[i] * ys[j],
                        PairTerm::Reciprocity => 0.5 * net.z(j, i),
                        PairTerm::SenderCovariate { col } => c * x[(i, col)],
                        PairTerm::CovariateMatch { col } => c * ((x[(i, col)] == x[(j, col)]) as u8 as f64),
                        PairTerm::ReceiverResponse => c * ys[j],
                        PairTerm::SenderTreatmentReceiverResponse { col } => c * x[(i, col)] * ys[j],
                        _ => 0.0,
                    }
                }
                _ => {}
            }
        }
    }
    s
}

/// The exact joint law of `(Y, Z)` for Bernoulli responses on a tiny
/// population. States are bit-packed: bit `i < N` is `y_i`, the following
/// bits are the connection slots in lexicographic order (unordered `i < j`
/// when undirected, ordered `i != j` when directed), matching the sampler's
/// scan order.
#[derive(Debug, Clone)]
pub struct Enumeration {
    n: usize,
    directed: bool,
    slots: Vec<(usize, usize)>,
    log_weights: Vec<f64>,
    log_phi: f64,
}

pub fn enumerate_joint(spec: &ModelSpec, pop: &Population, covariates: &DMatrix<f64>, theta: &Theta) -> Result<Enumeration> {
    if spec.family().kind() != FamilyKind::Bernoulli {
        return Err(Error::Invalid("enumeration needs Bernoulli responses".into()));
    }
    spec.check_theta(theta)?;
    let n = spec.n_units();
    if pop.n_units() != n || covariates.nrows() != n {
        return Err(Error::Dimension("population, covariates and model sizes differ".into()));
    }
    let directed = spec.is_directed();
    let slots: Vec<(usize, usize)> = if directed {
        (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect()
    } else {
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    };
    let bits = n + slots.len();
    if bits > MAX_STATE_BITS {
        return Err(Error::StateSpaceTooLarge { bits, cap: MAX_STATE_BITS });
    }
    let mut en = Enumeration { n, directed, slots, log_weights: Vec::new(), log_phi: 0.0 };
    // collect keeps state order, so the sums below do not depend on threads
    let log_weights = (0..(1usize << bits))
        .into_par_iter()
        .with_min_len(256)
        .map(|state| {
            let (y, net) = en.decode(state);
            let stats = brute_statistics(spec, pop, covariates, &y, &net);
            stats.iter().zip(theta.values()).map(|(s, t)| s * t).sum()
        })
        .collect();
    en.log_weights = log_weights;
    let m = en.log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = en.log_weights.iter().map(|lw| (lw - m).exp()).sum();
    en.log_phi = m + total.ln();
    Ok(en)
}

impl Enumeration {
    pub fn n_states(&self) -> usize {
        self.log_weights.len()
    }

    pub fn n_bits(&self) -> usize {
        self.n + self.slots.len()
    }

    /// Log of the normalizing constant.
    pub fn log_phi(&self) -> f64 {
        self.log_phi
    }

    pub fn probability(&self, state: usize) -> f64 {
        (self.log_weights[state] - self.log_phi).exp()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.n_states()).map(|s| self.probability(s)).collect()
    }

    pub fn decode(&self, state: usize) -> (Vec<f64>, Network) {
        let y = (0..self.n).map(|i| ((state >> i) & 1) as f64).collect();
        let mut net = Network::empty(self.n, self.directed);
        for (k, &(i, j)) in self.slots.iter().enumerate() {
            if (state >> (self.n + k)) & 1 == 1 {
                net.set(i, j, true);
            }
        }
        (y, net)
    }

    pub fn encode(&self, y: &[f64], net: &Network) -> usize {
        let mut state = 0;
        for (i, &v) in y.iter().enumerate() {
            if v != 0.0 {
                state |= 1 << i;
            }
        }
        for (k, &(i, j)) in self.slots.iter().enumerate() {
            if net.has_edge(i, j) {
                state |= 1 << (self.n + k);
            }
        }
        state
    }

    /// Bit position of a coordinate.
    pub fn bit(&self, coord: Coordinate) -> Result<usize> {
        match coord {
            Coordinate::Response(i) if i < self.n => Ok(i),
            Coordinate::Pair(i, j) => {
                let key = if self.directed { (i, j) } else { (i.min(j), i.max(j)) };
                self.slots
                    .iter()
                    .position(|&s| s == key)
                    .map(|k| self.n + k)
                    .ok_or_else(|| Error::Invalid(format!("no connection slot ({i}, {j})")))
            }
            Coordinate::Response(i) => Err(Error::IndexOutOfRange { index: i, n: self.n }),
        }
    }

    /// Exact log-odds of the coordinate being 1 given the rest of `state`.
    pub fn conditional_log_odds(&self, coord: Coordinate, state: usize) -> Result<f64> {
        let b = self.bit(coord)?;
        let on = state | (1 << b);
        let off = state & !(1 << b);
        Ok(self.log_weights[on] - self.log_weights[off])
    }

    /// Marginal law of the value of a function of the state.
    pub fn expectation(&self, f: impl Fn(&[f64], &Network) -> f64) -> f64 {
        (0..self.n_states())
            .map(|s| {
                let (y, net) = self.decode(s);
                self.probability(s) * f(&y, &net)
            })
            .sum()
    }
}

/// Conditional distribution `P(coord = 1 | rest)` for every configuration
/// of the remaining coordinates, by direct summation. Rest states are
/// reported with the coordinate's bit cleared.
pub fn exact_conditionals(en: &Enumeration, coord: Coordinate) -> Result<Vec<(usize, [f64; 2])>> {
    let b = en.bit(coord)?;
    let mut out = Vec::with_capacity(en.n_states() / 2);
    for s in 0..en.n_states() {
        if (s >> b) & 1 == 1 {
            continue;
        }
        let w0 = en.probability(s);
        let w1 = en.probability(s | (1 << b));
        let total = w0 + w1;
        out.push((s, [w0 / total, w1 / total]));
    }
    Ok(out)
}

/// Mean vector and covariance of the Gaussian responses given a fixed
/// network, for the undirected example model (interest order `lambda,
/// alpha_y, beta_xy, gamma_zz, gamma_xyz, gamma_yyz`, covariate column 0).
pub fn gaussian_conditional_params(
    pop: &Population,
    covariates: &DMatrix<f64>,
    z: &Network,
    theta: &Theta,
    psi: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = pop.n_units();
    let t = theta.interest();
    if t.len() != 6 || z.n_units() != n || covariates.nrows() != n {
        return Err(Error::Dimension("expects the undirected example layout".into()));
    }
    if !(psi > 0.0) {
        return Err(Error::Invalid(format!("scale must be positive, got {psi}")));
    }
    let (alpha, beta, g_xyz, g_yyz) = (t[1], t[2], t[4], t[5]);
    let u = DMatrix::from_fn(n, n, |i, j| {
        if i != j && shares(pop, i, j) && z.has_edge(i, j) {
            1.0
        } else {
            0.0
        }
    });
    let xi = g_yyz / psi;
    let v = DVector::from_fn(n, |i, _| {
        let spill: f64 = (0..n).map(|j| u[(i, j)] * covariates[(j, 0)]).sum();
        alpha + beta * covariates[(i, 0)] + g_xyz * spill
    });
    let m = DMatrix::identity(n, n) - u * xi;
    let smallest = SymmetricEigen::new(m.clone()).eigenvalues.min();
    if smallest <= 0.0 {
        return Err(Error::NotPositiveDefinite { eigenvalue: smallest });
    }
    let inv = m.try_inverse().ok_or_else(|| Error::Singular("I - xi U".into()))?;
    Ok((&inv * v, inv * psi))
}

fn steps(theta: &[f64], step: f64) -> Vec<f64> {
    theta.iter().map(|t| step * t.abs().max(1.0)).collect()
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { location: what.into() })
    }
}

/// Central-difference gradient; coordinate steps are `step * max(1, |theta_k|)`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, theta: &[f64], step: f64) -> Result<Vec<f64>> {
    let h = steps(theta, step);
    let mut x = theta.to_vec();
    let mut g = Vec::with_capacity(theta.len());
    for k in 0..theta.len() {
        x[k] = theta[k] + h[k];
        let up = finite(f(&x), "finite-difference evaluation")?;
        x[k] = theta[k] - h[k];
        let down = finite(f(&x), "finite-difference evaluation")?;
        x[k] = theta[k];
        g.push((up - down) / (2.0 * h[k]));
    }
    Ok(g)
}

/// Central-difference Hessian from function values.
pub fn fd_hessian(f: impl Fn(&[f64]) -> f64, theta: &[f64], step: f64) -> Result<DMatrix<f64>> {
    let p = theta.len();
    let h = steps(theta, step);
    let mut x = theta.to_vec();
    let eval = |x: &[f64]| finite(f(x), "finite-difference evaluation");
    let mut out = DMatrix::zeros(p, p);
    let f0 = eval(&x)?;
    for k in 0..p {
        x[k] = theta[k] + h[k];
        let up = eval(&x)?;
        x[k] = theta[k] - h[k];
        let down = eval(&x)?;
        x[k] = theta[k];
        out[(k, k)] = (up - 2.0 * f0 + down) / (h[k] * h[k]);
        for l in 0..k {
            let mut corner = |sk: f64, sl: f64| {
                x[k] = theta[k] + sk * h[k];
                x[l] = theta[l] + sl * h[l];
                let v = eval(&x);
                x[k] = theta[k];
                x[l] = theta[l];
                v
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?)
                / (4.0 * h[k] * h[l]);
            out[(k, l)] = v;
            out[(l, k)] = v;
        }
    }
    Ok(out)
}

/// Central-difference Jacobian of a vector function (used on gradients).
pub fn fd_jacobian(g: impl Fn(&[f64]) -> Vec<f64>, theta: &[f64], step: f64) -> Result<DMatrix<f64>> {
    let p = theta.len();
    let h = steps(theta, step);
    let mut x = theta.to_vec();
    let mut cols = Vec::with_capacity(p);
    for k in 0..p {
        x[k] = theta[k] + h[k];
        let up = g(&x);
        x[k] = theta[k] - h[k];
        let down = g(&x);
        x[k] = theta[k];
        let col: Vec<f64> = up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * h[k])).collect();
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { location: "finite-difference evaluation".into() });
        }
        cols.push(DVector::from_vec(col));
    }
    Ok(DMatrix::from_columns(&cols))
}
