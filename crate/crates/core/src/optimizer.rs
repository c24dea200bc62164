//! Two-step maximization of the pseudo-loglikelihood.
//!
//! Step 1 moves the nuisance block by maximizing a quadratic minorizer whose
//! curvature matrix `A*` has a closed-form inverse (optionally accelerated by
//! symmetric rank-one quasi-Newton updates). Step 2 takes a damped Newton
//! step on the interest block.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::fit_glm;
use crate::model::family::logit;
use crate::model::{Dataset, ModelSpec, Population, Theta};
use crate::pseudolik::{Design, Want};

/// The constant minorizer curvature `A*` for the nuisance block.
///
/// Undirected: `(1/4) [(N - 2) I + 1 1']` of size `N`. Directed: the
/// `(2N - 1)`-square matrix with `(N - 1)/4` on the diagonal and `(1 1' - I)/4`
/// coupling sender weights with the first `N - 1` receiver weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinorizerMatrix {
    directed: bool,
    n: usize,
}

impl MinorizerMatrix {
    pub fn new(n: usize, directed: bool) -> Result<Self> {
        if n < 3 {
            return Err(Error::Invalid(format!("the minorizer needs at least 3 units, got {n}")));
        }
        Ok(Self { directed, n })
    }

    pub fn for_spec(spec: &ModelSpec) -> Result<Self> {
        Self::new(spec.n_units(), spec.is_directed())
    }

    pub fn dim(&self) -> usize {
        if self.directed {
            2 * self.n - 1
        } else {
            self.n
        }
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::Dimension(format!("vector of length {} for a {}-square minorizer", v.len(), self.dim())));
        }
        Ok(())
    }

    /// `A* v` in `O(N)`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        let n = self.n as f64;
        if !self.directed {
            let s: f64 = v.iter().sum();
            return Ok(v.iter().map(|x| 0.25 * ((n - 2.0) * x + s)).collect());
        }
        let (u, w) = v.split_at(self.n);
        let su: f64 = u.iter().sum();
        let sw: f64 = w.iter().sum();
        let mut out = Vec::with_capacity(v.len());
        for (a, &ua) in u.iter().enumerate() {
            let qw = sw - w.get(a).copied().unwrap_or(0.0);
            out.push(0.25 * ((n - 1.0) * ua + qw));
        }
        for (b, &wb) in w.iter().enumerate() {
            out.push(0.25 * (su - u[b] + (n - 1.0) * wb));
        }
        Ok(out)
    }

    /// `A*^{-1} v` in `O(N)` without forming the inverse.
    pub fn apply_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        let n = self.n as f64;
        if !self.directed {
            let s: f64 = v.iter().sum();
            let shift = s / (2.0 * n - 2.0);
            return Ok(v.iter().map(|x| 4.0 / (n - 2.0) * (x - shift)).collect());
        }
        // Solve (1/4)[(N-1) u + Q w] = a, (1/4)[Q' u + (N-1) w] = b with
        // Q = 1 1' - [I; 0]; eliminating u leaves (N-2)(N I - 1 1') w = rhs.
        let (a, b) = v.split_at(self.n);
        let sa: f64 = a.iter().sum();
        let rhs: Vec<f64> = b
            .iter()
            .enumerate()
            .map(|(j, &bj)| 4.0 * ((n - 1.0) * bj - (sa - a[j])))
            .collect();
        let srhs: f64 = rhs.iter().sum();
        let w: Vec<f64> = rhs.iter().map(|r| (r + srhs) / (n * (n - 2.0))).collect();
        let sw: f64 = w.iter().sum();
        let mut out = Vec::with_capacity(v.len());
        for (i, &ai) in a.iter().enumerate() {
            let qw = sw - w.get(i).copied().unwrap_or(0.0);
            out.push((4.0 * ai - qw) / (n - 1.0));
        }
        out.extend(w);
        Ok(out)
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for k in 0..d {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            m.set_column(k, &DVector::from_vec(self.apply(&e).expect("dimension matches")));
        }
        m
    }
}

/// `A*^{-1} v`.
pub fn astar_apply_inverse(m: &MinorizerMatrix, v: &[f64]) -> Result<Vec<f64>> {
    m.apply_inverse(v)
}

/// The minorizer `m(theta1; theta1_t) = l_t + g'd - d'A*d/2` with `d = theta1 - theta1_t`.
pub fn minorizer_value(m: &MinorizerMatrix, loglik_t: f64, grad1_t: &[f64], theta1_t: &[f64], theta1: &[f64]) -> Result<f64> {
    let d: Vec<f64> = theta1.iter().zip(theta1_t).map(|(a, b)| a - b).collect();
    let ad = m.apply(&d)?;
    Ok(loglik_t + dot(grad1_t, &d) - 0.5 * dot(&d, &ad))
}

/// Symmetric rank-one approximation `M` of `A*^{-1} - A(theta)^{-1}`, stored
/// as a sum of outer products `q q' / c`.
#[derive(Debug, Clone, Default)]
pub struct QNState {
    factors: Vec<(Vec<f64>, f64)>,
    prev_theta1: Option<Vec<f64>>,
    skipped: usize,
    resets: usize,
}

impl QNState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn skipped_updates(&self) -> usize {
        self.skipped
    }

    pub fn previous_theta1(&self) -> Option<&[f64]> {
        self.prev_theta1.as_deref()
    }

    pub fn apply_m(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (q, c) in &self.factors {
            let coef = dot(q, v) / c;
            for (o, qi) in out.iter_mut().zip(q) {
                *o += coef * qi;
            }
        }
        out
    }

    /// Drops every secant factor, returning `M` to zero.
    pub fn reset(&mut self) {
        self.factors.clear();
        self.resets += 1;
    }

    pub fn resets(&self) -> usize {
        self.resets
    }

    pub fn dense_m(&self, dim: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(dim, dim);
        for (q, c) in &self.factors {
            let qv = DVector::from_column_slice(q);
            m += &qv * qv.transpose() / *c;
        }
        m
    }

    /// Secant update from the step `theta1 - theta1_prev` and the gradient
    /// difference `k = g(theta1) - g(theta1_prev)` (both at the same interest
    /// block). Returns whether the update was applied.
    pub fn update(&mut self, astar: &MinorizerMatrix, step: &[f64], k: &[f64]) -> Result<bool> {
        let ainv_k = astar.apply_inverse(k)?;
        let r: Vec<f64> = step.iter().zip(&ainv_k).map(|(s, a)| s + a).collect();
        let mk = self.apply_m(k);
        let q: Vec<f64> = r.iter().zip(&mk).map(|(a, b)| a - b).collect();
        let c = dot(&q, k);
        if !(c.abs() >= 1e-8 * norm(&q) * norm(k)) || c == 0.0 {
            self.skipped += 1;
            return Ok(false);
        }
        self.factors.push((q, c));
        Ok(true)
    }
}

/// The closed-form maximizer of the minorizer: `theta1 + A*^{-1} grad1`.
pub fn mm_step_theta1(astar: &MinorizerMatrix, theta1: &[f64], grad1: &[f64]) -> Result<Vec<f64>> {
    let d = astar.apply_inverse(grad1)?;
    Ok(theta1.iter().zip(&d).map(|(t, s)| t + s).collect())
}

/// Accelerated candidate `theta1 + (A*^{-1} - M) grad1` after updating `M`
/// with the secant pair from the previous nuisance iterate. `grad1_prev` is
/// the nuisance gradient at the previous iterate and the current interest
/// block; pass `None` on the first iteration.
pub fn qn_step_theta1(
    state: &mut QNState,
    astar: &MinorizerMatrix,
    theta1: &[f64],
    grad1: &[f64],
    grad1_prev: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if let (Some(prev), Some(gp)) = (state.prev_theta1.clone(), grad1_prev) {
        let step: Vec<f64> = theta1.iter().zip(&prev).map(|(a, b)| a - b).collect();
        let k: Vec<f64> = grad1.iter().zip(gp).map(|(a, b)| a - b).collect();
        if norm(&step) > 0.0 {
            state.update(astar, &step, &k)?;
        }
    }
    let ainv_g = astar.apply_inverse(grad1)?;
    let mg = state.apply_m(grad1);
    Ok(theta1.iter().zip(ainv_g.iter().zip(&mg)).map(|(t, (a, m))| t + a - m).collect())
}

/// Newton direction `C^{-1} grad2`, with a `1e-8 I` ridge when `C` is not
/// positive definite. Returns the direction and whether the ridge was used.
pub fn newton_direction(c: &DMatrix<f64>, grad2: &[f64]) -> Result<(Vec<f64>, bool)> {
    let g = DVector::from_column_slice(grad2);
    if let Some(ch) = c.clone().cholesky() {
        let d = ch.solve(&g);
        if d.iter().all(|v| v.is_finite()) {
            return Ok((d.as_slice().to_vec(), false));
        }
    }
    let ridged = c + DMatrix::identity(c.nrows(), c.ncols()) * 1e-8;
    let d = ridged
        .cholesky()
        .ok_or_else(|| Error::Singular("interest block of the negative Hessian".into()))?
        .solve(&g);
    Ok((d.as_slice().to_vec(), true))
}

/// Outcome of one damped Newton step on the interest block.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta2Step {
    pub theta: Vec<f64>,
    pub loglik: f64,
    pub halvings: usize,
    pub ridge: bool,
    pub moved: bool,
}

/// Newton step on the interest block with step-halving until the objective
/// does not decrease. `theta` is the full vector; `loglik` its value.
pub fn newton_step_theta2(design: &Design, theta: &[f64], loglik: f64, max_halvings: usize) -> Result<Theta2Step> {
    let q = design.n_nuisance();
    let obj = design.evaluate(theta, Want::CURVATURE)?;
    let grad2 = &obj.gradient[q..];
    let c = obj.c.as_ref().expect("curvature requested");
    let (dir, ridge) = newton_direction(c, grad2)?;
    let mut scale = 1.0;
    let mut cand = theta.to_vec();
    for halvings in 0..=max_halvings {
        for (k, d) in dir.iter().enumerate() {
            cand[q + k] = theta[q + k] + scale * d;
        }
        if let Ok(v) = design.value(&cand) {
            if v >= loglik {
                return Ok(Theta2Step { theta: cand, loglik: v, halvings, ridge, moved: true });
            }
        }
        scale *= 0.5;
    }
    Ok(Theta2Step { theta: theta.to_vec(), loglik, halvings: max_halvings, ridge, moved: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iters: usize,
    /// Bound on the Euclidean norm of the parameter change.
    pub tol_theta: f64,
    /// Bound on the relative change of the objective.
    pub tol_loglik: f64,
    pub accelerate: bool,
    pub max_halvings: usize,
    /// Allowed objective decrease, relative to `max(1, |l|)`.
    pub ascent_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iters: 1000, tol_theta: 1e-6, tol_loglik: 1e-6, accelerate: true, max_halvings: 30, ascent_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepChoice {
    Mm,
    QuasiNewton,
    /// Neither candidate improved on the current nuisance block.
    Stay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Objective after the nuisance update.
    pub loglik_step1: f64,
    /// Objective after the interest update.
    pub loglik: f64,
    pub theta1_step: f64,
    pub theta2_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: Theta,
    pub iterations: usize,
    pub initial_loglik: f64,
    pub final_loglik: f64,
    pub final_grad_inf_norm: f64,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
    pub step_choices: Vec<StepChoice>,
    /// Whether any interest step needed the ridge fallback.
    pub ridge_used: bool,
}

impl FitResult {
    /// The whole objective sequence: start, then after each half-step.
    pub fn loglik_sequence(&self) -> Vec<f64> {
        let mut s = vec![self.initial_loglik];
        for t in &self.trace {
            s.push(t.loglik_step1);
            s.push(t.loglik);
        }
        s
    }
}

/// Starting values: nuisance weights matching the observed density, the
/// sparsity weight at zero, response weights from an independence GLM and all
/// remaining interest weights at zero.
pub fn warm_start(spec: &ModelSpec, data: &Dataset) -> Result<Theta> {
    let n = spec.n_units();
    let mut theta = Theta::zeros(spec);
    let slots = if spec.is_directed() { n * (n - 1) } else { n * (n - 1) / 2 };
    let density = (data.network.edge_count() as f64 / slots as f64).clamp(0.5 / slots as f64, 1.0 - 0.5 / slots as f64);
    let base = logit(density);
    if spec.is_directed() {
        theta.nuisance_mut()[..n].fill(base);
    } else {
        theta.nuisance_mut().fill(0.5 * base);
    }
    let cols = spec.unit_terms();
    let design = DMatrix::from_fn(n, cols.len(), |i, c| cols[c].0.part1(&data.covariates, i));
    if let Ok(glm) = fit_glm(spec.family(), &design, &data.responses) {
        if glm.coefficients.iter().all(|b| b.is_finite() && b.abs() < 50.0) {
            for (c, &(_, k)) in cols.iter().enumerate() {
                theta.interest_mut()[k] = glm.coefficients[c];
            }
        }
    }
    Ok(theta)
}

/// Maximizes the pseudo-loglikelihood from `init`.
pub fn fit(spec: &ModelSpec, pop: &Population, data: &Dataset, init: &Theta, options: &FitOptions) -> Result<FitResult> {
    spec.check_theta(init)?;
    let design = Design::new(spec, pop, data)?;
    fit_design(&design, &MinorizerMatrix::for_spec(spec)?, init, options)
}

pub fn fit_design(design: &Design, astar: &MinorizerMatrix, init: &Theta, options: &FitOptions) -> Result<FitResult> {
    let q = design.n_nuisance();
    if init.len() != design.n_params() || init.n_nuisance() != q || astar.dim() != q {
        return Err(Error::Dimension("initial value does not match the design".into()));
    }
    if !init.is_finite() {
        return Err(Error::Invalid("initial value is not finite".into()));
    }
    let tol = |l: f64| options.ascent_tol * l.abs().max(1.0);
    let mut theta = init.values().to_vec();
    let mut obj = design.evaluate(&theta, Want::GRADIENT).map_err(|_| Error::NonFiniteObjective { iteration: 0 })?;
    let initial_loglik = obj.value;
    let mut loglik = obj.value;
    let mut qn = QNState::new();
    let mut trace = Vec::new();
    let mut choices = Vec::new();
    let mut ridge_used = false;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=options.max_iters {
        iterations = it;
        let old = theta.clone();
        let old_loglik = loglik;

        // Step 1: nuisance block.
        let grad1 = obj.gradient[..q].to_vec();
        let theta1 = theta[..q].to_vec();
        let mm = mm_step_theta1(astar, &theta1, &grad1)?;
        let eval1 = |t1: &[f64]| -> f64 {
            let mut full = theta.clone();
            full[..q].copy_from_slice(t1);
            design.value(&full).unwrap_or(f64::NEG_INFINITY)
        };
        let mm_value = eval1(&mm);
        if mm_value.is_nan() || mm_value < loglik - tol(loglik) {
            if mm_value.is_finite() {
                return Err(Error::AscentViolation { iteration: it, drop: loglik - mm_value });
            }
            return Err(Error::NonFiniteObjective { iteration: it });
        }
        let mut best = (StepChoice::Mm, mm, mm_value);
        if options.accelerate {
            let grad1_prev = match qn.prev_theta1.clone() {
                Some(prev) => {
                    let mut full = theta.clone();
                    full[..q].copy_from_slice(&prev);
                    Some(design.evaluate(&full, Want::GRADIENT)?.gradient[..q].to_vec())
                }
                None => None,
            };
            let cand = qn_step_theta1(&mut qn, astar, &theta1, &grad1, grad1_prev.as_deref())?;
            if qn.rank() > 0 {
                let v = eval1(&cand);
                if v > best.2 {
                    best = (StepChoice::QuasiNewton, cand, v);
                } else {
                    qn.reset();
                }
            }
            qn.prev_theta1 = Some(theta1.clone());
        }
        let (choice, new1, value1) = best;
        // exact MM steps never descend; a drop within the ascent tolerance
        // is rounding
        let loglik_step1 = if value1 >= loglik - tol(loglik) {
            theta[..q].copy_from_slice(&new1);
            choices.push(choice);
            value1
        } else {
            choices.push(StepChoice::Stay);
            loglik
        };

        // Step 2: interest block.
        let step2 = newton_step_theta2(design, &theta, loglik_step1, options.max_halvings)?;
        ridge_used |= step2.ridge;
        theta = step2.theta;
        obj = design.evaluate(&theta, Want::GRADIENT).map_err(|_| Error::NonFiniteObjective { iteration: it })?;
        loglik = obj.value;

        let d1 = norm_diff(&theta[..q], &old[..q]);
        let d2 = norm_diff(&theta[q..], &old[q..]);
        trace.push(TraceEntry { loglik_step1, loglik, theta1_step: d1, theta2_step: d2 });
        let dtheta = (d1 * d1 + d2 * d2).sqrt();
        let rel = if old_loglik != 0.0 { ((loglik - old_loglik) / old_loglik).abs() } else { (loglik - old_loglik).abs() };
        if dtheta < options.tol_theta && rel < options.tol_loglik {
            converged = true;
            break;
        }
    }
    let final_grad_inf_norm = obj.gradient.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    Ok(FitResult {
        theta_hat: Theta::new(theta, q)?,
        iterations,
        initial_loglik,
        final_loglik: loglik,
        final_grad_inf_norm,
        converged,
        trace,
        step_choices: choices,
        ridge_used,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn undirected_inverse_n4() {
        let m = MinorizerMatrix::new(4, false).unwrap();
        let dense = m.dense();
        assert_abs_diff_eq!(dense[(0, 0)], 0.75);
        assert_abs_diff_eq!(dense[(0, 1)], 0.25);
        let col = m.apply_inverse(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(col[0], 5.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(col[1], -1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(m.apply_inverse(&[0.0; 4]).unwrap(), vec![0.0; 4]);
        assert!(MinorizerMatrix::new(2, false).is_err());
    }

    #[test]
    fn directed_inverse_matches_dense_solve() {
        let m = MinorizerMatrix::new(5, true).unwrap();
        let dense = m.dense();
        assert_abs_diff_eq!(dense[(0, 0)], 1.0);
        assert_abs_diff_eq!(dense[(0, 5)], 0.0);
        assert_abs_diff_eq!(dense[(0, 6)], 0.25);
        let v: Vec<f64> = (0..9).map(|k| (k as f64 * 0.7).sin()).collect();
        let expected = dense.lu().solve(&DVector::from_vec(v.clone())).unwrap();
        let got = m.apply_inverse(&v).unwrap();
        for k in 0..9 {
            assert_abs_diff_eq!(got[k], expected[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let m = MinorizerMatrix::new(6, false).unwrap();
        let t = [0.1, -0.2, 0.3, 0.0, 1.0, -1.0];
        assert_eq!(mm_step_theta1(&m, &t, &[0.0; 6]).unwrap(), t.to_vec());
    }

    #[test]
    fn first_qn_candidate_is_mm() {
        let m = MinorizerMatrix::new(5, false).unwrap();
        let t = [0.1, -0.2, 0.3, 0.0, 1.0];
        let g = [0.5, -0.1, 0.2, 0.3, -0.4];
        let mut st = QNState::new();
        let qn = qn_step_theta1(&mut st, &m, &t, &g, None).unwrap();
        assert_eq!(qn, mm_step_theta1(&m, &t, &g).unwrap());
    }

    #[test]
    fn sr1_skips_degenerate_pairs() {
        let m = MinorizerMatrix::new(4, false).unwrap();
        let mut st = QNState::new();
        // k = 0 gives c = 0
        assert!(!st.update(&m, &[1.0, 0.0, 0.0, 0.0], &[0.0; 4]).unwrap());
        assert_eq!(st.skipped_updates(), 1);
        assert_eq!(st.rank(), 0);
    }

    #[test]
    fn theta2_step_keeps_stationary_point() {
        use crate::model::{Network, ResponseFamily};
        let spec = ModelSpec::undirected_example(4, ResponseFamily::bernoulli()).unwrap();
        let pop = Population::isolated(4).unwrap();
        // balanced responses with x = 0: alpha_y = 0 is stationary; beta direction has zero curvature
        let data = Dataset::new(DMatrix::zeros(4, 1), vec![1.0, 0.0, 1.0, 0.0], Network::empty(4, false)).unwrap();
        let design = Design::new(&spec, &pop, &data).unwrap();
        let theta = vec![0.0; 10];
        let l = design.value(&theta).unwrap();
        let s = newton_step_theta2(&design, &theta, l, 30).unwrap();
        assert_abs_diff_eq!(s.theta[5], 0.0, epsilon = 1e-12);
        assert!(s.ridge);
    }
}
