//! Pseudo-loglikelihood, its gradient and the partitioned negative Hessian.
//!
//! A [`Design`] caches every theta-independent quantity of a dataset: the
//! coefficient rows of the response conditionals, the change-statistic rows
//! of the overlap pairs, and a compact list of the remaining pairs, whose
//! rows only depend on whether the reverse connection is present. Every
//! evaluation then walks units, overlap pairs and remaining pairs in a fixed
//! order, so results are bit-reproducible.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::family::{log1p_exp, logistic, FamilyKind, ResponseFamily};
use crate::model::{scaled_responses, Dataset, ModelSpec, PairTerm, Population, TermContext, Theta, TwoPaths};

const NO_TARGET: u32 = u32::MAX;

/// Which derivative information to assemble alongside the value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Want {
    pub gradient: bool,
    /// The interest block `C` of the negative Hessian.
    pub curvature: bool,
    /// The nuisance blocks `A` and `B` as well (dense; `O(q^2)` memory).
    pub full_hessian: bool,
}

impl Want {
    pub const VALUE: Want = Want { gradient: false, curvature: false, full_hessian: false };
    pub const GRADIENT: Want = Want { gradient: true, curvature: false, full_hessian: false };
    pub const CURVATURE: Want = Want { gradient: true, curvature: true, full_hessian: false };
    pub const FULL: Want = Want { gradient: true, curvature: true, full_hessian: true };
}

/// Blocks of the negative Hessian, partitioned as `[[A, B], [B', C]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianBlocks {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl HessianBlocks {
    pub fn assemble(&self) -> DMatrix<f64> {
        let q = self.a.nrows();
        let r = self.c.nrows();
        let mut h = DMatrix::zeros(q + r, q + r);
        h.view_mut((0, 0), (q, q)).copy_from(&self.a);
        h.view_mut((0, q), (q, r)).copy_from(&self.b);
        h.view_mut((q, 0), (r, q)).copy_from(&self.b.transpose());
        h.view_mut((q, q), (r, r)).copy_from(&self.c);
        h
    }
}

/// Value with optional gradient and negative-Hessian blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub value: f64,
    /// Empty unless requested.
    pub gradient: Vec<f64>,
    pub c: Option<DMatrix<f64>>,
    pub a: Option<DMatrix<f64>>,
    pub b: Option<DMatrix<f64>>,
}

impl Objective {
    pub fn blocks(&self) -> Option<HessianBlocks> {
        Some(HessianBlocks { a: self.a.clone()?, b: self.b.clone()?, c: self.c.clone()? })
    }
}

#[derive(Debug, Clone)]
struct PairRow {
    a: u32,
    b: u32,
    t1: u32,
    t2: u32,
    z: bool,
}

/// Theta-independent quantities of one dataset.
#[derive(Debug, Clone)]
pub struct Design {
    n: usize,
    q: usize,
    r: usize,
    family: ResponseFamily,
    responses: Vec<f64>,
    log_base_sum: f64,
    /// `n x r`, row-major.
    unit_rows: Vec<f64>,
    overlap: Vec<PairRow>,
    /// `overlap.len() x r`, row-major.
    overlap_rows: Vec<f64>,
    /// Remaining pairs; the row is `rest_rows[class]`.
    rest: Vec<PairRow>,
    rest_class: Vec<u8>,
    rest_targets: Vec<[u32; 2]>,
    rest_z: Vec<bool>,
    rest_rows: [Vec<f64>; 2],
}

fn targets(spec: &ModelSpec, a: usize, b: usize) -> (u32, u32) {
    let n = spec.n_units();
    let mut out = [NO_TARGET; 2];
    let mut k = 0;
    for &(term, slot) in spec.pair_terms() {
        if slot.is_none() {
            for t in term.nuisance_targets(n, a, b).into_iter().flatten() {
                out[k] = t as u32;
                k += 1;
            }
        }
    }
    (out[0], out[1])
}

impl Design {
    pub fn new(spec: &ModelSpec, pop: &Population, data: &Dataset) -> Result<Self> {
        spec.validate(pop, data)?;
        let n = spec.n_units();
        let r = spec.n_interest();
        let ystar = scaled_responses(spec, &data.responses);
        let paths = TwoPaths::build(pop, &data.network);
        let ctx = TermContext {
            pop,
            covariates: &data.covariates,
            ystar: &ystar,
            net: &data.network,
            paths: &paths,
            log_n: (n as f64).ln(),
        };
        let family = spec.family();

        let mut unit_rows = vec![0.0; n * r];
        for i in 0..n {
            let row = &mut unit_rows[i * r..(i + 1) * r];
            for &(term, k) in spec.unit_terms() {
                row[k] += term.part1(&data.covariates, i);
            }
            for &j in pop.overlap_partners(i) {
                for &(term, slot) in spec.pair_terms() {
                    let Some(k) = slot else { continue };
                    if !term.involves_responses() {
                        continue;
                    }
                    row[k] += term.y_coef(&ctx, i, j, i);
                    if spec.is_directed() {
                        row[k] += term.y_coef(&ctx, j, i, i);
                    }
                }
            }
        }
        let log_base_sum = data.responses.iter().map(|&y| family.log_base(y)).sum();

        let mut overlap = Vec::new();
        let mut overlap_rows = Vec::new();
        let mut push_overlap = |a: usize, b: usize| {
            let (t1, t2) = targets(spec, a, b);
            overlap.push(PairRow { a: a as u32, b: b as u32, t1, t2, z: data.network.has_edge(a, b) });
            let start = overlap_rows.len();
            overlap_rows.resize(start + r, 0.0);
            for &(term, slot) in spec.pair_terms() {
                if let Some(k) = slot {
                    overlap_rows[start + k] += term.z_change(&ctx, a, b);
                }
            }
        };
        for &(a, b) in pop.overlap_pairs() {
            push_overlap(a, b);
            if spec.is_directed() {
                push_overlap(b, a);
            }
        }

        let log_n = ctx.log_n;
        let mut rest_rows = [vec![0.0; r], vec![0.0; r]];
        for (class, row) in rest_rows.iter_mut().enumerate() {
            for &(term, slot) in spec.pair_terms() {
                if let Some(k) = slot {
                    row[k] += term.nonoverlap_change(log_n, class as f64);
                }
            }
        }
        let has_reciprocity = spec.pair_terms().iter().any(|(t, _)| *t == PairTerm::Reciprocity);
        let mut rest = Vec::new();
        let mut rest_class = Vec::new();
        for a in 0..n {
            let lo = if spec.is_directed() { 0 } else { a + 1 };
            for b in lo..n {
                if a == b || pop.overlaps(a, b) {
                    continue;
                }
                let (t1, t2) = targets(spec, a, b);
                rest.push(PairRow { a: a as u32, b: b as u32, t1, t2, z: data.network.has_edge(a, b) });
                let class = spec.is_directed() && has_reciprocity && data.network.has_edge(b, a);
                rest_class.push(class as u8);
            }
        }

        let q = spec.n_nuisance();
        let pad = |t: u32| if t == NO_TARGET { q as u32 } else { t };
        let rest_targets = rest.iter().map(|pr| [pad(pr.t1), pad(pr.t2)]).collect();
        let rest_z = rest.iter().map(|pr| pr.z).collect();
        Ok(Self {
            n,
            q,
            r,
            family,
            responses: data.responses.clone(),
            log_base_sum,
            unit_rows,
            overlap,
            overlap_rows,
            rest,
            rest_class,
            rest_targets,
            rest_z,
            rest_rows,
        })
    }

    pub fn n_units(&self) -> usize {
        self.n
    }

    pub fn n_nuisance(&self) -> usize {
        self.q
    }

    pub fn n_interest(&self) -> usize {
        self.r
    }

    pub fn n_params(&self) -> usize {
        self.q + self.r
    }

    /// Number of pair conditionals entering the objective.
    pub fn n_pairs(&self) -> usize {
        self.overlap.len() + self.rest.len()
    }

    /// Conditional-response coefficient row of unit `i`.
    pub fn unit_row(&self, i: usize) -> &[f64] {
        &self.unit_rows[i * self.r..(i + 1) * self.r]
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::Dimension(format!(
                "theta has {} entries, objective needs {}",
                theta.len(),
                self.n_params()
            )));
        }
        Ok(())
    }

    /// Linear predictor of the response conditional of unit `i`.
    pub fn unit_eta(&self, theta: &[f64], i: usize) -> f64 {
        dot(self.unit_row(i), &theta[self.q..])
    }

    pub fn evaluate(&self, theta: &[f64], want: Want) -> Result<Objective> {
        self.check(theta)?;
        let (q, r) = (self.q, self.r);
        let p = q + r;
        let nuisance = &theta[..q];
        let interest = &theta[q..];
        let psi = self.family.psi();
        let want_c = want.curvature || want.full_hessian;

        let mut value = self.log_base_sum;
        let mut grad = if want.gradient { vec![0.0; p] } else { Vec::new() };
        let mut c = if want_c { Some(DMatrix::zeros(r, r)) } else { None };
        let mut a_blk = if want.full_hessian { Some(DMatrix::zeros(q, q)) } else { None };
        let mut b_blk = if want.full_hessian { Some(DMatrix::zeros(q, r)) } else { None };

        for i in 0..self.n {
            let row = self.unit_row(i);
            let eta = dot(row, interest);
            let y = self.responses[i];
            let located = |e: Error| relocate(e, format!("response of unit {i}"));
            let cum = self.family.cumulant(eta).map_err(located)?;
            value += (eta * y - cum) / psi;
            if want.gradient {
                let resid = (y - self.family.mean(eta).map_err(located)?) / psi;
                axpy(resid, row, &mut grad[q..]);
            }
            if let Some(c) = c.as_mut() {
                let w = self.family.variance_function(eta).map_err(located)? / psi;
                add_outer(c, w, row);
            }
        }

        let mut pair = |pr: &PairRow, row: &[f64]| -> Result<()> {
            let mut eta = dot(row, interest);
            if pr.t1 != NO_TARGET {
                eta += nuisance[pr.t1 as usize];
            }
            if pr.t2 != NO_TARGET {
                eta += nuisance[pr.t2 as usize];
            }
            if !eta.is_finite() {
                return Err(Error::NonFinite { location: format!("pair ({}, {})", pr.a, pr.b) });
            }
            let z = pr.z as u8 as f64;
            value += z * eta - log1p_exp(eta);
            if want.gradient || want_c {
                let pi = logistic(eta);
                if want.gradient {
                    let resid = z - pi;
                    axpy(resid, row, &mut grad[q..]);
                    for t in [pr.t1, pr.t2] {
                        if t != NO_TARGET {
                            grad[t as usize] += resid;
                        }
                    }
                }
                let w = pi * (1.0 - pi);
                if let Some(c) = c.as_mut() {
                    add_outer(c, w, row);
                }
                if let (Some(a), Some(b)) = (a_blk.as_mut(), b_blk.as_mut()) {
                    for t in [pr.t1, pr.t2] {
                        if t == NO_TARGET {
                            continue;
                        }
                        let t = t as usize;
                        for u in [pr.t1, pr.t2] {
                            if u != NO_TARGET {
                                a[(t, u as usize)] += w;
                            }
                        }
                        for (k, &s) in row.iter().enumerate() {
                            b[(t, k)] += w * s;
                        }
                    }
                }
            }
            Ok(())
        };
        for (m, pr) in self.overlap.iter().enumerate() {
            pair(pr, &self.overlap_rows[m * r..(m + 1) * r])?;
        }
        self.rest_pairs(theta, want, &mut value, &mut grad, c.as_mut(), a_blk.as_mut(), b_blk.as_mut())?;
        if !value.is_finite() {
            return Err(Error::NonFinite { location: "pseudo-loglikelihood".into() });
        }
        Ok(Objective { value, gradient: grad, c, a: a_blk, b: b_blk })
    }

    /// Pairs outside every overlap share one of two interest rows, so their
    /// interest contributions are accumulated per class. Missing nuisance
    /// targets point at a padding slot `q`.
    #[allow(clippy::too_many_arguments)]
    fn rest_pairs(
        &self,
        theta: &[f64],
        want: Want,
        value: &mut f64,
        grad: &mut [f64],
        c: Option<&mut DMatrix<f64>>,
        a_blk: Option<&mut DMatrix<f64>>,
        b_blk: Option<&mut DMatrix<f64>>,
    ) -> Result<()> {
        let q = self.q;
        let interest = &theta[q..];
        let mut nuis = theta[..q].to_vec();
        nuis.push(0.0);
        let kappa = [dot(&self.rest_rows[0], interest), dot(&self.rest_rows[1], interest)];
        let want_w = want.curvature || want.full_hessian;
        let mut resid_sum = [0.0; 2];
        let mut w_sum = [0.0; 2];
        let mut ngrad = if want.gradient { vec![0.0; q + 1] } else { Vec::new() };
        let mut full = if want.full_hessian {
            // diagonal of A, per-target class weight sums
            Some((vec![0.0; q + 1], vec![[0.0; 2]; q + 1]))
        } else {
            None
        };
        let mut off_diag: Vec<(u32, u32, f64)> = Vec::new();
        let mut val = 0.0;
        for ((t, &z), &class) in self.rest_targets.iter().zip(&self.rest_z).zip(&self.rest_class) {
            let (t1, t2) = (t[0] as usize, t[1] as usize);
            let cl = class as usize;
            let eta = kappa[cl] + nuis[t1] + nuis[t2];
            let e = (-eta.abs()).exp();
            let z = z as u8 as f64;
            val += z * eta - (eta.max(0.0) + e.ln_1p());
            if !want.gradient && !want_w {
                continue;
            }
            let pi = if eta >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
            if want.gradient {
                let resid = z - pi;
                resid_sum[cl] += resid;
                ngrad[t1] += resid;
                ngrad[t2] += resid;
            }
            if want_w {
                let w = pi * (1.0 - pi);
                w_sum[cl] += w;
                if let Some((diag, by_class)) = full.as_mut() {
                    diag[t1] += w;
                    diag[t2] += w;
                    by_class[t1][cl] += w;
                    by_class[t2][cl] += w;
                    off_diag.push((t1 as u32, t2 as u32, w));
                }
            }
        }
        if !val.is_finite() {
            let bad = self
                .rest
                .iter()
                .zip(&self.rest_targets)
                .zip(&self.rest_class)
                .find(|((_, t), &cl)| !(kappa[cl as usize] + nuis[t[0] as usize] + nuis[t[1] as usize]).is_finite())
                .map(|((pr, _), _)| format!("pair ({}, {})", pr.a, pr.b))
                .unwrap_or_else(|| "connection conditionals".into());
            return Err(Error::NonFinite { location: bad });
        }
        *value += val;
        if want.gradient {
            for (g, n) in grad[..q].iter_mut().zip(&ngrad) {
                *g += n;
            }
            for cl in 0..2 {
                axpy(resid_sum[cl], &self.rest_rows[cl], &mut grad[q..]);
            }
        }
        if let Some(c) = c {
            for cl in 0..2 {
                add_outer(c, w_sum[cl], &self.rest_rows[cl]);
            }
        }
        if let (Some((diag, by_class)), Some(a), Some(b)) = (full, a_blk, b_blk) {
            for t in 0..q {
                a[(t, t)] += diag[t];
                for cl in 0..2 {
                    for (k, &s) in self.rest_rows[cl].iter().enumerate() {
                        b[(t, k)] += by_class[t][cl] * s;
                    }
                }
            }
            for (t1, t2, w) in off_diag {
                let (t1, t2) = (t1 as usize, t2 as usize);
                if t1 < q && t2 < q {
                    a[(t1, t2)] += w;
                    a[(t2, t1)] += w;
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.evaluate(theta, Want::VALUE)?.value)
    }

    /// Conditional connection probability of every pair conditional, in
    /// evaluation order.
    pub fn pair_probabilities(&self, theta: &[f64]) -> Result<Vec<((usize, usize), f64)>> {
        self.check(theta)?;
        let (q, r) = (self.q, self.r);
        let interest = &theta[q..];
        let eta_of = |pr: &PairRow, row: &[f64]| {
            let mut eta = dot(row, interest);
            for t in [pr.t1, pr.t2] {
                if t != NO_TARGET {
                    eta += theta[t as usize];
                }
            }
            ((pr.a as usize, pr.b as usize), logistic(eta))
        };
        let mut out: Vec<_> = self
            .overlap
            .iter()
            .enumerate()
            .map(|(m, pr)| eta_of(pr, &self.overlap_rows[m * r..(m + 1) * r]))
            .collect();
        out.extend(self.rest.iter().zip(&self.rest_class).map(|(pr, &c)| eta_of(pr, &self.rest_rows[c as usize])));
        Ok(out)
    }

    pub fn family_kind(&self) -> FamilyKind {
        self.family.kind()
    }
}

fn relocate(e: Error, location: String) -> Error {
    match e {
        Error::NonFinite { .. } => Error::NonFinite { location },
        Error::PoissonOverflow { eta, cap, .. } => Error::PoissonOverflow { eta, cap, location },
        other => other,
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn add_outer(m: &mut DMatrix<f64>, w: f64, row: &[f64]) {
    if w == 0.0 {
        return;
    }
    for (k, &rk) in row.iter().enumerate() {
        if rk == 0.0 {
            continue;
        }
        let wk = w * rk;
        for (l, &rl) in row.iter().enumerate() {
            m[(k, l)] += wk * rl;
        }
    }
}

/// Sum of the log full conditionals of every response and connection.
pub fn pseudo_loglik(spec: &ModelSpec, pop: &Population, data: &Dataset, theta: &Theta) -> Result<f64> {
    spec.check_theta(theta)?;
    Design::new(spec, pop, data)?.value(theta.values())
}

pub fn gradient(spec: &ModelSpec, pop: &Population, data: &Dataset, theta: &Theta) -> Result<Vec<f64>> {
    spec.check_theta(theta)?;
    Ok(Design::new(spec, pop, data)?.evaluate(theta.values(), Want::GRADIENT)?.gradient)
}

pub fn neg_hessian_blocks(spec: &ModelSpec, pop: &Population, data: &Dataset, theta: &Theta) -> Result<HessianBlocks> {
    spec.check_theta(theta)?;
    let obj = Design::new(spec, pop, data)?.evaluate(theta.values(), Want::FULL)?;
    Ok(obj.blocks().expect("full hessian requested"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Network, ResponseFamily};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn figure_one() -> Population {
        Population::new(vec![vec![0, 1], vec![0, 1, 2], vec![1, 2]]).unwrap()
    }

    #[test]
    fn zero_theta_undirected_is_six_halves() {
        let spec = ModelSpec::undirected_example(3, ResponseFamily::bernoulli()).unwrap();
        let net = Network::from_edges(3, false, &[(0, 2)]).unwrap();
        let data = Dataset::new(DMatrix::from_element(3, 1, 0.3), vec![1.0, 0.0, 1.0], net).unwrap();
        let v = pseudo_loglik(&spec, &figure_one(), &data, &Theta::zeros(&spec)).unwrap();
        assert_abs_diff_eq!(v, -6.0 * 2f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(v, -4.158883, epsilon = 1e-6);
    }

    #[test]
    fn zero_theta_directed_counts_ordered_pairs() {
        let spec = ModelSpec::directed_application(3, ResponseFamily::bernoulli()).unwrap();
        let net = Network::from_edges(3, true, &[(0, 1), (2, 1)]).unwrap();
        let data = Dataset::new(DMatrix::from_element(3, 4, 1.0), vec![0.0, 1.0, 1.0], net).unwrap();
        let v = pseudo_loglik(&spec, &figure_one(), &data, &Theta::zeros(&spec)).unwrap();
        assert_abs_diff_eq!(v, -9.0 * 2f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn zero_theta_nuisance_block_is_quarter_incidence() {
        let n = 6;
        let spec = ModelSpec::undirected_example(n, ResponseFamily::bernoulli()).unwrap();
        let pop = Population::new(vec![vec![1], vec![2], vec![3], vec![4], vec![5], vec![0]]).unwrap();
        let net = Network::from_edges(n, false, &[(0, 1), (3, 5)]).unwrap();
        let data = Dataset::new(DMatrix::from_element(n, 1, 0.5), vec![1.0, 0.0, 1.0, 0.0, 1.0, 1.0], net).unwrap();
        let blocks = neg_hessian_blocks(&spec, &pop, &data, &Theta::zeros(&spec)).unwrap();
        for i in 0..n {
            for j in 0..n {
                let expected = if i == j { (n - 2) as f64 + 1.0 } else { 1.0 };
                assert_abs_diff_eq!(4.0 * blocks.a[(i, j)], expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn hand_gradient_at_zero() {
        // Figure-1 population, one edge (0,1), y = (1, 0, 0), x = 0.
        // Pair residuals z - 1/2: (0,1): +1/2, (0,2): -1/2, (1,2): -1/2.
        let spec = ModelSpec::undirected_example(3, ResponseFamily::bernoulli()).unwrap();
        let net = Network::from_edges(3, false, &[(0, 1)]).unwrap();
        let data = Dataset::new(DMatrix::zeros(3, 1), vec![1.0, 0.0, 0.0], net).unwrap();
        let g = gradient(&spec, &figure_one(), &data, &Theta::zeros(&spec)).unwrap();
        // alpha_z: unit 0 in pairs (0,1),(0,2): 0; unit 1: (0,1),(1,2): 0; unit 2: -1
        assert_eq!(&g[..3], &[0.0, 0.0, -1.0]);
        // lambda: no non-overlap pairs
        assert_eq!(g[3], 0.0);
        // alpha_y: sum (y - 1/2) = 1/2 - 1/2 - 1/2
        assert_eq!(g[4], -0.5);
        // gamma_yyz: pair (0,1) change y0 y1 = 0; unit rows: y-coefs y_j z_ij: unit 1 gets y0 = 1 -> (0 - 1/2)*1
        assert_eq!(g[8], -0.5);
    }

    #[test]
    fn gaussian_independence_score_is_least_squares() {
        // No network effects: the response block is the weighted LS score X'(y - X b) / psi.
        let n = 5;
        let psi = 2.0;
        let spec = ModelSpec::undirected_example(n, ResponseFamily::gaussian(psi).unwrap()).unwrap();
        let pop = Population::isolated(n).unwrap();
        let x = [0.1, 0.5, -0.3, 1.2, 0.7];
        let y = [0.3, -1.0, 2.0, 0.4, 1.1];
        let data = Dataset::new(DMatrix::from_column_slice(n, 1, &x), y.to_vec(), Network::empty(n, false)).unwrap();
        let (a, b) = (0.4, -0.8);
        let theta = Theta::from_parts(&[0.0; 5], &[0.0, a, b, 0.0, 0.0, 0.0]);
        let g = gradient(&spec, &pop, &data, &theta).unwrap();
        // the conditional mean of y is eta itself
        let resid: Vec<f64> = (0..n).map(|i| (y[i] - (a + b * x[i])) / psi).collect();
        let g0: f64 = resid.iter().sum();
        let g1: f64 = resid.iter().zip(&x).map(|(r, x)| r * x).sum();
        assert_abs_diff_eq!(g[n + 1], g0, epsilon = 1e-14);
        assert_abs_diff_eq!(g[n + 2], g1, epsilon = 1e-14);
    }

    #[test]
    fn poisson_overflow_names_unit() {
        let spec = ModelSpec::undirected_example(3, ResponseFamily::poisson()).unwrap();
        let data = Dataset::new(DMatrix::zeros(3, 1), vec![0.0, 3.0, 1.0], Network::empty(3, false)).unwrap();
        let theta = Theta::from_parts(&[0.0; 3], &[0.0, 400.0, 0.0, 0.0, 0.0, 0.0]);
        let err = pseudo_loglik(&spec, &figure_one(), &data, &theta).unwrap_err();
        assert!(matches!(err, Error::PoissonOverflow { ref location, .. } if location.contains("unit 0")));
    }
}
