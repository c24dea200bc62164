//! Goodness-of-fit diagnostics: simulated reference envelopes for network
//! and spillover statistics, and predictive comparison of response
//! probabilities against a covariates-only logistic regression.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{fit_glm, GlmFit};
use crate::model::family::logistic;
use crate::model::{Dataset, FamilyKind, ModelSpec, Network, Population, ResponseFamily, Theta};
use crate::pseudolik::Design;
use crate::sampler::{simulate, GibbsConfig};

/// Number of connected pairs with `k` shared partners, `k = 0..=N-2`.
///
/// Undirected: partners are common neighbors. Directed: for an edge
/// `i -> j`, partners are units `k` with `i -> k -> j`.
pub fn shared_partner_distribution(net: &Network) -> Vec<u64> {
    let n = net.n_units();
    let mut hist = vec![0u64; n.saturating_sub(1).max(1)];
    for (i, j) in net.edge_list() {
        let k = if net.is_directed() {
            net.out_neighbors(i).iter().filter(|&&k| k != j && net.has_edge(k, j)).count()
        } else {
            net.out_neighbors(i).iter().filter(|&&k| k != j && net.has_edge(j, k)).count()
        };
        hist[k] += 1;
    }
    hist
}

/// Per-unit `(in_degree, out_degree)` in the subnetwork of pairs `(i, j)`
/// with `z_ij = 1`, `x_{i,treat} = 1`, `y_j = 1` and overlapping
/// neighborhoods. An undirected edge counts in both directions.
pub fn spillover_degrees(pop: &Population, data: &Dataset, treat: usize) -> Result<Vec<(usize, usize)>> {
    let n = data.n_units();
    if pop.n_units() != n {
        return Err(Error::Dimension(format!("population has {} units, data {n}", pop.n_units())));
    }
    if treat >= data.covariates.ncols() {
        return Err(Error::Dimension(format!("no covariate column {treat}")));
    }
    let mut deg = vec![(0, 0); n];
    for i in 0..n {
        if data.covariates[(i, treat)] != 1.0 {
            continue;
        }
        for &j in data.network.out_neighbors(i) {
            if data.responses[j] == 1.0 && pop.overlaps(i, j) {
                deg[i].1 += 1;
                deg[j].0 += 1;
            }
        }
    }
    Ok(deg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    EdgeCount,
    SharedPartners,
    /// Histogram of spillover in-degrees (treatment column 0).
    SpilloverIn,
    /// Histogram of spillover out-degrees (treatment column 0).
    SpilloverOut,
    ResponseSum,
}

impl Statistic {
    pub const ALL: [Statistic; 5] =
        [Statistic::EdgeCount, Statistic::SharedPartners, Statistic::SpilloverIn, Statistic::SpilloverOut, Statistic::ResponseSum];

    pub fn name(&self) -> &'static str {
        match self {
            Statistic::EdgeCount => "edge_count",
            Statistic::SharedPartners => "shared_partners",
            Statistic::SpilloverIn => "spillover_in",
            Statistic::SpilloverOut => "spillover_out",
            Statistic::ResponseSum => "response_sum",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown statistic `{s}`")))
    }

    /// The statistic as a series indexed by `k` (length 1 for scalars).
    pub fn compute(&self, pop: &Population, data: &Dataset) -> Result<Vec<f64>> {
        let histogram = |values: Vec<usize>| {
            let mut h = vec![0.0; values.iter().max().map_or(1, |m| m + 1)];
            for v in values {
                h[v] += 1.0;
            }
            h
        };
        Ok(match self {
            Statistic::EdgeCount => vec![data.network.edge_count() as f64],
            Statistic::SharedPartners => shared_partner_distribution(&data.network).into_iter().map(|c| c as f64).collect(),
            Statistic::SpilloverIn => histogram(spillover_degrees(pop, data, 0)?.into_iter().map(|d| d.0).collect()),
            Statistic::SpilloverOut => histogram(spillover_degrees(pop, data, 0)?.into_iter().map(|d| d.1).collect()),
            Statistic::ResponseSum => vec![data.responses.iter().sum()],
        })
    }
}

/// Simulated distribution of one coordinate of a statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub min: f64,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
    pub max: f64,
}

impl Envelope {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        Some(Self {
            min: s[0],
            q05: quantile_sorted(&s, 0.05),
            median: quantile_sorted(&s, 0.5),
            q95: quantile_sorted(&s, 0.95),
            max: s[s.len() - 1],
        })
    }

    /// Whether `v` lies in `[q05, q95]`.
    pub fn covers(&self, v: f64) -> bool {
        self.q05 <= v && v <= self.q95
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(s: &[f64], p: f64) -> f64 {
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofPoint {
    pub k: usize,
    pub observed: f64,
    pub envelope: Option<Envelope>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofSeries {
    pub statistic: Statistic,
    pub points: Vec<GofPoint>,
}

impl GofSeries {
    /// Share of coordinates whose observed value lies inside the 90%
    /// envelope. Coordinates where the observed value and every simulation
    /// are zero are skipped.
    pub fn coverage(&self) -> Option<f64> {
        let rows: Vec<bool> = self
            .points
            .iter()
            .filter_map(|p| p.envelope.map(|e| (p.observed, e)))
            .filter(|(o, e)| !(*o == 0.0 && e.max == 0.0))
            .map(|(o, e)| e.covers(o))
            .collect();
        (!rows.is_empty()).then(|| rows.iter().filter(|c| **c).count() as f64 / rows.len() as f64)
    }
}

/// Simulates `n_sims` datasets from the model at `theta` (covariates
/// fixed, chain started from the observed state) and summarizes each
/// selected statistic against its observed value.
pub fn gof_reference(
    spec: &ModelSpec,
    pop: &Population,
    data: &Dataset,
    theta: &Theta,
    stats: &[Statistic],
    n_sims: usize,
    gibbs: &GibbsConfig,
) -> Result<Vec<GofSeries>> {
    spec.validate(pop, data)?;
    let observed: Vec<Vec<f64>> = stats.iter().map(|s| s.compute(pop, data)).collect::<Result<_>>()?;
    let config = GibbsConfig { initial_state: Some((data.responses.clone(), data.network.clone())), ..gibbs.clone() };
    let draws = simulate(spec, pop, &data.covariates, theta, &config, n_sims)?;
    let mut simulated: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(n_sims); stats.len()];
    for draw in draws {
        let sim = draw.into_dataset(data.covariates.clone())?;
        for (s, out) in stats.iter().zip(simulated.iter_mut()) {
            out.push(s.compute(pop, &sim)?);
        }
    }
    Ok(stats
        .iter()
        .zip(observed)
        .zip(simulated)
        .map(|((&statistic, obs), sims)| {
            let len = sims.iter().map(Vec::len).chain([obs.len()]).max().unwrap_or(0);
            let at = |v: &Vec<f64>, k: usize| v.get(k).copied().unwrap_or(0.0);
            let points = (0..len)
                .map(|k| {
                    let col: Vec<f64> = sims.iter().map(|v| at(v, k)).collect();
                    GofPoint { k, observed: at(&obs, k), envelope: Envelope::from_samples(&col) }
                })
                .collect();
            GofSeries { statistic, points }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roc {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// ROC curve from a threshold sweep over the distinct scores (classify
/// positive when `score >= threshold`) and its trapezoidal area. Tied
/// scores move along a diagonal segment, which scores ties as one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<Roc> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!("{} scores, {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Invalid("scores contain NaN".into()));
    }
    let pos = labels.iter().filter(|l| **l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Invalid("ROC needs at least one positive and one negative label".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint { threshold: f64::INFINITY, fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut k = 0;
    while k < order.len() {
        let t = scores[order[k]];
        while k < order.len() && scores[order[k]] == t {
            if labels[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        let prev = *points.last().expect("nonempty");
        let p = RocPoint { threshold: t, fpr: fp as f64 / neg as f64, tpr: tp as f64 / pos as f64 };
        auc += (p.fpr - prev.fpr) * (p.tpr + prev.tpr) / 2.0;
        points.push(p);
    }
    Ok(Roc { points, auc })
}

/// Source of per-unit response probabilities.
#[derive(Debug, Clone)]
pub enum ResponseModel<'a> {
    /// Conditional probabilities of the joint model given the observed
    /// responses of other units and the observed network.
    Joint { spec: &'a ModelSpec, theta: &'a Theta },
    /// Logistic regression on an intercept and the given covariate columns.
    Baseline { columns: Vec<usize>, coefficients: Vec<f64> },
}

pub fn predict_response_probs(model: &ResponseModel<'_>, pop: &Population, data: &Dataset) -> Result<Vec<f64>> {
    if !data.responses.iter().all(|&y| y == 0.0 || y == 1.0) {
        return Err(Error::Invalid("response probabilities need binary responses".into()));
    }
    match model {
        ResponseModel::Joint { spec, theta } => {
            if spec.family().kind() != FamilyKind::Bernoulli {
                return Err(Error::Invalid("response probabilities need a Bernoulli family".into()));
            }
            spec.check_theta(theta)?;
            let design = Design::new(spec, pop, data)?;
            Ok((0..data.n_units()).map(|i| logistic(design.unit_eta(theta.values(), i))).collect())
        }
        ResponseModel::Baseline { columns, coefficients } => {
            let x = baseline_design(data, columns)?;
            if coefficients.len() != x.ncols() {
                return Err(Error::Dimension(format!("{} coefficients for {} columns", coefficients.len(), x.ncols())));
            }
            Ok((0..x.nrows())
                .map(|i| logistic(x.row(i).iter().zip(coefficients).map(|(a, b)| a * b).sum()))
                .collect())
        }
    }
}

/// Fits the covariates-only logistic regression of the responses.
pub fn fit_baseline(data: &Dataset, columns: &[usize]) -> Result<GlmFit> {
    let x = baseline_design(data, columns)?;
    fit_glm(ResponseFamily::bernoulli(), &x, &data.responses)
}

fn baseline_design(data: &Dataset, columns: &[usize]) -> Result<DMatrix<f64>> {
    let n = data.n_units();
    if let Some(&c) = columns.iter().find(|&&c| c >= data.covariates.ncols()) {
        return Err(Error::Dimension(format!("no covariate column {c}")));
    }
    Ok(DMatrix::from_fn(n, columns.len() + 1, |i, k| if k == 0 { 1.0 } else { data.covariates[(i, columns[k - 1])] }))
}

/// Units whose neighborhood has at most `threshold` members, and the rest.
pub fn split_by_neighborhood_size(pop: &Population, threshold: usize) -> (Vec<usize>, Vec<usize>) {
    (0..pop.n_units()).partition(|&i| pop.neighborhood(i).len() <= threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_has_one_partner_per_edge() {
        let net = Network::from_edges(3, false, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(shared_partner_distribution(&net), vec![0, 3]);
        assert_eq!(shared_partner_distribution(&Network::empty(4, true)), vec![0, 0, 0]);
    }

    #[test]
    fn hand_auc() {
        let roc = roc_auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap();
        assert!((roc.auc - 0.75).abs() < 1e-15);
        let tied = roc_auc(&[0.3; 5], &[true, false, true, false, false]).unwrap();
        assert!((tied.auc - 0.5).abs() < 1e-15);
        assert!(roc_auc(&[0.1, 0.2], &[true, true]).is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        let e = Envelope::from_samples(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((e.min, e.median, e.max), (1.0, 3.0, 5.0));
        assert!((e.q05 - 1.2).abs() < 1e-12 && (e.q95 - 4.8).abs() < 1e-12);
        assert!(Envelope::from_samples(&[]).is_none());
    }
}
