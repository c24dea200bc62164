//! Domain types and the model's statistics, linear predictors and
//! one-dimensional conditionals.

pub mod family;
pub mod network;
pub mod population;
pub mod terms;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use family::{FamilyKind, ResponseFamily};
pub use network::{two_path_indicator, Network, TwoPaths};
pub use population::{overlap_indicator, Population};
pub use terms::{PairTerm, TermContext, UnitTerm};

/// Which model variant a specification follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    UndirectedExample,
    DirectedApplication,
    Custom,
}

/// A model specification: response family, response-side and pair-side
/// terms, and the map from terms to parameter slots.
///
/// The parameter vector is laid out as `[nuisance | interest]`. The nuisance
/// block holds per-unit edge propensities (`n` of them when undirected,
/// `2n - 1` when directed, the last receiver weight being pinned to zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    kind: ModelKind,
    family: ResponseFamily,
    directed: bool,
    n_units: usize,
    unit_terms: Vec<(UnitTerm, usize)>,
    pair_terms: Vec<(PairTerm, Option<usize>)>,
    interest_names: Vec<String>,
}

impl ModelSpec {
    /// Generic constructor. `unit_terms` and the non-nuisance `pair_terms`
    /// carry their index within the interest block; nuisance pair terms carry
    /// `None`.
    pub fn new(
        family: ResponseFamily,
        directed: bool,
        n_units: usize,
        unit_terms: Vec<(UnitTerm, usize)>,
        pair_terms: Vec<(PairTerm, Option<usize>)>,
        interest_names: Vec<String>,
    ) -> Result<Self> {
        if n_units < 3 {
            return Err(Error::Invalid(format!("model needs at least 3 units, got {n_units}")));
        }
        let r = interest_names.len();
        let mut used = vec![0usize; r];
        for &(_, k) in &unit_terms {
            if k >= r {
                return Err(Error::Invalid(format!("unit term slot {k} out of range")));
            }
            used[k] += 1;
        }
        let mut nuisance = Vec::new();
        for &(term, slot) in &pair_terms {
            if let Some(d) = term.is_directed() {
                if d != directed {
                    return Err(Error::Invalid(format!(
                        "term {term:?} does not match directed = {directed}"
                    )));
                }
            }
            match (term.is_nuisance(), slot) {
                (true, None) => nuisance.push(term),
                (false, Some(k)) if k < r => used[k] += 1,
                _ => {
                    return Err(Error::Invalid(format!("bad slot {slot:?} for term {term:?}")));
                }
            }
        }
        if let Some(k) = used.iter().position(|&c| c != 1) {
            return Err(Error::Invalid(format!(
                "interest slot {k} ({}) must be used by exactly one term",
                interest_names[k]
            )));
        }
        let nuisance_ok = if directed {
            nuisance == [PairTerm::OutPropensity, PairTerm::InPropensity]
        } else {
            nuisance == [PairTerm::Propensity]
        };
        if !nuisance_ok {
            return Err(Error::Invalid(
                "propensity terms must be Propensity (undirected) or OutPropensity then InPropensity (directed)".into(),
            ));
        }
        Ok(Self {
            kind: ModelKind::Custom,
            family,
            directed,
            n_units,
            unit_terms,
            pair_terms,
            interest_names,
        })
    }

    /// The undirected example model with one covariate column. Interest block
    /// order: `(lambda, alpha_y, beta_xy, gamma_zz, gamma_xyz, gamma_yyz)`.
    pub fn undirected_example(n_units: usize, family: ResponseFamily) -> Result<Self> {
        let names = ["lambda", "alpha_y", "beta_xy", "gamma_zz", "gamma_xyz", "gamma_yyz"];
        let mut spec = Self::new(
            family,
            false,
            n_units,
            vec![(UnitTerm::Intercept, 1), (UnitTerm::Covariate { col: 0 }, 2)],
            vec![
                (PairTerm::Propensity, None),
                (PairTerm::SparsityPenalty, Some(0)),
                (PairTerm::Transitive, Some(3)),
                (PairTerm::TreatmentSpillover { col: 0 }, Some(4)),
                (PairTerm::OutcomeSpillover, Some(5)),
            ],
            names.iter().map(|s| s.to_string()).collect(),
        )?;
        spec.kind = ModelKind::UndirectedExample;
        Ok(spec)
    }

    /// The directed application model with four covariate columns (column 0
    /// a binary treatment, columns 1..=3 matched between sender and
    /// receiver). Interest block order: `(alpha_y, beta_xy_1..3, lambda,
    /// gamma_zz_1, gamma_zz_2, gamma_xz_1..4, gamma_yz, gamma_xyz)`.
    pub fn directed_application(n_units: usize, family: ResponseFamily) -> Result<Self> {
        let names = [
            "alpha_y",
            "beta_xy_1",
            "beta_xy_2",
            "beta_xy_3",
            "lambda",
            "gamma_zz_1",
            "gamma_zz_2",
            "gamma_xz_1",
            "gamma_xz_2",
            "gamma_xz_3",
            "gamma_xz_4",
            "gamma_yz",
            "gamma_xyz",
        ];
        let mut spec = Self::new(
            family,
            true,
            n_units,
            vec![
                (UnitTerm::Intercept, 0),
                (UnitTerm::Covariate { col: 0 }, 1),
                (UnitTerm::Covariate { col: 1 }, 2),
                (UnitTerm::Covariate { col: 2 }, 3),
            ],
            vec![
                (PairTerm::OutPropensity, None),
                (PairTerm::InPropensity, None),
                (PairTerm::SparsityPenalty, Some(4)),
                (PairTerm::Reciprocity, Some(5)),
                (PairTerm::Transitive, Some(6)),
                (PairTerm::SenderCovariate { col: 0 }, Some(7)),
                (PairTerm::CovariateMatch { col: 1 }, Some(8)),
                (PairTerm::CovariateMatch { col: 2 }, Some(9)),
                (PairTerm::CovariateMatch { col: 3 }, Some(10)),
                (PairTerm::ReceiverResponse, Some(11)),
                (PairTerm::SenderTreatmentReceiverResponse { col: 0 }, Some(12)),
            ],
            names.iter().map(|s| s.to_string()).collect(),
        )?;
        spec.kind = ModelKind::DirectedApplication;
        Ok(spec)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn family(&self) -> ResponseFamily {
        self.family
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn unit_terms(&self) -> &[(UnitTerm, usize)] {
        &self.unit_terms
    }

    pub fn pair_terms(&self) -> &[(PairTerm, Option<usize>)] {
        &self.pair_terms
    }

    pub fn n_nuisance(&self) -> usize {
        if self.directed {
            2 * self.n_units - 1
        } else {
            self.n_units
        }
    }

    pub fn n_interest(&self) -> usize {
        self.interest_names.len()
    }

    pub fn n_params(&self) -> usize {
        self.n_nuisance() + self.n_interest()
    }

    pub fn interest_names(&self) -> &[String] {
        &self.interest_names
    }

    /// Position of a named interest parameter within the full vector.
    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.interest_names
            .iter()
            .position(|s| s == name)
            .map(|k| self.n_nuisance() + k)
    }

    /// Human-readable names for every coordinate of the parameter vector.
    pub fn param_names(&self) -> Vec<String> {
        let n = self.n_units;
        let mut names = Vec::with_capacity(self.n_params());
        if self.directed {
            names.extend((0..n).map(|i| format!("alpha_z_out[{}]", i + 1)));
            names.extend((0..n - 1).map(|i| format!("alpha_z_in[{}]", i + 1)));
        } else {
            names.extend((0..n).map(|i| format!("alpha_z[{}]", i + 1)));
        }
        names.extend(self.interest_names.iter().cloned());
        names
    }

    /// Number of covariate columns the terms refer to.
    pub fn required_covariates(&self) -> usize {
        let unit = self.unit_terms.iter().filter_map(|(t, _)| t.covariate_column());
        let pair = self.pair_terms.iter().filter_map(|(t, _)| t.covariate_column());
        unit.chain(pair).map(|c| c + 1).max().unwrap_or(0)
    }

    /// Checks a dataset and population against the specification.
    pub fn validate(&self, pop: &Population, data: &Dataset) -> Result<()> {
        let n = self.n_units;
        if pop.n_units() != n {
            return Err(Error::Dimension(format!("population has {} units, model {n}", pop.n_units())));
        }
        if data.n_units() != n || data.network.n_units() != n || data.covariates.nrows() != n {
            return Err(Error::Dimension(format!(
                "dataset dimensions (responses {}, covariate rows {}, network {}) do not match {n} units",
                data.responses.len(),
                data.covariates.nrows(),
                data.network.n_units()
            )));
        }
        if data.covariates.ncols() < self.required_covariates() {
            return Err(Error::Dimension(format!(
                "model needs {} covariate columns, dataset has {}",
                self.required_covariates(),
                data.covariates.ncols()
            )));
        }
        if data.network.is_directed() != self.directed {
            return Err(Error::Invalid(format!(
                "network directedness {} does not match model directedness {}",
                data.network.is_directed(),
                self.directed
            )));
        }
        if let Some(i) = data.responses.iter().position(|&y| !self.family.in_support(y)) {
            return Err(Error::Invalid(format!(
                "response {} of unit {i} is outside the {:?} support",
                data.responses[i],
                self.family.kind()
            )));
        }
        if let Some(v) = data.covariates.iter().find(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite covariate {v}")));
        }
        Ok(())
    }

    pub fn check_theta(&self, theta: &Theta) -> Result<()> {
        if theta.len() != self.n_params() || theta.n_nuisance() != self.n_nuisance() {
            return Err(Error::Dimension(format!(
                "theta has {} entries ({} nuisance), model needs {} ({} nuisance)",
                theta.len(),
                theta.n_nuisance(),
                self.n_params(),
                self.n_nuisance()
            )));
        }
        Ok(())
    }
}

/// Full parameter vector, split into the nuisance block followed by the
/// interest block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    values: Vec<f64>,
    n_nuisance: usize,
}

impl Theta {
    pub fn new(values: Vec<f64>, n_nuisance: usize) -> Result<Self> {
        if n_nuisance > values.len() {
            return Err(Error::Dimension(format!(
                "nuisance block {n_nuisance} longer than theta {}",
                values.len()
            )));
        }
        Ok(Self { values, n_nuisance })
    }

    pub fn zeros(spec: &ModelSpec) -> Self {
        Self { values: vec![0.0; spec.n_params()], n_nuisance: spec.n_nuisance() }
    }

    pub fn from_parts(nuisance: &[f64], interest: &[f64]) -> Self {
        let mut values = nuisance.to_vec();
        values.extend_from_slice(interest);
        Self { values, n_nuisance: nuisance.len() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_nuisance(&self) -> usize {
        self.n_nuisance
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn nuisance(&self) -> &[f64] {
        &self.values[..self.n_nuisance]
    }

    pub fn nuisance_mut(&mut self) -> &mut [f64] {
        &mut self.values[..self.n_nuisance]
    }

    pub fn interest(&self) -> &[f64] {
        &self.values[self.n_nuisance..]
    }

    pub fn interest_mut(&mut self) -> &mut [f64] {
        &mut self.values[self.n_nuisance..]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Observed (or simulated) covariates, responses and network.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub covariates: DMatrix<f64>,
    pub responses: Vec<f64>,
    pub network: Network,
}

impl Dataset {
    pub fn new(covariates: DMatrix<f64>, responses: Vec<f64>, network: Network) -> Result<Self> {
        let n = responses.len();
        if covariates.nrows() != n || network.n_units() != n {
            return Err(Error::Dimension(format!(
                "covariates have {} rows and network {} units, but there are {n} responses",
                covariates.nrows(),
                network.n_units()
            )));
        }
        Ok(Self { covariates, responses, network })
    }

    pub fn n_units(&self) -> usize {
        self.responses.len()
    }
}

/// Responses divided by the family scale.
pub fn scaled_responses(spec: &ModelSpec, responses: &[f64]) -> Vec<f64> {
    let psi = spec.family().psi();
    responses.iter().map(|y| y / psi).collect()
}

/// Linear predictor of the conditional response law of unit `i`, evaluated
/// from the `y*`-coefficients of all terms involving `i`.
pub fn response_eta_with(spec: &ModelSpec, ctx: &TermContext<'_>, theta: &Theta, i: usize) -> f64 {
    let interest = theta.interest();
    let mut eta = 0.0;
    for &(term, k) in spec.unit_terms() {
        eta += interest[k] * term.part1(ctx.covariates, i);
    }
    for &j in ctx.pop.overlap_partners(i) {
        for &(term, slot) in spec.pair_terms() {
            let Some(k) = slot else { continue };
            if !term.involves_responses() {
                continue;
            }
            let mut coef = term.y_coef(ctx, i, j, i);
            if spec.is_directed() {
                coef += term.y_coef(ctx, j, i, i);
            }
            eta += interest[k] * coef;
        }
    }
    eta
}

/// Linear predictor of the conditional (logistic) law of `z_ab`.
pub fn connection_eta_with(spec: &ModelSpec, ctx: &TermContext<'_>, theta: &Theta, a: usize, b: usize) -> f64 {
    let n = spec.n_units();
    let nuisance = theta.nuisance();
    let interest = theta.interest();
    let mut eta = 0.0;
    for &(term, slot) in spec.pair_terms() {
        match slot {
            None => {
                for t in term.nuisance_targets(n, a, b).into_iter().flatten() {
                    eta += nuisance[t];
                }
            }
            Some(k) => eta += interest[k] * term.z_change(ctx, a, b),
        }
    }
    eta
}

fn with_context<R>(
    spec: &ModelSpec,
    pop: &Population,
    data: &Dataset,
    f: impl FnOnce(&TermContext<'_>) -> R,
) -> Result<R> {
    spec.validate(pop, data)?;
    let ystar = scaled_responses(spec, &data.responses);
    let paths = TwoPaths::build(pop, &data.network);
    let ctx = TermContext {
        pop,
        covariates: &data.covariates,
        ystar: &ystar,
        net: &data.network,
        paths: &paths,
        log_n: (spec.n_units() as f64).ln(),
    };
    Ok(f(&ctx))
}

/// Linear predictor of `Y_i | rest`.
pub fn eta_response(spec: &ModelSpec, pop: &Population, data: &Dataset, theta: &Theta, i: usize) -> Result<f64> {
    spec.check_theta(theta)?;
    pop.check_unit(i)?;
    with_context(spec, pop, data, |ctx| response_eta_with(spec, ctx, theta, i))
}

/// Linear predictor (log-odds) of `Z_ij | rest`.
pub fn eta_connection(
    spec: &ModelSpec,
    pop: &Population,
    data: &Dataset,
    theta: &Theta,
    i: usize,
    j: usize,
) -> Result<f64> {
    spec.check_theta(theta)?;
    pop.check_pair(i, j)?;
    with_context(spec, pop, data, |ctx| connection_eta_with(spec, ctx, theta, i, j))
}

/// Change of the global transitive statistic when `z_ij` flips 0 -> 1.
pub fn change_statistic_transitive(pop: &Population, net: &Network, i: usize, j: usize) -> Result<u32> {
    pop.check_pair(i, j)?;
    if net.n_units() != pop.n_units() {
        return Err(Error::Dimension("network and population sizes differ".into()));
    }
    let paths = TwoPaths::build(pop, net);
    Ok(terms::transitive_change(pop, net, &paths, i, j))
}

/// Sufficient statistics `sum_i g_i + sum_pairs h_ij`, laid out like theta.
pub fn sufficient_statistics(spec: &ModelSpec, pop: &Population, data: &Dataset) -> Result<Vec<f64>> {
    with_context(spec, pop, data, |ctx| statistics_with(spec, ctx))
}

pub(crate) fn statistics_with(spec: &ModelSpec, ctx: &TermContext<'_>) -> Vec<f64> {
    let n = spec.n_units();
    let q = spec.n_nuisance();
    let mut stats = vec![0.0; spec.n_params()];
    for i in 0..n {
        for &(term, k) in spec.unit_terms() {
            stats[q + k] += term.value(ctx.covariates, i, ctx.ystar[i]);
        }
    }
    for a in 0..n {
        for &b in ctx.net.out_neighbors(a) {
            if !spec.is_directed() && b < a {
                continue;
            }
            for &(term, slot) in spec.pair_terms() {
                match slot {
                    None => {
                        for t in term.nuisance_targets(n, a, b).into_iter().flatten() {
                            stats[t] += 1.0;
                        }
                    }
                    Some(k) => stats[q + k] += term.value(ctx, a, b),
                }
            }
        }
    }
    stats
}
