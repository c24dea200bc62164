//! Sufficient-statistic terms of the joint model.
//!
//! Response-side terms are affine in the scaled response `y* = y / psi` of a
//! single unit. Pair-side terms are evaluated on a pair `(a, b)` (ordered when
//! the network is directed) and expose three views of the same statistic:
//!
//! * `value`: the term's contribution at the current state,
//! * `z_change`: the change of the statistic summed over all pairs when
//!   `z_ab` flips from 0 to 1 with everything else fixed,
//! * `y_coef`: the coefficient of `y*` of one endpoint in the term's value.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::model::network::{Network, TwoPaths};
use crate::model::population::Population;

/// Read-only view of everything a term may depend on.
#[derive(Clone, Copy)]
pub struct TermContext<'a> {
    pub pop: &'a Population,
    pub covariates: &'a DMatrix<f64>,
    /// Responses divided by the family scale.
    pub ystar: &'a [f64],
    pub net: &'a Network,
    pub paths: &'a TwoPaths,
    pub log_n: f64,
}

impl TermContext<'_> {
    #[inline]
    fn x(&self, i: usize, col: usize) -> f64 {
        self.covariates[(i, col)]
    }

    #[inline]
    fn c(&self, a: usize, b: usize) -> f64 {
        if self.pop.overlaps(a, b) {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnitTerm {
    /// `y*`
    Intercept,
    /// `x_{i,col} y*`
    Covariate { col: usize },
}

impl UnitTerm {
    /// The `y*`-free part of the term (zero for all current terms).
    pub fn part0(&self, _covariates: &DMatrix<f64>, _i: usize) -> f64 {
        0.0
    }

    /// The coefficient of `y*`.
    pub fn part1(&self, covariates: &DMatrix<f64>, i: usize) -> f64 {
        match *self {
            UnitTerm::Intercept => 1.0,
            UnitTerm::Covariate { col } => covariates[(i, col)],
        }
    }

    pub fn value(&self, covariates: &DMatrix<f64>, i: usize, ystar: f64) -> f64 {
        self.part0(covariates, i) + self.part1(covariates, i) * ystar
    }

    pub fn covariate_column(&self) -> Option<usize> {
        match *self {
            UnitTerm::Intercept => None,
            UnitTerm::Covariate { col } => Some(col),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairTerm {
    /// Undirected degree propensities: `(e_a + e_b) z_ab`.
    Propensity,
    /// Directed activity (sender) propensities: `e_a z_ab`.
    OutPropensity,
    /// Directed attractiveness (receiver) propensities: `e_b z_ab`, with the
    /// last unit's weight pinned to zero.
    InPropensity,
    /// `-(1 - c_ab) z_ab log N`
    SparsityPenalty,
    /// `d_ab(z) z_ab`
    Transitive,
    /// Undirected: `c_ab (x_a y*_b + x_b y*_a) z_ab`
    TreatmentSpillover { col: usize },
    /// Undirected: `c_ab y*_a y*_b z_ab`
    OutcomeSpillover,
    /// Directed: `z_ab z_ba / 2`
    Reciprocity,
    /// Directed: `c_ab x_{a,col} z_ab`
    SenderCovariate { col: usize },
    /// Directed: `c_ab 1(x_{a,col} = x_{b,col}) z_ab`
    CovariateMatch { col: usize },
    /// Directed: `c_ab y*_b z_ab`
    ReceiverResponse,
    /// Directed: `c_ab x_{a,col} y*_b z_ab`
    SenderTreatmentReceiverResponse { col: usize },
}

impl PairTerm {
    pub fn is_nuisance(&self) -> bool {
        matches!(
            self,
            PairTerm::Propensity | PairTerm::OutPropensity | PairTerm::InPropensity
        )
    }

    /// Terms that vanish on pairs with non-overlapping neighborhoods.
    pub fn is_overlap_gated(&self) -> bool {
        !matches!(
            self,
            PairTerm::Propensity
                | PairTerm::OutPropensity
                | PairTerm::InPropensity
                | PairTerm::SparsityPenalty
                | PairTerm::Reciprocity
        )
    }

    /// Whether the term's value depends on responses.
    pub fn involves_responses(&self) -> bool {
        matches!(
            self,
            PairTerm::TreatmentSpillover { .. }
                | PairTerm::OutcomeSpillover
                | PairTerm::ReceiverResponse
                | PairTerm::SenderTreatmentReceiverResponse { .. }
        )
    }

    pub fn is_directed(&self) -> Option<bool> {
        match self {
            PairTerm::Propensity | PairTerm::TreatmentSpillover { .. } | PairTerm::OutcomeSpillover => {
                Some(false)
            }
            PairTerm::SparsityPenalty | PairTerm::Transitive => None,
            _ => Some(true),
        }
    }

    pub fn covariate_column(&self) -> Option<usize> {
        match *self {
            PairTerm::TreatmentSpillover { col }
            | PairTerm::SenderCovariate { col }
            | PairTerm::CovariateMatch { col }
            | PairTerm::SenderTreatmentReceiverResponse { col } => Some(col),
            _ => None,
        }
    }

    /// Parameter indices (within the nuisance block of size `n_nuisance`)
    /// receiving a unit coefficient from `z_ab`; only for nuisance terms.
    #[inline]
    pub fn nuisance_targets(&self, n: usize, a: usize, b: usize) -> [Option<usize>; 2] {
        match self {
            PairTerm::Propensity => [Some(a), Some(b)],
            PairTerm::OutPropensity => [Some(a), None],
            PairTerm::InPropensity => [(b + 1 < n).then_some(n + b), None],
            _ => [None, None],
        }
    }

    /// Scalar value of a non-nuisance term at the current state.
    pub fn value(&self, ctx: &TermContext<'_>, a: usize, b: usize) -> f64 {
        let z = ctx.net.z(a, b);
        if z == 0.0 {
            return 0.0;
        }
        match *self {
            PairTerm::Propensity | PairTerm::OutPropensity | PairTerm::InPropensity => 0.0,
            PairTerm::SparsityPenalty => -(1.0 - ctx.c(a, b)) * ctx.log_n,
            PairTerm::Transitive => (ctx.paths.count(a, b) > 0) as u8 as f64,
            PairTerm::TreatmentSpillover { col } => {
                ctx.c(a, b) * (ctx.x(a, col) * ctx.ystar[b] + ctx.x(b, col) * ctx.ystar[a])
            }
            PairTerm::OutcomeSpillover => ctx.c(a, b) * ctx.ystar[a] * ctx.ystar[b],
            PairTerm::Reciprocity => 0.5 * ctx.net.z(b, a),
            PairTerm::SenderCovariate { col } => ctx.c(a, b) * ctx.x(a, col),
            PairTerm::CovariateMatch { col } => {
                ctx.c(a, b) * ((ctx.x(a, col) == ctx.x(b, col)) as u8 as f64)
            }
            PairTerm::ReceiverResponse => ctx.c(a, b) * ctx.ystar[b],
            PairTerm::SenderTreatmentReceiverResponse { col } => {
                ctx.c(a, b) * ctx.x(a, col) * ctx.ystar[b]
            }
        }
    }

    /// Change of the statistic summed over all pairs when `z_ab` goes from 0
    /// to 1. Nuisance terms report 0 here; see [`PairTerm::nuisance_targets`].
    pub fn z_change(&self, ctx: &TermContext<'_>, a: usize, b: usize) -> f64 {
        match *self {
            PairTerm::Propensity | PairTerm::OutPropensity | PairTerm::InPropensity => 0.0,
            PairTerm::SparsityPenalty => -(1.0 - ctx.c(a, b)) * ctx.log_n,
            PairTerm::Transitive => transitive_change(ctx.pop, ctx.net, ctx.paths, a, b) as f64,
            PairTerm::TreatmentSpillover { col } => {
                ctx.c(a, b) * (ctx.x(a, col) * ctx.ystar[b] + ctx.x(b, col) * ctx.ystar[a])
            }
            PairTerm::OutcomeSpillover => ctx.c(a, b) * ctx.ystar[a] * ctx.ystar[b],
            // z_ab z_ba / 2 appears in both h_ab and h_ba
            PairTerm::Reciprocity => ctx.net.z(b, a),
            PairTerm::SenderCovariate { col } => ctx.c(a, b) * ctx.x(a, col),
            PairTerm::CovariateMatch { col } => {
                ctx.c(a, b) * ((ctx.x(a, col) == ctx.x(b, col)) as u8 as f64)
            }
            PairTerm::ReceiverResponse => ctx.c(a, b) * ctx.ystar[b],
            PairTerm::SenderTreatmentReceiverResponse { col } => {
                ctx.c(a, b) * ctx.x(a, col) * ctx.ystar[b]
            }
        }
    }

    /// `z_change` specialised to a pair whose neighborhoods do not overlap,
    /// given the reverse entry `z_ba` (ignored when undirected).
    #[inline]
    pub fn nonoverlap_change(&self, log_n: f64, z_reverse: f64) -> f64 {
        match self {
            PairTerm::SparsityPenalty => -log_n,
            PairTerm::Reciprocity => z_reverse,
            _ => 0.0,
        }
    }

    /// Coefficient of `y*_unit` in the term's value on pair `(a, b)`, where
    /// `unit` is `a` or `b`.
    pub fn y_coef(&self, ctx: &TermContext<'_>, a: usize, b: usize, unit: usize) -> f64 {
        debug_assert!(unit == a || unit == b);
        if !self.involves_responses() {
            return 0.0;
        }
        let cz = ctx.c(a, b) * ctx.net.z(a, b);
        if cz == 0.0 {
            return 0.0;
        }
        let other = if unit == a { b } else { a };
        match *self {
            PairTerm::TreatmentSpillover { col } => cz * ctx.x(other, col),
            PairTerm::OutcomeSpillover => cz * ctx.ystar[other],
            PairTerm::ReceiverResponse => {
                if unit == b {
                    cz
                } else {
                    0.0
                }
            }
            PairTerm::SenderTreatmentReceiverResponse { col } => {
                if unit == b {
                    cz * ctx.x(a, col)
                } else {
                    0.0
                }
            }
            _ => 0.0,
        }
    }
}

/// Change in the global transitive statistic `sum d_ab(z) z_ab` when `z_ij`
/// flips from 0 to 1, using maintained two-path counts.
pub fn transitive_change(pop: &Population, net: &Network, paths: &TwoPaths, i: usize, j: usize) -> u32 {
    let zij = net.has_edge(i, j) as u16;
    let mut delta = (paths.count(i, j) > 0) as u32;
    if net.is_directed() {
        // pairs (i, b) that gain the path i -> j -> b
        for &b in net.out_neighbors(j) {
            if b != i && net.has_edge(i, b) && pop.in_shared(i, b, j) && paths.count(i, b) == zij {
                delta += 1;
            }
        }
        // pairs (a, j) that gain the path a -> i -> j
        for &a in net.in_neighbors(i) {
            if a != j && net.has_edge(a, j) && pop.in_shared(a, j, i) && paths.count(a, j) == zij {
                delta += 1;
            }
        }
    } else {
        for &b in net.out_neighbors(j) {
            if b != i && net.has_edge(i, b) && pop.in_shared(i, b, j) && paths.count(i, b) == zij {
                delta += 1;
            }
        }
        for &b in net.out_neighbors(i) {
            if b != j && net.has_edge(j, b) && pop.in_shared(j, b, i) && paths.count(j, b) == zij {
                delta += 1;
            }
        }
    }
    delta
}
