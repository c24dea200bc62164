//! Gibbs simulation of responses and connections from the joint model.
//!
//! A sweep visits the responses `1..N` and then the connection slots in
//! lexicographic order, resampling each coordinate from its full
//! conditional. Pairs whose neighborhoods do not overlap only interact with
//! their own reverse slot, so [`simulate`] by default leaves them out of the
//! intermediate sweeps and redraws them exactly (one dyad at a time) at every
//! retained draw. The retained draws have the same law either way.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::family::logistic;
use crate::model::{Dataset, FamilyKind, ModelSpec, Network, PairTerm, Population, TermContext, Theta, TwoPaths, UnitTerm};

/// Seeded generator for substream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Starting responses and network; all zeros when absent.
    #[serde(skip)]
    pub initial_state: Option<(Vec<f64>, Network)>,
    /// Redraw non-overlapping pairs exactly at retained draws only.
    pub exact_independent_pairs: bool,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self { burn_in: 1000, thin: 10, seed: 0, initial_state: None, exact_independent_pairs: true }
    }
}

impl GibbsConfig {
    pub fn new(burn_in: usize, thin: usize, seed: u64) -> Self {
        Self { burn_in, thin, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Invalid("thin must be at least 1".into()));
        }
        Ok(())
    }
}

/// One retained draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub responses: Vec<f64>,
    pub network: Network,
}

impl Draw {
    pub fn into_dataset(self, covariates: DMatrix<f64>) -> Result<Dataset> {
        Dataset::new(covariates, self.responses, self.network)
    }
}

/// Builds the neighborhoods of `L = (N - 25)/25` overlapping blocks of 50
/// consecutive units, block `l` spanning units `25(l-1)+1 ..= 25(l+1)`.
pub fn make_subpopulation_neighborhoods(n: usize) -> Result<Population> {
    if n < 50 || !n.is_multiple_of(25) {
        return Err(Error::Invalid(format!("the block layout needs N >= 50 and N divisible by 25, got {n}")));
    }
    let blocks = (n - 25) / 25;
    let mut nbs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for l in 1..=blocks {
        let lo = 25 * (l - 1);
        let hi = 25 * (l + 1);
        for i in lo..hi {
            nbs[i].extend(lo..hi);
        }
    }
    Population::new(nbs)
}

/// Spectral radius of the overlap matrix, by power iteration.
fn overlap_spectral_radius(pop: &Population) -> f64 {
    let n = pop.n_units();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut rho = 0.0;
    for _ in 0..500 {
        let mut w = vec![0.0; n];
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = pop.overlap_partners(i).iter().map(|&j| v[j]).sum();
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        w.iter_mut().for_each(|x| *x /= norm);
        let done = (norm - rho).abs() <= 1e-12 * norm;
        rho = norm;
        v = w;
        if done {
            break;
        }
    }
    rho
}

/// A running Gibbs chain.
pub struct Chain<'a> {
    spec: &'a ModelSpec,
    pop: &'a Population,
    x: &'a DMatrix<f64>,
    nuisance: Vec<f64>,
    unit_terms: Vec<(UnitTerm, f64)>,
    response_terms: Vec<(PairTerm, f64)>,
    pair_terms: Vec<(PairTerm, f64)>,
    nuisance_terms: Vec<PairTerm>,
    y: Vec<f64>,
    ystar: Vec<f64>,
    net: Network,
    paths: TwoPaths,
    log_n: f64,
    psi: f64,
    normal: Option<Normal<f64>>,
}

impl<'a> Chain<'a> {
    pub fn new(
        spec: &'a ModelSpec,
        pop: &'a Population,
        covariates: &'a DMatrix<f64>,
        theta: &Theta,
        initial: Option<(Vec<f64>, Network)>,
    ) -> Result<Self> {
        spec.check_theta(theta)?;
        let n = spec.n_units();
        let (y, net) = initial.unwrap_or_else(|| (vec![0.0; n], Network::empty(n, spec.is_directed())));
        let probe = Dataset::new(covariates.clone(), y, net)?;
        spec.validate(pop, &probe)?;
        if !theta.is_finite() {
            return Err(Error::Invalid("theta is not finite".into()));
        }
        let Dataset { responses: y, network: net, .. } = probe;
        let interest = theta.interest();
        let family = spec.family();
        let psi = family.psi();
        let weighted = |terms: Vec<(PairTerm, Option<usize>)>| -> Vec<(PairTerm, f64)> {
            terms
                .into_iter()
                .filter_map(|(t, s)| s.map(|k| (t, interest[k])))
                .filter(|(_, w)| *w != 0.0)
                .collect()
        };
        let pair_terms = weighted(spec.pair_terms().to_vec());
        let response_terms = pair_terms.iter().copied().filter(|(t, _)| t.involves_responses()).collect();
        if family.kind() == FamilyKind::Gaussian {
            let xi: f64 = pair_terms
                .iter()
                .filter(|(t, _)| *t == PairTerm::OutcomeSpillover)
                .map(|(_, w)| w / psi)
                .sum();
            if xi != 0.0 {
                let bound = xi.abs() * overlap_spectral_radius(pop);
                if bound >= 1.0 {
                    return Err(Error::NotPositiveDefinite { eigenvalue: 1.0 - bound });
                }
            }
        }
        let ystar = y.iter().map(|v| v / psi).collect();
        let paths = TwoPaths::build(pop, &net);
        Ok(Self {
            spec,
            pop,
            x: covariates,
            nuisance: theta.nuisance().to_vec(),
            unit_terms: spec.unit_terms().iter().map(|&(t, k)| (t, interest[k])).collect(),
            response_terms,
            pair_terms,
            nuisance_terms: spec.pair_terms().iter().filter(|(_, s)| s.is_none()).map(|(t, _)| *t).collect(),
            y,
            ystar,
            net,
            paths,
            log_n: (n as f64).ln(),
            psi,
            normal: (family.kind() == FamilyKind::Gaussian).then(|| Normal::new(0.0, psi.sqrt()).expect("psi > 0")),
        })
    }

    pub fn responses(&self) -> &[f64] {
        &self.y
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn snapshot(&self) -> Draw {
        Draw { responses: self.y.clone(), network: self.net.clone() }
    }

    fn ctx(&self) -> TermContext<'_> {
        TermContext {
            pop: self.pop,
            covariates: self.x,
            ystar: &self.ystar,
            net: &self.net,
            paths: &self.paths,
            log_n: self.log_n,
        }
    }

    /// Linear predictor of the response conditional of unit `i` at the
    /// current state.
    pub fn response_eta(&self, i: usize) -> f64 {
        let mut eta: f64 = self.unit_terms.iter().map(|(t, w)| w * t.part1(self.x, i)).sum();
        if self.response_terms.is_empty() {
            return eta;
        }
        let ctx = self.ctx();
        for &j in self.net.out_neighbors(i) {
            if self.pop.overlaps(i, j) {
                for (t, w) in &self.response_terms {
                    eta += w * t.y_coef(&ctx, i, j, i);
                }
            }
        }
        if self.net.is_directed() {
            for &j in self.net.in_neighbors(i) {
                if self.pop.overlaps(i, j) {
                    for (t, w) in &self.response_terms {
                        eta += w * t.y_coef(&ctx, j, i, i);
                    }
                }
            }
        }
        eta
    }

    fn nuisance_part(&self, a: usize, b: usize) -> f64 {
        let n = self.spec.n_units();
        let mut eta = 0.0;
        for t in &self.nuisance_terms {
            for k in t.nuisance_targets(n, a, b).into_iter().flatten() {
                eta += self.nuisance[k];
            }
        }
        eta
    }

    fn nonoverlap_part(&self, z_reverse: f64) -> f64 {
        self.pair_terms.iter().map(|(t, w)| w * t.nonoverlap_change(self.log_n, z_reverse)).sum()
    }

    /// Log-odds of `z_ab = 1` given the rest of the current state.
    pub fn pair_eta(&self, a: usize, b: usize) -> f64 {
        let base = self.nuisance_part(a, b);
        if !self.pop.overlaps(a, b) {
            let zr = if self.net.is_directed() { self.net.z(b, a) } else { 0.0 };
            return base + self.nonoverlap_part(zr);
        }
        let ctx = self.ctx();
        base + self.pair_terms.iter().map(|(t, w)| w * t.z_change(&ctx, a, b)).sum::<f64>()
    }

    fn set_pair(&mut self, a: usize, b: usize, v: bool) {
        if self.net.set(a, b, v) && self.pop.overlaps(a, b) {
            self.paths.on_toggle(self.pop, &self.net, a, b, v);
        }
    }

    fn update_response<R: Rng>(&mut self, i: usize, rng: &mut R) -> Result<()> {
        let eta = self.response_eta(i);
        let family = self.spec.family();
        let y = match family.kind() {
            FamilyKind::Bernoulli => (rng.random::<f64>() < logistic(eta)) as u8 as f64,
            FamilyKind::Poisson => {
                let mu = family.mean(eta).map_err(|e| relocate(e, i))?;
                if mu <= 0.0 {
                    0.0
                } else {
                    Poisson::new(mu).map_err(|e| Error::Invalid(format!("Poisson mean {mu}: {e}")))?.sample(rng)
                }
            }
            FamilyKind::Gaussian => {
                if !eta.is_finite() {
                    return Err(relocate(Error::NonFinite { location: String::new() }, i));
                }
                eta + self.normal.as_ref().expect("gaussian").sample(rng)
            }
        };
        self.y[i] = y;
        self.ystar[i] = y / self.psi;
        Ok(())
    }

    fn update_pair<R: Rng>(&mut self, a: usize, b: usize, rng: &mut R) {
        let p = logistic(self.pair_eta(a, b));
        let v = rng.random::<f64>() < p;
        self.set_pair(a, b, v);
    }

    /// Resamples every response once, holding the network fixed.
    pub fn sweep_responses<R: Rng>(&mut self, rng: &mut R) -> Result<()> {
        self.update_responses(rng)
    }

    fn update_responses<R: Rng>(&mut self, rng: &mut R) -> Result<()> {
        for i in 0..self.spec.n_units() {
            self.update_response(i, rng)?;
        }
        Ok(())
    }

    /// One full systematic-scan sweep over every coordinate.
    pub fn sweep<R: Rng>(&mut self, rng: &mut R) -> Result<()> {
        self.update_responses(rng)?;
        let n = self.spec.n_units();
        let directed = self.net.is_directed();
        for a in 0..n {
            let lo = if directed { 0 } else { a + 1 };
            for b in lo..n {
                if a != b {
                    self.update_pair(a, b, rng);
                }
            }
        }
        Ok(())
    }

    /// A sweep over the responses and the overlapping pairs only.
    pub fn sweep_dependent<R: Rng>(&mut self, rng: &mut R) -> Result<()> {
        self.update_responses(rng)?;
        let n = self.spec.n_units();
        let pop = self.pop;
        if self.net.is_directed() {
            for a in 0..n {
                for &b in pop.overlap_partners(a) {
                    self.update_pair(a, b, rng);
                }
            }
        } else {
            for &(a, b) in pop.overlap_pairs() {
                self.update_pair(a, b, rng);
            }
        }
        Ok(())
    }

    /// Exact joint redraw of all non-overlapping slots (independent across
    /// dyads), in lexicographic dyad order.
    pub fn redraw_independent<R: Rng>(&mut self, rng: &mut R) {
        let n = self.spec.n_units();
        let directed = self.net.is_directed();
        let (c0, c1) = (self.nonoverlap_part(0.0), self.nonoverlap_part(1.0));
        for a in 0..n {
            for b in a + 1..n {
                if self.pop.overlaps(a, b) {
                    continue;
                }
                if !directed {
                    let p = logistic(self.nuisance_part(a, b) + c0);
                    let v = rng.random::<f64>() < p;
                    self.net.set(a, b, v);
                    continue;
                }
                // dyad law over (z_ab, z_ba)
                let ab = self.nuisance_part(a, b);
                let ba = self.nuisance_part(b, a);
                let logw = [0.0, ab + c0, ba + c0, ba + c0 + ab + c1];
                let m = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let w: Vec<f64> = logw.iter().map(|l| (l - m).exp()).collect();
                let total: f64 = w.iter().sum();
                let mut u = rng.random::<f64>() * total;
                let mut pick = 3;
                for (k, wk) in w.iter().enumerate() {
                    if u < *wk {
                        pick = k;
                        break;
                    }
                    u -= wk;
                }
                self.net.set(a, b, pick == 1 || pick == 3);
                self.net.set(b, a, pick == 2 || pick == 3);
            }
        }
    }
}

fn relocate(e: Error, i: usize) -> Error {
    let location = format!("response of unit {i}");
    match e {
        Error::NonFinite { .. } => Error::NonFinite { location },
        Error::PoissonOverflow { eta, cap, .. } => Error::PoissonOverflow { eta, cap, location },
        other => other,
    }
}

/// One systematic-scan sweep from `state`; returns the updated state.
pub fn gibbs_sweep<R: Rng>(
    spec: &ModelSpec,
    pop: &Population,
    covariates: &DMatrix<f64>,
    state: Draw,
    theta: &Theta,
    rng: &mut R,
) -> Result<Draw> {
    let mut chain = Chain::new(spec, pop, covariates, theta, Some((state.responses, state.network)))?;
    chain.sweep(rng)?;
    Ok(Draw { responses: chain.y, network: chain.net })
}

/// Runs `burn_in + thin * draws` sweeps and returns `draws` retained states.
pub fn simulate(
    spec: &ModelSpec,
    pop: &Population,
    covariates: &DMatrix<f64>,
    theta: &Theta,
    config: &GibbsConfig,
    draws: usize,
) -> Result<Vec<Draw>> {
    simulate_with_rng(spec, pop, covariates, theta, config, draws, &mut stream_rng(config.seed, 0))
}

pub fn simulate_with_rng<R: Rng>(
    spec: &ModelSpec,
    pop: &Population,
    covariates: &DMatrix<f64>,
    theta: &Theta,
    config: &GibbsConfig,
    draws: usize,
    rng: &mut R,
) -> Result<Vec<Draw>> {
    config.validate()?;
    let mut chain = Chain::new(spec, pop, covariates, theta, config.initial_state.clone())?;
    let mut out = Vec::with_capacity(draws);
    if draws == 0 {
        return Ok(out);
    }
    let blocked = config.exact_independent_pairs;
    let step = |chain: &mut Chain, rng: &mut R| if blocked { chain.sweep_dependent(rng) } else { chain.sweep(rng) };
    for _ in 0..config.burn_in {
        step(&mut chain, rng)?;
    }
    for _ in 0..draws {
        for _ in 0..config.thin {
            step(&mut chain, rng)?;
        }
        if blocked {
            chain.redraw_independent(rng);
        }
        out.push(chain.snapshot());
    }
    Ok(out)
}

/// Mean number of connections per unit (`2|E|/N` undirected, `|E|/N`
/// directed, i.e. mean out-degree).
pub fn mean_degree(net: &Network) -> f64 {
    let n = net.n_units() as f64;
    if net.is_directed() {
        net.edge_count() as f64 / n
    } else {
        2.0 * net.edge_count() as f64 / n
    }
}
