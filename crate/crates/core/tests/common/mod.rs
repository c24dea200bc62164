#![allow(dead_code)]

use nalgebra::DMatrix;
use netinfer_core::sampler::stream_rng;
use netinfer_core::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, 7)
}

/// Each unit's neighborhood holds itself and every other unit with
/// probability `p`.
pub fn random_population<R: Rng>(rng: &mut R, n: usize, p: f64) -> Population {
    let nb = (0..n).map(|i| (0..n).filter(|&k| k == i || rng.random::<f64>() < p).collect()).collect();
    Population::new(nb).unwrap()
}

/// Undirected example: one uniform column. Directed application: a binary
/// treatment column and three categorical columns.
pub fn random_covariates<R: Rng>(rng: &mut R, spec: &ModelSpec) -> DMatrix<f64> {
    let n = spec.n_units();
    if spec.is_directed() {
        DMatrix::from_fn(n, 4, |_, c| if c == 0 { rng.random_range(0..2) as f64 } else { rng.random_range(0..3) as f64 })
    } else {
        DMatrix::from_fn(n, 1, |_, _| rng.random::<f64>())
    }
}

pub fn random_responses<R: Rng>(rng: &mut R, family: ResponseFamily, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| match family.kind() {
            FamilyKind::Bernoulli => rng.random_range(0..2) as f64,
            FamilyKind::Poisson => rng.random_range(0..5) as f64,
            FamilyKind::Gaussian => rng.random_range(-2.0..2.0),
        })
        .collect()
}

pub fn random_network<R: Rng>(rng: &mut R, n: usize, directed: bool, density: f64) -> Network {
    let mut net = Network::empty(n, directed);
    for i in 0..n {
        for j in 0..n {
            if i != j && (directed || i < j) && rng.random::<f64>() < density {
                net.set(i, j, true);
            }
        }
    }
    net
}

pub fn random_theta<R: Rng>(rng: &mut R, spec: &ModelSpec, scale: f64) -> Theta {
    let v = (0..spec.n_params()).map(|_| rng.random_range(-scale..scale)).collect();
    Theta::new(v, spec.n_nuisance()).unwrap()
}

pub fn random_dataset<R: Rng>(rng: &mut R, spec: &ModelSpec, density: f64) -> Dataset {
    let n = spec.n_units();
    let x = random_covariates(rng, spec);
    let y = random_responses(rng, spec.family(), n);
    let net = random_network(rng, n, spec.is_directed(), density);
    Dataset::new(x, y, net).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
