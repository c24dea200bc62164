//! Fixtures shared by the benchmarks.

use nalgebra::DMatrix;
use netinfer_core::sampler::{make_subpopulation_neighborhoods, simulate_with_rng, stream_rng, GibbsConfig};
use netinfer_core::{Dataset, ModelSpec, Population, ResponseFamily, Theta};
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub struct Fixture {
    pub spec: ModelSpec,
    pub pop: Population,
    pub data: Dataset,
    pub truth: Theta,
}

/// Undirected example at `n` units with the standard simulation settings,
/// after `burn_in` sweeps.
pub fn undirected(n: usize, burn_in: usize, seed: u64) -> Fixture {
    let spec = ModelSpec::undirected_example(n, ResponseFamily::bernoulli()).unwrap();
    let pop = make_subpopulation_neighborhoods(n).unwrap();
    let mut rng = stream_rng(seed, 0);
    let normal = Normal::new(-1.4, 0.2).unwrap();
    let nuisance: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    let truth = Theta::from_parts(&nuisance, &[0.3, -2.0, 2.0, 0.2, 0.1, 0.1]);
    let x = DMatrix::from_fn(n, 1, |_, _| rng.random::<f64>());
    let draw = simulate_with_rng(&spec, &pop, &x, &truth, &GibbsConfig::new(burn_in, 1, 0), 1, &mut rng)
        .unwrap()
        .remove(0);
    let data = draw.into_dataset(x).unwrap();
    Fixture { spec, pop, data, truth }
}
