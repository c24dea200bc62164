mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use netinfer_core::glm::fit_glm;
use netinfer_core::optimizer::*;
use netinfer_core::pseudolik::{Design, Want};
use netinfer_core::sampler::{make_subpopulation_neighborhoods, simulate, GibbsConfig};
use netinfer_core::*;
use rand::Rng;

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Responses on an intercept and one covariate, connections on degree
/// propensities and the sparsity penalty only.
fn independence_spec(n: usize, family: ResponseFamily) -> ModelSpec {
    ModelSpec::new(
        family,
        false,
        n,
        vec![(UnitTerm::Intercept, 0), (UnitTerm::Covariate { col: 0 }, 1)],
        vec![(PairTerm::Propensity, None), (PairTerm::SparsityPenalty, Some(2))],
        names(&["alpha_y", "beta_xy", "lambda"]),
    )
    .unwrap()
}

#[test]
fn independence_fit_matches_standalone_glm() {
    for (family, truth) in [(ResponseFamily::bernoulli(), [-0.5, 1.5, 0.3]), (ResponseFamily::poisson(), [0.2, 0.8, 0.3])] {
        let n = 100;
        let spec = independence_spec(n, family);
        let pop = make_subpopulation_neighborhoods(n).unwrap();
        let mut r = rng(31);
        let nuisance: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..-1.0)).collect();
        let theta = Theta::from_parts(&nuisance, &truth);
        let x = DMatrix::from_fn(n, 1, |_, _| r.random::<f64>());
        let draw = simulate(&spec, &pop, &x, &theta, &GibbsConfig::new(50, 1, 3), 1).unwrap().remove(0);
        let data = draw.into_dataset(x.clone()).unwrap();
        let fitted = fit(&spec, &pop, &data, &warm_start(&spec, &data).unwrap(), &FitOptions::default()).unwrap();
        assert!(fitted.converged);
        let design = DMatrix::from_fn(n, 2, |i, c| if c == 0 { 1.0 } else { x[(i, 0)] });
        let glm = fit_glm(family, &design, &data.responses).unwrap();
        let th = &fitted.theta_hat.values()[n..];
        for k in 0..2 {
            assert!((th[k] - glm.coefficients[k]).abs() < 1e-5, "{family:?} {k}: {} vs {}", th[k], glm.coefficients[k]);
        }
    }
}

#[test]
fn one_parameter_newton_matches_bisection() {
    let n = 40;
    let spec = ModelSpec::new(
        ResponseFamily::bernoulli(),
        false,
        n,
        vec![(UnitTerm::Intercept, 0)],
        vec![(PairTerm::Propensity, None)],
        names(&["alpha_y"]),
    )
    .unwrap();
    let mut r = rng(4);
    let pop = random_population(&mut r, n, 0.2);
    let data = random_dataset(&mut r, &spec, 0.2);
    let design = Design::new(&spec, &pop, &data).unwrap();
    let mut theta = random_theta(&mut r, &spec, 1.0).values().to_vec();
    let mut ll = design.value(&theta).unwrap();
    for _ in 0..50 {
        let step = newton_step_theta2(&design, &theta, ll, 30).unwrap();
        assert!(step.loglik >= ll);
        theta = step.theta;
        ll = step.loglik;
    }
    let score = |a: f64| data.responses.iter().map(|y| y - 1.0 / (1.0 + (-a).exp())).sum::<f64>();
    let (mut lo, mut hi) = (-20.0, 20.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if score(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((theta[n] - 0.5 * (lo + hi)).abs() < 1e-8, "{} vs {}", theta[n], 0.5 * (lo + hi));
}

#[test]
fn mm_iterations_reach_the_conditional_maximizer() {
    let n = 20;
    let spec = ModelSpec::undirected_example(n, ResponseFamily::bernoulli()).unwrap();
    let mut r = rng(8);
    let pop = random_population(&mut r, n, 0.3);
    let data = random_dataset(&mut r, &spec, 0.25);
    let design = Design::new(&spec, &pop, &data).unwrap();
    let astar = MinorizerMatrix::for_spec(&spec).unwrap();
    let start = random_theta(&mut r, &spec, 0.5).values().to_vec();

    let mut theta = start.clone();
    let mut prev = design.value(&theta).unwrap();
    for it in 0..5000 {
        let g = design.evaluate(&theta, Want::GRADIENT).unwrap().gradient;
        let next = mm_step_theta1(&astar, &theta[..n], &g[..n]).unwrap();
        theta[..n].copy_from_slice(&next);
        let v = design.value(&theta).unwrap();
        if it == 0 {
            assert!(v > prev, "first MM step did not increase the objective");
        }
        assert!(v >= prev - 1e-10 * prev.abs());
        prev = v;
    }

    // dense Newton on the nuisance block with the interest block fixed
    let mut newton = start.clone();
    for _ in 0..100 {
        let obj = design.evaluate(&newton, Want::FULL).unwrap();
        let a = obj.blocks().unwrap().a;
        let step = a.cholesky().unwrap().solve(&DVector::from_column_slice(&obj.gradient[..n]));
        for i in 0..n {
            newton[i] += step[i];
        }
    }
    let d = max_abs_diff(&theta[..n], &newton[..n]);
    assert!(d < 1e-6, "MM limit is {d} away from the Newton solution");
    assert_eq!(&theta[n..], &start[n..]);
}

fn section_instance(n: usize, seed: u64) -> (ModelSpec, Population, Dataset) {
    let spec = ModelSpec::undirected_example(n, ResponseFamily::bernoulli()).unwrap();
    let pop = make_subpopulation_neighborhoods(n).unwrap();
    let mut r = rng(seed);
    let nuisance: Vec<f64> = (0..n).map(|_| -1.4 + 0.2 * (r.random::<f64>() - 0.5)).collect();
    let theta = Theta::from_parts(&nuisance, &[0.3, -2.0, 2.0, 0.2, 0.1, 0.1]);
    let x = DMatrix::from_fn(n, 1, |_, _| r.random::<f64>());
    let draw = simulate(&spec, &pop, &x, &theta, &GibbsConfig::new(300, 1, seed), 1).unwrap().remove(0);
    let data = draw.into_dataset(x).unwrap();
    (spec, pop, data)
}

#[test]
fn acceleration_saves_iterations_without_moving_the_estimate() {
    let (spec, pop, data) = section_instance(100, 2);
    let init = warm_start(&spec, &data).unwrap();
    let tight = FitOptions { tol_theta: 1e-10, tol_loglik: 1e-14, max_iters: 100_000, ..FitOptions::default() };
    let qn = fit(&spec, &pop, &data, &init, &tight).unwrap();
    let mm = fit(&spec, &pop, &data, &init, &FitOptions { accelerate: false, ..tight }).unwrap();
    assert!(qn.converged && mm.converged);
    assert!(qn.iterations <= mm.iterations, "{} vs {}", qn.iterations, mm.iterations);
    let d = max_abs_diff(qn.theta_hat.values(), mm.theta_hat.values());
    assert!(d < 1e-6, "estimates differ by {d}");
}

#[test]
fn tighter_tolerances_shrink_the_gradient() {
    let (spec, pop, data) = section_instance(100, 6);
    let init = warm_start(&spec, &data).unwrap();
    let loose = fit(&spec, &pop, &data, &init, &FitOptions { tol_theta: 1e-3, tol_loglik: 1e-4, ..FitOptions::default() }).unwrap();
    let tight = fit(&spec, &pop, &data, &init, &FitOptions { tol_theta: 1e-5, tol_loglik: 1e-7, ..FitOptions::default() }).unwrap();
    assert!(loose.converged && tight.converged);
    assert!(loose.final_grad_inf_norm.is_finite());
    assert!(tight.final_grad_inf_norm <= loose.final_grad_inf_norm);
    let seq = tight.loglik_sequence();
    assert!(seq.windows(2).all(|w| w[1] >= w[0] - 1e-10 * w[0].abs().max(1.0)));
}

#[test]
fn directed_fit_converges_and_ascends() {
    let n = 100;
    let spec = ModelSpec::directed_application(n, ResponseFamily::bernoulli()).unwrap();
    let mut r = rng(12);
    let pop = make_subpopulation_neighborhoods(n).unwrap();
    let x = random_covariates(&mut r, &spec);
    let mut theta = random_theta(&mut r, &spec, 0.3);
    for v in theta.nuisance_mut() {
        *v -= 1.5;
    }
    let draw = simulate(&spec, &pop, &x, &theta, &GibbsConfig::new(100, 1, 5), 1).unwrap().remove(0);
    let data = draw.into_dataset(x).unwrap();
    let fitted = fit(&spec, &pop, &data, &warm_start(&spec, &data).unwrap(), &FitOptions::default()).unwrap();
    assert!(fitted.converged);
    let seq = fitted.loglik_sequence();
    assert!(seq.windows(2).all(|w| w[1] >= w[0] - 1e-10 * w[0].abs().max(1.0)));
    assert!(fitted.final_loglik >= fitted.initial_loglik);
}
