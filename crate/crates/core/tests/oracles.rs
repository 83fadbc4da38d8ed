//! Every shipped problem against finite differences of its own losses.

mod common;

use common::*;
use hoag_core::check::*;
use hoag_core::problems::AnalyticToyProblem;
use hoag_core::BilevelProblem;

const STEP: f64 = 1e-6;

fn check_problem<P: BilevelProblem>(p: &P, seed: u64, lambdas: &[Vec<f64>], x_scale: f64) {
    let mut r = rng(seed);
    for lambda in lambdas {
        for _ in 0..3 {
            let x: Vec<f64> = gaussian_vec(&mut r, p.n_params()).iter().map(|v| v * x_scale).collect();
            let u = gaussian_vec(&mut r, p.n_params());
            let v = gaussian_vec(&mut r, p.n_params());
            let name = p.name();
            assert!(inner_grad_error(p, &x, lambda, STEP) < 1e-5, "{name}: inner gradient");
            assert!(outer_grad_params_error(p, &x, lambda, STEP) < 1e-5, "{name}: outer gradient in x");
            let hyper = outer_grad_hyper_error(p, &x, lambda, STEP);
            assert!(hyper < 1e-5, "{name}: outer gradient in lambda ({hyper:e})");
            assert!(hessian_vec_error(p, &x, lambda, &v, STEP) < 1e-5, "{name}: Hessian-vector product");
            assert!(cross_vec_error(p, &x, lambda, &v, STEP) < 1e-5, "{name}: cross derivative");
            assert!(hessian_asymmetry(p, &x, lambda, &u, &v) < 1e-8, "{name}: Hessian symmetry");
            let hv = p.hessian_vec(&x, lambda, &v);
            assert!(v.iter().zip(&hv).map(|(a, b)| a * b).sum::<f64>() > 0.0, "{name}: positive curvature");
        }
    }
}

#[test]
fn toy_oracles() {
    let toy = AnalyticToyProblem::new(vec![2.0, -1.0, 0.5], vec![0.3, 0.0, -0.2]).unwrap();
    check_problem(&toy, 1, &[vec![-2.0], vec![0.0], vec![1.5]], 1.0);
}

#[test]
fn logistic_oracles() {
    let (p, _) = logistic_synthetic();
    check_problem(&p, 2, &[vec![-1.0], vec![0.0], vec![2.0]], 0.3);
    // no direct dependence of the outer loss on lambda
    let mut r = rng(9);
    for _ in 0..5 {
        let x = gaussian_vec(&mut r, 20);
        assert_eq!(p.outer_grad_hyper(&x, &[r.random_range(-12.0..12.0)]), vec![0.0]);
    }
}

#[test]
fn kernel_ridge_oracles() {
    let (p, _) = kernel_ridge_synthetic(60, 4);
    check_problem(&p, 3, &[vec![0.0, 0.0], vec![-1.6, -2.0], vec![0.5, 1.0]], 0.5);
}

#[test]
fn kernel_ridge_squared_distance_oracles() {
    let s = split(&hoag_core::dataio::synth_regression(45, 3, 0.2, 8), 8);
    let p = hoag_core::problems::KernelRidgeProblem::new(
        &s.train,
        &s.test,
        hoag_core::problems::KernelDistance::SquaredEuclidean,
    )
    .unwrap();
    check_problem(&p, 5, &[vec![-1.0, -1.0]], 0.5);
}

#[test]
fn multinomial_oracles() {
    let p = multinomial_synthetic();
    let s = p.n_hyper();
    let mut r = rng(6);
    let mixed: Vec<f64> = (0..s).map(|_| r.random_range(-2.0..2.0)).collect();
    check_problem(&p, 4, &[vec![0.0; s], mixed], 0.3);
}

use rand::Rng;
