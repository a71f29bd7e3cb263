//! Optimizer behaviour on the desk instance.

mod common;

use common::*;
use impulse_control::control::DiscreteControl;
use impulse_control::expr::Expr;
use impulse_control::optimizer::{alpha_zero_bound, optimality_certificate, solve_fista, FistaOptions};
use impulse_control::problem::{Discretization, ProblemData};

fn distance(disc: &Discretization, a: &DiscreteControl, b: &DiscreteControl) -> f64 {
    let d = a.add_scaled(-1.0, b);
    DiscreteControl::inner(disc, &d, &d).sqrt()
}

fn size(disc: &Discretization, a: &DiscreteControl) -> f64 {
    DiscreteControl::inner(disc, a, a).sqrt()
}

fn desk_at_fraction(fraction: f64) -> (Discretization, ProblemData) {
    let (disc, mut data) = desk(8, 16, 1.0);
    data.alpha = fraction * alpha_zero_bound(&disc, &data).unwrap();
    (disc, data)
}

#[test]
fn random_starts_reach_the_same_minimizer() {
    let (disc, data) = desk_at_fraction(0.3);
    let (base, rep) = solve_fista(&disc, &data, &FistaOptions::default()).unwrap();
    for seed in 0..3 {
        let start = random_control(&disc, &mut rng(40 + seed)).scaled(5.0);
        let opts = FistaOptions { initial: Some(start), ..Default::default() };
        let (q, other) = solve_fista(&disc, &data, &opts).unwrap();
        assert!(other.converged);
        assert!((other.objective - rep.objective).abs() <= 1e-7 * (1.0 + rep.objective.abs()));
        assert!(distance(&disc, &q, &base) <= 1e-3 * size(&disc, &base), "seed {seed}");
        assert_eq!(q.support(), base.support());
    }
}

#[test]
fn doubling_data_and_alpha_doubles_the_control() {
    let (disc, data) = desk_at_fraction(0.3);
    let (q, rep) = solve_fista(&disc, &data, &FistaOptions::default()).unwrap();

    let mut spec = desk_spec(2.0 * data.alpha);
    spec.target = Expr::parse(&format!("2*({DESK_TARGET})")).unwrap();
    spec.terminal_target = Expr::parse(&format!("2*({DESK_TERMINAL})")).unwrap();
    let doubled = ProblemData::new(&spec, &disc).unwrap();
    let (q2, rep2) = solve_fista(&disc, &doubled, &FistaOptions::default()).unwrap();

    assert!(distance(&disc, &q2, &q.scaled(2.0)) <= 1e-4 * size(&disc, &q2));
    assert!((rep2.objective - 4.0 * rep.objective).abs() <= 1e-7 * rep2.objective.abs());
    assert!((alpha_zero_bound(&disc, &doubled).unwrap() - 2.0 * alpha_zero_bound(&disc, &data).unwrap()).abs() < 1e-10);
}

#[test]
fn accelerated_result_matches_long_plain_gradient_run() {
    let (disc, data) = desk_at_fraction(0.5);
    let (q, rep) = solve_fista(&disc, &data, &FistaOptions::default()).unwrap();
    let plain = FistaOptions {
        accelerate: false,
        restart: false,
        max_iter: 10 * FistaOptions::default().max_iter,
        tol_bound: Some(1e-9 * data.alpha),
        tol_align: 1e-9,
        ..Default::default()
    };
    let (p, reference) = solve_fista(&disc, &data, &plain).unwrap();
    assert!(reference.objective <= rep.objective + 1e-9 * (1.0 + rep.objective.abs()));
    assert!(rep.objective - reference.objective <= 1e-7 * (1.0 + reference.objective.abs()));
    assert!(distance(&disc, &q, &p) <= 1e-3 * size(&disc, &p));
}

#[test]
fn relative_alpha_sweep_shrinks_support() {
    let mut last = usize::MAX;
    for fraction in [0.2, 0.4, 0.6, 0.8] {
        let (disc, data) = desk_at_fraction(fraction);
        let (q, _) = solve_fista(&disc, &data, &FistaOptions::default()).unwrap();
        let c = optimality_certificate(&disc, &data, &q).unwrap();
        assert!(c.r_bound <= 1e-6 * data.alpha && c.r_align <= 1e-6);
        let n = q.support().len();
        assert!(n <= last, "support grew at {fraction}");
        last = n;
    }
    assert!(last > 0);
}
