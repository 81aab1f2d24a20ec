mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use slgl::forward::{forward, sample_potential, ForwardConfig, ForwardProblem};
use slgl::BoundaryAngles;

use common::{cos2x, fd_spectrum};

fn problem(q: impl Fn(f64) -> f64, alpha: f64, beta: f64) -> ForwardProblem {
    let m = 2001;
    let q = sample_potential(m, q).unwrap();
    ForwardProblem::new(&q, BoundaryAngles::new(alpha, beta).unwrap(), m).unwrap()
}

fn neumann(q: impl Fn(f64) -> f64) -> ForwardProblem {
    problem(q, PI / 2.0, PI / 2.0)
}

#[test]
fn phi_closed_forms() {
    let p = neumann(|_| 0.0);
    let t = p.phi(4.0).unwrap();
    for (x, y) in t.grid.abscissae().iter().zip(&t.y) {
        assert!((y - (2.0 * x).cos()).abs() < 1e-8);
    }
    assert!((t.last().0 - 1.0).abs() < 1e-8);

    let t = p.phi(0.0).unwrap();
    assert!(t.y.iter().all(|y| (y - 1.0).abs() < 1e-12));
    assert!(t.yprime.iter().all(|y| y.abs() < 1e-12));

    let t = neumann(|_| 1.0).phi(1.0).unwrap();
    assert!(t.y.iter().all(|y| (y - 1.0).abs() < 1e-12));
}

#[test]
fn psi_closed_forms() {
    let p = neumann(|_| 0.0);
    let t = p.psi(4.0).unwrap();
    for (x, y) in t.grid.abscissae().iter().zip(&t.y) {
        assert!((y - (2.0 * (x - PI)).cos()).abs() < 1e-8);
    }
    assert!((t.first().0 - 1.0).abs() < 1e-8);
    assert!(p.psi(0.0).unwrap().y.iter().all(|y| (y - 1.0).abs() < 1e-12));
    assert!(neumann(|_| 1.0)
        .psi(1.0)
        .unwrap()
        .y
        .iter()
        .all(|y| (y - 1.0).abs() < 1e-12));
}

#[test]
fn characteristic_function_closed_form() {
    let p = neumann(|_| 0.0);
    assert!(p.delta(1.0).unwrap().abs() < 1e-9);
    assert!((p.delta(2.25).unwrap() - 1.5).abs() < 1e-6);
    assert!((p.delta(1.0).unwrap() - p.delta_from_psi(1.0).unwrap()).abs() < 1e-8);
}

#[test]
fn both_forms_of_delta_agree() {
    let p = problem(cos2x, PI / 3.0, 2.0 * PI / 3.0);
    for mu in [-3.0, 0.3, 2.7, 10.1, 55.5, 230.0] {
        let (d1, d2) = (p.delta(mu).unwrap(), p.delta_from_psi(mu).unwrap());
        assert!((d1 - d2).abs() <= 1e-7 * d1.abs().max(1.0), "mu = {mu}: {d1} vs {d2}");
    }
}

#[test]
fn wronskian_is_constant() {
    let p = problem(cos2x, PI / 3.0, 2.0 * PI / 3.0);
    for mu in [0.7, 12.3, 80.9] {
        let w = p.phi(mu).unwrap().wronskian(&p.psi(mu).unwrap());
        let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let spread =
            w.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)) - w.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        assert!(spread <= 1e-7 * scale, "mu = {mu}: spread {spread:e}");
    }
}

#[test]
fn neumann_and_shifted_spectra() {
    let mus = neumann(|_| 0.0).eigenvalues(5).unwrap();
    for (n, mu) in mus.iter().enumerate() {
        assert!((mu - (n * n) as f64).abs() < 1e-8);
    }
    for c in [-2.5, 0.75, 3.0] {
        let mus = neumann(move |_| c).eigenvalues(6).unwrap();
        for (n, mu) in mus.iter().enumerate() {
            assert!((mu - (n * n) as f64 - c).abs() < 1e-8, "c = {c}, n = {n}");
        }
    }
}

#[test]
fn norming_constants_of_neumann_and_shift() {
    for c in [0.0, 1.0] {
        let q = sample_potential(2001, move |_| c).unwrap();
        let r = forward(&q, BoundaryAngles::neumann(), 12, ForwardConfig::default()).unwrap();
        for n in 0..12 {
            let expected = if n == 0 { PI } else { PI / 2.0 };
            assert!((r.spectral.a()[n] - expected).abs() < 1e-8);
            assert!((r.b.values()[n] - expected).abs() < 1e-8);
        }
    }
}

#[test]
fn cos2x_matches_finite_difference_oracle() {
    let q = sample_potential(2001, cos2x).unwrap();
    for (alpha, beta) in [(PI / 2.0, PI / 2.0), (PI / 3.0, 2.0 * PI / 3.0)] {
        let r = forward(
            &q,
            BoundaryAngles::new(alpha, beta).unwrap(),
            8,
            ForwardConfig::default(),
        )
        .unwrap();
        let (mu, a) = fd_spectrum(&cos2x, alpha, beta, 8, 4000);
        for n in 0..8 {
            assert!(
                (r.spectral.mu(n) - mu[n]).abs() < 1e-5,
                "mu_{n}: {} vs {}",
                r.spectral.mu(n),
                mu[n]
            );
            assert!(
                (r.spectral.a()[n] - a[n]).abs() < 1e-5,
                "a_{n}: {} vs {}",
                r.spectral.a()[n],
                a[n]
            );
        }
    }
}

const CLI_FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../cli/tests/fixtures/cos2x_fd_n8.json");

fn cli_fixture_oracle() -> serde_json::Value {
    let cells = 4000;
    let (mu, a) = fd_spectrum(&cos2x, PI / 2.0, PI / 2.0, 8, cells);
    serde_json::json!({ "q": "cos2x", "alpha": PI / 2.0, "beta": PI / 2.0, "cells": cells, "mu": mu, "a": a })
}

/// Regenerate with `cargo test -p slgl --test forward -- --ignored write_cli_fixture`.
#[test]
#[ignore]
fn write_cli_fixture() {
    let file = std::fs::File::create(CLI_FIXTURE).unwrap();
    slgl::json::write_pretty(file, &cli_fixture_oracle()).unwrap();
}

#[test]
fn cli_fixture_matches_oracle() {
    let stored: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(CLI_FIXTURE).unwrap()).unwrap();
    let fresh = cli_fixture_oracle();
    for key in ["mu", "a"] {
        let (s, f) = (stored[key].as_array().unwrap(), fresh[key].as_array().unwrap());
        assert_eq!(s.len(), 8);
        for (x, y) in s.iter().zip(f) {
            assert!((x.as_f64().unwrap() - y.as_f64().unwrap()).abs() < 1e-12, "{key}");
        }
    }
}

#[test]
fn cos2x_norming_constants_approach_unperturbed() {
    let q = sample_potential(2001, cos2x).unwrap();
    let r = forward(&q, BoundaryAngles::neumann(), 40, ForwardConfig::default()).unwrap();
    let dev: Vec<f64> = r.spectral.a()[4..].iter().map(|a| (a - PI / 2.0).abs()).collect();
    assert!(dev.windows(2).all(|w| w[1] < w[0]), "{dev:?}");
}

#[test]
fn negative_ground_state_for_strong_potential() {
    // q = -10: mu_n = n^2 - 10 for Neumann data
    let mus = neumann(|_| -10.0).eigenvalues(5).unwrap();
    assert!((mus[0] + 10.0).abs() < 1e-8);
    assert!((mus[4] - 6.0).abs() < 1e-8);
    // a Robin condition with a large cot(alpha) pulls mu_0 well below zero
    let p = problem(|_| 0.0, 0.2, PI / 2.0);
    let mus = p.eigenvalues(3).unwrap();
    assert!(mus[0] < -10.0);
    assert!(p.delta(mus[0]).unwrap().abs() < 1e-6 * mus[0].abs());
}

#[test]
fn traces_are_retained_on_request() {
    let q = sample_potential(501, cos2x).unwrap();
    let r = forward(
        &q,
        BoundaryAngles::neumann(),
        3,
        ForwardConfig {
            m: 501,
            retain_traces: true,
        },
    )
    .unwrap();
    let traces = r.traces.unwrap();
    assert_eq!(traces.len(), 3);
    for (n, (phi, psi)) in traces.iter().enumerate() {
        assert!((phi.mu - r.spectral.mu(n)).abs() < 1e-12 * phi.mu.abs().max(1.0));
        assert_eq!(phi.first().0, 1.0);
        assert_eq!(psi.last().0, 1.0);
    }
}

#[test]
fn rejects_bad_input() {
    assert!(BoundaryAngles::new(0.0, 1.0).is_err());
    assert!(BoundaryAngles::new(1.0, PI).is_err());
    let q = sample_potential(101, |_| 0.0).unwrap();
    assert!(forward(
        &q,
        BoundaryAngles::neumann(),
        0,
        ForwardConfig {
            m: 101,
            retain_traces: false
        }
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn constant_shift_covariance(
        c in -5.0f64..5.0,
        alpha in 0.3f64..2.8,
        beta in 0.3f64..2.8,
    ) {
        let m = 801;
        let angles = BoundaryAngles::new(alpha, beta).unwrap();
        let config = ForwardConfig { m, retain_traces: false };
        let base = forward(&sample_potential(m, cos2x).unwrap(), angles, 6, config).unwrap();
        let shifted = forward(&sample_potential(m, move |x| cos2x(x) + c).unwrap(), angles, 6, config).unwrap();
        // near-Dirichlet angles make psi_0 huge (b_0 ~ 1e7), so compare relative to scale
        let close = |x: f64, y: f64| (x - y).abs() < 1e-8 * y.abs().max(1.0);
        for n in 0..6 {
            prop_assert!(close(shifted.spectral.mu(n) - c, base.spectral.mu(n)));
            prop_assert!(close(shifted.spectral.a()[n], base.spectral.a()[n]));
            prop_assert!(close(shifted.b.values()[n], base.b.values()[n]));
        }
    }

    #[test]
    fn eigenvalues_strictly_increase(
        amp in -4.0f64..4.0,
        k in 1u32..4,
        alpha in 0.2f64..2.9,
        beta in 0.2f64..2.9,
    ) {
        let p = problem(move |x| amp * (k as f64 * x).sin(), alpha, beta);
        let mus = p.eigenvalues(10).unwrap();
        prop_assert!(mus.windows(2).all(|w| w[1] > w[0]));
    }
}
