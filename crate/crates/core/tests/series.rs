mod common;

use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;
use slgl::forward::{forward, sample_potential, ForwardConfig};
use slgl::series::{
    build_f, build_f_direct, decompose, eval_a_accelerated, eval_a_direct, eval_l, eval_s, f_diagonal, tabulate_a,
    Taper, DEFAULT_DECAY_THRESHOLD,
};
use slgl::{BoundaryAngles, SpectralData};

use common::cos2x;

/// Forward data for `q = cos 2x` with `alpha = pi/3`, `beta = pi/2`, 128 pairs.
fn cos2x_data() -> &'static SpectralData {
    static DATA: OnceLock<SpectralData> = OnceLock::new();
    DATA.get_or_init(|| {
        let q = sample_potential(2001, cos2x).unwrap();
        let angles = BoundaryAngles::new(PI / 3.0, PI / 2.0).unwrap();
        forward(&q, angles, 128, ForwardConfig::default()).unwrap().spectral
    })
}

fn perturbed_a0(n: usize, c: f64) -> SpectralData {
    SpectralData::neumann(n).with_norming(0, PI / (1.0 + PI * c)).unwrap()
}

#[test]
fn decomposition_of_forward_data_decays() {
    let dec = decompose(cos2x_data(), DEFAULT_DECAY_THRESHOLD).unwrap();
    assert!(dec.verdict.ok(), "{:?}", dec.verdict);
    // 2 omega = (2/pi)(cot beta - cot alpha) + (1/pi) int q, and int cos 2x = 0
    let omega = -1.0 / (PI * (PI / 3.0f64).tan());
    assert!((dec.omega - omega).abs() < 1e-5, "omega = {}", dec.omega);
    // the top quartile sits at the noise floor of the omega estimate, far below the head
    let n_l = |k: usize| (k as f64 * dec.l[k]).abs();
    let head = (1..dec.len() / 4).map(n_l).fold(0.0, f64::max);
    let tail = dec.top_quartile().map(n_l).fold(0.0, f64::max);
    assert!(tail < 1e-2 * head, "|n l_n|: head {head:e}, top quartile {tail:e}");
    // stored fields reconstruct the data
    for n in 1..dec.len() {
        assert!((dec.omega / n as f64 + dec.l[n] - dec.rho[n]).abs() < 1e-14);
        assert_eq!(PI / 2.0 + dec.s[n], cos2x_data().a()[n]);
    }
}

#[test]
fn l_series_matches_reference_sum() {
    let n = 64;
    let mut dec = decompose(&SpectralData::neumann(n), DEFAULT_DECAY_THRESHOLD)
        .unwrap()
        .with_taper(Taper::none(n));
    assert_eq!(eval_l(0.7, &dec).value, 0.0);
    for k in 1..n {
        dec.l[k] = 1.0 / (k * k) as f64;
    }
    let x = PI / 2.0;
    let reference: f64 = (1..n).map(|k| (k as f64 * x).sin() / (k * k) as f64).sum();
    assert!((eval_l(x, &dec).value - reference).abs() < 1e-10);
}

#[test]
fn single_s_mode() {
    let n = 40;
    let mut dec = decompose(&SpectralData::neumann(n), DEFAULT_DECAY_THRESHOLD).unwrap();
    dec.s[3] = 1.0;
    for x in [0.0, 0.4, 2.0, 5.5] {
        assert!((eval_s(x, &dec).value - (3.0 * x).cos()).abs() < 1e-15);
    }
}

#[test]
fn a_of_closed_form_data() {
    let d = SpectralData::neumann(32);
    let dec = decompose(&d, DEFAULT_DECAY_THRESHOLD).unwrap();
    for x in [0.0, 0.3, 3.0, 6.0] {
        assert_eq!(eval_a_direct(&d, x, 32), 0.0);
        assert!(eval_a_accelerated(&d, &dec, x).abs() < 1e-15);
    }
    let c = 0.37;
    let d = perturbed_a0(32, c);
    let dec = decompose(&d, DEFAULT_DECAY_THRESHOLD).unwrap();
    for x in [0.0, 0.3, 3.0, 6.0] {
        assert!((eval_a_direct(&d, x, 32) - c).abs() < 1e-15);
        assert_eq!(eval_a_accelerated(&d, &dec, x), eval_a_direct(&d, x, 32));
    }
}

#[test]
fn direct_partial_sums_settle() {
    let d = cos2x_data();
    let s = |n: usize| eval_a_direct(d, 1.0, n);
    let steps: Vec<f64> = [16, 32, 64].iter().map(|&n| (s(2 * n) - s(n)).abs()).collect();
    assert!(steps.windows(2).all(|w| w[1] < w[0]), "{steps:?}");
}

#[test]
fn accelerated_sum_within_direct_trend() {
    let d = cos2x_data();
    let dec = decompose(d, DEFAULT_DECAY_THRESHOLD).unwrap();
    let n = d.len();
    for x in [0.5, 1.0, 2.0] {
        let acc = eval_a_accelerated(d, &dec, x);
        let direct = eval_a_direct(d, x, n);
        let trend = (direct - eval_a_direct(d, x, n / 2)).abs();
        assert!(
            (acc - direct).abs() <= trend + 1e-6,
            "x = {x}: {acc} vs {direct}, trend {trend:e}"
        );
    }
}

#[test]
fn kernels_of_closed_form_data() {
    let d = SpectralData::neumann(32);
    let dec = decompose(&d, DEFAULT_DECAY_THRESHOLD).unwrap();
    assert_eq!(build_f(&d, &dec, 41).unwrap().max_abs(), 0.0);

    let c = -0.2;
    let d = perturbed_a0(32, c);
    let dec = decompose(&d, DEFAULT_DECAY_THRESHOLD).unwrap();
    let f = build_f(&d, &dec, 41).unwrap();
    for i in 0..41 {
        for j in 0..=i {
            assert!((f.get(i, j) - c).abs() < 1e-15);
        }
    }
}

#[test]
fn diagonal_derivative_closed_forms() {
    let d = SpectralData::neumann(32);
    let dec = decompose(&d, DEFAULT_DECAY_THRESHOLD).unwrap();
    let fd = f_diagonal(&tabulate_a(&d, &dec, 101).unwrap()).unwrap();
    assert!(fd.f.values().iter().all(|&v| v == 0.0));

    let d = perturbed_a0(32, 0.5);
    let dec = decompose(&d, DEFAULT_DECAY_THRESHOLD).unwrap();
    let fd = f_diagonal(&tabulate_a(&d, &dec, 101).unwrap()).unwrap();
    assert!(fd.f.values().iter().all(|v| v.abs() < 1e-12));

    // 1/a_1 = 2/pi + 1 gives a(x) = cos x, so F(x, x) = (cos 2x + 1) / 2 and f(x) = -sin 2x
    let d = SpectralData::neumann(32)
        .with_norming(1, 1.0 / (1.0 + 2.0 / PI))
        .unwrap();
    let dec = decompose(&d, DEFAULT_DECAY_THRESHOLD).unwrap();
    let table = tabulate_a(&d, &dec, 801).unwrap();
    let fd = f_diagonal(&table).unwrap();
    for (x, v) in fd.f.grid().abscissae().iter().zip(fd.f.values()) {
        assert!((v + (2.0 * x).sin()).abs() < 2e-3, "x = {x}");
    }
    assert!((table.a_zero() - 1.0).abs() < 1e-14);
}

#[test]
fn diagonal_derivative_of_forward_data_is_bounded_and_converges() {
    let d = cos2x_data();
    let dec = decompose(d, DEFAULT_DECAY_THRESHOLD).unwrap();
    let integral = |m: usize| {
        let fd = f_diagonal(&tabulate_a(d, &dec, m).unwrap()).unwrap();
        let xs = fd.f.grid().abscissae();
        let bound = xs
            .iter()
            .zip(fd.f.values())
            .filter(|(x, _)| **x >= 0.05 && **x <= PI - 0.05)
            .fold(0.0f64, |acc, (_, v)| acc.max(v.abs()));
        assert!(bound < 10.0, "m = {m}: sup |f| = {bound}");
        slgl::integrate_trapezoid(&fd.f)
    };
    let (i1, i2, i3) = (integral(101), integral(201), integral(401));
    assert!((i3 - i2).abs() <= (i2 - i1).abs() + 1e-9, "{i1} {i2} {i3}");
}

#[test]
fn a_zero_reproduces_cot_alpha() {
    let d = cos2x_data();
    let cot_alpha = 1.0 / (PI / 3.0f64).tan();
    let residual = |n: usize| {
        let t = d.truncated(n).unwrap();
        let dec = decompose(&t, DEFAULT_DECAY_THRESHOLD).unwrap();
        (tabulate_a(&t, &dec, 11).unwrap().a_zero() - cot_alpha).abs()
    };
    let r: Vec<f64> = [32, 64, 128].iter().map(|&n| residual(n)).collect();
    assert!(r.windows(2).all(|w| w[1] < w[0]), "{r:?}");
    assert!(r[2] < 1e-2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// cos A cos B = (cos(A + B) + cos(A - B)) / 2, term by term.
    #[test]
    fn kernel_identity_for_arbitrary_data(
        shifts in proptest::collection::vec(-0.3f64..0.3, 20),
        norms in proptest::collection::vec(0.5f64..2.0, 20),
    ) {
        let lambda: Vec<f64> = shifts.iter().enumerate().map(|(n, s)| n as f64 + s).collect();
        let d = SpectralData::new(lambda, norms).unwrap();
        let m = 31;
        let f = build_f_direct(&d, m, 20).unwrap();
        let xs = f.grid().abscissae();
        for i in 0..m {
            for j in 0..=i {
                let a = 0.5 * (eval_a_direct(&d, xs[i] + xs[j], 20) + eval_a_direct(&d, xs[i] - xs[j], 20));
                prop_assert!((f.get(i, j) - a).abs() < 1e-12);
                prop_assert_eq!(f.sym(i, j), f.sym(j, i));
            }
        }
    }
}
