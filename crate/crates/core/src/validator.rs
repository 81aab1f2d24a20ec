//! Checks of candidate spectral data against the characterization conditions: ordering
//! and positivity, decay of the asymptotic remainders, and the two trace identities
//! tying the norming constants to `cot alpha` and `cot beta`.
//!
//! Finite data can only satisfy the identities up to a tail, so each identity passes when
//! its partial-sum residual is below a tolerance calibrated from the measured decay of
//! `s_n`. The absolute-continuity conditions on the remainders are not finitely checkable;
//! they are reported as total-variation diagnostics and never fail.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::Result;
use crate::inverse::{b_from_a, DEFAULT_PRODUCT_TRUNCATION};
use crate::series::{decompose, eval_l, eval_s, AsymptoticDecomposition, MIN_TERMS};
use crate::spectral::{cot, SpectralData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// reported for information only
    Diagnostic,
    /// not evaluated (too few terms or an earlier failure)
    Skipped,
}

impl Status {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    fn blocks(self) -> bool {
        self == Status::Fail
    }
}

/// Ordering of the eigenvalues and positivity of the norming constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardChecks {
    pub ordering: Status,
    pub positivity: Status,
    /// indices `k` with `mu_k <= mu_{k-1}`
    pub ordering_violations: Vec<usize>,
    /// indices with `a_n <= 0`
    pub nonpositive: Vec<usize>,
}

impl HardChecks {
    pub fn passed(&self) -> bool {
        self.ordering == Status::Pass && self.positivity == Status::Pass
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if !self.ordering_violations.is_empty() {
            parts.push(format!(
                "eigenvalues not strictly increasing at indices {:?}",
                self.ordering_violations
            ));
        }
        if !self.nonpositive.is_empty() {
            parts.push(format!(
                "norming constants not positive at indices {:?}",
                self.nonpositive
            ));
        }
        if parts.is_empty() {
            "ordering and positivity hold".to_string()
        } else {
            parts.join("; ")
        }
    }
}

pub fn check_hard(spectral: &SpectralData) -> HardChecks {
    let mu = spectral.mus();
    let ordering_violations: Vec<usize> = (1..mu.len()).filter(|&k| mu[k] <= mu[k - 1]).collect();
    let nonpositive: Vec<usize> = spectral
        .a()
        .iter()
        .enumerate()
        .filter(|(_, &a)| a <= 0.0)
        .map(|(k, _)| k)
        .collect();
    HardChecks {
        ordering: Status::from_bool(ordering_violations.is_empty()),
        positivity: Status::from_bool(nonpositive.is_empty()),
        ordering_violations,
        nonpositive,
    }
}

/// Decay of `n l_n` and `n s_n` over the top quartile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsCheck {
    pub eigenvalues: Status,
    pub norming: Status,
    pub omega: f64,
    pub max_n_l: f64,
    pub max_n_s: f64,
    pub threshold: f64,
}

impl AsymptoticsCheck {
    pub fn passed(&self) -> bool {
        !self.eigenvalues.blocks() && !self.norming.blocks()
    }
}

pub fn check_asymptotics(spectral: &SpectralData, threshold: f64) -> Result<AsymptoticsCheck> {
    let dec = decompose(spectral, threshold)?;
    Ok(asymptotics_from(&dec))
}

fn asymptotics_from(dec: &AsymptoticDecomposition) -> AsymptoticsCheck {
    AsymptoticsCheck {
        eigenvalues: Status::from_bool(dec.verdict.eigenvalues_ok),
        norming: Status::from_bool(dec.verdict.norming_ok),
        omega: dec.omega,
        max_n_l: dec.verdict.max_n_l,
        max_n_s: dec.verdict.max_n_s,
        threshold: dec.verdict.threshold,
    }
}

/// Residual of one trace identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub status: Status,
    pub residual: f64,
    pub tolerance: f64,
    /// estimate of the dropped tail `sum_{n >= N}`
    pub tail: f64,
}

/// Tolerance `10 max |n s_n| / N + 1e-3` and tail `(4/pi^2) max (n^2 |s_n|) / (N - 1)`, with
/// the maxima over the top quartile of `s_n = c_n - pi/2`.
fn calibrate(c: &[f64]) -> (f64, f64) {
    let n = c.len();
    if n < 2 {
        return (1e-3, 0.0);
    }
    let quartile = (n - n / 4).max(1)..n;
    let s = |k: usize| (c[k] - PI / 2.0).abs();
    let max_ns = quartile.clone().map(|k| k as f64 * s(k)).fold(0.0, f64::max);
    let max_n2s = quartile.map(|k| (k * k) as f64 * s(k)).fold(0.0, f64::max);
    let nf = n as f64;
    (10.0 * max_ns / nf + 1e-3, 4.0 / (PI * PI) * max_n2s / (nf - 1.0))
}

/// `1/c_0 - 1/pi + sum_{n>=1} (1/c_n - 2/pi)` over the supplied terms.
pub fn trace_sum(c: &[f64]) -> f64 {
    c.iter()
        .enumerate()
        .map(|(n, v)| 1.0 / v - if n == 0 { 1.0 / PI } else { 2.0 / PI })
        .sum()
}

/// `|sum (1/a_n - 1/a0_n) - cot alpha|` against the calibrated tolerance.
pub fn check_alpha_identity(spectral: &SpectralData, alpha: f64) -> IdentityCheck {
    let residual = (trace_sum(spectral.a()) - cot(alpha)).abs();
    let (tolerance, tail) = calibrate(spectral.a());
    IdentityCheck {
        status: Status::from_bool(residual < tolerance + tail),
        residual,
        tolerance,
        tail,
    }
}

/// Identity check for `beta` with the `b_n` recovered through the regularized products.
/// The propagated product truncation error is added to the tail.
pub fn check_beta_identity(spectral: &SpectralData, beta: f64, k_max: usize) -> Result<IdentityCheck> {
    let conv = b_from_a(spectral, k_max)?;
    let b = conv.b.values();
    let residual = (trace_sum(b) + cot(beta)).abs();
    let (tolerance, tail) = calibrate(b);
    let product_error: f64 = b.iter().zip(&conv.relative_error).map(|(b, e)| e / b).sum();
    let tail = tail + product_error;
    Ok(IdentityCheck {
        status: Status::from_bool(residual < tolerance + tail),
        residual,
        tolerance,
        tail,
    })
}

/// Total variation of the tapered remainder series on `[0.05, 2 pi - 0.05]` with all
/// terms and with the first half. Growth with `N` hints at a non-absolutely-continuous limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcProxy {
    pub status: Status,
    pub l_variation: f64,
    pub l_variation_half: f64,
    pub s_variation: f64,
    pub s_variation_half: f64,
}

const AC_SAMPLES: usize = 400;

fn total_variation(f: impl Fn(f64) -> f64) -> f64 {
    let (lo, hi) = (0.05, 2.0 * PI - 0.05);
    let step = (hi - lo) / AC_SAMPLES as f64;
    let values: Vec<f64> = (0..=AC_SAMPLES).map(|k| f(lo + k as f64 * step)).collect();
    values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

pub fn ac_proxy(spectral: &SpectralData, threshold: f64) -> Result<AcProxy> {
    let full = decompose(spectral, threshold)?;
    let (l_half, s_half) = match spectral
        .truncated(spectral.len() / 2)
        .and_then(|d| decompose(&d, threshold))
    {
        Ok(half) => (
            total_variation(|x| eval_l(x, &half).value),
            total_variation(|x| eval_s(x, &half).value),
        ),
        Err(_) => (f64::NAN, f64::NAN),
    };
    Ok(AcProxy {
        status: Status::Diagnostic,
        l_variation: total_variation(|x| eval_l(x, &full).value),
        l_variation_half: l_half,
        s_variation: total_variation(|x| eval_s(x, &full).value),
        s_variation_half: s_half,
    })
}

/// Settings of [`validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationConfig {
    pub decay_threshold: f64,
    pub k_max: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            decay_threshold: crate::series::DEFAULT_DECAY_THRESHOLD,
            k_max: DEFAULT_PRODUCT_TRUNCATION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub hard: HardChecks,
    pub asymptotics: Option<AsymptoticsCheck>,
    pub alpha_identity: Option<IdentityCheck>,
    pub beta_identity: Option<IdentityCheck>,
    pub ac_proxy: Option<AcProxy>,
    pub notes: Vec<String>,
    pub passed: bool,
}

/// Runs every check. The verdict requires the hard checks, the decay checks (when at
/// least [`MIN_TERMS`] pairs are given) and both identities.
pub fn validate(spectral: &SpectralData, alpha: f64, beta: f64, config: &ValidationConfig) -> Result<ValidationReport> {
    let hard = check_hard(spectral);
    let mut notes = Vec::new();
    let mut report = ValidationReport {
        n: spectral.len(),
        alpha,
        beta,
        hard,
        asymptotics: None,
        alpha_identity: None,
        beta_identity: None,
        ac_proxy: None,
        notes: Vec::new(),
        passed: false,
    };
    if !report.hard.passed() {
        notes.push(report.hard.describe());
        report.notes = notes;
        return Ok(report);
    }
    if spectral.len() >= MIN_TERMS {
        report.asymptotics = Some(check_asymptotics(spectral, config.decay_threshold)?);
        report.ac_proxy = Some(ac_proxy(spectral, config.decay_threshold)?);
        notes.push("absolute-continuity proxies are calibration diagnostics and never fail".to_string());
    } else {
        notes.push(format!("fewer than {MIN_TERMS} pairs: decay checks skipped"));
    }
    report.alpha_identity = Some(check_alpha_identity(spectral, alpha));
    report.beta_identity = Some(check_beta_identity(spectral, beta, config.k_max)?);
    report.passed = report.asymptotics.as_ref().is_none_or(|a| a.passed())
        && report.alpha_identity.as_ref().is_some_and(|c| c.status == Status::Pass)
        && report.beta_identity.as_ref().is_some_and(|c| c.status == Status::Pass);
    report.notes = notes;
    Ok(report)
}
