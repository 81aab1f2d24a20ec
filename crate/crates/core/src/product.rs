//! Regularized infinite products `prod_{k>=1, k!=n} (mu_k - mu_n) / k^2`.
//!
//! Only finitely many eigenvalues are known, so the sequence is extended by the
//! asymptotic model `mu_k = k^2 + 2 omega` up to the truncation index `K`, and the
//! remaining factors `prod_{k>K} (k^2 + 2 omega - mu_n) / k^2` are split into
//! `prod_{k>K} (1 - mu_n / k^2)`, available in closed form from
//! `sin(pi z) / (pi z) = prod (1 - z^2 / k^2)`, and the correction
//! `prod_{k>K} (1 + 2 omega / (k^2 - mu_n))`, applied to first order in `omega / K`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::SpectralData;

/// Eigenvalue accessor: supplied values for `k < N`, `k^2 + 2 omega` beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueSequence {
    mu: Vec<f64>,
    omega: f64,
}

impl EigenvalueSequence {
    pub fn new(mu: Vec<f64>, omega: f64) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::invalid("eigenvalue sequence is empty"));
        }
        if !omega.is_finite() || mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("eigenvalue sequence contains non-finite values"));
        }
        for k in 1..mu.len() {
            if mu[k] == mu[k - 1] {
                return Err(Error::DegenerateSpectrum {
                    i: k - 1,
                    j: k,
                    value: mu[k],
                });
            }
            if mu[k] < mu[k - 1] {
                return Err(Error::invalid(format!(
                    "eigenvalues not increasing at index {k}: {} < {}",
                    mu[k],
                    mu[k - 1]
                )));
            }
        }
        Ok(Self { mu, omega })
    }

    pub fn from_spectral(data: &SpectralData, omega: f64) -> Result<Self> {
        Self::new(data.mus(), omega)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Number of supplied (non-model) values.
    pub fn supplied(&self) -> usize {
        self.mu.len()
    }

    pub fn get(&self, k: usize) -> f64 {
        match self.mu.get(k) {
            Some(&m) => m,
            None => {
                let kf = k as f64;
                kf * kf + 2.0 * self.omega
            }
        }
    }
}

/// A product value together with its truncation error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductValue {
    pub value: f64,
    pub error_bound: f64,
}

/// Sign and log-magnitude accumulator, so that products of thousands of factors with
/// magnitudes far from one neither overflow nor underflow.
#[derive(Debug, Clone, Copy)]
struct LogProduct {
    log_abs: f64,
    negative: bool,
}

impl LogProduct {
    fn one() -> Self {
        Self {
            log_abs: 0.0,
            negative: false,
        }
    }

    fn mul(&mut self, factor: f64) {
        self.log_abs += factor.abs().ln();
        self.negative ^= factor < 0.0;
    }

    fn div(&mut self, factor: f64) {
        self.log_abs -= factor.abs().ln();
        self.negative ^= factor < 0.0;
    }

    fn value(&self) -> f64 {
        let v = self.log_abs.exp();
        if self.negative {
            -v
        } else {
            v
        }
    }
}

/// `prod_{k > k_max} (1 - z / k^2)` as `[sin(pi sqrt z) / (pi sqrt z)] / prod_{k <= k_max} (1 - z / k^2)`.
///
/// When `sqrt z` is close to an integer `j <= k_max`, both the sine and the `k = j`
/// factor vanish together; that pair is combined analytically before dividing.
fn tail_factor(z: f64, k_max: usize) -> LogProduct {
    let mut p = LogProduct::one();
    if z == 0.0 {
        return p;
    }
    if z < 0.0 {
        let t = (-z).sqrt();
        p.mul((PI * t).sinh() / (PI * t));
        for k in 1..=k_max {
            let kf = k as f64;
            p.div(1.0 - z / (kf * kf));
        }
        return p;
    }
    let r = z.sqrt();
    let j = r.round() as usize;
    if j == 0 || j > k_max {
        p.mul((PI * r).sin() / (PI * r));
        for k in 1..=k_max {
            let kf = k as f64;
            p.div(1.0 - z / (kf * kf));
        }
        return p;
    }
    // sin(pi r) / (pi r) / (1 - r^2/j^2) with d = r - j:
    // = (-1)^(j+1) * sinc(pi d) * j^2 / (r (2j + d))
    let d = r - j as f64;
    let jf = j as f64;
    let sinc = if d == 0.0 { 1.0 } else { (PI * d).sin() / (PI * d) };
    let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
    p.mul(sign * sinc * jf * jf / (r * (2.0 * jf + d)));
    for k in (1..=k_max).filter(|&k| k != j) {
        let kf = k as f64;
        p.div(1.0 - z / (kf * kf));
    }
    p
}

/// `sum_{k>K} 1 / (k^2 - z)` by the midpoint rule `int_{K+1/2}^inf dk / (k^2 - z)`, which is
/// accurate to `O(1 / K^3)` for `sqrt z` well below `K`.
fn tail_sum(z: f64, k_max: usize) -> f64 {
    let edge = k_max as f64 + 0.5;
    if z == 0.0 {
        1.0 / edge
    } else if z > 0.0 {
        let r = z.sqrt();
        (r / edge).atanh() / r
    } else {
        let t = (-z).sqrt();
        (t / edge).atan() / t
    }
}

/// Computes `prod_{k>=1, k!=n} (mu_k - mu_n) / k^2` truncated at `k_max` with the analytic
/// tail. The reported bound covers the second-order `omega` terms and the midpoint-rule
/// error of the tail correction plus accumulated rounding.
pub fn regularized_product(seq: &EigenvalueSequence, n: usize, k_max: usize) -> Result<ProductValue> {
    if k_max <= n.max(10) {
        return Err(Error::invalid(format!(
            "truncation K = {k_max} must exceed max(n, 10) = {}",
            n.max(10)
        )));
    }
    let z = seq.get(n);
    let mut p = LogProduct::one();
    for k in 1..=k_max {
        if k == n {
            continue;
        }
        let diff = seq.get(k) - z;
        if diff == 0.0 {
            return Err(Error::DegenerateSpectrum { i: n, j: k, value: z });
        }
        let kf = k as f64;
        p.mul(diff / (kf * kf));
    }
    let tail = tail_factor(z, k_max);
    p.log_abs += tail.log_abs;
    p.negative ^= tail.negative;
    let omega = seq.omega();
    p.log_abs += 2.0 * omega * tail_sum(z, k_max);
    let value = p.value();

    let kf = k_max as f64;
    let gap = (kf - z.max(0.0).sqrt()).max(1.0);
    // midpoint error ~ 2|omega| / (12 gap^3), second order ~ (2 omega)^2 / (3 gap^3)
    let model = (omega.abs() + 2.0 * omega * omega) / gap.powi(3);
    let rounding = 8.0 * kf * f64::EPSILON;
    Ok(ProductValue {
        value,
        error_bound: value.abs() * (model + rounding),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn squares(n: usize) -> EigenvalueSequence {
        EigenvalueSequence::new((0..n).map(|k| (k * k) as f64).collect(), 0.0).unwrap()
    }

    /// Independent oracle: truncated telescoping partial products of (k^2 - n^2)/k^2.
    fn telescoping(n: usize, upto: usize) -> f64 {
        let nf = n as f64;
        (1..=upto)
            .filter(|&k| k != n)
            .map(|k| {
                let kf = k as f64;
                (kf * kf - nf * nf) / (kf * kf)
            })
            .product()
    }

    #[test]
    fn zero_index_on_squares_is_one() {
        for k in [11, 50, 2000] {
            let p = regularized_product(&squares(30), 0, k).unwrap();
            assert!((p.value - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn first_index_is_one_half() {
        let p = regularized_product(&squares(30), 1, 10_000).unwrap();
        assert!((p.value - 0.5).abs() < 1e-3);
        assert!((telescoping(1, 200_000) - 0.5).abs() < 1e-5);
    }

    #[test]
    fn second_index_is_minus_one_half() {
        let p = regularized_product(&squares(30), 2, 10_000).unwrap();
        assert!((p.value + 0.5).abs() < 1e-3);
        assert!((telescoping(2, 200_000) + 0.5).abs() < 1e-4);
    }

    #[test]
    fn alternating_half_for_every_index() {
        let seq = squares(64);
        for n in 1..60 {
            let p = regularized_product(&seq, n, 2000).unwrap();
            let expected = if n % 2 == 1 { 0.5 } else { -0.5 };
            assert!((p.value - expected).abs() < 1e-10, "n = {n}: {}", p.value);
            // the oracle converges like O(n^2 / K)
            assert!((telescoping(n, 400_000) - expected).abs() < 2e-2, "oracle n = {n}");
        }
    }

    #[test]
    fn doubling_truncation_stays_within_bound() {
        // shifted squares: model tail has omega != 0
        let mu: Vec<f64> = (0..40)
            .map(|k| (k * k) as f64 + 0.7 + 0.01 / (1.0 + k as f64))
            .collect();
        let seq = EigenvalueSequence::new(mu, 0.35).unwrap();
        for n in [0, 1, 5, 20] {
            let p1 = regularized_product(&seq, n, 1000).unwrap();
            let p2 = regularized_product(&seq, n, 2000).unwrap();
            assert!((p1.value - p2.value).abs() < p1.error_bound, "n = {n}");
        }
        let seq = squares(40);
        for n in [0, 3, 17] {
            let p1 = regularized_product(&seq, n, 1000).unwrap();
            let p2 = regularized_product(&seq, n, 2000).unwrap();
            assert!((p1.value - p2.value).abs() <= p1.error_bound, "n = {n}");
        }
    }

    #[test]
    fn negative_eigenvalue_tail() {
        // mu_k = k^2 - 1: the k=1 factor vanishes only for n = 1, so n = 0 (mu_0 = -1) is finite
        let mu: Vec<f64> = (0..20).map(|k| (k * k) as f64 - 1.0).collect();
        let seq = EigenvalueSequence::new(mu, -0.5).unwrap();
        let p = regularized_product(&seq, 0, 5000).unwrap();
        // prod_{k>=1} k^2/k^2 = 1 for the supplied part; model tail has (k^2 - 1 + 1)/k^2 = 1
        assert!((p.value - 1.0).abs() < 1e-3);
    }

    #[test]
    fn errors() {
        let seq = squares(20);
        assert!(matches!(
            regularized_product(&seq, 1, 10),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            regularized_product(&seq, 15, 15),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            EigenvalueSequence::new(vec![0.0, 1.0, 1.0], 0.0),
            Err(Error::DegenerateSpectrum { .. })
        ));
        // a supplied value colliding with the model extension
        let seq = EigenvalueSequence::new(vec![0.0, 1.0, 400.0], 0.0).unwrap();
        assert!(matches!(
            regularized_product(&seq, 2, 100),
            Err(Error::DegenerateSpectrum { .. })
        ));
    }
}
