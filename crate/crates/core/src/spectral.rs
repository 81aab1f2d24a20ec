//! Boundary angles and spectral data containers, with their JSON file format.

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary angles `(alpha, beta)` in radians, both strictly inside `(0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryAngles {
    alpha: f64,
    beta: f64,
}

impl BoundaryAngles {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v > 0.0 && v < PI) {
                return Err(Error::invalid(format!("{name} = {v} must lie strictly inside (0, pi)")));
            }
        }
        Ok(Self { alpha, beta })
    }

    /// Both conditions of Neumann type, `y'(0) = y'(pi) = 0`.
    pub fn neumann() -> Self {
        Self {
            alpha: PI / 2.0,
            beta: PI / 2.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn cot_alpha(&self) -> f64 {
        cot(self.alpha)
    }

    pub fn cot_beta(&self) -> f64 {
        cot(self.beta)
    }
}

pub(crate) fn cot(x: f64) -> f64 {
    x.cos() / x.sin()
}

/// Inverse cotangent onto `(0, pi)`.
pub fn arccot(y: f64) -> f64 {
    1.0f64.atan2(y)
}

/// `cos(sqrt(mu) x)` for a signed square root `lambda` (negative encodes `mu = -lambda^2`).
#[inline]
pub fn cos_signed(lambda: f64, x: f64) -> f64 {
    if lambda >= 0.0 {
        (lambda * x).cos()
    } else {
        (lambda * x).cosh()
    }
}

/// Eigenvalues, stored through their signed square roots, and norming constants.
///
/// `lambda[n]` is `sqrt(mu_n)` when `mu_n >= 0`, and `-sqrt(-mu_n)` otherwise, so that
/// `mu_n = lambda[n] * |lambda[n]|`. The constructor only checks the structure (equal
/// lengths, finite entries); ordering and positivity are checked by the validator so that
/// invalid candidates can still be inspected.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    lambda: Vec<f64>,
    a: Vec<f64>,
}

impl SpectralData {
    pub fn new(lambda: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::invalid("spectral data needs at least one pair"));
        }
        if lambda.len() != a.len() {
            return Err(Error::invalid(format!(
                "lambda has {} entries but a has {}",
                lambda.len(),
                a.len()
            )));
        }
        if lambda.iter().chain(&a).any(|v| !v.is_finite()) {
            return Err(Error::invalid("spectral data contains non-finite entries"));
        }
        Ok(Self { lambda, a })
    }

    /// Builds the data from eigenvalues rather than their square roots.
    pub fn from_mu(mu: &[f64], a: Vec<f64>) -> Result<Self> {
        let lambda = mu.iter().map(|&m| m.signum() * m.abs().sqrt()).collect();
        Self::new(lambda, a)
    }

    /// Unperturbed Neumann data: `lambda_n = n`, `a_0 = pi`, `a_n = pi/2`.
    pub fn neumann(n: usize) -> Self {
        let lambda = (0..n).map(|k| k as f64).collect();
        let a = (0..n).map(|k| if k == 0 { PI } else { PI / 2.0 }).collect();
        Self { lambda, a }
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn mu(&self, n: usize) -> f64 {
        let l = self.lambda[n];
        l * l.abs()
    }

    pub fn mus(&self) -> Vec<f64> {
        (0..self.len()).map(|n| self.mu(n)).collect()
    }

    /// First `n` pairs.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::invalid(format!("cannot truncate {} pairs to {n}", self.len())));
        }
        Ok(Self {
            lambda: self.lambda[..n].to_vec(),
            a: self.a[..n].to_vec(),
        })
    }

    /// Norming constants with `a_n` replaced.
    pub fn with_norming(&self, n: usize, value: f64) -> Result<Self> {
        let mut a = self.a.clone();
        *a.get_mut(n)
            .ok_or_else(|| Error::invalid(format!("index {n} out of range")))? = value;
        Self::new(self.lambda.clone(), a)
    }
}

/// Norming constants `b_n` of the eigenfunctions normalized at the right endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct NormingB {
    b: Vec<f64>,
}

impl NormingB {
    pub fn new(b: Vec<f64>) -> Result<Self> {
        if let Some(i) = b.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid(format!("b_{i} = {} is not positive", b[i])));
        }
        Ok(Self { b })
    }

    pub fn values(&self) -> &[f64] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }
}

/// On-disk form: `{"N": int, "lambda": [...], "a": [...]}` with an optional `"b"` array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFile {
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: Vec<f64>,
    pub a: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
}

impl SpectralFile {
    pub fn from_data(data: &SpectralData, b: Option<&NormingB>) -> Self {
        Self {
            n: data.len(),
            lambda: data.lambda.clone(),
            a: data.a.clone(),
            b: b.map(|b| b.b.clone()),
        }
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let file: SpectralFile = serde_json::from_reader(reader)?;
        file.check()?;
        Ok(file)
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        crate::json::write_pretty(writer, self)
    }

    fn check(&self) -> Result<()> {
        if self.lambda.len() != self.n || self.a.len() != self.n {
            return Err(Error::Parse(format!(
                "N = {} but lambda has {} entries and a has {}",
                self.n,
                self.lambda.len(),
                self.a.len()
            )));
        }
        if let Some(b) = &self.b {
            if b.len() != self.n {
                return Err(Error::Parse(format!("N = {} but b has {} entries", self.n, b.len())));
            }
        }
        Ok(())
    }

    pub fn spectral(&self) -> Result<SpectralData> {
        self.check()?;
        SpectralData::new(self.lambda.clone(), self.a.clone())
    }
}
