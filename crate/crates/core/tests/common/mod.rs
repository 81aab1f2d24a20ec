//! Independent oracles shared by the integration tests.
//!
//! The finite-difference oracle discretizes `-y'' + q y = mu y` with the three-point
//! Laplacian and ghost-point Robin conditions, symmetrizes the tridiagonal matrix, and
//! locates eigenvalues by Sturm-sequence bisection. It shares no code with the shooting
//! solver. Two grids combined by Richardson extrapolation give fourth-order accuracy.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Symmetric tridiagonal matrix `diag`, `off` (`off[i]` couples `i` and `i + 1`).
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    /// `y = scale * v` maps eigenvectors back to the unsymmetrized problem
    pub scale: Vec<f64>,
    pub h: f64,
}

/// `M` cells on `[0, pi]`, Robin data `y'(0) = -cot(alpha) y(0)`, `y'(pi) = -cot(beta) y(pi)`.
pub fn fd_matrix(q: &dyn Fn(f64) -> f64, alpha: f64, beta: f64, cells: usize) -> Tridiagonal {
    let h = PI / cells as f64;
    let h2 = h * h;
    let (ca, cb) = (alpha.cos() / alpha.sin(), beta.cos() / beta.sin());
    let n = cells + 1;
    let mut diag: Vec<f64> = (0..n).map(|i| 2.0 / h2 + q(i as f64 * h)).collect();
    diag[0] -= 2.0 * ca / h;
    diag[n - 1] += 2.0 * cb / h;
    // rows 0 and n-1 carry -2/h^2 towards the interior; the similarity with
    // s_0 = s_{n-1} = 1/sqrt 2 makes both couplings -sqrt(2)/h^2
    let mut off = vec![-1.0 / h2; n - 1];
    off[0] = -(2.0f64).sqrt() / h2;
    off[n - 2] = -(2.0f64).sqrt() / h2;
    let mut scale = vec![1.0; n];
    scale[0] = (2.0f64).sqrt();
    scale[n - 1] = (2.0f64).sqrt();
    Tridiagonal { diag, off, scale, h }
}

impl Tridiagonal {
    /// Number of eigenvalues below `x` (Sturm sequence of the LDL^T pivots).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = self.diag[0] - x;
        if d < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            let prev = if d == 0.0 { f64::EPSILON } else { d };
            d = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / prev;
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// `k`-th eigenvalue (from zero) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        // Gershgorin
        let max_off = self.off.iter().fold(0.0f64, |m, o| m.max(o.abs()));
        let bound = self.diag.iter().fold(0.0f64, |m, d| m.max(d.abs())) + 2.0 * max_off;
        let (mut lo, mut hi) = (-bound, bound);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * mid.abs().max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvector for an eigenvalue estimate by inverse iteration, mapped back to the
    /// unsymmetrized grid values and normalized to `y(0) = 1`.
    pub fn eigenvector(&self, mu: f64) -> Vec<f64> {
        let n = self.diag.len();
        let shift = mu + 1e-10 * mu.abs().max(1.0);
        let mut v = vec![1.0; n];
        for _ in 0..3 {
            v = self.solve_shifted(shift, &v);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        let y: Vec<f64> = v.iter().zip(&self.scale).map(|(v, s)| v * s).collect();
        let y0 = y[0];
        y.into_iter().map(|v| v / y0).collect()
    }

    /// Thomas algorithm for `(A - shift I) x = b`.
    fn solve_shifted(&self, shift: f64, b: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0] - shift;
        c[0] = if n > 1 { self.off[0] / denom } else { 0.0 };
        d[0] = b[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - shift - self.off[i - 1] * c[i - 1];
            if i < n - 1 {
                c[i] = self.off[i] / denom;
            }
            d[i] = (b[i] - self.off[i - 1] * d[i - 1]) / denom;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    }
}

/// Trapezoid integral of `y^2` on the oracle grid.
fn norm_squared(y: &[f64], h: f64) -> f64 {
    let n = y.len();
    let inner: f64 = y[1..n - 1].iter().map(|v| v * v).sum();
    h * (inner + 0.5 * (y[0] * y[0] + y[n - 1] * y[n - 1]))
}

/// Richardson-extrapolated eigenvalues `mu_0..mu_{count-1}` from `cells` and `2 cells`.
pub fn fd_eigenvalues(q: &dyn Fn(f64) -> f64, alpha: f64, beta: f64, count: usize, cells: usize) -> Vec<f64> {
    let coarse = fd_matrix(q, alpha, beta, cells);
    let fine = fd_matrix(q, alpha, beta, 2 * cells);
    (0..count)
        .map(|k| (4.0 * fine.eigenvalue(k) - coarse.eigenvalue(k)) / 3.0)
        .collect()
}

/// Richardson-extrapolated `(mu_n, a_n)` pairs.
pub fn fd_spectrum(q: &dyn Fn(f64) -> f64, alpha: f64, beta: f64, count: usize, cells: usize) -> (Vec<f64>, Vec<f64>) {
    let coarse = fd_matrix(q, alpha, beta, cells);
    let fine = fd_matrix(q, alpha, beta, 2 * cells);
    let mut mu = Vec::with_capacity(count);
    let mut a = Vec::with_capacity(count);
    for k in 0..count {
        let (mc, mf) = (coarse.eigenvalue(k), fine.eigenvalue(k));
        let ac = norm_squared(&coarse.eigenvector(mc), coarse.h);
        let af = norm_squared(&fine.eigenvector(mf), fine.h);
        mu.push((4.0 * mf - mc) / 3.0);
        a.push((4.0 * af - ac) / 3.0);
    }
    (mu, a)
}

pub fn cos2x(x: f64) -> f64 {
    (2.0 * x).cos()
}

/// `q(x) = 2 c^2 / (1 + c x)^2`, the potential behind a constant kernel `F = c`.
pub fn degenerate_potential(c: f64, x: f64) -> f64 {
    2.0 * c * c / ((1.0 + c * x) * (1.0 + c * x))
}

/// Max of `|a - b|` over the nodes with abscissa in `[lo, hi]`.
pub fn max_error_on(xs: &[f64], a: &[f64], b: &[f64], lo: f64, hi: f64) -> f64 {
    xs.iter()
        .zip(a.iter().zip(b))
        .filter(|(x, _)| **x >= lo - 1e-12 && **x <= hi + 1e-12)
        .map(|(_, (a, b))| (a - b).abs())
        .fold(0.0, f64::max)
}
