//! Asymptotic decomposition of spectral data and the series built from it:
//! `l(x) = sum l_n sin(nx)`, `s(x) = sum s_n cos(nx)`,
//! `a(x) = sum (cos(lambda_n x) / a_n - cos(nx) / a0_n)` and the kernel
//! `F(x, t) = (a(x + t) + a(x - t)) / 2`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, UniformGrid};
use crate::kernel::TriangularKernel;
use crate::spectral::{cos_signed, SpectralData};

/// Default bound on `max |n l_n|` and `max |n s_n|` over the top quartile of indices.
pub const DEFAULT_DECAY_THRESHOLD: f64 = 0.1;

/// Minimum number of pairs for the decomposition.
pub const MIN_TERMS: usize = 16;

/// Tolerance on the last-quarter change of the partial sums of `a(0)`.
pub const A_ZERO_SETTLE_TOL: f64 = 1e-2;

/// Norming constants of the unperturbed problem: `pi` for `n = 0`, `pi/2` otherwise.
#[inline]
pub fn unperturbed_norming(n: usize) -> f64 {
    if n == 0 {
        PI
    } else {
        PI / 2.0
    }
}

/// Raised-cosine taper on the top indices of a partial sum.
///
/// Terms with `n < start` have weight one; weights fall smoothly to zero at `end`,
/// the first index not supplied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Taper {
    pub start: usize,
    pub end: usize,
}

impl Taper {
    /// Tapers the last 10% of `terms` indices.
    pub fn last_tenth(terms: usize) -> Self {
        let width = (terms as f64 * 0.1).ceil() as usize;
        Self {
            start: terms.saturating_sub(width),
            end: terms,
        }
    }

    /// Plain partial sum.
    pub fn none(terms: usize) -> Self {
        Self {
            start: terms,
            end: terms,
        }
    }

    pub fn weight(&self, n: usize) -> f64 {
        if n < self.start {
            1.0
        } else if n >= self.end {
            0.0
        } else {
            let u = (n - self.start) as f64 / (self.end - self.start) as f64;
            0.5 * (1.0 + (PI * u).cos())
        }
    }
}

/// Decay verdict for `l_n = o(1/n)` and `s_n = o(1/n)` over the top quartile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayVerdict {
    pub max_n_l: f64,
    pub max_n_s: f64,
    pub threshold: f64,
    pub eigenvalues_ok: bool,
    pub norming_ok: bool,
}

impl DecayVerdict {
    pub fn ok(&self) -> bool {
        self.eigenvalues_ok && self.norming_ok
    }
}

/// `lambda_n = n + omega/n + l_n` and `a_n = pi/2 + s_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticDecomposition {
    pub omega: f64,
    /// `rho_n = lambda_n - n` for every `n`
    pub rho: Vec<f64>,
    /// `l_n = rho_n - omega/n`; index 0 unused (zero)
    pub l: Vec<f64>,
    /// `s_n = a_n - pi/2`; index 0 unused (zero)
    pub s: Vec<f64>,
    /// `a_0 - pi`
    pub s0: f64,
    pub verdict: DecayVerdict,
    pub taper: Taper,
}

impl AsymptoticDecomposition {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn with_taper(mut self, taper: Taper) -> Self {
        self.taper = taper;
        self
    }

    /// Top quartile of indices `[N - N/4, N)`.
    pub fn top_quartile(&self) -> std::ops::Range<usize> {
        let n = self.len();
        n - n / 4..n
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Median of `n (lambda_n - n)` over the top half of the indices (at least `n = 1`).
/// Works for any length; a single pair gives `omega = 0`.
pub fn omega_estimate(spectral: &SpectralData) -> f64 {
    let n = spectral.len();
    if n < 2 {
        return 0.0;
    }
    let lambda = spectral.lambda();
    median(((n / 2).max(1)..n).map(|k| k as f64 * (lambda[k] - k as f64)).collect())
}

/// Splits spectral data into its asymptotic parts; `omega` is the median of `n rho_n`
/// over the top half of the indices.
pub fn decompose(spectral: &SpectralData, threshold: f64) -> Result<AsymptoticDecomposition> {
    let n = spectral.len();
    if n < MIN_TERMS {
        return Err(Error::invalid(format!(
            "decomposition needs at least {MIN_TERMS} pairs, got {n}"
        )));
    }
    let rho: Vec<f64> = spectral
        .lambda()
        .iter()
        .enumerate()
        .map(|(k, l)| l - k as f64)
        .collect();
    let omega = omega_estimate(spectral);
    let mut l = vec![0.0; n];
    let mut s = vec![0.0; n];
    for k in 1..n {
        l[k] = rho[k] - omega / k as f64;
        s[k] = spectral.a()[k] - PI / 2.0;
    }
    let quartile = n - n / 4..n;
    let max_n_l = quartile.clone().map(|k| (k as f64 * l[k]).abs()).fold(0.0, f64::max);
    let max_n_s = quartile.map(|k| (k as f64 * s[k]).abs()).fold(0.0, f64::max);
    Ok(AsymptoticDecomposition {
        omega,
        rho,
        l,
        s,
        s0: spectral.a()[0] - PI,
        verdict: DecayVerdict {
            max_n_l,
            max_n_s,
            threshold,
            eigenvalues_ok: max_n_l < threshold,
            norming_ok: max_n_s < threshold,
        },
        taper: Taper::last_tenth(n),
    })
}

/// A partial sum together with the taper that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaperedSum {
    pub value: f64,
    pub taper: Taper,
}

/// `l(x) = sum_{n>=1} l_n sin(nx)` over the available terms.
pub fn eval_l(x: f64, dec: &AsymptoticDecomposition) -> TaperedSum {
    let value = (1..dec.len())
        .map(|n| dec.taper.weight(n) * dec.l[n] * (n as f64 * x).sin())
        .sum();
    TaperedSum {
        value,
        taper: dec.taper,
    }
}

/// `s(x) = sum_{n>=1} s_n cos(nx)` over the available terms.
pub fn eval_s(x: f64, dec: &AsymptoticDecomposition) -> TaperedSum {
    let value = (1..dec.len())
        .map(|n| dec.taper.weight(n) * dec.s[n] * (n as f64 * x).cos())
        .sum();
    TaperedSum {
        value,
        taper: dec.taper,
    }
}

/// Plain partial sum of `a(x)` over the first `n_terms` pairs.
pub fn eval_a_direct(spectral: &SpectralData, x: f64, n_terms: usize) -> f64 {
    let lambda = spectral.lambda();
    let a = spectral.a();
    (0..n_terms.min(spectral.len()))
        .map(|n| cos_signed(lambda[n], x) / a[n] - (n as f64 * x).cos() / unperturbed_norming(n))
        .sum()
}

/// `(2/pi) sum_n [cos((n + omega/n) x) - cos(nx) + (omega x / n) sin(nx)]` over all `n >= 1`,
/// expanded to fourth order in `omega x / n`. Each power sum is a Bernoulli polynomial on
/// `[0, 2 pi]`, which is where the whole infinite tail of the model gets summed.
fn omega_model_tail(omega: f64, x: f64) -> f64 {
    let w = omega * x;
    let (x2, p2) = (x * x, PI * PI);
    let c2 = p2 / 6.0 - PI * x / 2.0 + x2 / 4.0;
    let s3 = p2 * x / 6.0 - PI * x2 / 4.0 + x2 * x / 12.0;
    let c4 = p2 * p2 / 90.0 - p2 * x2 / 12.0 + PI * x2 * x / 12.0 - x2 * x2 / 48.0;
    (2.0 / PI) * (-w * w / 2.0 * c2 + w.powi(3) / 6.0 * s3 + w.powi(4) / 24.0 * c4)
}

/// Single term `n` of [`omega_model_tail`].
fn omega_model_term(omega: f64, x: f64, n: usize) -> f64 {
    let nf = n as f64;
    let dx = omega * x / nf;
    let (sin_nx, cos_nx) = (nf * x).sin_cos();
    let d2 = dx * dx;
    (2.0 / PI) * ((-d2 / 2.0 + d2 * d2 / 24.0) * cos_nx + d2 * dx / 6.0 * sin_nx)
}

/// `a(x)` from the split `a = a1 + a2`.
///
/// `a1` carries the slowly convergent parts: the `omega` series in closed form
/// `sum sin(nx)/n = (pi - x)/2` and the `l` and `s` series. The `s` series enters with
/// the exact linearization `1/a_n - 2/pi = -(4/pi^2) s_n + O(s_n^2)`. The higher powers of
/// `omega/n` are summed in closed form as well; truncating them leaves a tail of size
/// `omega^2 x^2 / N` whose slope near `x = 2 pi` is O(1) and spoils `q` near `pi`.
/// `a2` collects the remaining absolutely convergent corrections term by term, so that
/// for untapered series the two parts reproduce the direct partial sum plus the model tail.
pub fn eval_a_accelerated(spectral: &SpectralData, dec: &AsymptoticDecomposition, x: f64) -> f64 {
    let lambda = spectral.lambda();
    let a = spectral.a();
    let head = cos_signed(lambda[0], x) / a[0] - 1.0 / PI;

    let a1 = -(2.0 * dec.omega * x / PI) * (PI - x) / 2.0
        - (2.0 * x / PI) * eval_l(x, dec).value
        - (4.0 / (PI * PI)) * eval_s(x, dec).value
        + omega_model_tail(dec.omega, x);

    let mut a2 = 0.0;
    for (n, &a_n) in a.iter().enumerate().skip(1) {
        let rho = dec.rho[n];
        let inv = 1.0 / a_n;
        // 1/a_n - 2/pi and its remainder beyond the linear term -(4/pi^2) s_n
        let two_s = 2.0 * dec.s[n] / PI;
        let d = -(2.0 / PI) * two_s / (1.0 + two_s);
        let remainder = (2.0 / PI) * two_s * two_s / (1.0 + two_s);
        let nx = n as f64 * x;
        let (sin_nx, cos_nx) = nx.sin_cos();
        let rx = rho * x;
        let half = (0.5 * rx).sin();
        a2 += -inv * (rx.sin() - rx) * sin_nx - inv * 2.0 * half * half * cos_nx - d * rx * sin_nx + remainder * cos_nx
            - omega_model_term(dec.omega, x, n);
    }
    head + a1 + a2
}

/// `a(x)` tabulated on `[0, 2 pi]` with half the spacing of an `m`-point grid on
/// `[0, pi]`, so that every `x_i + t_j` and `x_i - t_j` is a node.
#[derive(Debug, Clone)]
pub struct ATable {
    grid: UniformGrid,
    values: Vec<f64>,
    a_zero_settled: bool,
    a_zero_change: f64,
}

impl ATable {
    /// Grid on `[0, pi]` the table serves.
    pub fn base_grid(&self) -> UniformGrid {
        UniformGrid::new(0.0, PI, (self.values.len() - 1) / 4 + 1).expect("valid by construction")
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `a(0) = sum (1/a_n - 1/a0_n)`.
    pub fn a_zero(&self) -> f64 {
        self.values[0]
    }

    /// Whether the partial sums of `a(0)` settled over the last quarter of the terms.
    pub fn a_zero_settled(&self) -> bool {
        self.a_zero_settled
    }

    pub fn a_zero_change(&self) -> f64 {
        self.a_zero_change
    }

    /// `a` at `x_i + x_j` (`plus`) or `x_i - x_j`, for base-grid indices.
    #[inline]
    fn at_sum(&self, i: usize, j: usize) -> f64 {
        self.values[2 * (i + j)]
    }

    #[inline]
    fn at_diff(&self, i: usize, j: usize) -> f64 {
        self.values[2 * (i - j)]
    }

    /// Linear interpolation at any `y` in `[0, 2 pi]`.
    pub fn interpolate(&self, y: f64) -> f64 {
        GridFunction::new(self.grid, self.values.clone())
            .expect("finite by construction")
            .interpolate(y)
    }
}

/// Tabulates `a(x)` for a base grid of `m` points on `[0, pi]`.
pub fn tabulate_a(spectral: &SpectralData, dec: &AsymptoticDecomposition, m: usize) -> Result<ATable> {
    if m < 2 {
        return Err(Error::invalid(format!("kernel grid needs m >= 2, got {m}")));
    }
    let nodes = 4 * (m - 1) + 1;
    let grid = UniformGrid::new(0.0, 2.0 * PI, nodes)?;

    // a(0) from the partial sums of sum (1/a_n - 1/a0_n)
    let partial: Vec<f64> = spectral
        .a()
        .iter()
        .enumerate()
        .scan(0.0, |acc, (n, a)| {
            *acc += 1.0 / a - 1.0 / unperturbed_norming(n);
            Some(*acc)
        })
        .collect();
    let total = *partial.last().expect("non-empty");
    let three_quarter = partial[(3 * partial.len()) / 4 - 1];
    let a_zero_change = (total - three_quarter).abs();

    let mut values: Vec<f64> = (0..nodes)
        .into_par_iter()
        .map(|k| {
            if k == 0 {
                total
            } else {
                eval_a_accelerated(spectral, dec, grid.x(k))
            }
        })
        .collect();
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("a(x) is not finite at x = {}", grid.x(k))));
    }
    values.shrink_to_fit();
    Ok(ATable {
        grid,
        values,
        a_zero_settled: a_zero_change <= A_ZERO_SETTLE_TOL,
        a_zero_change,
    })
}

/// `F(x, t) = (a(x + t) + a(x - t)) / 2` on the triangle of the base grid.
pub fn kernel_from_table(table: &ATable) -> TriangularKernel {
    TriangularKernel::from_fn(table.base_grid(), |i, j| {
        0.5 * (table.at_sum(i, j) + table.at_diff(i, j))
    })
}

/// Kernel `F` of the Gelfand-Levitan equation on an `m`-point grid.
pub fn build_f(spectral: &SpectralData, dec: &AsymptoticDecomposition, m: usize) -> Result<TriangularKernel> {
    Ok(kernel_from_table(&tabulate_a(spectral, dec, m)?))
}

/// `F` from the double-cosine sum truncated at `n_terms`.
pub fn build_f_direct(spectral: &SpectralData, m: usize, n_terms: usize) -> Result<TriangularKernel> {
    let grid = UniformGrid::new(0.0, PI, m)?;
    let n_terms = n_terms.min(spectral.len());
    let lambda = spectral.lambda();
    let a = spectral.a();
    let xs = grid.abscissae();
    // per node: cos(lambda_n x) and cos(n x)
    let cos_l: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| (0..n_terms).map(|n| cos_signed(lambda[n], x)).collect())
        .collect();
    let cos_n: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| (0..n_terms).map(|n| (n as f64 * x).cos()).collect())
        .collect();
    Ok(TriangularKernel::from_fn(grid, |i, j| {
        (0..n_terms)
            .map(|n| cos_l[i][n] * cos_l[j][n] / a[n] - cos_n[i][n] * cos_n[j][n] / unperturbed_norming(n))
            .sum()
    }))
}

/// `f(x) = d/dx F(x, x)` on the base grid.
#[derive(Debug, Clone)]
pub struct DiagonalDerivative {
    pub f: GridFunction,
    /// `F(x, x) = (a(2x) + a(0)) / 2`
    pub diagonal: GridFunction,
    pub a_zero_settled: bool,
}

/// Differentiates `F(x, x) = (a(2x) + a(0)) / 2`, i.e. `f(x) = a'(2x)`, by central
/// differences on the half-spacing table (one-sided at the two ends).
pub fn f_diagonal(table: &ATable) -> Result<DiagonalDerivative> {
    let base = table.base_grid();
    let m = base.len();
    let v = table.values();
    let dy = table.grid().spacing();
    let last = v.len() - 1;
    let deriv = |k: usize| -> f64 {
        if k == 0 {
            (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dy)
        } else if k == last {
            (3.0 * v[last] - 4.0 * v[last - 1] + v[last - 2]) / (2.0 * dy)
        } else {
            (v[k + 1] - v[k - 1]) / (2.0 * dy)
        }
    };
    let f: Vec<f64> = (0..m).map(|i| deriv(4 * i)).collect();
    let diag: Vec<f64> = (0..m).map(|i| 0.5 * (v[4 * i] + table.a_zero())).collect();
    Ok(DiagonalDerivative {
        f: GridFunction::new(base, f)?,
        diagonal: GridFunction::new(base, diag)?,
        a_zero_settled: table.a_zero_settled(),
    })
}
