//! Gelfand-Levitan reconstruction.
//!
//! For every grid node `x_i` the equation
//! `G(x, t) + F(x, t) + int_0^x G(x, s) F(s, t) ds = 0` is discretized with the trapezoid
//! rule on `[0, x_i]`, which gives a dense `(i + 1) x (i + 1)` system for the row
//! `G(x_i, t_j)`. With `D = sqrt(W)` the system `(I + F W) g = -f` is equivalent to the
//! symmetric `(I + D F D) (D g) = -D f`. The symmetric matrices of consecutive rows are
//! leading blocks of one matrix up to the weight of their last node, so a single `LDL^T`
//! factorization serves every row after a rank-one fix of the last pivot.
//!
//! From `G` the potential is `q(x) = 2 d/dx G(x, x)`, the left angle follows from
//! `G(0, 0) = -cot alpha`, and the right angle from the ratio `phi_n'(pi) / phi_n(pi)`,
//! which is the same for every eigenfunction.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::SolutionTrace;
use crate::grid::{derivative_fourth_order, derivative_second_order, GridFunction};
use crate::kernel::TriangularKernel;
use crate::product::{regularized_product, EigenvalueSequence};
use crate::series::{decompose, kernel_from_table, omega_estimate, tabulate_a};
use crate::spectral::{arccot, cos_signed, NormingB, SpectralData};
use crate::validator::check_hard;

/// Rows whose condition estimate exceeds this are rejected as ill-posed.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Default grid size for the reconstruction.
pub const DEFAULT_INVERSE_GRID: usize = 401;

/// Default truncation index of the regularized products.
pub const DEFAULT_PRODUCT_TRUNCATION: usize = 2000;

/// Default upper index of the `n`-window used for the right angle.
pub const DEFAULT_BETA_WINDOW: usize = 10;

/// `|phi_n(pi)|` below this excludes `n` from the ratio window.
pub const PHI_END_FLOOR: f64 = 1e-8;

// relative pivot size below which the shared factorization is abandoned
const PIVOT_FLOOR: f64 = 1e-13;

/// Trapezoid weights on `[0, x_i]` for the nodes `t_0..=t_i`.
fn row_weights(i: usize, h: f64) -> Vec<f64> {
    match i {
        0 => vec![0.0],
        _ => {
            let mut w = vec![h; i + 1];
            w[0] = 0.5 * h;
            w[i] = 0.5 * h;
            w
        }
    }
}

/// One solved row with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct GlRow {
    /// `G(x_i, t_j)` for `j <= i`
    pub g: Vec<f64>,
    /// max over `j` of the discrete residual
    pub residual: f64,
    /// 1-norm condition (estimate) of the row system
    pub condition: f64,
}

/// Max over `j <= i` of `|g_j + F(x_i, t_j) + sum_k w_k g_k F(t_k, t_j)|`.
fn row_residual(f: &TriangularKernel, i: usize, g: &[f64]) -> f64 {
    let w = row_weights(i, f.grid().spacing());
    (0..=i)
        .map(|j| {
            let integral: f64 = (0..=i).map(|k| w[k] * g[k] * f.sym(k, j)).sum();
            (g[j] + f.get(i, j) + integral).abs()
        })
        .fold(0.0, f64::max)
}

fn check_condition(row: usize, condition: f64) -> Result<()> {
    if condition.is_finite() && condition <= CONDITION_LIMIT {
        Ok(())
    } else {
        Err(Error::IllPosed {
            row,
            condition,
            limit: CONDITION_LIMIT,
        })
    }
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves row `i` of the discretized equation, `(I + F W) g = -F(x_i, .)`, by dense LU
/// with partial pivoting. The condition number is exact in the 1-norm.
pub fn solve_gl_row(f: &TriangularKernel, i: usize) -> Result<GlRow> {
    let m = f.m();
    if i >= m {
        return Err(Error::invalid(format!("row {i} is outside a grid of {m} points")));
    }
    if i == 0 {
        return Ok(GlRow {
            g: vec![-f.get(0, 0)],
            residual: 0.0,
            condition: 1.0,
        });
    }
    let n = i + 1;
    let w = row_weights(i, f.grid().spacing());
    let a = DMatrix::from_fn(n, n, |j, k| {
        let delta = if j == k { 1.0 } else { 0.0 };
        delta + f.sym(j, k) * w[k]
    });
    let rhs = DVector::from_fn(n, |j, _| -f.get(i, j));
    let norm = norm1(&a);
    let lu = a.lu();
    let inverse = lu.try_inverse().ok_or(Error::IllPosed {
        row: i,
        condition: f64::INFINITY,
        limit: CONDITION_LIMIT,
    })?;
    check_condition(i, norm * norm1(&inverse))?;
    let g = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Internal(format!("LU solve failed on row {i}")))?;
    let g: Vec<f64> = g.iter().copied().collect();
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::IllPosed {
            row: i,
            condition: f64::INFINITY,
            limit: CONDITION_LIMIT,
        });
    }
    Ok(GlRow {
        residual: row_residual(f, i, &g),
        condition: norm * norm1(&inverse),
        g,
    })
}

/// `LDL^T` of `B = I + S F S`, `S = diag(sqrt(h/2), sqrt(h), ..., sqrt(h))`, stored densely
/// and valid for the leading `valid` indices.
struct SharedFactor {
    l: Vec<f64>,
    d: Vec<f64>,
    n: usize,
    valid: usize,
}

impl SharedFactor {
    fn new(f: &TriangularKernel) -> Self {
        let n = f.m();
        let h = f.grid().spacing();
        let sw: Vec<f64> = (0..n)
            .map(|k| if k == 0 { (0.5 * h).sqrt() } else { h.sqrt() })
            .collect();
        let mut l = vec![0.0; n * n];
        // l_d[k * n + p] = L[k][p] * d[p], kept to make the inner products contiguous
        let mut l_d = vec![0.0; n * n];
        let mut d = vec![0.0; n];
        let mut valid = n;
        for i in 0..n {
            for k in 0..i {
                let dot: f64 = l[i * n..i * n + k]
                    .iter()
                    .zip(&l_d[k * n..k * n + k])
                    .map(|(a, b)| a * b)
                    .sum();
                let b_ik = sw[i] * sw[k] * f.get(i, k);
                let v = (b_ik - dot) / d[k];
                l[i * n + k] = v;
                l_d[i * n + k] = v * d[k];
            }
            let b_ii = 1.0 + sw[i] * sw[i] * f.get(i, i);
            let dot: f64 = l[i * n..i * n + i]
                .iter()
                .zip(&l_d[i * n..i * n + i])
                .map(|(a, b)| a * b)
                .sum();
            d[i] = b_ii - dot;
            l[i * n + i] = 1.0;
            // also catches NaN pivots
            if d[i].is_nan() || d[i] <= PIVOT_FLOOR * b_ii.abs().max(1.0) {
                valid = i;
                break;
            }
        }
        Self { l, d, n, valid }
    }

    #[inline]
    fn l(&self, i: usize, k: usize) -> f64 {
        self.l[i * self.n + k]
    }

    /// Solves the row-`i` symmetric system in place. Row `i` of `L` is scaled by
    /// `1/sqrt 2` and its pivot is `(1 + d_i) / 2`, see the module notes.
    fn solve_row(&self, i: usize, rhs: &mut [f64]) {
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        let last_pivot = 0.5 * (1.0 + self.d[i]);
        let lrow = |j: usize, k: usize| if j == i { scale * self.l(i, k) } else { self.l(j, k) };
        for j in 1..=i {
            let row = &self.l[j * self.n..j * self.n + j];
            let s: f64 = row.iter().zip(&rhs[..j]).map(|(a, b)| a * b).sum();
            rhs[j] -= if j == i { scale * s } else { s };
        }
        for (r, d) in rhs[..i].iter_mut().zip(&self.d) {
            *r /= d;
        }
        rhs[i] /= last_pivot;
        for k in (1..=i).rev() {
            let u = rhs[k];
            for (j, r) in rhs[..k].iter_mut().enumerate() {
                *r -= lrow(k, j) * u;
            }
        }
    }
}

/// Hager's estimate of `||A^{-1}||_1` for a symmetric `A` given by its solver.
fn hager_inverse_norm(n: usize, mut solve: impl FnMut(&mut [f64])) -> f64 {
    let mut x = vec![1.0 / n as f64; n];
    let mut estimate = 0.0;
    for iter in 0..5 {
        let mut y = x.clone();
        solve(&mut y);
        let norm: f64 = y.iter().map(|v| v.abs()).sum();
        if !norm.is_finite() {
            return f64::INFINITY;
        }
        if iter > 0 && norm <= estimate {
            break;
        }
        estimate = norm;
        let mut z: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
        solve(&mut z);
        let (j, zj) = z
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (k, v)| if v.abs() > acc.1 { (k, v.abs()) } else { acc });
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if iter > 0 && zj <= ztx {
            break;
        }
        x = vec![0.0; n];
        x[j] = 1.0;
    }
    estimate
}

fn solve_row_shared(f: &TriangularKernel, factor: &SharedFactor, i: usize) -> Result<GlRow> {
    if i == 0 {
        return solve_gl_row(f, 0);
    }
    let h = f.grid().spacing();
    let sw: Vec<f64> = row_weights(i, h).into_iter().map(f64::sqrt).collect();
    let mut u: Vec<f64> = (0..=i).map(|j| -sw[j] * f.get(i, j)).collect();
    factor.solve_row(i, &mut u);
    let g: Vec<f64> = u.iter().zip(&sw).map(|(u, s)| u / s).collect();

    let norm = (0..=i)
        .map(|k| {
            (0..=i)
                .map(|j| {
                    let delta = if j == k { 1.0 } else { 0.0 };
                    (delta + sw[j] * sw[k] * f.sym(j, k)).abs()
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let condition = norm * hager_inverse_norm(i + 1, |v| factor.solve_row(i, v));
    check_condition(i, condition)?;
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::IllPosed {
            row: i,
            condition: f64::INFINITY,
            limit: CONDITION_LIMIT,
        });
    }
    Ok(GlRow {
        residual: row_residual(f, i, &g),
        condition,
        g,
    })
}

/// The solved kernel `G` with the worst row diagnostics.
#[derive(Debug, Clone)]
pub struct GlSolution {
    pub g: TriangularKernel,
    pub residual: f64,
    pub condition: f64,
    /// rows solved by the dense fallback because the shared factorization broke down
    pub fallback_rows: usize,
}

/// Solves every row of the discretized equation.
pub fn solve_gl(f: &TriangularKernel) -> Result<GlSolution> {
    if !f.is_finite() {
        return Err(Error::invalid("kernel F contains non-finite values"));
    }
    let factor = SharedFactor::new(f);
    let rows: Vec<GlRow> = (0..f.m())
        .into_par_iter()
        .map(|i| {
            if i < factor.valid {
                solve_row_shared(f, &factor, i)
            } else {
                solve_gl_row(f, i)
            }
        })
        .collect::<Result<_>>()?;
    let residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let condition = rows.iter().map(|r| r.condition).fold(0.0, f64::max);
    let g = TriangularKernel::from_rows(*f.grid(), rows.into_iter().map(|r| r.g).collect());
    Ok(GlSolution {
        g,
        residual,
        condition,
        fallback_rows: f.m() - factor.valid,
    })
}

/// `q(x) = 2 d/dx G(x, x)` by central differences, one-sided at the two ends.
pub fn recover_potential(g: &TriangularKernel) -> Result<GridFunction> {
    if g.m() < 3 {
        return Err(Error::invalid("need at least 3 grid points to differentiate G(x, x)"));
    }
    let q = derivative_second_order(&g.diagonal(), g.grid().spacing())
        .into_iter()
        .map(|v| 2.0 * v)
        .collect();
    GridFunction::new(*g.grid(), q)
}

/// `alpha = arccot(-G(0, 0))` in `(0, pi)`.
pub fn recover_alpha(g00: f64) -> f64 {
    arccot(-g00)
}

/// `d/dx cos(lambda x)`, with `cosh(|lambda| x)` for negative `lambda`.
fn cos_signed_derivative(lambda: f64, x: f64) -> f64 {
    if lambda >= 0.0 {
        -lambda * (lambda * x).sin()
    } else {
        let t = -lambda;
        t * (t * x).sinh()
    }
}

/// `phi(x) = cos(lambda x) + int_0^x G(x, t) cos(lambda t) dt` and its derivative.
///
/// The cosine is differentiated exactly; only the integral term, whose amplitude is
/// smaller by a factor of `lambda`, goes through fourth-order differences.
pub fn build_phi(g: &TriangularKernel, lambda: f64) -> SolutionTrace {
    let grid = *g.grid();
    let h = grid.spacing();
    let xs = grid.abscissae();
    let c: Vec<f64> = xs.iter().map(|&x| cos_signed(lambda, x)).collect();
    let integral: Vec<f64> = (0..g.m())
        .map(|i| {
            let w = row_weights(i, h);
            g.row(i).iter().zip(&w).zip(&c).map(|((g, w), c)| g * w * c).sum()
        })
        .collect();
    let y = c.iter().zip(&integral).map(|(c, v)| c + v).collect();
    let yprime = derivative_fourth_order(&integral, h)
        .into_iter()
        .zip(&xs)
        .map(|(d, &x)| d + cos_signed_derivative(lambda, x))
        .collect();
    SolutionTrace {
        grid,
        y,
        yprime,
        mu: lambda * lambda.abs(),
    }
}

/// Right angle from the ratios `phi_n'(pi) / phi_n(pi) = -cot beta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaEstimate {
    pub beta: f64,
    /// `(n, phi_n'(pi) / phi_n(pi))` for the indices used
    pub ratios: Vec<(usize, f64)>,
    /// indices dropped because `|phi_n(pi)|` was too small
    pub excluded: Vec<usize>,
    /// max minus min of the ratios
    pub spread: f64,
}

/// Median ratio over `n = 1..=min(window, N - 1)`.
pub fn recover_beta(g: &TriangularKernel, spectral: &SpectralData, window: usize) -> Result<BetaEstimate> {
    let top = window.min(spectral.len().saturating_sub(1));
    if top == 0 {
        return Err(Error::invalid("the right angle needs at least two eigenvalues"));
    }
    let mut ratios = Vec::new();
    let mut excluded = Vec::new();
    for n in 1..=top {
        let (p, dp) = build_phi(g, spectral.lambda()[n]).last();
        if p.abs() < PHI_END_FLOOR || !p.is_finite() || !dp.is_finite() {
            excluded.push(n);
        } else {
            ratios.push((n, dp / p));
        }
    }
    if ratios.is_empty() {
        return Err(Error::Rejected(format!(
            "phi_n(pi) vanishes for every n in 1..={top}; the data admit no beta in (0, pi)"
        )));
    }
    let mut values: Vec<f64> = ratios.iter().map(|r| r.1).collect();
    values.sort_by(|a, b| a.total_cmp(b));
    let k = values.len();
    let median = if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    };
    Ok(BetaEstimate {
        beta: arccot(-median),
        spread: values[k - 1] - values[0],
        ratios,
        excluded,
    })
}

/// Norming constants `b_n` with their relative truncation errors.
#[derive(Debug, Clone, PartialEq)]
pub struct BFromA {
    pub b: NormingB,
    pub relative_error: Vec<f64>,
}

/// `b_n` from `{mu_k}` and `a_n` through the regularized products:
/// `1/b_0 = a_0 / (pi^2 P_0^2)` and `1/b_n = a_n n^4 / (pi^2 (mu_0 - mu_n)^2 P_n^2)`.
pub fn b_from_a(spectral: &SpectralData, k_max: usize) -> Result<BFromA> {
    let n_pairs = spectral.len();
    if k_max < n_pairs {
        return Err(Error::invalid(format!(
            "product truncation K = {k_max} must be at least N = {n_pairs}"
        )));
    }
    let seq = EigenvalueSequence::from_spectral(spectral, omega_estimate(spectral))?;
    let mu0 = spectral.mu(0);
    let results: Vec<(f64, f64)> = (0..n_pairs)
        .into_par_iter()
        .map(|n| {
            let p = regularized_product(&seq, n, k_max)?;
            let a = spectral.a()[n];
            let inv_b = if n == 0 {
                a / (PI * PI * p.value * p.value)
            } else {
                let n4 = (n as f64).powi(4);
                let gap = mu0 - spectral.mu(n);
                a * n4 / (PI * PI * gap * gap * p.value * p.value)
            };
            Ok((1.0 / inv_b, 2.0 * p.error_bound / p.value.abs()))
        })
        .collect::<Result<_>>()?;
    let (b, relative_error) = results.into_iter().unzip();
    Ok(BFromA {
        b: NormingB::new(b)?,
        relative_error,
    })
}

/// Settings of [`inverse_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct InverseConfig {
    pub m: usize,
    pub decay_threshold: f64,
    pub beta_window: usize,
    pub alpha_expected: Option<f64>,
    pub beta_expected: Option<f64>,
}

impl Default for InverseConfig {
    fn default() -> Self {
        Self {
            m: DEFAULT_INVERSE_GRID,
            decay_threshold: crate::series::DEFAULT_DECAY_THRESHOLD,
            beta_window: DEFAULT_BETA_WINDOW,
            alpha_expected: None,
            beta_expected: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InverseDiagnostics {
    /// worst discrete residual of the Gelfand-Levitan system
    pub residual: f64,
    pub condition: f64,
    pub fallback_rows: usize,
    pub beta: BetaEstimate,
    pub a_zero_settled: bool,
    pub a_zero_change: f64,
    pub alpha_deviation: Option<f64>,
    pub beta_deviation: Option<f64>,
    /// nodes where `q` comes from one-sided differences
    pub low_confidence: Vec<usize>,
}

/// Reconstructed problem.
#[derive(Debug, Clone)]
pub struct InverseResult {
    pub q: GridFunction,
    pub alpha_tilde: f64,
    pub beta_tilde: f64,
    pub g: TriangularKernel,
    pub diagnostics: InverseDiagnostics,
}

/// The JSON record written next to the potential CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InverseSummary {
    pub alpha: f64,
    pub beta: f64,
    pub q_csv: String,
    pub residual: f64,
    pub beta_spread: f64,
}

impl InverseResult {
    pub fn summary(&self, q_csv: impl Into<String>) -> InverseSummary {
        InverseSummary {
            alpha: self.alpha_tilde,
            beta: self.beta_tilde,
            q_csv: q_csv.into(),
            residual: self.diagnostics.residual,
            beta_spread: self.diagnostics.beta.spread,
        }
    }
}

/// Full reconstruction: checks, kernel `F`, all rows of `G`, then `q`, `alpha`, `beta`.
pub fn inverse_solve(spectral: &SpectralData, config: &InverseConfig) -> Result<InverseResult> {
    let hard = check_hard(spectral);
    if !hard.passed() {
        return Err(Error::Rejected(hard.describe()).in_stage("validate"));
    }
    let dec = decompose(spectral, config.decay_threshold).map_err(|e| e.in_stage("validate"))?;
    if !dec.verdict.ok() {
        return Err(Error::Rejected(format!(
            "asymptotics do not decay: max |n l_n| = {:.3e}, max |n s_n| = {:.3e}, threshold {:.3e}",
            dec.verdict.max_n_l, dec.verdict.max_n_s, dec.verdict.threshold
        ))
        .in_stage("validate"));
    }
    if config.m < 5 {
        return Err(Error::invalid(format!("inverse grid needs m >= 5, got {}", config.m)));
    }

    let table = tabulate_a(spectral, &dec, config.m).map_err(|e| e.in_stage("build_F"))?;
    let f = kernel_from_table(&table);
    let solution = solve_gl(&f).map_err(|e| e.in_stage("solve_gl"))?;
    let q = recover_potential(&solution.g).map_err(|e| e.in_stage("recover_potential"))?;
    let alpha_tilde = recover_alpha(solution.g.get(0, 0));
    let beta = recover_beta(&solution.g, spectral, config.beta_window).map_err(|e| e.in_stage("recover_beta"))?;
    let m = config.m;
    Ok(InverseResult {
        q,
        alpha_tilde,
        beta_tilde: beta.beta,
        diagnostics: InverseDiagnostics {
            residual: solution.residual,
            condition: solution.condition,
            fallback_rows: solution.fallback_rows,
            a_zero_settled: table.a_zero_settled(),
            a_zero_change: table.a_zero_change(),
            alpha_deviation: config.alpha_expected.map(|a| alpha_tilde - a),
            beta_deviation: config.beta_expected.map(|b| beta.beta - b),
            beta,
            low_confidence: vec![0, m - 1],
        },
        g: solution.g,
    })
}
