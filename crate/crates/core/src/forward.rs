//! Forward problem: eigenvalues and norming constants of `-y'' + q y = mu y` on `[0, pi]`
//! with `y(0) cos(alpha) + y'(0) sin(alpha) = 0` and `y(pi) cos(beta) + y'(pi) sin(beta) = 0`.
//!
//! Solutions are advanced cell by cell with the fourth-order Magnus integrator for the
//! first-order system `Y' = [[0, 1], [q - mu, 0]] Y`, with `q` evaluated from its
//! piecewise-linear interpolant at the two Gauss points of each cell. The commutator
//! term does not depend on `mu`, and the propagator of a cell is the exact exponential
//! of a traceless 2x2 matrix, so the scheme is exact for constant `q` and its error does
//! not grow with the oscillation frequency the way explicit Runge-Kutta errors do.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{trapezoid, GridFunction, UniformGrid};
use crate::spectral::{BoundaryAngles, NormingB, SpectralData};

/// Default number of grid points on `[0, pi]`.
pub const DEFAULT_GRID: usize = 2001;

const OVERFLOW_LIMIT: f64 = 1e280;

/// Solution of `-y'' + q y = mu y` sampled on the solver grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTrace {
    pub grid: UniformGrid,
    pub y: Vec<f64>,
    pub yprime: Vec<f64>,
    pub mu: f64,
}

impl SolutionTrace {
    pub fn last(&self) -> (f64, f64) {
        let n = self.y.len() - 1;
        (self.y[n], self.yprime[n])
    }

    pub fn first(&self) -> (f64, f64) {
        (self.y[0], self.yprime[0])
    }

    /// `y psi' - y' psi` at every node.
    pub fn wronskian(&self, other: &SolutionTrace) -> Vec<f64> {
        self.y
            .iter()
            .zip(&self.yprime)
            .zip(other.y.iter().zip(&other.yprime))
            .map(|((y, yp), (z, zp))| y * zp - yp * z)
            .collect()
    }
}

/// `(cosh sqrt(d), sinh sqrt(d) / sqrt(d))`, continued analytically to `d <= 0`.
#[inline]
fn exp_coefficients(d: f64) -> (f64, f64) {
    if d.abs() < 1e-6 {
        (1.0 + d / 2.0 + d * d / 24.0, 1.0 + d / 6.0 + d * d / 120.0)
    } else if d > 0.0 {
        let r = d.sqrt();
        (r.cosh(), r.sinh() / r)
    } else {
        let r = (-d).sqrt();
        (r.cos(), r.sin() / r)
    }
}

/// Potential prepared for shooting: Gauss-point samples of each cell.
#[derive(Debug, Clone)]
pub struct Shooter {
    grid: UniformGrid,
    /// per cell: (mean of the two Gauss samples, commutator coefficient)
    cells: Vec<(f64, f64)>,
    q_min: f64,
    q_l1: f64,
    q_max_abs: f64,
}

/// End state of a shot plus the scaled Pruefer angle accumulated along the way.
#[derive(Debug, Clone, Copy)]
struct Shot {
    y: f64,
    yp: f64,
    theta: f64,
    scale: f64,
}

impl Shooter {
    /// Prepares `q` for integration on an `m`-point grid over `[0, pi]`.
    pub fn new(q: &GridFunction, m: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::invalid(format!("solver grid needs m >= 3, got {m}")));
        }
        let (a, b) = (q.grid().start(), q.grid().end());
        if (a - 0.0).abs() > 1e-12 || (b - PI).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "potential must be sampled on [0, pi], got [{a}, {b}]"
            )));
        }
        let grid = UniformGrid::new(0.0, PI, m)?;
        let h = grid.spacing();
        let g = 3f64.sqrt() / 6.0;
        let cells = (0..m - 1)
            .map(|i| {
                let x = grid.x(i);
                let q1 = q.interpolate(x + (0.5 - g) * h);
                let q2 = q.interpolate(x + (0.5 + g) * h);
                (0.5 * (q1 + q2), 3f64.sqrt() / 12.0 * h * h * (q1 - q2))
            })
            .collect();
        let vals = q.values();
        Ok(Self {
            grid,
            cells,
            q_min: vals.iter().cloned().fold(f64::INFINITY, f64::min),
            q_l1: trapezoid(&vals.iter().map(|v| v.abs()).collect::<Vec<_>>(), q.grid().spacing()),
            q_max_abs: vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs())),
        })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    /// L1 norm of the potential.
    pub fn q_l1(&self) -> f64 {
        self.q_l1
    }

    /// Propagator of cell `i` for spectral parameter `mu`: `c I + s Omega`.
    #[inline]
    fn cell_map(&self, i: usize, mu: f64) -> (f64, f64, f64, f64) {
        let h = self.grid.spacing();
        let (q_mean, kappa) = self.cells[i];
        let lower = h * (q_mean - mu);
        let (c, s) = exp_coefficients(kappa * kappa + h * lower);
        (c + s * kappa, s * h, s * lower, c - s * kappa)
    }

    fn scale(&self, mu: f64) -> f64 {
        (mu - self.q_min).max(1.0).sqrt()
    }

    /// Integrates from `x = 0` and tracks the Pruefer angle of `(y, y'/s)`.
    fn shoot_left(&self, mu: f64, y0: f64, yp0: f64) -> Result<Shot> {
        let s = self.scale(mu);
        if mu > self.q_min && (mu - self.q_min).sqrt() * self.grid.spacing() > 1.2 {
            return Err(Error::GridTooCoarse { mu, m: self.grid.len() });
        }
        let (mut y, mut yp) = (y0, yp0);
        let mut angle = y.atan2(yp / s);
        let mut theta = angle;
        for i in 0..self.cells.len() {
            let (m11, m12, m21, m22) = self.cell_map(i, mu);
            let ny = m11 * y + m12 * yp;
            let nyp = m21 * y + m22 * yp;
            y = ny;
            yp = nyp;
            if !(y.abs() < OVERFLOW_LIMIT && yp.abs() < OVERFLOW_LIMIT) {
                return Err(Error::Overflow { mu });
            }
            let next = y.atan2(yp / s);
            let mut d = next - angle;
            if d > PI {
                d -= 2.0 * PI;
            } else if d <= -PI {
                d += 2.0 * PI;
            }
            if d.abs() > 0.75 * PI {
                return Err(Error::GridTooCoarse { mu, m: self.grid.len() });
            }
            theta += d;
            angle = next;
        }
        Ok(Shot { y, yp, theta, scale: s })
    }

    /// Full trace integrated left to right from `(y0, yp0)` at `x = 0`.
    pub fn trace_left(&self, mu: f64, y0: f64, yp0: f64) -> Result<SolutionTrace> {
        let m = self.grid.len();
        let mut y = vec![0.0; m];
        let mut yp = vec![0.0; m];
        y[0] = y0;
        yp[0] = yp0;
        for i in 0..m - 1 {
            let (m11, m12, m21, m22) = self.cell_map(i, mu);
            y[i + 1] = m11 * y[i] + m12 * yp[i];
            yp[i + 1] = m21 * y[i] + m22 * yp[i];
            if !(y[i + 1].abs() < OVERFLOW_LIMIT && yp[i + 1].abs() < OVERFLOW_LIMIT) {
                return Err(Error::Overflow { mu });
            }
        }
        Ok(SolutionTrace {
            grid: self.grid,
            y,
            yprime: yp,
            mu,
        })
    }

    /// Full trace integrated right to left from `(y_end, yp_end)` at `x = pi`, using the
    /// exact inverse of each cell propagator.
    pub fn trace_right(&self, mu: f64, y_end: f64, yp_end: f64) -> Result<SolutionTrace> {
        let m = self.grid.len();
        let mut y = vec![0.0; m];
        let mut yp = vec![0.0; m];
        y[m - 1] = y_end;
        yp[m - 1] = yp_end;
        for i in (0..m - 1).rev() {
            // unit determinant: inverse of [[a, b], [c, d]] is [[d, -b], [-c, a]]
            let (m11, m12, m21, m22) = self.cell_map(i, mu);
            y[i] = m22 * y[i + 1] - m12 * yp[i + 1];
            yp[i] = -m21 * y[i + 1] + m11 * yp[i + 1];
            if !(y[i].abs() < OVERFLOW_LIMIT && yp[i].abs() < OVERFLOW_LIMIT) {
                return Err(Error::Overflow { mu });
            }
        }
        Ok(SolutionTrace {
            grid: self.grid,
            y,
            yprime: yp,
            mu,
        })
    }
}

/// Forward problem for a fixed potential and boundary angles.
#[derive(Debug, Clone)]
pub struct ForwardProblem {
    shooter: Shooter,
    angles: BoundaryAngles,
}

impl ForwardProblem {
    pub fn new(q: &GridFunction, angles: BoundaryAngles, m: usize) -> Result<Self> {
        Ok(Self {
            shooter: Shooter::new(q, m)?,
            angles,
        })
    }

    pub fn angles(&self) -> BoundaryAngles {
        self.angles
    }

    pub fn grid(&self) -> &UniformGrid {
        self.shooter.grid()
    }

    /// `phi(x, mu)` with `phi(0) = 1`, `phi'(0) = -cot(alpha)`.
    pub fn phi(&self, mu: f64) -> Result<SolutionTrace> {
        self.shooter.trace_left(mu, 1.0, -self.angles.cot_alpha())
    }

    /// `psi(x, mu)` with `psi(pi) = 1`, `psi'(pi) = -cot(beta)`.
    pub fn psi(&self, mu: f64) -> Result<SolutionTrace> {
        self.shooter.trace_right(mu, 1.0, -self.angles.cot_beta())
    }

    fn shot(&self, mu: f64) -> Result<Shot> {
        self.shooter.shoot_left(mu, 1.0, -self.angles.cot_alpha())
    }

    /// `Delta(mu) = phi(pi) cot(beta) + phi'(pi)`.
    pub fn delta(&self, mu: f64) -> Result<f64> {
        let s = self.shot(mu)?;
        Ok(s.y * self.angles.cot_beta() + s.yp)
    }

    /// The same characteristic function through `psi`: `-(psi(0) cot(alpha) + psi'(0))`.
    pub fn delta_from_psi(&self, mu: f64) -> Result<f64> {
        let t = self.psi(mu)?;
        let (y, yp) = t.first();
        Ok(-(y * self.angles.cot_alpha() + yp))
    }

    /// Number of eigenvalues `<= mu`, read off the Pruefer angle of `phi` at `pi`.
    pub fn count_below(&self, mu: f64) -> Result<usize> {
        let shot = self.shot(mu)?;
        // boundary direction (sin beta, -cos beta) in the scaled (y, y'/s) plane
        let gamma = self.angles.beta().sin().atan2(-self.angles.beta().cos() / shot.scale);
        let excess = shot.theta - gamma;
        if excess < 0.0 {
            Ok(0)
        } else {
            Ok((excess / PI).floor() as usize + 1)
        }
    }

    /// Lower end of the search window: below every eigenvalue.
    fn lower_bound(&self) -> Result<f64> {
        let r = self.shooter.q_l1() + self.angles.cot_alpha().abs() + self.angles.cot_beta().abs() + 1.0;
        let first = -r * r;
        let mut lo = first;
        for _ in 0..40 {
            if self.count_below(lo)? == 0 {
                return Ok(lo);
            }
            lo *= 2.0;
        }
        Err(Error::Internal(format!(
            "could not find a lower bound for the spectrum: count at {lo:e} is still positive \
             (window started at {first:e}, |q|_1 = {:e})",
            self.shooter.q_l1()
        )))
    }

    /// The `count` smallest eigenvalues, strictly increasing.
    pub fn eigenvalues(&self, count: usize) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::invalid("eigenvalue count must be at least 1"));
        }
        let lo = self.lower_bound()?;
        (0..count).into_par_iter().map(|n| self.eigenvalue_in(n, lo)).collect()
    }

    /// The n-th eigenvalue, given a point `lo` below the whole spectrum.
    pub fn eigenvalue(&self, n: usize) -> Result<f64> {
        let lo = self.lower_bound()?;
        self.eigenvalue_in(n, lo)
    }

    fn eigenvalue_in(&self, n: usize, floor: f64) -> Result<f64> {
        let nf = (n + 1) as f64;
        let mut lo = floor;
        let mut hi =
            nf * nf + self.shooter.q_max_abs + self.angles.cot_alpha().abs() + self.angles.cot_beta().abs() + 1.0;
        let mut widen = 0;
        while self.count_below(hi)? <= n {
            hi += (hi - lo).abs().max(1.0);
            widen += 1;
            if widen > 60 {
                return Err(Error::Internal(format!(
                    "failed to bracket eigenvalue {n} from above (last trial {hi:e})"
                )));
            }
        }
        // isolate: count(lo) == n and count(hi) == n + 1
        let mut count_lo = self.count_below(lo)?;
        let mut count_hi = self.count_below(hi)?;
        let mut iterations = 0;
        while !(count_lo == n && count_hi == n + 1) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Err(Error::Internal(format!(
                    "eigenvalue {n} could not be isolated in [{lo:e}, {hi:e}] \
                     (counts {count_lo}, {count_hi})"
                )));
            }
            let c = self.count_below(mid)?;
            if c <= n {
                lo = mid;
                count_lo = c;
            } else {
                hi = mid;
                count_hi = c;
            }
            iterations += 1;
            if iterations > 200 {
                return Err(Error::Internal(format!("bracketing eigenvalue {n} did not terminate")));
            }
        }
        let f_lo = self.delta(lo)?;
        let f_hi = self.delta(hi)?;
        if f_hi == 0.0 {
            return Ok(hi);
        }
        if f_lo == 0.0 {
            return Ok(lo);
        }
        if f_lo.signum() == f_hi.signum() {
            return Err(Error::Internal(format!(
                "characteristic function has no sign change on the isolating bracket \
                 [{lo:e}, {hi:e}] of eigenvalue {n}: Delta = {f_lo:e}, {f_hi:e}"
            )));
        }
        brent(|mu| self.delta(mu), lo, hi, f_lo, f_hi)
    }

    /// Norming constants `a_n = int phi_n^2`, `b_n = int psi_n^2` for the given eigenvalues.
    pub fn norming_constants(&self, mus: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let pairs: Vec<(f64, f64)> = mus
            .par_iter()
            .map(|&mu| {
                let phi = self.phi(mu)?;
                let (y, yp) = phi.last();
                let cb = self.angles.cot_beta();
                let s = self.shooter.scale(mu);
                let scale = y.hypot(yp / s) * (cb.abs() + s);
                let rel = (y * cb + yp).abs() / scale;
                if rel > 1e-6 {
                    return Err(Error::invalid(format!(
                        "mu = {mu} is not an eigenvalue (relative |Delta| = {rel:e})"
                    )));
                }
                let psi = self.psi(mu)?;
                let h = self.grid().spacing();
                let sq = |v: &[f64]| trapezoid(&v.iter().map(|x| x * x).collect::<Vec<_>>(), h);
                Ok((sq(&phi.y), sq(&psi.y)))
            })
            .collect::<Result<_>>()?;
        Ok(pairs.into_iter().unzip())
    }
}

/// Brent's method on a bracket with `f(a) f(b) < 0`, iterated to machine precision.
fn brent(mut f: impl FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> Result<f64> {
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb == 0.0 {
            return Ok(b);
        }
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 1e-300;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * xm * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(xm) };
        fb = f(b)?;
    }
    Err(Error::Internal("Brent iteration did not converge".into()))
}

/// Forward-computed spectral data with the right-endpoint norming constants.
#[derive(Debug, Clone)]
pub struct ForwardResult {
    pub spectral: SpectralData,
    pub b: NormingB,
    /// `(phi_n, psi_n)` traces, when requested.
    pub traces: Option<Vec<(SolutionTrace, SolutionTrace)>>,
}

#[derive(Debug, Clone, Copy)]
pub struct ForwardConfig {
    pub m: usize,
    pub retain_traces: bool,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        Self {
            m: DEFAULT_GRID,
            retain_traces: false,
        }
    }
}

/// Eigenvalues and both families of norming constants of `L(q, alpha, beta)`.
pub fn forward(q: &GridFunction, angles: BoundaryAngles, count: usize, config: ForwardConfig) -> Result<ForwardResult> {
    let problem = ForwardProblem::new(q, angles, config.m)?;
    let mus = problem.eigenvalues(count)?;
    let (a, b) = problem.norming_constants(&mus)?;
    let traces = if config.retain_traces {
        Some(
            mus.iter()
                .map(|&mu| Ok((problem.phi(mu)?, problem.psi(mu)?)))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(ForwardResult {
        spectral: SpectralData::from_mu(&mus, a)?,
        b: NormingB::new(b)?,
        traces,
    })
}

/// Potential samples on the default `[0, pi]` grid from a closure.
pub fn sample_potential(m: usize, f: impl Fn(f64) -> f64) -> Result<GridFunction> {
    GridFunction::from_fn(UniformGrid::new(0.0, PI, m)?, f)
}
