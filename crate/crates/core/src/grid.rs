//! Uniform grids, sampled functions and the composite trapezoid rule.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equispaced abscissae `start = x_0 < x_1 < ... < x_{m-1} = end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    start: f64,
    end: f64,
    m: usize,
}

impl UniformGrid {
    pub fn new(start: f64, end: f64, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 points, got {m}")));
        }
        if !(start.is_finite() && end.is_finite()) || end <= start {
            return Err(Error::invalid(format!(
                "grid interval [{start}, {end}] must be finite with end > start"
            )));
        }
        Ok(Self { start, end, m })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.end - self.start) / (self.m - 1) as f64
    }

    /// The i-th node; the last node is exactly `end`.
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.m {
            self.end
        } else {
            self.start + (self.end - self.start) * (i as f64) / ((self.m - 1) as f64)
        }
    }

    pub fn abscissae(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.x(i)).collect()
    }
}

/// `m` equispaced points on `[a, b]`, endpoints included.
pub fn uniform_grid(a: f64, b: f64, m: usize) -> Result<UniformGrid> {
    UniformGrid::new(a, b, m)
}

/// Samples of a real function on a [`UniformGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: UniformGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "{} values supplied for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: UniformGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.x(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Piecewise-linear interpolant, clamped to the end values outside the interval.
    pub fn interpolate(&self, x: f64) -> f64 {
        let h = self.grid.spacing();
        let u = (x - self.grid.start()) / h;
        if u <= 0.0 {
            return self.values[0];
        }
        let last = self.values.len() - 1;
        if u >= last as f64 {
            return self.values[last];
        }
        let i = (u.floor() as usize).min(last - 1);
        let frac = u - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Same function on another grid over the same interval, by linear interpolation.
    pub fn resample(&self, m: usize) -> Result<GridFunction> {
        let grid = UniformGrid::new(self.grid.start(), self.grid.end(), m)?;
        GridFunction::from_fn(grid, |x| self.interpolate(x))
    }

    /// Reads the two-column `x,value` CSV format (header line required).
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || !headers[0].eq_ignore_ascii_case("x") || !headers[1].eq_ignore_ascii_case("value") {
            return Err(Error::Parse(format!(
                "expected header `x,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::Parse(format!("row {} has {} fields", line + 2, record.len())));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: `{s}`: {e}", line + 2)))
            };
            xs.push(parse(&record[0])?);
            vs.push(parse(&record[1])?);
        }
        if xs.len() < 2 {
            return Err(Error::Parse("need at least two samples".into()));
        }
        let grid = UniformGrid::new(xs[0], xs[xs.len() - 1], xs.len())?;
        let h = grid.spacing();
        for (i, &x) in xs.iter().enumerate() {
            if (x - grid.x(i)).abs() > 1e-4 * h {
                return Err(Error::Parse(format!(
                    "abscissa {x} at row {} is not on a uniform grid",
                    i + 2
                )));
            }
        }
        GridFunction::new(grid, vs)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["x", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            wtr.write_record([format!("{:.16e}", self.grid.x(i)), format!("{v:.16e}")])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Composite trapezoid value of the integral of `f` over its interval.
pub fn integrate_trapezoid(f: &GridFunction) -> f64 {
    trapezoid(f.values(), f.grid().spacing())
}

/// Trapezoid rule on raw equispaced samples.
pub(crate) fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            h * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Second-order central differences, one-sided three-point stencils at the ends.
pub(crate) fn derivative_second_order(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 3, "need at least 3 samples to differentiate");
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    d
}

/// Fourth-order differences: five-point central stencil inside, one-sided
/// five-point stencils on the two nodes nearest each end.
pub(crate) fn derivative_fourth_order(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    if n < 5 {
        return derivative_second_order(values, h);
    }
    let v = values;
    let mut d = vec![0.0; n];
    d[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h);
    d[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / (12.0 * h);
    for i in 2..n - 2 {
        d[i] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
    }
    let k = n - 1;
    d[k - 1] = (3.0 * v[k] + 10.0 * v[k - 1] - 18.0 * v[k - 2] + 6.0 * v[k - 3] - v[k - 4]) / (12.0 * h);
    d[k] = (25.0 * v[k] - 48.0 * v[k - 1] + 36.0 * v[k - 2] - 16.0 * v[k - 3] + 3.0 * v[k - 4]) / (12.0 * h);
    d
}
