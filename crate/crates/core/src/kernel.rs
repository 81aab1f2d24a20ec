use crate::grid::UniformGrid;

/// Values `K(x_i, t_j)` for `0 <= j <= i < m` on a uniform grid over `[0, pi]`,
/// stored row by row in packed lower-triangular order.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularKernel {
    grid: UniformGrid,
    data: Vec<f64>,
}

#[inline]
fn offset(i: usize) -> usize {
    i * (i + 1) / 2
}

impl TriangularKernel {
    pub fn zeros(grid: UniformGrid) -> Self {
        let m = grid.len();
        Self {
            grid,
            data: vec![0.0; offset(m)],
        }
    }

    pub fn from_fn(grid: UniformGrid, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let m = grid.len();
        let mut data = Vec::with_capacity(offset(m));
        for i in 0..m {
            for j in 0..=i {
                data.push(f(i, j));
            }
        }
        Self { grid, data }
    }

    /// Assembles a kernel from complete rows (row `i` must have `i + 1` entries).
    pub fn from_rows(grid: UniformGrid, rows: Vec<Vec<f64>>) -> Self {
        assert_eq!(rows.len(), grid.len(), "one row per grid node");
        let mut data = Vec::with_capacity(offset(grid.len()));
        for (i, r) in rows.into_iter().enumerate() {
            assert_eq!(r.len(), i + 1, "row {i} has the wrong length");
            data.extend(r);
        }
        Self { grid, data }
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.grid.len()
    }

    /// Entry at `(x_i, t_j)`, `j <= i`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i);
        self.data[offset(i) + j]
    }

    /// Symmetric extension to the square: `K(x_i, x_j) = K(x_j, x_i)`.
    #[inline]
    pub fn sym(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.get(i, j)
        } else {
            self.get(j, i)
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j <= i);
        self.data[offset(i) + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[offset(i)..offset(i + 1)]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.m()).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
