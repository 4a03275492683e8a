//! Tridiagonal storage, products and the Thomas algorithm.

use crate::error::{Error, Result};

/// Square tridiagonal matrix.
///
/// `lower[i]` is entry `(i + 1, i)` and `upper[i]` is entry `(i, i + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        for band in [&lower, &upper] {
            if band.len() != n - 1 {
                return Err(Error::DimensionMismatch {
                    expected: n - 1,
                    got: band.len(),
                });
            }
        }
        Ok(TridiagonalMatrix { lower, diag, upper })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0);
        TridiagonalMatrix {
            lower: vec![0.0; dim - 1],
            diag: vec![0.0; dim],
            upper: vec![0.0; dim - 1],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        m.diag.fill(1.0);
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Entry `(row, col)`; zero outside the band.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        if row == col {
            self.diag[row]
        } else if row == col + 1 {
            self.lower[col]
        } else if col == row + 1 {
            self.upper[row]
        } else {
            0.0
        }
    }

    pub(crate) fn add_to(&mut self, row: usize, col: usize, value: f64) {
        if row == col {
            self.diag[row] += value;
        } else if row == col + 1 {
            self.lower[col] += value;
        } else if col == row + 1 {
            self.upper[row] += value;
        } else {
            panic!("entry ({row}, {col}) is outside the tridiagonal band");
        }
    }

    pub fn transpose(&self) -> Self {
        TridiagonalMatrix {
            lower: self.upper.clone(),
            diag: self.diag.clone(),
            upper: self.lower.clone(),
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        TridiagonalMatrix {
            lower: self.lower.iter().map(|v| a * v).collect(),
            diag: self.diag.iter().map(|v| a * v).collect(),
            upper: self.upper.iter().map(|v| a * v).collect(),
        }
    }

    /// `a * self + b * other`, entrywise.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!(self.dim(), other.dim());
        let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(x, y)| a * x + b * y).collect();
        TridiagonalMatrix {
            lower: mix(&self.lower, &other.lower),
            diag: mix(&self.diag, &other.diag),
            upper: mix(&self.upper, &other.upper),
        }
    }

    /// `out = self * x`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(out.len(), n);
        if n == 1 {
            out[0] = self.diag[0] * x[0];
            return;
        }
        out[0] = self.diag[0] * x[0] + self.upper[0] * x[1];
        for i in 1..n - 1 {
            out[i] = self.lower[i - 1] * x[i - 1] + self.diag[i] * x[i] + self.upper[i] * x[i + 1];
        }
        out[n - 1] = self.lower[n - 2] * x[n - 2] + self.diag[n - 1] * x[n - 1];
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(x, &mut out);
        out
    }

    /// `x^T self y`.
    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.dim();
        let mut sum = 0.0;
        for i in 0..n {
            let mut row = self.diag[i] * y[i];
            if i > 0 {
                row += self.lower[i - 1] * y[i - 1];
            }
            if i + 1 < n {
                row += self.upper[i] * y[i + 1];
            }
            sum += x[i] * row;
        }
        sum
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.lower
            .iter()
            .zip(&self.upper)
            .all(|(l, u)| (l - u).abs() <= tol * l.abs().max(u.abs()).max(f64::MIN_POSITIVE))
    }

    /// Strict row diagonal dominance.
    pub fn is_strictly_diagonally_dominant(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| {
            let mut off = 0.0;
            if i > 0 {
                off += self.lower[i - 1].abs();
            }
            if i + 1 < n {
                off += self.upper[i].abs();
            }
            self.diag[i].abs() > off
        })
    }

    pub fn factor(&self) -> Result<TridiagonalLu> {
        TridiagonalLu::new(self)
    }
}

/// LU factors of a tridiagonal matrix without pivoting, reusable across
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    /// Reciprocal pivots.
    inv_pivot: Vec<f64>,
    /// Normalised super-diagonal `upper[i] / pivot[i]`.
    upper_scaled: Vec<f64>,
}

impl TridiagonalLu {
    fn new(m: &TridiagonalMatrix) -> Result<Self> {
        let n = m.dim();
        let scale = m
            .diag
            .iter()
            .chain(&m.lower)
            .chain(&m.upper)
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        let tiny = scale * f64::EPSILON;
        let mut inv_pivot = vec![0.0; n];
        let mut upper_scaled = vec![0.0; n.saturating_sub(1)];
        let mut pivot = m.diag[0];
        for i in 0..n {
            if i > 0 {
                pivot = m.diag[i] - m.lower[i - 1] * upper_scaled[i - 1];
            }
            if !(pivot.abs() > tiny) {
                return Err(Error::Singular { row: i });
            }
            inv_pivot[i] = 1.0 / pivot;
            if i + 1 < n {
                upper_scaled[i] = m.upper[i] * inv_pivot[i];
            }
        }
        Ok(TridiagonalLu {
            lower: m.lower.clone(),
            inv_pivot,
            upper_scaled,
        })
    }

    pub fn dim(&self) -> usize {
        self.inv_pivot.len()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i - 1] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper_scaled[i] * rhs[i + 1];
        }
    }
}

/// Solves `m x = rhs` by forward elimination and back substitution.
pub fn solve_tridiagonal(m: &TridiagonalMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: rhs.len(),
        });
    }
    let lu = m.factor()?;
    let mut x = rhs.to_vec();
    lu.solve_in_place(&mut x);
    Ok(x)
}
