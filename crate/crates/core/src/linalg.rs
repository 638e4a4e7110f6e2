//! Dense LU factorization with partial pivoting.
//!
//! The time-stepping matrices are time independent, so each run factors once
//! and then back-substitutes every step.

use nalgebra::DMatrix;

use crate::error::{Result, WsldError};

/// Packed `PA = LU` factors (unit lower triangle stored below the diagonal).
#[derive(Debug, Clone)]
pub struct LuFactors {
    // row-major copy of the packed factors; the substitutions walk rows
    rows: Vec<f64>,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn new(matrix: &DMatrix<f64>) -> Result<Self> {
        assert!(matrix.is_square(), "LU factorization needs a square matrix");
        let n = matrix.nrows();
        let mut lu = matrix.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = matrix.amax().max(f64::MIN_POSITIVE);

        for col in 0..n {
            let (pivot_row, pivot_abs) = (col..n)
                .map(|r| (r, lu[(r, col)].abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_abs <= scale * f64::EPSILON {
                return Err(WsldError::SingularSystem(col));
            }
            if pivot_row != col {
                lu.swap_rows(pivot_row, col);
                perm.swap(pivot_row, col);
            }
            let pivot = lu[(col, col)];
            for r in col + 1..n {
                let factor = lu[(r, col)] / pivot;
                lu[(r, col)] = factor;
                if factor != 0.0 {
                    for c in col + 1..n {
                        let upper = lu[(col, c)];
                        lu[(r, c)] -= factor * upper;
                    }
                }
            }
        }
        let rows = lu.transpose().as_slice().to_vec();
        Ok(Self { rows, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Solves `A x = b`, overwriting `rhs` with `x`.
    pub fn solve_in_place(&self, rhs: &mut [f64], scratch: &mut Vec<f64>) {
        let n = self.dim();
        assert_eq!(rhs.len(), n, "right-hand side length");
        scratch.clear();
        scratch.extend(self.perm.iter().map(|&p| rhs[p]));
        for i in 0..n {
            let row = &self.rows[i * n..i * n + i];
            let dot: f64 = row.iter().zip(&scratch[..i]).map(|(l, x)| l * x).sum();
            scratch[i] -= dot;
        }
        for i in (0..n).rev() {
            let row = &self.rows[i * n..(i + 1) * n];
            let dot: f64 = row[i + 1..].iter().zip(&scratch[i + 1..]).map(|(u, x)| u * x).sum();
            scratch[i] = (scratch[i] - dot) / row[i];
        }
        rhs.copy_from_slice(scratch);
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        let mut scratch = Vec::with_capacity(rhs.len());
        self.solve_in_place(&mut x, &mut scratch);
        x
    }
}
