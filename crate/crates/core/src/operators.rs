//! Finite-domain WSLD operator matrices and their stencil application.
//!
//! On a uniform grid with zero extension outside `(x_L, x_R)` the left
//! operator at interior node `i` is `h^-a * sum_j phi_{i-j+m} u_j`, a lower
//! Hessenberg-like Toeplitz matrix with `m` super-diagonals. The right operator
//! is its transpose.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::gamma;

use crate::coeffs::{stencil_phi, CoefficientTable, FractionalOrder, ShiftTuple};
use crate::error::{Result, WsldError};

/// Uniform grid on `[x_left, x_right]` with `n_cells` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_left: f64,
    x_right: f64,
    n_cells: usize,
}

impl Grid1D {
    pub fn new(x_left: f64, x_right: f64, n_cells: usize) -> Result<Self> {
        if !(x_left.is_finite() && x_right.is_finite()) || x_left >= x_right {
            return Err(WsldError::InvalidGrid(format!(
                "need finite x_left < x_right, got [{x_left}, {x_right}]"
            )));
        }
        if n_cells < 2 {
            return Err(WsldError::InvalidGrid(format!(
                "need at least 2 cells, got {n_cells}"
            )));
        }
        Ok(Self {
            x_left,
            x_right,
            n_cells,
        })
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_right
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Number of interior nodes, `N_x - 1`.
    pub fn n_interior(&self) -> usize {
        self.n_cells - 1
    }

    pub fn h(&self) -> f64 {
        (self.x_right - self.x_left) / self.n_cells as f64
    }

    /// Coordinate of node `i`, `0 <= i <= N_x`.
    pub fn node(&self, i: usize) -> f64 {
        self.x_left + i as f64 * self.h()
    }

    /// Interior node coordinates `x_1 .. x_{N_x-1}`.
    pub fn interior_nodes(&self) -> Vec<f64> {
        (1..self.n_cells).map(|i| self.node(i)).collect()
    }
}

/// Which Riemann–Liouville derivative an operator approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// `_{x_L}D_x^a`, integrating from the left endpoint.
    Left,
    /// `_xD_{x_R}^a`, integrating from the right endpoint.
    Right,
}

/// Dense realization of an (unscaled) WSLD operator on the interior nodes.
///
/// The derivative approximation is `h^-a` times this matrix.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    side: Side,
    matrix: DMatrix<f64>,
    table: CoefficientTable,
}

impl OperatorMatrix {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn table(&self) -> &CoefficientTable {
        &self.table
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// True when every diagonal is constant.
    pub fn is_toeplitz(&self) -> bool {
        let n = self.size();
        (1..n).all(|i| (1..n).all(|j| self.matrix[(i, j)] == self.matrix[(i - 1, j - 1)]))
    }

    /// Writes the matrix as row-major CSV in full-precision scientific notation.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for row in self.matrix.row_iter() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

fn table_for(alpha: FractionalOrder, tuple: &ShiftTuple, grid: &Grid1D) -> Result<CoefficientTable> {
    let len = CoefficientTable::length_for_cells(tuple, grid.n_cells());
    stencil_phi(alpha, tuple, len - 1)
}

fn toeplitz_from_table(table: &CoefficientTable, n: usize, side: Side) -> DMatrix<f64> {
    let m = table.m() as isize;
    DMatrix::from_fn(n, n, |i, j| {
        let (i, j) = (i as isize, j as isize);
        match side {
            Side::Left => table.phi_at(i - j + m),
            Side::Right => table.phi_at(j - i + m),
        }
    })
}

/// Matrix of the left operator: entry `(i, j) = phi_{i-j+m}`.
pub fn assemble_left(alpha: FractionalOrder, tuple: &ShiftTuple, grid: &Grid1D) -> Result<OperatorMatrix> {
    let table = table_for(alpha, tuple, grid)?;
    let matrix = toeplitz_from_table(&table, grid.n_interior(), Side::Left);
    let op = OperatorMatrix {
        side: Side::Left,
        matrix,
        table,
    };
    debug_assert!(op.is_toeplitz());
    Ok(op)
}

/// Matrix of the right operator, the transpose of [`assemble_left`].
pub fn assemble_right(alpha: FractionalOrder, tuple: &ShiftTuple, grid: &Grid1D) -> Result<OperatorMatrix> {
    let table = table_for(alpha, tuple, grid)?;
    let matrix = toeplitz_from_table(&table, grid.n_interior(), Side::Right);
    Ok(OperatorMatrix {
        side: Side::Right,
        matrix,
        table,
    })
}

/// Applies the scaled operator `h^-a * A` (or `A^T`) to interior values by
/// direct stencil correlation.
pub fn apply(side: Side, table: &CoefficientTable, grid: &Grid1D, u: &[f64]) -> Result<Vec<f64>> {
    let n = grid.n_interior();
    if u.len() != n {
        return Err(WsldError::LengthMismatch {
            expected: n,
            found: u.len(),
        });
    }
    // largest stencil index touched is (n - 1) + m
    let needed = n + table.m();
    if table.len() < needed {
        return Err(WsldError::LengthMismatch {
            expected: needed,
            found: table.len(),
        });
    }
    let scale = grid.h().powf(-table.alpha().value());
    let m = table.m();
    let phi = table.phi();
    let out = (0..n)
        .map(|i| {
            let acc: f64 = match side {
                // sum_{k} phi_k u_{i-k+m}, k = i - j + m
                Side::Left => {
                    let j_max = (i + m).min(n - 1);
                    (0..=j_max).map(|j| phi[i + m - j] * u[j]).sum()
                }
                // sum_{k} phi_k u_{i+k-m}, k = j - i + m
                Side::Right => {
                    let j_min = i.saturating_sub(m);
                    (j_min..n).map(|j| phi[j + m - i] * u[j]).sum()
                }
            };
            acc * scale
        })
        .collect();
    Ok(out)
}

/// Sum of monomials `sum_k c_k t^{p_k}` in a shifted variable `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedPolynomial {
    terms: Vec<(u32, f64)>,
}

impl ShiftedPolynomial {
    pub fn new(powers: &[u32], coeffs: &[f64]) -> Result<Self> {
        if powers.len() != coeffs.len() {
            return Err(WsldError::LengthMismatch {
                expected: powers.len(),
                found: coeffs.len(),
            });
        }
        Ok(Self {
            terms: powers.iter().copied().zip(coeffs.iter().copied()).collect(),
        })
    }

    /// Expansion of `t^a (L - t)^b` in powers of `t`.
    pub fn bump(a: u32, b: u32, length: f64) -> Self {
        let mut binom = 1.0;
        let terms = (0..=b)
            .map(|j| {
                if j > 0 {
                    binom *= (b - j + 1) as f64 / j as f64;
                }
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                (a + j, sign * binom * length.powi((b - j) as i32))
            })
            .collect();
        Self { terms }
    }

    pub fn terms(&self) -> &[(u32, f64)] {
        &self.terms
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|&(p, c)| c * t.powi(p as i32)).sum()
    }
}

/// Exact Riemann–Liouville derivative of a polynomial in `(x - x_L)` (left)
/// or `(x_R - x)` (right), with the gamma-function ratios precomputed.
///
/// Each monomial obeys `D^a t^p = Gamma(p+1)/Gamma(p+1-a) t^{p-a}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyDerivative {
    side: Side,
    alpha: f64,
    domain: (f64, f64),
    // (p - a, c * Gamma(p+1)/Gamma(p+1-a))
    terms: Vec<(f64, f64)>,
}

impl PolyDerivative {
    pub fn new(side: Side, alpha: FractionalOrder, poly: &ShiftedPolynomial, domain: (f64, f64)) -> Result<Self> {
        let a = alpha.value();
        let min = alpha.ceil();
        let terms = poly
            .terms
            .iter()
            .map(|&(p, c)| {
                if p < min {
                    return Err(WsldError::UnsupportedPower { power: p, min });
                }
                let pf = p as f64;
                Ok((pf - a, c * gamma(pf + 1.0) / gamma(pf + 1.0 - a)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            side,
            alpha: a,
            domain,
            terms,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (x_left, x_right) = self.domain;
        if !(x >= x_left && x <= x_right) {
            return Err(WsldError::Domain {
                value: x,
                domain: "[x_left, x_right]",
            });
        }
        let t = match self.side {
            Side::Left => x - x_left,
            Side::Right => x_right - x,
        };
        Ok(self.terms.iter().map(|&(e, k)| k * t.powf(e)).sum())
    }
}

/// Exact Riemann–Liouville derivative of a polynomial in `(x - x_L)` (left)
/// or `(x_R - x)` (right) at a single point.
pub fn rl_exact_poly(
    side: Side,
    alpha: FractionalOrder,
    poly: &ShiftedPolynomial,
    x: f64,
    domain: (f64, f64),
) -> Result<f64> {
    PolyDerivative::new(side, alpha, poly, domain)?.eval(x)
}

/// `h^-a * A u` through the dense matrix, used to cross-check [`apply`].
pub fn dense_apply(op: &OperatorMatrix, grid: &Grid1D, u: &[f64]) -> Vec<f64> {
    let scale = grid.h().powf(-op.table().alpha().value());
    (op.matrix() * DVector::from_column_slice(u) * scale)
        .iter()
        .copied()
        .collect()
}
