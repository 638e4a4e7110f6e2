//! Numerical stability certification of WSLD operators.
//!
//! The symmetric part `H = (A + A^T)/2` of an operator matrix is a symmetric
//! Toeplitz matrix whose generating function is the real part of the operator
//! symbol. If that function is nonpositive and not identically zero, every
//! eigenvalue of `H` is negative, which bounds the real parts of the
//! eigenvalues of `A` from above. Nonpositivity is checked on a dense grid,
//! and the bound is confirmed by a dense symmetric eigensolve at a finite size.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::coeffs::{stencil_phi, FractionalOrder, ShiftTuple};
use crate::error::{Result, WsldError};
use crate::operators::{assemble_left, Grid1D, OperatorMatrix};

/// Scan values in `(0, ROUNDOFF_BAND]` count as zero.
pub const ROUNDOFF_BAND: f64 = 1e-12;

/// Truncation length of the series fallback. The neglected tail is
/// `O(K^-a)` at worst and `O(K^-a-1 / x)` away from `x = 0`.
pub const SERIES_TERMS: usize = 100_000;

/// Phase of `1 + (1 - e^{ix})/2`, measured so that its argument is `x/2 - theta`.
pub fn theta(x: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&x) {
        return Err(WsldError::Domain {
            value: x,
            domain: "[0, pi]",
        });
    }
    let s = (x / 2.0).sin();
    let c = (x / 2.0).cos();
    Ok(2.0 * (2.0 * s / (c + (1.0 + 3.0 * s * s).sqrt())).atan())
}

/// Symbol of the symmetric part of one shifted stencil `L_s`:
/// `R(x) cos(psi(x) - s x)`. A pair `(1, q)` combines shifts `1` and `q` with
/// weights `q/(q-1)` and `-1/(q-1)`.
struct ShiftSymbol {
    modulus: f64,
    psi: f64,
}

impl ShiftSymbol {
    fn new(alpha: f64, x: f64) -> Result<Self> {
        let s = (x / 2.0).sin();
        Ok(Self {
            modulus: (2.0 * s).powf(alpha) * (1.0 + 3.0 * s * s).powf(alpha / 2.0),
            psi: alpha * (x - FRAC_PI_2 - theta(x)?),
        })
    }

    fn eval(&self, shift: i32, x: f64) -> f64 {
        self.modulus * (self.psi - shift as f64 * x).cos()
    }
}

/// True when the tuple is built only from `(1, q)` pairs, the families with
/// a closed-form symbol.
pub fn has_closed_form(tuple: &ShiftTuple) -> bool {
    tuple.order() >= 2 && tuple.pairs().iter().all(|&(p, _)| p == 1)
}

/// Closed-form generating function of the symmetric part for tuples made of
/// `(1, q)` pairs, evaluated on `[0, pi]` (the function is even).
pub fn generating_function(tuple: &ShiftTuple, alpha: FractionalOrder, x: f64) -> Result<f64> {
    if !has_closed_form(tuple) {
        return Err(WsldError::UnsupportedTuple(tuple.to_string()));
    }
    let symbol = ShiftSymbol::new(alpha.value(), x)?;
    Ok(tuple
        .branches(alpha)?
        .iter()
        .map(|&(shift, w)| w * symbol.eval(shift, x))
        .sum())
}

/// Stencil coefficients prepared for repeated series evaluation.
pub struct SeriesSymbol {
    phi: Vec<f64>,
    m: usize,
}

impl SeriesSymbol {
    pub fn new(tuple: &ShiftTuple, alpha: FractionalOrder, terms: usize) -> Result<Self> {
        let table = stencil_phi(alpha, tuple, terms.saturating_sub(1))?;
        Ok(Self {
            phi: table.phi().to_vec(),
            m: tuple.m(),
        })
    }

    /// `Re sum_k phi_k e^{i(k-m)x}`.
    ///
    /// At `x = 0` the full series is `sum_k phi_k = 0` exactly (weights sum to
    /// one and the `q_k` sum to zero), so that value is returned directly
    /// instead of the slowly converging partial sum.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=PI).contains(&x) {
            return Err(WsldError::Domain {
                value: x,
                domain: "[0, pi]",
            });
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        const RESYNC: usize = 512;
        let (step_s, step_c) = x.sin_cos();
        let mut acc = 0.0;
        for (block, chunk) in self.phi.chunks(RESYNC).enumerate() {
            let start = (block * RESYNC) as f64 - self.m as f64;
            let (mut s, mut c) = (start * x).sin_cos();
            for &p in chunk {
                acc += p * c;
                let next_c = c * step_c - s * step_s;
                s = s * step_c + c * step_s;
                c = next_c;
            }
        }
        Ok(acc)
    }
}

/// Series fallback `Re sum_{k<K} phi_k e^{i(k-m)x}` for any tuple.
pub fn generating_function_series(tuple: &ShiftTuple, alpha: FractionalOrder, x: f64) -> Result<f64> {
    SeriesSymbol::new(tuple, alpha, SERIES_TERMS)?.eval(x)
}

/// Outcome of a grid scan of the generating function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolScan {
    pub f_max: f64,
    pub at_alpha: f64,
    pub at_x: f64,
    pub closed_form: bool,
}

impl SymbolScan {
    pub fn nonpositive(&self) -> bool {
        self.f_max <= ROUNDOFF_BAND
    }
}

/// `n` uniform points on `[0, pi]`.
pub fn uniform_x_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Maximum of the generating function over `alpha_grid x x_grid`.
pub fn scan_nonpositivity(tuple: &ShiftTuple, alpha_grid: &[FractionalOrder], x_grid: &[f64]) -> Result<SymbolScan> {
    if alpha_grid.is_empty() || x_grid.is_empty() {
        return Err(WsldError::InvalidProblem("scan grids must be nonempty".into()));
    }
    let closed_form = has_closed_form(tuple);
    let mut best = SymbolScan {
        f_max: f64::NEG_INFINITY,
        at_alpha: f64::NAN,
        at_x: f64::NAN,
        closed_form,
    };
    for &alpha in alpha_grid {
        let series = if closed_form {
            None
        } else {
            Some(SeriesSymbol::new(tuple, alpha, SERIES_TERMS)?)
        };
        let values = x_grid
            .par_iter()
            .map(|&x| match &series {
                None => generating_function(tuple, alpha, x),
                Some(s) => s.eval(x),
            })
            .collect::<Result<Vec<f64>>>()?;
        for (&x, f) in x_grid.iter().zip(values) {
            if f > best.f_max {
                best.f_max = f;
                best.at_alpha = alpha.value();
                best.at_x = x;
            }
        }
    }
    Ok(best)
}

/// Symmetric part `(A + A^T) / 2`.
pub fn symmetric_part(matrix: &DMatrix<f64>) -> DMatrix<f64> {
    (matrix + matrix.transpose()) * 0.5
}

/// Largest eigenvalue of the symmetric part, an upper bound on `Re(lambda(A))`.
pub fn max_real_eig_bound(matrix: &DMatrix<f64>) -> f64 {
    assert!(matrix.is_square(), "eigenvalue bound needs a square matrix");
    let eig = symmetric_part(matrix).symmetric_eigen();
    eig.eigenvalues.max()
}

/// Largest eigenvalue modulus of a general square matrix.
pub fn spectral_radius(matrix: &DMatrix<f64>) -> f64 {
    assert!(matrix.is_square(), "spectral radius needs a square matrix");
    matrix
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Symbol nonpositive on the scan grid and `lambda_max(H) < 0`.
    CertifiedNegative,
    /// Mixed evidence.
    Indeterminate,
    /// Symbol positive somewhere and `lambda_max(H) > 0`.
    Positive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::CertifiedNegative => "certified_negative",
            Verdict::Indeterminate => "indeterminate",
            Verdict::Positive => "positive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub tuple: ShiftTuple,
    pub alpha: FractionalOrder,
    pub f_max: f64,
    pub lambda_max_sym: f64,
    pub matrix_size: usize,
    pub verdict: Verdict,
}

fn verdict(f_max: f64, lambda_max_sym: f64) -> Verdict {
    if f_max <= ROUNDOFF_BAND && lambda_max_sym < 0.0 {
        Verdict::CertifiedNegative
    } else if f_max > ROUNDOFF_BAND && lambda_max_sym > 0.0 {
        Verdict::Positive
    } else {
        Verdict::Indeterminate
    }
}

/// Scans the symbol at `alpha` on `x_points` uniform points and bounds the
/// eigenvalues of the `n x n` operator matrix.
pub fn certify(tuple: &ShiftTuple, alpha: FractionalOrder, x_points: usize, n: usize) -> Result<SpectralReport> {
    let scan = scan_nonpositivity(tuple, &[alpha], &uniform_x_grid(x_points))?;
    let grid = Grid1D::new(0.0, 1.0, n + 1)?;
    let op: OperatorMatrix = assemble_left(alpha, tuple, &grid)?;
    let lambda_max_sym = max_real_eig_bound(op.matrix());
    Ok(SpectralReport {
        tuple: tuple.clone(),
        alpha,
        f_max: scan.f_max,
        lambda_max_sym,
        matrix_size: n,
        verdict: verdict(scan.f_max, lambda_max_sym),
    })
}
