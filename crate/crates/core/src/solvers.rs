//! Crank–Nicolson (1D) and ADI (2D) time stepping for variable-coefficient
//! space-fractional diffusion
//!
//! ```text
//! u_t = d+(x) D_left^a u + d-(x) D_right^a u [+ e+(y) D_left^b u + e-(y) D_right^b u] + f
//! ```
//!
//! with homogeneous Dirichlet data. The spatial generator in each direction is
//! `tau / (2 h^a) * (D+ A + D- A^T)`; it never changes in time, so every run
//! factors its implicit matrices exactly once.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::coeffs::{FractionalOrder, ShiftTuple};
use crate::error::{Result, WsldError};
use crate::linalg::LuFactors;
use crate::operators::{assemble_left, Grid1D};

/// Source term `f(x, t)` of the 1D equation.
pub trait SourceTerm1D: Send + Sync {
    fn value(&self, x: f64, t: f64) -> f64;

    /// Samples the source at every node; override when the source separates.
    fn sample(&self, xs: &[f64], t: f64, out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = self.value(x, t);
        }
    }
}

impl<F> SourceTerm1D for F
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
{
    fn value(&self, x: f64, t: f64) -> f64 {
        self(x, t)
    }
}

/// Source term `f(x, y, t)` of the 2D equation.
pub trait SourceTerm2D: Send + Sync {
    fn value(&self, x: f64, y: f64, t: f64) -> f64;

    /// Fills `out[(i, j)] = f(xs[i], ys[j], t)`.
    fn sample(&self, xs: &[f64], ys: &[f64], t: f64, out: &mut DMatrix<f64>) {
        for (j, &y) in ys.iter().enumerate() {
            for (i, &x) in xs.iter().enumerate() {
                out[(i, j)] = self.value(x, y, t);
            }
        }
    }
}

impl<F> SourceTerm2D for F
where
    F: Fn(f64, f64, f64) -> f64 + Send + Sync,
{
    fn value(&self, x: f64, y: f64, t: f64) -> f64 {
        self(x, y, t)
    }
}

fn check_coefficients(name: &str, values: &[f64], expected: usize) -> Result<()> {
    if values.len() != expected {
        return Err(WsldError::LengthMismatch {
            expected,
            found: values.len(),
        });
    }
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(WsldError::InvalidProblem(format!(
            "{name} must be finite and nonnegative, found {v}"
        )));
    }
    Ok(())
}

fn check_horizon(t_final: f64, n_steps: usize) -> Result<()> {
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(WsldError::InvalidProblem(format!("bad horizon {t_final}")));
    }
    if n_steps == 0 {
        return Err(WsldError::InvalidProblem("need at least one time step".into()));
    }
    Ok(())
}

/// Returns `kappa` with `minus = kappa * plus` to relative 1e-12, if one exists.
pub fn proportionality(plus: &[f64], minus: &[f64]) -> Option<f64> {
    let kappa = plus
        .iter()
        .zip(minus)
        .find(|(p, _)| **p > 0.0)
        .map(|(p, m)| m / p)
        .unwrap_or(0.0);
    plus.iter()
        .zip(minus)
        .all(|(p, m)| (m - kappa * p).abs() <= 1e-12 * m.abs().max(kappa * p.abs()))
        .then_some(kappa)
}

/// One-dimensional problem on the interior nodes of `grid`.
#[derive(Clone)]
pub struct Problem1D {
    pub grid: Grid1D,
    pub alpha: FractionalOrder,
    pub d_plus: Vec<f64>,
    pub d_minus: Vec<f64>,
    pub forcing: Arc<dyn SourceTerm1D>,
    pub u0: Vec<f64>,
    pub t_final: f64,
    pub n_steps: usize,
}

impl fmt::Debug for Problem1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem1D")
            .field("grid", &self.grid)
            .field("alpha", &self.alpha)
            .field("t_final", &self.t_final)
            .field("n_steps", &self.n_steps)
            .finish_non_exhaustive()
    }
}

impl Problem1D {
    pub fn validate(&self) -> Result<()> {
        let n = self.grid.n_interior();
        check_coefficients("d_plus", &self.d_plus, n)?;
        check_coefficients("d_minus", &self.d_minus, n)?;
        if self.u0.len() != n {
            return Err(WsldError::LengthMismatch {
                expected: n,
                found: self.u0.len(),
            });
        }
        check_horizon(self.t_final, self.n_steps)
    }

    pub fn tau(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }
}

/// Two-dimensional problem with coefficients separable by direction.
///
/// Arrays are indexed `(i, j)` with `i` along x and `j` along y.
#[derive(Clone)]
pub struct Problem2D {
    pub grid_x: Grid1D,
    pub grid_y: Grid1D,
    pub alpha: FractionalOrder,
    pub beta: FractionalOrder,
    pub d_plus: Vec<f64>,
    pub d_minus: Vec<f64>,
    pub e_plus: Vec<f64>,
    pub e_minus: Vec<f64>,
    pub forcing: Arc<dyn SourceTerm2D>,
    pub u0: DMatrix<f64>,
    pub t_final: f64,
    pub n_steps: usize,
}

impl fmt::Debug for Problem2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem2D")
            .field("grid_x", &self.grid_x)
            .field("grid_y", &self.grid_y)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("t_final", &self.t_final)
            .field("n_steps", &self.n_steps)
            .finish_non_exhaustive()
    }
}

impl Problem2D {
    pub fn validate(&self) -> Result<()> {
        let nx = self.grid_x.n_interior();
        let ny = self.grid_y.n_interior();
        check_coefficients("d_plus", &self.d_plus, nx)?;
        check_coefficients("d_minus", &self.d_minus, nx)?;
        check_coefficients("e_plus", &self.e_plus, ny)?;
        check_coefficients("e_minus", &self.e_minus, ny)?;
        if self.u0.shape() != (nx, ny) {
            return Err(WsldError::InvalidProblem(format!(
                "u0 has shape {:?}, expected ({nx}, {ny})",
                self.u0.shape()
            )));
        }
        check_horizon(self.t_final, self.n_steps)
    }

    pub fn tau(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }
}

/// Proportionality constants `d- = kappa_a d+`, `e- = kappa_b e+` under
/// which unconditional stability is guaranteed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StabilityConfig {
    pub kappa_alpha: Option<f64>,
    pub kappa_beta: Option<f64>,
}

impl StabilityConfig {
    pub fn detect_1d(problem: &Problem1D) -> Self {
        Self {
            kappa_alpha: proportionality(&problem.d_plus, &problem.d_minus),
            kappa_beta: None,
        }
    }

    pub fn detect_2d(problem: &Problem2D) -> Self {
        Self {
            kappa_alpha: proportionality(&problem.d_plus, &problem.d_minus),
            kappa_beta: proportionality(&problem.e_plus, &problem.e_minus),
        }
    }

    /// True when the stability hypothesis holds in every direction present.
    pub fn certified_1d(&self) -> bool {
        self.kappa_alpha.is_some()
    }

    pub fn certified_2d(&self) -> bool {
        self.kappa_alpha.is_some() && self.kappa_beta.is_some()
    }
}

/// Scaled spatial generator `tau / (2 h^a) (D+ A + D- A^T)` for one direction.
pub fn direction_generator(
    alpha: FractionalOrder,
    tuple: &ShiftTuple,
    grid: &Grid1D,
    plus: &[f64],
    minus: &[f64],
    tau: f64,
) -> Result<DMatrix<f64>> {
    let a = assemble_left(alpha, tuple, grid)?.into_matrix();
    let n = a.nrows();
    let c = tau / (2.0 * grid.h().powf(alpha.value()));
    Ok(DMatrix::from_fn(n, n, |i, j| {
        c * (plus[i] * a[(i, j)] + minus[i] * a[(j, i)])
    }))
}

/// Crank–Nicolson matrices `(I - G, I + G)` with `G = tau/(2h^a)(D+ A + D- A^T)`.
///
/// `M_plus` is formed as `2I - M_minus`, so the pair sums to `2I` exactly
/// whenever the diagonal of `G` is nonpositive.
pub fn build_cn_system(problem: &Problem1D, tuple: &ShiftTuple) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    problem.validate()?;
    let g = direction_generator(
        problem.alpha,
        tuple,
        &problem.grid,
        &problem.d_plus,
        &problem.d_minus,
        problem.tau(),
    )?;
    let n = g.nrows();
    let identity = DMatrix::<f64>::identity(n, n);
    let m_minus = &identity - &g;
    let m_plus = &identity * 2.0 - &m_minus;
    Ok((m_minus, m_plus))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveOptions {
    /// Keep the interior solution at every time level.
    pub keep_history: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution1D {
    pub nodes: Vec<f64>,
    pub t_final: f64,
    pub values: Vec<f64>,
    /// `U^0 .. U^{N_t}` when requested.
    pub history: Option<Vec<Vec<f64>>>,
}

/// Advances the 1D problem to `t_final` with Crank–Nicolson.
pub fn solve_1d(problem: &Problem1D, tuple: &ShiftTuple, options: SolveOptions) -> Result<Solution1D> {
    let (m_minus, m_plus) = build_cn_system(problem, tuple)?;
    let lu = LuFactors::new(&m_minus)?;
    let nodes = problem.grid.interior_nodes();
    let tau = problem.tau();
    let n = nodes.len();

    let mut u = DVector::from_column_slice(&problem.u0);
    let mut rhs = DVector::zeros(n);
    let mut source = vec![0.0; n];
    let mut scratch = Vec::with_capacity(n);
    let mut history = options.keep_history.then(|| vec![problem.u0.clone()]);

    for step in 0..problem.n_steps {
        let t_half = (step as f64 + 0.5) * tau;
        problem.forcing.sample(&nodes, t_half, &mut source);
        rhs.gemv(1.0, &m_plus, &u, 0.0);
        for (r, f) in rhs.iter_mut().zip(&source) {
            *r += tau * f;
        }
        lu.solve_in_place(rhs.as_mut_slice(), &mut scratch);
        std::mem::swap(&mut u, &mut rhs);
        if let Some(h) = history.as_mut() {
            h.push(u.as_slice().to_vec());
        }
    }

    Ok(Solution1D {
        nodes,
        t_final: problem.t_final,
        values: u.as_slice().to_vec(),
        history,
    })
}

/// Splitting used to solve `(I - Ax)(I - Ay) U' = (I + Ax)(I + Ay) U + tau F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdiVariant {
    PeacemanRachford,
    Douglas,
}

impl fmt::Display for AdiVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdiVariant::PeacemanRachford => "pr",
            AdiVariant::Douglas => "douglas",
        })
    }
}

/// Directional generators and the factorizations of `I - Gx`, `I - Gy`.
///
/// `Ax = I (x) Gx` acts on every column of the state (`Gx U`) and
/// `Ay = Gy (x) I` on every row (`U Gy^T`); neither Kronecker product is formed.
#[derive(Debug, Clone)]
pub struct AdiOperators {
    gx: DMatrix<f64>,
    gy: DMatrix<f64>,
    lu_x: LuFactors,
    lu_y: LuFactors,
}

impl AdiOperators {
    pub fn from_generators(gx: DMatrix<f64>, gy: DMatrix<f64>) -> Result<Self> {
        let ix = DMatrix::<f64>::identity(gx.nrows(), gx.nrows());
        let iy = DMatrix::<f64>::identity(gy.nrows(), gy.nrows());
        let lu_x = LuFactors::new(&(&ix - &gx))?;
        let lu_y = LuFactors::new(&(&iy - &gy))?;
        Ok(Self { gx, gy, lu_x, lu_y })
    }

    pub fn gx(&self) -> &DMatrix<f64> {
        &self.gx
    }

    pub fn gy(&self) -> &DMatrix<f64> {
        &self.gy
    }

    /// `Ax v`.
    pub fn apply_x(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        &self.gx * v
    }

    /// `Ay v`.
    pub fn apply_y(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        v * self.gy.transpose()
    }

    /// Solves `(I - Ax) w = v` in place, one column at a time.
    pub fn solve_x(&self, v: &mut DMatrix<f64>) {
        let n = v.nrows();
        v.as_mut_slice()
            .par_chunks_mut(n)
            .for_each_init(|| Vec::with_capacity(n), |scratch, col| self.lu_x.solve_in_place(col, scratch));
    }

    /// Solves `(I - Ay) w = v` in place, one row at a time.
    pub fn solve_y(&self, v: &mut DMatrix<f64>) {
        let mut vt = v.transpose();
        let n = vt.nrows();
        vt.as_mut_slice()
            .par_chunks_mut(n)
            .for_each_init(|| Vec::with_capacity(n), |scratch, row| self.lu_y.solve_in_place(row, scratch));
        v.copy_from(&vt.transpose());
    }
}

/// Builds the x and y generators of a 2D problem and factors the sweep matrices.
pub fn build_adi_factors(problem: &Problem2D, tuple_x: &ShiftTuple, tuple_y: &ShiftTuple) -> Result<AdiOperators> {
    problem.validate()?;
    let tau = problem.tau();
    let gx = direction_generator(problem.alpha, tuple_x, &problem.grid_x, &problem.d_plus, &problem.d_minus, tau)?;
    let gy = direction_generator(problem.beta, tuple_y, &problem.grid_y, &problem.e_plus, &problem.e_minus, tau)?;
    AdiOperators::from_generators(gx, gy)
}

/// One ADI step from `state`, with `source` sampled at the half time level.
pub fn step_adi(
    ops: &AdiOperators,
    state: &DMatrix<f64>,
    source: &DMatrix<f64>,
    tau: f64,
    variant: AdiVariant,
) -> DMatrix<f64> {
    let ay_u = ops.apply_y(state);
    match variant {
        AdiVariant::PeacemanRachford => {
            // (I - Ax) U* = (I + Ay) U + tau/2 F
            let mut star = state + &ay_u + source * (0.5 * tau);
            ops.solve_x(&mut star);
            // (I - Ay) U' = (I + Ax) U* + tau/2 F
            let mut next = &star + ops.apply_x(&star) + source * (0.5 * tau);
            ops.solve_y(&mut next);
            next
        }
        AdiVariant::Douglas => {
            // (I - Ax) U* = (I + Ax + 2 Ay) U + tau F
            let mut star = state + ops.apply_x(state) + &ay_u * 2.0 + source * tau;
            ops.solve_x(&mut star);
            // (I - Ay) U' = U* - Ay U
            let mut next = star - ay_u;
            ops.solve_y(&mut next);
            next
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution2D {
    pub nodes_x: Vec<f64>,
    pub nodes_y: Vec<f64>,
    pub t_final: f64,
    pub values: DMatrix<f64>,
}

/// Advances the 2D problem to `t_final` with ADI sweeps.
pub fn solve_2d(
    problem: &Problem2D,
    tuple_x: &ShiftTuple,
    tuple_y: &ShiftTuple,
    variant: AdiVariant,
) -> Result<Solution2D> {
    let ops = build_adi_factors(problem, tuple_x, tuple_y)?;
    let nodes_x = problem.grid_x.interior_nodes();
    let nodes_y = problem.grid_y.interior_nodes();
    let tau = problem.tau();
    let mut u = problem.u0.clone();
    let mut source = DMatrix::zeros(nodes_x.len(), nodes_y.len());
    for step in 0..problem.n_steps {
        let t_half = (step as f64 + 0.5) * tau;
        problem.forcing.sample(&nodes_x, &nodes_y, t_half, &mut source);
        u = step_adi(&ops, &u, &source, tau, variant);
    }
    Ok(Solution2D {
        nodes_x,
        nodes_y,
        t_final: problem.t_final,
        values: u,
    })
}
