//! Manufactured solutions, error norms and convergence studies.
//!
//! Both cases use the separable profile `u = sin(t + 1) P(x) [P(y)]` with
//! `P(x) = x^4 (2 - x)^4` on `(0, 2)`, coefficients `d+ = x^a`, `d- = 2 x^a`
//! (and `e+ = y^b`, `e- = 2 y^b`), and a source assembled from exact
//! fractional derivatives of the polynomial profile.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::coeffs::{FractionalOrder, ShiftTuple};
use crate::error::{Result, WsldError};
use crate::operators::{Grid1D, PolyDerivative, ShiftedPolynomial, Side};
use crate::solvers::{
    solve_1d, solve_2d, AdiVariant, Problem1D, Problem2D, SolveOptions, SourceTerm1D, SourceTerm2D,
};

const X_LEFT: f64 = 0.0;
const X_RIGHT: f64 = 2.0;
const T_FINAL: f64 = 1.0;
const KAPPA: f64 = 2.0;

/// Profile `t^4 (L - t)^4` and its left/right fractional derivatives.
#[derive(Debug, Clone)]
struct Profile {
    poly: ShiftedPolynomial,
    left: PolyDerivative,
    right: PolyDerivative,
}

impl Profile {
    fn new(order: FractionalOrder) -> Result<Self> {
        let length = X_RIGHT - X_LEFT;
        let poly = ShiftedPolynomial::bump(4, 4, length);
        // in the variable (x_R - x) the profile is (x_R - x)^4 (x - x_L)^4, the same expansion
        let mirrored = ShiftedPolynomial::bump(4, 4, length);
        let domain = (X_LEFT, X_RIGHT);
        Ok(Self {
            left: PolyDerivative::new(Side::Left, order, &poly, domain)?,
            right: PolyDerivative::new(Side::Right, order, &mirrored, domain)?,
            poly,
        })
    }

    fn value(&self, x: f64) -> f64 {
        self.poly.eval(x - X_LEFT)
    }

    /// `d+(x) D_left u + d-(x) D_right u` for the spatial factor, with
    /// `d+ = (x - x_L)^a` and `d- = kappa d+`.
    fn diffusion(&self, x: f64) -> f64 {
        let a = self.left.alpha();
        let weight = (x - X_LEFT).powf(a);
        let l = self.left.eval(x).unwrap_or(f64::NAN);
        let r = self.right.eval(x).unwrap_or(f64::NAN);
        weight * (l + KAPPA * r)
    }
}

fn coefficient_nodes(grid: &Grid1D, order: FractionalOrder) -> (Vec<f64>, Vec<f64>) {
    let plus: Vec<f64> = grid
        .interior_nodes()
        .iter()
        .map(|x| (x - X_LEFT).powf(order.value()))
        .collect();
    let minus = plus.iter().map(|d| KAPPA * d).collect();
    (plus, minus)
}

/// Source of the 1D manufactured problem.
#[derive(Debug, Clone)]
pub struct ManufacturedSource1D {
    profile: Profile,
}

impl SourceTerm1D for ManufacturedSource1D {
    fn value(&self, x: f64, t: f64) -> f64 {
        (t + 1.0).cos() * self.profile.value(x) - (t + 1.0).sin() * self.profile.diffusion(x)
    }
}

/// Source of the 2D manufactured problem.
#[derive(Debug, Clone)]
pub struct ManufacturedSource2D {
    px: Profile,
    py: Profile,
}

impl SourceTerm2D for ManufacturedSource2D {
    fn value(&self, x: f64, y: f64, t: f64) -> f64 {
        let (ux, uy) = (self.px.value(x), self.py.value(y));
        (t + 1.0).cos() * ux * uy - (t + 1.0).sin() * (self.px.diffusion(x) * uy + self.py.diffusion(y) * ux)
    }

    fn sample(&self, xs: &[f64], ys: &[f64], t: f64, out: &mut DMatrix<f64>) {
        let (c, s) = ((t + 1.0).cos(), (t + 1.0).sin());
        let ux: Vec<f64> = xs.iter().map(|&x| self.px.value(x)).collect();
        let gx: Vec<f64> = xs.iter().map(|&x| self.px.diffusion(x)).collect();
        for (j, &y) in ys.iter().enumerate() {
            let (uy, gy) = (self.py.value(y), self.py.diffusion(y));
            for i in 0..xs.len() {
                out[(i, j)] = c * ux[i] * uy - s * (gx[i] * uy + gy * ux[i]);
            }
        }
    }
}

/// One-dimensional manufactured case `u = sin(t+1) x^4 (2-x)^4`.
#[derive(Debug, Clone)]
pub struct Manufactured1D {
    pub alpha: FractionalOrder,
    source: ManufacturedSource1D,
}

impl Manufactured1D {
    pub fn t_final(&self) -> f64 {
        T_FINAL
    }

    pub fn domain(&self) -> (f64, f64) {
        (X_LEFT, X_RIGHT)
    }

    /// Monomial coefficients of the spatial profile, lowest power first.
    pub fn profile_terms(&self) -> &[(u32, f64)] {
        self.source.profile.poly.terms()
    }

    pub fn exact(&self, x: f64, t: f64) -> f64 {
        (t + 1.0).sin() * self.source.profile.value(x)
    }

    pub fn forcing(&self, x: f64, t: f64) -> f64 {
        self.source.value(x, t)
    }

    pub fn source(&self) -> &ManufacturedSource1D {
        &self.source
    }

    pub fn d_plus(&self, x: f64) -> f64 {
        (x - X_LEFT).powf(self.alpha.value())
    }

    pub fn d_minus(&self, x: f64) -> f64 {
        KAPPA * self.d_plus(x)
    }

    pub fn exact_at_nodes(&self, grid: &Grid1D, t: f64) -> Vec<f64> {
        grid.interior_nodes().iter().map(|&x| self.exact(x, t)).collect()
    }

    pub fn problem(&self, n_cells: usize, n_steps: usize) -> Result<Problem1D> {
        let grid = Grid1D::new(X_LEFT, X_RIGHT, n_cells)?;
        let (d_plus, d_minus) = coefficient_nodes(&grid, self.alpha);
        Ok(Problem1D {
            grid,
            alpha: self.alpha,
            d_plus,
            d_minus,
            forcing: Arc::new(self.source.clone()),
            u0: self.exact_at_nodes(&grid, 0.0),
            t_final: T_FINAL,
            n_steps,
        })
    }
}

/// Two-dimensional manufactured case `u = sin(t+1) P(x) P(y)`.
#[derive(Debug, Clone)]
pub struct Manufactured2D {
    pub alpha: FractionalOrder,
    pub beta: FractionalOrder,
    pub variant: AdiVariant,
    source: ManufacturedSource2D,
}

impl Manufactured2D {
    pub fn t_final(&self) -> f64 {
        T_FINAL
    }

    pub fn exact(&self, x: f64, y: f64, t: f64) -> f64 {
        (t + 1.0).sin() * self.source.px.value(x) * self.source.py.value(y)
    }

    pub fn forcing(&self, x: f64, y: f64, t: f64) -> f64 {
        self.source.value(x, y, t)
    }

    pub fn with_variant(mut self, variant: AdiVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn exact_at_nodes(&self, gx: &Grid1D, gy: &Grid1D, t: f64) -> DMatrix<f64> {
        let xs = gx.interior_nodes();
        let ys = gy.interior_nodes();
        DMatrix::from_fn(xs.len(), ys.len(), |i, j| self.exact(xs[i], ys[j], t))
    }

    /// Problem with `n_cells` cells in both directions.
    pub fn problem(&self, n_cells: usize, n_steps: usize) -> Result<Problem2D> {
        self.problem_xy(n_cells, n_cells, n_steps)
    }

    pub fn problem_xy(&self, nx: usize, ny: usize, n_steps: usize) -> Result<Problem2D> {
        let grid_x = Grid1D::new(X_LEFT, X_RIGHT, nx)?;
        let grid_y = Grid1D::new(X_LEFT, X_RIGHT, ny)?;
        let (d_plus, d_minus) = coefficient_nodes(&grid_x, self.alpha);
        let (e_plus, e_minus) = coefficient_nodes(&grid_y, self.beta);
        Ok(Problem2D {
            grid_x,
            grid_y,
            alpha: self.alpha,
            beta: self.beta,
            d_plus,
            d_minus,
            e_plus,
            e_minus,
            forcing: Arc::new(self.source.clone()),
            u0: self.exact_at_nodes(&grid_x, &grid_y, 0.0),
            t_final: T_FINAL,
            n_steps,
        })
    }
}

#[derive(Debug, Clone)]
pub enum ManufacturedCase {
    OneD(Manufactured1D),
    TwoD(Manufactured2D),
}

impl ManufacturedCase {
    pub fn dimension(&self) -> u8 {
        match self {
            ManufacturedCase::OneD(_) => 1,
            ManufacturedCase::TwoD(_) => 2,
        }
    }

    pub fn alpha(&self) -> FractionalOrder {
        match self {
            ManufacturedCase::OneD(c) => c.alpha,
            ManufacturedCase::TwoD(c) => c.alpha,
        }
    }

    pub fn beta(&self) -> Option<FractionalOrder> {
        match self {
            ManufacturedCase::OneD(_) => None,
            ManufacturedCase::TwoD(c) => Some(c.beta),
        }
    }
}

pub fn manufactured_1d(alpha: FractionalOrder) -> Result<Manufactured1D> {
    Ok(Manufactured1D {
        alpha,
        source: ManufacturedSource1D {
            profile: Profile::new(alpha)?,
        },
    })
}

pub fn manufactured_2d(alpha: FractionalOrder, beta: FractionalOrder) -> Result<Manufactured2D> {
    Ok(Manufactured2D {
        alpha,
        beta,
        variant: AdiVariant::PeacemanRachford,
        source: ManufacturedSource2D {
            px: Profile::new(alpha)?,
            py: Profile::new(beta)?,
        },
    })
}

/// Maximum absolute difference over matching arrays.
pub fn max_error(numeric: &[f64], exact: &[f64]) -> Result<f64> {
    if numeric.len() != exact.len() {
        return Err(WsldError::LengthMismatch {
            expected: exact.len(),
            found: numeric.len(),
        });
    }
    Ok(numeric
        .iter()
        .zip(exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Time step as a function of the space step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauLaw {
    /// `tau = h^2`.
    HSquared,
    Fixed(f64),
}

impl TauLaw {
    pub fn n_steps(&self, h: f64, t_final: f64) -> usize {
        let tau = match *self {
            TauLaw::HSquared => h * h,
            TauLaw::Fixed(tau) => tau,
        };
        ((t_final / tau).round() as usize).max(1)
    }
}

impl fmt::Display for TauLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauLaw::HSquared => f.write_str("tau=h^2"),
            TauLaw::Fixed(t) => write!(f, "tau={t}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub tau: f64,
    pub error: f64,
    pub rate: Option<f64>,
}

/// Errors and observed rates over a sequence of grids.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub tuple: ShiftTuple,
    pub alpha: FractionalOrder,
    pub beta: Option<FractionalOrder>,
    pub tau_law: TauLaw,
    pub rows: Vec<ConvergenceRow>,
}

/// `ln(e_prev / e) / ln(h_prev / h)`.
pub fn observed_rate(h_prev: f64, e_prev: f64, h: f64, e: f64) -> f64 {
    (e_prev / e).ln() / (h_prev / h).ln()
}

impl ConvergenceTable {
    /// Builds rows from `(h, tau, error)` triples, computing successive rates.
    pub fn from_errors(
        tuple: ShiftTuple,
        alpha: FractionalOrder,
        beta: Option<FractionalOrder>,
        tau_law: TauLaw,
        samples: &[(f64, f64, f64)],
    ) -> Self {
        let rows = samples
            .iter()
            .enumerate()
            .map(|(i, &(h, tau, error))| ConvergenceRow {
                h,
                tau,
                error,
                rate: (i > 0).then(|| {
                    let (hp, _, ep) = samples[i - 1];
                    observed_rate(hp, ep, h, error)
                }),
            })
            .collect();
        Self {
            tuple,
            alpha,
            beta,
            tau_law,
            rows,
        }
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }

    pub fn rates(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.rate).collect()
    }

    pub const CSV_HEADER: &'static str = "tuple,alpha[1],beta[1],h[length],tau[time],max_error[1],rate[1]";

    /// Writes the header and one line per row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        let beta = self.beta.map(|b| format!("{:.15e}", b.value())).unwrap_or_default();
        for row in &self.rows {
            let rate = row.rate.map(|r| format!("{r:.15e}")).unwrap_or_default();
            writeln!(
                out,
                "\"{}\",{:.15e},{},{:.15e},{:.15e},{:.15e},{}",
                self.tuple,
                self.alpha.value(),
                beta,
                row.h,
                row.tau,
                row.error,
                rate
            )?;
        }
        Ok(())
    }
}

fn cells_for(h: f64) -> Result<usize> {
    let cells = (X_RIGHT - X_LEFT) / h;
    let rounded = cells.round();
    if !(h > 0.0) || (cells - rounded).abs() > 1e-9 * cells.max(1.0) || rounded < 2.0 {
        return Err(WsldError::InvalidGrid(format!(
            "h = {h} does not divide the domain into at least two cells"
        )));
    }
    Ok(rounded as usize)
}

/// Error at `t = T` of the solver on the grid with step `h`.
pub fn run_case(case: &ManufacturedCase, tuple: &ShiftTuple, h: f64, tau_law: TauLaw) -> Result<(f64, f64)> {
    let cells = cells_for(h)?;
    let n_steps = tau_law.n_steps(h, T_FINAL);
    let tau = T_FINAL / n_steps as f64;
    let error = match case {
        ManufacturedCase::OneD(c) => {
            let problem = c.problem(cells, n_steps)?;
            let sol = solve_1d(&problem, tuple, SolveOptions::default())?;
            max_error(&sol.values, &c.exact_at_nodes(&problem.grid, T_FINAL))?
        }
        ManufacturedCase::TwoD(c) => {
            let problem = c.problem(cells, n_steps)?;
            let sol = solve_2d(&problem, tuple, tuple, c.variant)?;
            let exact = c.exact_at_nodes(&problem.grid_x, &problem.grid_y, T_FINAL);
            max_error(sol.values.as_slice(), exact.as_slice())?
        }
    };
    Ok((tau, error))
}

/// Runs the solver for every `h` (independently, in parallel) and tabulates errors and rates.
pub fn convergence_study(
    case: &ManufacturedCase,
    tuple: &ShiftTuple,
    h_list: &[f64],
    tau_law: TauLaw,
) -> Result<ConvergenceTable> {
    if h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(WsldError::InvalidProblem("h_list must be strictly decreasing".into()));
    }
    let results = h_list
        .par_iter()
        .map(|&h| run_case(case, tuple, h, tau_law).map(|(tau, e)| (h, tau, e)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable::from_errors(
        tuple.clone(),
        case.alpha(),
        case.beta(),
        tau_law,
        &results,
    ))
}
