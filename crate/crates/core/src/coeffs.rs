//! Scalar coefficient sequences and weights of the WSLD operators.
//!
//! The second-order Lubich generating function factors as
//! `(3/2 - 2z + z^2/2)^a = (3/2)^a (1 - z)^a (1 - z/3)^a`, so its power series
//! coefficients `q_k` are a discrete convolution of the Grünwald weights `g_k`
//! of `(1 - z)^a` with the geometrically damped copy `g_k / 3^k`.
//!
//! Higher orders combine shifted copies of `{q_k}` with weights chosen so the
//! low-order error terms cancel. Every combination reduces to a list of
//! `(shift, weight)` branches, and the assembled stencil is
//! `phi_k = sum_b weight_b * q_{k + shift_b - m}` with `q_j = 0` for `j < 0`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Result, WsldError};

/// Order of a Riemann–Liouville derivative, restricted to `1 < alpha < 2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(value: f64) -> Result<Self> {
        if value > 1.0 && value < 2.0 {
            Ok(Self(value))
        } else {
            Err(WsldError::InvalidOrder(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Smallest monomial power whose derivative of this order is classical.
    pub fn ceil(self) -> u32 {
        self.0.ceil() as u32
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = WsldError;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl fmt::Display for FractionalOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Integer shifts selecting which shifted Lubich stencils are combined.
///
/// The number of shifts fixes the approximation order: `(p)` is first order,
/// `(p, q)` second, `(p, q, r, s)` third and
/// `(p, q, r, s, pb, qb, rb, sb)` fourth.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ShiftTuple {
    shifts: Vec<i32>,
}

impl ShiftTuple {
    /// Seven fourth-order tuples whose operators are negative definite for every `1 < alpha < 2`.
    pub const NEGATIVE_DEFINITE_FOURTH_ORDER: [[i32; 8]; 7] = [
        [1, 2, 1, 0, 1, 2, 1, -2],
        [1, 2, 1, 0, 1, -1, 1, -2],
        [1, 2, 1, -1, 1, 2, 1, -2],
        [1, 2, 1, -1, 1, -1, 1, -2],
        [1, 0, 1, -1, 1, 2, 1, -2],
        [1, 0, 1, -2, 1, 2, 1, -2],
        [1, -1, 1, -2, 1, 2, 1, -2],
    ];

    /// Second fourth-order tuple used in the published convergence tables.
    pub const ALTERNATE_FOURTH_ORDER: [i32; 8] = [1, 2, 1, -3, 1, 2, 1, -2];

    pub fn new(shifts: &[i32]) -> Result<Self> {
        if !matches!(shifts.len(), 1 | 2 | 4 | 8) {
            return Err(WsldError::InvalidTupleLength(shifts.len()));
        }
        let tuple = Self {
            shifts: shifts.to_vec(),
        };
        tuple.check_pairs()?;
        Ok(tuple)
    }

    /// Default tuple for each order: `(1)`, `(1,2)`, `(1,2,1,-2)`, `(1,2,1,0,1,2,1,-2)`.
    pub fn default_for_order(order: u8) -> Result<Self> {
        match order {
            1 => Self::new(&[1]),
            2 => Self::new(&[1, 2]),
            3 => Self::new(&[1, 2, 1, -2]),
            4 => Self::new(&Self::NEGATIVE_DEFINITE_FOURTH_ORDER[0]),
            _ => Err(WsldError::InvalidTupleLength(order as usize)),
        }
    }

    pub fn order(&self) -> u8 {
        match self.shifts.len() {
            1 => 1,
            2 => 2,
            4 => 3,
            _ => 4,
        }
    }

    pub fn shifts(&self) -> &[i32] {
        &self.shifts
    }

    /// Largest absolute shift; the stencil reaches `m` nodes past the evaluation point.
    pub fn m(&self) -> usize {
        self.shifts
            .iter()
            .map(|s| s.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Tuple with the two third-order halves exchanged (fourth order only).
    pub fn swapped_halves(&self) -> Option<Self> {
        (self.order() == 4).then(|| {
            let mut shifts = self.shifts[4..].to_vec();
            shifts.extend_from_slice(&self.shifts[..4]);
            Self { shifts }
        })
    }

    /// The shift pairs `(p,q)`, `(r,s)`, ... making up the tuple (empty for order 1).
    pub fn pairs(&self) -> Vec<(i32, i32)> {
        if self.shifts.len() < 2 {
            return Vec::new();
        }
        self.shifts.chunks(2).map(|c| (c[0], c[1])).collect()
    }

    fn check_pairs(&self) -> Result<()> {
        for (p, q) in self.pairs() {
            if p == q {
                return Err(WsldError::DegenerateTuple(format!(
                    "pair ({p},{q}) in {self} has equal shifts"
                )));
            }
        }
        for half in self.shifts.chunks(4).filter(|c| c.len() == 4) {
            if half[2] * half[3] == half[0] * half[1] {
                return Err(WsldError::DegenerateTuple(format!(
                    "rs = pq in ({},{},{},{}) of {self}",
                    half[0], half[1], half[2], half[3]
                )));
            }
        }
        Ok(())
    }

    /// Flattens the nested weighted combination into `(shift, weight)` branches.
    pub fn branches(&self, alpha: FractionalOrder) -> Result<Vec<(i32, f64)>> {
        let s = &self.shifts;
        match self.order() {
            1 => Ok(vec![(s[0], 1.0)]),
            2 => {
                let (wp, wq) = weights_order2(s[0], s[1])?;
                Ok(vec![(s[0], wp), (s[1], wq)])
            }
            3 => third_order_branches(alpha.value(), s, 1.0),
            _ => {
                if let Some(limit) = removable_fourth_order(alpha.value(), s) {
                    return Ok(limit);
                }
                let (w1, w2) = weights_order4(alpha, self)?;
                let mut out = third_order_branches(alpha.value(), &s[..4], w1)?;
                out.extend(third_order_branches(alpha.value(), &s[4..], w2)?);
                Ok(out)
            }
        }
    }
}

fn third_order_branches(alpha: f64, s: &[i32], scale: f64) -> Result<Vec<(i32, f64)>> {
    let (w_pq, w_rs) = order3_raw(alpha, s[0], s[1], s[2], s[3])?;
    let (wp, wq) = weights_order2(s[0], s[1])?;
    let (wr, ws) = weights_order2(s[2], s[3])?;
    Ok(vec![
        (s[0], scale * w_pq * wp),
        (s[1], scale * w_pq * wq),
        (s[2], scale * w_rs * wr),
        (s[3], scale * w_rs * ws),
    ])
}

/// Per-shift coefficients of one third-order half, merged by shift.
fn merged_half(alpha: f64, s: &[i32]) -> Option<BTreeMap<i32, f64>> {
    let mut out = BTreeMap::new();
    for (shift, w) in third_order_branches(alpha, s, 1.0).ok()? {
        *out.entry(shift).or_insert(0.0) += w;
    }
    Some(out)
}

// relative size of a*b_bar - a_bar*b below which the explicit weights lose
// all accuracy to cancellation
const NEAR_DEGENERATE: f64 = 1e-9;

/// Branches of a fourth-order tuple near a removable degeneracy.
///
/// Write the combination as `sum_s C_s L_s` with `C_s = c2_s + N (c1_s - c2_s) / D`,
/// where `c1, c2` are the half coefficients, `N = a b_bar` and
/// `D = a b_bar - a_bar b`. `c1 - c2` and `D` are affine in alpha; when both
/// vanish at the same alpha the ratio is the constant slope ratio and `C_s`
/// stays finite. Returns `None` away from such a point.
fn removable_fourth_order(alpha: f64, s: &[i32]) -> Option<Vec<(i32, f64)>> {
    let d_at = |a: f64| {
        let (x, y) = fourth_order_products(a, s);
        (x, x - y)
    };
    let (n, d) = d_at(alpha);
    let (_, d_next) = d_at(alpha + 1.0);
    let slope_d = d_next - d;
    if d.abs() > NEAR_DEGENERATE * n.abs().max(1.0) || slope_d == 0.0 {
        return None;
    }
    let root = alpha - d / slope_d;
    let (c1, c2) = (merged_half(root, &s[..4])?, merged_half(root, &s[4..])?);
    let (c1_next, c2_next) = (merged_half(root + 1.0, &s[..4])?, merged_half(root + 1.0, &s[4..])?);
    let shifts: Vec<i32> = c1.keys().chain(c2.keys()).copied().collect::<BTreeSet<_>>().into_iter().collect();
    let get = |m: &BTreeMap<i32, f64>, k: i32| m.get(&k).copied().unwrap_or(0.0);
    let scale = c1.values().chain(c2.values()).fold(1.0f64, |acc, v| acc.max(v.abs()));
    let removable = shifts
        .iter()
        .all(|&k| (get(&c1, k) - get(&c2, k)).abs() <= 1e-12 * scale);
    if !removable {
        return None;
    }
    let c2_here = merged_half(alpha, &s[4..])?;
    Some(
        shifts
            .into_iter()
            .map(|k| {
                let slope_diff = (get(&c1_next, k) - get(&c2_next, k)) - (get(&c1, k) - get(&c2, k));
                (k, get(&c2_here, k) + n * slope_diff / slope_d)
            })
            .collect(),
    )
}

impl fmt::Display for ShiftTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.shifts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for ShiftTuple {
    type Err = WsldError;

    /// Parses comma-separated integers, optionally wrapped in parentheses.
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('(').trim_end_matches(')');
        let shifts = body
            .split(',')
            .map(|t| {
                t.trim().parse::<i32>().map_err(|_| {
                    WsldError::DegenerateTuple(format!("cannot parse shift '{}'", t.trim()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&shifts)
    }
}

/// Grünwald weights `g_0 .. g_K` of `(1 - z)^alpha` from the product recursion.
pub fn grunwald_g(alpha: FractionalOrder, k_max: usize) -> Vec<f64> {
    let a = alpha.value();
    let mut g = Vec::with_capacity(k_max + 1);
    g.push(1.0);
    for k in 1..=k_max {
        let prev = g[k - 1];
        g.push((1.0 - (a + 1.0) / k as f64) * prev);
    }
    g
}

// 3^-j drops below 2^-80 past this index, so later convolution terms are
// beneath round-off relative to the retained ones.
const DAMPED_CUTOFF: usize = 51;

/// Coefficients `q_0 .. q_K` of `(3/2 - 2z + z^2/2)^alpha`.
pub fn lubich_q(alpha: FractionalOrder, k_max: usize) -> Vec<f64> {
    let g = grunwald_g(alpha, k_max);
    let damped: Vec<f64> = g
        .iter()
        .take(DAMPED_CUTOFF + 1)
        .scan(1.0, |scale, &gj| {
            let v = gj * *scale;
            *scale /= 3.0;
            Some(v)
        })
        .collect();
    let lead = 1.5f64.powf(alpha.value());
    (0..=k_max)
        .map(|k| {
            let top = k.min(DAMPED_CUTOFF);
            let conv: f64 = (0..=top).map(|j| damped[j] * g[k - j]).sum();
            lead * conv
        })
        .collect()
}

/// Second-order weights `(w_p, w_q) = (q/(q-p), p/(p-q))`.
pub fn weights_order2(p: i32, q: i32) -> Result<(f64, f64)> {
    if p == q {
        return Err(WsldError::DegenerateTuple(format!("p = q = {p}")));
    }
    let (p, q) = (p as f64, q as f64);
    Ok((q / (q - p), p / (p - q)))
}

/// Third-order weights `(w_{p,q}, w_{r,s})`.
pub fn weights_order3(alpha: FractionalOrder, p: i32, q: i32, r: i32, s: i32) -> Result<(f64, f64)> {
    order3_raw(alpha.value(), p, q, r, s)
}

fn order3_raw(alpha: f64, p: i32, q: i32, r: i32, s: i32) -> Result<(f64, f64)> {
    let pq = (p * q) as f64;
    let rs = (r * s) as f64;
    if pq == rs {
        return Err(WsldError::DegenerateTuple(format!(
            "rs = pq = {pq} for ({p},{q},{r},{s})"
        )));
    }
    let a2 = 2.0 * alpha;
    Ok(((3.0 * rs + a2) / (3.0 * (rs - pq)), (3.0 * pq + a2) / (3.0 * (pq - rs))))
}

/// Third-order error coefficients `(a, b)` of a four-shift half:
/// `a = rs - pq`, `b = 6pqrs(r+s-p-q) + 4a[rs(r+s) - pq(p+q)] + 9a(rs-pq)`
/// (with `a` in the last two terms standing for alpha).
fn half_error_terms(alpha: f64, h: &[i32]) -> (f64, f64) {
    let (p, q, r, s) = (h[0] as f64, h[1] as f64, h[2] as f64, h[3] as f64);
    let pq = p * q;
    let rs = r * s;
    let a = rs - pq;
    let b = 6.0 * pq * rs * (r + s - p - q) + 4.0 * alpha * (rs * (r + s) - pq * (p + q)) + 9.0 * alpha * a;
    (a, b)
}

/// `(a b_bar, a_bar b)` for the two halves of an eight-shift tuple.
fn fourth_order_products(alpha: f64, s: &[i32]) -> (f64, f64) {
    let (a, b) = half_error_terms(alpha, &s[..4]);
    let (a_bar, b_bar) = half_error_terms(alpha, &s[4..]);
    (a * b_bar, a_bar * b)
}

/// Fourth-order weights combining the two third-order halves of `tuple`.
pub fn weights_order4(alpha: FractionalOrder, tuple: &ShiftTuple) -> Result<(f64, f64)> {
    if tuple.order() != 4 {
        return Err(WsldError::InvalidTupleLength(tuple.shifts().len()));
    }
    let (x, y) = fourth_order_products(alpha.value(), tuple.shifts());
    if x == y {
        return Err(WsldError::DegenerateTuple(format!(
            "a*b_bar = a_bar*b = {x} for {tuple} at alpha = {alpha}"
        )));
    }
    Ok((x / (x - y), y / (y - x)))
}

/// Shift-aligned stencil `phi_k` and the raw `q_k` it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    alpha: FractionalOrder,
    tuple: ShiftTuple,
    phi: Vec<f64>,
    q_raw: Vec<f64>,
}

impl CoefficientTable {
    pub fn alpha(&self) -> FractionalOrder {
        self.alpha
    }

    pub fn tuple(&self) -> &ShiftTuple {
        &self.tuple
    }

    pub fn m(&self) -> usize {
        self.tuple.m()
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn q_raw(&self) -> &[f64] {
        &self.q_raw
    }

    /// Number of stored coefficients, `K + 1`.
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// `phi_k`, zero past the end of the table and for negative `k`.
    #[inline]
    pub fn phi_at(&self, k: isize) -> f64 {
        if k < 0 {
            0.0
        } else {
            self.phi.get(k as usize).copied().unwrap_or(0.0)
        }
    }

    /// Table length covering every matrix entry for `n_cells` cells.
    pub fn length_for_cells(tuple: &ShiftTuple, n_cells: usize) -> usize {
        n_cells + 2 * tuple.m() + 1
    }
}

/// Builds `phi_0 .. phi_K` for `tuple` at order `alpha`.
pub fn stencil_phi(alpha: FractionalOrder, tuple: &ShiftTuple, k_max: usize) -> Result<CoefficientTable> {
    let branches = tuple.branches(alpha)?;
    let q_raw = lubich_q(alpha, k_max);
    let m = tuple.m() as i64;
    let phi = (0..=k_max as i64)
        .map(|k| {
            branches
                .iter()
                .map(|&(shift, w)| {
                    let j = k + shift as i64 - m;
                    if j < 0 {
                        0.0
                    } else {
                        w * q_raw[j as usize]
                    }
                })
                .sum()
        })
        .collect();
    Ok(CoefficientTable {
        alpha,
        tuple: tuple.clone(),
        phi,
        q_raw,
    })
}
