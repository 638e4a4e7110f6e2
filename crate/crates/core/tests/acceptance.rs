//! Acceptance checks. Every check prints one `PASS` or `FAIL` line.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wsld::operators::{PolyDerivative, ShiftedPolynomial};
use wsld::solvers::direction_generator;
use wsld::spectral::spectral_radius;
use wsld::verification::ManufacturedCase;
use wsld::*;

const ALPHAS: [f64; 3] = [1.1, 1.5, 1.9];

fn order(v: f64) -> FractionalOrder {
    FractionalOrder::new(v).unwrap()
}

fn tuple(s: &[i32]) -> ShiftTuple {
    ShiftTuple::new(s).unwrap()
}

/// Prints the verdict line and returns whether the check passed.
fn report(pass: bool, label: &str, detail: String) -> bool {
    println!("{} {label}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn finish(results: Vec<bool>, what: &str) {
    let failed = results.iter().filter(|ok| !**ok).count();
    assert_eq!(failed, 0, "{failed} of {} {what} checks failed", results.len());
}

struct Column {
    tuple: [i32; 8],
    alpha: f64,
    beta: Option<f64>,
    inv_h: [u32; 4],
    errors: [f64; 4],
    rates: [f64; 3],
}

fn check_column(col: &Column, rel_tol: f64, rate_tol: f64) -> Vec<bool> {
    let t = tuple(&col.tuple);
    let case = match col.beta {
        None => ManufacturedCase::OneD(manufactured_1d(order(col.alpha)).unwrap()),
        Some(b) => ManufacturedCase::TwoD(manufactured_2d(order(col.alpha), order(b)).unwrap()),
    };
    let hs: Vec<f64> = col.inv_h.iter().map(|&n| 1.0 / n as f64).collect();
    let table = convergence_study(&case, &t, &hs, TauLaw::HSquared).unwrap();
    let orders = match col.beta {
        None => format!("alpha={}", col.alpha),
        Some(b) => format!("alpha={} beta={b}", col.alpha),
    };
    let mut out = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        let rel = (row.error - col.errors[i]).abs() / col.errors[i];
        out.push(report(
            rel <= rel_tol,
            &format!("error {t} {orders} h=1/{}", col.inv_h[i]),
            format!("got {:.4e} want {:.4e} rel {:.2e} tol {rel_tol:.0e}", row.error, col.errors[i], rel),
        ));
    }
    for (i, rate) in table.rows.iter().skip(1).map(|r| r.rate.unwrap()).enumerate() {
        let diff = (rate - col.rates[i]).abs();
        out.push(report(
            diff <= rate_tol,
            &format!("rate {t} {orders} h=1/{}", col.inv_h[i + 1]),
            format!("got {rate:.4} want {:.4} diff {diff:.4} tol {rate_tol}", col.rates[i]),
        ));
    }
    out
}

const T1: [i32; 8] = [1, 2, 1, 0, 1, 2, 1, -2];
const T2: [i32; 8] = [1, 2, 1, -3, 1, 2, 1, -2];
const H1: [u32; 4] = [10, 20, 40, 60];
const H2: [u32; 4] = [10, 20, 30, 40];

fn table_1(col: Column) {
    finish(check_column(&col, 0.02, 0.05), "one-dimensional table");
}

fn table_2(col: Column) {
    finish(check_column(&col, 0.03, 0.05), "two-dimensional table");
}

#[test]
fn table_1_first_tuple_alpha_1_1() {
    table_1(Column {
        tuple: T1,
        alpha: 1.1,
        beta: None,
        inv_h: H1,
        errors: [4.7842e-03, 2.5436e-04, 1.9662e-05, 4.1748e-06],
        rates: [4.2333, 3.6934, 3.8218],
    });
}

#[test]
fn table_1_first_tuple_alpha_1_9() {
    table_1(Column {
        tuple: T1,
        alpha: 1.9,
        beta: None,
        inv_h: H1,
        errors: [5.8264e-03, 5.9999e-04, 4.6242e-05, 9.7725e-06],
        rates: [3.2796, 3.6977, 3.8334],
    });
}

#[test]
fn table_1_second_tuple_alpha_1_1() {
    table_1(Column {
        tuple: T2,
        alpha: 1.1,
        beta: None,
        inv_h: H1,
        errors: [8.5475e-03, 4.9722e-04, 3.9559e-05, 8.6604e-06],
        rates: [4.1035, 3.6518, 3.7464],
    });
}

#[test]
fn table_1_second_tuple_alpha_1_9() {
    table_1(Column {
        tuple: T2,
        alpha: 1.9,
        beta: None,
        inv_h: H1,
        errors: [5.5003e-03, 5.7476e-04, 4.4490e-05, 9.4148e-06],
        rates: [3.2585, 3.6914, 3.8301],
    });
}

#[test]
fn table_2_first_tuple_alpha_beta_1_1() {
    table_2(Column {
        tuple: T1,
        alpha: 1.1,
        beta: Some(1.1),
        inv_h: H2,
        errors: [8.6154e-03, 5.4115e-04, 1.2626e-04, 4.3328e-05],
        rates: [3.9928, 3.5894, 3.7177],
    });
}

#[test]
fn table_2_first_tuple_alpha_1_8_beta_1_9() {
    table_2(Column {
        tuple: T1,
        alpha: 1.8,
        beta: Some(1.9),
        inv_h: H2,
        errors: [6.5211e-03, 4.4802e-04, 8.8416e-05, 2.7791e-05],
        rates: [3.8635, 4.0023, 4.0229],
    });
}

#[test]
fn table_2_second_tuple_alpha_beta_1_1() {
    table_2(Column {
        tuple: T2,
        alpha: 1.1,
        beta: Some(1.1),
        inv_h: H2,
        errors: [1.0110e-02, 6.3881e-04, 1.4363e-04, 4.8431e-05],
        rates: [3.9842, 3.6806, 3.7788],
    });
}

#[test]
fn table_2_second_tuple_alpha_1_8_beta_1_9() {
    table_2(Column {
        tuple: T2,
        alpha: 1.8,
        beta: Some(1.9),
        inv_h: H2,
        errors: [6.6368e-03, 4.5471e-04, 8.9704e-05, 2.8199e-05],
        rates: [3.8675, 4.0032, 4.0226],
    });
}

/// Order-k tuple for the consistency check. The third-order default (1,2,1,-2)
/// has an h^3 error constant proportional to 96 - 52a, which nearly vanishes at
/// a = 1.9, so (1,2,1,0) (constant -42a) is used instead.
fn consistency_tuple(k: u8) -> ShiftTuple {
    match k {
        3 => tuple(&[1, 2, 1, 0]),
        _ => ShiftTuple::default_for_order(k).unwrap(),
    }
}

fn operator_error(side: Side, k: u8, alpha: FractionalOrder, n_cells: usize) -> f64 {
    let t = consistency_tuple(k);
    let grid = Grid1D::new(0.0, 2.0, n_cells).unwrap();
    let poly = ShiftedPolynomial::bump(8, 8, 2.0);
    let exact = PolyDerivative::new(side, alpha, &poly, (0.0, 2.0)).unwrap();
    let nodes = grid.interior_nodes();
    let u: Vec<f64> = nodes.iter().map(|&x| poly.eval(x)).collect();
    let op = match side {
        Side::Left => assemble_left(alpha, &t, &grid).unwrap(),
        Side::Right => assemble_right(alpha, &t, &grid).unwrap(),
    };
    let approx = apply(side, op.table(), &grid, &u).unwrap();
    approx
        .iter()
        .zip(&nodes)
        .map(|(a, &x)| (a - exact.eval(x).unwrap()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn operator_consistency_orders() {
    let mut results = Vec::new();
    for k in 1..=4u8 {
        for &a in &ALPHAS {
            for side in [Side::Left, Side::Right] {
                let alpha = order(a);
                // h = 1/32 and 1/64 on [0, 2]
                let e1 = operator_error(side, k, alpha, 64);
                let e2 = operator_error(side, k, alpha, 128);
                let rate = (e1 / e2).log2();
                let (lo, hi) = (k as f64 - 0.5, k as f64 + 0.5);
                results.push(report(
                    (lo..=hi).contains(&rate),
                    &format!("consistency order {k} {} {side:?} alpha={a}", consistency_tuple(k)),
                    format!("errors {e1:.3e} {e2:.3e} rate {rate:.3} in [{lo}, {hi}]"),
                ));
            }
        }
    }
    finish(results, "consistency");
}

#[test]
fn stability_certification() {
    let mut tuples: Vec<ShiftTuple> = ShiftTuple::NEGATIVE_DEFINITE_FOURTH_ORDER
        .iter()
        .map(|s| tuple(s))
        .collect();
    tuples.push(tuple(&[1, 2]));
    tuples.push(tuple(&[1, -2]));
    let mut results = Vec::new();
    for t in &tuples {
        for &a in &ALPHAS {
            let rep = certify(t, order(a), 2001, 64).unwrap();
            results.push(report(
                rep.f_max <= 1e-12 && rep.lambda_max_sym < 0.0 && rep.verdict == Verdict::CertifiedNegative,
                &format!("certify {t} alpha={a}"),
                format!(
                    "scan max {:.3e} (<= 1e-12), lambda_max {:.4e} (< 0), verdict {}",
                    rep.f_max, rep.lambda_max_sym, rep.verdict
                ),
            ));
        }
    }
    // unshifted first-order operator is unstable
    for &a in &ALPHAS {
        let rep = certify(&tuple(&[0]), order(a), 2001, 64).unwrap();
        let bound = 1.5f64.powf(a);
        results.push(report(
            rep.lambda_max_sym >= bound,
            &format!("negative control p=0 alpha={a}"),
            format!("lambda_max {:.6} >= {bound:.6}", rep.lambda_max_sym),
        ));
    }
    finish(results, "stability");
}

fn cn_propagator(t: &ShiftTuple, alpha: FractionalOrder, n_cells: usize, tau: Option<f64>) -> DMatrix<f64> {
    let grid = Grid1D::new(0.0, 2.0, n_cells).unwrap();
    let nodes = grid.interior_nodes();
    let plus: Vec<f64> = nodes.iter().map(|x| x.powf(alpha.value())).collect();
    let minus: Vec<f64> = plus.iter().map(|d| 2.0 * d).collect();
    let tau = tau.unwrap_or(grid.h() * grid.h());
    let g = direction_generator(alpha, t, &grid, &plus, &minus, tau).unwrap();
    let n = g.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    (&id - &g).lu().solve(&(&id + &g)).unwrap()
}

fn adi_propagator(t: &ShiftTuple, a: FractionalOrder, b: FractionalOrder, n_cells: usize, tau: Option<f64>) -> DMatrix<f64> {
    let grid = Grid1D::new(0.0, 2.0, n_cells).unwrap();
    let nodes = grid.interior_nodes();
    let tau = tau.unwrap_or(grid.h() * grid.h());
    let coeffs = |o: FractionalOrder| {
        let plus: Vec<f64> = nodes.iter().map(|x| x.powf(o.value())).collect();
        let minus: Vec<f64> = plus.iter().map(|d| 2.0 * d).collect();
        (plus, minus)
    };
    let (dp, dm) = coeffs(a);
    let (ep, em) = coeffs(b);
    let gx = direction_generator(a, t, &grid, &dp, &dm, tau).unwrap();
    let gy = direction_generator(b, t, &grid, &ep, &em, tau).unwrap();
    let n = gx.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let ax = id.kronecker(&gx);
    let ay = gy.kronecker(&id);
    let big = DMatrix::<f64>::identity(n * n, n * n);
    let right = (&big + &ax) * (&big + &ay);
    let left = (&big - &ax) * (&big - &ay);
    left.lu().solve(&right).unwrap()
}

#[test]
fn propagator_contraction() {
    let mut results = Vec::new();
    let bound = 1.0 - 1e-10;
    for t in [tuple(&T1), tuple(&T2)] {
        for &a in &ALPHAS {
            for tau in [None, Some(0.5)] {
                let label = tau.map_or("h^2".to_string(), |v| v.to_string());
                let rho = spectral_radius(&cn_propagator(&t, order(a), 32, tau));
                results.push(report(
                    rho < bound,
                    &format!("1D propagator {t} alpha={a} N=32 tau={label}"),
                    format!("spectral radius {rho:.12} < {bound}"),
                ));
            }
        }
        for (a, b) in [(1.1, 1.1), (1.5, 1.5), (1.8, 1.9), (1.9, 1.1)] {
            for tau in [None, Some(0.5)] {
                let label = tau.map_or("h^2".to_string(), |v| v.to_string());
                let rho = spectral_radius(&adi_propagator(&t, order(a), order(b), 8, tau));
                results.push(report(
                    rho < bound,
                    &format!("2D propagator {t} alpha={a} beta={b} N=8 tau={label}"),
                    format!("spectral radius {rho:.12} < {bound}"),
                ));
            }
        }
    }
    finish(results, "contraction");
}

#[test]
fn adi_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut results = Vec::new();
    for t in [tuple(&T1), tuple(&T2)] {
        for (a, b) in [(1.1, 1.1), (1.8, 1.9), (1.3, 1.7)] {
            let case = manufactured_2d(order(a), order(b)).unwrap();
            let problem = case.problem(6, 4).unwrap();
            let ops = build_adi_factors(&problem, &t, &t).unwrap();
            let n = problem.grid_x.n_interior();
            let tau = problem.tau();
            let state = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let source = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let pr = step_adi(&ops, &state, &source, tau, AdiVariant::PeacemanRachford);
            let dg = step_adi(&ops, &state, &source, tau, AdiVariant::Douglas);
            let rel = (&pr - &dg).norm() / pr.norm();
            results.push(report(
                rel <= 1e-10,
                &format!("PR vs Douglas {t} alpha={a} beta={b}"),
                format!("relative difference {rel:.3e} <= 1e-10"),
            ));

            // dense (I - Ax)(I - Ay) U' = (I + Ax)(I + Ay) U + tau F with column-major vec
            let id = DMatrix::<f64>::identity(n, n);
            let ax = id.kronecker(ops.gx());
            let ay = ops.gy().kronecker(&id);
            let big = DMatrix::<f64>::identity(n * n, n * n);
            let u = DVector::from_column_slice(state.as_slice());
            let f = DVector::from_column_slice(source.as_slice());
            let rhs = (&big + &ax) * (&big + &ay) * u + f * tau;
            let dense = ((&big - &ax) * (&big - &ay)).lu().solve(&rhs).unwrap();
            for (name, got) in [("PR", &pr), ("Douglas", &dg)] {
                let got = DVector::from_column_slice(got.as_slice());
                let rel = (&got - &dense).norm() / dense.norm();
                results.push(report(
                    rel <= 1e-10,
                    &format!("{name} vs dense step {t} alpha={a} beta={b} N=6"),
                    format!("relative difference {rel:.3e} <= 1e-10"),
                ));
            }
        }
    }
    finish(results, "ADI equivalence");
}

fn closed_form_q(a: f64) -> [f64; 6] {
    let q0 = 1.5f64.powf(a);
    [
        q0,
        -q0 * 4.0 * a / 3.0,
        q0 * a * (8.0 * a - 5.0) / 9.0,
        q0 * 4.0 * a * (a - 1.0) * (7.0 - 8.0 * a) / 81.0,
        q0 * a * (a - 1.0) * (64.0 * a * a - 176.0 * a + 123.0) / 486.0,
        q0 * 2.0 * a * (a - 1.0) * (2.0 - a) * (64.0 * a * a - 208.0 * a + 183.0) / 3645.0,
    ]
}

/// Taylor coefficients of `(3/2 - 2z + z^2/2)^a` by the power-of-series recurrence.
fn power_series_q(a: f64, k_max: usize) -> Vec<f64> {
    let c: [f64; 3] = [1.5, -2.0, 0.5];
    let mut out = vec![c[0].powf(a)];
    for k in 1..=k_max {
        let s: f64 = (1..=k.min(2))
            .map(|j| ((a + 1.0) * j as f64 - k as f64) * c[j] * out[k - j])
            .sum();
        out.push(s / (k as f64 * c[0]));
    }
    out
}

#[test]
fn coefficient_identities() {
    let mut results = Vec::new();
    for &a in &[1.05, 1.1, 1.3, 1.5, 1.7, 1.9, 1.95] {
        let alpha = order(a);
        let q = lubich_q(alpha, 200);
        let worst = closed_form_q(a)
            .iter()
            .zip(&q)
            .map(|(c, v)| (c - v).abs() / c.abs().max(1.0))
            .fold(0.0, f64::max);
        results.push(report(worst <= 1e-12, &format!("q_0..q_5 closed forms alpha={a}"), format!("max diff {worst:.2e} <= 1e-12")));

        let oracle = power_series_q(a, 200);
        let worst = oracle.iter().zip(&q).map(|(o, v)| (o - v).abs()).fold(0.0, f64::max);
        results.push(report(worst <= 1e-12, &format!("convolution oracle alpha={a}"), format!("max diff {worst:.2e} <= 1e-12")));

        for t in [
            ShiftTuple::default_for_order(2).unwrap(),
            tuple(&[1, -2]),
            ShiftTuple::default_for_order(3).unwrap(),
            tuple(&[1, 2, 1, 0]),
            tuple(&T1),
            tuple(&T2),
        ] {
            let sum: f64 = t.branches(alpha).unwrap().iter().map(|b| b.1).sum();
            results.push(report(
                (sum - 1.0).abs() <= 1e-14,
                &format!("weight sum {t} alpha={a}"),
                format!("|sum - 1| = {:.2e} <= 1e-14", (sum - 1.0).abs()),
            ));
        }
    }
    for &a in &ALPHAS {
        let q = lubich_q(order(a), 5000);
        let partial: f64 = q.iter().sum();
        results.push(report(
            partial.abs() < 1e-3,
            &format!("partial sum k<=5000 alpha={a}"),
            format!("|sum| = {:.3e} < 1e-3", partial.abs()),
        ));
    }
    finish(results, "coefficient");
}
