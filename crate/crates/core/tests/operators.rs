use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;
use wsld::operators::{dense_apply, ShiftedPolynomial};
use wsld::{
    apply, assemble_left, assemble_right, lubich_q, rl_exact_poly, stencil_phi, weights_order2, FractionalOrder,
    Grid1D, ShiftTuple, Side, WsldError,
};

fn a(v: f64) -> FractionalOrder {
    FractionalOrder::new(v).unwrap()
}

fn t(s: &[i32]) -> ShiftTuple {
    ShiftTuple::new(s).unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn grid_validation() {
    assert!(Grid1D::new(0.0, 2.0, 1).is_err());
    assert!(Grid1D::new(1.0, 1.0, 4).is_err());
    let g = Grid1D::new(0.0, 2.0, 20).unwrap();
    assert_relative_eq!(g.h(), 0.1, max_relative = 1e-15);
    assert_eq!(g.n_interior(), 19);
    assert_relative_eq!(g.interior_nodes()[0], 0.1, max_relative = 1e-15);
}

#[test]
fn unshifted_first_order_is_lower_triangular() {
    let alpha = 1.5;
    let op = assemble_left(a(alpha), &t(&[0]), &Grid1D::new(0.0, 1.0, 12).unwrap()).unwrap();
    let m = op.matrix();
    let q0 = 1.5f64.powf(alpha);
    for i in 0..m.nrows() {
        assert_eq!(m[(i, i)], q0);
        for j in i + 1..m.ncols() {
            assert_eq!(m[(i, j)], 0.0);
        }
    }
}

#[test]
fn second_order_bands_match_direct_sums() {
    let alpha = a(1.4);
    let grid = Grid1D::new(0.0, 1.0, 5).unwrap();
    let op = assemble_left(alpha, &t(&[1, -2]), &grid).unwrap();
    let q = lubich_q(alpha, 20);
    let qa = |j: i64| if j < 0 { 0.0 } else { q[j as usize] };
    let (wp, wq) = weights_order2(1, -2).unwrap();
    // row i of the left operator: sum_k (wp q_{k+p-m} + wq q_{k+q-m}) u_{i-k+m}, m = 2
    for i in 0..4i64 {
        for j in 0..4i64 {
            let k = i - j + 2;
            let expected = wp * qa(k + 1 - 2) + wq * qa(k - 2 - 2);
            assert_relative_eq!(op.matrix()[(i as usize, j as usize)], expected, max_relative = 1e-14, epsilon = 1e-15);
        }
    }
}

#[test]
fn assembled_matrices_are_toeplitz_and_transposed() {
    let grid = Grid1D::new(0.0, 2.0, 24).unwrap();
    for shifts in [&[1][..], &[1, 2], &[1, 2, 1, 0], &ShiftTuple::ALTERNATE_FOURTH_ORDER] {
        let left = assemble_left(a(1.7), &t(shifts), &grid).unwrap();
        let right = assemble_right(a(1.7), &t(shifts), &grid).unwrap();
        assert!(left.is_toeplitz() && right.is_toeplitz());
        assert_eq!(right.matrix(), &left.matrix().transpose());
        let m = left.matrix();
        for i in 0..m.nrows() - 1 {
            for j in 0..m.ncols() - 1 {
                assert_eq!(m[(i, j)], m[(i + 1, j + 1)]);
            }
        }
    }
}

#[test]
fn stencil_apply_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let grid = Grid1D::new(0.0, 1.0, 18).unwrap();
    let tuple = ShiftTuple::default_for_order(4).unwrap();
    let u = random_vec(&mut rng, 17);
    for side in [Side::Left, Side::Right] {
        let op = match side {
            Side::Left => assemble_left(a(1.5), &tuple, &grid).unwrap(),
            Side::Right => assemble_right(a(1.5), &tuple, &grid).unwrap(),
        };
        let fast = apply(side, op.table(), &grid, &u).unwrap();
        let dense = dense_apply(&op, &grid, &u);
        let scale = dense.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in fast.iter().zip(&dense) {
            assert!((x - y).abs() <= 1e-12 * scale, "{x} vs {y}");
        }
    }
}

#[test]
fn apply_zero_and_length_errors() {
    let grid = Grid1D::new(0.0, 1.0, 10).unwrap();
    let table = stencil_phi(a(1.3), &t(&[1, 2]), 20).unwrap();
    assert!(apply(Side::Left, &table, &grid, &[0.0; 9]).unwrap().iter().all(|v| *v == 0.0));
    assert!(matches!(
        apply(Side::Left, &table, &grid, &[0.0; 8]),
        Err(WsldError::LengthMismatch { expected: 9, found: 8 })
    ));
    let short = stencil_phi(a(1.3), &t(&[1, 2]), 3).unwrap();
    assert!(apply(Side::Right, &short, &grid, &[0.0; 9]).is_err());
}

#[test]
fn left_and_right_are_reflections() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grid = Grid1D::new(0.0, 1.0, 30).unwrap();
    let table = stencil_phi(a(1.8), &t(&ShiftTuple::ALTERNATE_FOURTH_ORDER), 40).unwrap();
    let u = random_vec(&mut rng, 29);
    let mut rev = u.clone();
    rev.reverse();
    let left = apply(Side::Left, &table, &grid, &u).unwrap();
    let mut right = apply(Side::Right, &table, &grid, &rev).unwrap();
    right.reverse();
    for (x, y) in left.iter().zip(&right) {
        assert_relative_eq!(*x, *y, max_relative = 1e-13, epsilon = 1e-12);
    }
}

#[test]
fn monomial_derivative_values() {
    let x4 = ShiftedPolynomial::new(&[4], &[1.0]).unwrap();
    let v = rl_exact_poly(Side::Left, a(1.5), &x4, 1.0, (0.0, 2.0)).unwrap();
    assert_relative_eq!(v, 24.0 / 3.3233509, max_relative = 1e-7);
    assert_relative_eq!(v, 7.22166, max_relative = 1e-5);
    for alpha in [1.1, 1.5, 1.9] {
        assert_eq!(rl_exact_poly(Side::Left, a(alpha), &x4, 0.0, (0.0, 2.0)).unwrap(), 0.0);
        assert_eq!(rl_exact_poly(Side::Right, a(alpha), &x4, 2.0, (0.0, 2.0)).unwrap(), 0.0);
    }
    let x1 = ShiftedPolynomial::new(&[1], &[1.0]).unwrap();
    assert!(matches!(
        rl_exact_poly(Side::Left, a(1.5), &x1, 1.0, (0.0, 2.0)),
        Err(WsldError::UnsupportedPower { power: 1, min: 2 })
    ));
    assert!(rl_exact_poly(Side::Left, a(1.5), &x4, 2.5, (0.0, 2.0)).is_err());
}

#[test]
fn bump_expansion_and_derivative_sum() {
    let bump = ShiftedPolynomial::bump(4, 4, 2.0);
    let mut terms = bump.terms().to_vec();
    terms.sort_by_key(|t| t.0);
    assert_eq!(terms, vec![(4, 16.0), (5, -32.0), (6, 24.0), (7, -8.0), (8, 1.0)]);

    let alpha = 1.5;
    let expected: f64 = [(8, 1.0), (7, -8.0), (6, 24.0), (5, -32.0), (4, 16.0)]
        .iter()
        .map(|&(p, c)| c * gamma(p as f64 + 1.0) / gamma(p as f64 + 1.0 - alpha))
        .sum();
    let left = rl_exact_poly(Side::Left, a(alpha), &bump, 1.0, (0.0, 2.0)).unwrap();
    assert_relative_eq!(left, expected, max_relative = 1e-12);
    // x^4 (2-x)^4 is symmetric about x = 1
    for x in [0.3, 1.0, 1.7] {
        let r = rl_exact_poly(Side::Right, a(alpha), &bump, x, (0.0, 2.0)).unwrap();
        let l = rl_exact_poly(Side::Left, a(alpha), &bump, 2.0 - x, (0.0, 2.0)).unwrap();
        assert_relative_eq!(r, l, max_relative = 1e-12);
    }
}

#[test]
fn row_sums_decrease_with_n() {
    let tuple = ShiftTuple::default_for_order(4).unwrap();
    let sums: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| {
            let op = assemble_left(a(1.5), &tuple, &Grid1D::new(0.0, 1.0, n).unwrap()).unwrap();
            op.matrix().row_iter().map(|r| r.sum().abs()).fold(0.0, f64::max)
        })
        .collect();
    assert!(sums[1] < sums[0] && sums[2] < sums[1], "{sums:?}");
}

#[test]
fn matrix_csv_dump() {
    let op = assemble_left(a(1.5), &t(&[1, 2]), &Grid1D::new(0.0, 1.0, 4).unwrap()).unwrap();
    let mut buf = Vec::new();
    op.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 3);
    let first: Vec<f64> = rows[0].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first.len(), 3);
    assert_eq!(first[0], op.matrix()[(0, 0)]);
}

proptest! {
    #[test]
    fn apply_is_linear(alpha in 1.01f64..1.99, seed in any::<u64>(), c in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = Grid1D::new(0.0, 1.0, 16).unwrap();
        let table = stencil_phi(a(alpha), &t(&[1, 2, 1, 0, 1, 2, 1, -2]), 40).unwrap();
        let u = random_vec(&mut rng, 15);
        let v = random_vec(&mut rng, 15);
        let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| x + c * y).collect();
        let au = apply(Side::Left, &table, &grid, &u).unwrap();
        let av = apply(Side::Left, &table, &grid, &v).unwrap();
        let aw = apply(Side::Left, &table, &grid, &w).unwrap();
        let scale = au.iter().chain(&av).fold(1.0f64, |m, x| m.max(x.abs())) * (1.0 + c.abs());
        for i in 0..15 {
            prop_assert!((aw[i] - au[i] - c * av[i]).abs() <= 1e-12 * scale);
        }
    }
}
