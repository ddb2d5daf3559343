//! Integration tests of the dense linear-algebra kernel: Kronecker products,
//! eigenvalues, matrix exponentials, operator norms.

mod common;

use common::{random_matrix, random_unitary, rng};
use fcs_core::numerics::{
    eigenvalues, expm, kron, operator_norm, rank, singular_values, sort_eigenvalues, CMatrix, C64,
};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn kron_matches_hand_computed_2x2() {
    let a = CMatrix::new(
        2,
        2,
        vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)],
    )
    .unwrap();
    let b = CMatrix::new(
        2,
        2,
        vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
    )
    .unwrap();
    let k = kron(&a, &b);
    assert_eq!(k.rows(), 4);
    // Block (0,1) is 2·b.
    assert_eq!(k[(0, 3)], c(2.0, 0.0));
    assert_eq!(k[(1, 2)], c(2.0, 0.0));
    assert_eq!(k[(0, 2)], c(0.0, 0.0));
    // Block (1,1) is 4·b.
    assert_eq!(k[(3, 2)], c(4.0, 0.0));
}

#[test]
fn kron_is_associative_and_respects_products() {
    let mut r = rng(11);
    for _ in 0..20 {
        let a = random_matrix(&mut r, 2, 3);
        let b = random_matrix(&mut r, 3, 2);
        let c_m = random_matrix(&mut r, 2, 2);
        let left = kron(&kron(&a, &b), &c_m);
        let right = kron(&a, &kron(&b, &c_m));
        assert!(left.max_abs_diff(&right) < 1e-14);

        // Mixed-product property: (a⊗c)(b⊗d) = (ab)⊗(cd).
        let d_m = random_matrix(&mut r, 2, 2);
        let lhs = &kron(&a, &c_m) * &kron(&b, &d_m);
        let rhs = kron(&(&a * &b), &(&c_m * &d_m));
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }
}

#[test]
fn eigenvalues_of_known_matrices() {
    // Nilpotent: all eigenvalues 0 despite non-normality.
    let nil = CMatrix::new(
        2,
        2,
        vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
    )
    .unwrap();
    for lambda in eigenvalues(&nil).unwrap() {
        assert!(lambda.norm() < 1e-12);
    }

    // Companion-style matrix of x² − 1 → {1, −1}.
    let flip = CMatrix::new(
        2,
        2,
        vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
    )
    .unwrap();
    let mut eigs = eigenvalues(&flip).unwrap();
    sort_eigenvalues(&mut eigs);
    assert!((eigs[0] - c(-1.0, 0.0)).norm() < 1e-12 || (eigs[1] - c(-1.0, 0.0)).norm() < 1e-12);
    assert!(eigs.iter().any(|z| (z - c(1.0, 0.0)).norm() < 1e-12));

    // Rotation generator: eigenvalues ±i.
    let rot = CMatrix::new(
        2,
        2,
        vec![c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
    )
    .unwrap();
    let eigs = eigenvalues(&rot).unwrap();
    assert!(eigs.iter().any(|z| (z - c(0.0, 1.0)).norm() < 1e-12));
    assert!(eigs.iter().any(|z| (z - c(0.0, -1.0)).norm() < 1e-12));
}

#[test]
fn eigenvalue_sum_equals_trace_on_random_matrices() {
    let mut r = rng(12);
    for n in [1usize, 2, 3, 5, 8, 12, 20] {
        for _ in 0..5 {
            let a = random_matrix(&mut r, n, n);
            let eigs = eigenvalues(&a).unwrap();
            let sum: C64 = eigs.iter().sum();
            let tol = 1e-10 * operator_norm(&a).max(1.0);
            assert!(
                (sum - a.trace()).norm() <= tol,
                "n={n}: eigenvalue sum {sum} vs trace {}",
                a.trace()
            );
        }
    }
}

#[test]
fn expm_of_rotation_generator_is_a_rotation() {
    // exp(θ·[[0,−1],[1,0]]) = [[cos θ, −sin θ],[sin θ, cos θ]], checked far
    // from the origin to exercise scaling-and-squaring (‖a‖ = 50).
    let theta = 50.0;
    let gen = CMatrix::new(
        2,
        2,
        vec![c(0.0, 0.0), c(-theta, 0.0), c(theta, 0.0), c(0.0, 0.0)],
    )
    .unwrap();
    let e = expm(&gen).unwrap();
    let expected = CMatrix::new(
        2,
        2,
        vec![
            c(theta.cos(), 0.0),
            c(-theta.sin(), 0.0),
            c(theta.sin(), 0.0),
            c(theta.cos(), 0.0),
        ],
    )
    .unwrap();
    assert!(
        e.max_abs_diff(&expected) < 1e-12,
        "deviation {}",
        e.max_abs_diff(&expected)
    );
}

#[test]
fn expm_inverse_pairs_multiply_to_identity() {
    let mut r = rng(13);
    for n in [2usize, 3, 5] {
        for _ in 0..5 {
            // Scale to ‖a‖ ≈ 10 to stay in the contract's accuracy envelope.
            let raw = random_matrix(&mut r, n, n);
            let a = raw.scaled(c(10.0 / operator_norm(&raw).max(1e-12), 0.0));
            let prod = &expm(&a).unwrap() * &expm(&a.scaled(c(-1.0, 0.0))).unwrap();
            assert!(prod.max_abs_diff(&CMatrix::identity(n)) < 1e-9);
        }
    }
}

#[test]
fn operator_norm_is_unitarily_invariant_and_exact_on_diagonals() {
    let mut r = rng(14);
    let diag = CMatrix::diagonal(&[c(3.0, 0.0), c(-4.0, 0.0), c(0.5, 0.0)]);
    assert!((operator_norm(&diag) - 4.0).abs() < 1e-12);

    for _ in 0..10 {
        let a = random_matrix(&mut r, 3, 3);
        let u = random_unitary(&mut r, 3);
        let v = random_unitary(&mut r, 3);
        let rotated = &(&u * &a) * &v;
        assert!((operator_norm(&rotated) - operator_norm(&a)).abs() < 1e-10);
    }
}

#[test]
fn rank_and_singular_values_detect_projectors() {
    // Rank-1 projector on ℂ²: singular values {1, 0}.
    let p = CMatrix::new(
        2,
        2,
        vec![c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)],
    )
    .unwrap();
    assert_eq!(rank(&p, 1e-10), 1);
    let sv = singular_values(&p);
    assert!((sv[0] - 1.0).abs() < 1e-12 && sv[1].abs() < 1e-12);
}

#[test]
fn sort_orders_by_modulus_then_argument() {
    let mut vals = vec![
        c(0.0, -1.0),
        c(1.0, 0.0),
        c(0.0, 1.0),
        c(-1.0, 0.0),
        c(0.5, 0.0),
    ];
    sort_eigenvalues(&mut vals);
    // Moduli 1,1,1,1,0.5; among modulus-1 values argument ascends: −π/2, 0, π/2, π.
    assert_eq!(vals[0], c(0.0, -1.0));
    assert_eq!(vals[1], c(1.0, 0.0));
    assert_eq!(vals[2], c(0.0, 1.0));
    assert_eq!(vals[3], c(-1.0, 0.0));
    assert_eq!(vals[4], c(0.5, 0.0));
}

prop_compose! {
    fn small_square(max_n: usize)
        (n in 1..=max_n)
        (entries in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n), n in Just(n))
        -> CMatrix
    {
        let data: Vec<C64> = entries.into_iter().map(|(re, im)| C64::new(re, im)).collect();
        CMatrix::new(n, n, data).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prop_eigenvalue_sum_matches_trace(a in small_square(6)) {
        let eigs = eigenvalues(&a).unwrap();
        let sum: C64 = eigs.iter().sum();
        let tol = 1e-10 * operator_norm(&a).max(1.0);
        prop_assert!((sum - a.trace()).norm() <= tol);
    }

    #[test]
    fn prop_expm_inverts(a in small_square(4)) {
        // Entries in the unit square keep ‖a‖ well inside the contract range.
        let prod = &expm(&a).unwrap() * &expm(&a.scaled(C64::new(-1.0, 0.0))).unwrap();
        prop_assert!(prod.max_abs_diff(&CMatrix::identity(a.rows())) < 1e-10);
    }

    #[test]
    fn prop_kron_associates(a in small_square(3), b in small_square(2), c_m in small_square(2)) {
        let left = kron(&kron(&a, &b), &c_m);
        let right = kron(&a, &kron(&b, &c_m));
        prop_assert!(left.max_abs_diff(&right) < 1e-13);
    }

    #[test]
    fn prop_operator_norm_dominates_entries(a in small_square(5)) {
        prop_assert!(operator_norm(&a) + 1e-12 >= a.max_abs());
    }
}
