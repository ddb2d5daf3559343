//! Shared helpers for the integration tests: seeded random matrices,
//! Gram-Schmidt unitaries/isometries, and random Popescu systems built by
//! isometry completion. Everything is deterministic given the seed.

#![allow(dead_code)] // each test binary uses a subset

use fcs_core::numerics::{CMatrix, C64};
use fcs_core::PopescuSystem;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with independent entries uniform in the complex unit square.
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    let data: Vec<C64> = (0..rows * cols)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    CMatrix::new(rows, cols, data).expect("finite random entries")
}

/// Random Hermitian matrix (A + A*)/2.
pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let a = random_matrix(rng, n, n);
    (&a + &a.adjoint()).scaled(C64::new(0.5, 0.0))
}

/// Orthonormalizes the columns of a (rows ≥ cols, full column rank assumed —
/// almost sure for random input). Returns the isometry with the same span.
pub fn gram_schmidt(a: &CMatrix) -> CMatrix {
    let (rows, cols) = (a.rows(), a.cols());
    let mut q = CMatrix::zeros(rows, cols);
    for c in 0..cols {
        let mut col: Vec<C64> = (0..rows).map(|r| a[(r, c)]).collect();
        for prev in 0..c {
            let overlap: C64 = (0..rows).map(|r| q[(r, prev)].conj() * col[r]).sum();
            for (r, entry) in col.iter_mut().enumerate() {
                *entry -= overlap * q[(r, prev)];
            }
        }
        let norm: f64 = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm > 1e-10, "rank-deficient input to gram_schmidt");
        for (r, entry) in col.iter().enumerate() {
            q[(r, c)] = entry / norm;
        }
    }
    q
}

/// Haar-ish random unitary: Gram-Schmidt of a square random matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    gram_schmidt(&random_matrix(rng, n, n))
}

/// Random Popescu system by isometry completion: orthonormalize a random
/// (d·n)×n matrix into an isometry K (K*K = I), slice it into d row-blocks
/// K_k and take v_k = K_k*, so that Σ v_k·v_k* = Σ K_k*·K_k = K*K = I. The
/// invariant state comes from the fixed-point solver.
pub fn random_popescu(rng: &mut ChaCha8Rng, d: usize, n: usize) -> PopescuSystem {
    loop {
        let k = gram_schmidt(&random_matrix(rng, d * n, n));
        let v: Vec<CMatrix> = (0..d)
            .map(|block| CMatrix::from_fn(n, n, |i, j| k[(block * n + j, i)].conj()))
            .collect();
        // Random channels are almost surely ergodic with a faithful fixed
        // point; on the rare degenerate draw, try the next one.
        match PopescuSystem::from_kraus(v) {
            Ok(sys) => return sys,
            Err(_) => continue,
        }
    }
}

/// A ⊗ 1^{gap} ⊗ B as a (k+1)-site observable (gap = k−1 identity sites).
pub fn embed_pair(a: &CMatrix, b: &CMatrix, d: usize, k: usize) -> CMatrix {
    assert!(k >= 1);
    let mut q = a.clone();
    for _ in 0..k - 1 {
        q = fcs_core::kron(&q, &CMatrix::identity(d));
    }
    fcs_core::kron(&q, b)
}

pub fn approx(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
