//! Dense complex linear algebra kernel.
//!
//! Everything downstream (representations, Kraus systems, transfer spectra,
//! Hamiltonians) is expressed through [`CMatrix`], a dense complex matrix with
//! row-major indexing semantics, and four kernel operations:
//!
//! * [`kron`] — tensor (Kronecker) product,
//! * [`eigenvalues`] — the full spectrum of a general (non-Hermitian) matrix,
//! * [`expm`] — the matrix exponential,
//! * [`operator_norm`] — the largest singular value.
//!
//! The eigensolver must handle non-normal matrices: transfer operators are
//! self-adjoint only with respect to a weighted inner product, and imported
//! systems need not be self-adjoint at all. Dense solvers are used throughout;
//! the matrices in scope stay well below dimension ~2500.
//!
//! All values are immutable after construction and safe to share across
//! threads.

use nalgebra::DMatrix;
use thiserror::Error;

/// Complex scalar used everywhere in this crate.
pub type C64 = num_complex::Complex64;

/// Default absolute comparison tolerance. Every matrix in scope has norm
/// O(1), so absolute and relative tolerances coincide up to a small factor.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Errors from kernel operations.
#[derive(Debug, Error)]
pub enum NumericsError {
    /// A constructor received an entry vector of the wrong length.
    #[error("matrix of shape {rows}x{cols} needs {} entries, got {got}", rows * cols)]
    EntryCount {
        rows: usize,
        cols: usize,
        got: usize,
    },
    /// A constructor received a NaN or infinite entry.
    #[error("matrix entries must be finite; entry {index} (row-major) is not")]
    NonFinite { index: usize },
    /// A constructor received a zero dimension.
    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    ZeroDimension { rows: usize, cols: usize },
    /// An operation that needs a square matrix got a rectangular one.
    #[error("operation requires a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    /// Binary operation on incompatible shapes.
    #[error("shape mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    /// The QR iteration failed to converge (not observed in practice for the
    /// matrix sizes in scope; surfaced rather than panicking).
    #[error("eigenvalue iteration did not converge for a {n}x{n} matrix")]
    EigenConvergence { n: usize },
}

/// Dense complex matrix with row-major indexing semantics: `a[(i, j)]` is the
/// entry in row `i`, column `j`, and the entry vector enumerates rows first.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    /// Builds a matrix from row-major entries, validating the entry count and
    /// that every entry is finite.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, NumericsError> {
        if rows == 0 || cols == 0 {
            return Err(NumericsError::ZeroDimension { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(NumericsError::EntryCount {
                rows,
                cols,
                got: data.len(),
            });
        }
        if let Some(index) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(NumericsError::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    /// Zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix entry-by-entry from a closure.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Square diagonal matrix from the given diagonal entries.
    pub fn diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, z) in diag.iter().enumerate() {
            m[(i, i)] = *z;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entry slice.
    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Transpose without conjugation.
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Entrywise complex conjugate.
    pub fn conjugate(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conj())
    }

    /// Sum of diagonal entries (matrix need not be square; sums the main
    /// diagonal of the upper-left square block).
    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Entrywise scaling.
    pub fn scaled(&self, z: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|w| w * z).collect(),
        }
    }

    /// Largest entry modulus (max norm).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "max_abs_diff requires equal shapes"
        );
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// True when `‖self − self*‖_max ≤ tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// Matrix-vector product (`v` has length `cols`).
    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols, "mul_vec length mismatch");
        if self.cols == 0 {
            return vec![C64::new(0.0, 0.0); self.rows];
        }
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn to_na(&self) -> DMatrix<C64> {
        DMatrix::from_row_iterator(self.rows, self.cols, self.data.iter().cloned())
    }

    fn from_na(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl std::ops::Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "add shape mismatch"
        );
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl std::ops::Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "sub shape mismatch"
        );
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl std::ops::Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "mul shape mismatch: {}x{} times {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let lhs_row = i * rhs.cols;
                let rhs_row = k * rhs.cols;
                for j in 0..rhs.cols {
                    out.data[lhs_row + j] += a * rhs.data[rhs_row + j];
                }
            }
        }
        out
    }
}

impl std::fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker (tensor) product: `(a⊗b)[(i·rows_b + k), (j·cols_b + l)] = a[i,j]·b[k,l]`.
///
/// The first factor is the most significant index, matching the site-ordering
/// convention used for multi-site observables.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let z = a[(i, j)];
            if z.re == 0.0 && z.im == 0.0 {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = z * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Full spectrum (with algebraic multiplicity, in no particular order) of a
/// general complex square matrix, via the complex Schur decomposition.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let n = a.rows;
    if n == 1 {
        return Ok(vec![a[(0, 0)]]);
    }
    // Generous iteration cap: the implicit-QR iteration converges in O(n)
    // sweeps for every matrix class in scope; the cap turns a pathological
    // stall into an error instead of a hang.
    let max_iter = 50 * n * n + 10_000;
    if let Some(vals) = try_schur_eigenvalues(a, max_iter) {
        return Ok(vals);
    }
    // The implicit-QR iteration can stall on matrices with heavily
    // degenerate spectra (repeated-eigenvalue blocks resist deflation in
    // special bases). A unitary change of basis leaves the spectrum exactly
    // invariant while scrambling the structure that stalls the sweep, so
    // retry under a few fixed dense rotations before giving up.
    for attempt in 0..3u32 {
        let q = scrambling_unitary(n, 0.37 + 0.11 * f64::from(attempt));
        let rotated = &(&q * a) * &q.adjoint();
        if let Some(vals) = try_schur_eigenvalues(&rotated, max_iter) {
            return Ok(vals);
        }
    }
    Err(NumericsError::EigenConvergence { n })
}

fn try_schur_eigenvalues(a: &CMatrix, max_iter: usize) -> Option<Vec<C64>> {
    let schur = nalgebra::linalg::Schur::try_new(a.to_na(), f64::EPSILON, max_iter)?;
    let vals = schur.eigenvalues()?;
    Some(vals.iter().cloned().collect())
}

/// A reproducible dense unitary with no structure in the standard basis:
/// exp(θ·(A − A*)) for a fixed non-symmetric Cauchy-like matrix A. Used to
/// re-pose stalled eigenvalue problems in a rotated basis.
fn scrambling_unitary(n: usize, theta: f64) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |i, j| {
        C64::new(
            1.0 / (1.0 + i as f64 + 2.0 * j as f64),
            1.0 / (2.0 + 3.0 * i as f64 + j as f64),
        )
    });
    let skew = &a - &a.adjoint();
    expm(&skew.scaled(C64::new(theta, 0.0))).expect("exponential of a finite matrix")
}

/// Real spectrum (ascending) of a Hermitian matrix, via tridiagonalization
/// and the implicit symmetric QL iteration. Unlike the general Schur route
/// this remains robust when eigenvalues are highly degenerate, which is the
/// common case for the density and projector matrices handled here.
///
/// The input is *assumed* Hermitian; only its lower triangle participates.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let mut vals: Vec<f64> = a.to_na().symmetric_eigenvalues().iter().cloned().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Full Hermitian eigendecomposition a = U·diag(λ)·U*: real eigenvalues
/// (unsorted) paired with the unitary U whose columns are the eigenvectors.
///
/// The input is *assumed* Hermitian; only its lower triangle participates.
pub fn hermitian_eigen(a: &CMatrix) -> Result<(Vec<f64>, CMatrix), NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let decomp = nalgebra::linalg::SymmetricEigen::new(a.to_na());
    let vals: Vec<f64> = decomp.eigenvalues.iter().cloned().collect();
    Ok((vals, CMatrix::from_na(&decomp.eigenvectors)))
}

/// Matrix exponential by scaling-and-squaring with Padé approximants.
pub fn expm(a: &CMatrix) -> Result<CMatrix, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    Ok(CMatrix::from_na(&a.to_na().exp()))
}

/// Operator norm: the largest singular value.
pub fn operator_norm(a: &CMatrix) -> f64 {
    // Unordered SVD avoids the sort; we only need the maximum.
    let svd = a.to_na().svd_unordered(false, false);
    svd.singular_values.iter().cloned().fold(0.0, f64::max)
}

/// Numerical rank: the number of singular values exceeding `tol`.
pub fn rank(a: &CMatrix, tol: f64) -> usize {
    let svd = a.to_na().svd_unordered(false, false);
    svd.singular_values.iter().filter(|s| **s > tol).count()
}

/// All singular values, descending.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let svd = a.to_na().svd_unordered(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).expect("singular values are finite"));
    sv
}

/// Canonical spectrum ordering: descending modulus, then ascending argument.
/// Used wherever eigenvalue lists become part of serialized output, so that
/// identical inputs produce byte-identical files.
pub fn sort_eigenvalues(vals: &mut [C64]) {
    vals.sort_by(|a, b| {
        let ka = (-a.norm(), a.arg());
        let kb = (-b.norm(), b.arg());
        ka.partial_cmp(&kb).expect("eigenvalues are finite")
    });
}
