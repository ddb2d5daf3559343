//! The transfer operator of a Popescu system: spectrum, mixing structure,
//! two-point correlators, and exponential-decay certificates.
//!
//! The completely positive unital map τ(x) = Σ_k v_k·x·v_k* governs all
//! correlation decay of the generated state. This module linearizes τ as an
//! n²×n² matrix acting on vectorized n×n matrices, reports its spectrum and
//! the derived gap α and correlation length ξ = −1/ln α, evaluates two-point
//! functions ω(A ⊗ 1^{k−1} ⊗ B) by trace contraction, and fits the measured
//! decay of connected correlators against the spectral prediction.
//!
//! Vectorization convention (fixed once, used everywhere): row-major
//! stacking, matching the entry layout of [`CMatrix`]. Under it
//! vec(A·X·B) = (A ⊗ Bᵀ)·vec(X), so τ has matrix T = Σ_k v_k ⊗ conj(v_k)
//! and the dual map x ↦ Σ_k v_k*·x·v_k has matrix T†.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fcs::PopescuSystem;
use crate::numerics::{
    eigenvalues, hermitian_eigen, hermitian_eigenvalues, kron, sort_eigenvalues, CMatrix,
    NumericsError, C64,
};

/// Modulus threshold for membership in the peripheral spectrum: |λ| ≥ 1 − 1e−8.
pub const PERIPHERAL_TOL: f64 = 1e-8;

/// Tolerance of the detailed-balance (self-adjointness) test.
const BALANCE_TOL: f64 = 1e-8;

/// Connected correlators at or below this magnitude are treated as zero when
/// fitting decay rates.
const FIT_FLOOR: f64 = 1e-13;

fn fmt_eigs(eigs: &[C64]) -> String {
    let parts: Vec<String> = eigs
        .iter()
        .map(|z| format!("{:.6}{:+.6}i", z.re, z.im))
        .collect();
    format!("{{{}}}", parts.join(", "))
}

/// Errors from spectral analysis and correlator evaluation.
#[derive(Debug, Error)]
pub enum TransferError {
    /// A single-site observable had the wrong shape.
    #[error("observable of shape {rows}x{cols} does not match site dimension d={d}")]
    ObservableShape { rows: usize, cols: usize, d: usize },
    /// An n×n argument had the wrong shape.
    #[error("argument of shape {rows}x{cols} does not match auxiliary dimension n={n}")]
    StateShape { rows: usize, cols: usize, n: usize },
    /// Two-point distances start at 1 (adjacent sites).
    #[error("two-point distance k must be ≥ 1, got {k}")]
    InvalidDistance { k: usize },
    /// Decay certification requires a strongly mixing transfer operator.
    #[error(
        "decay certificate unavailable: peripheral spectrum {} obstructs correlation decay (strongly_mixing = false)",
        fmt_eigs(peripheral)
    )]
    NotMixing { peripheral: Vec<C64> },
    /// A certificate needs at least one observable.
    #[error("decay certificate needs at least one observable")]
    NoObservables,
    /// A structural fact the analysis relies on failed numerically.
    #[error("spectral analysis internal consistency: {what}")]
    InternalConsistency { what: String },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// The linearized transfer operator of a Popescu system.
#[derive(Clone, Debug)]
pub struct TransferOperator {
    n: usize,
    matrix: CMatrix,
    detailed_balance: bool,
    rho: CMatrix,
}

impl TransferOperator {
    /// Auxiliary dimension n (the matrix acts on ℂ^{n²}).
    pub fn n(&self) -> usize {
        self.n
    }

    /// The n²×n² matrix T = Σ_k v_k ⊗ conj(v_k).
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Whether τ is self-adjoint for the rho-weighted inner product
    /// ⟨⟨x, y⟩⟩ = trace(rho·x*·y), within 1e−8.
    pub fn detailed_balance(&self) -> bool {
        self.detailed_balance
    }

    /// Applies τ through the matrix: unvec(T·vec(x)).
    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix, TransferError> {
        if x.rows() != self.n || x.cols() != self.n {
            return Err(TransferError::StateShape {
                rows: x.rows(),
                cols: x.cols(),
                n: self.n,
            });
        }
        let out = self.matrix.mul_vec(x.entries());
        Ok(CMatrix::new(self.n, self.n, out).expect("shape preserved"))
    }
}

/// Builds the linearized transfer operator and tests detailed balance.
///
/// Detailed balance is ⟨⟨x, τ(y)⟩⟩ = ⟨⟨τ(x), y⟩⟩ for all x, y with
/// ⟨⟨x, y⟩⟩ = trace(rho·x*·y). With G = I ⊗ rhoᵀ (the matrix of the inner
/// product in the vectorized picture) this is the matrix identity
/// G·T = T†·G, tested entrywise within 1e−8.
pub fn build_transfer(sys: &PopescuSystem) -> TransferOperator {
    let n = sys.n();
    let mut matrix = CMatrix::zeros(n * n, n * n);
    for vk in sys.kraus() {
        matrix = &matrix + &kron(vk, &vk.conjugate());
    }
    let gram = kron(&CMatrix::identity(n), &sys.rho().transpose());
    let balance_dev = (&gram * &matrix).max_abs_diff(&(&matrix.adjoint() * &gram));
    TransferOperator {
        n,
        matrix,
        detailed_balance: balance_dev <= BALANCE_TOL,
        rho: sys.rho().clone(),
    }
}

/// Direct (non-vectorized) application of the channel: Σ_k v_k·x·v_k*.
pub fn channel_apply(sys: &PopescuSystem, x: &CMatrix) -> CMatrix {
    let mut acc = CMatrix::zeros(sys.n(), sys.n());
    for vk in sys.kraus() {
        acc = &acc + &(&(vk * x) * &vk.adjoint());
    }
    acc
}

/// Direct application of the dual map: Σ_k v_k*·x·v_k.
pub fn channel_dual_apply(sys: &PopescuSystem, x: &CMatrix) -> CMatrix {
    let mut acc = CMatrix::zeros(sys.n(), sys.n());
    for vk in sys.kraus() {
        acc = &acc + &(&(&vk.adjoint() * x) * vk);
    }
    acc
}

/// Spectral summary of a transfer operator.
///
/// `alpha` is the distance-independent decay rate: the largest eigenvalue
/// modulus remaining after deflating the Perron fixed point, restricted to
/// the non-peripheral spectrum. `correlation_length` is ξ = −1/ln α, with
/// the convention ξ = 0 when α = 0.
#[derive(Clone, Debug)]
pub struct SpectralReport {
    /// All n² eigenvalues, sorted by decreasing modulus, ties by argument.
    pub eigenvalues: Vec<C64>,
    /// Eigenvalues with |λ| ≥ 1 − 1e−8, same order.
    pub peripheral: Vec<C64>,
    /// Max |λ| over the non-peripheral spectrum after deflation; in [0, 1).
    pub alpha: f64,
    /// ξ = −1/ln α (0 when α = 0).
    pub correlation_length: f64,
    /// The fixed space of τ is one-dimensional (unit eigenvalue simple).
    pub ergodic: bool,
    /// The peripheral spectrum is exactly {1}, simple.
    pub strongly_mixing: bool,
}

/// Computes the spectral report of a transfer operator.
///
/// The deflation subtracts the rank-one Perron pair P = vec(I)·vec(rho)†
/// (right fixed vector vec(I), left fixed vector vec(rho)). P is idempotent
/// and satisfies T·P = P·T = P, so T − P has the spectrum of T with exactly
/// one unit eigenvalue replaced by 0 — verified numerically, since it is the
/// correctness condition of the whole deflation.
pub fn spectral_report(op: &TransferOperator) -> Result<SpectralReport, TransferError> {
    let n = op.n;
    let kms = if op.detailed_balance {
        kms_weight_roots(&op.rho)
    } else {
        None
    };
    let mut eigs = transfer_spectrum(&op.matrix, kms.as_ref())?;
    sort_eigenvalues(&mut eigs);
    let unit_count = eigs
        .iter()
        .filter(|z| (*z - C64::new(1.0, 0.0)).norm() <= PERIPHERAL_TOL)
        .count();
    if unit_count == 0 {
        return Err(TransferError::InternalConsistency {
            what: "transfer operator has no unit eigenvalue (not unital?)".into(),
        });
    }
    let peripheral: Vec<C64> = eigs
        .iter()
        .copied()
        .filter(|z| z.norm() >= 1.0 - PERIPHERAL_TOL)
        .collect();

    // Rank-one deflation of the Perron pair: subtract vec(I)·vec(rho)†.
    let vec_id = CMatrix::identity(n);
    let id_entries = vec_id.entries();
    let rho_entries = op.rho.entries();
    let mut deflated = op.matrix.clone();
    for i in 0..n * n {
        for j in 0..n * n {
            deflated[(i, j)] -= id_entries[i] * rho_entries[j].conj();
        }
    }

    let deflated_eigs = transfer_spectrum(&deflated, kms.as_ref())?;
    let deflated_unit_count = deflated_eigs
        .iter()
        .filter(|z| (*z - C64::new(1.0, 0.0)).norm() <= PERIPHERAL_TOL)
        .count();
    if deflated_unit_count + 1 != unit_count {
        return Err(TransferError::InternalConsistency {
            what: format!(
                "deflation removed {} unit eigenvalues instead of exactly one ({} before, {} after)",
                unit_count - deflated_unit_count.min(unit_count),
                unit_count,
                deflated_unit_count
            ),
        });
    }

    let alpha = deflated_eigs
        .iter()
        .map(|z| z.norm())
        .filter(|r| *r < 1.0 - PERIPHERAL_TOL)
        .fold(0.0_f64, f64::max);
    let correlation_length = if alpha <= 0.0 { 0.0 } else { -1.0 / alpha.ln() };
    let ergodic = unit_count == 1;
    let strongly_mixing = ergodic && peripheral.len() == 1;

    Ok(SpectralReport {
        eigenvalues: eigs,
        peripheral,
        alpha,
        correlation_length,
        ergodic,
        strongly_mixing,
    })
}

/// Spectrum of a transfer-like matrix, routed by structure.
///
/// With KMS weight roots available (detailed balance holds), the matrix is
/// exactly similar to the Hermitian G^{1/2}·M·G^{−1/2}, whose spectrum the
/// symmetric eigensolver computes robustly even under the heavy degeneracies
/// these operators carry. The similarity also covers the Perron-deflated
/// matrix: G·vec(I)·vec(rho)† = vec(rho)·vec(rho)† = (vec(I)·vec(rho)†)†·G.
/// The Hermitian route is only trusted when the rotated matrix is in fact
/// Hermitian to working precision; otherwise fall through to the general
/// Schur solver.
fn transfer_spectrum(
    m: &CMatrix,
    kms: Option<&(CMatrix, CMatrix)>,
) -> Result<Vec<C64>, TransferError> {
    if let Some((g_half, g_half_inv)) = kms {
        let sym = &(g_half * m) * g_half_inv;
        if sym.max_abs_diff(&sym.adjoint()) <= 1e-7 {
            let vals = hermitian_eigenvalues(&sym)?;
            return Ok(vals.into_iter().map(|r| C64::new(r, 0.0)).collect());
        }
    }
    Ok(eigenvalues(m)?)
}

/// The square roots G^{±1/2} of the KMS weight G = I ⊗ rhoᵀ, from the
/// Hermitian eigendecomposition of rhoᵀ. Returns None if rho is too close
/// to singular for the inverse root to be meaningful (the faithfulness
/// validation makes this unreachable for systems built in this crate).
fn kms_weight_roots(rho: &CMatrix) -> Option<(CMatrix, CMatrix)> {
    let n = rho.rows();
    let (vals, vecs) = hermitian_eigen(&rho.transpose()).ok()?;
    if vals.iter().any(|&lambda| lambda <= 1e-14) {
        return None;
    }
    let mut root = CMatrix::zeros(n, n);
    let mut inv_root = CMatrix::zeros(n, n);
    for (k, &lambda) in vals.iter().enumerate() {
        let r = lambda.sqrt();
        for i in 0..n {
            for j in 0..n {
                let outer = vecs[(i, k)] * vecs[(j, k)].conj();
                root[(i, j)] += outer.scale(r);
                inv_root[(i, j)] += outer.scale(1.0 / r);
            }
        }
    }
    let id = CMatrix::identity(n);
    Some((kron(&id, &root), kron(&id, &inv_root)))
}

/// Σ_{ij} coeff[i,j]·v_i·x·v_j* — the coefficient-weighted channel through
/// which a single-site observable enters a correlator contraction.
fn observable_channel(
    sys: &PopescuSystem,
    coeff: &CMatrix,
    x: &CMatrix,
) -> Result<CMatrix, TransferError> {
    let d = sys.d();
    if coeff.rows() != d || coeff.cols() != d {
        return Err(TransferError::ObservableShape {
            rows: coeff.rows(),
            cols: coeff.cols(),
            d,
        });
    }
    let v = sys.kraus();
    let mut acc = CMatrix::zeros(sys.n(), sys.n());
    for i in 0..d {
        let vi_x = &v[i] * x;
        for j in 0..d {
            let c = coeff[(i, j)];
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            acc = &acc + &(&vi_x * &v[j].adjoint()).scaled(c);
        }
    }
    Ok(acc)
}

/// Single-site expectation ω(A) = trace(rho·Σ A[i,j]·v_i·v_j*).
fn site_expectation(sys: &PopescuSystem, a: &CMatrix) -> Result<C64, TransferError> {
    let ea = observable_channel(sys, a, &CMatrix::identity(sys.n()))?;
    Ok((sys.rho() * &ea).trace())
}

/// The two-point function ω(A ⊗ 1^{k−1} ⊗ B) for single-site observables at
/// distance k ≥ 1 (k = 1 means adjacent sites), computed as the trace
/// contraction trace(rho·E_A(τ^{k−1}(E_B(I)))).
pub fn two_point(
    sys: &PopescuSystem,
    a: &CMatrix,
    b: &CMatrix,
    k: usize,
) -> Result<C64, TransferError> {
    Ok(two_point_series(sys, a, b, k)?
        .pop()
        .expect("series of length k ≥ 1"))
}

/// [`two_point`] for every distance 1, …, k_max in one sweep (each step is
/// one application of τ, so the whole series costs what the farthest
/// distance alone would).
pub fn two_point_series(
    sys: &PopescuSystem,
    a: &CMatrix,
    b: &CMatrix,
    k_max: usize,
) -> Result<Vec<C64>, TransferError> {
    if k_max < 1 {
        return Err(TransferError::InvalidDistance { k: k_max });
    }
    let mut x = observable_channel(sys, b, &CMatrix::identity(sys.n()))?;
    let mut out = Vec::with_capacity(k_max);
    for step in 1..=k_max {
        let ea = observable_channel(sys, a, &x)?;
        out.push((sys.rho() * &ea).trace());
        if step != k_max {
            x = channel_apply(sys, &x);
        }
    }
    Ok(out)
}

/// Result of fitting measured connected-correlator decay against the
/// spectral gap α.
#[derive(Clone, Debug)]
pub struct DecayCertificate {
    /// Spectral decay rate from [`spectral_report`].
    pub alpha: f64,
    /// Least-squares slope of ln|c_k| against k, pooled over all observable
    /// pairs and all k with |c_k| > 1e−13. `None` when fewer than two such
    /// points exist (e.g. a product state with no correlations) — a
    /// degenerate fit.
    pub fitted_rate: Option<f64>,
    /// Smallest C with |c_k| ≤ C·αᵏ across the measured range (0 when α = 0).
    pub prefactor: f64,
    /// max_k (|c_k| − C·αᵏ). Non-positive by construction of C whenever
    /// α > 0; for α = 0 it reports the largest measured |c_k| honestly.
    pub max_violation: f64,
}

/// Measures connected correlators c_k = ω(A⊗1^{k−1}⊗B) − ω(A)·ω(B) for every
/// ordered pair of the given observables and distances k ≤ k_max, and
/// certifies their exponential decay against the spectral gap.
///
/// Requires a strongly mixing transfer operator — peripheral spectrum other
/// than the simple unit eigenvalue makes correlations non-decaying and the
/// certificate meaningless, so that case is an error naming the peripheral
/// eigenvalues. Pairs with identically vanishing correlators (e.g. A = I)
/// contribute no fit points and are thereby excluded.
pub fn decay_certificate(
    sys: &PopescuSystem,
    observables: &[CMatrix],
    k_max: usize,
) -> Result<DecayCertificate, TransferError> {
    if observables.is_empty() {
        return Err(TransferError::NoObservables);
    }
    if k_max < 1 {
        return Err(TransferError::InvalidDistance { k: k_max });
    }
    let op = build_transfer(sys);
    let report = spectral_report(&op)?;
    if !report.strongly_mixing {
        return Err(TransferError::NotMixing {
            peripheral: report.peripheral,
        });
    }
    let alpha = report.alpha;

    let means: Vec<C64> = observables
        .iter()
        .map(|a| site_expectation(sys, a))
        .collect::<Result<_, _>>()?;

    let mut moduli: Vec<(usize, f64)> = Vec::new();
    for (a, mean_a) in observables.iter().zip(&means) {
        for (b, mean_b) in observables.iter().zip(&means) {
            let series = two_point_series(sys, a, b, k_max)?;
            for (idx, value) in series.iter().enumerate() {
                let c_k = value - mean_a * mean_b;
                moduli.push((idx + 1, c_k.norm()));
            }
        }
    }

    // Pooled least-squares fit of ln|c_k| against k over the points above
    // the noise floor.
    let points: Vec<(f64, f64)> = moduli
        .iter()
        .filter(|(_, r)| *r > FIT_FLOOR)
        .map(|(k, r)| (*k as f64, r.ln()))
        .collect();
    let fitted_rate = if points.len() < 2 {
        None
    } else {
        let count = points.len() as f64;
        let sum_k: f64 = points.iter().map(|(k, _)| k).sum();
        let sum_y: f64 = points.iter().map(|(_, y)| y).sum();
        let sum_kk: f64 = points.iter().map(|(k, _)| k * k).sum();
        let sum_ky: f64 = points.iter().map(|(k, y)| k * y).sum();
        let denom = count * sum_kk - sum_k * sum_k;
        if denom.abs() < 1e-12 {
            None
        } else {
            Some((count * sum_ky - sum_k * sum_y) / denom)
        }
    };

    let (prefactor, max_violation) = if alpha > 0.0 {
        let c = moduli
            .iter()
            .map(|(k, r)| r / alpha.powi(*k as i32))
            .fold(0.0_f64, f64::max);
        let violation = moduli
            .iter()
            .map(|(k, r)| r - c * alpha.powi(*k as i32))
            .fold(f64::NEG_INFINITY, f64::max);
        (c, violation)
    } else {
        let worst = moduli.iter().map(|(_, r)| *r).fold(0.0_f64, f64::max);
        (0.0, worst)
    };

    Ok(DecayCertificate {
        alpha,
        fitted_rate,
        prefactor,
        max_violation,
    })
}

/// Portable JSON form of a spectral report (plus the detailed-balance flag
/// of the operator it came from). Eigenvalues as [re, im] pairs, sorted by
/// decreasing modulus then argument; `xi` is the correlation length.
#[derive(Serialize, Deserialize)]
pub struct SpectralDocument {
    pub eigenvalues: Vec<[f64; 2]>,
    pub alpha: f64,
    pub xi: f64,
    pub ergodic: bool,
    pub strongly_mixing: bool,
    pub detailed_balance: bool,
}

impl SpectralDocument {
    pub fn new(report: &SpectralReport, detailed_balance: bool) -> Self {
        Self {
            eigenvalues: report.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            alpha: report.alpha,
            xi: report.correlation_length,
            ergodic: report.ergodic,
            strongly_mixing: report.strongly_mixing,
            detailed_balance,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spectral document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
