//! Popescu systems and the translation-invariant states they generate.
//!
//! A Popescu system is a d-tuple of n×n matrices v_k with Σ_k v_k·v_k* = I
//! together with a faithful density matrix rho invariant under the dual of
//! the completely positive map τ(x) = Σ_k v_k·x·v_k*. Such a system defines a
//! translation-invariant state ω on the spin chain through the word
//! amplitudes ω(e^{i₁}_{j₁} ⊗ … ⊗ e^{i_m}_{j_m}) = trace(rho·v_I·v_J*).
//!
//! The covariant construction takes a site spin s and an auxiliary spin t
//! with t occurring in the decomposition of s ⊗ t, forms the Clebsch-Gordan
//! isometry W: ℂⁿ → ℂᵈ⊗ℂⁿ onto the spin-t subrepresentation, and slices it
//! into Kraus operators v_k* = (⟨e_k|⊗I)·W. The resulting state is invariant
//! under the global SU(2) action, has the tracial invariant state rho = I/n,
//! and satisfies trace identities (φ₀(v_i·v_j*) = δ_ij/d) that tests and the
//! acceptance suite pin down.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{hermitian_eigenvalues, kron, CMatrix, NumericsError, C64};
use crate::su2::{cg_coefficient, feasible_aux, make_irrep, Irrep, Spin};

/// Acceptance tolerance for the structural invariants of an incoming system
/// (Popescu relation, rho a faithful invariant state). Constructed systems
/// satisfy these to ~1e−14; the looser bound admits externally produced
/// files without letting structurally wrong data through.
const SYSTEM_TOL: f64 = 1e-8;

/// Cap on dᵐ for the brute-force oracle.
const ORACLE_CAP: usize = 10_000;

/// Cap on the window size m of the symmetry deviation scans, which enumerate
/// all d^{2m} elementary observables.
const CHECK_WINDOW_CAP: usize = 5;

/// Errors from system construction and state evaluation.
#[derive(Debug, Error)]
pub enum FcsError {
    /// The covariant construction was asked for an infeasible (s, t) pair.
    #[error("no covariant system exists for site spin s={s}, auxiliary spin t={t}: t − |t − s| = {excess} must be a nonnegative integer (t must occur in the decomposition of s ⊗ t)")]
    Infeasible { s: Spin, t: Spin, excess: String },
    /// A word letter fell outside the site alphabet.
    #[error("word letter {letter} out of range for site dimension d={d} (letters are 0-based)")]
    LetterOutOfRange { letter: usize, d: usize },
    /// An observable's dimension is not a power of the site dimension.
    #[error("observable of shape {rows}x{cols} does not act on m ≥ 1 sites of dimension {d} (expected dᵐ×dᵐ)")]
    ObservableShape { rows: usize, cols: usize, d: usize },
    /// The brute-force oracle was asked to enumerate too many words.
    #[error("brute-force oracle supports dᵐ ≤ {cap}, got {dim}")]
    OracleScale { dim: usize, cap: usize },
    /// Symmetry scans enumerate all d^{2m} elementary observables; m is capped.
    #[error("symmetry deviation scan supports windows m ≤ {cap}, got {m}")]
    WindowTooLarge { m: usize, cap: usize },
    /// Structural validation of a system failed.
    #[error("invalid Popescu system: {what}")]
    InvalidSystem { what: String },
    /// No invariant state could be computed for the given Kraus family.
    #[error("could not compute an invariant state: {what}")]
    FixedPointFailure { what: String },
    /// JSON (de)serialization failure.
    #[error("system document parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// A Popescu system: site dimension d, auxiliary dimension n, Kraus matrices
/// v_k (k = 0, …, d−1, each n×n, Σ v_k·v_k* = I), and the density matrix rho
/// of the faithful invariant state φ₀(x) = trace(rho·x).
#[derive(Clone, Debug)]
pub struct PopescuSystem {
    d: usize,
    n: usize,
    v: Vec<CMatrix>,
    rho: CMatrix,
}

impl PopescuSystem {
    /// Validates and wraps a Kraus family and invariant state.
    ///
    /// Checks, each within an absolute tolerance of 1e−8: the Popescu
    /// relation Σ v_k·v_k* = I; rho Hermitian, trace 1, positive
    /// semidefinite and invertible (faithfulness); and invariance
    /// Σ v_k*·rho·v_k = rho.
    pub fn new(v: Vec<CMatrix>, rho: CMatrix) -> Result<Self, FcsError> {
        let d = v.len();
        if d == 0 {
            return Err(FcsError::InvalidSystem {
                what: "need at least one Kraus matrix".into(),
            });
        }
        let n = v[0].rows();
        for (k, vk) in v.iter().enumerate() {
            if !vk.is_square() || vk.rows() != n {
                return Err(FcsError::InvalidSystem {
                    what: format!(
                        "Kraus matrix {k} has shape {}x{}, expected {n}x{n}",
                        vk.rows(),
                        vk.cols()
                    ),
                });
            }
        }
        if !rho.is_square() || rho.rows() != n {
            return Err(FcsError::InvalidSystem {
                what: format!(
                    "rho has shape {}x{}, expected {n}x{n}",
                    rho.rows(),
                    rho.cols()
                ),
            });
        }

        let mut sum = CMatrix::zeros(n, n);
        for vk in &v {
            sum = &sum + &(vk * &vk.adjoint());
        }
        let popescu_dev = sum.max_abs_diff(&CMatrix::identity(n));
        if popescu_dev > SYSTEM_TOL {
            return Err(FcsError::InvalidSystem {
                what: format!("Popescu relation Σ v_k v_k* = I violated by {popescu_dev:.3e}"),
            });
        }

        if !rho.is_hermitian(SYSTEM_TOL) {
            return Err(FcsError::InvalidSystem {
                what: "rho is not Hermitian".into(),
            });
        }
        let tr = rho.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > SYSTEM_TOL {
            return Err(FcsError::InvalidSystem {
                what: format!("rho has trace {tr}, expected 1"),
            });
        }
        // rho is Hermitian, so its spectrum is real; positivity and
        // invertibility (faithfulness of φ₀) are read off the eigenvalues.
        let min_eig = hermitian_eigenvalues(&rho)?
            .first()
            .copied()
            .unwrap_or(f64::INFINITY);
        if min_eig < 1e-12 {
            return Err(FcsError::InvalidSystem {
                what: format!(
                    "rho must be positive definite (faithful state); smallest eigenvalue {min_eig:.3e}"
                ),
            });
        }

        let mut dual = CMatrix::zeros(n, n);
        for vk in &v {
            dual = &dual + &(&(&vk.adjoint() * &rho) * vk);
        }
        let inv_dev = dual.max_abs_diff(&rho);
        if inv_dev > SYSTEM_TOL {
            return Err(FcsError::InvalidSystem {
                what: format!("rho is not invariant: ‖Σ v_k* rho v_k − rho‖ = {inv_dev:.3e}"),
            });
        }

        Ok(Self { d, n, v, rho })
    }

    /// Builds a system from Kraus matrices alone, computing the invariant
    /// state as the fixed point of the dual map x ↦ Σ v_k*·x·v_k (power
    /// iteration with running average, falling back to a null-space solve).
    pub fn from_kraus(v: Vec<CMatrix>) -> Result<Self, FcsError> {
        if v.is_empty() {
            return Err(FcsError::InvalidSystem {
                what: "need at least one Kraus matrix".into(),
            });
        }
        let n = v[0].rows();
        let rho = invariant_state(&v, n)?;
        Self::new(v, rho)
    }

    /// Site dimension d.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Auxiliary dimension n.
    pub fn n(&self) -> usize {
        self.n
    }

    /// The Kraus matrices v_0, …, v_{d−1}.
    pub fn kraus(&self) -> &[CMatrix] {
        &self.v
    }

    /// Density matrix of the invariant state.
    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    /// The state evaluated on a word pair: trace(rho·v_I·v_J*) with
    /// v_I = v_{i₁}···v_{i_m}. Letters are 0-based site indices. When
    /// |I| = |J| = m this equals ω(e^{i₁}_{j₁} ⊗ … ⊗ e^{i_m}_{j_m}).
    pub fn word_amplitude(&self, i_word: &[usize], j_word: &[usize]) -> Result<C64, FcsError> {
        let vi = self.word_product(i_word)?;
        let vj = self.word_product(j_word)?;
        Ok((&(&self.rho * &vi) * &vj.adjoint()).trace())
    }

    fn word_product(&self, word: &[usize]) -> Result<CMatrix, FcsError> {
        let mut acc = CMatrix::identity(self.n);
        for &letter in word {
            if letter >= self.d {
                return Err(FcsError::LetterOutOfRange { letter, d: self.d });
            }
            acc = &acc * &self.v[letter];
        }
        Ok(acc)
    }

    /// Number of sites m with dᵐ = rows, or an error if rows is not a power
    /// of d (for d = 1 every observable is 1×1 and m is reported as 1).
    fn window_of(&self, q: &CMatrix) -> Result<usize, FcsError> {
        let shape_err = || FcsError::ObservableShape {
            rows: q.rows(),
            cols: q.cols(),
            d: self.d,
        };
        if !q.is_square() {
            return Err(shape_err());
        }
        let mut dim = self.d;
        let mut m = 1;
        while dim < q.rows() {
            dim = dim.checked_mul(self.d).ok_or_else(shape_err)?;
            m += 1;
            if self.d == 1 {
                return Err(shape_err());
            }
        }
        if dim != q.rows() {
            return Err(shape_err());
        }
        Ok(m)
    }

    /// Expectation ω(Q) of an m-site observable Q (a dᵐ×dᵐ matrix), computed
    /// by a site-by-site contraction rather than word enumeration.
    ///
    /// The contraction stacks the isometry K: ℂⁿ → ℂᵈ⊗ℂⁿ, K[(k,a),b] =
    /// v_k*[a,b], site by site into K⁽ᵐ⁾ = (I_{d^{m−1}}⊗K)···(I_d⊗K)·K and
    /// evaluates ω(Q) = trace(rho · K⁽ᵐ⁾* (Q⊗I_n) K⁽ᵐ⁾). Cost is dominated by
    /// the d^{2m}·n² sandwich with Q — polynomial in the observable size —
    /// instead of the d^{2m} matrix-product words of the brute-force oracle.
    pub fn local_expectation(&self, q: &CMatrix) -> Result<C64, FcsError> {
        let m = self.window_of(q)?;
        let (d, n) = (self.d, self.n);

        // K as d stacked n×n blocks: block k holds v_k*.
        let k_blocks: Vec<CMatrix> = self.v.iter().map(|vk| vk.adjoint()).collect();

        // K⁽ᵐ⁾ as dᵐ stacked n×n blocks, built site by site: appending a site
        // maps block p (an n×n matrix B_p) to the d blocks v_k*·B_p.
        let mut blocks: Vec<CMatrix> = k_blocks.clone();
        for _ in 1..m {
            let mut next = Vec::with_capacity(blocks.len() * d);
            for b in &blocks {
                for kb in &k_blocks {
                    next.push(kb * b);
                }
            }
            // Site ordering: the first site is the most significant index, so
            // the new site's letter must vary fastest... it does not: K⁽ᵐ⁾ =
            // (I⊗K)·K⁽ᵐ⁻¹⁾ puts the previous letters in the leading factor.
            // The loop above produces index (p, k) with p leading — matching
            // words w = (p₁,…,p_{m−1}, k) where the *last* letter is the new
            // one, i.e. K⁽ᵐ⁾ block I = (i₁,…,i_m) holds v_{i_m}*···v_{i₁}*.
            blocks = next;
        }

        // R_I = Σ_J Q[I,J]·B_J, then M = Σ_I B_I*·R_I, then ω = tr(rho·M).
        let dm = blocks.len();
        debug_assert_eq!(dm, q.rows());
        let mut m_acc = CMatrix::zeros(n, n);
        for i_idx in 0..dm {
            let mut r = CMatrix::zeros(n, n);
            for j_idx in 0..dm {
                let coeff = q[(i_idx, j_idx)];
                if coeff.re == 0.0 && coeff.im == 0.0 {
                    continue;
                }
                r = &r + &blocks[j_idx].scaled(coeff);
            }
            m_acc = &m_acc + &(&blocks[i_idx].adjoint() * &r);
        }
        Ok((&self.rho * &m_acc).trace())
    }

    /// Brute-force oracle for [`Self::local_expectation`]: the literal double
    /// sum Σ_{I,J} Q[I,J]·trace(rho·v_I·v_J*) over all word pairs, with no
    /// algebraic shortcuts. Exists solely for validation; capped at dᵐ ≤ 10⁴.
    pub fn brute_force_expectation(&self, q: &CMatrix) -> Result<C64, FcsError> {
        let m = self.window_of(q)?;
        let dm = q.rows();
        if dm > ORACLE_CAP {
            return Err(FcsError::OracleScale {
                dim: dm,
                cap: ORACLE_CAP,
            });
        }
        let mut total = C64::new(0.0, 0.0);
        let mut word = vec![0usize; m];
        for i_idx in 0..dm {
            decode_word(i_idx, self.d, &mut word);
            let vi = self.word_product(&word)?;
            let rho_vi = &self.rho * &vi;
            for j_idx in 0..dm {
                decode_word(j_idx, self.d, &mut word);
                let vj = self.word_product(&word)?;
                total += q[(i_idx, j_idx)] * (&rho_vi * &vj.adjoint()).trace();
            }
        }
        Ok(total)
    }

    /// Deviation of ω from reflection symmetry on windows of m sites: the
    /// maximum over all elementary observables Q = e^{i₁}_{j₁}⊗…⊗e^{i_m}_{j_m}
    /// of |ω(Q) − ω(Q̃)|, where Q̃ reverses the tensor factors. Zero means the
    /// state looks reflection-symmetric at window size m.
    pub fn state_reflect_check(&self, m: usize) -> Result<f64, FcsError> {
        let amps = self.amplitude_table(m)?;
        let dm = amps.reversal.len();
        let mut dev: f64 = 0.0;
        for i_idx in 0..dm {
            for j_idx in 0..dm {
                let diff =
                    amps.get(i_idx, j_idx) - amps.get(amps.reversal[i_idx], amps.reversal[j_idx]);
                dev = dev.max(diff.norm());
            }
        }
        Ok(dev)
    }

    /// Deviation of ω from reality on windows of m sites: the maximum over
    /// elementary observables Q of |ω(Q) − ω(Qᵗ)| with the transpose applied
    /// per site. On elementary observables the per-site transpose swaps the
    /// two words, so this scans |amp(I,J) − amp(J,I)|.
    pub fn state_real_check(&self, m: usize) -> Result<f64, FcsError> {
        let amps = self.amplitude_table(m)?;
        let dm = amps.reversal.len();
        let mut dev: f64 = 0.0;
        for i_idx in 0..dm {
            for j_idx in i_idx..dm {
                let diff = amps.get(i_idx, j_idx) - amps.get(j_idx, i_idx);
                dev = dev.max(diff.norm());
            }
        }
        Ok(dev)
    }

    /// All length-m word products and amplitudes, with the index-reversal
    /// permutation (shared plumbing of the two symmetry scans).
    fn amplitude_table(&self, m: usize) -> Result<AmplitudeTable, FcsError> {
        if m == 0 || m > CHECK_WINDOW_CAP {
            return Err(FcsError::WindowTooLarge {
                m,
                cap: CHECK_WINDOW_CAP,
            });
        }
        let d = self.d;
        // Word products by prefix extension: products of length l+1 are
        // (product of length l)·v_k, ordered with the first letter most
        // significant — matching the multi-index convention of kron.
        let mut prods: Vec<CMatrix> = self.v.clone();
        for _ in 1..m {
            let mut next = Vec::with_capacity(prods.len() * d);
            for p in &prods {
                for vk in &self.v {
                    next.push(p * vk);
                }
            }
            prods = next;
        }
        let dm = prods.len();
        let rho_prods: Vec<CMatrix> = prods.iter().map(|p| &self.rho * p).collect();
        let mut reversal = vec![0usize; dm];
        let mut word = vec![0usize; m];
        for (idx, slot) in reversal.iter_mut().enumerate() {
            decode_word(idx, d, &mut word);
            word.reverse();
            *slot = encode_word(&word, d);
        }
        Ok(AmplitudeTable {
            prods,
            rho_prods,
            reversal,
        })
    }

    /// The same state in a rotated auxiliary basis: v_k ↦ w·v_k·w*, rho ↦
    /// w·rho·w* for unitary w. Word amplitudes are unchanged — systems
    /// related this way are indistinguishable.
    pub fn unitary_conjugate(&self, w: &CMatrix) -> Result<Self, FcsError> {
        if !w.is_square() || w.rows() != self.n {
            return Err(FcsError::InvalidSystem {
                what: format!(
                    "conjugating unitary has shape {}x{}, expected {n}x{n}",
                    w.rows(),
                    w.cols(),
                    n = self.n
                ),
            });
        }
        let w_adj = w.adjoint();
        let v = self
            .v
            .iter()
            .map(|vk| &(w * vk) * &w_adj)
            .collect::<Vec<_>>();
        let rho = &(w * &self.rho) * &w_adj;
        Self::new(v, rho)
    }

    /// The system with site basis rotated by a unitary g on ℂᵈ:
    /// v_k ↦ Σ_j g[k,j]·v_j. The new system generates the state
    /// ω′(Q) = ω(gᵀQ̄g-rotated Q); expectations of correspondingly rotated
    /// observables are invariant.
    pub fn site_gauge(&self, g: &CMatrix) -> Result<Self, FcsError> {
        if !g.is_square() || g.rows() != self.d {
            return Err(FcsError::InvalidSystem {
                what: format!(
                    "site gauge has shape {}x{}, expected {d}x{d}",
                    g.rows(),
                    g.cols(),
                    d = self.d
                ),
            });
        }
        let v = (0..self.d)
            .map(|k| {
                let mut acc = CMatrix::zeros(self.n, self.n);
                for j in 0..self.d {
                    acc = &acc + &self.v[j].scaled(g[(k, j)]);
                }
                acc
            })
            .collect::<Vec<_>>();
        Self::new(v, self.rho.clone())
    }

    /// Serializes to the portable JSON system document.
    pub fn to_json(&self) -> String {
        let doc = SystemDocument {
            d: self.d,
            n: self.n,
            v: self.v.iter().map(matrix_to_pairs).collect(),
            rho: matrix_to_pairs(&self.rho),
        };
        serde_json::to_string_pretty(&doc).expect("system document serializes")
    }

    /// Parses and validates a portable JSON system document.
    pub fn from_json(text: &str) -> Result<Self, FcsError> {
        let doc: SystemDocument = serde_json::from_str(text)?;
        if doc.v.len() != doc.d {
            return Err(FcsError::InvalidSystem {
                what: format!(
                    "document declares d={} but carries {} matrices",
                    doc.d,
                    doc.v.len()
                ),
            });
        }
        let v = doc
            .v
            .iter()
            .map(|entries| pairs_to_matrix(entries, doc.n))
            .collect::<Result<Vec<_>, _>>()?;
        let rho = pairs_to_matrix(&doc.rho, doc.n)?;
        Self::new(v, rho)
    }
}

struct AmplitudeTable {
    prods: Vec<CMatrix>,
    rho_prods: Vec<CMatrix>,
    reversal: Vec<usize>,
}

impl AmplitudeTable {
    /// amp(I, J) = trace(rho·v_I·v_J*), via Σ_{a,b} (rho·v_I)[a,b]·conj(v_J[a,b]).
    fn get(&self, i_idx: usize, j_idx: usize) -> C64 {
        let ri = &self.rho_prods[i_idx];
        let vj = &self.prods[j_idx];
        ri.entries()
            .iter()
            .zip(vj.entries())
            .map(|(a, b)| a * b.conj())
            .sum()
    }
}

/// Digits of `idx` base `d`, most significant first, into `out`.
fn decode_word(idx: usize, d: usize, out: &mut [usize]) {
    let mut rem = idx;
    for slot in out.iter_mut().rev() {
        *slot = rem % d;
        rem /= d;
    }
    debug_assert_eq!(rem, 0);
}

fn encode_word(word: &[usize], d: usize) -> usize {
    word.iter().fold(0, |acc, &w| acc * d + w)
}

/// Fixed point of the dual map x ↦ Σ v_k*·x·v_k, Hermitian and trace-one.
///
/// Strategy: power iteration with a running (Cesàro) average starting from
/// I/n — exact immediately whenever I/n is invariant, geometrically fast for
/// ergodic aperiodic systems — falling back to a singular-vector solve of
/// (D − I)x = 0 projected onto the starting point when peripheral spectrum
/// makes iteration stall.
fn invariant_state(v: &[CMatrix], n: usize) -> Result<CMatrix, FcsError> {
    let apply_dual = |x: &CMatrix| {
        let mut acc = CMatrix::zeros(n, n);
        for vk in v {
            acc = &acc + &(&(&vk.adjoint() * x) * vk);
        }
        acc
    };

    let start = CMatrix::identity(n).scaled(C64::new(1.0 / n as f64, 0.0));
    let residual = |x: &CMatrix| apply_dual(x).max_abs_diff(x);

    // Power iteration with running average.
    let mut current = start.clone();
    let mut average = start.clone();
    let mut best = start.clone();
    let mut best_res = residual(&best);
    for step in 1..=2000 {
        if best_res <= 1e-13 {
            break;
        }
        current = apply_dual(&current);
        let weight = C64::new(1.0 / (step + 1) as f64, 0.0);
        average = &average.scaled(C64::new(step as f64, 0.0) * weight) + &current.scaled(weight);
        for candidate in [&current, &average] {
            let res = residual(candidate);
            if res < best_res {
                best = candidate.clone();
                best_res = res;
            }
        }
    }

    if best_res > 1e-11 {
        // Null-space fallback: smallest singular vectors of D − I span the
        // fixed space; project the tracial starting point onto it.
        let mut dual_matrix = CMatrix::zeros(n * n, n * n);
        for vk in v {
            dual_matrix = &dual_matrix + &kron(&vk.adjoint(), &vk.transpose());
        }
        let shifted = &dual_matrix - &CMatrix::identity(n * n);
        let na =
            nalgebra::DMatrix::from_row_iterator(n * n, n * n, shifted.entries().iter().cloned());
        let svd = na.svd(false, true);
        let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
        let start_vec: Vec<C64> = start.entries().to_vec();
        let mut proj = vec![C64::new(0.0, 0.0); n * n];
        for (row, sigma) in svd.singular_values.iter().enumerate() {
            if *sigma > 1e-10 {
                continue;
            }
            // Right singular vector = conjugated row of Vᵀ.
            let basis: Vec<C64> = (0..n * n).map(|c| v_t[(row, c)].conj()).collect();
            let overlap: C64 = basis
                .iter()
                .zip(&start_vec)
                .map(|(b, s)| b.conj() * s)
                .sum();
            for (p, b) in proj.iter_mut().zip(&basis) {
                *p += overlap * b;
            }
        }
        let candidate = CMatrix::new(n, n, proj)?;
        best = candidate;
        best_res = residual(&best);
        if best_res > 1e-9 {
            return Err(FcsError::FixedPointFailure {
                what: format!(
                    "iteration and null-space solve both stalled (residual {best_res:.3e})"
                ),
            });
        }
    }

    // Hermitize and normalize; validation happens in PopescuSystem::new.
    let hermitian = (&best + &best.adjoint()).scaled(C64::new(0.5, 0.0));
    let tr = hermitian.trace();
    if tr.norm() < 1e-12 {
        return Err(FcsError::FixedPointFailure {
            what: "fixed point has vanishing trace".into(),
        });
    }
    Ok(hermitian.scaled(C64::new(1.0, 0.0) / tr))
}

/// A Popescu system built from Clebsch-Gordan data, remembering its spins and
/// the auxiliary representation that implements the symmetry.
#[derive(Clone, Debug)]
pub struct CovariantSystem {
    base: PopescuSystem,
    site_spin: Spin,
    aux_spin: Spin,
    aux_rep: Irrep,
}

impl CovariantSystem {
    pub fn base(&self) -> &PopescuSystem {
        &self.base
    }

    pub fn site_spin(&self) -> Spin {
        self.site_spin
    }

    pub fn aux_spin(&self) -> Spin {
        self.aux_spin
    }

    /// Generators of the auxiliary representation u′ on ℂⁿ.
    pub fn aux_rep(&self) -> &Irrep {
        &self.aux_rep
    }

    /// Residual of the infinitesimal covariance relation
    /// [u′_a, v_k] = Σ_j (S_a)_{jk}·v_j for a ∈ {x,y,z}: the maximum over a
    /// and k of the max-norm of the difference. The relation is the
    /// derivative at the identity of u′(g)·v_k·u′(g)* = Σ_j (u(g))_{jk}·v_j,
    /// which itself follows from the intertwining property of the
    /// Clebsch-Gordan isometry the construction slices.
    pub fn covariance_residual(&self) -> f64 {
        let site = make_irrep(self.site_spin);
        let v = self.base.kraus();
        let d = self.base.d();
        let mut worst: f64 = 0.0;
        for (s_a, u_a) in site.generators().into_iter().zip(self.aux_rep.generators()) {
            for k in 0..d {
                let commutator = &(u_a * &v[k]) - &(&v[k] * u_a);
                let mut mixed = CMatrix::zeros(self.base.n(), self.base.n());
                for j in 0..d {
                    mixed = &mixed + &v[j].scaled(s_a[(j, k)]);
                }
                worst = worst.max(commutator.max_abs_diff(&mixed));
            }
        }
        worst
    }
}

/// Builds the covariant system for site spin s and auxiliary spin t.
///
/// Fails unless t occurs in the decomposition of s ⊗ t (see
/// [`feasible_aux`]). The Clebsch-Gordan isometry W: ℂⁿ → ℂᵈ⊗ℂⁿ has entries
/// W[(k,a),b] = ⟨s μ(k); t m(a) | t m(b)⟩ with site weights μ(k) = s, s−1, …,
/// −s and auxiliary weights m(a) = t, t−1, …, −t, both descending. The Kraus
/// matrices are the slices v_k* = (⟨e_k|⊗I)·W; isometry gives Σ v_k·v_k* = I
/// exactly, Schur's lemma gives the dual relation Σ v_k*·v_k = I, and the
/// invariant state is the normalized trace rho = I/n.
pub fn build_covariant(s: Spin, t: Spin) -> Result<CovariantSystem, FcsError> {
    if !feasible_aux(s, t) {
        let excess = i64::from(t.twice()) - (i64::from(t.twice()) - i64::from(s.twice())).abs();
        return Err(FcsError::Infeasible {
            s,
            t,
            excess: if excess % 2 == 0 {
                format!("{}", excess / 2)
            } else {
                format!("{excess}/2")
            },
        });
    }
    let d = s.dimension();
    let n = t.dimension();
    let site_weight = |k: usize| s.twice() as i32 - 2 * k as i32;
    let aux_weight = |a: usize| t.twice() as i32 - 2 * a as i32;

    let v: Vec<CMatrix> = (0..d)
        .map(|k| {
            // v_k[i,j] = conj(W[(k,j),i]); Clebsch-Gordan coefficients are real.
            CMatrix::from_fn(n, n, |i, j| {
                C64::new(
                    cg_coefficient(s, t, t, site_weight(k), aux_weight(j), aux_weight(i)),
                    0.0,
                )
            })
        })
        .collect();

    let rho = CMatrix::identity(n).scaled(C64::new(1.0 / n as f64, 0.0));
    let base = PopescuSystem::new(v, rho)?;
    Ok(CovariantSystem {
        base,
        site_spin: s,
        aux_spin: t,
        aux_rep: make_irrep(t),
    })
}

/// Portable JSON system document: matrices as flat row-major lists of
/// [re, im] pairs.
#[derive(Serialize, Deserialize)]
struct SystemDocument {
    d: usize,
    n: usize,
    v: Vec<Vec<[f64; 2]>>,
    rho: Vec<[f64; 2]>,
}

fn matrix_to_pairs(m: &CMatrix) -> Vec<[f64; 2]> {
    m.entries().iter().map(|z| [z.re, z.im]).collect()
}

fn pairs_to_matrix(entries: &[[f64; 2]], n: usize) -> Result<CMatrix, FcsError> {
    let data: Vec<C64> = entries.iter().map(|[re, im]| C64::new(*re, *im)).collect();
    CMatrix::new(n, n, data).map_err(FcsError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_codec_roundtrips() {
        let mut word = vec![0usize; 3];
        for idx in 0..27 {
            decode_word(idx, 3, &mut word);
            assert_eq!(encode_word(&word, 3), idx);
        }
        decode_word(5, 2, &mut word); // 5 = 101₂
        assert_eq!(word, vec![1, 0, 1]);
    }

    #[test]
    fn empty_words_give_normalization() {
        let sys = build_covariant(Spin::from_twice(2), Spin::from_twice(1)).unwrap();
        let amp = sys.base().word_amplitude(&[], &[]).unwrap();
        assert!((amp - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn letter_out_of_range_is_an_error() {
        let sys = build_covariant(Spin::from_twice(2), Spin::from_twice(1)).unwrap();
        assert!(matches!(
            sys.base().word_amplitude(&[3], &[0]),
            Err(FcsError::LetterOutOfRange { letter: 3, d: 3 })
        ));
    }

    #[test]
    fn infeasible_pair_is_rejected_with_rule() {
        let err = build_covariant(Spin::from_twice(2), Spin::from_twice(0)).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("nonnegative integer"), "got: {text}");
    }

    #[test]
    fn trivial_site_spin_gives_identity_kraus() {
        let sys = build_covariant(Spin::from_twice(0), Spin::from_twice(0)).unwrap();
        assert_eq!(sys.base().d(), 1);
        assert_eq!(sys.base().n(), 1);
        assert!((sys.base().kraus()[0][(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-14);
    }
}
