//! Local Hamiltonians on spin chains: symmetry transforms and predicates, a
//! small zoo of named models, mean energies against Popescu-system states,
//! and the variational sweep over auxiliary spins.
//!
//! A local Hamiltonian is an m-site Hermitian interaction term h₀ whose
//! translates sum to the formal chain Hamiltonian H = Σ_j θ_j(h₀). The
//! predicates here test h₀ for lattice-reflection symmetry, per-site
//! transpose symmetry ("real"), their conjunction (detailed balance), and
//! invariance under the global SU(2) action. The variational sweep evaluates
//! the mean energy ω_t(h₀) of every covariant state with auxiliary spin t on
//! a half-integer grid and reports the minimizer.
//!
//! Normalization: all zoo models are built from spin operators S (eigenvalue
//! spacing 1), not Pauli matrices; energies therefore differ from Pauli
//! conventions by constant positive factors which shift no minimizers and
//! flip no predicates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fcs::{build_covariant, FcsError, PopescuSystem};
use crate::numerics::{kron, operator_norm, CMatrix, NumericsError, C64};
use crate::su2::{feasible_aux, make_irrep, Irrep, Spin};
use crate::transfer::{build_transfer, spectral_report, TransferError};

/// Hermiticity tolerance for interaction terms.
const HERMITICITY_TOL: f64 = 1e-12;

/// Predicate tolerance for the symmetry checks.
const SYMMETRY_TOL: f64 = 1e-10;

/// Energy differences within this tolerance count as ties in the sweep
/// argmin (broken toward smaller t).
const TIE_TOL: f64 = 1e-9;

/// Errors from Hamiltonian construction, evaluation, and sweeps.
#[derive(Debug, Error)]
pub enum ModelsError {
    #[error("interaction term of shape {rows}x{cols} is not {dim}x{dim} = (dᵐ)² for d={d}, m={m}")]
    BadShape {
        rows: usize,
        cols: usize,
        dim: usize,
        d: usize,
        m: usize,
    },
    #[error("interaction term is not Hermitian: max |h₀ − h₀*| = {deviation:.3e} > 1e-12")]
    NotHermitian { deviation: f64 },
    #[error("site dimension mismatch: state has d={state_d}, Hamiltonian has d={hamiltonian_d}")]
    DimensionMismatch {
        state_d: usize,
        hamiltonian_d: usize,
    },
    #[error("Hamiltonian site dimension d={d} does not match site spin s={s} (need d = 2s+1 = {expected})")]
    SiteSpinMismatch { d: usize, s: Spin, expected: usize },
    #[error("unknown model name {name:?}; known models: ising, xy, majumdar_ghosh, xxx, aklt")]
    UnknownModel { name: String },
    #[error("model {model:?} requires the parameter {param}")]
    MissingParameter {
        model: &'static str,
        param: &'static str,
    },
    #[error("variational sweep over site spin s={s} found no feasible auxiliary spin t with 0 < 2t ≤ {t_max_twice}: t is feasible exactly when t − |t − s| is a nonnegative integer")]
    EmptySweep { s: Spin, t_max_twice: u32 },
    #[error("mean energy of a Hermitian term came out non-real (imaginary part {imag:.3e}); state or Hamiltonian data is inconsistent")]
    NonRealEnergy { imag: f64 },
    #[error("Hamiltonian document parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Fcs(#[from] FcsError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// An m-site Hermitian interaction term h₀ on sites of dimension d, with a
/// human-readable label carried through transforms and reports.
#[derive(Clone, Debug)]
pub struct LocalHamiltonian {
    d: usize,
    m: usize,
    h0: CMatrix,
    label: String,
}

impl LocalHamiltonian {
    /// Validates shape (dᵐ×dᵐ) and Hermiticity (within 1e−12).
    pub fn new(
        d: usize,
        m: usize,
        h0: CMatrix,
        label: impl Into<String>,
    ) -> Result<Self, ModelsError> {
        let dim = d.checked_pow(m as u32).unwrap_or(0);
        if dim == 0 || h0.rows() != dim || h0.cols() != dim {
            return Err(ModelsError::BadShape {
                rows: h0.rows(),
                cols: h0.cols(),
                dim,
                d,
                m,
            });
        }
        let deviation = h0.max_abs_diff(&h0.adjoint());
        if deviation > HERMITICITY_TOL {
            return Err(ModelsError::NotHermitian { deviation });
        }
        Ok(Self {
            d,
            m,
            h0,
            label: label.into(),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of sites the term acts on.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h0(&self) -> &CMatrix {
        &self.h0
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The site spin s with d = 2s + 1.
    pub fn site_spin(&self) -> Spin {
        Spin::from_twice((self.d - 1) as u32)
    }

    /// Serializes to the portable JSON Hamiltonian document.
    pub fn to_json(&self) -> String {
        let doc = HamiltonianDocument {
            d: self.d,
            m: self.m,
            h0: self.h0.entries().iter().map(|z| [z.re, z.im]).collect(),
            label: Some(self.label.clone()),
        };
        serde_json::to_string_pretty(&doc).expect("hamiltonian document serializes")
    }

    /// Parses and validates a portable JSON Hamiltonian document.
    pub fn from_json(text: &str) -> Result<Self, ModelsError> {
        let doc: HamiltonianDocument = serde_json::from_str(text)?;
        let dim = doc.d.checked_pow(doc.m as u32).unwrap_or(0);
        let entries: Vec<C64> = doc.h0.iter().map(|[re, im]| C64::new(*re, *im)).collect();
        if dim == 0 || entries.len() != dim * dim {
            return Err(ModelsError::BadShape {
                rows: if dim > 0 {
                    entries.len() / dim.max(1)
                } else {
                    0
                },
                cols: dim,
                dim,
                d: doc.d,
                m: doc.m,
            });
        }
        let h0 = CMatrix::new(dim, dim, entries)?;
        Self::new(
            doc.d,
            doc.m,
            h0,
            doc.label.unwrap_or_else(|| "imported".to_string()),
        )
    }
}

/// Portable JSON Hamiltonian document: h0 as a flat row-major list of
/// [re, im] pairs.
#[derive(Serialize, Deserialize)]
struct HamiltonianDocument {
    d: usize,
    m: usize,
    h0: Vec<[f64; 2]>,
    label: Option<String>,
}

/// Digits of `idx` base `d` (most significant first) into `out`.
fn digits(idx: usize, d: usize, out: &mut [usize]) {
    let mut rem = idx;
    for slot in out.iter_mut().rev() {
        *slot = rem % d;
        rem /= d;
    }
}

/// Reverses the tensor factors: ⟨i_m…i_1|h̃|j_m…j_1⟩ = ⟨i_1…i_m|h|j_1…j_m⟩.
pub fn reflect(h: &LocalHamiltonian) -> LocalHamiltonian {
    let (d, m) = (h.d, h.m);
    let dim = h.h0.rows();
    let perm: Vec<usize> = (0..dim)
        .map(|idx| {
            let mut word = vec![0usize; m];
            digits(idx, d, &mut word);
            word.reverse();
            word.iter().fold(0, |acc, &w| acc * d + w)
        })
        .collect();
    let h0 = CMatrix::from_fn(dim, dim, |i, j| h.h0[(perm[i], perm[j])]);
    LocalHamiltonian {
        d,
        m,
        h0,
        label: format!("reflect({})", h.label),
    }
}

/// Transposes each tensor factor (no complex conjugation). Under the
/// row-major multi-index convention this equals the global transpose of h₀,
/// since (A⊗B)ᵀ = Aᵀ⊗Bᵀ factor by factor.
pub fn site_transpose(h: &LocalHamiltonian) -> LocalHamiltonian {
    LocalHamiltonian {
        d: h.d,
        m: h.m,
        h0: h.h0.transpose(),
        label: format!("site_transpose({})", h.label),
    }
}

/// Outcome of the detailed-balance predicate on an interaction term.
#[derive(Clone, Copy, Debug)]
pub struct DetailedBalanceReport {
    /// ‖reflect(h) − h‖_max ≤ 1e−10.
    pub lattice_symmetric: bool,
    /// ‖site_transpose(h) − h‖_max ≤ 1e−10.
    pub real: bool,
    /// Both of the above.
    pub detailed_balance: bool,
    /// The measured reflection deviation.
    pub reflect_deviation: f64,
    /// The measured transpose deviation.
    pub transpose_deviation: f64,
}

/// Tests lattice symmetry and reality of an interaction term; detailed
/// balance is their conjunction.
pub fn detailed_balance_check(h: &LocalHamiltonian) -> DetailedBalanceReport {
    let reflect_deviation = reflect(h).h0.max_abs_diff(&h.h0);
    let transpose_deviation = site_transpose(h).h0.max_abs_diff(&h.h0);
    let lattice_symmetric = reflect_deviation <= SYMMETRY_TOL;
    let real = transpose_deviation <= SYMMETRY_TOL;
    DetailedBalanceReport {
        lattice_symmetric,
        real,
        detailed_balance: lattice_symmetric && real,
        reflect_deviation,
        transpose_deviation,
    }
}

/// Deviation of h₀ from invariance under the global SU(2) action generated
/// by the given site representation: max over a ∈ {x, y, z} of the operator
/// norm of [h₀, Σ_sites 1⊗…⊗S_a⊗…⊗1]. Zero means every rotation
/// e^{−iθ·S_total} commutes with h₀.
pub fn g_invariance_check(h: &LocalHamiltonian, site: &Irrep) -> Result<f64, ModelsError> {
    let d = site.spin().dimension();
    if d != h.d {
        return Err(ModelsError::DimensionMismatch {
            state_d: d,
            hamiltonian_d: h.d,
        });
    }
    let mut worst: f64 = 0.0;
    for s_a in site.generators() {
        let total = total_generator(s_a, h.d, h.m);
        let commutator = &(&h.h0 * &total) - &(&total * &h.h0);
        worst = worst.max(operator_norm(&commutator));
    }
    Ok(worst)
}

/// Σ_{pos} 1⊗…⊗g⊗…⊗1 over the m sites.
fn total_generator(g: &CMatrix, d: usize, m: usize) -> CMatrix {
    let dim = d.pow(m as u32);
    let mut total = CMatrix::zeros(dim, dim);
    for pos in 0..m {
        let left = d.pow(pos as u32);
        let right = d.pow((m - 1 - pos) as u32);
        let term = kron(
            &kron(&CMatrix::identity(left), g),
            &CMatrix::identity(right),
        );
        total = &total + &term;
    }
    total
}

/// The named models of the zoo.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Model {
    /// S_z ⊗ S_z on two spin-1/2 sites.
    Ising,
    /// −(S_x⊗S_x + S_y⊗S_y) − λ(S_z⊗1 + 1⊗S_z) on two spin-1/2 sites. The
    /// transverse field is split symmetrically across the bond so the term
    /// stays lattice symmetric while its translates reproduce the full
    /// per-site field.
    Xy { lambda: f64 },
    /// The orthogonal projector onto total spin 3/2 of three spin-1/2 sites.
    MajumdarGhosh,
    /// The Heisenberg bond Σ_a S_a ⊗ S_a on two spin-s sites.
    Xxx { s: Spin },
    /// (1/2)(S·S) + (1/6)(S·S)² + (1/3)·1 on two spin-1 sites — the
    /// projector onto total spin 2.
    Aklt,
}

impl Model {
    /// Resolves a model by name plus parameters. `lambda` defaults to 0 for
    /// the XY model; `s` is required for the XXX model.
    pub fn parse(name: &str, lambda: Option<f64>, s: Option<Spin>) -> Result<Self, ModelsError> {
        match name {
            "ising" => Ok(Model::Ising),
            "xy" => Ok(Model::Xy {
                lambda: lambda.unwrap_or(0.0),
            }),
            "majumdar_ghosh" | "mg" => Ok(Model::MajumdarGhosh),
            "xxx" => s
                .map(|s| Model::Xxx { s })
                .ok_or(ModelsError::MissingParameter {
                    model: "xxx",
                    param: "s (site spin)",
                }),
            "aklt" => Ok(Model::Aklt),
            other => Err(ModelsError::UnknownModel {
                name: other.to_string(),
            }),
        }
    }
}

/// Builds the interaction term of a zoo model.
pub fn model_zoo(model: Model) -> LocalHamiltonian {
    let half = Spin::from_twice(1);
    match model {
        Model::Ising => {
            let irr = make_irrep(half);
            let h0 = kron(irr.sz(), irr.sz());
            LocalHamiltonian::new(2, 2, h0, "ising")
        }
        Model::Xy { lambda } => {
            let irr = make_irrep(half);
            let id = CMatrix::identity(2);
            let exchange = &kron(irr.sx(), irr.sx()) + &kron(irr.sy(), irr.sy());
            let field = &kron(irr.sz(), &id) + &kron(&id, irr.sz());
            let h0 = &exchange.scaled(C64::new(-1.0, 0.0)) + &field.scaled(C64::new(-lambda, 0.0));
            LocalHamiltonian::new(2, 2, h0, format!("xy(lambda={lambda})"))
        }
        Model::MajumdarGhosh => {
            // On (ℂ²)^⊗3 the Casimir (S₁+S₂+S₃)² has exactly the eigenvalues
            // 15/4 (total spin 3/2) and 3/4 (total spin 1/2), so the affine
            // rescaling (C − (3/4)·1)/3 is exactly the spectral projector
            // onto total spin 3/2.
            let irr = make_irrep(half);
            let mut casimir = CMatrix::zeros(8, 8);
            for s_a in irr.generators() {
                let total = total_generator(s_a, 2, 3);
                casimir = &casimir + &(&total * &total);
            }
            let shifted = &casimir - &CMatrix::identity(8).scaled(C64::new(0.75, 0.0));
            let h0 = shifted.scaled(C64::new(1.0 / 3.0, 0.0));
            LocalHamiltonian::new(2, 3, h0, "majumdar_ghosh")
        }
        Model::Xxx { s } => {
            let irr = make_irrep(s);
            let d = s.dimension();
            let mut h0 = CMatrix::zeros(d * d, d * d);
            for s_a in irr.generators() {
                h0 = &h0 + &kron(s_a, s_a);
            }
            LocalHamiltonian::new(d, 2, h0, format!("xxx(s={s})"))
        }
        Model::Aklt => {
            let irr = make_irrep(Spin::from_twice(2));
            let mut bond = CMatrix::zeros(9, 9);
            for s_a in irr.generators() {
                bond = &bond + &kron(s_a, s_a);
            }
            let h0 = &(&bond.scaled(C64::new(0.5, 0.0))
                + &(&bond * &bond).scaled(C64::new(1.0 / 6.0, 0.0)))
                + &CMatrix::identity(9).scaled(C64::new(1.0 / 3.0, 0.0));
            LocalHamiltonian::new(3, 2, h0, "aklt")
        }
    }
    .expect("zoo terms are Hermitian by construction")
}

/// Mean energy ω(h₀) of the state generated by `sys` — the expectation of
/// the interaction term per site in the thermodynamic limit. Hermiticity of
/// h₀ forces a real value; a non-negligible imaginary part (> 1e−10) means
/// inconsistent inputs and is an error rather than silently discarded.
pub fn mean_energy(sys: &PopescuSystem, h: &LocalHamiltonian) -> Result<f64, ModelsError> {
    if sys.d() != h.d {
        return Err(ModelsError::DimensionMismatch {
            state_d: sys.d(),
            hamiltonian_d: h.d,
        });
    }
    let value = sys.local_expectation(&h.h0)?;
    if value.im.abs() > 1e-10 {
        return Err(ModelsError::NonRealEnergy { imag: value.im });
    }
    Ok(value.re)
}

/// One grid point of a variational sweep. Infeasible auxiliary spins keep
/// their row (for complete tables) with no numbers attached.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub t: Spin,
    pub feasible: bool,
    /// Mean energy ω_t(h₀); `None` when infeasible.
    pub energy: Option<f64>,
    /// Spectral decay rate of the transfer operator; `None` when infeasible.
    pub alpha: Option<f64>,
    /// Correlation length ξ = −1/ln α; `None` when infeasible.
    pub xi: Option<f64>,
}

/// Result of a variational sweep: one row per auxiliary spin on the grid,
/// the energy-minimizing feasible t, and the model label.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub argmin_t: Spin,
    pub model: String,
}

/// Sweeps the covariant states with site spin s over the auxiliary-spin grid
/// 2t ∈ {1, 2, …, 2·t_max}, recording mean energy, decay rate and
/// correlation length per feasible t, and the feasible t of minimal energy
/// (ties within 1e−9 broken toward smaller t).
///
/// Rows are computed in parallel and assembled in grid order, so results are
/// independent of scheduling. A grid with no feasible t at all (for example
/// any half-integer site spin, where t − |t − s| is never an integer) is an
/// error rather than an empty table.
pub fn variational_sweep(
    s: Spin,
    h: &LocalHamiltonian,
    t_max: Spin,
) -> Result<SweepResult, ModelsError> {
    if h.d != s.dimension() {
        return Err(ModelsError::SiteSpinMismatch {
            d: h.d,
            s,
            expected: s.dimension(),
        });
    }
    let grid: Vec<Spin> = (1..=t_max.twice()).map(Spin::from_twice).collect();
    let rows = grid
        .into_par_iter()
        .map(|t| -> Result<SweepRow, ModelsError> {
            if !feasible_aux(s, t) {
                return Ok(SweepRow {
                    t,
                    feasible: false,
                    energy: None,
                    alpha: None,
                    xi: None,
                });
            }
            let sys = build_covariant(s, t)?;
            let energy = mean_energy(sys.base(), h)?;
            let report = spectral_report(&build_transfer(sys.base()))?;
            Ok(SweepRow {
                t,
                feasible: true,
                energy: Some(energy),
                alpha: Some(report.alpha),
                xi: Some(report.correlation_length),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut best: Option<(Spin, f64)> = None;
    for row in &rows {
        if let (true, Some(e)) = (row.feasible, row.energy) {
            match best {
                None => best = Some((row.t, e)),
                Some((_, e_best)) if e < e_best - TIE_TOL => best = Some((row.t, e)),
                _ => {}
            }
        }
    }
    let (argmin_t, _) = best.ok_or(ModelsError::EmptySweep {
        s,
        t_max_twice: t_max.twice(),
    })?;

    Ok(SweepResult {
        rows,
        argmin_t,
        model: h.label.clone(),
    })
}
