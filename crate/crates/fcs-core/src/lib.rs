//! Finitely correlated states on quantum spin chains.
//!
//! This crate builds translation-invariant matrix-product states from
//! SU(2) Clebsch-Gordan data, analyzes the spectrum of their transfer
//! operators to certify exponential correlation decay, and sweeps families
//! of such states to minimize the mean energy of local Hamiltonians.
//!
//! The modules layer bottom-up:
//!
//! * [`numerics`] — dense complex matrices ([`CMatrix`]) with the small
//!   kernel of linear algebra everything else needs: Kronecker products,
//!   non-Hermitian eigenvalues, matrix exponentials, operator norms.
//! * [`su2`] — spins, irreducible representations and their generators,
//!   exact-rational Clebsch-Gordan coefficients, the Frobenius-Schur
//!   indicator and real forms.
//! * [`fcs`] — Popescu systems (Kraus families with a faithful invariant
//!   state), the covariant construction from Clebsch-Gordan isometries, word
//!   amplitudes, local expectations with a brute-force oracle, and symmetry
//!   scans of the generated state.
//! * [`transfer`] — the transfer operator, its spectral report (decay rate
//!   α, correlation length ξ, ergodicity, strong mixing), two-point
//!   correlators, and exponential-decay certificates.
//! * [`models`] — local Hamiltonians, symmetry predicates, the model zoo,
//!   mean energies, and the variational sweep over auxiliary spins.

pub mod fcs;
pub mod models;
pub mod numerics;
pub mod su2;
pub mod transfer;

pub use fcs::{build_covariant, CovariantSystem, FcsError, PopescuSystem};
pub use models::{
    detailed_balance_check, g_invariance_check, mean_energy, model_zoo, reflect, site_transpose,
    variational_sweep, DetailedBalanceReport, LocalHamiltonian, Model, ModelsError, SweepResult,
    SweepRow,
};
pub use numerics::{
    eigenvalues, expm, hermitian_eigenvalues, kron, operator_norm, sort_eigenvalues, CMatrix,
    NumericsError, C64, DEFAULT_TOL,
};
pub use su2::{
    cg_coefficient, feasible_aux, frobenius_schur, group_element, make_irrep, real_basis, Irrep,
    Spin, Su2Error,
};
pub use transfer::{
    build_transfer, channel_apply, channel_dual_apply, decay_certificate, spectral_report,
    two_point, two_point_series, DecayCertificate, SpectralDocument, SpectralReport, TransferError,
    TransferOperator,
};
