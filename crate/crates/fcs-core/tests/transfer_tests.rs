//! Integration tests of the transfer-operator layer: spectra against known
//! values, mixing classification, two-point correlators against the
//! brute-force oracle, and decay certificates.

mod common;

use common::{embed_pair, random_hermitian, random_popescu, rng};
use fcs_core::numerics::{CMatrix, C64};
use fcs_core::su2::{feasible_aux, make_irrep, Spin};
use fcs_core::transfer::{
    build_transfer, channel_apply, channel_dual_apply, decay_certificate, spectral_report,
    two_point, two_point_series, SpectralDocument, TransferError,
};
use fcs_core::{build_covariant, PopescuSystem};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn aklt() -> PopescuSystem {
    build_covariant(Spin::from_twice(2), Spin::from_twice(1))
        .unwrap()
        .base()
        .clone()
}

/// d = 2 product state on a one-dimensional auxiliary space.
fn product_system() -> PopescuSystem {
    let a0 = CMatrix::new(1, 1, vec![c(0.6, 0.0)]).unwrap();
    let a1 = CMatrix::new(1, 1, vec![c(0.0, 0.8)]).unwrap();
    PopescuSystem::from_kraus(vec![a0, a1]).unwrap()
}

/// Period-2 channel: v₀ = e₀₁, v₁ = e₁₀ swap the two diagonal sectors, so
/// the transfer spectrum is {1, −1, 0, 0} — ergodic but not mixing.
fn period_two_system() -> PopescuSystem {
    let v0 = CMatrix::new(
        2,
        2,
        vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
    )
    .unwrap();
    let v1 = CMatrix::new(
        2,
        2,
        vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
    )
    .unwrap();
    let rho = CMatrix::identity(2).scaled(c(0.5, 0.0));
    PopescuSystem::new(vec![v0, v1], rho).unwrap()
}

#[test]
fn product_system_has_trivial_transfer_matrix() {
    let sys = product_system();
    let op = build_transfer(&sys);
    assert_eq!(op.matrix().rows(), 1);
    assert!((op.matrix()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);

    let report = spectral_report(&op).unwrap();
    assert_eq!(report.alpha, 0.0);
    assert_eq!(report.correlation_length, 0.0);
    assert!(report.ergodic);
    assert!(report.strongly_mixing);
}

#[test]
fn aklt_transfer_spectrum_is_one_and_three_thirds() {
    let op = build_transfer(&aklt());
    let report = spectral_report(&op).unwrap();
    assert_eq!(report.eigenvalues.len(), 4);
    assert!((report.eigenvalues[0] - c(1.0, 0.0)).norm() <= 1e-9);
    for lambda in &report.eigenvalues[1..] {
        assert!((lambda - c(-1.0 / 3.0, 0.0)).norm() <= 1e-9, "{lambda}");
    }
    assert!((report.alpha - 1.0 / 3.0).abs() <= 1e-9);
    let xi_expected = 1.0 / 3.0f64.ln(); // −1/ln(1/3) = 1/ln 3
    assert!((report.correlation_length - xi_expected).abs() <= 1e-9);
    assert!(report.ergodic && report.strongly_mixing);
    assert!(op.detailed_balance());
}

#[test]
fn period_two_channel_is_ergodic_but_not_mixing() {
    let sys = period_two_system();
    let op = build_transfer(&sys);
    let report = spectral_report(&op).unwrap();

    assert!(report.ergodic, "fixed space is one-dimensional");
    assert!(!report.strongly_mixing, "peripheral eigenvalue −1 present");
    assert_eq!(report.peripheral.len(), 2);
    assert!(report
        .peripheral
        .iter()
        .any(|z| (z - c(-1.0, 0.0)).norm() < 1e-9));

    // Strong mixing implies ergodicity; the converse fails exactly here.
    assert!(matches!(
        decay_certificate(&sys, &[CMatrix::identity(2)], 5),
        Err(TransferError::NotMixing { .. })
    ));
}

#[test]
fn strongly_mixing_implies_ergodic_on_a_sample_of_systems() {
    let mut r = rng(41);
    for _ in 0..6 {
        let sys = random_popescu(&mut r, 2, 3);
        let report = spectral_report(&build_transfer(&sys)).unwrap();
        if report.strongly_mixing {
            assert!(report.ergodic);
        }
        assert!((0.0..=1.0).contains(&report.alpha));
    }
}

#[test]
fn unit_vector_and_rho_are_fixed_points_of_the_matrix() {
    for (s, t) in [(2u32, 1u32), (4, 2), (2, 4)] {
        let sys = build_covariant(Spin::from_twice(s), Spin::from_twice(t))
            .unwrap()
            .base()
            .clone();
        let op = build_transfer(&sys);
        let n = sys.n();

        let id = CMatrix::identity(n);
        assert!(op.apply(&id).unwrap().max_abs_diff(&id) <= 1e-10);

        // Dual fixed point through the adjoint matrix.
        let rho_vec = sys.rho().entries().to_vec();
        let back = op.matrix().adjoint().mul_vec(&rho_vec);
        let back_m = CMatrix::new(n, n, back).unwrap();
        assert!(back_m.max_abs_diff(sys.rho()) <= 1e-10);
        assert!(channel_dual_apply(&sys, sys.rho()).max_abs_diff(sys.rho()) <= 1e-12);

        // Spectral radius 1.
        let report = spectral_report(&op).unwrap();
        let radius = report.eigenvalues[0].norm();
        assert!((radius - 1.0).abs() <= 1e-8);
    }
}

#[test]
fn matrix_power_equals_iterated_channel() {
    let mut r = rng(42);
    for (d, n) in [(2usize, 2usize), (3, 2), (2, 3), (3, 3)] {
        let sys = random_popescu(&mut r, d, n);
        let op = build_transfer(&sys);
        let x0 = random_hermitian(&mut r, n);

        let mut via_matrix = x0.clone();
        let mut direct = x0.clone();
        for k in 1..=8 {
            via_matrix = op.apply(&via_matrix).unwrap();
            direct = channel_apply(&sys, &direct);
            assert!(
                via_matrix.max_abs_diff(&direct) <= 1e-10,
                "d={d} n={n} k={k}"
            );
        }
    }
}

#[test]
fn real_kraus_systems_have_conjugation_closed_spectra() {
    for (s, t) in [(2u32, 1u32), (2, 2), (4, 2), (6, 3)] {
        let sys = build_covariant(Spin::from_twice(s), Spin::from_twice(t))
            .unwrap()
            .base()
            .clone();
        let report = spectral_report(&build_transfer(&sys)).unwrap();
        for lambda in &report.eigenvalues {
            let conj = lambda.conj();
            let has_partner = report
                .eigenvalues
                .iter()
                .any(|mu| (mu - conj).norm() <= 1e-8);
            assert!(has_partner, "s={s} t={t}: {lambda} lacks conjugate partner");
        }
    }
}

#[test]
fn detailed_balance_forces_real_spectrum_across_the_covariant_range() {
    for ts in 0..=6u32 {
        for tt in 0..=9u32 {
            let (s, t) = (Spin::from_twice(ts), Spin::from_twice(tt));
            if !feasible_aux(s, t) {
                continue;
            }
            let sys = build_covariant(s, t).unwrap().base().clone();
            let op = build_transfer(&sys);
            assert!(op.detailed_balance(), "s={s} t={t}");
            let report = spectral_report(&op).unwrap();
            for lambda in &report.eigenvalues {
                assert!(
                    lambda.im.abs() <= 1e-8,
                    "s={s} t={t}: eigenvalue {lambda} not real"
                );
            }
            // The assertable envelope: all non-unit eigenvalues lie in
            // [−α, α] once the simple Perron eigenvalue is removed.
            if report.strongly_mixing {
                let mut seen_unit = false;
                for lambda in &report.eigenvalues {
                    if !seen_unit && (lambda - c(1.0, 0.0)).norm() <= 1e-8 {
                        seen_unit = true;
                        continue;
                    }
                    assert!(
                        lambda.re.abs() <= report.alpha + 1e-8,
                        "s={s} t={t}: {lambda} outside [−α, α], α = {}",
                        report.alpha
                    );
                }
            }
        }
    }
}

#[test]
fn identity_correlator_is_one_at_every_distance() {
    let sys = aklt();
    let id = CMatrix::identity(3);
    for k in [1usize, 2, 5, 9] {
        let val = two_point(&sys, &id, &id, k).unwrap();
        assert!((val - c(1.0, 0.0)).norm() <= 1e-12);
    }
}

#[test]
fn aklt_szsz_matches_brute_force_and_decays_by_one_third() {
    let sys = aklt();
    let sz = make_irrep(Spin::from_twice(2)).sz().clone();

    for k in 1..=3usize {
        let fast = two_point(&sys, &sz, &sz, k).unwrap();
        let embedded = embed_pair(&sz, &sz, 3, k);
        let slow = sys.brute_force_expectation(&embedded).unwrap();
        assert!((fast - slow).norm() <= 1e-10, "k={k}: {fast} vs {slow}");
    }

    let series = two_point_series(&sys, &sz, &sz, 8).unwrap();
    for k in 2..8 {
        let ratio = series[k] / series[k - 1];
        assert!(
            (ratio - c(-1.0 / 3.0, 0.0)).norm() <= 1e-8,
            "k={}: ratio {ratio}",
            k + 1
        );
    }
}

#[test]
fn two_point_agrees_with_local_expectation_on_random_observables() {
    let mut r = rng(43);
    let sys = random_popescu(&mut r, 2, 2);
    for k in 1..=3usize {
        for _ in 0..5 {
            let a = random_hermitian(&mut r, 2);
            let b = random_hermitian(&mut r, 2);
            let fast = two_point(&sys, &a, &b, k).unwrap();
            let embedded = embed_pair(&a, &b, 2, k);
            let slow = sys.local_expectation(&embedded).unwrap();
            assert!((fast - slow).norm() <= 1e-10, "k={k}");
        }
    }
}

#[test]
fn aklt_decay_certificate_recovers_the_spectral_rate() {
    let sys = aklt();
    let irr = make_irrep(Spin::from_twice(2));
    let observables = [irr.sx().clone(), irr.sy().clone(), irr.sz().clone()];
    let cert = decay_certificate(&sys, &observables, 20).unwrap();

    assert!((cert.alpha - 1.0 / 3.0).abs() <= 1e-9);
    let expected = (1.0f64 / 3.0).ln();
    let rate = cert.fitted_rate.expect("AKLT correlators give a clean fit");
    assert!(
        (rate - expected).abs() / expected.abs() <= 0.01,
        "fitted {rate} vs ln(1/3) = {expected}"
    );
    assert!(cert.max_violation <= 0.0);
    assert!(cert.prefactor > 0.0);
}

#[test]
fn identity_observables_contribute_nothing_to_the_fit() {
    let sys = aklt();
    let irr = make_irrep(Spin::from_twice(2));
    let with_id = [
        CMatrix::identity(3),
        irr.sx().clone(),
        irr.sy().clone(),
        irr.sz().clone(),
    ];
    let without = [irr.sx().clone(), irr.sy().clone(), irr.sz().clone()];
    let cert_with = decay_certificate(&sys, &with_id, 12).unwrap();
    let cert_without = decay_certificate(&sys, &without, 12).unwrap();
    let (a, b) = (
        cert_with.fitted_rate.unwrap(),
        cert_without.fitted_rate.unwrap(),
    );
    assert!(
        (a - b).abs() < 1e-9,
        "identity pairs altered the fit: {a} vs {b}"
    );
}

#[test]
fn product_state_certificate_is_degenerate_with_zero_alpha() {
    let sys = product_system();
    let sz_half = make_irrep(Spin::from_twice(1)).sz().clone();
    let cert = decay_certificate(&sys, &[sz_half], 10).unwrap();
    assert_eq!(cert.alpha, 0.0);
    assert!(cert.fitted_rate.is_none(), "no correlations, no fit");
    assert!(cert.max_violation.abs() <= 1e-12);
}

#[test]
fn measured_envelope_extrapolates_to_distance_thirty() {
    // Fit the prefactor on distances ≤ 10, then demand |c_k| ≤ C·αᵏ out to
    // k = 30 — a genuine extrapolation, not a tautology.
    for (s, t) in [(2u32, 1u32), (2, 2)] {
        let sys = build_covariant(Spin::from_twice(s), Spin::from_twice(t))
            .unwrap()
            .base()
            .clone();
        let report = spectral_report(&build_transfer(&sys)).unwrap();
        assert!(report.strongly_mixing);
        let alpha = report.alpha;

        let irr = make_irrep(Spin::from_twice(s));
        for obs in [irr.sx(), irr.sz()] {
            let series = two_point_series(&sys, obs, obs, 30).unwrap();
            let mean = two_point(&sys, obs, &CMatrix::identity(sys.d()), 1).unwrap();
            let connected: Vec<f64> = series.iter().map(|v| (v - mean * mean).norm()).collect();
            let c_pref = connected[..10]
                .iter()
                .enumerate()
                .map(|(idx, r)| r / alpha.powi(idx as i32 + 1))
                .fold(0.0f64, f64::max);
            for (idx, r) in connected.iter().enumerate() {
                let bound = c_pref * alpha.powi(idx as i32 + 1) * (1.0 + 1e-6) + 1e-13;
                assert!(
                    *r <= bound,
                    "s={s} t={t} k={}: |c_k| = {r} exceeds envelope {bound}",
                    idx + 1
                );
            }
        }
    }
}

#[test]
fn spectral_document_roundtrips_with_sorted_eigenvalues() {
    let op = build_transfer(&aklt());
    let report = spectral_report(&op).unwrap();
    let doc = SpectralDocument::new(&report, op.detailed_balance());
    let text = doc.to_json();
    let back = SpectralDocument::from_json(&text).unwrap();

    assert_eq!(back.eigenvalues.len(), 4);
    // Sorted by decreasing modulus: the unit eigenvalue leads.
    assert!((back.eigenvalues[0][0] - 1.0).abs() < 1e-9);
    assert_eq!(back.alpha, doc.alpha);
    assert_eq!(back.xi, doc.xi);
    assert!(back.ergodic && back.strongly_mixing && back.detailed_balance);

    // Non-increasing moduli.
    let moduli: Vec<f64> = back
        .eigenvalues
        .iter()
        .map(|[re, im]| (re * re + im * im).sqrt())
        .collect();
    for pair in moduli.windows(2) {
        assert!(pair[0] >= pair[1] - 1e-12);
    }
}
