use num_complex::Complex64;
use qngc_core::criteria::nonclassicality_test;
use qngc_core::fock::{noisy_lossy_distribution, FockState, TwoModeKet};
use qngc_core::gaussian::BlochMessiahParams;
use qngc_core::model::{
    herald_posterior, heralded_eta, single_mode_stats, single_mode_stats_closed, spad_stats_approx,
    spad_stats_symmetric, stats_general, HeraldParams, ModelStats, SourceParams,
};
use qngc_core::criteria::Detection;
use qngc_core::spad::spad_stats_from_params;

#[test]
fn coherent_products_are_never_nonclassical() {
    for i in 0..50 {
        for j in 0..50 {
            let p = BlochMessiahParams {
                alpha1_mag: 0.06 * i as f64,
                alpha2_mag: 0.06 * j as f64,
                psi1: 0.3,
                psi2: 2.0,
                ..BlochMessiahParams::vacuum()
            };
            let s = spad_stats_from_params(&p).unwrap();
            assert!(nonclassicality_test(&s).margin <= 1e-12, "{p:?}: {s:?}");
        }
    }
}

#[test]
fn channel_route_matches_closed_forms() {
    for &(eta, t, nbar) in &[(0.3, 0.2, 0.05), (0.9, 0.8, 0.001), (1.0, 1.0, 0.2)] {
        let ModelStats::Spad(s) = stats_general(&SourceParams::symmetric(eta, t, nbar), Detection::Spad).unwrap() else {
            panic!()
        };
        let c = spad_stats_symmetric(eta, t, nbar);
        assert!((s.p_s - c.p_s).abs() < 1e-8 && (s.p_e1 - c.p_e1).abs() < 1e-8);
    }
}

#[test]
fn low_noise_approximations_hold() {
    for &eta in &[0.1, 0.5, 1.0] {
        for &t in &[0.1, 0.5, 1.0] {
            for &nbar in &[1e-5, 1e-4, 1e-3] {
                let p = SourceParams::symmetric(eta, t, nbar);
                let ModelStats::Spad(exact) = stats_general(&p, Detection::Spad).unwrap() else { panic!() };
                let approx = spad_stats_approx(&p);
                let rel = |a: f64, b: f64| (a - b).abs() / b;
                assert!(rel(approx.p_s, exact.p_s) < 0.1, "{p:?}: {approx:?} vs {exact:?}");
                assert!(rel(approx.p_e1, exact.p_e1) < 0.1, "{p:?}: {approx:?} vs {exact:?}");
            }
        }
    }
    let p = SourceParams { eta: 0.4, t1: 0.3, t2: 0.8, nbar1: 1e-3, nbar2: 2e-4 };
    let ModelStats::Spad(exact) = stats_general(&p, Detection::Spad).unwrap() else { panic!() };
    let approx = spad_stats_approx(&p);
    for (a, b) in [(approx.p_s, exact.p_s), (approx.p_e1, exact.p_e1), (approx.p_e2, exact.p_e2)] {
        assert!((a - b).abs() / b < 0.1, "{approx:?} vs {exact:?}");
    }
}

/// Herald clicks come from the pair or from the vacuum component after noise and loss.
fn posterior_from_fock(eta: f64, h: &HeraldParams) -> f64 {
    let (one, _) = noisy_lossy_distribution(1, h.nbar_h, h.t_h, 1e-14).unwrap();
    let (zero, _) = noisy_lossy_distribution(0, h.nbar_h, h.t_h, 1e-14).unwrap();
    let (c1, c0) = (1.0 - one[0], 1.0 - zero[0]);
    eta * c1 / (eta * c1 + (1.0 - eta) * c0)
}

#[test]
fn heralded_weight_is_transmission_times_posterior() {
    for &eta in &[0.01, 0.3, 0.9, 1.0] {
        for &t_h in &[0.1, 0.5, 1.0] {
            for &nbar_h in &[1e-4, 0.01, 0.2] {
                let h = HeraldParams { t_h, nbar_h };
                let bayes = posterior_from_fock(eta, &h);
                assert!((herald_posterior(eta, &h).unwrap() - bayes).abs() < 1e-10, "{eta} {h:?}");
                assert!((heralded_eta(eta, &h).unwrap() - t_h * bayes).abs() < 1e-10, "{eta} {h:?}");
            }
        }
    }
}

#[test]
fn single_mode_channels_match_closed_forms() {
    for &eta in &[0.0, 0.4, 1.0] {
        for &t in &[0.05, 0.5, 1.0] {
            for &nbar in &[0.0, 1e-3, 0.1] {
                let (a, b) = (single_mode_stats(eta, t, nbar).unwrap(), single_mode_stats_closed(eta, t, nbar));
                assert!((a.p_s - b.p_s).abs() < 1e-10 && (a.p_e1 - b.p_e1).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn doubling_the_cutoff_changes_nothing() {
    let alpha = Complex64::new(1.1, -0.7);
    let small = FockState::make_coherent(alpha, 30).unwrap().photon_number_distribution();
    let large = FockState::make_coherent(alpha, 60).unwrap().photon_number_distribution();
    for (a, b) in small.iter().zip(&large) {
        assert!((a - b).abs() < 1e-10);
    }
    let (k1, k2) = (TwoModeKet::two_mode_squeezed(0.4, 40).unwrap(), TwoModeKet::two_mode_squeezed(0.4, 80).unwrap());
    for n in 0..=40 {
        assert!((k1.amp(n, n) - k2.amp(n, n)).norm() < 1e-10);
    }
    let (d1, _) = noisy_lossy_distribution(1, 0.3, 0.7, 1e-12).unwrap();
    let (d2, _) = noisy_lossy_distribution(1, 0.3, 0.7, 1e-15).unwrap();
    for (a, b) in d1.iter().zip(&d2) {
        assert!((a - b).abs() < 1e-10);
    }
}
