//! Round-trip identifiability of the fitters: parameters recovered from
//! noiseless forward models to high precision, and from Poisson-sampled data
//! within counting-statistics tolerances.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use biphoton_core::counting::{sample_counts, ExpectedRates};
use biphoton_core::fitting::{fit_fringe, fit_hom, fit_hom_shaped};
use biphoton_core::spectral::SpectralShape;
use biphoton_core::thermal::{calibrate_law, PhaseVoltageLaw};

#[test]
fn fringe_identifiable_for_100_random_parameter_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    for trial in 0..100 {
        let vis = 0.2 + 0.79 * rng.random::<f64>();
        let omega = 0.5 + 2.5 * rng.random::<f64>();
        let phase = std::f64::consts::TAU * rng.random::<f64>();
        let offset = 200.0 + 5000.0 * rng.random::<f64>();
        let samples: Vec<(f64, f64)> = (0..80)
            .map(|i| {
                let x = 15.0 * i as f64 / 79.0;
                (x, offset * (1.0 + vis * (omega * x + phase).cos()))
            })
            .collect();
        let fit = fit_fringe(&samples).unwrap();
        assert!(
            (fit.raw_visibility() - vis).abs() < 1e-6,
            "trial {trial}: v {} vs {vis}",
            fit.raw_visibility()
        );
        let dphi = (fit.phase - phase).rem_euclid(std::f64::consts::TAU);
        assert!(
            dphi.min(std::f64::consts::TAU - dphi) < 1e-5,
            "trial {trial}: phase {} vs {phase}",
            fit.phase
        );
    }
}

#[test]
fn fringe_visibility_within_two_percent_under_poisson_noise() {
    // Counts at >= 2500 per point keep the refitted visibility within 0.02.
    let vis = 0.895;
    let omega = 1.4;
    let mut worst: f64 = 0.0;
    for seed in 0..30u64 {
        let samples: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let x = 10.0 * i as f64 / 39.0;
                let mean = 5000.0 * (1.0 + vis * (omega * x + 0.4).cos());
                let rates = ExpectedRates {
                    singles_1_hz: 20.0 * mean.max(1.0),
                    singles_2_hz: 20.0 * mean.max(1.0),
                    coincidence_hz: mean.max(0.0),
                };
                let draw = sample_counts(&rates, 1.0, seed, i).unwrap();
                (x, draw.coincidences as f64)
            })
            .collect();
        let fit = fit_fringe(&samples).unwrap();
        worst = worst.max((fit.raw_visibility() - vis).abs());
    }
    assert!(worst < 0.02, "worst visibility error {worst}");
}

#[test]
fn hom_visibilities_recovered_noiseless() {
    for vis in [0.910, 0.939] {
        let samples: Vec<(f64, f64)> = (0..81)
            .map(|i| {
                let tau = -50.0 + 100.0 * i as f64 / 80.0;
                let x = std::f64::consts::PI * 60.0 * tau * 1e-3;
                let s = if x.abs() < 1e-12 { 1.0 } else { x.sin() / x };
                (tau, 3000.0 * (1.0 - vis * s * s))
            })
            .collect();
        let fit = fit_hom(&samples).unwrap();
        assert!((fit.visibility - vis).abs() < 1e-6);
        assert!((fit.fwhm_ghz - 60.0).abs() < 1e-4);
    }
}

#[test]
fn hom_visibility_under_poisson_noise() {
    let vis = 0.939;
    let mut worst: f64 = 0.0;
    for seed in 0..30u64 {
        let samples: Vec<(f64, f64)> = (0..81)
            .map(|i| {
                let tau = -50.0 + 100.0 * i as f64 / 80.0;
                let x = std::f64::consts::PI * 60.0 * tau * 1e-3;
                let s = if x.abs() < 1e-12 { 1.0 } else { x.sin() / x };
                let mean = 3000.0 * (1.0 - vis * s * s);
                let rates = ExpectedRates {
                    singles_1_hz: 20.0 * mean,
                    singles_2_hz: 20.0 * mean,
                    coincidence_hz: mean,
                };
                let draw = sample_counts(&rates, 1.0, 0xB0B + seed, i).unwrap();
                (tau, draw.coincidences as f64)
            })
            .collect();
        let fit = fit_hom(&samples).unwrap();
        worst = worst.max((fit.visibility - vis).abs());
    }
    assert!(worst < 0.02, "worst HOM visibility error {worst}");
}

#[test]
fn law_calibration_with_poisson_noise_recovers_within_two_percent() {
    let truth = PhaseVoltageLaw::new(1.0, 0.07).unwrap();
    let mut worst_kappa: f64 = 0.0;
    for seed in 0..20u64 {
        let samples: Vec<(f64, f64)> = (0..50)
            .map(|i| {
                let v = 12.0 * i as f64 / 49.0;
                let mean = 2500.0 * (1.0 + 0.9 * truth.phase_of_voltage(v).unwrap().cos());
                let rates = ExpectedRates {
                    singles_1_hz: 20.0 * mean.max(1.0),
                    singles_2_hz: 20.0 * mean.max(1.0),
                    coincidence_hz: mean.max(0.0),
                };
                let draw = sample_counts(&rates, 1.0, 0xCAB + seed, i).unwrap();
                (v, draw.coincidences as f64)
            })
            .collect();
        let cal = calibrate_law(&samples).unwrap();
        worst_kappa = worst_kappa.max((cal.law.kappa - truth.kappa).abs() / truth.kappa);
    }
    assert!(worst_kappa < 0.02, "worst kappa error {worst_kappa}");
}

#[test]
fn gaussian_data_prefers_gaussian_family() {
    let samples: Vec<(f64, f64)> = (0..81)
        .map(|i| {
            let tau = -50.0 + 100.0 * i as f64 / 80.0;
            let x = std::f64::consts::PI * 60.0 * (tau - 1.5) * 1e-3;
            let k = (-x * x / (2.0 * std::f64::consts::LN_2)).exp();
            (tau, 2500.0 * (1.0 - 0.91 * k))
        })
        .collect();
    let matched = fit_hom_shaped(&samples, SpectralShape::Gaussian).unwrap();
    let mismatched = fit_hom_shaped(&samples, SpectralShape::Rectangular).unwrap();
    assert!(matched.residual_rms < mismatched.residual_rms);
    assert!((matched.visibility - 0.91).abs() < 1e-6);
    assert!((matched.delay_offset_ps - 1.5).abs() < 1e-6);
}
