//! Statistical contracts of the counting pipeline.

use biphoton_core::chip::{BellPhaseConfig, BellSourceChip};
use biphoton_core::counting::{
    expected_rates, sample_counts, ChannelProbabilities, DetectorModel, NoiseModel,
    PdlTransmittance,
};

fn detector() -> DetectorModel {
    DetectorModel::new(0.2, 100.0, 1.0).unwrap()
}

#[test]
fn sampled_counts_sit_in_five_sigma_bands() {
    // Rates representative of every experiment in the suite; 1000 seeded
    // trials must stay inside the 5-sigma Poisson band at least 99% of the
    // time (the band captures all but ~6e-7 of the mass, so in practice all
    // trials pass).
    let det = detector();
    let rate_sets: Vec<ChannelProbabilities> = vec![
        ChannelProbabilities {
            p_coincidence: 0.5,
            p_single_1: 0.5,
            p_single_2: 0.5,
            transmittance_1: 1.0,
            transmittance_2: 1.0,
        },
        ChannelProbabilities {
            p_coincidence: 0.065,
            p_single_1: 0.5,
            p_single_2: 0.5,
            transmittance_1: 0.96,
            transmittance_2: 0.96,
        },
        ChannelProbabilities {
            p_coincidence: 0.93,
            p_single_1: 1.0,
            p_single_2: 1.0,
            transmittance_1: 0.9,
            transmittance_2: 1.0,
        },
    ];
    let mut outside = 0usize;
    let mut total = 0usize;
    for (set_idx, channel) in rate_sets.iter().enumerate() {
        let rates = expected_rates(channel, 1e4, &det, &det).unwrap();
        for trial in 0..1000u64 {
            let rec = sample_counts(&rates, 25.0, 0xFEED + set_idx as u64, trial).unwrap();
            for (count, mean) in [
                (rec.singles_1, rates.singles_1_hz * 25.0),
                (rec.singles_2, rates.singles_2_hz * 25.0),
                (rec.coincidences, rates.coincidence_hz * 25.0),
            ] {
                total += 1;
                if (count as f64 - mean).abs() > 5.0 * mean.sqrt() {
                    outside += 1;
                }
            }
        }
    }
    assert!(
        (outside as f64) < 0.01 * total as f64,
        "{outside} of {total} draws outside 5 sigma"
    );
}

#[test]
fn coincidences_never_exceed_singles() {
    let det = DetectorModel::new(1.0, 0.0, 1.0).unwrap();
    let channel = ChannelProbabilities {
        p_coincidence: 1.0,
        p_single_1: 1.0,
        p_single_2: 1.0,
        transmittance_1: 1.0,
        transmittance_2: 1.0,
    };
    let rates = expected_rates(&channel, 1e3, &det, &det).unwrap();
    for trial in 0..500 {
        let rec = sample_counts(&rates, 1.0, 7, trial).unwrap();
        assert!(rec.coincidences <= rec.singles_1.min(rec.singles_2));
    }
}

#[test]
fn pdl_modulates_singles_with_90_degree_period() {
    let chip = BellSourceChip::default();
    let config = BellPhaseConfig::split_with_alpha(std::f64::consts::PI);
    let pdl = PdlTransmittance { t_h: 1.0, t_v: 0.9 };
    let noise = NoiseModel::new(1.0, [pdl, pdl], 0.0).unwrap();
    let det = detector();

    let singles_at = |h2: f64, pdl_2: &PdlTransmittance| -> f64 {
        let (p1, p2) = chip.analyzer_singles(&config, 0.0, h2, &noise).unwrap();
        let channel = ChannelProbabilities {
            p_coincidence: 0.0,
            p_single_1: p1,
            p_single_2: p2,
            transmittance_1: noise.pdl[0].analyzed(0.0),
            transmittance_2: pdl_2.analyzed(h2),
        };
        expected_rates(&channel, 1e4, &det, &det)
            .unwrap()
            .singles_2_hz
    };

    // Unequal transmittances: sinusoid with period 90 degrees.
    let a0 = singles_at(0.0, &pdl);
    let a45 = singles_at(45.0, &pdl);
    let a90 = singles_at(90.0, &pdl);
    assert!((a0 - a90).abs() < 1e-9, "period 90: {a0} vs {a90}");
    assert!(a45 < a0, "V-analyzed singles must dip: {a45} vs {a0}");

    // Equal transmittances: flat within 1e-12 relative.
    let flat = PdlTransmittance {
        t_h: 0.95,
        t_v: 0.95,
    };
    let f0 = singles_at(0.0, &flat);
    for i in 0..20 {
        let h2 = 180.0 * i as f64 / 20.0;
        let f = singles_at(h2, &flat);
        assert!(
            (f - f0).abs() <= 1e-12 * f0,
            "flat PDL at {h2}: {f} vs {f0}"
        );
    }
}

#[test]
fn window_accidental_rate_example() {
    // Dark counts alone at 100 Hz each with a 1 ns window.
    let det = detector();
    let channel = ChannelProbabilities {
        p_coincidence: 0.0,
        p_single_1: 0.0,
        p_single_2: 0.0,
        transmittance_1: 1.0,
        transmittance_2: 1.0,
    };
    let rates = expected_rates(&channel, 0.0, &det, &det).unwrap();
    assert!((rates.coincidence_hz - 1e-5).abs() < 1e-12);
}
