//! Detector and imperfection models, expected count rates, and seeded
//! Poisson sampling of singles, coincidences, and time-binned histograms.
//!
//! Sampling is keyed: measurement point `i` under master seed `s` draws from
//! its own generator seeded by a hash of `(s, i)`, so any point is
//! reproducible in isolation and results do not depend on evaluation order
//! or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::thermal::PhaseTrajectory;

/// Single-photon detector parameters.
#[derive(Debug, Clone, Copy)]
pub struct DetectorModel {
    /// Detection efficiency in (0, 1].
    pub efficiency: f64,
    pub dark_rate_hz: f64,
    pub coincidence_window_ns: f64,
}

impl DetectorModel {
    pub fn new(efficiency: f64, dark_rate_hz: f64, coincidence_window_ns: f64) -> Result<Self> {
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "detector efficiency {efficiency} outside (0, 1]"
            )));
        }
        if dark_rate_hz < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "negative dark rate {dark_rate_hz}"
            )));
        }
        if !(coincidence_window_ns > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coincidence window must be positive, got {coincidence_window_ns} ns"
            )));
        }
        Ok(DetectorModel {
            efficiency,
            dark_rate_hz,
            coincidence_window_ns,
        })
    }
}

/// Polarization-dependent transmittance of one output fiber's 2-D grating.
#[derive(Debug, Clone, Copy)]
pub struct PdlTransmittance {
    pub t_h: f64,
    pub t_v: f64,
}

impl PdlTransmittance {
    pub fn ideal() -> Self {
        PdlTransmittance { t_h: 1.0, t_v: 1.0 }
    }

    /// Transmittance seen by an analyzer passing the polarization direction
    /// selected by a half-wave plate at `hwp_deg` followed by an H polarizer.
    pub fn analyzed(&self, hwp_deg: f64) -> f64 {
        let c = (2.0 * hwp_deg.to_radians()).cos();
        let s = (2.0 * hwp_deg.to_radians()).sin();
        self.t_h * c * c + self.t_v * s * s
    }

    /// Polarization-averaged transmittance, for detection without an
    /// analyzer.
    pub fn mean(&self) -> f64 {
        0.5 * (self.t_h + self.t_v)
    }
}

/// Phenomenological imperfection ledger.
///
/// `mode_overlap_mu` multiplies every two-photon interference cross term
/// (residual distinguishability and phase error jointly); `pdl` holds the
/// per-fiber grating transmittances; `accidental_floor` is a probability
/// added to every coincidence term.
#[derive(Debug, Clone, Copy)]
pub struct NoiseModel {
    pub mode_overlap_mu: f64,
    pub pdl: [PdlTransmittance; 2],
    pub accidental_floor: f64,
}

impl NoiseModel {
    pub fn new(
        mode_overlap_mu: f64,
        pdl: [PdlTransmittance; 2],
        accidental_floor: f64,
    ) -> Result<Self> {
        for (name, value) in [
            ("mode_overlap_mu", mode_overlap_mu),
            ("accidental_floor", accidental_floor),
            ("pdl[0].t_h", pdl[0].t_h),
            ("pdl[0].t_v", pdl[0].t_v),
            ("pdl[1].t_h", pdl[1].t_h),
            ("pdl[1].t_v", pdl[1].t_v),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {value} outside [0, 1]"
                )));
            }
        }
        Ok(NoiseModel {
            mode_overlap_mu,
            pdl,
            accidental_floor,
        })
    }

    pub fn ideal() -> Self {
        NoiseModel {
            mode_overlap_mu: 1.0,
            pdl: [PdlTransmittance::ideal(), PdlTransmittance::ideal()],
            accidental_floor: 0.0,
        }
    }
}

/// Per-pair channel probabilities feeding the rate model. The coincidence
/// probability arrives already degraded by `μ` and the accidental floor;
/// transmittances carry the PDL of whatever polarization each channel
/// analyzes.
#[derive(Debug, Clone, Copy)]
pub struct ChannelProbabilities {
    pub p_coincidence: f64,
    /// Marginal probability that a pair puts a photon on detector 1's
    /// analyzed mode (1/2 for a maximally entangled pair behind an analyzer).
    pub p_single_1: f64,
    pub p_single_2: f64,
    pub transmittance_1: f64,
    pub transmittance_2: f64,
}

/// Expected detection rates in Hz.
#[derive(Debug, Clone, Copy)]
pub struct ExpectedRates {
    pub singles_1_hz: f64,
    pub singles_2_hz: f64,
    pub coincidence_hz: f64,
}

/// Standard coincidence-counting rate model:
/// `singles_i = R·η_i·T_i·p_i + dark_i` and
/// `coinc = R·η₁η₂·T₁T₂·p + singles_1·singles_2·window`.
pub fn expected_rates(
    channel: &ChannelProbabilities,
    pair_rate_hz: f64,
    detector_1: &DetectorModel,
    detector_2: &DetectorModel,
) -> Result<ExpectedRates> {
    if pair_rate_hz < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "negative pair rate {pair_rate_hz}"
        )));
    }
    let singles_1_hz =
        pair_rate_hz * detector_1.efficiency * channel.transmittance_1 * channel.p_single_1
            + detector_1.dark_rate_hz;
    let singles_2_hz =
        pair_rate_hz * detector_2.efficiency * channel.transmittance_2 * channel.p_single_2
            + detector_2.dark_rate_hz;
    let window_s = detector_1
        .coincidence_window_ns
        .min(detector_2.coincidence_window_ns)
        * 1e-9;
    let accidental_hz = singles_1_hz * singles_2_hz * window_s;
    let coincidence_hz = pair_rate_hz
        * detector_1.efficiency
        * detector_2.efficiency
        * channel.transmittance_1
        * channel.transmittance_2
        * channel.p_coincidence
        + accidental_hz;
    Ok(ExpectedRates {
        singles_1_hz,
        singles_2_hz,
        coincidence_hz,
    })
}

/// Counts accumulated over one integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRecord {
    pub singles_1: u64,
    pub singles_2: u64,
    pub coincidences: u64,
    pub integration_time_s: f64,
    /// The derived per-point seed the draws came from.
    pub seed: u64,
}

/// Derive the generator key for measurement point `index` under a master
/// seed (SplitMix64 finalizer over the combined words).
pub fn point_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn poisson_draw(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive finite mean");
    dist.sample(rng) as u64
}

/// Draw Poisson counts for one measurement point.
///
/// Coincidences are clipped to the smaller singles draw, since every recorded
/// coincidence is also a pair of singles.
pub fn sample_counts(
    rates: &ExpectedRates,
    integration_time_s: f64,
    master_seed: u64,
    point_index: u64,
) -> Result<CountRecord> {
    if !(integration_time_s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "integration time must be positive, got {integration_time_s} s"
        )));
    }
    let seed = point_seed(master_seed, point_index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let singles_1 = poisson_draw(&mut rng, rates.singles_1_hz * integration_time_s);
    let singles_2 = poisson_draw(&mut rng, rates.singles_2_hz * integration_time_s);
    let coincidences = poisson_draw(&mut rng, rates.coincidence_hz * integration_time_s)
        .min(singles_1)
        .min(singles_2);
    Ok(CountRecord {
        singles_1,
        singles_2,
        coincidences,
        integration_time_s,
        seed,
    })
}

/// Coincidence counts folded into time bins over the drive period.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceHistogram {
    pub bin_counts: Vec<u64>,
    pub period_us: f64,
    pub total_time_s: f64,
}

impl CoincidenceHistogram {
    pub fn n_bins(&self) -> usize {
        self.bin_counts.len()
    }

    pub fn total_counts(&self) -> u64 {
        self.bin_counts.iter().sum()
    }

    pub fn bin_center_us(&self, bin: usize) -> f64 {
        self.period_us * (bin as f64 + 0.5) / self.n_bins() as f64
    }
}

/// Accumulate a coincidence histogram over the drive period.
///
/// `coincidence_rate_hz(phase)` maps the instantaneous shifter phase to an
/// expected coincidence rate; each bin Poisson-samples the trapezoid average
/// of that rate over its phase samples, scaled by the time the bin
/// accumulates (`total_time / n_bins`). Draws are keyed by `(seed, bin)`.
pub fn modulation_histogram<F>(
    trajectory: &PhaseTrajectory,
    coincidence_rate_hz: F,
    n_bins: usize,
    total_time_s: f64,
    seed: u64,
) -> Result<CoincidenceHistogram>
where
    F: Fn(f64) -> Result<f64>,
{
    if trajectory.is_empty() {
        return Err(Error::InvalidParameter("empty phase trajectory".into()));
    }
    if n_bins < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 bins, got {n_bins}"
        )));
    }
    let intervals = trajectory.len() - 1;
    if !intervals.is_multiple_of(n_bins) {
        return Err(Error::InvalidParameter(format!(
            "{intervals} trajectory intervals are not divisible into {n_bins} bins"
        )));
    }
    if total_time_s < 0.0 {
        return Err(Error::InvalidParameter("negative counting time".into()));
    }
    let per_bin = intervals / n_bins;
    let bin_time_s = total_time_s / n_bins as f64;
    let mut bin_counts = Vec::with_capacity(n_bins);
    for bin in 0..n_bins {
        // Trapezoid average of the rate over this bin's samples.
        let mut rate_sum = 0.0;
        for k in 0..=per_bin {
            let idx = bin * per_bin + k;
            let weight = if k == 0 || k == per_bin { 0.5 } else { 1.0 };
            rate_sum += weight * coincidence_rate_hz(trajectory.phases()[idx])?;
        }
        let mean_rate = rate_sum / per_bin as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(point_seed(seed, bin as u64));
        bin_counts.push(poisson_draw(&mut rng, mean_rate * bin_time_s));
    }
    Ok(CoincidenceHistogram {
        bin_counts,
        period_us: trajectory.period_us(),
        total_time_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermal::{phase_trajectory, HeaterDrive, PhaseVoltageLaw, Waveform};
    use approx::assert_abs_diff_eq;

    fn detector(efficiency: f64, dark: f64) -> DetectorModel {
        DetectorModel::new(efficiency, dark, 1.0).unwrap()
    }

    fn channel(p: f64) -> ChannelProbabilities {
        ChannelProbabilities {
            p_coincidence: p,
            p_single_1: 0.5,
            p_single_2: 0.5,
            transmittance_1: 1.0,
            transmittance_2: 1.0,
        }
    }

    #[test]
    fn lossless_rates() {
        let det = detector(1.0, 0.0);
        let rates = expected_rates(&channel(0.5), 1000.0, &det, &det).unwrap();
        // Accidentals at these singles rates are 500²·1e-9 = 2.5e−4 Hz.
        assert_abs_diff_eq!(rates.coincidence_hz, 500.0, epsilon = 1e-3);
    }

    #[test]
    fn efficiency_squared_scaling() {
        let det = detector(0.2, 0.0);
        let rates = expected_rates(&channel(0.5), 1e6, &det, &det).unwrap();
        let no_accidentals = 0.2 * 0.2 * 0.5 * 1e6;
        assert_abs_diff_eq!(
            rates.coincidence_hz,
            no_accidentals,
            epsilon = no_accidentals * 2e-2
        );
        assert!(rates.coincidence_hz > no_accidentals); // accidentals add
    }

    #[test]
    fn dark_count_accidentals() {
        let det = detector(0.2, 100.0);
        let rates = expected_rates(&channel(0.5), 0.0, &det, &det).unwrap();
        assert_abs_diff_eq!(rates.coincidence_hz, 100.0 * 100.0 * 1e-9, epsilon = 1e-12);
    }

    #[test]
    fn accidentals_scale_with_singles_product() {
        let det = detector(1.0, 0.0);
        let mut last = 0.0;
        for scale in [1.0, 2.0, 4.0] {
            let rates = expected_rates(&channel(0.0), 1e5 * scale, &det, &det).unwrap();
            if last > 0.0 {
                assert_abs_diff_eq!(rates.coincidence_hz / last, 4.0, epsilon = 1e-9);
            }
            last = rates.coincidence_hz;
        }
    }

    #[test]
    fn zero_rate_always_zero_counts() {
        let rates = ExpectedRates {
            singles_1_hz: 0.0,
            singles_2_hz: 0.0,
            coincidence_hz: 0.0,
        };
        for i in 0..20 {
            let rec = sample_counts(&rates, 10.0, 42, i).unwrap();
            assert_eq!(rec.singles_1, 0);
            assert_eq!(rec.coincidences, 0);
        }
    }

    #[test]
    fn poisson_mean_matches_expectation() {
        let rates = ExpectedRates {
            singles_1_hz: 1e5,
            singles_2_hz: 1e5,
            coincidence_hz: 1e4,
        };
        let n = 100;
        let mean: f64 = (0..n)
            .map(|i| sample_counts(&rates, 1.0, 7, i).unwrap().coincidences as f64)
            .sum::<f64>()
            / n as f64;
        // 5 sigma of the mean of n draws at lambda = 1e4.
        let tol = 5.0 * (1e4f64).sqrt() / (n as f64).sqrt();
        assert!((mean - 1e4).abs() < tol, "mean {mean}");
    }

    #[test]
    fn identical_seeds_reproduce_exactly() {
        let rates = ExpectedRates {
            singles_1_hz: 5e3,
            singles_2_hz: 6e3,
            coincidence_hz: 800.0,
        };
        let a = sample_counts(&rates, 2.0, 123, 45).unwrap();
        let b = sample_counts(&rates, 2.0, 123, 45).unwrap();
        assert_eq!(a, b);
        let c = sample_counts(&rates, 2.0, 124, 45).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn point_seeds_are_order_free() {
        // Sampling points in any order gives the same per-point records.
        let rates = ExpectedRates {
            singles_1_hz: 1e3,
            singles_2_hz: 1e3,
            coincidence_hz: 100.0,
        };
        let forward: Vec<_> = (0..10)
            .map(|i| sample_counts(&rates, 1.0, 99, i).unwrap())
            .collect();
        let mut reverse: Vec<_> = (0..10)
            .rev()
            .map(|i| sample_counts(&rates, 1.0, 99, i).unwrap())
            .collect();
        reverse.reverse();
        assert_eq!(forward, reverse);
    }

    #[test]
    fn histogram_zero_time_is_empty() {
        let law = PhaseVoltageLaw::new(0.5, 0.09).unwrap();
        let drive = HeaterDrive::new(
            Waveform::Square {
                v_first: 1.0,
                v_second: 2.0,
                rate_hz: 1e3,
            },
            law,
            10.0,
        )
        .unwrap();
        let traj = phase_trajectory(&drive, 400).unwrap();
        let hist = modulation_histogram(&traj, |_| Ok(100.0), 40, 0.0, 5).unwrap();
        assert_eq!(hist.total_counts(), 0);
        assert_eq!(hist.n_bins(), 40);
    }

    #[test]
    fn histogram_requires_divisible_grid() {
        let law = PhaseVoltageLaw::new(0.5, 0.09).unwrap();
        let drive = HeaterDrive::new(
            Waveform::Square {
                v_first: 1.0,
                v_second: 2.0,
                rate_hz: 1e3,
            },
            law,
            10.0,
        )
        .unwrap();
        let traj = phase_trajectory(&drive, 41).unwrap();
        assert!(modulation_histogram(&traj, |_| Ok(1.0), 40, 1.0, 5).is_err());
    }

    #[test]
    fn noise_model_bounds_checked() {
        assert!(NoiseModel::new(1.2, [PdlTransmittance::ideal(); 2], 0.0).is_err());
        assert!(NoiseModel::new(0.9, [PdlTransmittance::ideal(); 2], -0.1).is_err());
        assert!(NoiseModel::new(
            0.9,
            [
                PdlTransmittance { t_h: 1.0, t_v: 1.3 },
                PdlTransmittance::ideal()
            ],
            0.0
        )
        .is_err());
    }

    #[test]
    fn pdl_analyzed_transmittance_is_90_degree_periodic() {
        let pdl = PdlTransmittance { t_h: 1.0, t_v: 0.9 };
        assert_abs_diff_eq!(pdl.analyzed(0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pdl.analyzed(45.0), 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(
            pdl.analyzed(12.3),
            pdl.analyzed(12.3 + 90.0),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(pdl.mean(), 0.95, epsilon = 1e-15);
    }
}
