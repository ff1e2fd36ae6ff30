//! Wires the simulator modules into the five bench experiments and renders
//! their CSV datasets and fit summaries.
//!
//! Voltage sweeps record the squared voltage in the `sweep_value` column:
//! thermo-optic fringes are sinusoidal in `v²`, so the file is directly
//! fittable and plottable. Delay sweeps record picoseconds, analyzer sweeps
//! degrees.

use biphoton_core::chip::{BellPhaseConfig, BellSourceChip};
use biphoton_core::counting::{
    expected_rates, modulation_histogram, sample_counts, ChannelProbabilities,
    CoincidenceHistogram, DetectorModel, ExpectedRates, NoiseModel,
};
use biphoton_core::fitting::{bell_criterion, fit_fringe, fit_hom, BellVerdict, FringeFit, HomFit};
use biphoton_core::thermal::{phase_trajectory, HeaterDrive, Waveform};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::csvio::{format_sig9, round_sig9, CsvDataset};
use crate::CliError;

/// Column layouts of the three CSV families.
pub const FRINGE_COLUMNS: [&str; 4] = ["sweep_value", "coincidences", "singles_1", "singles_2"];
pub const HOM_COLUMNS: [&str; 2] = ["delay_ps", "coincidences"];
pub const MODULATION_COLUMNS: [&str; 3] = ["bin_index", "t_center_us", "coincidences"];

/// Structured result of one run, next to the rendered dataset.
/// A voltage of interest extracted from a fitted fringe.
#[derive(Debug, Clone, Copy)]
pub struct MarkedVoltage {
    pub volts: f64,
    /// What the voltage marks ("maximum" or "minimum").
    pub kind: &'static str,
}

#[derive(Debug, Clone)]
pub enum ExperimentSummary {
    Fringe {
        fit: FringeFit,
        /// Fitted extremum location (voltage sweeps only).
        marked: Option<MarkedVoltage>,
        bell: Option<BellVerdict>,
    },
    Hom {
        fit: HomFit,
    },
    BsmDelay {
        min_count: u64,
        max_count: u64,
        baseline_mean: f64,
    },
    Modulation {
        plateau_high: f64,
        plateau_low: f64,
        ratio: f64,
        expected_ratio: f64,
    },
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dataset: CsvDataset,
    pub summary: ExperimentSummary,
}

impl RunOutput {
    /// Human-readable summary block printed after a run.
    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("experiment: {}", self.dataset.experiment),
            format!("label: {}", self.dataset.label),
            format!("seed: {}", self.dataset.seed),
            format!("points: {}", self.dataset.rows.len()),
        ];
        match &self.summary {
            ExperimentSummary::Fringe { fit, marked, bell } => {
                lines.push(format!(
                    "fringe fit: visibility={:.6} offset={:.3} period={:.6} phase={:.6} rms={:.4}",
                    fit.raw_visibility(),
                    fit.offset,
                    fit.period,
                    fit.phase,
                    fit.residual_rms
                ));
                if let Some(m) = marked {
                    lines.push(format!("fringe {} at {:.4} V", m.kind, m.volts));
                }
                if let Some(verdict) = bell {
                    lines.push(format!("bell criterion: {verdict:?}"));
                }
            }
            ExperimentSummary::Hom { fit } => {
                lines.push(format!(
                    "hom fit: visibility={:.6} baseline={:.3} width={:.4} GHz center={:.4} ps rms={:.4}",
                    fit.visibility, fit.baseline, fit.fwhm_ghz, fit.delay_offset_ps, fit.residual_rms
                ));
            }
            ExperimentSummary::BsmDelay {
                min_count,
                max_count,
                baseline_mean,
            } => {
                lines.push(format!(
                    "delay sweep: min={min_count} max={max_count} wide-delay baseline={baseline_mean:.1}"
                ));
            }
            ExperimentSummary::Modulation {
                plateau_high,
                plateau_low,
                ratio,
                expected_ratio,
            } => {
                lines.push(format!(
                    "plateaus: high={plateau_high:.1} low={plateau_low:.1} ratio={ratio:.3} (noise model predicts {expected_ratio:.3})"
                ));
            }
        }
        lines
    }
}

struct Bench {
    chip: BellSourceChip,
    noise: NoiseModel,
    detectors: [DetectorModel; 2],
    pair_rate_hz: f64,
}

impl Bench {
    fn from_config(config: &ExperimentConfig) -> Result<Self, CliError> {
        let injection = match config.experiment {
            ExperimentKind::FringeVsVoltage => biphoton_core::chip::PumpInjection::Port3,
            ExperimentKind::Hom => config
                .hom
                .as_ref()
                .map(|h| h.injection.into())
                .unwrap_or(biphoton_core::chip::PumpInjection::Port3),
            _ => biphoton_core::chip::PumpInjection::MainPorts,
        };
        Ok(Bench {
            chip: BellSourceChip::with_injection(config.convention(), injection),
            noise: config.noise_model()?,
            detectors: [config.detector(0)?, config.detector(1)?],
            pair_rate_hz: config.source.pair_rate_hz,
        })
    }

    fn rates(&self, channel: &ChannelProbabilities) -> Result<ExpectedRates, CliError> {
        Ok(expected_rates(
            channel,
            self.pair_rate_hz,
            &self.detectors[0],
            &self.detectors[1],
        )?)
    }
}

/// Execute the configured experiment with an explicit master seed.
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<RunOutput, CliError> {
    match config.experiment {
        ExperimentKind::FringeVsVoltage => run_fringe_vs_voltage(config, seed),
        ExperimentKind::Hom => run_hom(config, seed),
        ExperimentKind::PolarizationFringe => run_polarization_fringe(config, seed),
        ExperimentKind::BsmPhaseSweep => run_bsm_phase_sweep(config, seed),
        ExperimentKind::BsmDelay => run_bsm_delay(config, seed),
        ExperimentKind::Modulation => run_modulation(config, seed),
    }
}

fn fringe_dataset(
    config: &ExperimentConfig,
    seed: u64,
    rows: Vec<(f64, u64, u64, u64)>,
) -> CsvDataset {
    CsvDataset {
        experiment: config.experiment.name().to_string(),
        seed,
        label: config.label.clone(),
        columns: FRINGE_COLUMNS.to_vec(),
        rows: rows
            .into_iter()
            .map(|(x, c, s1, s2)| {
                vec![
                    format_sig9(x),
                    c.to_string(),
                    s1.to_string(),
                    s2.to_string(),
                ]
            })
            .collect(),
    }
}

fn run_fringe_vs_voltage(config: &ExperimentConfig, seed: u64) -> Result<RunOutput, CliError> {
    let bench = Bench::from_config(config)?;
    let law = config.phase_law();
    let sweep = config.sweep.as_ref().expect("validated");
    let mu = bench.noise.mode_overlap_mu;
    let floor = bench.noise.accidental_floor;
    let t_mean = [bench.noise.pdl[0].mean(), bench.noise.pdl[1].mean()];

    let mut rows = Vec::with_capacity(sweep.points);
    let mut fit_samples = Vec::with_capacity(sweep.points);
    for (i, volts) in sweep.grid().into_iter().enumerate() {
        let theta = law.phase_of_voltage(volts)?;
        // Interference cross term degraded by mu, floor added on top.
        let p = 0.5 * (1.0 + mu * theta.cos()) + floor;
        let channel = ChannelProbabilities {
            p_coincidence: p,
            p_single_1: 1.0,
            p_single_2: 1.0,
            transmittance_1: t_mean[0],
            transmittance_2: t_mean[1],
        };
        let rates = bench.rates(&channel)?;
        let rec = sample_counts(&rates, sweep.integration_time_s, seed, i as u64)?;
        let v_squared = round_sig9(volts * volts);
        rows.push((v_squared, rec.coincidences, rec.singles_1, rec.singles_2));
        fit_samples.push((v_squared, rec.coincidences as f64));
    }
    let fit = fit_fringe(&fit_samples)?;
    let peak_v_squared = fit.peak_position_near(law.voltage_for_phase(0.0).powi(2));
    let peak_voltage = peak_v_squared.max(0.0).sqrt();
    Ok(RunOutput {
        dataset: fringe_dataset(config, seed, rows),
        summary: ExperimentSummary::Fringe {
            fit,
            marked: Some(MarkedVoltage {
                volts: peak_voltage,
                kind: "maximum",
            }),
            bell: None,
        },
    })
}

fn run_hom(config: &ExperimentConfig, seed: u64) -> Result<RunOutput, CliError> {
    let bench = Bench::from_config(config)?;
    let sweep = config.sweep.as_ref().expect("validated");
    let hom = config.hom.as_ref().expect("validated");
    let envelope = config.envelope();
    let floor = bench.noise.accidental_floor;
    let t_mean = [bench.noise.pdl[0].mean(), bench.noise.pdl[1].mean()];

    let mut rows = Vec::with_capacity(sweep.points);
    let mut fit_samples = Vec::with_capacity(sweep.points);
    for (i, tau) in sweep.grid().into_iter().enumerate() {
        let p = bench
            .chip
            .hom_coincidence_probability(tau, &envelope, hom.visibility)?
            + floor;
        let channel = ChannelProbabilities {
            p_coincidence: p,
            p_single_1: 1.0,
            p_single_2: 1.0,
            transmittance_1: t_mean[0],
            transmittance_2: t_mean[1],
        };
        let rates = bench.rates(&channel)?;
        let rec = sample_counts(&rates, sweep.integration_time_s, seed, i as u64)?;
        let tau_rounded = round_sig9(tau);
        rows.push((tau_rounded, rec.coincidences));
        fit_samples.push((tau_rounded, rec.coincidences as f64));
    }
    let fit = fit_hom(&fit_samples)?;
    Ok(RunOutput {
        dataset: CsvDataset {
            experiment: config.experiment.name().to_string(),
            seed,
            label: config.label.clone(),
            columns: HOM_COLUMNS.to_vec(),
            rows: rows
                .into_iter()
                .map(|(tau, c)| vec![format_sig9(tau), c.to_string()])
                .collect(),
        },
        summary: ExperimentSummary::Hom { fit },
    })
}

fn run_polarization_fringe(config: &ExperimentConfig, seed: u64) -> Result<RunOutput, CliError> {
    let bench = Bench::from_config(config)?;
    let sweep = config.sweep.as_ref().expect("validated");
    let analyzer = config.analyzer.as_ref().expect("validated");
    let phases = BellPhaseConfig::new(
        config.phases.alpha_rad,
        config.phases.theta_bs4_rad,
        config.phases.theta_bs5_rad,
    );
    let h1 = analyzer.hwp1_deg;

    let mut rows = Vec::with_capacity(sweep.points);
    let mut fit_samples = Vec::with_capacity(sweep.points);
    for (i, h2) in sweep.grid().into_iter().enumerate() {
        let p = bench
            .chip
            .analyzer_coincidence(&phases, h1, h2, &bench.noise)?;
        let (p1, p2) = bench.chip.analyzer_singles(&phases, h1, h2, &bench.noise)?;
        let channel = ChannelProbabilities {
            p_coincidence: p,
            p_single_1: p1,
            p_single_2: p2,
            transmittance_1: bench.noise.pdl[0].analyzed(h1),
            transmittance_2: bench.noise.pdl[1].analyzed(h2),
        };
        let rates = bench.rates(&channel)?;
        let rec = sample_counts(&rates, sweep.integration_time_s, seed, i as u64)?;
        let h2_rounded = round_sig9(h2);
        rows.push((h2_rounded, rec.coincidences, rec.singles_1, rec.singles_2));
        fit_samples.push((h2_rounded, rec.coincidences as f64));
    }
    let fit = fit_fringe(&fit_samples)?;
    let bell = bell_criterion(fit.raw_visibility());
    Ok(RunOutput {
        dataset: fringe_dataset(config, seed, rows),
        summary: ExperimentSummary::Fringe {
            fit,
            marked: None,
            bell: Some(bell),
        },
    })
}

fn run_bsm_phase_sweep(config: &ExperimentConfig, seed: u64) -> Result<RunOutput, CliError> {
    let bench = Bench::from_config(config)?;
    let law = config.phase_law();
    let sweep = config.sweep.as_ref().expect("validated");
    let envelope = config.envelope();
    let t_mean = [bench.noise.pdl[0].mean(), bench.noise.pdl[1].mean()];

    let mut rows = Vec::with_capacity(sweep.points);
    let mut fit_samples = Vec::with_capacity(sweep.points);
    for (i, volts) in sweep.grid().into_iter().enumerate() {
        let alpha = law.phase_of_voltage(volts)?;
        let p = bench.chip.bsm_coincidence(
            &BellPhaseConfig::split_with_alpha(alpha),
            0.0,
            &envelope,
            &bench.noise,
        )?;
        let channel = ChannelProbabilities {
            p_coincidence: p,
            p_single_1: 1.0,
            p_single_2: 1.0,
            transmittance_1: t_mean[0],
            transmittance_2: t_mean[1],
        };
        let rates = bench.rates(&channel)?;
        let rec = sample_counts(&rates, sweep.integration_time_s, seed, i as u64)?;
        let v_squared = round_sig9(volts * volts);
        rows.push((v_squared, rec.coincidences, rec.singles_1, rec.singles_2));
        fit_samples.push((v_squared, rec.coincidences as f64));
    }
    let fit = fit_fringe(&fit_samples)?;
    // The coincidence minimum marks the bunching state; report its voltage.
    let omega = 2.0 * std::f64::consts::PI / fit.period;
    let min_v_squared = {
        let near = law.voltage_for_phase(0.0).powi(2);
        let n = ((near * omega + fit.phase - std::f64::consts::PI) / (2.0 * std::f64::consts::PI))
            .round();
        ((2.0 * n + 1.0) * std::f64::consts::PI - fit.phase) / omega
    };
    Ok(RunOutput {
        dataset: fringe_dataset(config, seed, rows),
        summary: ExperimentSummary::Fringe {
            fit,
            marked: Some(MarkedVoltage {
                volts: min_v_squared.max(0.0).sqrt(),
                kind: "minimum",
            }),
            bell: None,
        },
    })
}

fn run_bsm_delay(config: &ExperimentConfig, seed: u64) -> Result<RunOutput, CliError> {
    let bench = Bench::from_config(config)?;
    let sweep = config.sweep.as_ref().expect("validated");
    let envelope = config.envelope();
    let phases = BellPhaseConfig::split_with_alpha(config.phases.alpha_rad);
    let t_mean = [bench.noise.pdl[0].mean(), bench.noise.pdl[1].mean()];
    let wide_delay = 3e3 / config.source.filter_fwhm_ghz;

    let mut rows = Vec::with_capacity(sweep.points);
    let mut wide = Vec::new();
    for (i, tau) in sweep.grid().into_iter().enumerate() {
        let p = bench
            .chip
            .bsm_coincidence(&phases, tau, &envelope, &bench.noise)?;
        let channel = ChannelProbabilities {
            p_coincidence: p,
            p_single_1: 1.0,
            p_single_2: 1.0,
            transmittance_1: t_mean[0],
            transmittance_2: t_mean[1],
        };
        let rates = bench.rates(&channel)?;
        let rec = sample_counts(&rates, sweep.integration_time_s, seed, i as u64)?;
        rows.push((round_sig9(tau), rec.coincidences));
        if tau.abs() > wide_delay {
            wide.push(rec.coincidences as f64);
        }
    }
    let min_count = rows.iter().map(|r| r.1).min().unwrap_or(0);
    let max_count = rows.iter().map(|r| r.1).max().unwrap_or(0);
    let baseline_mean = if wide.is_empty() {
        0.0
    } else {
        wide.iter().sum::<f64>() / wide.len() as f64
    };
    Ok(RunOutput {
        dataset: CsvDataset {
            experiment: config.experiment.name().to_string(),
            seed,
            label: config.label.clone(),
            columns: HOM_COLUMNS.to_vec(),
            rows: rows
                .into_iter()
                .map(|(tau, c)| vec![format_sig9(tau), c.to_string()])
                .collect(),
        },
        summary: ExperimentSummary::BsmDelay {
            min_count,
            max_count,
            baseline_mean,
        },
    })
}

fn run_modulation(config: &ExperimentConfig, seed: u64) -> Result<RunOutput, CliError> {
    let hist = modulation_histogram_for(config, seed)?;
    let summary = modulation_summary(config, &hist)?;
    let rows = hist
        .bin_counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            vec![
                i.to_string(),
                format_sig9(round_sig9(hist.bin_center_us(i))),
                c.to_string(),
            ]
        })
        .collect();
    Ok(RunOutput {
        dataset: CsvDataset {
            experiment: config.experiment.name().to_string(),
            seed,
            label: config.label.clone(),
            columns: MODULATION_COLUMNS.to_vec(),
            rows,
        },
        summary,
    })
}

/// Build the square-wave drive (first half at the bunching voltage, second
/// half at the splitting voltage) and accumulate the histogram.
pub fn modulation_histogram_for(
    config: &ExperimentConfig,
    seed: u64,
) -> Result<CoincidenceHistogram, CliError> {
    let bench = Bench::from_config(config)?;
    let law = config.phase_law();
    let modulation = config.modulation.as_ref().ok_or_else(|| CliError::Config {
        key: "modulation".into(),
        reason: "section required".into(),
    })?;
    let envelope = config.envelope();
    let t_mean = [bench.noise.pdl[0].mean(), bench.noise.pdl[1].mean()];

    let drive = HeaterDrive::new(
        Waveform::Square {
            v_first: law.voltage_for_phase(0.0),
            v_second: law.voltage_for_phase(std::f64::consts::PI),
            rate_hz: modulation.rate_hz,
        },
        law,
        config.phase_law.tau_thermal_us,
    )?;
    let trajectory = phase_trajectory(&drive, modulation.n_bins * modulation.samples_per_bin)?;
    let rate_of_phase = |alpha: f64| -> biphoton_core::error::Result<f64> {
        let p = bench.chip.bsm_coincidence(
            &BellPhaseConfig::split_with_alpha(alpha),
            0.0,
            &envelope,
            &bench.noise,
        )?;
        let channel = ChannelProbabilities {
            p_coincidence: p,
            p_single_1: 1.0,
            p_single_2: 1.0,
            transmittance_1: t_mean[0],
            transmittance_2: t_mean[1],
        };
        Ok(expected_rates(
            &channel,
            bench.pair_rate_hz,
            &bench.detectors[0],
            &bench.detectors[1],
        )?
        .coincidence_hz)
    };
    Ok(modulation_histogram(
        &trajectory,
        rate_of_phase,
        modulation.n_bins,
        modulation.total_time_s,
        seed,
    )?)
}

fn modulation_summary(
    config: &ExperimentConfig,
    hist: &CoincidenceHistogram,
) -> Result<ExperimentSummary, CliError> {
    let mut sorted: Vec<f64> = hist.bin_counts.iter().map(|&c| c as f64).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quarter = (sorted.len() / 4).max(1);
    let plateau_low = sorted[..quarter].iter().sum::<f64>() / quarter as f64;
    let plateau_high = sorted[sorted.len() - quarter..].iter().sum::<f64>() / quarter as f64;
    let ratio = if plateau_low > 0.0 {
        plateau_high / plateau_low
    } else {
        f64::INFINITY
    };
    let noise = config.noise_model()?;
    let f = noise.mode_overlap_mu / (1.0 + 2.0 * noise.accidental_floor);
    Ok(ExperimentSummary::Modulation {
        plateau_high,
        plateau_low,
        ratio,
        expected_ratio: (1.0 + f) / (1.0 - f),
    })
}
