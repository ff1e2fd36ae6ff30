//! Experiment configuration: TOML schema, loading, and validation.
//!
//! One config file describes one experiment run end to end: the bench
//! parameters, imperfection model, detectors, sweep grid, and output path.
//! The annotated files under `configs/` are the shipped defaults, one per
//! experiment.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use biphoton_core::chip::{PumpInjection, SPEED_OF_LIGHT_NM_THZ};
use biphoton_core::circuit::SplitterConvention;
use biphoton_core::counting::{DetectorModel, NoiseModel, PdlTransmittance};
use biphoton_core::spectral::{SpectralEnvelope, SpectralShape};
use biphoton_core::thermal::PhaseVoltageLaw;

use crate::CliError;

/// Energy-conservation tolerance on `ω_p1 + ω_p2 − 2ω_s`: 0.1 GHz.
pub const ENERGY_CONSERVATION_TOL_THZ: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "fringe-vs-voltage")]
    FringeVsVoltage,
    #[serde(rename = "hom")]
    Hom,
    #[serde(rename = "polarization-fringe")]
    PolarizationFringe,
    #[serde(rename = "bsm-phase-sweep")]
    BsmPhaseSweep,
    #[serde(rename = "bsm-delay")]
    BsmDelay,
    #[serde(rename = "modulation")]
    Modulation,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::FringeVsVoltage => "fringe-vs-voltage",
            ExperimentKind::Hom => "hom",
            ExperimentKind::PolarizationFringe => "polarization-fringe",
            ExperimentKind::BsmPhaseSweep => "bsm-phase-sweep",
            ExperimentKind::BsmDelay => "bsm-delay",
            ExperimentKind::Modulation => "modulation",
        }
    }

    pub fn all() -> [ExperimentKind; 6] {
        [
            ExperimentKind::FringeVsVoltage,
            ExperimentKind::Hom,
            ExperimentKind::PolarizationFringe,
            ExperimentKind::BsmPhaseSweep,
            ExperimentKind::BsmDelay,
            ExperimentKind::Modulation,
        ]
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Short provenance tag echoed into the CSV comment header.
    pub label: String,
    #[serde(default)]
    pub description: String,
    pub seed: u64,
    pub output: PathBuf,
    #[serde(default)]
    pub bs_convention: ConventionName,
    pub source: SourceSection,
    pub phase_law: PhaseLawSection,
    #[serde(default)]
    pub phases: PhasesSection,
    #[serde(default)]
    pub noise: NoiseSection,
    pub detectors: DetectorsSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub hom: Option<HomSection>,
    #[serde(default)]
    pub analyzer: Option<AnalyzerSection>,
    #[serde(default)]
    pub modulation: Option<ModulationSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
pub enum ConventionName {
    #[serde(rename = "symmetric")]
    #[default]
    Symmetric,
    #[serde(rename = "hadamard")]
    Hadamard,
}

impl From<ConventionName> for SplitterConvention {
    fn from(name: ConventionName) -> Self {
        match name {
            ConventionName::Symmetric => SplitterConvention::Symmetric,
            ConventionName::Hadamard => SplitterConvention::Hadamard,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub pump_wavelength_1_nm: f64,
    pub pump_wavelength_2_nm: f64,
    pub filter_center_nm: f64,
    pub filter_fwhm_ghz: f64,
    #[serde(default)]
    pub filter_shape: ShapeName,
    pub pair_rate_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
pub enum ShapeName {
    #[serde(rename = "rectangular")]
    #[default]
    Rectangular,
    #[serde(rename = "gaussian")]
    Gaussian,
}

impl From<ShapeName> for SpectralShape {
    fn from(name: ShapeName) -> Self {
        match name {
            ShapeName::Rectangular => SpectralShape::Rectangular,
            ShapeName::Gaussian => SpectralShape::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseLawSection {
    pub phi0_rad: f64,
    pub kappa_rad_per_v2: f64,
    #[serde(default = "default_tau_thermal")]
    pub tau_thermal_us: f64,
}

fn default_tau_thermal() -> f64 {
    10.0
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PhasesSection {
    #[serde(default)]
    pub alpha_rad: f64,
    #[serde(default)]
    pub theta_bs4_rad: f64,
    #[serde(default)]
    pub theta_bs5_rad: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub mode_overlap_mu: f64,
    pub accidental_floor: f64,
    /// `(t_H, t_V)` grating transmittances of fiber 1 (port 5).
    pub pdl_fiber_1: [f64; 2],
    pub pdl_fiber_2: [f64; 2],
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            mode_overlap_mu: 1.0,
            accidental_floor: 0.0,
            pdl_fiber_1: [1.0, 1.0],
            pdl_fiber_2: [1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorsSection {
    pub efficiency: [f64; 2],
    pub dark_rate_hz: [f64; 2],
    pub coincidence_window_ns: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub integration_time_s: f64,
}

impl SweepSection {
    pub fn grid(&self) -> Vec<f64> {
        (0..self.points)
            .map(|i| {
                self.start + (self.stop - self.start) * i as f64 / (self.points - 1).max(1) as f64
            })
            .collect()
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.points - 1).max(1) as f64
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomSection {
    /// Raw visibility ceiling of the dip.
    pub visibility: f64,
    /// Which source pair interferes: `port3` pumps W1/W2, `port4` pumps W3/W4.
    #[serde(default)]
    pub injection: InjectionName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
pub enum InjectionName {
    #[serde(rename = "port3")]
    #[default]
    Port3,
    #[serde(rename = "port4")]
    Port4,
}

impl From<InjectionName> for PumpInjection {
    fn from(name: InjectionName) -> Self {
        match name {
            InjectionName::Port3 => PumpInjection::Port3,
            InjectionName::Port4 => PumpInjection::Port4,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzerSection {
    pub hwp1_deg: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationSection {
    pub rate_hz: f64,
    pub n_bins: usize,
    pub total_time_s: f64,
    /// Trajectory samples per histogram bin.
    #[serde(default = "default_samples_per_bin")]
    pub samples_per_bin: usize,
}

fn default_samples_per_bin() -> usize {
    25
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            key: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config {
            key: "toml".into(),
            reason: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Validate cross-field constraints. Error messages name the offending
    /// key.
    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.source;
        for (key, value) in [
            ("source.pump_wavelength_1_nm", s.pump_wavelength_1_nm),
            ("source.pump_wavelength_2_nm", s.pump_wavelength_2_nm),
            ("source.filter_center_nm", s.filter_center_nm),
            ("source.filter_fwhm_ghz", s.filter_fwhm_ghz),
        ] {
            if !(value > 0.0) {
                return Err(CliError::Config {
                    key: key.into(),
                    reason: format!("must be positive, got {value}"),
                });
            }
        }
        if s.pair_rate_hz < 0.0 {
            return Err(CliError::Config {
                key: "source.pair_rate_hz".into(),
                reason: "must be non-negative".into(),
            });
        }

        // Degenerate-pair energy conservation against the filter center.
        let f1 = SPEED_OF_LIGHT_NM_THZ / s.pump_wavelength_1_nm;
        let f2 = SPEED_OF_LIGHT_NM_THZ / s.pump_wavelength_2_nm;
        let fs = SPEED_OF_LIGHT_NM_THZ / s.filter_center_nm;
        let mismatch = (f1 + f2 - 2.0 * fs).abs();
        if mismatch > ENERGY_CONSERVATION_TOL_THZ {
            return Err(CliError::Config {
                key: "source.pump_wavelength_2_nm".into(),
                reason: format!(
                    "pump frequencies violate energy conservation with the filter center by {:.4} GHz (limit 0.1 GHz)",
                    mismatch * 1e3
                ),
            });
        }

        if !(self.phase_law.kappa_rad_per_v2 > 0.0) {
            return Err(CliError::Config {
                key: "phase_law.kappa_rad_per_v2".into(),
                reason: "must be positive".into(),
            });
        }
        if !(self.phase_law.tau_thermal_us > 0.0) {
            return Err(CliError::Config {
                key: "phase_law.tau_thermal_us".into(),
                reason: "must be positive".into(),
            });
        }
        self.noise_model().map_err(|e| CliError::Config {
            key: "noise".into(),
            reason: e.to_string(),
        })?;
        self.detector(0).map_err(|e| CliError::Config {
            key: "detectors".into(),
            reason: e.to_string(),
        })?;
        self.detector(1).map_err(|e| CliError::Config {
            key: "detectors".into(),
            reason: e.to_string(),
        })?;

        let needs_sweep = !matches!(self.experiment, ExperimentKind::Modulation);
        if needs_sweep {
            let sweep = self.sweep.as_ref().ok_or_else(|| CliError::Config {
                key: "sweep".into(),
                reason: format!("section required for `{}`", self.experiment.name()),
            })?;
            if sweep.points < 2 {
                return Err(CliError::Config {
                    key: "sweep.points".into(),
                    reason: "need at least 2 points".into(),
                });
            }
            if !(sweep.stop > sweep.start) {
                return Err(CliError::Config {
                    key: "sweep.stop".into(),
                    reason: "must exceed sweep.start".into(),
                });
            }
            if !(sweep.integration_time_s > 0.0) {
                return Err(CliError::Config {
                    key: "sweep.integration_time_s".into(),
                    reason: "must be positive".into(),
                });
            }
        }
        match self.experiment {
            ExperimentKind::Hom => {
                let hom = self.hom.as_ref().ok_or_else(|| CliError::Config {
                    key: "hom".into(),
                    reason: "section required for `hom`".into(),
                })?;
                if !(0.0..=1.0).contains(&hom.visibility) {
                    return Err(CliError::Config {
                        key: "hom.visibility".into(),
                        reason: "must lie in [0, 1]".into(),
                    });
                }
            }
            ExperimentKind::PolarizationFringe => {
                if self.analyzer.is_none() {
                    return Err(CliError::Config {
                        key: "analyzer".into(),
                        reason: "section required for `polarization-fringe`".into(),
                    });
                }
            }
            ExperimentKind::Modulation => {
                let m = self.modulation.as_ref().ok_or_else(|| CliError::Config {
                    key: "modulation".into(),
                    reason: "section required for `modulation`".into(),
                })?;
                if m.n_bins < 2 {
                    return Err(CliError::Config {
                        key: "modulation.n_bins".into(),
                        reason: "need at least 2 bins".into(),
                    });
                }
                if !(m.rate_hz > 0.0) {
                    return Err(CliError::Config {
                        key: "modulation.rate_hz".into(),
                        reason: "must be positive".into(),
                    });
                }
                if m.total_time_s < 0.0 {
                    return Err(CliError::Config {
                        key: "modulation.total_time_s".into(),
                        reason: "must be non-negative".into(),
                    });
                }
                if m.samples_per_bin < 2 {
                    return Err(CliError::Config {
                        key: "modulation.samples_per_bin".into(),
                        reason: "need at least 2 samples per bin".into(),
                    });
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn convention(&self) -> SplitterConvention {
        self.bs_convention.into()
    }

    pub fn envelope(&self) -> SpectralEnvelope {
        SpectralEnvelope::new(
            self.source.filter_shape.into(),
            self.source.filter_center_nm,
            self.source.filter_fwhm_ghz,
        )
        .expect("validated")
    }

    pub fn phase_law(&self) -> PhaseVoltageLaw {
        PhaseVoltageLaw::new(self.phase_law.phi0_rad, self.phase_law.kappa_rad_per_v2)
            .expect("validated")
    }

    pub fn noise_model(&self) -> biphoton_core::error::Result<NoiseModel> {
        NoiseModel::new(
            self.noise.mode_overlap_mu,
            [
                PdlTransmittance {
                    t_h: self.noise.pdl_fiber_1[0],
                    t_v: self.noise.pdl_fiber_1[1],
                },
                PdlTransmittance {
                    t_h: self.noise.pdl_fiber_2[0],
                    t_v: self.noise.pdl_fiber_2[1],
                },
            ],
            self.noise.accidental_floor,
        )
    }

    pub fn detector(&self, index: usize) -> biphoton_core::error::Result<DetectorModel> {
        DetectorModel::new(
            self.detectors.efficiency[index],
            self.detectors.dark_rate_hz[index],
            self.detectors.coincidence_window_ns,
        )
    }
}

/// Locate the shipped default configs, searching the working directory first
/// and falling back to the crate directory.
pub fn builtin_config_dir() -> Option<PathBuf> {
    let candidates = [
        PathBuf::from("crates/cli/configs"),
        PathBuf::from("configs"),
        Path::new(env!("CARGO_MANIFEST_DIR")).join("configs"),
    ];
    candidates.into_iter().find(|p| p.is_dir())
}
