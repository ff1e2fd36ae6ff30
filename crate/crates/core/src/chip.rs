//! The entangled-pair source chip and its fiber bench.
//!
//! Layout: two pumps enter a splitter tree (BS1 feeding BS2/BS3) that ends in
//! four long waveguides W1-W4, each hosting a photon-pair source. Pairs from
//! W1/W2 interfere at BS4 and pairs from W3/W4 at BS5; two 2-D gratings then
//! couple the four splitter outputs into the H/V polarizations of two output
//! fibers. With both splitter outputs tuned to the split condition the fiber
//! state is `(|H,V⟩ + e^{iα}|V,H⟩)/√2`.
//!
//! Phase parameters are *effective two-photon phases* measured from the
//! calibrated operating points, matching how the bench is tuned in practice:
//! `theta_bs4`/`theta_bs5` are deviations from the split condition of the
//! respective splitter, and `alpha` is the superposition phase of the fiber
//! state itself. The splitter-convention offset is folded in where the source
//! amplitudes are assigned, which is what makes every observable independent
//! of the convention choice.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use crate::circuit::{compile_unitary, CircuitGraph, Component, SplitterConvention};
use crate::counting::NoiseModel;
use crate::error::{Error, Result};
use crate::modes::{Mode, ModeRegistry, Polarization};
use crate::spectral::SpectralEnvelope;
use crate::state::{MixedTwoPhotonState, TwoPhotonState};

/// Vacuum speed of light in nm·THz.
pub const SPEED_OF_LIGHT_NM_THZ: f64 = 299_792.458;

/// Default filter center wavelength (nm) used for the bench mode registry.
pub const DEFAULT_FILTER_CENTER_NM: f64 = 1552.5;

pub const WAVEGUIDE_LABELS: [&str; 4] = ["W1", "W2", "W3", "W4"];
pub const FIBER_LABELS: [&str; 2] = ["P5", "P6"];

/// Thermal shifter settings as effective two-photon phases (radians).
#[derive(Debug, Clone, Copy)]
pub struct BellPhaseConfig {
    /// Superposition phase between the two pair branches (TPS1).
    pub alpha: f64,
    /// Deviation of the W1/W2 interference from the BS4 split condition (TPS2).
    pub theta_bs4: f64,
    /// Deviation of the W3/W4 interference from the BS5 split condition (TPS3).
    pub theta_bs5: f64,
}

impl BellPhaseConfig {
    /// Normalize all phases into [0, 2π).
    pub fn new(alpha: f64, theta_bs4: f64, theta_bs5: f64) -> Self {
        let tau = 2.0 * std::f64::consts::PI;
        BellPhaseConfig {
            alpha: alpha.rem_euclid(tau),
            theta_bs4: theta_bs4.rem_euclid(tau),
            theta_bs5: theta_bs5.rem_euclid(tau),
        }
    }

    /// Both splitters at the split condition, superposition phase `alpha`.
    pub fn split_with_alpha(alpha: f64) -> Self {
        BellPhaseConfig::new(alpha, 0.0, 0.0)
    }
}

/// Which input port carries the pumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PumpInjection {
    /// Both pumps through the main inputs of BS1; all four sources pumped.
    #[default]
    MainPorts,
    /// Auxiliary input on BS2; only W1/W2 pumped.
    Port3,
    /// Auxiliary input on BS3; only W3/W4 pumped.
    Port4,
}

/// Output state restricted to the fiber modes, along with the probability
/// that both photons exited through the same fiber. A nonzero bunched
/// fraction flags splitter phases away from the split condition.
#[derive(Debug, Clone)]
pub struct FiberOutput {
    pub state: TwoPhotonState,
    pub bunched_fraction: f64,
}

/// The chip plus fiber-bench model.
#[derive(Debug, Clone)]
pub struct BellSourceChip {
    registry: Arc<ModeRegistry>,
    fiber_registry: Arc<ModeRegistry>,
    graph: CircuitGraph,
    injection: PumpInjection,
    convention: SplitterConvention,
}

impl BellSourceChip {
    pub fn new(convention: SplitterConvention) -> Self {
        Self::with_injection(convention, PumpInjection::MainPorts)
    }

    pub fn with_injection(convention: SplitterConvention, injection: PumpInjection) -> Self {
        let center_thz = SPEED_OF_LIGHT_NM_THZ / DEFAULT_FILTER_CENTER_NM;
        let mut modes: Vec<Mode> = WAVEGUIDE_LABELS
            .iter()
            .map(|w| Mode::on_chip(*w, center_thz))
            .collect();
        for fiber in FIBER_LABELS {
            modes.push(Mode::fiber(
                format!("{fiber}H"),
                Polarization::H,
                center_thz,
            ));
            modes.push(Mode::fiber(
                format!("{fiber}V"),
                Polarization::V,
                center_thz,
            ));
        }
        let registry = ModeRegistry::new(modes).expect("bench registry is valid");

        let one = Complex64::new(1.0, 0.0);
        // Before the sources the W1..W4 slots carry the pump paths: BS1's two
        // inputs sit on the W1/W3 slots, the auxiliary ports on W2/W4.
        let stages = vec![
            vec![Component::BeamSplitter50 {
                port_a: "W1".into(),
                port_b: "W3".into(),
            }],
            // TPS1 site on the arm feeding BS3; the effective superposition
            // phase is applied at pair level by the source-state builder.
            vec![Component::PhaseShifter {
                port: "W3".into(),
                phase: 0.0,
            }],
            vec![
                Component::BeamSplitter50 {
                    port_a: "W1".into(),
                    port_b: "W2".into(),
                },
                Component::BeamSplitter50 {
                    port_a: "W3".into(),
                    port_b: "W4".into(),
                },
            ],
            WAVEGUIDE_LABELS
                .iter()
                .map(|w| Component::SfwmSource {
                    port: (*w).into(),
                    pair_amplitude: one,
                })
                .collect(),
            vec![
                Component::BeamSplitter50 {
                    port_a: "W1".into(),
                    port_b: "W2".into(),
                },
                Component::BeamSplitter50 {
                    port_a: "W3".into(),
                    port_b: "W4".into(),
                },
            ],
            // 2-D gratings: splitter outputs land on the fiber polarizations
            // as (BS4 c -> P5 H), (BS5 c -> P5 V), (BS5 d -> P6 H),
            // (BS4 d -> P6 V).
            vec![
                Component::GratingMapper2D {
                    in_top: "W1".into(),
                    in_bottom: "W3".into(),
                    out_fiber: "P5".into(),
                },
                Component::GratingMapper2D {
                    in_top: "W4".into(),
                    in_bottom: "W2".into(),
                    out_fiber: "P6".into(),
                },
            ],
        ];
        let graph = CircuitGraph::new(Arc::clone(&registry), stages, convention)
            .expect("bench graph is valid");

        let fiber_modes = ["P5H", "P5V", "P6H", "P6V"]
            .iter()
            .map(|label| {
                let idx = registry.index(label).unwrap();
                registry.mode(idx).clone()
            })
            .collect();
        let fiber_registry = ModeRegistry::new(fiber_modes).expect("fiber registry is valid");

        BellSourceChip {
            registry,
            fiber_registry,
            graph,
            injection,
            convention,
        }
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn fiber_registry(&self) -> &Arc<ModeRegistry> {
        &self.fiber_registry
    }

    pub fn graph(&self) -> &CircuitGraph {
        &self.graph
    }

    pub fn convention(&self) -> SplitterConvention {
        self.convention
    }

    fn fiber_indices(&self) -> [usize; 4] {
        ["P5H", "P5V", "P6H", "P6V"].map(|l| self.registry.index(l).unwrap())
    }

    /// Joint pump amplitude product reaching each waveguide, traced through
    /// the splitter tree (pair amplitude ∝ product of the two pump fields).
    pub fn pump_amplitudes(&self) -> Result<[Complex64; 4]> {
        let source_stage = self.graph.source_stage().ok_or(Error::MissingSources)?;
        let pump_unitary = self.graph.compile_range(0..source_stage)?;
        let m = self.registry.len();
        let inject = |port: usize| -> Vec<Complex64> {
            let mut field = vec![Complex64::new(0.0, 0.0); m];
            for (row, f) in field.iter_mut().enumerate() {
                *f = pump_unitary[(row, port)];
            }
            field
        };
        let w: [usize; 4] = WAVEGUIDE_LABELS.map(|l| self.registry.index(l).unwrap());
        let products: Vec<Complex64> = match self.injection {
            PumpInjection::MainPorts => {
                let p1 = inject(w[0]);
                let p2 = inject(w[2]);
                w.iter().map(|&k| p1[k] * p2[k]).collect()
            }
            PumpInjection::Port3 => {
                let p = inject(w[1]);
                w.iter().map(|&k| p[k] * p[k]).collect()
            }
            PumpInjection::Port4 => {
                let p = inject(w[3]);
                w.iter().map(|&k| p[k] * p[k]).collect()
            }
        };
        Ok([products[0], products[1], products[2], products[3]])
    }

    /// Post-selected single-pair source state `Σ_k c_k |2⟩_{Wk}`.
    ///
    /// The tree trace sets the magnitudes `|c_k|`; phases are assigned from
    /// the effective phase config, with the splitter convention's split
    /// offset folded onto W1/W3 (the benchtop calibration absorbs any static
    /// phase, so only these deviations are physical).
    pub fn build_source_state(
        &self,
        phases: &BellPhaseConfig,
        pair_amplitude: Complex64,
    ) -> Result<TwoPhotonState> {
        let sources = self.graph.sources()?;
        if sources.is_empty() {
            return Err(Error::MissingSources);
        }
        let products = self.pump_amplitudes()?;
        let split_offset = self.convention.split_condition_phase();
        let assigned_phases = [
            phases.theta_bs4 + split_offset,
            0.0,
            phases.alpha + phases.theta_bs5 + split_offset,
            phases.alpha,
        ];
        let waveguides: [usize; 4] = WAVEGUIDE_LABELS.map(|l| self.registry.index(l).unwrap());
        let m = self.registry.len();
        let mut amps: Array2<Complex64> = Array2::zeros((m, m));
        for &(port, source_amp) in &sources {
            let k = waveguides.iter().position(|&w| w == port).ok_or_else(|| {
                Error::InvalidComponent(format!(
                    "pair source on `{}` sits outside the four source waveguides",
                    self.registry.mode(port).label
                ))
            })?;
            let magnitude = (products[k] * source_amp * pair_amplitude).norm();
            amps[(port, port)] = Complex64::from_polar(
                magnitude * std::f64::consts::FRAC_1_SQRT_2,
                assigned_phases[k],
            );
        }
        TwoPhotonState::from_amplitudes(Arc::clone(&self.registry), amps)
    }

    /// Propagate a source state through the post-generation section
    /// (BS4/BS5 and the grating mappers).
    pub fn propagate_to_fibers(&self, source: &TwoPhotonState) -> Result<TwoPhotonState> {
        let source_stage = self.graph.source_stage().ok_or(Error::MissingSources)?;
        let post = self
            .graph
            .compile_range(source_stage + 1..self.graph.stages().len())?;
        source.apply_unitary(&post)
    }

    /// Fiber-mode output state for the given phase config.
    ///
    /// At the split condition (`theta_bs4 = theta_bs5 = 0`) this is
    /// `(|H,V⟩ + e^{iα}|V,H⟩)/√2`; away from it, the bunched fraction is
    /// reported rather than treated as fatal.
    pub fn output_state(&self, config: &BellPhaseConfig) -> Result<FiberOutput> {
        let source = self.build_source_state(config, Complex64::new(1.0, 0.0))?;
        let full = self.propagate_to_fibers(&source)?;
        let fibers = self.fiber_indices();
        let split = full.coincidence_between(&fibers[..2], &fibers[2..])?;
        let state = full.restrict(&fibers, Arc::clone(&self.fiber_registry))?;
        Ok(FiberOutput {
            state,
            bunched_fraction: (1.0 - split).max(0.0),
        })
    }

    /// Analytic `(|H,V⟩ + e^{iα}|V,H⟩)/√2` on the fiber registry.
    pub fn fiber_bell_state(&self, alpha: f64) -> TwoPhotonState {
        let hv =
            TwoPhotonState::one_in_each(Arc::clone(&self.fiber_registry), "P5H", "P6V").unwrap();
        let vh =
            TwoPhotonState::one_in_each(Arc::clone(&self.fiber_registry), "P5V", "P6H").unwrap();
        let c = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        TwoPhotonState::superpose(&[(c, &hv), (c * Complex64::from_polar(1.0, alpha), &vh)])
            .unwrap()
    }

    /// Coincidence probability across the two output fibers for a two-source
    /// interference at relative two-photon phase `theta`, via the full
    /// compiled pipeline. Matches [`split_probability`] to numerical
    /// precision.
    pub fn split_probability_simulated(&self, theta: f64) -> Result<f64> {
        let chip = BellSourceChip::with_injection(self.convention, PumpInjection::Port3);
        let config = BellPhaseConfig {
            alpha: 0.0,
            theta_bs4: theta,
            theta_bs5: 0.0,
        };
        let source = chip.build_source_state(&config, Complex64::new(1.0, 0.0))?;
        let full = chip.propagate_to_fibers(&source)?;
        let fibers = chip.fiber_indices();
        full.coincidence_between(&fibers[..2], &fibers[2..])
    }

    /// Ensemble representing the noisy fiber state: weight `w` keeps the
    /// coherent superposition, the remainder dephases into an even mixture of
    /// the two product branches.
    fn noisy_fiber_ensemble(
        &self,
        config: &BellPhaseConfig,
        coherent_weight: f64,
    ) -> Result<MixedTwoPhotonState> {
        let coherent = self.output_state(config)?.state;
        if coherent_weight >= 1.0 {
            return Ok(MixedTwoPhotonState::pure(coherent));
        }
        let hv = TwoPhotonState::one_in_each(Arc::clone(&self.fiber_registry), "P5H", "P6V")?;
        let vh = TwoPhotonState::one_in_each(Arc::clone(&self.fiber_registry), "P5V", "P6H")?;
        let rest = (1.0 - coherent_weight) / 2.0;
        MixedTwoPhotonState::new(vec![(coherent_weight, coherent), (rest, hv), (rest, vh)])
    }

    /// Coincidence probability behind the two polarization analyzers
    /// (half-wave plate then H polarizer on each fiber).
    ///
    /// Ideal value `½|cos2h₁·sin2h₂ + e^{iα}·sin2h₁·cos2h₂|²`; the noise
    /// model multiplies the interference cross term by `μ` and adds the
    /// accidental floor. PDL enters through the rate model, not here.
    pub fn analyzer_coincidence(
        &self,
        config: &BellPhaseConfig,
        hwp1_deg: f64,
        hwp2_deg: f64,
        noise: &NoiseModel,
    ) -> Result<f64> {
        let ensemble = self.noisy_fiber_ensemble(config, noise.mode_overlap_mu)?;
        let analyzed = ensemble.apply_unitary(&self.analyzer_unitary(hwp1_deg, hwp2_deg)?)?;
        let pass_1 = self.fiber_registry.index("P5H")?;
        let pass_2 = self.fiber_registry.index("P6H")?;
        Ok(analyzed.prob_coincidence(pass_1, pass_2)? + noise.accidental_floor)
    }

    /// Marginal photon probabilities on the two analyzer pass modes
    /// (the `p_single` inputs of the rate model; 1/2 for the ideal state).
    pub fn analyzer_singles(
        &self,
        config: &BellPhaseConfig,
        hwp1_deg: f64,
        hwp2_deg: f64,
        noise: &NoiseModel,
    ) -> Result<(f64, f64)> {
        let ensemble = self.noisy_fiber_ensemble(config, noise.mode_overlap_mu)?;
        let analyzed = ensemble.apply_unitary(&self.analyzer_unitary(hwp1_deg, hwp2_deg)?)?;
        let pass_1 = self.fiber_registry.index("P5H")?;
        let pass_2 = self.fiber_registry.index("P6H")?;
        Ok((
            analyzed.mode_occupation(pass_1)?,
            analyzed.mode_occupation(pass_2)?,
        ))
    }

    fn analyzer_unitary(&self, hwp1_deg: f64, hwp2_deg: f64) -> Result<Array2<Complex64>> {
        let graph = CircuitGraph::new(
            Arc::clone(&self.fiber_registry),
            vec![vec![
                Component::HalfWavePlate {
                    fiber: "P5".into(),
                    angle_deg: hwp1_deg.rem_euclid(180.0),
                },
                Component::HalfWavePlate {
                    fiber: "P6".into(),
                    angle_deg: hwp2_deg.rem_euclid(180.0),
                },
            ]],
            self.convention,
        )?;
        compile_unitary(&graph)
    }

    fn bsm_graph(&self, tau_ps: f64) -> Result<CircuitGraph> {
        CircuitGraph::new(
            Arc::clone(&self.fiber_registry),
            vec![
                vec![Component::DelayLine {
                    fiber: "P5".into(),
                    delay_ps: tau_ps,
                }],
                vec![Component::FiberCoupler50 {
                    fiber_a: "P5".into(),
                    fiber_b: "P6".into(),
                }],
            ],
            self.convention,
        )
    }

    /// Coincidence probability of the simplified Bell-state measurement: the
    /// two fibers meet at a 50:50 coupler (relative delay `τ` on one arm) and
    /// the two output ports are monitored.
    ///
    /// `½(1 − cos α · O(τ) · μ)` plus the accidental floor: `|Ψ⁻⟩` always
    /// splits, `|Ψ⁺⟩` always bunches, and delay washes the distinction out
    /// through the spectral overlap.
    pub fn bsm_coincidence(
        &self,
        config: &BellPhaseConfig,
        tau_ps: f64,
        envelope: &SpectralEnvelope,
        noise: &NoiseModel,
    ) -> Result<f64> {
        let coherent_weight = noise.mode_overlap_mu * envelope.overlap(tau_ps);
        let ensemble = self.noisy_fiber_ensemble(config, coherent_weight)?;
        let coupler = compile_unitary(&self.bsm_graph(tau_ps)?)?;
        let out = ensemble.apply_unitary(&coupler)?;
        let (p5h, p5v) = (
            self.fiber_registry.index("P5H")?,
            self.fiber_registry.index("P5V")?,
        );
        let (p6h, p6v) = (
            self.fiber_registry.index("P6H")?,
            self.fiber_registry.index("P6V")?,
        );
        Ok(out.coincidence_between(&[p5h, p5v], &[p6h, p6v])? + noise.accidental_floor)
    }

    /// Coincidence probability of two fully distinguishable photons routed
    /// classically through the coupler: the baseline of every HOM dip.
    pub fn classical_coupler_baseline(&self) -> Result<f64> {
        let coupler = compile_unitary(&self.bsm_graph(0.0)?)?;
        let in_1 = self.fiber_registry.index("P5H")?;
        let in_2 = self.fiber_registry.index("P6H")?;
        let det_1 = [
            self.fiber_registry.index("P5H")?,
            self.fiber_registry.index("P5V")?,
        ];
        let det_2 = [
            self.fiber_registry.index("P6H")?,
            self.fiber_registry.index("P6V")?,
        ];
        let route = |from: usize, group: &[usize; 2]| -> f64 {
            group.iter().map(|&to| coupler[(to, from)].norm_sqr()).sum()
        };
        Ok(route(in_1, &det_1) * route(in_2, &det_2) + route(in_2, &det_1) * route(in_1, &det_2))
    }

    /// Absolute coincidence probability of the HOM experiment: classical
    /// baseline times the normalized dip `1 − V·O(τ)`.
    pub fn hom_coincidence_probability(
        &self,
        tau_ps: f64,
        envelope: &SpectralEnvelope,
        visibility: f64,
    ) -> Result<f64> {
        let normalized = crate::spectral::hom_coincidence(tau_ps, envelope, visibility)?;
        Ok(self.classical_coupler_baseline()? * normalized)
    }

    /// Quantum route to the HOM coincidence at coherent weight `w`: the
    /// interfering pair against the dephased pair through the same coupler.
    /// Cross-checks [`Self::hom_coincidence_probability`].
    pub fn hom_coincidence_simulated(&self, coherent_weight: f64) -> Result<f64> {
        let pair = TwoPhotonState::one_in_each(Arc::clone(&self.fiber_registry), "P5H", "P6H")?;
        let coupler = compile_unitary(&self.bsm_graph(0.0)?)?;
        let interfering = pair.apply_unitary(&coupler)?;
        let det_1 = [
            self.fiber_registry.index("P5H")?,
            self.fiber_registry.index("P5V")?,
        ];
        let det_2 = [
            self.fiber_registry.index("P6H")?,
            self.fiber_registry.index("P6V")?,
        ];
        let quantum = interfering.coincidence_between(&det_1, &det_2)?;
        let classical = self.classical_coupler_baseline()?;
        Ok(coherent_weight * quantum + (1.0 - coherent_weight) * classical)
    }
}

impl Default for BellSourceChip {
    fn default() -> Self {
        BellSourceChip::new(SplitterConvention::Symmetric)
    }
}

/// Two-source interference: probability that the photons split across the
/// two splitter outputs at relative two-photon phase `theta`.
pub fn split_probability(theta: f64) -> f64 {
    0.5 * (1.0 + theta.cos())
}
