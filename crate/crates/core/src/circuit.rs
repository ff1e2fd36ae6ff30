//! Linear-optical component library and circuit compilation.
//!
//! A [`CircuitGraph`] is an ordered sequence of stages; components within a
//! stage act on disjoint modes, so the graph is acyclic by construction.
//! [`compile_unitary`] returns the product of per-stage block unitaries in
//! stage order.

use std::collections::HashSet;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modes::{ModeRegistry, Polarization};
use crate::state::{unitarity_deviation, UNITARITY_TOLERANCE};

/// Phase convention of the 50:50 splitters.
///
/// Observable quantities are independent of this choice; it only moves
/// calibration offsets around. The symmetric convention is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitterConvention {
    /// `(1/√2)·[[1, i], [i, 1]]`
    #[default]
    Symmetric,
    /// `(1/√2)·[[1, 1], [1, −1]]`
    Hadamard,
}

impl SplitterConvention {
    /// The 2×2 transfer matrix of a 50:50 splitter under this convention.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            SplitterConvention::Symmetric => [
                [Complex64::new(s, 0.0), Complex64::new(0.0, s)],
                [Complex64::new(0.0, s), Complex64::new(s, 0.0)],
            ],
            SplitterConvention::Hadamard => [
                [Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
                [Complex64::new(s, 0.0), Complex64::new(-s, 0.0)],
            ],
        }
    }

    /// Pair-amplitude relative phase between the splitter's two inputs at
    /// which the split (coincidence) output probability is maximal.
    ///
    /// For inputs `(e^{iθ}|2⟩_a + |2⟩_b)/√2` the coincidence amplitude is
    /// `∝ U₀₀U₁₀·e^{iθ} + U₀₁U₁₁`, maximized at
    /// `θ* = arg(U₀₁U₁₁) − arg(U₀₀U₁₀)`.
    pub fn split_condition_phase(self) -> f64 {
        let u = self.matrix();
        let a = u[0][0] * u[1][0];
        let b = u[0][1] * u[1][1];
        let theta = b.arg() - a.arg();
        theta.rem_euclid(2.0 * std::f64::consts::PI)
    }
}

/// A typed linear-optical element.
///
/// Photon-pair sources, polarizers, and delay lines contribute the identity
/// to the compiled mode unitary: sources are consumed by the source-state
/// builder, polarizer projections are applied at detection, and delay enters
/// through the spectral overlap.
#[derive(Debug, Clone)]
pub enum Component {
    BeamSplitter50 {
        port_a: String,
        port_b: String,
    },
    PhaseShifter {
        port: String,
        phase: f64,
    },
    SfwmSource {
        port: String,
        pair_amplitude: Complex64,
    },
    /// Two-dimensional grating: couples two on-chip paths into the H and V
    /// polarizations of one output fiber (`in_top → H`, `in_bottom → V`).
    GratingMapper2D {
        in_top: String,
        in_bottom: String,
        out_fiber: String,
    },
    HalfWavePlate {
        fiber: String,
        angle_deg: f64,
    },
    Polarizer {
        fiber: String,
        pass_axis: Polarization,
    },
    FiberCoupler50 {
        fiber_a: String,
        fiber_b: String,
    },
    DelayLine {
        fiber: String,
        delay_ps: f64,
    },
    PolarizationRotator {
        fiber: String,
        unitary: [[Complex64; 2]; 2],
    },
}

impl Component {
    /// Mode indices this component touches.
    pub fn touched_modes(&self, registry: &ModeRegistry) -> Result<Vec<usize>> {
        match self {
            Component::BeamSplitter50 { port_a, port_b } => {
                let a = registry.index(port_a)?;
                let b = registry.index(port_b)?;
                if a == b {
                    return Err(Error::InvalidComponent(format!(
                        "beam splitter ports must differ, both are `{port_a}`"
                    )));
                }
                Ok(vec![a, b])
            }
            Component::PhaseShifter { port, .. } | Component::SfwmSource { port, .. } => {
                Ok(vec![registry.index(port)?])
            }
            Component::GratingMapper2D {
                in_top,
                in_bottom,
                out_fiber,
            } => {
                let top = registry.index(in_top)?;
                let bottom = registry.index(in_bottom)?;
                let (h, v) = registry.fiber_pair(out_fiber)?;
                let set: HashSet<usize> = [top, bottom, h, v].into_iter().collect();
                if set.len() != 4 {
                    return Err(Error::InvalidComponent(format!(
                        "grating mapper ports must be distinct: {in_top}, {in_bottom}, {out_fiber}"
                    )));
                }
                Ok(vec![top, bottom, h, v])
            }
            Component::HalfWavePlate { fiber, angle_deg } => {
                if !(0.0..180.0).contains(angle_deg) {
                    return Err(Error::InvalidComponent(format!(
                        "half-wave plate angle {angle_deg}° outside [0°, 180°)"
                    )));
                }
                let (h, v) = registry.fiber_pair(fiber)?;
                Ok(vec![h, v])
            }
            Component::Polarizer { fiber, .. }
            | Component::DelayLine { fiber, .. }
            | Component::PolarizationRotator { fiber, .. } => {
                let (h, v) = registry.fiber_pair(fiber)?;
                Ok(vec![h, v])
            }
            Component::FiberCoupler50 { fiber_a, fiber_b } => {
                let (ah, av) = registry.fiber_pair(fiber_a)?;
                let (bh, bv) = registry.fiber_pair(fiber_b)?;
                if fiber_a == fiber_b {
                    return Err(Error::InvalidComponent(format!(
                        "fiber coupler fibers must differ, both are `{fiber_a}`"
                    )));
                }
                Ok(vec![ah, av, bh, bv])
            }
        }
    }

    /// Embed this component into an identity matrix over the full registry.
    fn embed(
        &self,
        registry: &ModeRegistry,
        convention: SplitterConvention,
    ) -> Result<Array2<Complex64>> {
        let m = registry.len();
        let mut u = Array2::from_diag_elem(m, Complex64::new(1.0, 0.0));
        match self {
            Component::BeamSplitter50 { port_a, port_b } => {
                let a = registry.index(port_a)?;
                let b = registry.index(port_b)?;
                write_block(&mut u, a, b, &convention.matrix());
            }
            Component::PhaseShifter { port, phase } => {
                let p = registry.index(port)?;
                u[(p, p)] = Complex64::from_polar(1.0, *phase);
            }
            Component::SfwmSource { .. }
            | Component::Polarizer { .. }
            | Component::DelayLine { .. } => {}
            Component::GratingMapper2D {
                in_top,
                in_bottom,
                out_fiber,
            } => {
                let top = registry.index(in_top)?;
                let bottom = registry.index(in_bottom)?;
                let (h, v) = registry.fiber_pair(out_fiber)?;
                swap_modes(&mut u, top, h);
                swap_modes(&mut u, bottom, v);
            }
            Component::HalfWavePlate { fiber, angle_deg } => {
                let (h, v) = registry.fiber_pair(fiber)?;
                let a = 2.0 * angle_deg.to_radians();
                let block = [
                    [Complex64::new(a.cos(), 0.0), Complex64::new(a.sin(), 0.0)],
                    [Complex64::new(a.sin(), 0.0), Complex64::new(-a.cos(), 0.0)],
                ];
                write_block(&mut u, h, v, &block);
            }
            Component::FiberCoupler50 { fiber_a, fiber_b } => {
                let (ah, av) = registry.fiber_pair(fiber_a)?;
                let (bh, bv) = registry.fiber_pair(fiber_b)?;
                let block = convention.matrix();
                write_block(&mut u, ah, bh, &block);
                write_block(&mut u, av, bv, &block);
            }
            Component::PolarizationRotator { fiber, unitary } => {
                let (h, v) = registry.fiber_pair(fiber)?;
                let mut block = Array2::zeros((2, 2));
                for r in 0..2 {
                    for c in 0..2 {
                        block[(r, c)] = unitary[r][c];
                    }
                }
                let dev = unitarity_deviation(&block);
                if dev > UNITARITY_TOLERANCE {
                    return Err(Error::NonUnitary { deviation: dev });
                }
                write_block(&mut u, h, v, unitary);
            }
        }
        Ok(u)
    }
}

fn write_block(u: &mut Array2<Complex64>, i: usize, j: usize, block: &[[Complex64; 2]; 2]) {
    u[(i, i)] = block[0][0];
    u[(i, j)] = block[0][1];
    u[(j, i)] = block[1][0];
    u[(j, j)] = block[1][1];
}

fn swap_modes(u: &mut Array2<Complex64>, i: usize, j: usize) {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    u[(i, i)] = zero;
    u[(j, j)] = zero;
    u[(i, j)] = one;
    u[(j, i)] = one;
}

/// Directed interconnection of components over a fixed registry.
#[derive(Debug, Clone)]
pub struct CircuitGraph {
    registry: Arc<ModeRegistry>,
    stages: Vec<Vec<Component>>,
    convention: SplitterConvention,
}

impl CircuitGraph {
    pub fn new(
        registry: Arc<ModeRegistry>,
        stages: Vec<Vec<Component>>,
        convention: SplitterConvention,
    ) -> Result<Self> {
        for (stage_idx, stage) in stages.iter().enumerate() {
            let mut seen: HashSet<usize> = HashSet::new();
            for component in stage {
                for idx in component.touched_modes(&registry)? {
                    if !seen.insert(idx) {
                        return Err(Error::StageOverlap {
                            stage: stage_idx,
                            label: registry.mode(idx).label.clone(),
                        });
                    }
                }
            }
        }
        Ok(CircuitGraph {
            registry,
            stages,
            convention,
        })
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn stages(&self) -> &[Vec<Component>] {
        &self.stages
    }

    pub fn convention(&self) -> SplitterConvention {
        self.convention
    }

    /// Stage index of the photon-pair sources, if any.
    pub fn source_stage(&self) -> Option<usize> {
        self.stages.iter().position(|stage| {
            stage
                .iter()
                .any(|c| matches!(c, Component::SfwmSource { .. }))
        })
    }

    /// The `(mode index, pair amplitude)` of every source component.
    pub fn sources(&self) -> Result<Vec<(usize, Complex64)>> {
        let mut out = Vec::new();
        for stage in &self.stages {
            for component in stage {
                if let Component::SfwmSource {
                    port,
                    pair_amplitude,
                } = component
                {
                    out.push((self.registry.index(port)?, *pair_amplitude));
                }
            }
        }
        Ok(out)
    }

    /// Compile a contiguous range of stages to one mode unitary.
    pub fn compile_range(&self, range: std::ops::Range<usize>) -> Result<Array2<Complex64>> {
        let m = self.registry.len();
        let mut total = Array2::from_diag_elem(m, Complex64::new(1.0, 0.0));
        for stage in &self.stages[range] {
            for component in stage {
                let embedded = component.embed(&self.registry, self.convention)?;
                total = embedded.dot(&total);
            }
        }
        Ok(total)
    }
}

/// Product of per-stage block unitaries in stage order.
pub fn compile_unitary(graph: &CircuitGraph) -> Result<Array2<Complex64>> {
    graph.compile_range(0..graph.stages().len())
}
