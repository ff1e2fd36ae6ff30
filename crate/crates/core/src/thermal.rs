//! Heater voltage to optical phase, and the thermal step response.
//!
//! A resistive shifter dissipates `P ∝ v²`, so the static phase is
//! `φ = φ₀ + κ·v²`. Under square-wave drive the dissipated power is filtered
//! by a single-pole thermal lag with time constant `τ_thermal`; since φ is
//! affine in the filtered power, the phase itself relaxes exponentially
//! between the two asymptotic values. The steady-state periodic solution is
//! written in closed form per half-period.

use crate::error::{Error, Result};
use crate::fitting::{fit_fringe, FringeFit};

/// Static phase-voltage law `φ(v) = φ₀ + κ·v²`.
#[derive(Debug, Clone, Copy)]
pub struct PhaseVoltageLaw {
    /// Zero-volt phase offset, radians.
    pub phi0: f64,
    /// Thermo-optic slope, radians per V².
    pub kappa: f64,
}

impl PhaseVoltageLaw {
    pub fn new(phi0: f64, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "thermo-optic slope must be positive, got {kappa}"
            )));
        }
        Ok(PhaseVoltageLaw { phi0, kappa })
    }

    /// Unwrapped phase at a drive voltage; reduce mod 2π at point of use.
    pub fn phase_of_voltage(&self, v: f64) -> Result<f64> {
        if v < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "drive voltage must be non-negative, got {v}"
            )));
        }
        Ok(self.phi0 + self.kappa * v * v)
    }

    /// Smallest non-negative voltage at which the phase hits `target`
    /// modulo 2π.
    pub fn voltage_for_phase(&self, target: f64) -> f64 {
        let tau = 2.0 * std::f64::consts::PI;
        let needed = (target - self.phi0).rem_euclid(tau);
        (needed / self.kappa).sqrt()
    }
}

/// Result of calibrating a law against a coincidence fringe.
#[derive(Debug, Clone)]
pub struct LawCalibration {
    pub law: PhaseVoltageLaw,
    /// Fringe mean level (counts).
    pub offset: f64,
    /// Fringe amplitude (counts).
    pub amplitude: f64,
    pub residual_rms: f64,
}

/// Least-squares fit of `C(v) = a + b·cos(φ₀ + κ·v²)` to fringe samples.
///
/// The fringe is a sinusoid in `x = v²`, so this reuses the fringe fitter
/// and maps its parameters back: `κ = 2π/period`, `φ₀ = phase`.
pub fn calibrate_law(samples: &[(f64, f64)]) -> Result<LawCalibration> {
    if samples.len() < 6 {
        return Err(crate::error::FitError::TooFewSamples {
            needed: 6,
            got: samples.len(),
        }
        .into());
    }
    let in_v_squared: Vec<(f64, f64)> = samples.iter().map(|&(v, c)| (v * v, c)).collect();
    let fit: FringeFit = fit_fringe(&in_v_squared)?;
    let law = PhaseVoltageLaw::new(
        fit.phase.rem_euclid(2.0 * std::f64::consts::PI),
        2.0 * std::f64::consts::PI / fit.period,
    )?;
    Ok(LawCalibration {
        law,
        offset: fit.offset,
        amplitude: fit.amplitude,
        residual_rms: fit.residual_rms,
    })
}

/// Drive waveform on a thermal shifter.
#[derive(Debug, Clone, Copy)]
pub enum Waveform {
    Constant {
        volts: f64,
    },
    /// 50% duty square wave: `v_first` over the first half-period, `v_second`
    /// over the second.
    Square {
        v_first: f64,
        v_second: f64,
        rate_hz: f64,
    },
}

/// A waveform, the static law, and the thermal time constant.
#[derive(Debug, Clone, Copy)]
pub struct HeaterDrive {
    pub waveform: Waveform,
    pub law: PhaseVoltageLaw,
    pub tau_thermal_us: f64,
}

impl HeaterDrive {
    pub fn new(waveform: Waveform, law: PhaseVoltageLaw, tau_thermal_us: f64) -> Result<Self> {
        if !(tau_thermal_us > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "thermal time constant must be positive, got {tau_thermal_us} µs"
            )));
        }
        match waveform {
            Waveform::Constant { volts } if volts < 0.0 => {
                return Err(Error::InvalidParameter("negative drive voltage".into()))
            }
            Waveform::Square {
                v_first,
                v_second,
                rate_hz,
            } => {
                if v_first < 0.0 || v_second < 0.0 {
                    return Err(Error::InvalidParameter("negative drive voltage".into()));
                }
                if !(rate_hz > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "square-wave rate must be positive, got {rate_hz} Hz"
                    )));
                }
            }
            _ => {}
        }
        Ok(HeaterDrive {
            waveform,
            law,
            tau_thermal_us,
        })
    }

    /// Drive period in µs (one cycle for a square wave; arbitrary 1 µs window
    /// for a constant drive).
    pub fn period_us(&self) -> f64 {
        match self.waveform {
            Waveform::Constant { .. } => 1.0,
            Waveform::Square { rate_hz, .. } => 1e6 / rate_hz,
        }
    }

    /// Steady-state phase at time `t_us` into the period.
    pub fn steady_state_phase(&self, t_us: f64) -> Result<f64> {
        match self.waveform {
            Waveform::Constant { volts } => self.law.phase_of_voltage(volts),
            Waveform::Square {
                v_first, v_second, ..
            } => {
                let phi_first = self.law.phase_of_voltage(v_first)?;
                let phi_second = self.law.phase_of_voltage(v_second)?;
                let half = self.period_us() / 2.0;
                let decay = (-half / self.tau_thermal_us).exp();
                // Periodic steady state: phase entering the first half-period
                // relaxed toward `phi_second` during the previous half.
                let entry_first = (phi_second + decay * phi_first) / (1.0 + decay);
                let entry_second = (phi_first + decay * phi_second) / (1.0 + decay);
                let t = t_us.rem_euclid(self.period_us());
                Ok(if t < half {
                    phi_first + (entry_first - phi_first) * (-t / self.tau_thermal_us).exp()
                } else {
                    phi_second
                        + (entry_second - phi_second) * (-(t - half) / self.tau_thermal_us).exp()
                })
            }
        }
    }
}

/// Sampled steady-state phase over one drive period.
///
/// Samples run from `t = 0` to `t = T` inclusive; `phase(0) == phase(T)` up
/// to the steady-state tolerance.
#[derive(Debug, Clone)]
pub struct PhaseTrajectory {
    times_us: Vec<f64>,
    phases: Vec<f64>,
    period_us: f64,
}

impl PhaseTrajectory {
    pub fn times_us(&self) -> &[f64] {
        &self.times_us
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn period_us(&self) -> f64 {
        self.period_us
    }

    pub fn len(&self) -> usize {
        self.times_us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_us.is_empty()
    }
}

/// Sample the steady-state phase trajectory with `samples_per_period`
/// intervals (the endpoint sample at `t = T` is included, giving
/// `samples_per_period + 1` points).
pub fn phase_trajectory(drive: &HeaterDrive, samples_per_period: usize) -> Result<PhaseTrajectory> {
    if samples_per_period < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 samples per period, got {samples_per_period}"
        )));
    }
    let period = drive.period_us();
    let mut times_us = Vec::with_capacity(samples_per_period + 1);
    let mut phases = Vec::with_capacity(samples_per_period + 1);
    for i in 0..=samples_per_period {
        // Evaluate the closed form exactly at the endpoint rather than
        // relying on rem_euclid roundoff.
        let t = period * i as f64 / samples_per_period as f64;
        let phase = if i == samples_per_period {
            drive.steady_state_phase(0.0)?
        } else {
            drive.steady_state_phase(t)?
        };
        times_us.push(t);
        phases.push(phase);
    }
    Ok(PhaseTrajectory {
        times_us,
        phases,
        period_us: period,
    })
}
