//! Least-squares extraction of visibilities and fit parameters from count
//! data: sinusoidal fringes, HOM dips, and the Bell-inequality criterion.
//!
//! The fitters use damped Gauss-Newton with a Fourier-based frequency
//! initialization, at most [`MAX_ITERATIONS`] iterations, converging when the
//! parameter step norm drops below [`STEP_TOLERANCE`]. No accidental
//! subtraction is applied anywhere: visibilities are raw.

use crate::error::{FitError, Result};
use crate::spectral::SpectralShape;

pub const MAX_ITERATIONS: usize = 200;
pub const STEP_TOLERANCE: f64 = 1e-10;

/// Fringe visibility above which the Bell inequality can be violated: `1/√2`.
pub const BELL_VISIBILITY_THRESHOLD: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Result of fitting `C(x) = offset·(1 + v·cos(2π·x/period + phase))`.
#[derive(Debug, Clone)]
pub struct FringeFit {
    pub offset: f64,
    pub amplitude: f64,
    /// Phase at x = 0, in [0, 2π).
    pub phase: f64,
    /// Period in the sweep variable.
    pub period: f64,
    pub residual_rms: f64,
}

impl FringeFit {
    /// Raw visibility `amplitude / offset`.
    pub fn raw_visibility(&self) -> f64 {
        self.amplitude / self.offset
    }

    /// Extremal-point visibility `(max − min)/(max + min)` of the fitted
    /// curve; equals `raw_visibility` for the sinusoid family but is kept as
    /// a separate diagnostic.
    pub fn extremal_visibility(&self) -> f64 {
        let max = self.offset + self.amplitude;
        let min = self.offset - self.amplitude;
        (max - min) / (max + min)
    }

    /// Sweep value of the fitted maximum closest to `near`.
    pub fn peak_position_near(&self, near: f64) -> f64 {
        // Maxima at 2π·x/period + phase = 2π·n.
        let omega = 2.0 * std::f64::consts::PI / self.period;
        let n = ((near * omega + self.phase) / (2.0 * std::f64::consts::PI)).round();
        (2.0 * std::f64::consts::PI * n - self.phase) / omega
    }
}

/// Result of fitting a HOM dip
/// `C(τ) = baseline·(1 − V·K(π·Δν·(τ − τ₀)))`.
#[derive(Debug, Clone)]
pub struct HomFit {
    pub baseline: f64,
    pub visibility: f64,
    /// Width parameter Δν in GHz.
    pub fwhm_ghz: f64,
    /// Dip center in ps.
    pub delay_offset_ps: f64,
    pub residual_rms: f64,
}

/// Fit a sinusoidal fringe to `(x, count)` samples.
pub fn fit_fringe(samples: &[(f64, f64)]) -> Result<FringeFit> {
    if samples.len() < 8 {
        return Err(FitError::TooFewSamples {
            needed: 8,
            got: samples.len(),
        }
        .into());
    }
    let n = samples.len() as f64;
    let mean_y: f64 = samples.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let span = samples
        .iter()
        .map(|&(x, _)| x)
        .fold(f64::NEG_INFINITY, f64::max)
        - samples
            .iter()
            .map(|&(x, _)| x)
            .fold(f64::INFINITY, f64::min);
    if !(span > 0.0) {
        return Err(FitError::Degenerate("all samples share one x value".into()).into());
    }

    let omega0 = dominant_frequency(samples, mean_y, span)?;

    // Linear least squares for (offset, a, b) at fixed omega, then refine all
    // four parameters.
    let (offset, a, b) = linear_sinusoid_fit(samples, omega0);
    let mut params = [offset, a, b, omega0];
    let residual = gauss_newton(
        samples,
        &mut params,
        |x, p| p[0] + p[1] * (p[3] * x).cos() + p[2] * (p[3] * x).sin(),
        |x, p| {
            let (s, c) = (p[3] * x).sin_cos();
            [1.0, c, s, x * (-p[1] * s + p[2] * c)]
        },
    )?;

    let [offset, a, b, omega] = params;
    let amplitude = (a * a + b * b).sqrt();
    if !(omega.abs() > 0.0) || !offset.is_finite() {
        return Err(FitError::Degenerate("collapsed to zero frequency".into()).into());
    }
    let omega = omega.abs();
    let period = 2.0 * std::f64::consts::PI / omega;
    if period > span {
        return Err(FitError::InsufficientSpan { span, period }.into());
    }
    if amplitude < 1e-9 * offset.abs().max(1.0) {
        return Err(FitError::NoDominantFrequency.into());
    }
    let phase = (-b).atan2(a).rem_euclid(2.0 * std::f64::consts::PI);
    Ok(FringeFit {
        offset,
        amplitude,
        phase,
        period,
        residual_rms: residual,
    })
}

/// Fit a HOM dip with the rectangular-filter (sinc²) kernel.
pub fn fit_hom(samples: &[(f64, f64)]) -> Result<HomFit> {
    fit_hom_shaped(samples, SpectralShape::Rectangular)
}

/// Fit a HOM dip with an explicit kernel family.
pub fn fit_hom_shaped(samples: &[(f64, f64)], shape: SpectralShape) -> Result<HomFit> {
    if samples.len() < 8 {
        return Err(FitError::TooFewSamples {
            needed: 8,
            got: samples.len(),
        }
        .into());
    }
    let kernel = move |x: f64| -> f64 {
        match shape {
            SpectralShape::Rectangular => {
                let s = if x.abs() < 1e-8 {
                    1.0 - x * x / 6.0
                } else {
                    x.sin() / x
                };
                s * s
            }
            SpectralShape::Gaussian => (-x * x / (2.0 * std::f64::consts::LN_2)).exp(),
        }
    };

    // Baseline from the upper half of the data, dip from the minimum.
    let mut sorted: Vec<f64> = samples.iter().map(|&(_, y)| y).collect();
    sorted.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let baseline0 =
        sorted[sorted.len() / 2..].iter().sum::<f64>() / (sorted.len() - sorted.len() / 2) as f64;
    if !(baseline0 > 0.0) {
        return Err(FitError::Degenerate("non-positive baseline".into()).into());
    }
    let (&(tau_min, y_min), _) = samples
        .iter()
        .map(|s| (s, s.1))
        .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap())
        .ok_or_else(|| FitError::Degenerate("empty sample set".into()))?;
    let v0 = (1.0 - y_min / baseline0).clamp(0.05, 1.0);
    if sorted.last().unwrap() - sorted.first().unwrap() < 1e-12 * baseline0.abs().max(1.0) {
        return Err(FitError::DipNotFound { visibility: 0.0 }.into());
    }

    // Half-depth width -> width parameter.
    let half_level = baseline0 * (1.0 - v0 / 2.0);
    let mut left = tau_min;
    let mut right = tau_min;
    for &(x, y) in samples {
        if y < half_level {
            left = left.min(x);
            right = right.max(x);
        }
    }
    let half_width = ((right - left) / 2.0).max(1e-3);
    let x_half = match shape {
        SpectralShape::Rectangular => 1.391_557,
        SpectralShape::Gaussian => std::f64::consts::LN_2 * std::f64::consts::SQRT_2,
    };
    let dnu0 = x_half / (std::f64::consts::PI * half_width * 1e-3);

    let mut params = [baseline0, v0, dnu0, tau_min];
    let model = move |tau: f64, p: &[f64; 4]| -> f64 {
        let x = std::f64::consts::PI * p[2] * (tau - p[3]) * 1e-3;
        p[0] * (1.0 - p[1] * kernel(x))
    };
    let residual = gauss_newton_numeric(samples, &mut params, model)?;
    let [baseline, visibility, fwhm_ghz, delay_offset_ps] = params;
    if visibility <= 0.0 {
        return Err(FitError::DipNotFound { visibility }.into());
    }
    if !(fwhm_ghz > 0.0) {
        return Err(FitError::Degenerate(format!("non-positive width {fwhm_ghz}")).into());
    }

    // Wings must be flat for the dip family to describe the data; oscillating
    // data (a fringe) fails here. The threshold scales with the Poisson noise
    // of the samples.
    let wing_count = (samples.len() / 5).max(2);
    let mut by_distance: Vec<&(f64, f64)> = samples.iter().collect();
    by_distance.sort_by(|p, q| {
        (q.0 - delay_offset_ps)
            .abs()
            .partial_cmp(&(p.0 - delay_offset_ps).abs())
            .unwrap()
    });
    let wing_rms = (by_distance[..wing_count]
        .iter()
        .map(|&&(x, y)| (y - model(x, &params)).powi(2))
        .sum::<f64>()
        / wing_count as f64)
        .sqrt();
    let median_y = sorted[sorted.len() / 2].max(1.0);
    let threshold = (5.0 / median_y.sqrt()).max(0.10);
    if wing_rms / baseline.abs().max(1e-12) > threshold {
        return Err(FitError::ModelMismatch {
            wing_residual: wing_rms / baseline.abs().max(1e-12),
        }
        .into());
    }

    Ok(HomFit {
        baseline,
        visibility,
        fwhm_ghz,
        delay_offset_ps,
        residual_rms: residual,
    })
}

/// Raw visibility `F = (C_max − C_min)/(C_max + C_min)` of two extreme counts.
pub fn visibility_eq3(c_max: f64, c_min: f64) -> Result<f64> {
    if c_min < 0.0 || c_max < c_min {
        return Err(crate::error::Error::InvalidParameter(format!(
            "need c_max >= c_min >= 0, got ({c_max}, {c_min})"
        )));
    }
    if c_max <= 0.0 {
        return Err(crate::error::Error::InvalidParameter(
            "both extreme counts are zero".into(),
        ));
    }
    Ok((c_max - c_min) / (c_max + c_min))
}

/// Verdict of the visibility criterion for Bell-inequality violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellVerdict {
    ViolationSupported,
    NotSupported,
}

/// A fringe visibility above `1/√2` supports violation of the Bell
/// inequality.
pub fn bell_criterion(visibility: f64) -> BellVerdict {
    if visibility > BELL_VISIBILITY_THRESHOLD {
        BellVerdict::ViolationSupported
    } else {
        BellVerdict::NotSupported
    }
}

// ── Solver internals ─────────────────────────────────────────────────────────

/// Frequency of the dominant component of the mean-subtracted data, from a
/// zero-padded discrete Fourier scan.
fn dominant_frequency(samples: &[(f64, f64)], mean_y: f64, span: f64) -> Result<f64> {
    let n = samples.len();
    let n_grid = (n * 8).max(256);
    let mut best = (0.0f64, 0.0f64); // (power, omega)
    let mut total_power = 0.0;
    let mut count = 0usize;
    for j in 1..n_grid {
        let omega = 2.0 * std::f64::consts::PI * j as f64 / (2.0 * span);
        // Scan up to the mean Nyquist rate.
        if omega > std::f64::consts::PI * n as f64 / span {
            break;
        }
        let (mut re, mut im) = (0.0, 0.0);
        for &(x, y) in samples {
            let (s, c) = (omega * x).sin_cos();
            re += (y - mean_y) * c;
            im += (y - mean_y) * s;
        }
        let power = re * re + im * im;
        total_power += power;
        count += 1;
        if power > best.0 {
            best = (power, omega);
        }
    }
    if count == 0 || best.0 <= 0.0 {
        return Err(FitError::NoDominantFrequency.into());
    }
    let mean_power = total_power / count as f64;
    if best.0 < 3.0 * mean_power {
        return Err(FitError::NoDominantFrequency.into());
    }
    Ok(best.1)
}

fn linear_sinusoid_fit(samples: &[(f64, f64)], omega: f64) -> (f64, f64, f64) {
    // Normal equations for y = offset + a cos(omega x) + b sin(omega x).
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    for &(x, y) in samples {
        let row = [1.0, (omega * x).cos(), (omega * x).sin()];
        for r in 0..3 {
            for c in 0..3 {
                ata[r][c] += row[r] * row[c];
            }
            aty[r] += row[r] * y;
        }
    }
    let solved = solve_small(&mut ata.iter().flatten().copied().collect::<Vec<_>>(), &aty);
    match solved {
        Some(v) => (v[0], v[1], v[2]),
        None => (aty[0] / samples.len() as f64, 0.0, 0.0),
    }
}

/// Damped Gauss-Newton with analytic Jacobian over 4 parameters.
fn gauss_newton<M, J>(
    samples: &[(f64, f64)],
    params: &mut [f64; 4],
    model: M,
    jacobian: J,
) -> Result<f64>
where
    M: Fn(f64, &[f64; 4]) -> f64,
    J: Fn(f64, &[f64; 4]) -> [f64; 4],
{
    gauss_newton_impl(samples, params, &model, &|x, p| jacobian(x, p))
}

/// Damped Gauss-Newton with central-difference Jacobian.
fn gauss_newton_numeric<M>(samples: &[(f64, f64)], params: &mut [f64; 4], model: M) -> Result<f64>
where
    M: Fn(f64, &[f64; 4]) -> f64,
{
    let jac = |x: f64, p: &[f64; 4]| -> [f64; 4] {
        let mut out = [0.0; 4];
        for i in 0..4 {
            let h = 1e-6 * p[i].abs().max(1e-6);
            let mut hi = *p;
            let mut lo = *p;
            hi[i] += h;
            lo[i] -= h;
            out[i] = (model(x, &hi) - model(x, &lo)) / (2.0 * h);
        }
        out
    };
    gauss_newton_impl(samples, params, &model, &jac)
}

fn gauss_newton_impl(
    samples: &[(f64, f64)],
    params: &mut [f64; 4],
    model: &dyn Fn(f64, &[f64; 4]) -> f64,
    jacobian: &dyn Fn(f64, &[f64; 4]) -> [f64; 4],
) -> Result<f64> {
    let n = samples.len() as f64;
    let sse = |p: &[f64; 4]| -> f64 {
        samples
            .iter()
            .map(|&(x, y)| (y - model(x, p)).powi(2))
            .sum()
    };
    let mut current_sse = sse(params);
    let mut damping = 1e-8;
    let mut converged = false;

    for _ in 0..MAX_ITERATIONS {
        let mut jtj = [[0.0f64; 4]; 4];
        let mut jtr = [0.0f64; 4];
        for &(x, y) in samples {
            let row = jacobian(x, params);
            let resid = y - model(x, params);
            for r in 0..4 {
                for c in 0..4 {
                    jtj[r][c] += row[r] * row[c];
                }
                jtr[r] += row[r] * resid;
            }
        }

        let mut accepted = false;
        for _ in 0..12 {
            let mut damped = jtj;
            for (r, row) in damped.iter_mut().enumerate() {
                row[r] += damping * (1.0 + jtj[r][r].abs());
            }
            let mut flat: Vec<f64> = damped.iter().flatten().copied().collect();
            let Some(step) = solve_small(&mut flat, &jtr) else {
                damping *= 8.0;
                continue;
            };
            let mut trial = *params;
            for i in 0..4 {
                trial[i] += step[i];
            }
            let trial_sse = sse(&trial);
            if trial_sse.is_finite() && trial_sse <= current_sse {
                let step_norm = step.iter().map(|s| s * s).sum::<f64>().sqrt();
                *params = trial;
                current_sse = trial_sse;
                damping = (damping / 4.0).max(1e-14);
                accepted = true;
                if step_norm < STEP_TOLERANCE {
                    converged = true;
                }
                break;
            }
            damping *= 8.0;
        }
        if converged {
            break;
        }
        if !accepted {
            // No downhill step found at any damping: treat as stationary.
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(FitError::NonConvergence {
            iterations: MAX_ITERATIONS,
        }
        .into());
    }
    Ok((current_sse / n).sqrt())
}

/// Gaussian elimination with partial pivoting for n ≤ 4 systems stored
/// row-major in `a`.
fn solve_small(a: &mut [f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let mut aug: Vec<f64> = vec![0.0; n * (n + 1)];
    for r in 0..n {
        aug[r * (n + 1)..r * (n + 1) + n].copy_from_slice(&a[r * n..(r + 1) * n]);
        aug[r * (n + 1) + n] = b[r];
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&p, &q| {
                aug[p * (n + 1) + col]
                    .abs()
                    .partial_cmp(&aug[q * (n + 1) + col].abs())
                    .unwrap()
            })
            .unwrap();
        if aug[pivot_row * (n + 1) + col].abs() < 1e-300 {
            return None;
        }
        if pivot_row != col {
            for c in 0..=n {
                aug.swap(col * (n + 1) + c, pivot_row * (n + 1) + c);
            }
        }
        let pivot = aug[col * (n + 1) + col];
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = aug[r * (n + 1) + col] / pivot;
            for c in col..=n {
                aug[r * (n + 1) + c] -= factor * aug[col * (n + 1) + c];
            }
        }
    }
    Some(
        (0..n)
            .map(|r| aug[r * (n + 1) + n] / aug[r * (n + 1) + r])
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn synthetic_fringe(
        offset: f64,
        vis: f64,
        omega: f64,
        phase: f64,
        n: usize,
    ) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let x = 12.0 * i as f64 / (n - 1) as f64;
                (x, offset * (1.0 + vis * (omega * x + phase).cos()))
            })
            .collect()
    }

    #[test]
    fn fringe_round_trip_noiseless() {
        let samples = synthetic_fringe(1200.0, 0.895, 1.7, 0.6, 60);
        let fit = fit_fringe(&samples).unwrap();
        assert_abs_diff_eq!(fit.raw_visibility(), 0.895, epsilon = 1e-7);
        assert_abs_diff_eq!(fit.offset, 1200.0, epsilon = 1e-3);
        assert_abs_diff_eq!(2.0 * std::f64::consts::PI / fit.period, 1.7, epsilon = 1e-7);
        assert_abs_diff_eq!(fit.phase, 0.6, epsilon = 1e-6);
        assert!(fit.residual_rms < 1e-6);
        // The extremal-point diagnostic coincides with the fit-based raw
        // visibility for the sinusoid family.
        assert_abs_diff_eq!(
            fit.extremal_visibility(),
            fit.raw_visibility(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn fringe_rejects_constant_data() {
        let samples: Vec<(f64, f64)> = (0..30).map(|i| (i as f64, 500.0)).collect();
        assert!(fit_fringe(&samples).is_err());
    }

    #[test]
    fn fringe_rejects_too_few_samples() {
        let samples = synthetic_fringe(100.0, 0.5, 1.0, 0.0, 7);
        assert!(matches!(
            fit_fringe(&samples),
            Err(crate::error::Error::Fit(FitError::TooFewSamples { .. }))
        ));
    }

    #[test]
    fn fringe_peak_position() {
        // Peak where omega*x + phase = 2*pi*n; here x stands for v².
        let samples: Vec<(f64, f64)> = (0..100)
            .map(|i| {
                let x = 100.0 * i as f64 / 99.0;
                (
                    x,
                    800.0 * (1.0 + 0.9 * (0.09 * x + 1.261104307179587).cos()),
                )
            })
            .collect();
        let fit = fit_fringe(&samples).unwrap();
        let peak = fit.peak_position_near(56.0);
        assert_abs_diff_eq!(peak, 55.8009, epsilon = 1e-4);
    }

    fn synthetic_dip(
        baseline: f64,
        vis: f64,
        dnu_ghz: f64,
        tau0: f64,
        shape: SpectralShape,
    ) -> Vec<(f64, f64)> {
        (0..81)
            .map(|i| {
                let tau = -50.0 + 100.0 * i as f64 / 80.0;
                let x = std::f64::consts::PI * dnu_ghz * (tau - tau0) * 1e-3;
                let k = match shape {
                    SpectralShape::Rectangular => {
                        let s = if x.abs() < 1e-12 { 1.0 } else { x.sin() / x };
                        s * s
                    }
                    SpectralShape::Gaussian => (-x * x / (2.0 * std::f64::consts::LN_2)).exp(),
                };
                (tau, baseline * (1.0 - vis * k))
            })
            .collect()
    }

    #[test]
    fn hom_round_trip_noiseless() {
        let samples = synthetic_dip(3000.0, 0.910, 60.0, 0.0, SpectralShape::Rectangular);
        let fit = fit_hom(&samples).unwrap();
        assert_abs_diff_eq!(fit.visibility, 0.910, epsilon = 1e-7);
        assert_abs_diff_eq!(fit.fwhm_ghz, 60.0, epsilon = 1e-4);
        assert_abs_diff_eq!(fit.delay_offset_ps, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn hom_rejects_flat_data() {
        let samples: Vec<(f64, f64)> = (0..40).map(|i| (i as f64 - 20.0, 900.0)).collect();
        assert!(fit_hom(&samples).is_err());
    }

    #[test]
    fn hom_mismatched_family_has_larger_residual() {
        let samples = synthetic_dip(2500.0, 0.9, 60.0, 0.0, SpectralShape::Gaussian);
        let matched = fit_hom_shaped(&samples, SpectralShape::Gaussian).unwrap();
        let mismatched = fit_hom_shaped(&samples, SpectralShape::Rectangular).unwrap();
        assert!(
            mismatched.residual_rms > matched.residual_rms,
            "mismatched {} <= matched {}",
            mismatched.residual_rms,
            matched.residual_rms
        );
    }

    #[test]
    fn hom_rejects_oscillating_data() {
        let samples = synthetic_fringe(1000.0, 0.9, 2.0, 0.3, 80);
        assert!(fit_hom(&samples).is_err());
    }

    #[test]
    fn eq3_visibility() {
        assert_abs_diff_eq!(visibility_eq3(1000.0, 0.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(visibility_eq3(77.0, 77.0).unwrap(), 0.0, epsilon = 1e-15);
        assert!(visibility_eq3(0.0, 0.0).is_err());
        assert!(visibility_eq3(1.0, 2.0).is_err());
        // Scale invariance.
        let f1 = visibility_eq3(850.0, 60.0).unwrap();
        let f2 = visibility_eq3(8500.0, 600.0).unwrap();
        assert_eq!(f1, f2);
    }

    #[test]
    fn bell_criterion_threshold() {
        assert_eq!(bell_criterion(0.895), BellVerdict::ViolationSupported);
        assert_eq!(bell_criterion(0.777), BellVerdict::ViolationSupported);
        assert_eq!(bell_criterion(0.70), BellVerdict::NotSupported);
        assert_eq!(
            bell_criterion(BELL_VISIBILITY_THRESHOLD),
            BellVerdict::NotSupported
        );
    }
}
