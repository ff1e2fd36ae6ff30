//! Spectral envelopes and Hong-Ou-Mandel overlap versus delay.
//!
//! Two photons with identical spectral envelopes interfere at a coupler with
//! a contrast set by the overlap `O(τ) = |∫ S(ν) e^{i2πντ} dν|²` of the
//! normalized intensity spectrum `S`. The bandpass filters ahead of the
//! detectors fix `S`; a rectangular passband is the default shape.

use crate::error::{Error, Result};

/// Spectral shape of the filtered photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectralShape {
    #[default]
    Rectangular,
    Gaussian,
}

/// Per-photon spectral amplitude model.
#[derive(Debug, Clone, Copy)]
pub struct SpectralEnvelope {
    pub shape: SpectralShape,
    pub center_wavelength_nm: f64,
    pub fwhm_ghz: f64,
}

impl SpectralEnvelope {
    pub fn new(shape: SpectralShape, center_wavelength_nm: f64, fwhm_ghz: f64) -> Result<Self> {
        if !(fwhm_ghz > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "filter FWHM must be positive, got {fwhm_ghz} GHz"
            )));
        }
        if !(center_wavelength_nm > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "center wavelength must be positive, got {center_wavelength_nm} nm"
            )));
        }
        Ok(SpectralEnvelope {
            shape,
            center_wavelength_nm,
            fwhm_ghz,
        })
    }

    /// Two-photon spectral overlap `O(τ)`, closed form.
    ///
    /// Rectangular width Δν: `sinc²(π·Δν·τ)`; Gaussian FWHM Δν:
    /// `exp(−(π·Δν·τ)²/(2·ln2))`. Even in τ, `O(0) = 1`.
    pub fn overlap(&self, tau_ps: f64) -> f64 {
        // GHz·ps = 1e-3 dimensionless cycles.
        let x = std::f64::consts::PI * self.fwhm_ghz * tau_ps * 1e-3;
        match self.shape {
            SpectralShape::Rectangular => sinc(x) * sinc(x),
            SpectralShape::Gaussian => (-x * x / (2.0 * std::f64::consts::LN_2)).exp(),
        }
    }

    /// Numerical-quadrature route to the same overlap, kept independent of
    /// [`Self::overlap`]: composite Simpson over the spectrum support
    /// (rectangular) or ±5 FWHM (Gaussian), normalized by the same rule
    /// applied to `S` alone.
    pub fn quadrature_overlap(&self, tau_ps: f64) -> Result<f64> {
        const INTERVALS: usize = 16_384;
        let (lo, hi): (f64, f64) = match self.shape {
            SpectralShape::Rectangular => (-self.fwhm_ghz / 2.0, self.fwhm_ghz / 2.0),
            SpectralShape::Gaussian => (-5.0 * self.fwhm_ghz, 5.0 * self.fwhm_ghz),
        };
        let spectrum = |nu_ghz: f64| -> f64 {
            match self.shape {
                SpectralShape::Rectangular => 1.0,
                SpectralShape::Gaussian => {
                    let r = nu_ghz / self.fwhm_ghz;
                    (-4.0 * std::f64::consts::LN_2 * r * r).exp()
                }
            }
        };
        let h = (hi - lo) / INTERVALS as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        let mut norm = 0.0;
        for i in 0..=INTERVALS {
            let nu = lo + i as f64 * h;
            let weight = if i == 0 || i == INTERVALS {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let s = spectrum(nu);
            let phase = 2.0 * std::f64::consts::PI * nu * tau_ps * 1e-3;
            re += weight * s * phase.cos();
            im += weight * s * phase.sin();
            norm += weight * s;
        }
        if !(norm > 0.0) || !re.is_finite() || !im.is_finite() {
            return Err(Error::InvalidParameter(
                "spectral quadrature did not converge".into(),
            ));
        }
        Ok((re * re + im * im) / (norm * norm))
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Normalized HOM coincidence `C(τ)/C_baseline = 1 − V·O(τ)` for a raw
/// visibility ceiling `V`.
pub fn hom_coincidence(tau_ps: f64, envelope: &SpectralEnvelope, visibility: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::InvalidParameter(format!(
            "HOM visibility {visibility} outside [0, 1]"
        )));
    }
    Ok(1.0 - visibility * envelope.overlap(tau_ps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rectangular_60ghz() -> SpectralEnvelope {
        SpectralEnvelope::new(SpectralShape::Rectangular, 1552.5, 60.0).unwrap()
    }

    #[test]
    fn overlap_is_one_at_zero_delay() {
        assert_abs_diff_eq!(rectangular_60ghz().overlap(0.0), 1.0, epsilon = 1e-15);
        let g = SpectralEnvelope::new(SpectralShape::Gaussian, 1552.5, 60.0).unwrap();
        assert_abs_diff_eq!(g.overlap(0.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rectangular_first_zero_at_inverse_width() {
        // 1/60 GHz = 16.666... ps
        let env = rectangular_60ghz();
        let tau0 = 1e3 / 60.0;
        assert!(env.overlap(tau0) < 1e-25);
    }

    #[test]
    fn rectangular_half_inverse_width_value() {
        let env = rectangular_60ghz();
        let tau = 0.5e3 / 60.0;
        let expected = (2.0 / std::f64::consts::PI).powi(2);
        assert_abs_diff_eq!(env.overlap(tau), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(env.overlap(tau), 0.4052847345693511, epsilon = 1e-12);
    }

    #[test]
    fn quadrature_matches_closed_form_spot_checks() {
        let rect = rectangular_60ghz();
        assert_abs_diff_eq!(rect.quadrature_overlap(0.0).unwrap(), 1.0, epsilon = 1e-9);
        assert!(rect.quadrature_overlap(1e3 / 60.0).unwrap() <= 1e-6);

        let gauss = SpectralEnvelope::new(SpectralShape::Gaussian, 1552.5, 60.0).unwrap();
        let q = gauss.quadrature_overlap(10.0).unwrap();
        let c = gauss.overlap(10.0);
        assert!((q - c).abs() / c < 1e-6, "q={q}, c={c}");
    }

    #[test]
    fn overlap_is_even() {
        let rect = rectangular_60ghz();
        let gauss = SpectralEnvelope::new(SpectralShape::Gaussian, 1552.5, 60.0).unwrap();
        for i in 0..50 {
            let tau = -40.0 + 1.7 * i as f64;
            assert_eq!(rect.overlap(tau), rect.overlap(-tau));
            assert_eq!(gauss.overlap(tau), gauss.overlap(-tau));
        }
    }

    #[test]
    fn hom_coincidence_endpoints() {
        let env = rectangular_60ghz();
        assert_abs_diff_eq!(
            hom_coincidence(0.0, &env, 1.0).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            hom_coincidence(1e6, &env, 0.7).unwrap(),
            1.0,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            hom_coincidence(0.0, &env, 0.910).unwrap(),
            0.090,
            epsilon = 1e-12
        );
        assert!(hom_coincidence(0.0, &env, 1.2).is_err());
    }

    #[test]
    fn invalid_envelope_rejected() {
        assert!(SpectralEnvelope::new(SpectralShape::Rectangular, 1552.5, 0.0).is_err());
        assert!(SpectralEnvelope::new(SpectralShape::Rectangular, -1.0, 60.0).is_err());
    }
}
