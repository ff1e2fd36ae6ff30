//! Two-photon quantum states over a mode registry.
//!
//! A pure state is stored as a symmetric complex matrix `A` over the `M`
//! registry modes, representing `Σ_{jk} A_{jk} a†_j a†_k |0⟩`. With that
//! convention the occupation-basis coefficients are `2·A_{jk}` for the
//! split term `|1_j 1_k⟩` (j ≠ k) and `√2·A_{jj}` for the bunched term
//! `|2_j⟩`, so the normalization condition reads `2·Σ|A_{jk}|² = 1`.
//!
//! States are immutable; every operation returns a new value.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modes::ModeRegistry;

/// Tolerance on the state norm. Constructors renormalize; transformations
/// must stay within this drift.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Tolerance on `‖U†U − I‖_max` for matrices accepted as unitary.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// Pure two-photon state: symmetric amplitude matrix plus its registry.
#[derive(Debug, Clone)]
pub struct TwoPhotonState {
    registry: Arc<ModeRegistry>,
    amplitudes: Array2<Complex64>,
}

/// Max deviation of `U†U` from the identity.
pub fn unitarity_deviation(u: &Array2<Complex64>) -> f64 {
    let gram = u.t().mapv(|z| z.conj()).dot(u);
    let dim = u.nrows();
    let mut dev: f64 = 0.0;
    for j in 0..dim {
        for k in 0..dim {
            let expected = if j == k {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            dev = dev.max((gram[(j, k)] - expected).norm());
        }
    }
    dev
}

impl TwoPhotonState {
    /// Build a state from an amplitude matrix.
    ///
    /// The matrix is symmetrized as `(A + Aᵀ)/2` (exact in floating point)
    /// and renormalized.
    pub fn from_amplitudes(
        registry: Arc<ModeRegistry>,
        amplitudes: Array2<Complex64>,
    ) -> Result<Self> {
        let m = registry.len();
        if amplitudes.nrows() != m || amplitudes.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: amplitudes.nrows().max(amplitudes.ncols()),
            });
        }
        let mut sym = Array2::zeros((m, m));
        for j in 0..m {
            for k in 0..m {
                sym[(j, k)] = (amplitudes[(j, k)] + amplitudes[(k, j)]) * 0.5;
            }
        }
        let norm_sq: f64 = 2.0 * sym.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if norm_sq <= NORM_TOLERANCE {
            return Err(Error::ZeroState);
        }
        let scale = Complex64::new(1.0 / norm_sq.sqrt(), 0.0);
        sym.mapv_inplace(|z| z * scale);
        Ok(TwoPhotonState {
            registry,
            amplitudes: sym,
        })
    }

    /// The state `|2⟩` in a single labelled mode (both photons together).
    pub fn pair_in_mode(registry: Arc<ModeRegistry>, mode_label: &str) -> Result<Self> {
        let idx = registry.index(mode_label)?;
        let m = registry.len();
        let mut amps = Array2::zeros((m, m));
        amps[(idx, idx)] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Ok(TwoPhotonState {
            registry,
            amplitudes: amps,
        })
    }

    /// The split state `|1_j 1_k⟩` with one photon in each of two distinct modes.
    pub fn one_in_each(registry: Arc<ModeRegistry>, label_j: &str, label_k: &str) -> Result<Self> {
        let j = registry.index(label_j)?;
        let k = registry.index(label_k)?;
        if j == k {
            return Err(Error::DiagonalCoincidence(j));
        }
        let m = registry.len();
        let mut amps = Array2::zeros((m, m));
        amps[(j, k)] = Complex64::new(0.5, 0.0);
        amps[(k, j)] = Complex64::new(0.5, 0.0);
        Ok(TwoPhotonState {
            registry,
            amplitudes: amps,
        })
    }

    /// Coherent superposition `Σ c_i |ψ_i⟩`, renormalized.
    pub fn superpose(terms: &[(Complex64, &TwoPhotonState)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("superpose needs at least one term".into()))?;
        let registry = Arc::clone(&first.registry);
        let m = registry.len();
        let mut sum: Array2<Complex64> = Array2::zeros((m, m));
        for (coeff, state) in terms {
            if !state.registry.same_as(&registry) {
                return Err(Error::RegistryMismatch);
            }
            sum.zip_mut_with(&state.amplitudes, |acc, &a| *acc += *coeff * a);
        }
        TwoPhotonState::from_amplitudes(registry, sum)
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn amplitudes(&self) -> &Array2<Complex64> {
        &self.amplitudes
    }

    pub fn num_modes(&self) -> usize {
        self.registry.len()
    }

    /// State norm `√(2·Σ|A|²)`; 1 up to [`NORM_TOLERANCE`] by construction.
    pub fn norm(&self) -> f64 {
        (2.0 * self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Occupation-basis coefficient: `2A_{jk}` for j ≠ k, `√2·A_{jj}` on the
    /// diagonal.
    pub fn basis_amplitude(&self, j: usize, k: usize) -> Result<Complex64> {
        self.check_index(j)?;
        self.check_index(k)?;
        Ok(if j == k {
            self.amplitudes[(j, j)] * std::f64::consts::SQRT_2
        } else {
            self.amplitudes[(j, k)] * 2.0
        })
    }

    /// Transform by a mode unitary: `a†_j → Σ_k U_{kj} a†_k`, i.e. `A → U A Uᵀ`.
    pub fn apply_unitary(&self, u: &Array2<Complex64>) -> Result<Self> {
        let m = self.num_modes();
        if u.nrows() != m || u.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: u.nrows().max(u.ncols()),
            });
        }
        let deviation = unitarity_deviation(u);
        if deviation > UNITARITY_TOLERANCE {
            return Err(Error::NonUnitary { deviation });
        }
        let product = u.dot(&self.amplitudes).dot(&u.t());
        // The product is symmetric up to summation-order roundoff; averaging
        // with the transpose restores exact symmetry.
        let mut transformed = Array2::zeros((m, m));
        for j in 0..m {
            for k in 0..m {
                transformed[(j, k)] = (product[(j, k)] + product[(k, j)]) * 0.5;
            }
        }
        let state = TwoPhotonState {
            registry: Arc::clone(&self.registry),
            amplitudes: transformed,
        };
        debug_assert!(
            (state.norm() - 1.0).abs() <= 1e-9,
            "norm drifted to {}",
            state.norm()
        );
        Ok(state)
    }

    /// Probability that one photon is found in mode `j` and the other in
    /// mode `k` (j ≠ k): `|2A_{jk}|²`.
    pub fn prob_coincidence(&self, j: usize, k: usize) -> Result<f64> {
        if j == k {
            return Err(Error::DiagonalCoincidence(j));
        }
        Ok(self.basis_amplitude(j, k)?.norm_sqr())
    }

    /// Probability that both photons are found in mode `j`: `2|A_{jj}|²`.
    pub fn prob_bunched(&self, j: usize) -> Result<f64> {
        Ok(self.basis_amplitude(j, j)?.norm_sqr())
    }

    /// Expected photon number in mode `j`:
    /// `Σ_{k≠j} P(1_j 1_k) + 2·P(2_j)`.
    pub fn mode_occupation(&self, j: usize) -> Result<f64> {
        self.check_index(j)?;
        let mut n = 2.0 * self.prob_bunched(j)?;
        for k in 0..self.num_modes() {
            if k != j {
                n += self.prob_coincidence(j, k)?;
            }
        }
        Ok(n)
    }

    /// Coincidence probability between two disjoint detector mode groups.
    pub fn coincidence_between(&self, group_a: &[usize], group_b: &[usize]) -> Result<f64> {
        for a in group_a {
            if group_b.contains(a) {
                return Err(Error::InvalidParameter(format!(
                    "detector groups overlap at mode index {a}"
                )));
            }
        }
        let mut total = 0.0;
        for &a in group_a {
            for &b in group_b {
                total += self.prob_coincidence(a, b)?;
            }
        }
        Ok(total)
    }

    /// Squared overlap `|⟨ψ_a|ψ_b⟩|²`, insensitive to the global phase of
    /// either state.
    pub fn fidelity(&self, other: &TwoPhotonState) -> Result<f64> {
        if !self.registry.same_as(&other.registry) {
            return Err(Error::RegistryMismatch);
        }
        let mut overlap = Complex64::new(0.0, 0.0);
        for (a, b) in self.amplitudes.iter().zip(other.amplitudes.iter()) {
            overlap += a.conj() * b;
        }
        Ok((overlap * 2.0).norm_sqr())
    }

    /// Restrict the state to a subset of modes, building it on `sub_registry`
    /// (which must list the kept modes in `keep` order). Fails when more than
    /// [`NORM_TOLERANCE`] of the probability lives outside the subset.
    pub fn restrict(
        &self,
        keep: &[usize],
        sub_registry: Arc<ModeRegistry>,
    ) -> Result<TwoPhotonState> {
        if sub_registry.len() != keep.len() {
            return Err(Error::DimensionMismatch {
                expected: keep.len(),
                actual: sub_registry.len(),
            });
        }
        for &idx in keep {
            self.check_index(idx)?;
        }
        let m = self.num_modes();
        let kept_sq: f64 = keep
            .iter()
            .flat_map(|&j| keep.iter().map(move |&k| (j, k)))
            .map(|(j, k)| self.amplitudes[(j, k)].norm_sqr())
            .sum();
        let total_sq: f64 = self.amplitudes.iter().map(|z| z.norm_sqr()).sum();
        let residual = 2.0 * (total_sq - kept_sq);
        if residual > NORM_TOLERANCE {
            return Err(Error::ResidualAmplitude { residual });
        }
        let _ = m;
        let n = keep.len();
        let mut sub = Array2::zeros((n, n));
        for (r, &j) in keep.iter().enumerate() {
            for (c, &k) in keep.iter().enumerate() {
                sub[(r, c)] = self.amplitudes[(j, k)];
            }
        }
        TwoPhotonState::from_amplitudes(sub_registry, sub)
    }

    fn check_index(&self, idx: usize) -> Result<()> {
        if idx >= self.num_modes() {
            Err(Error::IndexOutOfRange {
                index: idx,
                modes: self.num_modes(),
            })
        } else {
            Ok(())
        }
    }
}

/// Finite ensemble of pure states with classical weights.
///
/// Used for phenomenological imperfections (distinguishable-branch mixing):
/// observables are weight-averaged over branches, keeping every code path
/// pure-state.
#[derive(Debug, Clone)]
pub struct MixedTwoPhotonState {
    branches: Vec<(f64, TwoPhotonState)>,
}

impl MixedTwoPhotonState {
    pub fn new(branches: Vec<(f64, TwoPhotonState)>) -> Result<Self> {
        let (_, first) = branches
            .first()
            .ok_or_else(|| Error::InvalidParameter("ensemble needs at least one branch".into()))?;
        let registry = Arc::clone(first.registry());
        let mut total = 0.0;
        for (weight, state) in &branches {
            if *weight < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "negative ensemble weight {weight}"
                )));
            }
            if !state.registry().same_as(&registry) {
                return Err(Error::RegistryMismatch);
            }
            total += weight;
        }
        if (total - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "ensemble weights sum to {total}, expected 1"
            )));
        }
        Ok(MixedTwoPhotonState { branches })
    }

    pub fn pure(state: TwoPhotonState) -> Self {
        MixedTwoPhotonState {
            branches: vec![(1.0, state)],
        }
    }

    pub fn branches(&self) -> &[(f64, TwoPhotonState)] {
        &self.branches
    }

    pub fn apply_unitary(&self, u: &Array2<Complex64>) -> Result<Self> {
        let branches = self
            .branches
            .iter()
            .map(|(w, s)| Ok((*w, s.apply_unitary(u)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(MixedTwoPhotonState { branches })
    }

    pub fn prob_coincidence(&self, j: usize, k: usize) -> Result<f64> {
        self.branches
            .iter()
            .map(|(w, s)| Ok(w * s.prob_coincidence(j, k)?))
            .sum()
    }

    pub fn prob_bunched(&self, j: usize) -> Result<f64> {
        self.branches
            .iter()
            .map(|(w, s)| Ok(w * s.prob_bunched(j)?))
            .sum()
    }

    pub fn mode_occupation(&self, j: usize) -> Result<f64> {
        self.branches
            .iter()
            .map(|(w, s)| Ok(w * s.mode_occupation(j)?))
            .sum()
    }

    pub fn coincidence_between(&self, group_a: &[usize], group_b: &[usize]) -> Result<f64> {
        self.branches
            .iter()
            .map(|(w, s)| Ok(w * s.coincidence_between(group_a, group_b)?))
            .sum()
    }
}
