//! Independent verification routes for the state algebra.
//!
//! [`CreationPolynomial`] expands a two-photon state as a normal-ordered
//! polynomial in creation operators and pushes each component substitution
//! `a†_j → Σ_k U_{kj} a†_k` through term by term. It never composes transfer
//! matrices, so it checks the matrix-based simulation path from the side.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::state::TwoPhotonState;

/// `Σ c_{jk} a†_j a†_k |0⟩` with keys kept sorted (j ≤ k).
#[derive(Debug, Clone)]
pub struct CreationPolynomial {
    num_modes: usize,
    terms: BTreeMap<(usize, usize), Complex64>,
}

impl CreationPolynomial {
    /// Read the polynomial off a state's occupation-basis coefficients,
    /// converted back to operator-monomial coefficients.
    pub fn from_state(state: &TwoPhotonState) -> Self {
        let m = state.num_modes();
        let amps = state.amplitudes();
        let mut terms = BTreeMap::new();
        for j in 0..m {
            for k in j..m {
                // a†_j a†_k coefficient: A_jk + A_kj off the diagonal, A_jj on it.
                let coeff = if j == k {
                    amps[(j, j)]
                } else {
                    amps[(j, k)] + amps[(k, j)]
                };
                if coeff.norm_sqr() > 0.0 {
                    terms.insert((j, k), coeff);
                }
            }
        }
        CreationPolynomial {
            num_modes: m,
            terms,
        }
    }

    /// Substitute `a†_j → Σ_k U_{kj} a†_k` and re-expand every monomial.
    pub fn substitute(&self, u: &Array2<Complex64>) -> Self {
        assert_eq!(u.nrows(), self.num_modes);
        assert_eq!(u.ncols(), self.num_modes);
        let m = self.num_modes;
        let mut out: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (&(j, k), &coeff) in &self.terms {
            for p in 0..m {
                let upj = u[(p, j)];
                if upj.norm_sqr() == 0.0 {
                    continue;
                }
                for q in 0..m {
                    let uqk = u[(q, k)];
                    if uqk.norm_sqr() == 0.0 {
                        continue;
                    }
                    let key = if p <= q { (p, q) } else { (q, p) };
                    *out.entry(key).or_insert(Complex64::new(0.0, 0.0)) += coeff * upj * uqk;
                }
            }
        }
        out.retain(|_, c| c.norm_sqr() > 0.0);
        CreationPolynomial {
            num_modes: m,
            terms: out,
        }
    }

    /// Occupation-basis coefficient of `|1_j 1_k⟩` (j < k) or `|2_j⟩` (j = k).
    ///
    /// The monomial coefficient `c_{jk}` contributes `c_{jk}` to `|1_j 1_k⟩`
    /// and `√2·c_{jj}` to `|2_j⟩`.
    pub fn basis_amplitude(&self, j: usize, k: usize) -> Complex64 {
        let key = if j <= k { (j, k) } else { (k, j) };
        let coeff = self
            .terms
            .get(&key)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0));
        if j == k {
            coeff * std::f64::consts::SQRT_2
        } else {
            coeff
        }
    }

    /// Largest deviation of basis amplitudes from those of `state`.
    pub fn max_amplitude_deviation(&self, state: &TwoPhotonState) -> f64 {
        let m = self.num_modes;
        let mut dev: f64 = 0.0;
        for j in 0..m {
            for k in j..m {
                let expected = state.basis_amplitude(j, k).unwrap();
                dev = dev.max((self.basis_amplitude(j, k) - expected).norm());
            }
        }
        dev
    }
}

/// Haar-random unitary: QR of a complex Gaussian matrix via modified
/// Gram-Schmidt, with column phases fixed so the R diagonal is real positive.
pub fn random_unitary(dim: usize, seed: u64) -> Array2<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    for _ in 0..dim {
        let col: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(gaussian(&mut rng), gaussian(&mut rng)))
            .collect();
        columns.push(col);
    }
    for j in 0..dim {
        for i in 0..j {
            let proj: Complex64 = columns[i]
                .iter()
                .zip(columns[j].iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            let earlier = columns[i].clone();
            for (val, basis) in columns[j].iter_mut().zip(earlier.iter()) {
                *val -= proj * basis;
            }
        }
        // Normalizing by the (real positive) column norm is the R_jj of the
        // QR factorization, so Q is Haar distributed.
        let norm: f64 = columns[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in columns[j].iter_mut() {
            *z /= norm;
        }
    }
    let mut u = Array2::zeros((dim, dim));
    for (j, col) in columns.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            u[(i, j)] = z;
        }
    }
    u
}

/// Standard normal via Box-Muller.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Random staged circuit of `n_components` splitters and phase shifters over
/// the registry's modes, packed one or two per stage.
pub fn random_circuit(
    registry: std::sync::Arc<crate::modes::ModeRegistry>,
    seed: u64,
    n_components: usize,
    convention: crate::circuit::SplitterConvention,
) -> crate::circuit::CircuitGraph {
    use crate::circuit::Component;
    let m = registry.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stages: Vec<Vec<Component>> = Vec::new();
    let mut placed = 0;
    while placed < n_components {
        let mut stage = Vec::new();
        let mut used: Vec<usize> = Vec::new();
        let per_stage = 1 + (rng.random::<u32>() % 2) as usize;
        for _ in 0..per_stage {
            if placed >= n_components {
                break;
            }
            let a = (rng.random::<u32>() as usize) % m;
            let b = (rng.random::<u32>() as usize) % m;
            if rng.random::<bool>() && a != b && !used.contains(&a) && !used.contains(&b) {
                stage.push(Component::BeamSplitter50 {
                    port_a: registry.mode(a).label.clone(),
                    port_b: registry.mode(b).label.clone(),
                });
                used.push(a);
                used.push(b);
                placed += 1;
            } else if !used.contains(&a) {
                stage.push(Component::PhaseShifter {
                    port: registry.mode(a).label.clone(),
                    phase: rng.random::<f64>() * std::f64::consts::TAU,
                });
                used.push(a);
                placed += 1;
            }
        }
        if !stage.is_empty() {
            stages.push(stage);
        }
    }
    crate::circuit::CircuitGraph::new(registry, stages, convention).expect("stages are disjoint")
}

/// Random normalized symmetric amplitude matrix over `dim` modes.
pub fn random_state(
    registry: std::sync::Arc<crate::modes::ModeRegistry>,
    seed: u64,
) -> TwoPhotonState {
    let dim = registry.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut amps = Array2::zeros((dim, dim));
    for j in 0..dim {
        for k in 0..dim {
            amps[(j, k)] = Complex64::new(gaussian(&mut rng), gaussian(&mut rng));
        }
    }
    TwoPhotonState::from_amplitudes(registry, amps).expect("gaussian draw is nonzero")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{Mode, ModeRegistry};
    use crate::state::unitarity_deviation;
    use std::sync::Arc;

    fn registry(n: usize) -> Arc<ModeRegistry> {
        ModeRegistry::new(
            (0..n)
                .map(|i| Mode::on_chip(format!("m{i}"), 193.1))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn random_unitaries_are_unitary() {
        for seed in 0..20 {
            for dim in 2..=8 {
                let u = random_unitary(dim, seed * 31 + dim as u64);
                assert!(
                    unitarity_deviation(&u) < 1e-12,
                    "dim {dim} seed {seed}: deviation {}",
                    unitarity_deviation(&u)
                );
            }
        }
    }

    #[test]
    fn polynomial_round_trips_a_state() {
        let reg = registry(4);
        let state = random_state(Arc::clone(&reg), 7);
        let poly = CreationPolynomial::from_state(&state);
        assert!(poly.max_amplitude_deviation(&state) < 1e-14);
    }

    #[test]
    fn substitution_matches_matrix_transform() {
        let reg = registry(5);
        let state = random_state(Arc::clone(&reg), 11);
        let u = random_unitary(5, 13);
        let transformed = state.apply_unitary(&u).unwrap();
        let poly = CreationPolynomial::from_state(&state).substitute(&u);
        assert!(poly.max_amplitude_deviation(&transformed) < 1e-13);
    }
}
