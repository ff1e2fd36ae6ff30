//! Optical mode bookkeeping.
//!
//! A simulation works over a fixed, ordered set of optical modes: on-chip
//! waveguide paths and fiber polarization modes. The registry assigns each
//! mode a stable index for the lifetime of a simulation; amplitude matrices
//! and transfer unitaries are indexed against it.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Physical carrier of a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    /// A single-polarization waveguide path on the chip.
    OnChipPath,
    /// One polarization of an output fiber.
    FiberPolarization,
}

/// Fiber polarization axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn suffix(self) -> &'static str {
        match self {
            Polarization::H => "H",
            Polarization::V => "V",
        }
    }
}

/// A single optical mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub label: String,
    pub kind: ModeKind,
    /// Present exactly when `kind` is `FiberPolarization`.
    pub polarization: Option<Polarization>,
    pub center_frequency_thz: f64,
}

impl Mode {
    pub fn on_chip(label: impl Into<String>, center_frequency_thz: f64) -> Self {
        Mode {
            label: label.into(),
            kind: ModeKind::OnChipPath,
            polarization: None,
            center_frequency_thz,
        }
    }

    pub fn fiber(label: impl Into<String>, pol: Polarization, center_frequency_thz: f64) -> Self {
        Mode {
            label: label.into(),
            kind: ModeKind::FiberPolarization,
            polarization: Some(pol),
            center_frequency_thz,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.center_frequency_thz > 0.0) {
            return Err(Error::InvalidMode {
                label: self.label.clone(),
                reason: format!(
                    "center frequency must be positive, got {}",
                    self.center_frequency_thz
                ),
            });
        }
        match (self.kind, self.polarization) {
            (ModeKind::OnChipPath, Some(_)) => Err(Error::InvalidMode {
                label: self.label.clone(),
                reason: "on-chip modes carry no polarization tag".into(),
            }),
            (ModeKind::FiberPolarization, None) => Err(Error::InvalidMode {
                label: self.label.clone(),
                reason: "fiber modes require a polarization tag".into(),
            }),
            _ => Ok(()),
        }
    }
}

/// Ordered, immutable set of modes with index lookup by label.
///
/// Indices run `0..len()` and stay stable for the lifetime of the registry;
/// states and unitaries built against one registry are only comparable with
/// each other.
#[derive(Debug)]
pub struct ModeRegistry {
    modes: Vec<Mode>,
    by_label: HashMap<String, usize>,
}

impl ModeRegistry {
    pub fn new(modes: Vec<Mode>) -> Result<Arc<Self>> {
        let mut by_label = HashMap::with_capacity(modes.len());
        for (idx, mode) in modes.iter().enumerate() {
            mode.validate()?;
            if by_label.insert(mode.label.clone(), idx).is_some() {
                return Err(Error::DuplicateMode(mode.label.clone()));
            }
        }
        Ok(Arc::new(ModeRegistry { modes, by_label }))
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn mode(&self, index: usize) -> &Mode {
        &self.modes[index]
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn index(&self, label: &str) -> Result<usize> {
        self.by_label
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    /// Index pair (H, V) of a fiber, given the fiber's base label.
    ///
    /// Fiber modes are labelled `<fiber>H` / `<fiber>V`.
    pub fn fiber_pair(&self, fiber: &str) -> Result<(usize, usize)> {
        let h = self.index(&format!("{fiber}H"))?;
        let v = self.index(&format!("{fiber}V"))?;
        Ok((h, v))
    }

    /// True when both registries list the same modes in the same order.
    pub fn same_as(&self, other: &ModeRegistry) -> bool {
        std::ptr::eq(self, other) || self.modes == other.modes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lookup_and_order() {
        let reg = ModeRegistry::new(vec![
            Mode::on_chip("W1", 193.1),
            Mode::on_chip("W2", 193.1),
            Mode::fiber("P5H", Polarization::H, 193.1),
            Mode::fiber("P5V", Polarization::V, 193.1),
        ])
        .unwrap();
        assert_eq!(reg.len(), 4);
        assert_eq!(reg.index("W2").unwrap(), 1);
        assert_eq!(reg.fiber_pair("P5").unwrap(), (2, 3));
        assert!(matches!(reg.index("no-such"), Err(Error::UnknownMode(_))));
    }

    #[test]
    fn duplicate_labels_rejected() {
        let err = ModeRegistry::new(vec![Mode::on_chip("W1", 193.1), Mode::on_chip("W1", 193.1)])
            .unwrap_err();
        assert!(matches!(err, Error::DuplicateMode(_)));
    }

    #[test]
    fn polarization_tags_enforced() {
        assert!(ModeRegistry::new(vec![Mode {
            label: "W1".into(),
            kind: ModeKind::OnChipPath,
            polarization: Some(Polarization::H),
            center_frequency_thz: 193.1,
        }])
        .is_err());
        assert!(ModeRegistry::new(vec![Mode {
            label: "P5H".into(),
            kind: ModeKind::FiberPolarization,
            polarization: None,
            center_frequency_thz: 193.1,
        }])
        .is_err());
        assert!(ModeRegistry::new(vec![Mode::on_chip("W1", 0.0)]).is_err());
    }
}
