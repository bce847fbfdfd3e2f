//! Translation-invariant pair couplings `V(|i - j|)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CouplingKind {
    /// `V(r) = r^(-alpha)`.
    PowerLaw { alpha: f64 },
    /// `V(r) = values[r - 1]`, zero beyond the end of the table.
    Table(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    kind: CouplingKind,
    /// Couplings vanish for `r > max_distance`; `None` means no cutoff.
    max_distance: Option<usize>,
}

impl CouplingSpec {
    pub fn power_law(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(format!(
                "power-law exponent must be positive and finite, got {alpha}"
            )));
        }
        Ok(Self {
            kind: CouplingKind::PowerLaw { alpha },
            max_distance: None,
        })
    }

    /// Explicit table; `values[0]` is the nearest-neighbour coupling.
    pub fn table(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("coupling table is empty"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite coupling value {v}")));
        }
        Ok(Self {
            kind: CouplingKind::Table(values),
            max_distance: None,
        })
    }

    pub fn nearest_neighbour(j: f64) -> Result<Self> {
        Self::table(vec![j])
    }

    pub fn with_max_distance(mut self, max_distance: usize) -> Self {
        self.max_distance = Some(max_distance);
        self
    }

    pub fn kind(&self) -> &CouplingKind {
        &self.kind
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.kind {
            CouplingKind::PowerLaw { alpha } => Some(alpha),
            CouplingKind::Table(_) => None,
        }
    }

    pub fn max_distance(&self) -> Option<usize> {
        self.max_distance
    }

    /// Coupling at integer distance `r >= 1`.
    pub fn value(&self, r: usize) -> f64 {
        if r == 0 || self.max_distance.is_some_and(|m| r > m) {
            return 0.0;
        }
        match &self.kind {
            CouplingKind::PowerLaw { alpha } => (r as f64).powf(-alpha),
            CouplingKind::Table(values) => values.get(r - 1).copied().unwrap_or(0.0),
        }
    }

    /// Distance-indexed table for a chain of `n` sites: entry `r - 1` holds
    /// `V(r)` for `r = 1..n`.
    pub fn distance_table(&self, n: usize) -> Vec<f64> {
        (1..n).map(|r| self.value(r)).collect()
    }

    /// Whether `sum_{r >= 1} V(r)` converges.
    pub fn is_summable(&self) -> bool {
        match self.kind {
            _ if self.max_distance.is_some() => true,
            CouplingKind::PowerLaw { alpha } => alpha > 1.0,
            CouplingKind::Table(_) => true,
        }
    }

    /// True when only `V(1)` can be nonzero.
    pub fn is_nearest_neighbour(&self) -> bool {
        match &self.kind {
            _ if self.max_distance == Some(1) => true,
            CouplingKind::PowerLaw { .. } => false,
            CouplingKind::Table(values) => values[1..].iter().all(|&v| v == 0.0),
        }
    }

    /// Checks `V(r) > 0` for every distance occurring in an `n`-site chain.
    pub fn require_positive(&self, n: usize) -> Result<()> {
        for r in 1..n {
            let v = self.value(r);
            if !(v > 0.0) {
                return Err(Error::Domain(format!(
                    "couplings must be strictly positive, V({r}) = {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn require_summable(&self) -> Result<()> {
        if self.is_summable() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "couplings are not summable (power law needs alpha > 1, got {:?})",
                self.alpha()
            )))
        }
    }
}
