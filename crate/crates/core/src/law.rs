//! Probability measures on `[0, 1]` with finitely many atoms.

use crate::error::{Error, Result};

/// Atoms are kept sorted by value with duplicates merged; weights sum to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<(f64, f64)>,
}

/// Empirical type distribution of a finite population.
pub type EmpiricalMeasure = AtomicMeasure;

impl AtomicMeasure {
    /// Builds a measure from `(value, weight)` pairs. Weights are normalised;
    /// zero weights are dropped.
    pub fn new(atoms: &[(f64, f64)]) -> Result<Self> {
        let mut clean = Vec::with_capacity(atoms.len());
        for &(x, w) in atoms {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidArgument(format!("atom {x} lies outside [0, 1]")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidArgument(format!("atom weight {w} is not a nonnegative number")));
            }
            if w > 0.0 {
                clean.push((x, w));
            }
        }
        let total: f64 = clean.iter().map(|a| a.1).sum();
        if clean.is_empty() || total <= 0.0 {
            return Err(Error::InvalidArgument("measure has no mass".into()));
        }
        clean.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(clean.len());
        for (x, w) in clean {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        for atom in &mut merged {
            atom.1 /= total;
        }
        Ok(Self { atoms: merged })
    }

    pub fn dirac(x: f64) -> Result<Self> {
        Self::new(&[(x, 1.0)])
    }

    /// Empirical measure of a sample: each value carries weight `1/len`.
    pub fn empirical(values: &[f64]) -> Result<Self> {
        let atoms: Vec<(f64, f64)> = values.iter().map(|&x| (x, 1.0)).collect();
        Self::new(&atoms)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Mass of the value `x`.
    pub fn mass_at(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .find(|a| a.0 == x)
            .map_or(0.0, |a| a.1)
    }

    /// Whether every atom lies in `(0, 1]`, the type space of initial
    /// individuals (0 is reserved for immigrants).
    pub fn avoids_immigrant_type(&self) -> bool {
        self.atoms.iter().all(|a| a.0 > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalises_and_merges() {
        let m = AtomicMeasure::new(&[(0.5, 1.0), (0.25, 2.0), (0.5, 1.0), (0.9, 0.0)]).unwrap();
        assert_eq!(m.atoms(), &[(0.25, 0.5), (0.5, 0.5)]);
        let e = AtomicMeasure::empirical(&[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(e.mass_at(1.0), 0.5);
        assert!(!e.avoids_immigrant_type());
        assert!(AtomicMeasure::new(&[(1.5, 1.0)]).is_err());
        assert!(AtomicMeasure::new(&[(0.5, 0.0)]).is_err());
    }
}
