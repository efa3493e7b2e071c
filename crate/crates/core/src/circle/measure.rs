use serde::{Deserialize, Serialize};

use super::angle::Angle;
use super::grid::GridFunction;

/// Finite signed measure: point masses plus an optional density.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SignedMeasure {
    pub atoms: Vec<(Angle, f64)>,
    pub density: Option<GridFunction>,
}

impl SignedMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn atom(at: f64, mass: f64) -> Self {
        Self { atoms: vec![(Angle::new(at), mass)], density: None }
    }

    pub fn with_atom(mut self, at: f64, mass: f64) -> Self {
        self.atoms.push((Angle::new(at), mass));
        self
    }

    pub fn with_density(mut self, density: GridFunction) -> Self {
        self.density = Some(density);
        self
    }

    /// `Σ|mass| + ∥density∥₁`.
    pub fn total_variation(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|(_, m)| m.abs()).sum();
        let dens = self.density.as_ref().map_or(0.0, |d| d.abs().integrate());
        atoms + dens
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_variation_adds_parts() {
        let d = GridFunction::constant(16, -0.5).unwrap();
        let mu = SignedMeasure::atom(1.0, 2.0).with_atom(2.0, -0.25).with_density(d);
        assert!((mu.total_variation() - (2.25 + std::f64::consts::PI)).abs() < 1e-12);
        assert_eq!(SignedMeasure::zero().total_variation(), 0.0);
    }
}
