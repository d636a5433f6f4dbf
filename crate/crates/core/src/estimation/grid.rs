//! Pointwise Bayesian posterior on a uniform phase grid.
//!
//! This is the slow but direct form of Bayes' rule and serves as the
//! reference against which the Fourier representation is checked.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use super::model::{MeasurementModel, Outcome, RamseySetting};
use super::CircularDistribution;
use crate::error::{invalid, Error, Result};

/// Default oracle resolution.
pub const DEFAULT_GRID_SIZE: usize = 1 << 16;

/// Density sampled at `φ_j = −π + 2πj/M`, normalized so that
/// `Σ values · 2π/M = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDistribution {
    values: Vec<f64>,
}

impl GridDistribution {
    pub fn uniform(grid_size: usize) -> Result<Self> {
        if grid_size < 2 {
            return Err(invalid("grid_size", "must be >= 2"));
        }
        Ok(Self {
            values: vec![1.0 / TAU; grid_size],
        })
    }

    /// Builds a distribution from arbitrary nonnegative weights, normalizing them.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(invalid("grid_size", "must be >= 2"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("values", "densities must be finite and nonnegative"));
        }
        let mut dist = Self { values };
        dist.normalize()?;
        Ok(dist)
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_width(&self) -> f64 {
        TAU / self.values.len() as f64
    }

    pub fn phase_at(&self, j: usize) -> f64 {
        -PI + j as f64 * self.cell_width()
    }

    /// `Σ values · 2π/M`.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_width()
    }

    fn normalize(&mut self) -> Result<()> {
        let mass = self.total_mass();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::DegeneratePosterior);
        }
        let scale = 1.0 / mass;
        self.values.iter_mut().for_each(|v| *v *= scale);
        Ok(())
    }

    /// Multiplies by `P(outcome | φ)` pointwise and renormalizes.
    pub fn update(
        &self,
        outcome: Outcome,
        setting: RamseySetting,
        model: &MeasurementModel,
    ) -> Result<Self> {
        let mut next = self.clone();
        next.update_in_place(outcome, setting, model)?;
        Ok(next)
    }

    pub fn update_in_place(
        &mut self,
        outcome: Outcome,
        setting: RamseySetting,
        model: &MeasurementModel,
    ) -> Result<()> {
        let dphi = self.cell_width();
        for (j, v) in self.values.iter_mut().enumerate() {
            let phi = -PI + j as f64 * dphi;
            *v *= model.likelihood_at_phase(phi, outcome, setting).max(0.0);
        }
        self.normalize()
    }

    /// Total-variation distance to a density sampled on the same grid.
    pub fn total_variation(&self, other: &[f64]) -> f64 {
        assert_eq!(self.values.len(), other.len(), "grid sizes differ");
        0.5 * self
            .values
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.cell_width()
    }
}

impl CircularDistribution for GridDistribution {
    fn moment(&self, harmonic: usize) -> Complex64 {
        let dphi = self.cell_width();
        let k = harmonic as f64;
        self.values
            .iter()
            .enumerate()
            .map(|(j, &v)| Complex64::from_polar(v, k * (-PI + j as f64 * dphi)))
            .sum::<Complex64>()
            * dphi
    }
}

/// Pointwise Bayes update on the grid oracle.
pub fn grid_update(
    dist: &GridDistribution,
    outcome: Outcome,
    setting: RamseySetting,
    model: &MeasurementModel,
) -> Result<GridDistribution> {
    dist.update(outcome, setting, model)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAU_MIN: f64 = 20e-9;

    fn index_of(dist: &GridDistribution, model: &MeasurementModel, f: f64) -> usize {
        let phi = model.phase_of(f);
        ((phi + PI) / dist.cell_width()).round() as usize % dist.grid_size()
    }

    #[test]
    fn outcome_one_at_four_units_has_expected_zeros_and_peaks() {
        let model = MeasurementModel::ideal(TAU_MIN).unwrap();
        let post = grid_update(
            &GridDistribution::uniform(1 << 12).unwrap(),
            Outcome::One,
            RamseySetting::new(4, 0.0).unwrap(),
            &model,
        )
        .unwrap();
        let peak = post.values().iter().cloned().fold(0.0, f64::max);
        for f in [0.0, 12.5e6, -12.5e6, -25e6] {
            let v = post.values()[index_of(&post, &model, f)];
            assert!(v < 1e-12, "density {v} at {f}");
        }
        for f in [6.25e6, -6.25e6, 18.75e6, -18.75e6] {
            let v = post.values()[index_of(&post, &model, f)];
            assert!((v - peak).abs() < 1e-12, "density {v} at {f}, peak {peak}");
        }
        assert!((post.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_likelihood_leaves_distribution_unchanged() {
        let model = MeasurementModel::new(0.3, 0.7, f64::INFINITY, TAU_MIN).unwrap();
        let start = GridDistribution::from_values((0..256).map(|j| 1.0 + (j % 7) as f64).collect())
            .unwrap();
        let post = start
            .update(Outcome::Zero, RamseySetting::new(2, 0.4).unwrap(), &model)
            .unwrap();
        for (a, b) in start.values().iter().zip(post.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn successive_updates_match_combined_product() {
        let model = MeasurementModel::new(0.9, 0.95, 5e-6, TAU_MIN).unwrap();
        let s1 = RamseySetting::new(8, 0.3).unwrap();
        let s2 = RamseySetting::new(2, -1.1).unwrap();
        let uniform = GridDistribution::uniform(512).unwrap();
        let a = uniform
            .update(Outcome::One, s1, &model)
            .unwrap()
            .update(Outcome::Zero, s2, &model)
            .unwrap();
        let b = uniform
            .update(Outcome::Zero, s2, &model)
            .unwrap()
            .update(Outcome::One, s1, &model)
            .unwrap();
        let combined = GridDistribution::from_values(
            (0..512)
                .map(|j| {
                    let phi = uniform.phase_at(j);
                    model.likelihood_at_phase(phi, Outcome::One, s1)
                        * model.likelihood_at_phase(phi, Outcome::Zero, s2)
                })
                .collect(),
        )
        .unwrap();
        assert!(a.total_variation(b.values()) < 1e-14);
        assert!(a.total_variation(combined.values()) < 1e-14);
    }

    #[test]
    fn impossible_outcome_is_an_error() {
        let model = MeasurementModel::ideal(TAU_MIN).unwrap();
        // a point mass at φ = 0 with perfect readout never yields outcome 1 at ϑ = 0
        let mut values = vec![0.0; 64];
        values[32] = 1.0;
        let spike = GridDistribution::from_values(values).unwrap();
        assert_eq!(
            spike.update(Outcome::One, RamseySetting::new(1, 0.0).unwrap(), &model),
            Err(Error::DegeneratePosterior)
        );
    }

    #[test]
    fn holevo_variance_of_raised_cosine_is_three() {
        let dist = GridDistribution::from_values(
            (0..1024)
                .map(|j| 1.0 + (-PI + TAU * j as f64 / 1024.0).cos())
                .collect(),
        )
        .unwrap();
        assert!((dist.holevo_variance() - 3.0).abs() < 1e-12);
    }
}
