//! Outcome model, posterior representations, Bayesian updates and the
//! phase-choice rules built on them.

pub mod fourier;
pub mod grid;
pub mod model;
pub mod phase;
pub mod trim;

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use fourier::{fourier_update, FourierDistribution};
pub use grid::{grid_update, GridDistribution, DEFAULT_GRID_SIZE};
pub use model::{
    outcome_likelihood, sample_outcome, wrap_phase, MeasurementModel, Outcome, RamseySetting,
};
pub use phase::{
    brute_force_phase, controlled_phase, expected_sharpness, optimal_phase, PhaseChoice,
};
pub use trim::{trim_coefficients, TrimPlan};

/// A probability density over the circular phase `φ ∈ [−π, π)`.
pub trait CircularDistribution {
    /// `⟨e^{ikφ}⟩` for harmonic `k`.
    fn moment(&self, harmonic: usize) -> Complex64;

    /// Length of the first circular moment, `|⟨e^{iφ}⟩|`.
    fn sharpness(&self) -> f64 {
        self.moment(1).norm()
    }

    /// Holevo variance `|⟨e^{iφ}⟩|⁻² − 1`; infinite for a zero resultant.
    fn holevo_variance(&self) -> f64 {
        self.holevo_variance_at(1)
    }

    /// Holevo variance of the scaled phase `kφ`, the per-step quantity tracked
    /// while the sensing time is `k · τ_min`.
    fn holevo_variance_at(&self, harmonic: usize) -> f64 {
        holevo_from_sharpness(self.moment(harmonic).norm())
    }

    /// Circular mean `arg⟨e^{iφ}⟩`.
    fn mean_phase(&self) -> Result<f64> {
        let m = self.moment(1);
        if m.norm() == 0.0 {
            return Err(Error::DegenerateEstimate);
        }
        Ok(m.arg())
    }
}

pub(crate) fn holevo_from_sharpness(sharpness: f64) -> f64 {
    if sharpness == 0.0 {
        f64::INFINITY
    } else {
        (sharpness * sharpness).recip() - 1.0
    }
}

/// Holevo variance of a posterior, `(2π|p₁|)⁻² − 1` in Fourier form.
pub fn posterior_holevo_variance<D: CircularDistribution + ?Sized>(dist: &D) -> f64 {
    dist.holevo_variance()
}

/// Frequency estimate in hertz: the circular mean of the posterior mapped
/// back through `φ = 2π f τ_min`.
pub fn estimate_frequency<D: CircularDistribution + ?Sized>(dist: &D, tau_min: f64) -> Result<f64> {
    Ok(dist.mean_phase()? / (TAU * tau_min))
}
