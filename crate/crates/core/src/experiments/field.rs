use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Gyromagnetic ratio used to turn frequency uncertainty into field uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConversion {
    /// `γ/2π` in Hz/T.
    pub gamma_over_2pi: f64,
}

impl Default for FieldConversion {
    fn default() -> Self {
        // 28 MHz/mT
        Self {
            gamma_over_2pi: 2.8e10,
        }
    }
}

impl FieldConversion {
    pub fn new(gamma_over_2pi: f64) -> Result<Self> {
        if !gamma_over_2pi.is_finite() || gamma_over_2pi <= 0.0 {
            return Err(invalid("gamma_over_2pi", "must be finite and > 0"));
        }
        Ok(Self { gamma_over_2pi })
    }

    /// Frequency standard deviation in Hz implied by a phase Holevo variance.
    pub fn sigma_frequency(&self, v_h: f64, tau_min: f64) -> f64 {
        v_h.sqrt() / (TAU * tau_min)
    }
}

/// Field sensitivity `η = σ_B √T` in nT/√Hz, where `σ_f = √V_H / (2π τ_min)`
/// and `σ_B = σ_f / (γ/2π)`. Infinite `v_h` maps to an infinite result.
pub fn field_sensitivity(v_h: f64, total_time: f64, tau_min: f64, conv: &FieldConversion) -> f64 {
    let sigma_b = conv.sigma_frequency(v_h, tau_min) / conv.gamma_over_2pi;
    sigma_b * total_time.sqrt() * 1e9
}
