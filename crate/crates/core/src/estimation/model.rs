//! Phenomenological Ramsey readout model.
//!
//! The probability of reporting outcome 0 after a Ramsey experiment of
//! sensing time `τ` and final-pulse phase `ϑ` is
//!
//! ```text
//! P(0 | f_B) = (1 + F0 − F1)/2 + (F0 + F1 − 1)/2 · exp(−(τ/T2*)²) · cos(2π f_B τ + ϑ)
//! ```
//!
//! Internally frequencies are carried as the circular coordinate
//! `φ = 2π f_B τ_min ∈ [−π, π)`, so a sensing time of `t` units of `τ_min`
//! contributes the integer harmonic `t` in the Fourier representation.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Readout fidelities, dephasing time and base sensing time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementModel {
    f0: f64,
    f1: f64,
    t2_star: f64,
    tau_min: f64,
}

impl MeasurementModel {
    /// Low-temperature single-shot readout parameters: F0 = 0.88, F1 = 0.98,
    /// T2* = 96 µs, τ_min = 20 ns.
    pub const REFERENCE_F0: f64 = 0.88;
    pub const REFERENCE_F1: f64 = 0.98;
    pub const REFERENCE_T2_STAR: f64 = 96e-6;
    pub const REFERENCE_TAU_MIN: f64 = 20e-9;

    /// Builds a model; `t2_star` may be `f64::INFINITY` for no dephasing.
    ///
    /// Any pair of fidelities in `[0, 1]` keeps the outcome probability inside
    /// `[0, 1]` for every phase: the extremes of the cosine give `F0`, `1 − F1`
    /// (or the reverse when `F0 + F1 < 1`).
    pub fn new(f0: f64, f1: f64, t2_star: f64, tau_min: f64) -> Result<Self> {
        check_probability("f0", f0)?;
        check_probability("f1", f1)?;
        if t2_star.is_nan() || t2_star <= 0.0 {
            return Err(invalid("t2_star", format!("must be > 0 (got {t2_star})")));
        }
        if !tau_min.is_finite() || tau_min <= 0.0 {
            return Err(invalid("tau_min", format!("must be finite and > 0 (got {tau_min})")));
        }
        Ok(Self {
            f0,
            f1,
            t2_star,
            tau_min,
        })
    }

    pub fn reference() -> Self {
        Self::new(
            Self::REFERENCE_F0,
            Self::REFERENCE_F1,
            Self::REFERENCE_T2_STAR,
            Self::REFERENCE_TAU_MIN,
        )
        .expect("reference model is valid")
    }

    /// Perfect readout and no dephasing.
    pub fn ideal(tau_min: f64) -> Result<Self> {
        Self::new(1.0, 1.0, f64::INFINITY, tau_min)
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn f1(&self) -> f64 {
        self.f1
    }

    pub fn t2_star(&self) -> f64 {
        self.t2_star
    }

    pub fn tau_min(&self) -> f64 {
        self.tau_min
    }

    /// Largest detuning magnitude resolvable without wrapping, `1/(2 τ_min)`.
    pub fn max_detuning(&self) -> f64 {
        0.5 / self.tau_min
    }

    /// Gaussian dephasing envelope `exp(−(τ/T2*)²)` for a sensing time of
    /// `t_units · τ_min`.
    pub fn damping(&self, t_units: usize) -> f64 {
        if self.t2_star.is_infinite() {
            return 1.0;
        }
        let ratio = t_units as f64 * self.tau_min / self.t2_star;
        (-ratio * ratio).exp()
    }

    /// Constant part of `P(outcome | φ)`.
    pub fn offset(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::Zero => 0.5 * (1.0 + self.f0 - self.f1),
            Outcome::One => 0.5 * (1.0 - self.f0 + self.f1),
        }
    }

    /// Fringe amplitude `(F0 + F1 − 1)/2 · exp(−(τ/T2*)²)`, signed for outcome 0.
    pub fn visibility(&self, t_units: usize) -> f64 {
        0.5 * (self.f0 + self.f1 - 1.0) * self.damping(t_units)
    }

    /// `P(outcome | φ)` in the circular coordinate `φ = 2π f_B τ_min`.
    pub fn likelihood_at_phase(&self, phi: f64, outcome: Outcome, setting: RamseySetting) -> f64 {
        let p0 = self.offset(Outcome::Zero)
            + self.visibility(setting.t_units) * (setting.t_units as f64 * phi + setting.theta).cos();
        match outcome {
            Outcome::Zero => p0,
            Outcome::One => 1.0 - p0,
        }
    }

    /// Circular coordinate of a detuning in hertz.
    pub fn phase_of(&self, f_b: f64) -> f64 {
        TAU * f_b * self.tau_min
    }

    /// Detuning in hertz of a circular coordinate.
    pub fn frequency_of(&self, phi: f64) -> f64 {
        phi / (TAU * self.tau_min)
    }

    /// Returns a short, stable text fingerprint for manifests and table files.
    pub fn fingerprint(&self) -> String {
        format!(
            "f0={};f1={};t2_star={};tau_min={}",
            self.f0,
            self.f1,
            if self.t2_star.is_infinite() {
                "inf".to_string()
            } else {
                self.t2_star.to_string()
            },
            self.tau_min
        )
    }
}

fn check_probability(field: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(invalid(field, format!("must lie in [0, 1] (got {value})")));
    }
    Ok(())
}

/// Binary Ramsey readout result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Outcome {
    Zero,
    One,
}

impl Outcome {
    pub fn as_u8(self) -> u8 {
        match self {
            Outcome::Zero => 0,
            Outcome::One => 1,
        }
    }

    /// `μπ`, the extra phase an outcome contributes to the fringe.
    pub(crate) fn phase_shift(self) -> f64 {
        match self {
            Outcome::Zero => 0.0,
            Outcome::One => PI,
        }
    }
}

impl From<Outcome> for u8 {
    fn from(o: Outcome) -> u8 {
        o.as_u8()
    }
}

impl TryFrom<u8> for Outcome {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        match v {
            0 => Ok(Outcome::Zero),
            1 => Ok(Outcome::One),
            other => Err(format!("outcome must be 0 or 1, got {other}")),
        }
    }
}

/// Sensing time (in units of `τ_min`) and readout phase of one Ramsey experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamseySetting {
    pub t_units: usize,
    pub theta: f64,
}

impl RamseySetting {
    pub fn new(t_units: usize, theta: f64) -> Result<Self> {
        if t_units == 0 {
            return Err(invalid("t_units", "must be >= 1"));
        }
        if !theta.is_finite() {
            return Err(invalid("theta", "must be finite"));
        }
        Ok(Self {
            t_units,
            theta: wrap_phase(theta),
        })
    }
}

/// Reduces an angle to `[−π, π)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let wrapped = (theta + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if wrapped >= PI {
        wrapped - TAU
    } else {
        wrapped
    }
}

/// Probability of outcome 0 for a detuning `f_b` in hertz.
pub fn outcome_likelihood(model: &MeasurementModel, f_b: f64, setting: RamseySetting) -> f64 {
    model.likelihood_at_phase(model.phase_of(f_b), Outcome::Zero, setting)
}

/// Draws a Ramsey outcome for the true detuning `f_b`.
pub fn sample_outcome<R: Rng + ?Sized>(
    model: &MeasurementModel,
    f_b: f64,
    setting: RamseySetting,
    rng: &mut R,
) -> Outcome {
    let p0 = outcome_likelihood(model, f_b, setting);
    if rng.gen::<f64>() < p0 {
        Outcome::Zero
    } else {
        Outcome::One
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TAU_MIN: f64 = 20e-9;

    #[test]
    fn perfect_readout_at_zero_phase_is_certain() {
        let m = MeasurementModel::ideal(TAU_MIN).unwrap();
        for t in [1, 2, 4, 1024] {
            let s = RamseySetting::new(t, 0.0).unwrap();
            assert_eq!(outcome_likelihood(&m, 0.0, s), 1.0);
        }
    }

    #[test]
    fn collapses_to_f0_at_zero_phase() {
        let m = MeasurementModel::new(0.88, 0.98, f64::INFINITY, TAU_MIN).unwrap();
        let p = outcome_likelihood(&m, 0.0, RamseySetting::new(3, 0.0).unwrap());
        assert!((p - 0.88).abs() < 1e-15);
    }

    #[test]
    fn half_period_detuning_gives_outcome_one() {
        let m = MeasurementModel::ideal(TAU_MIN).unwrap();
        let p = outcome_likelihood(&m, 6.25e6, RamseySetting::new(4, 0.0).unwrap());
        assert!(p.abs() < 1e-12, "{p}");
    }

    #[test]
    fn reference_model_likelihood_stays_in_unit_interval() {
        let m = MeasurementModel::new(0.88, 0.98, 96e-6, TAU_MIN).unwrap();
        let fmax = m.max_detuning();
        for i in 0..10_000 {
            let f = -fmax + 2.0 * fmax * i as f64 / 10_000.0;
            let theta = -PI + TAU * ((i * 7919) % 10_000) as f64 / 10_000.0;
            for t in [1, 16, 4096] {
                let p = outcome_likelihood(&m, f, RamseySetting::new(t, theta).unwrap());
                assert!((0.0..=1.0).contains(&p), "p={p} at f={f} theta={theta}");
            }
        }
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(matches!(
            MeasurementModel::new(1.2, 0.9, 1e-6, TAU_MIN),
            Err(crate::Error::InvalidParameter { field: "f0", .. })
        ));
        assert!(MeasurementModel::new(0.9, -0.1, 1e-6, TAU_MIN).is_err());
        assert!(MeasurementModel::new(0.9, 0.9, 0.0, TAU_MIN).is_err());
        assert!(MeasurementModel::new(0.9, 0.9, 1e-6, 0.0).is_err());
        assert!(RamseySetting::new(0, 0.0).is_err());
    }

    #[test]
    fn sampling_respects_extreme_probabilities() {
        let m = MeasurementModel::ideal(TAU_MIN).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = RamseySetting::new(4, 0.0).unwrap();
        for _ in 0..1000 {
            assert_eq!(sample_outcome(&m, 0.0, s, &mut rng), Outcome::Zero);
            assert_eq!(sample_outcome(&m, 6.25e6, s, &mut rng), Outcome::One);
        }
    }

    #[test]
    fn sampling_frequency_matches_likelihood() {
        let m = MeasurementModel::new(0.88, 0.98, f64::INFINITY, TAU_MIN).unwrap();
        let s = RamseySetting::new(1, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let zeros = (0..n)
            .filter(|_| sample_outcome(&m, 0.0, s, &mut rng) == Outcome::Zero)
            .count();
        let freq = zeros as f64 / n as f64;
        assert!((freq - 0.88).abs() < 0.01, "{freq}");
    }

    #[test]
    fn wrap_phase_lands_in_half_open_interval() {
        for x in [-PI, PI, 3.0 * PI, -3.0 * PI, -1e-18, 0.0, 7.5, -7.5] {
            let w = wrap_phase(x);
            assert!((-PI..PI).contains(&w), "{x} -> {w}");
        }
        assert_eq!(wrap_phase(PI), -PI);
    }
}
