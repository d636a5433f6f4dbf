//! Room-temperature readout: no single-shot readout, so every Ramsey is
//! repeated `R` times and the photon counts are averaged into a binary
//! outcome with effective contrast `C`.

use serde::{Deserialize, Serialize};

use super::scaling::{min_eta, sensitivity_scaling, IncrementSource, ScalingConfig, ScalingPoint, TimeMode};
use super::sweep::{detuning_grid, BootstrapSettings};
use crate::error::{invalid, Result};
use crate::estimation::MeasurementModel;
use crate::protocols::{ProtocolKind, TimingModel};

/// Contrast after `R` averaged shots with mean photon numbers `α₀`, `α₁`:
/// `1/C = √(1 + 2(α₀ + α₁) / ((α₀ − α₁)² R))`.
pub fn rt_contrast(alpha0: f64, alpha1: f64, repetitions: u32) -> Result<f64> {
    if repetitions == 0 {
        return Err(invalid("repetitions", "must be >= 1"));
    }
    if !(alpha0 > 0.0 && alpha1 > 0.0 && alpha0.is_finite() && alpha1.is_finite()) {
        return Err(invalid("alpha", "photon numbers must be finite and > 0"));
    }
    if alpha0 == alpha1 {
        return Err(invalid("alpha", "alpha0 == alpha1 gives zero contrast"));
    }
    let d = alpha0 - alpha1;
    let r = f64::from(repetitions);
    Ok(1.0 / (1.0 + 2.0 * (alpha0 + alpha1) / (d * d * r)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomTempModel {
    /// Photons per shot from `m_s = 0`.
    pub alpha0: f64,
    /// Photons per shot from `m_s = ±1`.
    pub alpha1: f64,
    pub repetitions: u32,
    pub f1: f64,
    /// Duration of one readout shot in seconds.
    pub shot_duration: f64,
}

impl RoomTempModel {
    pub fn new(repetitions: u32) -> Self {
        Self {
            alpha0: 0.031,
            alpha1: 0.021,
            repetitions,
            f1: 0.993,
            shot_duration: 1e-6,
        }
    }

    pub fn contrast(&self) -> Result<f64> {
        rt_contrast(self.alpha0, self.alpha1, self.repetitions)
    }

    /// `F₀ = C + (1 − F₁)`.
    pub fn f0(&self) -> Result<f64> {
        Ok(self.contrast()? + 1.0 - self.f1)
    }

    pub fn measurement_model(&self, t2_star: f64, tau_min: f64) -> Result<MeasurementModel> {
        MeasurementModel::new(self.f0()?, self.f1, t2_star, tau_min)
    }

    /// Every Ramsey, free evolution included, runs `R` times; each
    /// repetition also costs one shot.
    pub fn timing(&self) -> Result<TimingModel> {
        if !(self.shot_duration.is_finite() && self.shot_duration > 0.0) {
            return Err(invalid("shot_duration", "must be finite and > 0"));
        }
        Ok(TimingModel {
            t_init: 0.0,
            t_read: f64::from(self.repetitions) * self.shot_duration,
            compute_overlapped: true,
            t_compute_start: 0.0,
            t_compute_end: 0.0,
            sensing_repetitions: self.repetitions,
        })
    }
}

/// Model with `F₁ = 0.993` and `F₀ = C(R) + 1 − F₁`, default photon numbers.
pub fn rt_model(repetitions: u32, t2_star: f64, tau_min: f64) -> Result<MeasurementModel> {
    RoomTempModel::new(repetitions).measurement_model(t2_star, tau_min)
}

#[derive(Debug, Clone)]
pub struct RtCompareConfig {
    pub repetitions: Vec<u32>,
    pub fs: Vec<usize>,
    pub g: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub kinds: Vec<ProtocolKind>,
    pub t2_star: f64,
    pub tau_min: f64,
    pub shot_duration: f64,
    pub detunings: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub increments: IncrementSource,
    pub bootstrap: BootstrapSettings,
}

impl Default for RtCompareConfig {
    fn default() -> Self {
        Self {
            repetitions: vec![3600, 50_000],
            fs: vec![2, 4],
            g: 5,
            n_min: 2,
            n_max: 10,
            kinds: vec![ProtocolKind::OptimizedAdaptive, ProtocolKind::NonAdaptive],
            t2_star: MeasurementModel::REFERENCE_T2_STAR,
            tau_min: MeasurementModel::REFERENCE_TAU_MIN,
            shot_duration: 1e-6,
            detunings: detuning_grid(64, MeasurementModel::REFERENCE_TAU_MIN),
            reps: 25,
            seed: 0,
            increments: IncrementSource::Zero,
            bootstrap: BootstrapSettings::default(),
        }
    }
}

/// Best sensitivity of one protocol at one `(R, F)` setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtRow {
    pub repetitions: u32,
    pub contrast: f64,
    pub f0: f64,
    pub best: ScalingPoint,
}

/// For each repetition count and `F`, runs the wall-time scaling study and
/// keeps the schedule with the smallest field sensitivity per protocol.
pub fn rt_compare(config: &RtCompareConfig) -> Result<Vec<RtRow>> {
    let mut rows = Vec::new();
    for &r in &config.repetitions {
        let rt = RoomTempModel {
            shot_duration: config.shot_duration,
            ..RoomTempModel::new(r)
        };
        let model = rt.measurement_model(config.t2_star, config.tau_min)?;
        for &f in &config.fs {
            for &kind in &config.kinds {
                let mut sc = ScalingConfig::new(vec![kind], config.n_min, config.n_max, config.g, f);
                sc.model = model;
                sc.mode = TimeMode::Wall;
                sc.timing = rt.timing()?;
                sc.detunings = config.detunings.clone();
                sc.reps = config.reps;
                sc.seed = config.seed;
                sc.increments = config.increments.clone();
                sc.bootstrap = config.bootstrap;
                let points = sensitivity_scaling(&sc)?;
                let best = min_eta(&points).cloned().ok_or_else(|| invalid("n_range", "no schedules"))?;
                rows.push(RtRow {
                    repetitions: r,
                    contrast: rt.contrast()?,
                    f0: rt.f0()?,
                    best,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contrast_values() {
        let c = |r| rt_contrast(0.031, 0.021, r).unwrap();
        // 1/C² = 1 + 0.104/(1e-4 R)
        assert!((c(1350) - (1.0 + 1040.0 / 1350.0f64).sqrt().recip()).abs() < 1e-12);
        assert!((c(1350) - 0.75).abs() < 0.01);
        assert!((c(3600) - 0.88).abs() < 0.01);
        assert!(c(50_000) >= 0.985);
        assert!(c(u32::MAX) > 0.9999);
        assert!(c(1) > 0.0 && c(1) < c(2));
    }

    #[test]
    fn contrast_rejects_equal_photon_numbers() {
        assert!(rt_contrast(0.02, 0.02, 100).is_err());
        assert!(rt_contrast(0.03, 0.02, 0).is_err());
    }

    #[test]
    fn model_fidelities() {
        let rt = RoomTempModel::new(3600);
        let m = rt.measurement_model(96e-6, 20e-9).unwrap();
        assert_eq!(m.f1(), 0.993);
        assert!((m.f0() - (rt.contrast().unwrap() + 0.007)).abs() < 1e-15);
        let t = rt.timing().unwrap();
        assert!((t.t_read - 3.6e-3).abs() < 1e-15);
        assert_eq!(t.sensing_repetitions, 3600);
    }

    #[test]
    fn compare_reports_one_row_per_setting() {
        let cfg = RtCompareConfig {
            repetitions: vec![3600],
            fs: vec![2],
            n_min: 2,
            n_max: 3,
            detunings: detuning_grid(4, 20e-9),
            reps: 3,
            bootstrap: BootstrapSettings {
                resamples: 100,
                confidence: 0.95,
            },
            ..RtCompareConfig::default()
        };
        let rows = rt_compare(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.best.total_time > r.best.sensing_time * 3600.0));
    }
}
