use serde::{Deserialize, Serialize};

use super::field::{field_sensitivity, FieldConversion};
use super::stats::{bootstrap_mean_holevo_ci, ensemble_holevo_variance, fit_slope, mean};
use super::sweep::{run_ensembles, BootstrapSettings};
use crate::error::{invalid, Result};
use crate::estimation::MeasurementModel;
use crate::protocols::{
    schedule_wall_time, NonAdaptiveSweep, PhaseIncrementTable, PhaseRule, Protocol, ProtocolKind, Schedule,
    TimingModel,
};
use crate::seed::derive_seed;
use crate::swarm::IncrementLibrary;

/// Which duration multiplies the Holevo variance in `η² = V_H T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeMode {
    /// Free-evolution time only.
    #[default]
    Sensing,
    /// Sensing plus initialization, readout and any non-overlapped computation.
    Wall,
}

/// Where the optimized-adaptive protocol gets its phase increments.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum IncrementSource {
    /// All-zero tables: controlled phase before every Ramsey and nothing else.
    #[default]
    Zero,
    Library(IncrementLibrary),
}

impl IncrementSource {
    pub fn table_for(&self, schedule: &Schedule) -> Result<PhaseIncrementTable> {
        match self {
            IncrementSource::Zero => Ok(PhaseIncrementTable::zeros(schedule)),
            IncrementSource::Library(lib) => lib.lookup(schedule),
        }
    }
}

/// A sensitivity-versus-time study over a family of schedules.
#[derive(Debug, Clone)]
pub struct ScalingConfig {
    pub kinds: Vec<ProtocolKind>,
    pub n_min: usize,
    pub n_max: usize,
    pub g: usize,
    pub f: usize,
    pub model: MeasurementModel,
    pub mode: TimeMode,
    pub timing: TimingModel,
    pub detunings: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub increments: IncrementSource,
    pub quantize_phase: bool,
    pub phase_rule: PhaseRule,
    pub sweep: NonAdaptiveSweep,
    pub bootstrap: BootstrapSettings,
    pub conversion: FieldConversion,
}

impl ScalingConfig {
    pub fn new(kinds: Vec<ProtocolKind>, n_min: usize, n_max: usize, g: usize, f: usize) -> Self {
        let model = MeasurementModel::reference();
        Self {
            kinds,
            n_min,
            n_max,
            g,
            f,
            model,
            mode: TimeMode::Sensing,
            timing: TimingModel::default(),
            detunings: super::sweep::detuning_grid(64, model.tau_min()),
            reps: 25,
            seed: 0,
            increments: IncrementSource::Zero,
            quantize_phase: false,
            phase_rule: PhaseRule::ClosedForm,
            sweep: NonAdaptiveSweep::FromZero,
            bootstrap: BootstrapSettings::default(),
            conversion: FieldConversion::default(),
        }
    }

    pub fn schedules(&self) -> Result<Vec<Schedule>> {
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(invalid(
                "n_range",
                format!("need 1 <= n_min <= n_max (got {}..{})", self.n_min, self.n_max),
            ));
        }
        (self.n_min..=self.n_max)
            .map(|n| Schedule::new(n, self.g, self.f, self.model.tau_min()))
            .collect()
    }

    pub fn protocol(&self, kind: ProtocolKind, schedule: Schedule) -> Result<Protocol> {
        let increments = match kind {
            ProtocolKind::OptimizedAdaptive => Some(self.increments.table_for(&schedule)?),
            _ => None,
        };
        Ok(Protocol::new(kind, schedule, self.model, increments)?
            .with_phase_quantization(self.quantize_phase)
            .with_phase_rule(self.phase_rule)
            .with_sweep(self.sweep))
    }
}

/// Sensitivity of one protocol on one schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub kind: ProtocolKind,
    pub n_steps: usize,
    pub g: usize,
    pub f: usize,
    pub sensing_time: f64,
    pub wall_time: f64,
    /// `sensing_time` or `wall_time`, per the study's [`TimeMode`].
    pub total_time: f64,
    /// Arithmetic mean over detunings of the ensemble Holevo variance.
    pub holevo_variance: f64,
    pub holevo_ci: (f64, f64),
    pub eta_squared: f64,
    /// nT/√Hz.
    pub eta_field: f64,
    pub eta_field_ci: (f64, f64),
    pub seed: u64,
}

/// Runs every protocol kind on every schedule of the family. Random streams
/// depend on `(seed, N, detuning, repetition)` only, so all kinds see the
/// same detunings and sampling noise.
pub fn sensitivity_scaling(config: &ScalingConfig) -> Result<Vec<ScalingPoint>> {
    config.timing.validate()?;
    let schedules = config.schedules()?;
    let tau_min = config.model.tau_min();
    let mut points = Vec::new();
    for &kind in &config.kinds {
        for &schedule in &schedules {
            let protocol = config.protocol(kind, schedule)?;
            let n = schedule.n_steps as u64;
            let groups = run_ensembles(&protocol, &config.detunings, config.reps, config.seed, &[n])?;
            let per_detuning = groups
                .iter()
                .map(|g| ensemble_holevo_variance(g, tau_min))
                .collect::<Result<Vec<_>>>()?;
            let v_h = mean(&per_detuning);
            let ci = bootstrap_mean_holevo_ci(
                &groups,
                tau_min,
                config.bootstrap.resamples,
                config.bootstrap.confidence,
                derive_seed(config.seed, &[n, 0xc1]),
            )?;
            points.push(make_point(config, kind, schedule, v_h, ci));
        }
    }
    Ok(points)
}

fn make_point(
    config: &ScalingConfig,
    kind: ProtocolKind,
    schedule: Schedule,
    v_h: f64,
    ci: (f64, f64),
) -> ScalingPoint {
    let sensing_time = schedule.total_sensing_time();
    let wall_time = schedule_wall_time(&schedule, &config.timing).total;
    let total_time = match config.mode {
        TimeMode::Sensing => sensing_time,
        TimeMode::Wall => wall_time,
    };
    let tau_min = config.model.tau_min();
    let eta = |v| field_sensitivity(v, total_time, tau_min, &config.conversion);
    ScalingPoint {
        kind,
        n_steps: schedule.n_steps,
        g: schedule.g,
        f: schedule.f,
        sensing_time,
        wall_time,
        total_time,
        holevo_variance: v_h,
        holevo_ci: ci,
        eta_squared: v_h * total_time,
        eta_field: eta(v_h),
        eta_field_ci: (eta(ci.0), eta(ci.1)),
        seed: config.seed,
    }
}

/// Log-log slope of `η²` against total time over the points that are clear
/// of the short-sequence transient (`N ≥ 4`) and of dephasing
/// (sensing time below `T₂*/2`).
pub fn scaling_slope(points: &[ScalingPoint], t2_star: f64) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.n_steps >= 4 && p.sensing_time < 0.5 * t2_star)
        .filter(|p| p.eta_squared > 0.0 && p.eta_squared.is_finite())
        .map(|p| (p.total_time.ln(), p.eta_squared.ln()))
        .unzip();
    fit_slope(&x, &y)
}

/// Point with the smallest field sensitivity.
pub fn min_eta(points: &[ScalingPoint]) -> Option<&ScalingPoint> {
    points
        .iter()
        .filter(|p| !p.eta_field.is_nan())
        .min_by(|a, b| a.eta_field.total_cmp(&b.eta_field))
}
