//! The three estimation protocols.
//!
//! * limited-adaptive: controlled phase recomputed whenever the sensing time changes;
//! * non-adaptive: readout phase swept as `(m−1)π/M_n`, independent of outcomes;
//! * optimized-adaptive: controlled phase recomputed before every Ramsey plus an
//!   increment looked up from `(n, m, previous outcome)`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::schedule::{Schedule, Slot};
use super::timing::{wall_time, TimingModel, WallTime};
use crate::error::{invalid, Error, Result};
use crate::estimation::{
    controlled_phase, estimate_frequency, optimal_phase, sample_outcome, wrap_phase, FourierDistribution,
    MeasurementModel, Outcome, RamseySetting, TrimPlan,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    LimitedAdaptive,
    NonAdaptive,
    OptimizedAdaptive,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 3] = [
        ProtocolKind::LimitedAdaptive,
        ProtocolKind::NonAdaptive,
        ProtocolKind::OptimizedAdaptive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::LimitedAdaptive => "limited-adaptive",
            ProtocolKind::NonAdaptive => "non-adaptive",
            ProtocolKind::OptimizedAdaptive => "optimized-adaptive",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "limited-adaptive" | "limited" => Ok(ProtocolKind::LimitedAdaptive),
            "non-adaptive" | "nonadaptive" => Ok(ProtocolKind::NonAdaptive),
            "optimized-adaptive" | "optimized" => Ok(ProtocolKind::OptimizedAdaptive),
            other => Err(invalid(
                "protocol",
                format!("unknown protocol `{other}` (limited-adaptive | non-adaptive | optimized-adaptive)"),
            )),
        }
    }
}

/// Starting point of the non-adaptive phase sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonAdaptiveSweep {
    /// `ϑ_{n,m} = (m−1)π/M_n`.
    #[default]
    FromZero,
    /// `ϑ_{n,m} = mπ/M_n`.
    FromStep,
}

impl NonAdaptiveSweep {
    pub fn phase(self, m: usize, reps: usize) -> f64 {
        let steps = match self {
            NonAdaptiveSweep::FromZero => m - 1,
            NonAdaptiveSweep::FromStep => m,
        };
        steps as f64 * PI / reps as f64
    }
}

/// Outcome-conditioned phase increments, `u0[n−1][m−1]` after a 0 and
/// `u1[n−1][m−1]` after a 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseIncrementTable {
    pub u0: Vec<Vec<f64>>,
    pub u1: Vec<Vec<f64>>,
}

impl PhaseIncrementTable {
    pub fn zeros(schedule: &Schedule) -> Self {
        let rows: Vec<Vec<f64>> = (1..=schedule.n_steps)
            .map(|n| vec![0.0; schedule.reps(n)])
            .collect();
        Self {
            u0: rows.clone(),
            u1: rows,
        }
    }

    /// Number of free parameters, `2 R_N`.
    pub fn dimension(schedule: &Schedule) -> usize {
        2 * schedule.total_ramseys()
    }

    /// Unflattens a parameter vector: the first `R_N` entries fill `u0` in
    /// slot order, the remaining `R_N` fill `u1`. Values are wrapped to `[−π, π)`.
    pub fn from_flat(schedule: &Schedule, flat: &[f64]) -> Result<Self> {
        let r = schedule.total_ramseys();
        if flat.len() != 2 * r {
            return Err(Error::IncrementTable(format!(
                "expected {} values, got {}",
                2 * r,
                flat.len()
            )));
        }
        let mut table = Self::zeros(schedule);
        for (i, slot) in schedule.slots().enumerate() {
            table.u0[slot.n - 1][slot.m - 1] = wrap_phase(flat[i]);
            table.u1[slot.n - 1][slot.m - 1] = wrap_phase(flat[r + i]);
        }
        Ok(table)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.u0
            .iter()
            .flatten()
            .chain(self.u1.iter().flatten())
            .copied()
            .collect()
    }

    pub fn validate(&self, schedule: &Schedule) -> Result<()> {
        for (name, table) in [("u0", &self.u0), ("u1", &self.u1)] {
            if table.len() != schedule.n_steps {
                return Err(Error::IncrementTable(format!(
                    "{name} has {} rows, schedule has N = {}",
                    table.len(),
                    schedule.n_steps
                )));
            }
            for (i, row) in table.iter().enumerate() {
                let n = i + 1;
                if row.len() != schedule.reps(n) {
                    return Err(Error::IncrementTable(format!(
                        "{name}[n={n}] has {} entries, expected M_n = {}",
                        row.len(),
                        schedule.reps(n)
                    )));
                }
                if let Some(v) = row.iter().find(|v| !(-PI..PI).contains(*v)) {
                    return Err(Error::IncrementTable(format!(
                        "{name}[n={n}] contains {v}, outside [-pi, pi)"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, n: usize, m: usize, previous: Outcome) -> f64 {
        match previous {
            Outcome::Zero => self.u0[n - 1][m - 1],
            Outcome::One => self.u1[n - 1][m - 1],
        }
    }
}

/// One executed Ramsey experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    /// 1-based position in the sequence.
    pub step: usize,
    pub n: usize,
    pub m: usize,
    pub t_units: usize,
    pub theta: f64,
    pub outcome: Outcome,
}

/// Record of one estimation sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub kind: ProtocolKind,
    pub schedule: Schedule,
    pub f_true: f64,
    pub steps: Vec<TraceStep>,
    /// Final posterior. With trimming on (the default) only the harmonics
    /// the estimator needs survive; disable trimming for the full density.
    pub posterior: FourierDistribution,
    pub estimate_hz: f64,
    /// The final posterior had no preferred phase; `estimate_hz` is then 0.
    pub estimate_degenerate: bool,
    pub sensing_time: f64,
    /// How many times the controlled phase was evaluated.
    pub phase_computations: usize,
}

#[derive(Serialize)]
struct TraceJson<'a> {
    protocol: ProtocolKind,
    schedule: &'a Schedule,
    f_true_hz: f64,
    steps: &'a [TraceStep],
    estimate_hz: f64,
    estimate_degenerate: bool,
    timings: WallTime,
}

impl RunTrace {
    pub fn wall_time(&self, timing: &TimingModel) -> WallTime {
        wall_time(self, timing)
    }

    /// JSON form with fields `steps[{step, n, m, t_units, theta, outcome}]`,
    /// `estimate_hz` and `timings`.
    pub fn to_json(&self, timing: &TimingModel) -> serde_json::Value {
        serde_json::to_value(TraceJson {
            protocol: self.kind,
            schedule: &self.schedule,
            f_true_hz: self.f_true,
            steps: &self.steps,
            estimate_hz: self.estimate_hz,
            estimate_degenerate: self.estimate_degenerate,
            timings: self.wall_time(timing),
        })
        .expect("trace serializes")
    }
}

/// Rounds a phase to the nearest of 256 levels over one turn.
pub fn quantize_phase(theta: f64) -> f64 {
    let step = TAU / 256.0;
    wrap_phase((theta / step).round() * step)
}

/// How the controlled phase is chosen before a Ramsey.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseRule {
    /// `½ arg p_{2t}`: optimal whenever `p_t = 0`, as at the start of every
    /// block, and only approximately optimal inside a block.
    #[default]
    ClosedForm,
    /// Numerical maximizer of the expected posterior sharpness at harmonic
    /// `t`. Coincides with the closed form when `p_t = 0`.
    Optimal,
}

/// A protocol bound to its schedule and model, with the trimming plan
/// precomputed so that many runs can share it.
#[derive(Debug, Clone)]
pub struct Protocol {
    kind: ProtocolKind,
    schedule: Schedule,
    model: MeasurementModel,
    increments: Option<PhaseIncrementTable>,
    quantize: bool,
    rule: PhaseRule,
    sweep: NonAdaptiveSweep,
    slots: Vec<Slot>,
    plan: Option<TrimPlan>,
}

impl Protocol {
    /// `increments` must be given exactly when `kind` is optimized-adaptive.
    pub fn new(
        kind: ProtocolKind,
        schedule: Schedule,
        model: MeasurementModel,
        increments: Option<PhaseIncrementTable>,
    ) -> Result<Self> {
        if (schedule.tau_min - model.tau_min()).abs() > 1e-12 * model.tau_min() {
            return Err(invalid("tau_min", "schedule and model disagree on tau_min"));
        }
        match (kind, &increments) {
            (ProtocolKind::OptimizedAdaptive, None) => {
                return Err(Error::MissingIncrements(kind.name()))
            }
            (ProtocolKind::OptimizedAdaptive, Some(table)) => table.validate(&schedule)?,
            (_, Some(_)) => {
                return Err(invalid(
                    "increments",
                    format!("{kind} does not use a phase increment table"),
                ))
            }
            (_, None) => {}
        }
        let slots: Vec<Slot> = schedule.slots().collect();
        let mut protocol = Self {
            kind,
            schedule,
            model,
            increments,
            quantize: false,
            rule: PhaseRule::default(),
            sweep: NonAdaptiveSweep::default(),
            slots,
            plan: None,
        };
        protocol.plan = Some(protocol.build_plan());
        Ok(protocol)
    }

    fn build_plan(&self) -> TrimPlan {
        let t: Vec<usize> = self.slots.iter().map(|s| s.t_units).collect();
        let queries: Vec<Vec<usize>> = self
            .slots
            .iter()
            .map(|s| match self.kind {
                ProtocolKind::LimitedAdaptive if s.m == 1 => self.query(s.t_units),
                ProtocolKind::OptimizedAdaptive => self.query(s.t_units),
                _ => Vec::new(),
            })
            .collect();
        TrimPlan::new(&t, &queries, &[1])
    }

    fn query(&self, t: usize) -> Vec<usize> {
        match self.rule {
            PhaseRule::ClosedForm => vec![2 * t],
            PhaseRule::Optimal => vec![t, 2 * t],
        }
    }

    fn choose_phase(&self, posterior: &FourierDistribution, t: usize) -> f64 {
        match self.rule {
            PhaseRule::ClosedForm => controlled_phase(posterior, t).theta,
            PhaseRule::Optimal => optimal_phase(posterior, t, &self.model).theta,
        }
    }

    pub fn with_phase_rule(mut self, rule: PhaseRule) -> Self {
        self.rule = rule;
        if self.plan.is_some() {
            self.plan = Some(self.build_plan());
        }
        self
    }

    pub fn phase_rule(&self) -> PhaseRule {
        self.rule
    }

    /// Round applied phases to 8-bit resolution.
    pub fn with_phase_quantization(mut self, on: bool) -> Self {
        self.quantize = on;
        self
    }

    /// Keep every reachable harmonic instead of the trimmed working set.
    pub fn with_trimming(mut self, on: bool) -> Self {
        self.plan = on.then(|| self.build_plan());
        self
    }

    pub fn with_sweep(mut self, sweep: NonAdaptiveSweep) -> Self {
        self.sweep = sweep;
        self
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn model(&self) -> &MeasurementModel {
        &self.model
    }

    pub fn plan(&self) -> Option<&TrimPlan> {
        self.plan.as_ref()
    }

    /// Runs one estimation sequence against the true detuning `f_true`.
    pub fn run<R: Rng + ?Sized>(&self, f_true: f64, rng: &mut R) -> Result<RunTrace> {
        self.run_observed(f_true, rng, |_, _| {})
    }

    /// Like [`Protocol::run`], calling `observe(step, posterior)` before each
    /// Ramsey with the posterior the phase choice is based on.
    pub fn run_observed<R, O>(&self, f_true: f64, rng: &mut R, mut observe: O) -> Result<RunTrace>
    where
        R: Rng + ?Sized,
        O: FnMut(usize, &FourierDistribution),
    {
        let fmax = self.model.max_detuning();
        if !f_true.is_finite() || f_true.abs() >= fmax {
            return Err(invalid(
                "f_true",
                format!("must satisfy |f| < {fmax} Hz (got {f_true})"),
            ));
        }
        let mut posterior = FourierDistribution::uniform();
        let mut previous = Outcome::Zero;
        let mut held_phase = 0.0;
        let mut phase_computations = 0;
        let mut steps = Vec::with_capacity(self.slots.len());

        for (l, slot) in self.slots.iter().enumerate() {
            observe(l, &posterior);
            let theta = match self.kind {
                ProtocolKind::LimitedAdaptive => {
                    if slot.m == 1 {
                        held_phase = self.choose_phase(&posterior, slot.t_units);
                        phase_computations += 1;
                    }
                    held_phase
                }
                ProtocolKind::NonAdaptive => self.sweep.phase(slot.m, self.schedule.reps(slot.n)),
                ProtocolKind::OptimizedAdaptive => {
                    phase_computations += 1;
                    let increments = self.increments.as_ref().expect("checked in new");
                    self.choose_phase(&posterior, slot.t_units)
                        + increments.get(slot.n, slot.m, previous)
                }
            };
            let theta = if self.quantize {
                quantize_phase(theta)
            } else {
                wrap_phase(theta)
            };
            let setting = RamseySetting {
                t_units: slot.t_units,
                theta,
            };
            let outcome = sample_outcome(&self.model, f_true, setting, rng);
            posterior = match &self.plan {
                Some(plan) => posterior.update_within(outcome, setting, &self.model, plan.keep_after(l))?,
                None => posterior.update(outcome, setting, &self.model)?,
            };
            previous = outcome;
            steps.push(TraceStep {
                step: l + 1,
                n: slot.n,
                m: slot.m,
                t_units: slot.t_units,
                theta,
                outcome,
            });
        }

        let (estimate_hz, estimate_degenerate) =
            match estimate_frequency(&posterior, self.model.tau_min()) {
                Ok(f) => (f, false),
                Err(_) => (0.0, true),
            };
        Ok(RunTrace {
            kind: self.kind,
            schedule: self.schedule,
            f_true,
            steps,
            posterior,
            estimate_hz,
            estimate_degenerate,
            sensing_time: self.schedule.total_sensing_time(),
            phase_computations,
        })
    }
}

/// One-shot convenience wrapper around [`Protocol`].
pub fn run_protocol<R: Rng + ?Sized>(
    kind: ProtocolKind,
    schedule: &Schedule,
    model: &MeasurementModel,
    increments: Option<&PhaseIncrementTable>,
    f_true: f64,
    rng: &mut R,
    quantize_phases: bool,
) -> Result<RunTrace> {
    Protocol::new(kind, *schedule, *model, increments.cloned())?
        .with_phase_quantization(quantize_phases)
        .run(f_true, rng)
}
