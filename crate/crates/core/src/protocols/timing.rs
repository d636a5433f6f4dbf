use serde::{Deserialize, Serialize};

use super::protocol::RunTrace;
use super::schedule::Schedule;
use crate::error::{invalid, Result};

/// Per-Ramsey overhead durations in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingModel {
    pub t_init: f64,
    pub t_read: f64,
    /// Bayesian update runs during the next initialization.
    pub compute_overlapped: bool,
    /// Update time at `n = 2` and `n = 12`; linear in between, clamped outside.
    pub t_compute_start: f64,
    pub t_compute_end: f64,
    /// Times each Ramsey is repeated to build up one readout (1 with
    /// single-shot readout, `R` for averaged room-temperature readout).
    /// Scales the sensing time; `t_read` is per Ramsey and must already
    /// include every repetition.
    #[serde(default = "one")]
    pub sensing_repetitions: u32,
}

fn one() -> u32 {
    1
}

impl Default for TimingModel {
    fn default() -> Self {
        Self {
            t_init: 150e-6,
            t_read: 10e-6,
            compute_overlapped: true,
            t_compute_start: 80e-6,
            t_compute_end: 190e-6,
            sensing_repetitions: 1,
        }
    }
}

impl TimingModel {
    /// No overhead at all: the wall time equals the sensing time.
    pub fn sensing_only() -> Self {
        Self {
            t_init: 0.0,
            t_read: 0.0,
            compute_overlapped: true,
            t_compute_start: 0.0,
            t_compute_end: 0.0,
            sensing_repetitions: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("t_init", self.t_init),
            ("t_read", self.t_read),
            ("t_compute_start", self.t_compute_start),
            ("t_compute_end", self.t_compute_end),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(field, format!("must be finite and >= 0 (got {v})")));
            }
        }
        if self.sensing_repetitions == 0 {
            return Err(invalid("sensing_repetitions", "must be >= 1"));
        }
        Ok(())
    }

    /// Bayesian-update duration after a Ramsey at sensing-time index `n`.
    pub fn t_compute(&self, n: usize) -> f64 {
        let x = (n.clamp(2, 12) - 2) as f64 / 10.0;
        self.t_compute_start + x * (self.t_compute_end - self.t_compute_start)
    }
}

/// Wall-clock breakdown of one estimation sequence, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallTime {
    pub init: f64,
    pub sensing: f64,
    pub readout: f64,
    pub compute: f64,
    pub total: f64,
}

/// Time budget of a finished run. Computation is hidden behind
/// initialization when `compute_overlapped` is set.
pub fn wall_time(trace: &RunTrace, timing: &TimingModel) -> WallTime {
    schedule_wall_time(&trace.schedule, timing)
}

/// Time budget of any run on `schedule`; it does not depend on the outcomes.
pub fn schedule_wall_time(schedule: &Schedule, timing: &TimingModel) -> WallTime {
    let ramseys = schedule.total_ramseys() as f64;
    let init = ramseys * timing.t_init;
    let readout = ramseys * timing.t_read;
    let sensing = schedule.total_sensing_time() * f64::from(timing.sensing_repetitions);
    let compute = if timing.compute_overlapped {
        0.0
    } else {
        schedule.slots().map(|s| timing.t_compute(s.n)).sum()
    };
    WallTime {
        init,
        sensing,
        readout,
        compute,
        total: init + sensing + readout + compute,
    }
}
