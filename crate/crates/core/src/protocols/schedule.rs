use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Largest supported number of sensing times; `2^(N−1)` must stay a modest
/// harmonic index.
pub const MAX_STEPS: usize = 24;

/// Exponential sensing-time schedule: `τ_n = 2^(N−n) τ_min` with
/// `M_n = G + F(n−1)` repetitions at step `n = 1..N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    #[serde(rename = "N")]
    pub n_steps: usize,
    #[serde(rename = "G")]
    pub g: usize,
    #[serde(rename = "F")]
    pub f: usize,
    pub tau_min: f64,
}

/// One Ramsey slot of a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    /// 1-based sensing-time index.
    pub n: usize,
    /// 1-based repetition within the sensing time.
    pub m: usize,
    pub t_units: usize,
}

impl Schedule {
    pub fn new(n_steps: usize, g: usize, f: usize, tau_min: f64) -> Result<Self> {
        if n_steps == 0 || n_steps > MAX_STEPS {
            return Err(invalid("n_steps", format!("must be in 1..={MAX_STEPS} (got {n_steps})")));
        }
        if g == 0 {
            return Err(invalid("g", "must be >= 1"));
        }
        if !tau_min.is_finite() || tau_min <= 0.0 {
            return Err(invalid("tau_min", format!("must be finite and > 0 (got {tau_min})")));
        }
        Ok(Self {
            n_steps,
            g,
            f,
            tau_min,
        })
    }

    /// `2^(N−n)`.
    pub fn t_units(&self, n: usize) -> usize {
        debug_assert!((1..=self.n_steps).contains(&n));
        1 << (self.n_steps - n)
    }

    pub fn sensing_time(&self, n: usize) -> f64 {
        self.t_units(n) as f64 * self.tau_min
    }

    /// `M_n = G + F(n−1)`.
    pub fn reps(&self, n: usize) -> usize {
        self.g + self.f * (n - 1)
    }

    /// `R_N = G N + F N(N−1)/2`.
    pub fn total_ramseys(&self) -> usize {
        let n = self.n_steps;
        self.g * n + self.f * n * (n - 1) / 2
    }

    /// Total sensing time in units of `τ_min`: `G(2^N − 1) + F(2^N − N − 1)`.
    pub fn total_sensing_units(&self) -> usize {
        let p = 1usize << self.n_steps;
        self.g * (p - 1) + self.f * (p - self.n_steps - 1)
    }

    /// `T = τ_min [G(2^N − 1) + F(2^N − N − 1)]`.
    pub fn total_sensing_time(&self) -> f64 {
        self.total_sensing_units() as f64 * self.tau_min
    }

    /// All Ramsey slots in execution order.
    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        (1..=self.n_steps).flat_map(move |n| {
            (1..=self.reps(n)).map(move |m| Slot {
                n,
                m,
                t_units: self.t_units(n),
            })
        })
    }

    /// Same `G`, `F`, `τ_min` with a different number of sensing times.
    pub fn with_steps(&self, n_steps: usize) -> Result<Self> {
        Self::new(n_steps, self.g, self.f, self.tau_min)
    }
}

/// Builds a [`Schedule`], validating its inputs.
pub fn make_schedule(n_steps: usize, g: usize, f: usize, tau_min: f64) -> Result<Schedule> {
    Schedule::new(n_steps, g, f, tau_min)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAU_MIN: f64 = 20e-9;

    #[test]
    fn ramsey_counts() {
        let r = |n, g, f| make_schedule(n, g, f, TAU_MIN).unwrap().total_ramseys();
        assert_eq!(r(10, 5, 0), 50);
        assert_eq!(r(10, 5, 2), 140);
        assert_eq!(r(13, 5, 2), 221);
        assert_eq!(r(13, 5, 7), 611);
    }

    #[test]
    fn two_step_sensing_time() {
        let s = make_schedule(2, 5, 7, TAU_MIN).unwrap();
        // 5·3 + 7·1 = 22 units
        assert_eq!(s.total_sensing_units(), 22);
        assert!((s.total_sensing_time() - 440e-9).abs() < 1e-18);
    }

    #[test]
    fn slots_follow_formulas() {
        for (n_steps, g, f) in [(1, 1, 0), (3, 1, 0), (7, 5, 2), (10, 3, 5)] {
            let s = make_schedule(n_steps, g, f, TAU_MIN).unwrap();
            let slots: Vec<_> = s.slots().collect();
            assert_eq!(slots.len(), s.total_ramseys());
            assert_eq!(
                slots.iter().map(|x| x.t_units).sum::<usize>(),
                s.total_sensing_units()
            );
            assert_eq!(s.t_units(n_steps), 1);
            for n in 1..n_steps {
                assert_eq!(s.t_units(n), 2 * s.t_units(n + 1));
                assert_eq!(slots.iter().filter(|x| x.n == n).count(), g + f * (n - 1));
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(make_schedule(0, 5, 2, TAU_MIN).is_err());
        assert!(make_schedule(3, 0, 2, TAU_MIN).is_err());
        assert!(make_schedule(3, 5, 2, 0.0).is_err());
        assert!(make_schedule(3, 5, 2, -1.0).is_err());
        assert!(make_schedule(MAX_STEPS + 1, 5, 2, TAU_MIN).is_err());
    }
}
