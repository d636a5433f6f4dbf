//! Coefficient trimming.
//!
//! The sequence of sensing times is fixed in advance, only the phases adapt,
//! so the set of harmonics that can still influence a later phase choice or
//! the final estimate is known before the run. Propagating the queried
//! harmonics backwards through the updates (each output `k` reads `k` and
//! `k ± t`) and intersecting with the harmonics that can be nonzero at that
//! point gives, per step, the smallest set worth computing.

use super::fourier::FourierDistribution;
use crate::error::{Error, Result};

/// Per-step harmonic working sets for a fixed sequence of sensing times.
#[derive(Debug, Clone, PartialEq)]
pub struct TrimPlan {
    keep_after: Vec<Vec<usize>>,
    required_before: Vec<Vec<usize>>,
}

#[derive(Clone, Copy)]
struct Support {
    gcd: usize,
    sum: usize,
}

impl Support {
    fn contains(self, k: usize) -> bool {
        if self.gcd == 0 {
            k == 0
        } else {
            k <= self.sum && k % self.gcd == 0
        }
    }

    fn after(self, t: usize) -> Self {
        Self {
            gcd: gcd(self.gcd, t),
            sum: self.sum + t,
        }
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl TrimPlan {
    /// `t_units[ℓ]` is the sensing time of update `ℓ`; `queries[ℓ]` are the
    /// harmonics read just before update `ℓ`; `final_query` those read after
    /// the last update.
    pub fn new(t_units: &[usize], queries: &[Vec<usize>], final_query: &[usize]) -> Self {
        assert_eq!(t_units.len(), queries.len(), "one query list per step");
        let steps = t_units.len();

        // support[ℓ] bounds the nonzero harmonics before update ℓ
        let mut support = Vec::with_capacity(steps + 1);
        support.push(Support { gcd: 0, sum: 0 });
        for &t in t_units {
            let last = *support.last().unwrap();
            support.push(last.after(t));
        }

        let mut keep_after = vec![Vec::new(); steps];
        let mut required_before = vec![Vec::new(); steps];
        let mut need: Vec<usize> = final_query.iter().copied().chain([0]).collect();
        for l in (0..steps).rev() {
            need.retain(|&k| support[l + 1].contains(k));
            need.sort_unstable();
            need.dedup();
            keep_after[l] = need.clone();

            let t = t_units[l];
            let mut before = Vec::with_capacity(need.len() * 3 + queries[l].len() + 1);
            for &k in &need {
                before.extend([k, k + t, k.abs_diff(t)]);
            }
            before.extend(queries[l].iter().copied());
            before.push(0);
            before.retain(|&k| support[l].contains(k));
            before.sort_unstable();
            before.dedup();
            required_before[l] = before.clone();
            need = before;
        }
        Self {
            keep_after,
            required_before,
        }
    }

    pub fn steps(&self) -> usize {
        self.keep_after.len()
    }

    /// Harmonics to compute in update `step`.
    pub fn keep_after(&self, step: usize) -> &[usize] {
        &self.keep_after[step]
    }

    /// Harmonics that must be present before update `step`.
    pub fn required_before(&self, step: usize) -> &[usize] {
        &self.required_before[step]
    }

    /// Largest number of coefficients held at any point of the run.
    pub fn max_working_set(&self) -> usize {
        self.keep_after.iter().map(Vec::len).max().unwrap_or(1)
    }
}

/// Drops every coefficient outside `keep`, failing if `keep` omits harmonic 0
/// or any index in `required`.
pub fn trim_coefficients(
    dist: &FourierDistribution,
    keep: &[usize],
    required: &[usize],
) -> Result<FourierDistribution> {
    for &k in std::iter::once(&0).chain(required) {
        if !keep.contains(&k) {
            return Err(Error::MissingHarmonic(k));
        }
    }
    dist.retain(keep)
}
