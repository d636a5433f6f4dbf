//! Readout-phase choice for the next Ramsey experiment.
//!
//! With sensing time `t · τ_min` the next measurement resolves the scaled
//! phase `tφ`. Its expected post-measurement sharpness is
//!
//! ```text
//! S(ϑ) = Σ_μ P(μ) |⟨e^{itφ}⟩_μ| = 2π Σ_μ |a_μ p_t + h (e^{i(μπ+ϑ)} p_0 + e^{−i(μπ+ϑ)} p_{2t})|
//! ```
//!
//! When `p_t = 0` (every earlier sensing time was a multiple of `2t`) this is
//! maximized exactly by `ϑ = ½ arg p_{2t}`, the closed-form controlled phase.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use super::fourier::FourierDistribution;
use super::model::{wrap_phase, MeasurementModel, Outcome};
use super::holevo_from_sharpness;

/// A chosen readout phase. `degenerate` is set when every phase is equally good.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseChoice {
    pub theta: f64,
    pub degenerate: bool,
}

/// Harmonic whose argument sets the controlled phase before a Ramsey at
/// `next_t_units`: twice the upcoming sensing time.
pub fn reference_harmonic(next_t_units: usize) -> usize {
    2 * next_t_units
}

/// Closed-form controlled phase `½ arg p_{2t}`.
pub fn controlled_phase(dist: &FourierDistribution, next_t_units: usize) -> PhaseChoice {
    let p = dist.coefficient(reference_harmonic(next_t_units) as i64);
    if p.norm() == 0.0 {
        return PhaseChoice {
            theta: 0.0,
            degenerate: true,
        };
    }
    PhaseChoice {
        theta: wrap_phase(0.5 * p.arg()),
        degenerate: false,
    }
}

/// Expected sharpness `Σ_μ P(μ)|⟨e^{itφ}⟩_μ|` of the harmonic resolved by a
/// Ramsey at `t_units` and readout phase `theta`.
pub fn expected_sharpness(
    dist: &FourierDistribution,
    t_units: usize,
    theta: f64,
    model: &MeasurementModel,
) -> f64 {
    let h = 0.5 * model.visibility(t_units);
    [Outcome::Zero, Outcome::One]
        .into_iter()
        .map(|mu| {
            let rot = Complex64::from_polar(1.0, mu.phase_shift() + theta);
            TAU * dist.raw_updated(t_units, model.offset(mu), h, rot, t_units).norm()
        })
        .sum()
}

/// Holevo variance corresponding to the expected sharpness, `S⁻² − 1`.
pub fn expected_holevo_variance(
    dist: &FourierDistribution,
    t_units: usize,
    theta: f64,
    model: &MeasurementModel,
) -> f64 {
    holevo_from_sharpness(expected_sharpness(dist, t_units, theta, model))
}

const SEARCH_POINTS: usize = 4096;
const FAST_SEARCH_POINTS: usize = 128;

/// Numerical optimum of [`expected_sharpness`] over `ϑ ∈ [−π, π)`: a uniform
/// scan followed by golden-section refinement around the best cell.
pub fn brute_force_phase(
    dist: &FourierDistribution,
    next_t_units: usize,
    model: &MeasurementModel,
) -> PhaseChoice {
    maximize(|theta| expected_sharpness(dist, next_t_units, theta, model), SEARCH_POINTS)
}

/// Same optimum as [`brute_force_phase`] on a coarser scan, cheap enough to
/// run before every Ramsey. The objective only involves `p_0`, `p_t` and
/// `p_{2t}` and has at most a few smooth maxima, so 128 cells suffice.
pub fn optimal_phase(
    dist: &FourierDistribution,
    next_t_units: usize,
    model: &MeasurementModel,
) -> PhaseChoice {
    maximize(|theta| expected_sharpness(dist, next_t_units, theta, model), FAST_SEARCH_POINTS)
}

fn maximize(objective: impl Fn(f64) -> f64, points: usize) -> PhaseChoice {
    let step = TAU / points as f64;

    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut worst = f64::INFINITY;
    for i in 0..points {
        let theta = -PI + i as f64 * step;
        let value = objective(theta);
        if value > best.0 {
            best = (value, theta);
        }
        worst = worst.min(value);
    }
    if best.0 - worst <= 1e-14 * best.0.abs().max(1.0) {
        return PhaseChoice {
            theta: 0.0,
            degenerate: true,
        };
    }

    let (mut lo, mut hi) = (best.1 - step, best.1 + step);
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - golden * (hi - lo);
    let mut x2 = lo + golden * (hi - lo);
    let (mut f1, mut f2) = (objective(x1), objective(x2));
    for _ in 0..80 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = objective(x2);
        }
    }
    let refined = 0.5 * (lo + hi);
    let theta = if objective(refined) >= best.0 {
        refined
    } else {
        best.1
    };
    PhaseChoice {
        theta: wrap_phase(theta),
        degenerate: false,
    }
}

/// Distance between two phases modulo `π` (outcome relabelling symmetry).
pub fn distance_mod_pi(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}
