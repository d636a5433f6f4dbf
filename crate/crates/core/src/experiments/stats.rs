use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::estimation::holevo_from_sharpness;
use crate::seed::cell_rng;

/// Holevo variance of an ensemble of frequency estimates, from the mean of
/// `e^{i2π f τ_min}`. Infinite when the resultant vanishes.
pub fn ensemble_holevo_variance(estimates: &[f64], tau_min: f64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(invalid("estimates", "must be non-empty"));
    }
    Ok(holevo_of_phasors(estimates.iter().map(|&f| phasor(f, tau_min)), estimates.len()))
}

pub(crate) fn phasor(f: f64, tau_min: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * f * tau_min)
}

fn holevo_of_phasors(it: impl Iterator<Item = Complex64>, count: usize) -> f64 {
    let sum: Complex64 = it.sum();
    // rounding can push the resultant of identical phasors a hair above 1
    holevo_from_sharpness((sum.norm() / count as f64).min(1.0))
}

fn check_bootstrap(resamples: usize, confidence: f64) -> Result<()> {
    if resamples < 100 {
        return Err(invalid("resamples", format!("must be >= 100 (got {resamples})")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(invalid("confidence", format!("must lie in (0, 1) (got {confidence})")));
    }
    Ok(())
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi || sorted[lo] == sorted[hi] {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

fn percentile_interval(mut stats: Vec<f64>, confidence: f64) -> (f64, f64) {
    stats.sort_by(f64::total_cmp);
    let alpha = 0.5 * (1.0 - confidence);
    (quantile(&stats, alpha), quantile(&stats, 1.0 - alpha))
}

/// Percentile bootstrap interval of `statistic` over `samples`.
pub fn bootstrap_ci<S>(
    samples: &[f64],
    statistic: S,
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<(f64, f64)>
where
    S: Fn(&[f64]) -> f64,
{
    if samples.is_empty() {
        return Err(invalid("samples", "must be non-empty"));
    }
    check_bootstrap(resamples, confidence)?;
    let mut rng = cell_rng(seed, &[0xb007]);
    let n = samples.len();
    let mut buf = vec![0.0; n];
    let stats = (0..resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = samples[rng.gen_range(0..n)];
            }
            statistic(&buf)
        })
        .collect();
    Ok(percentile_interval(stats, confidence))
}

/// Bootstrap interval of the detuning-averaged Holevo variance. Estimates are
/// resampled within each detuning group, so every resample keeps the grid.
pub fn bootstrap_mean_holevo_ci(
    groups: &[Vec<f64>],
    tau_min: f64,
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    if groups.is_empty() || groups.iter().any(Vec::is_empty) {
        return Err(invalid("estimates", "every detuning needs at least one estimate"));
    }
    check_bootstrap(resamples, confidence)?;
    let phasors: Vec<Vec<Complex64>> = groups
        .iter()
        .map(|g| g.iter().map(|&f| phasor(f, tau_min)).collect())
        .collect();
    let mut rng = cell_rng(seed, &[0xb008]);
    let stats = (0..resamples)
        .map(|_| {
            let total: f64 = phasors
                .iter()
                .map(|g| {
                    let n = g.len();
                    holevo_of_phasors((0..n).map(|_| g[rng.gen_range(0..n)]), n)
                })
                .sum();
            total / phasors.len() as f64
        })
        .collect();
    Ok(percentile_interval(stats, confidence))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Least-squares slope of `y` against `x`; `None` with fewer than two
/// distinct abscissae.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}
