use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{bootstrap_ci, ensemble_holevo_variance};
use crate::error::{invalid, Result};
use crate::protocols::Protocol;
use crate::seed::{cell_rng, derive_seed};

/// Bootstrap settings shared by the experiment drivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSettings {
    pub resamples: usize,
    pub confidence: f64,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        Self {
            resamples: 200,
            confidence: 0.95,
        }
    }
}

/// Ensemble of estimates at one detuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub detuning: f64,
    pub estimates: Vec<f64>,
    pub holevo_variance: f64,
    pub bootstrap_ci: (f64, f64),
}

/// Offset of every grid point within its cell, as a fraction of the spacing.
/// Irrational so that no point lands on a phase `kπ/2^j`, where sequences of
/// power-of-two sensing times resolve the detuning exactly.
pub const GRID_OFFSET: f64 = 0.618_033_988_749_894_8;

/// `count` equally spaced detunings spanning the unambiguous range
/// `[−1/(2τ_min), 1/(2τ_min))`, each shifted [`GRID_OFFSET`] of a spacing
/// from its cell's lower edge.
pub fn detuning_grid(count: usize, tau_min: f64) -> Vec<f64> {
    let fmax = 0.5 / tau_min;
    let width = 2.0 * fmax / count as f64;
    (0..count)
        .map(|j| -fmax + (j as f64 + GRID_OFFSET) * width)
        .collect()
}

pub(crate) fn check_detunings(protocol: &Protocol, detunings: &[f64], reps: usize) -> Result<()> {
    if detunings.is_empty() {
        return Err(invalid("detunings", "must be non-empty"));
    }
    if reps == 0 {
        return Err(invalid("reps", "must be >= 1"));
    }
    let fmax = protocol.model().max_detuning();
    if let Some(f) = detunings.iter().find(|f| !(f.abs() < fmax)) {
        return Err(invalid(
            "detunings",
            format!("{f} Hz lies outside the principal range (-{fmax}, {fmax})"),
        ));
    }
    Ok(())
}

/// Runs `reps` estimations per detuning in parallel. The cell `(i, r)` draws
/// from a generator seeded by `(seed, stream..., i, r)`, so the result does
/// not depend on the worker count and is shared across protocol kinds.
pub(crate) fn run_ensembles(
    protocol: &Protocol,
    detunings: &[f64],
    reps: usize,
    seed: u64,
    stream: &[u64],
) -> Result<Vec<Vec<f64>>> {
    check_detunings(protocol, detunings, reps)?;
    let flat: Vec<f64> = (0..detunings.len() * reps)
        .into_par_iter()
        .map(|cell| {
            let (i, r) = (cell / reps, cell % reps);
            let coords: Vec<u64> = stream.iter().copied().chain([i as u64, r as u64]).collect();
            let mut rng = cell_rng(seed, &coords);
            protocol.run(detunings[i], &mut rng).map(|t| t.estimate_hz)
        })
        .collect::<Result<_>>()?;
    Ok(flat.chunks(reps).map(<[f64]>::to_vec).collect())
}

/// Ensemble Holevo variance, with a bootstrap interval, at every detuning.
pub fn detuning_sweep(
    protocol: &Protocol,
    detunings: &[f64],
    reps: usize,
    seed: u64,
    bootstrap: &BootstrapSettings,
) -> Result<Vec<EnsembleStats>> {
    let tau_min = protocol.model().tau_min();
    let n = protocol.schedule().n_steps as u64;
    let groups = run_ensembles(protocol, detunings, reps, seed, &[n])?;
    detunings
        .iter()
        .zip(groups)
        .enumerate()
        .map(|(i, (&detuning, estimates))| {
            let holevo_variance = ensemble_holevo_variance(&estimates, tau_min)?;
            let stat = |xs: &[f64]| ensemble_holevo_variance(xs, tau_min).unwrap_or(f64::INFINITY);
            let ci = bootstrap_ci(
                &estimates,
                stat,
                bootstrap.resamples,
                bootstrap.confidence,
                derive_seed(seed, &[n, i as u64, 0xc1]),
            )?;
            Ok(EnsembleStats {
                detuning,
                estimates,
                holevo_variance,
                bootstrap_ci: ci,
            })
        })
        .collect()
}
