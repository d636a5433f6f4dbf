//! Particle-swarm search for outcome-conditioned phase increments.
//!
//! The swarm minimizes a deterministic objective over the torus
//! `[−π, π)^dim` with the constriction-factor velocity update
//!
//! ```text
//! v ← χ (v + c_g r_g (x_g − x) + c_l r_l (x_l − x)),   x ← x + v
//! ```
//!
//! where `x_g` is the swarm's best position, `x_l` the particle's own best and
//! differences are taken the short way round the circle.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimation::{wrap_phase, MeasurementModel};
use crate::experiments::stats::ensemble_holevo_variance;
use crate::protocols::{PhaseIncrementTable, Protocol, ProtocolKind, Schedule};
use crate::seed::cell_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwarmConfig {
    pub particles: usize,
    pub iterations: usize,
    /// Constriction factor `χ`.
    pub chi: f64,
    /// Attraction to the swarm's best position.
    pub c_global: f64,
    /// Attraction to each particle's own best position.
    pub c_local: f64,
    /// Optional symmetric bound on every velocity component.
    pub velocity_clamp: Option<f64>,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            particles: 10,
            iterations: 400,
            chi: 0.729,
            c_global: 2.05,
            c_local: 2.05,
            velocity_clamp: None,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(invalid("particles", "must be >= 2"));
        }
        if self.iterations == 0 {
            return Err(invalid("iterations", "must be >= 1"));
        }
        if !(self.chi > 0.0 && self.chi <= 1.0) {
            return Err(invalid("chi", format!("must lie in (0, 1] (got {})", self.chi)));
        }
        for (field, v) in [
            ("c_global", self.c_global),
            ("c_local", self.c_local),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(field, format!("must be finite and >= 0 (got {v})")));
            }
        }
        if let Some(c) = self.velocity_clamp {
            if !c.is_finite() || c <= 0.0 {
                return Err(invalid("velocity_clamp", format!("must be finite and > 0 (got {c})")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmResult {
    pub best: Vec<f64>,
    pub value: f64,
    /// Swarm-best value after initialization and after every iteration.
    pub history: Vec<f64>,
}

struct Particle {
    x: Vec<f64>,
    v: Vec<f64>,
    best_x: Vec<f64>,
    best_f: f64,
}

fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

/// Minimizes `objective` over `[−π, π)^dim`. Particle 0 starts at the origin;
/// the rest start uniformly with velocities uniform in `[−π/2, π/2)`.
/// Objective evaluations within an iteration run in parallel; all random
/// draws come from `rng` in a fixed order, so results are reproducible.
pub fn pso_minimize<F, R>(objective: F, dim: usize, config: &SwarmConfig, rng: &mut R) -> Result<SwarmResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
    R: Rng + ?Sized,
{
    if dim == 0 {
        return Err(invalid("dim", "must be >= 1"));
    }
    config.validate()?;

    let mut swarm: Vec<Particle> = (0..config.particles)
        .map(|i| {
            let x = if i == 0 {
                vec![0.0; dim]
            } else {
                (0..dim).map(|_| rng.gen_range(-PI..PI)).collect()
            };
            let v = (0..dim).map(|_| rng.gen_range(-PI / 2.0..PI / 2.0)).collect();
            Particle {
                best_x: x.clone(),
                x,
                v,
                best_f: f64::INFINITY,
            }
        })
        .collect();

    let evaluate = |swarm: &mut Vec<Particle>| {
        let values: Vec<f64> = swarm.par_iter().map(|p| sanitize(objective(&p.x))).collect();
        for (p, f) in swarm.iter_mut().zip(values) {
            if f < p.best_f {
                p.best_f = f;
                p.best_x.clone_from(&p.x);
            }
        }
    };
    let global_best = |swarm: &[Particle]| {
        // first strict minimum keeps ties deterministic
        let mut g = 0;
        for (i, p) in swarm.iter().enumerate() {
            if p.best_f < swarm[g].best_f {
                g = i;
            }
        }
        (swarm[g].best_x.clone(), swarm[g].best_f)
    };

    evaluate(&mut swarm);
    let (mut g_x, mut g_f) = global_best(&swarm);
    let mut history = Vec::with_capacity(config.iterations + 1);
    history.push(g_f);

    for _ in 0..config.iterations {
        for p in swarm.iter_mut() {
            for d in 0..dim {
                let r_g: f64 = rng.gen();
                let r_l: f64 = rng.gen();
                let mut v = config.chi
                    * (p.v[d]
                        + config.c_global * r_g * wrap_phase(g_x[d] - p.x[d])
                        + config.c_local * r_l * wrap_phase(p.best_x[d] - p.x[d]));
                if let Some(c) = config.velocity_clamp {
                    v = v.clamp(-c, c);
                }
                p.v[d] = v;
                p.x[d] = wrap_phase(p.x[d] + v);
            }
        }
        evaluate(&mut swarm);
        let (x, f) = global_best(&swarm);
        if f < g_f {
            g_x = x;
            g_f = f;
        }
        history.push(g_f);
    }

    Ok(SwarmResult {
        best: g_x,
        value: g_f,
        history,
    })
}

/// Noisy-but-deterministic training objective: the detuning-averaged ensemble
/// Holevo variance of the optimized-adaptive protocol. Every evaluation uses
/// the same per-(detuning, repetition) random streams, so two tables are
/// always compared on identical outcome noise.
#[derive(Debug, Clone)]
pub struct IncrementObjective {
    schedule: Schedule,
    model: MeasurementModel,
    detunings: Vec<f64>,
    reps: usize,
    seed: u64,
}

impl IncrementObjective {
    pub fn new(
        schedule: Schedule,
        model: MeasurementModel,
        detunings: Vec<f64>,
        reps: usize,
        seed: u64,
    ) -> Result<Self> {
        if detunings.is_empty() {
            return Err(invalid("detunings", "must be non-empty"));
        }
        if reps < 2 {
            // a single estimate has zero spread, whatever the table
            return Err(invalid("reps", "must be >= 2"));
        }
        let fmax = model.max_detuning();
        if let Some(f) = detunings.iter().find(|f| !(f.abs() < fmax)) {
            return Err(invalid("detunings", format!("{f} Hz lies outside (-{fmax}, {fmax})")));
        }
        Ok(Self {
            schedule,
            model,
            detunings,
            reps,
            seed,
        })
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn dimension(&self) -> usize {
        PhaseIncrementTable::dimension(&self.schedule)
    }

    pub fn evaluate(&self, table: &PhaseIncrementTable) -> Result<f64> {
        let protocol = Protocol::new(
            ProtocolKind::OptimizedAdaptive,
            self.schedule,
            self.model,
            Some(table.clone()),
        )?;
        let mut total = 0.0;
        let mut estimates = Vec::with_capacity(self.reps);
        for (i, &f) in self.detunings.iter().enumerate() {
            estimates.clear();
            for r in 0..self.reps {
                let mut rng = cell_rng(self.seed, &[i as u64, r as u64]);
                estimates.push(protocol.run(f, &mut rng)?.estimate_hz);
            }
            total += ensemble_holevo_variance(&estimates, self.model.tau_min())?;
        }
        Ok(total / self.detunings.len() as f64)
    }

    /// Flat-vector form for the swarm; invalid input scores `+∞`.
    pub fn evaluate_flat(&self, x: &[f64]) -> f64 {
        PhaseIncrementTable::from_flat(&self.schedule, x)
            .and_then(|t| self.evaluate(&t))
            .unwrap_or(f64::INFINITY)
    }
}

/// Mean ensemble Holevo variance of the optimized-adaptive protocol with
/// `tables`, over `reps` runs at each detuning.
pub fn increment_objective(
    tables: &PhaseIncrementTable,
    schedule: &Schedule,
    model: &MeasurementModel,
    detunings: &[f64],
    reps: usize,
    seed: u64,
) -> Result<f64> {
    IncrementObjective::new(*schedule, *model, detunings.to_vec(), reps, seed)?.evaluate(tables)
}

/// A trained increment table with its provenance, as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedIncrements {
    pub schedule: Schedule,
    /// [`MeasurementModel::fingerprint`] of the model trained against.
    pub model: String,
    pub u0: Vec<Vec<f64>>,
    pub u1: Vec<Vec<f64>>,
    /// Training objective reached (mean ensemble Holevo variance).
    pub objective: f64,
    /// Objective value of the all-zero table on the same seeds.
    pub baseline: f64,
    pub seed: u64,
    /// Scores on independent seeds, when the table was checked against them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<HoldOut>,
}

/// Objective values of a trained table and of the all-zero table on seeds
/// not used in training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoldOut {
    pub seed: u64,
    pub trained: f64,
    pub zero: f64,
    /// The zero table scored better and replaced the trained one.
    pub kept_zero: bool,
}

impl TrainedIncrements {
    pub fn table(&self) -> PhaseIncrementTable {
        PhaseIncrementTable {
            u0: self.u0.clone(),
            u1: self.u1.clone(),
        }
    }
}

/// Trains increments for one schedule: the swarm searches the `2 R_N`
/// dimensional table space against an [`IncrementObjective`].
pub fn train_increments<R: Rng + ?Sized>(
    objective: &IncrementObjective,
    config: &SwarmConfig,
    rng: &mut R,
) -> Result<(TrainedIncrements, SwarmResult)> {
    let baseline = objective.evaluate(&PhaseIncrementTable::zeros(objective.schedule()))?;
    let result = pso_minimize(|x| objective.evaluate_flat(x), objective.dimension(), config, rng)?;
    let table = PhaseIncrementTable::from_flat(objective.schedule(), &result.best)?;
    Ok((
        TrainedIncrements {
            schedule: objective.schedule,
            model: objective.model.fingerprint(),
            u0: table.u0,
            u1: table.u1,
            objective: result.value,
            baseline,
            seed: objective.seed,
            validation: None,
        },
        result,
    ))
}

/// Scores `trained` and the zero table on `validation`, which should use a
/// different seed from training, and keeps whichever generalizes better.
/// With hundreds of increments and a few dozen training runs the swarm can
/// fit the training noise, so this guards against tables worse than none.
pub fn validate_increments(
    mut trained: TrainedIncrements,
    validation: &IncrementObjective,
) -> Result<TrainedIncrements> {
    if validation.schedule() != &trained.schedule {
        return Err(invalid("validation", "schedule differs from the trained table"));
    }
    let zero = PhaseIncrementTable::zeros(&trained.schedule);
    let zero_score = validation.evaluate(&zero)?;
    let trained_score = validation.evaluate(&trained.table())?;
    let kept_zero = zero_score < trained_score;
    if kept_zero {
        trained.u0 = zero.u0;
        trained.u1 = zero.u1;
        trained.objective = trained.baseline;
    }
    trained.validation = Some(HoldOut {
        seed: validation.seed,
        trained: trained_score,
        zero: zero_score,
        kept_zero,
    });
    Ok(trained)
}

/// A set of trained tables, at most one per `(N, G, F)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncrementLibrary {
    pub tables: Vec<TrainedIncrements>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LibraryFile {
    Library(IncrementLibrary),
    Single(TrainedIncrements),
}

impl IncrementLibrary {
    pub fn insert(&mut self, trained: TrainedIncrements) {
        let key = |t: &TrainedIncrements| (t.schedule.n_steps, t.schedule.g, t.schedule.f);
        self.tables.retain(|t| key(t) != key(&trained));
        self.tables.push(trained);
        self.tables.sort_by_key(key);
    }

    /// Table trained for `schedule`, validated against it.
    pub fn lookup(&self, schedule: &Schedule) -> Result<PhaseIncrementTable> {
        let found = self.tables.iter().find(|t| {
            t.schedule.n_steps == schedule.n_steps
                && t.schedule.g == schedule.g
                && t.schedule.f == schedule.f
        });
        match found {
            Some(t) => {
                let table = t.table();
                table.validate(schedule)?;
                Ok(table)
            }
            None => Err(Error::IncrementTable(format!(
                "no trained table for N={}, G={}, F={}",
                schedule.n_steps, schedule.g, schedule.f
            ))),
        }
    }

    /// Parses either a library or a single trained table.
    pub fn from_json(text: &str) -> Result<Self> {
        match serde_json::from_str::<LibraryFile>(text) {
            Ok(LibraryFile::Library(lib)) => Ok(lib),
            Ok(LibraryFile::Single(t)) => Ok(Self { tables: vec![t] }),
            Err(e) => Err(Error::IncrementTable(format!("cannot parse increment file: {e}"))),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("library serializes")
    }
}
