use std::io::Write;

use serde::Serialize;

use super::roomtemp::RtRow;
use super::scaling::ScalingPoint;
use super::sweep::EnsembleStats;
use crate::error::{Error, Result};
use crate::protocols::{ProtocolKind, Schedule};

/// Column order of scaling result files.
pub const SCALING_COLUMNS: [&str; 12] = [
    "kind",
    "N",
    "G",
    "F",
    "T_sense_s",
    "T_wall_s",
    "V_H",
    "V_H_ci_lo",
    "V_H_ci_hi",
    "eta2",
    "eta_field_nT_sqrtHz",
    "seed",
];

#[derive(Serialize)]
struct ScalingRow<'a> {
    kind: &'a str,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "G")]
    g: usize,
    #[serde(rename = "F")]
    f: usize,
    #[serde(rename = "T_sense_s")]
    t_sense: f64,
    #[serde(rename = "T_wall_s")]
    t_wall: f64,
    #[serde(rename = "V_H")]
    v_h: f64,
    #[serde(rename = "V_H_ci_lo")]
    v_h_lo: f64,
    #[serde(rename = "V_H_ci_hi")]
    v_h_hi: f64,
    eta2: f64,
    #[serde(rename = "eta_field_nT_sqrtHz")]
    eta_field: f64,
    seed: u64,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(format!("writing CSV: {e}"))
}

fn sort_key(p: &ScalingPoint) -> (ProtocolKind, usize, usize, usize) {
    (p.kind, p.n_steps, p.g, p.f)
}

/// Writes scaling points sorted by `(kind, N, G, F)`.
pub fn write_scaling_csv<W: Write>(out: W, points: &[ScalingPoint]) -> Result<()> {
    let mut sorted: Vec<&ScalingPoint> = points.iter().collect();
    sorted.sort_by_key(|p| sort_key(p));
    let mut w = csv::Writer::from_writer(out);
    for p in sorted {
        w.serialize(ScalingRow {
            kind: p.kind.name(),
            n: p.n_steps,
            g: p.g,
            f: p.f,
            t_sense: p.sensing_time,
            t_wall: p.wall_time,
            v_h: p.holevo_variance,
            v_h_lo: p.holevo_ci.0,
            v_h_hi: p.holevo_ci.1,
            eta2: p.eta_squared,
            eta_field: p.eta_field,
            seed: p.seed,
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

#[derive(Serialize)]
struct SweepRow<'a> {
    kind: &'a str,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "G")]
    g: usize,
    #[serde(rename = "F")]
    f: usize,
    detuning_hz: f64,
    reps: usize,
    #[serde(rename = "V_H")]
    v_h: f64,
    #[serde(rename = "V_H_ci_lo")]
    v_h_lo: f64,
    #[serde(rename = "V_H_ci_hi")]
    v_h_hi: f64,
    seed: u64,
}

/// Writes a detuning sweep sorted by detuning.
pub fn write_sweep_csv<W: Write>(
    out: W,
    kind: ProtocolKind,
    schedule: &Schedule,
    stats: &[EnsembleStats],
    seed: u64,
) -> Result<()> {
    let mut sorted: Vec<&EnsembleStats> = stats.iter().collect();
    sorted.sort_by(|a, b| a.detuning.total_cmp(&b.detuning));
    let mut w = csv::Writer::from_writer(out);
    for s in sorted {
        w.serialize(SweepRow {
            kind: kind.name(),
            n: schedule.n_steps,
            g: schedule.g,
            f: schedule.f,
            detuning_hz: s.detuning,
            reps: s.estimates.len(),
            v_h: s.holevo_variance,
            v_h_lo: s.bootstrap_ci.0,
            v_h_hi: s.bootstrap_ci.1,
            seed,
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

#[derive(Serialize)]
struct RtCsvRow<'a> {
    repetitions: u32,
    contrast: f64,
    #[serde(rename = "F0")]
    f0: f64,
    kind: &'a str,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "G")]
    g: usize,
    #[serde(rename = "F")]
    f: usize,
    #[serde(rename = "T_sense_s")]
    t_sense: f64,
    #[serde(rename = "T_wall_s")]
    t_wall: f64,
    #[serde(rename = "V_H")]
    v_h: f64,
    #[serde(rename = "eta_field_nT_sqrtHz")]
    eta_field: f64,
    eta_ci_lo: f64,
    eta_ci_hi: f64,
    seed: u64,
}

/// Writes room-temperature comparison rows sorted by `(R, kind, F)`.
pub fn write_rt_csv<W: Write>(out: W, rows: &[RtRow]) -> Result<()> {
    let mut sorted: Vec<&RtRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.repetitions, r.best.kind, r.best.f));
    let mut w = csv::Writer::from_writer(out);
    for r in sorted {
        let p = &r.best;
        w.serialize(RtCsvRow {
            repetitions: r.repetitions,
            contrast: r.contrast,
            f0: r.f0,
            kind: p.kind.name(),
            n: p.n_steps,
            g: p.g,
            f: p.f,
            t_sense: p.sensing_time,
            t_wall: p.wall_time,
            v_h: p.holevo_variance,
            eta_field: p.eta_field,
            eta_ci_lo: p.eta_field_ci.0,
            eta_ci_hi: p.eta_field_ci.1,
            seed: p.seed,
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// Record written next to every output: what ran, with which settings.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value, outputs: Vec<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config,
            outputs,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}
