use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use ramsey_adapt::experiments::{
    detuning_grid, detuning_sweep, min_eta, rt_compare, scaling_slope, sensitivity_scaling,
    write_rt_csv, write_scaling_csv, write_sweep_csv, IncrementSource, Manifest, RtCompareConfig,
    ScalingConfig, TimeMode,
};
use ramsey_adapt::seed::{cell_rng, derive_seed};
use ramsey_adapt::swarm::{
    train_increments, validate_increments, IncrementLibrary, IncrementObjective, SwarmConfig,
};
use ramsey_adapt::{Protocol, ProtocolKind, Schedule, TimingModel};

use crate::config::{Settings, TimingChoice};

const DEFAULT_N: usize = 10;
const DEFAULT_F: usize = 2;
const DEFAULT_N_RANGE: (usize, usize) = (2, 10);

/// Files produced by one subcommand, written together with their manifest.
struct Artifacts {
    command: &'static str,
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    fn new(command: &'static str) -> Self {
        Self {
            command,
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    /// Writes every file and `<stem>.manifest.json` via temporary files and
    /// renames; on failure nothing new is left behind.
    fn commit(mut self, settings: &Settings) -> Result<Vec<PathBuf>> {
        let dir = &settings.out;
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        let names: Vec<String> = self.files.iter().map(|(n, _)| n.clone()).collect();
        let config = serde_json::to_value(settings).expect("settings serialize");
        let manifest = Manifest::new(self.command, settings.seed, config, names);
        let stem = Path::new(&self.files[0].0)
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or(self.command)
            .to_string();
        self.files.push((format!("{stem}.manifest.json"), manifest.to_json().into_bytes()));

        let mut temps = Vec::new();
        let result = (|| -> Result<Vec<PathBuf>> {
            for (name, bytes) in &self.files {
                let tmp = dir.join(format!(".{name}.tmp"));
                temps.push(tmp.clone());
                fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
            }
            let mut done = Vec::new();
            for ((name, _), tmp) in self.files.iter().zip(&temps) {
                let path = dir.join(name);
                fs::rename(tmp, &path).with_context(|| format!("writing {}", path.display()))?;
                done.push(path);
            }
            Ok(done)
        })();
        if result.is_err() {
            for tmp in &temps {
                let _ = fs::remove_file(tmp);
            }
        }
        result
    }
}

fn summary(command: &str, outputs: &[PathBuf], extra: Value) -> Value {
    let mut v = json!({
        "command": command,
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    if let (Value::Object(base), Value::Object(more)) = (&mut v, extra) {
        base.extend(more);
    }
    v
}

fn kinds_or(settings: &Settings, default: &[ProtocolKind]) -> Vec<ProtocolKind> {
    if settings.protocols.is_empty() {
        default.to_vec()
    } else {
        settings.protocols.clone()
    }
}

/// Default set for multi-protocol studies; optimized-adaptive joins when
/// increments were supplied.
fn study_kinds(settings: &Settings) -> Vec<ProtocolKind> {
    let mut kinds = vec![ProtocolKind::LimitedAdaptive, ProtocolKind::NonAdaptive];
    if settings.increments.is_some() {
        kinds.push(ProtocolKind::OptimizedAdaptive);
    }
    kinds_or(settings, &kinds)
}

fn single_kind(settings: &Settings) -> Result<ProtocolKind> {
    match kinds_or(settings, &[ProtocolKind::LimitedAdaptive])[..] {
        [kind] => Ok(kind),
        _ => bail!("invalid parameter `protocol`: this subcommand takes exactly one protocol"),
    }
}

fn load_increments(settings: &Settings) -> Result<Option<IncrementSource>> {
    match settings.increments.as_deref() {
        None => Ok(None),
        Some("zero") => Ok(Some(IncrementSource::Zero)),
        Some(path) => Ok(Some(IncrementSource::Library(
            IncrementLibrary::load(Path::new(path)).context("invalid parameter `increments`")?,
        ))),
    }
}

/// Increment source for `kinds` on `schedules`, checked for every schedule
/// the optimized-adaptive protocol will run on.
fn increments_for(settings: &Settings, kinds: &[ProtocolKind], schedules: &[Schedule]) -> Result<IncrementSource> {
    let source = load_increments(settings)?;
    if !kinds.contains(&ProtocolKind::OptimizedAdaptive) {
        return Ok(source.unwrap_or_default());
    }
    let Some(source) = source else {
        bail!(
            "optimized-adaptive needs phase increments: train them with `ramsey-adapt pso-train` \
             and pass --increments <file>, or pass --increments zero for all-zero tables"
        );
    };
    for s in schedules {
        source.table_for(s).context("invalid parameter `increments`")?;
    }
    Ok(source)
}

fn schedule(settings: &Settings) -> Result<Schedule> {
    Ok(Schedule::new(
        settings.n.unwrap_or(DEFAULT_N),
        settings.g,
        settings.f.unwrap_or(DEFAULT_F),
        settings.tau_min(),
    )?)
}

fn n_bounds(settings: &Settings) -> (usize, usize) {
    match (settings.n, settings.n_range) {
        (_, Some(range)) => range,
        (Some(n), None) => (n, n),
        (None, None) => DEFAULT_N_RANGE,
    }
}

fn protocol(settings: &Settings, kind: ProtocolKind, schedule: Schedule, source: &IncrementSource) -> Result<Protocol> {
    let increments = match kind {
        ProtocolKind::OptimizedAdaptive => Some(source.table_for(&schedule)?),
        _ => None,
    };
    Ok(Protocol::new(kind, schedule, settings.model, increments)?
        .with_phase_quantization(settings.quantize_phase)
        .with_phase_rule(settings.phase_rule))
}

fn timing(settings: &Settings) -> TimingModel {
    match settings.timing {
        TimingChoice::None => TimingModel::sensing_only(),
        TimingChoice::Wall => settings.timing_model,
    }
}

pub fn run(settings: &Settings) -> Result<Value> {
    let kind = single_kind(settings)?;
    let schedule = schedule(settings)?;
    let source = increments_for(settings, &[kind], &[schedule])?;
    let protocol = protocol(settings, kind, schedule, &source)?;

    eprintln!("run: {} N={} G={} F={}", kind.name(), schedule.n_steps, schedule.g, schedule.f);
    let trace = protocol.run(settings.f_true_hz, &mut cell_rng(settings.seed, &[]))?;
    let mut artifacts = Artifacts::new("run");
    let text = serde_json::to_string_pretty(&trace.to_json(&timing(settings)))?;
    artifacts.add("trace.json", text.into_bytes());
    let outputs = artifacts.commit(settings)?;
    Ok(summary(
        "run",
        &outputs,
        json!({
            "protocol": kind.name(),
            "steps": trace.steps.len(),
            "f_true_hz": settings.f_true_hz,
            "estimate_hz": trace.estimate_hz,
        }),
    ))
}

pub fn sweep(settings: &Settings) -> Result<Value> {
    let kinds = kinds_or(settings, &[ProtocolKind::LimitedAdaptive]);
    let schedule = schedule(settings)?;
    let source = increments_for(settings, &kinds, &[schedule])?;
    let protocols = kinds
        .iter()
        .map(|&k| protocol(settings, k, schedule, &source))
        .collect::<Result<Vec<_>>>()?;
    let detunings = settings.detuning_values();

    let mut csv = Vec::new();
    let mut rows = 0;
    for p in &protocols {
        eprintln!(
            "sweep: {} N={} over {} detunings x {} reps",
            p.kind().name(),
            schedule.n_steps,
            detunings.len(),
            settings.reps
        );
        let stats = detuning_sweep(p, &detunings, settings.reps, settings.seed, &settings.bootstrap)?;
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, p.kind(), &schedule, &stats, settings.seed)?;
        let body = if csv.is_empty() {
            &buf[..]
        } else {
            let header_end = buf.iter().position(|&b| b == b'\n').map_or(buf.len(), |i| i + 1);
            &buf[header_end..]
        };
        csv.extend_from_slice(body);
        rows += stats.len();
    }

    let mut artifacts = Artifacts::new("sweep");
    artifacts.add("sweep.csv", csv);
    let outputs = artifacts.commit(settings)?;
    Ok(summary("sweep", &outputs, json!({ "rows": rows })))
}

pub fn scaling(settings: &Settings) -> Result<Value> {
    let kinds = study_kinds(settings);
    let (n_min, n_max) = n_bounds(settings);
    let mut config = ScalingConfig::new(kinds.clone(), n_min, n_max, settings.g, settings.f.unwrap_or(DEFAULT_F));
    config.model = settings.model;
    config.mode = match settings.timing {
        TimingChoice::None => TimeMode::Sensing,
        TimingChoice::Wall => TimeMode::Wall,
    };
    config.timing = settings.timing_model;
    config.detunings = settings.detuning_values();
    config.reps = settings.reps;
    config.seed = settings.seed;
    config.quantize_phase = settings.quantize_phase;
    config.phase_rule = settings.phase_rule;
    config.bootstrap = settings.bootstrap;

    let schedules = config.schedules()?;
    config.increments = increments_for(settings, &kinds, &schedules)?;
    for &kind in &kinds {
        for s in &schedules {
            config.protocol(kind, *s)?;
        }
    }

    eprintln!(
        "scaling: {} protocol(s), N={n_min}..={n_max}, {} detunings x {} reps",
        kinds.len(),
        config.detunings.len(),
        config.reps
    );
    let points = sensitivity_scaling(&config)?;
    let mut csv = Vec::new();
    write_scaling_csv(&mut csv, &points)?;
    let mut artifacts = Artifacts::new("scaling");
    artifacts.add("scaling.csv", csv);
    let outputs = artifacts.commit(settings)?;

    let per_kind: Vec<Value> = kinds
        .iter()
        .map(|&k| {
            let pts: Vec<_> = points.iter().filter(|p| p.kind == k).cloned().collect();
            let best = min_eta(&pts);
            json!({
                "protocol": k.name(),
                "slope": scaling_slope(&pts, settings.model.t2_star()),
                "min_eta_nT_sqrtHz": best.map(|p| p.eta_field),
                "min_eta_N": best.map(|p| p.n_steps),
            })
        })
        .collect();
    Ok(summary("scaling", &outputs, json!({ "rows": points.len(), "protocols": per_kind })))
}

pub fn pso_train(settings: &Settings) -> Result<Value> {
    let f = settings.f.unwrap_or(DEFAULT_F);
    let (n_min, n_max) = n_bounds(settings);
    let schedules = (n_min..=n_max)
        .map(|n| Schedule::new(n, settings.g, f, settings.tau_min()))
        .collect::<Result<Vec<_>, _>>()?;
    let swarm = SwarmConfig {
        particles: settings.pso.particles,
        iterations: settings.pso.iterations,
        ..SwarmConfig::default()
    };
    swarm.validate()?;
    let mut library = match load_increments(settings)? {
        Some(IncrementSource::Library(lib)) => lib,
        _ => IncrementLibrary::default(),
    };
    let train_set = detuning_grid(settings.pso.train_detunings, settings.tau_min());
    let check_set = detuning_grid(settings.pso.validation_detunings, settings.tau_min());

    let mut report = Vec::new();
    for s in schedules {
        let coords = [s.n_steps as u64, s.g as u64, s.f as u64];
        let seed = |tag: u64| derive_seed(settings.seed, &[coords[0], coords[1], coords[2], tag]);
        let objective = IncrementObjective::new(
            s,
            settings.model,
            train_set.clone(),
            settings.pso.train_reps,
            seed(0),
        )?;
        eprintln!(
            "pso-train: N={} G={} F={}, {} increments, {} particles x {} iterations",
            s.n_steps,
            s.g,
            s.f,
            objective.dimension(),
            swarm.particles,
            swarm.iterations
        );
        let (mut trained, _) = train_increments(&objective, &swarm, &mut cell_rng(seed(1), &[]))?;
        if settings.pso.validate {
            let check = IncrementObjective::new(
                s,
                settings.model,
                check_set.clone(),
                settings.pso.validation_reps,
                seed(2),
            )?;
            trained = validate_increments(trained, &check)?;
        }
        report.push(json!({
            "N": s.n_steps,
            "objective": trained.objective,
            "baseline": trained.baseline,
            "kept_zero": trained.validation.map(|v| v.kept_zero),
        }));
        library.insert(trained);
    }

    let mut artifacts = Artifacts::new("pso-train");
    artifacts.add("increments.json", library.to_json().into_bytes());
    let outputs = artifacts.commit(settings)?;
    Ok(summary("pso-train", &outputs, json!({ "tables": report })))
}

pub fn rt_compare_cmd(settings: &Settings) -> Result<Value> {
    let kinds = study_kinds(settings);
    let (n_min, n_max) = n_bounds(settings);
    let fs = settings.f.map_or_else(|| vec![2, 4], |f| vec![f]);
    let schedules = fs
        .iter()
        .flat_map(|&f| (n_min..=n_max).map(move |n| (n, f)))
        .map(|(n, f)| Schedule::new(n, settings.g, f, settings.tau_min()))
        .collect::<Result<Vec<_>, _>>()?;
    let config = RtCompareConfig {
        repetitions: settings.rt.repetitions.clone(),
        fs,
        g: settings.g,
        n_min,
        n_max,
        increments: increments_for(settings, &kinds, &schedules)?,
        kinds,
        t2_star: settings.model.t2_star(),
        tau_min: settings.tau_min(),
        shot_duration: settings.rt.shot_us * 1e-6,
        detunings: settings.detuning_values(),
        reps: settings.reps,
        seed: settings.seed,
        bootstrap: settings.bootstrap,
    };

    eprintln!(
        "rt-compare: R in {:?}, F in {:?}, N={n_min}..={n_max}",
        config.repetitions, config.fs
    );
    let rows = rt_compare(&config)?;
    let mut csv = Vec::new();
    write_rt_csv(&mut csv, &rows)?;
    let mut artifacts = Artifacts::new("rt-compare");
    artifacts.add("rt_compare.csv", csv);
    let outputs = artifacts.commit(settings)?;
    Ok(summary("rt-compare", &outputs, json!({ "rows": rows.len() })))
}
