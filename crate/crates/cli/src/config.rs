use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use ramsey_adapt::experiments::BootstrapSettings;
use ramsey_adapt::protocols::PhaseRule;
use ramsey_adapt::{MeasurementModel, ProtocolKind, TimingModel};

pub const SEED_ENV: &str = "RAMSEY_ADAPT_SEED";

/// Which duration enters `η² = V_H T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimingChoice {
    /// Free-evolution time only.
    #[default]
    None,
    /// Sensing plus initialization, readout and non-overlapped computation.
    Wall,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum NumberOrText {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum DetuningsValue {
    Count(usize),
    List(Vec<f64>),
    Text(String),
}

/// Keys accepted in a JSON configuration file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    protocol: Option<OneOrMany>,
    n: Option<usize>,
    n_range: Option<String>,
    g: Option<usize>,
    f: Option<usize>,
    tau_min_ns: Option<f64>,
    f0: Option<f64>,
    f1: Option<f64>,
    t2star_us: Option<NumberOrText>,
    timing: Option<TimingChoice>,
    t_init_us: Option<f64>,
    t_read_us: Option<f64>,
    t_compute_start_us: Option<f64>,
    t_compute_end_us: Option<f64>,
    compute_overlapped: Option<bool>,
    detunings: Option<DetuningsValue>,
    f_true_hz: Option<f64>,
    reps: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    quantize_phase: Option<bool>,
    phase_rule: Option<PhaseRule>,
    increments: Option<String>,
    workers: Option<usize>,
    bootstrap_resamples: Option<usize>,
    confidence: Option<f64>,
    particles: Option<usize>,
    iterations: Option<usize>,
    train_detunings: Option<usize>,
    train_reps: Option<usize>,
    validation_detunings: Option<usize>,
    validation_reps: Option<usize>,
    validate: Option<bool>,
    repetitions: Option<Vec<u32>>,
    shot_us: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        serde_json::from_str(text).map_err(|e| anyhow!("invalid config: {e}"))
    }
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON configuration file
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Protocol kind(s): limited-adaptive, non-adaptive, optimized-adaptive
    #[arg(long, value_delimiter = ',', value_name = "KIND")]
    pub protocol: Vec<String>,
    /// Number of sensing times N
    #[arg(long)]
    pub n: Option<usize>,
    /// Inclusive range of N, e.g. 2..13
    #[arg(long, value_name = "LO..HI")]
    pub n_range: Option<String>,
    /// Repetitions of the longest sensing time
    #[arg(long)]
    pub g: Option<usize>,
    /// Extra repetitions per shorter sensing time
    #[arg(long)]
    pub f: Option<usize>,
    /// Shortest sensing time in ns
    #[arg(long)]
    pub tau_min_ns: Option<f64>,
    /// Readout fidelity of outcome 0
    #[arg(long)]
    pub f0: Option<f64>,
    /// Readout fidelity of outcome 1
    #[arg(long)]
    pub f1: Option<f64>,
    /// Dephasing time in µs ("inf" for none)
    #[arg(long)]
    pub t2star_us: Option<f64>,
    #[arg(long, value_enum)]
    pub timing: Option<TimingChoice>,
    /// Grid size, or comma-separated detunings in Hz
    #[arg(long, value_name = "COUNT|HZ,HZ,..")]
    pub detunings: Option<String>,
    /// True detuning of a single run, in Hz
    #[arg(long, value_name = "HZ")]
    pub f_true_hz: Option<f64>,
    /// Runs per detuning
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed (falls back to $RAMSEY_ADAPT_SEED, then 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Round readout phases to 256 levels
    #[arg(long)]
    pub quantize_phase: bool,
    /// Controlled-phase rule: closed-form or optimal
    #[arg(long, value_name = "RULE")]
    pub phase_rule: Option<String>,
    /// Trained increment file from pso-train, or "zero"
    #[arg(long, value_name = "PATH|zero")]
    pub increments: Option<String>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Swarm training flags.
#[derive(Debug, Clone, Default, Args)]
pub struct PsoArgs {
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Detunings in the training objective
    #[arg(long)]
    pub train_detunings: Option<usize>,
    /// Runs per training detuning
    #[arg(long)]
    pub train_reps: Option<usize>,
    #[arg(long)]
    pub validation_detunings: Option<usize>,
    #[arg(long)]
    pub validation_reps: Option<usize>,
    /// Keep the trained table even if the zero table validates better
    #[arg(long)]
    pub no_validate: bool,
}

/// Room-temperature comparison flags.
#[derive(Debug, Clone, Default, Args)]
pub struct RtArgs {
    /// Readout repetitions R, comma separated
    #[arg(long, value_delimiter = ',')]
    pub repetitions: Vec<u32>,
    /// Duration of one readout shot in µs
    #[arg(long)]
    pub shot_us: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Detunings {
    Grid(usize),
    List(Vec<f64>),
}

impl FromStr for Detunings {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if !s.contains(',') {
            if let Ok(count) = s.parse::<usize>() {
                return Ok(Detunings::Grid(count));
            }
        }
        s.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| anyhow!("invalid parameter `detunings`: `{v}` is not a count or a frequency in Hz"))
            })
            .collect::<Result<_>>()
            .map(Detunings::List)
    }
}

impl Detunings {
    pub fn values(&self, tau_min: f64) -> Vec<f64> {
        match self {
            Detunings::Grid(count) => ramsey_adapt::experiments::detuning_grid(*count, tau_min),
            Detunings::List(list) => list.clone(),
        }
    }
}

/// Inclusive `lo..hi` (or a single `n`).
pub fn parse_n_range(s: &str) -> Result<(usize, usize)> {
    let bad = || anyhow!("invalid parameter `n_range`: expected LO..HI with 1 <= LO <= HI (got `{s}`)");
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => {
            let hi = hi.strip_prefix('=').unwrap_or(hi);
            (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?)
        }
        None => {
            let n = s.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn parse_phase_rule(s: &str) -> Result<PhaseRule> {
    match s {
        "closed-form" | "closed_form" => Ok(PhaseRule::ClosedForm),
        "optimal" => Ok(PhaseRule::Optimal),
        other => bail!("invalid parameter `phase_rule`: unknown rule `{other}` (closed-form | optimal)"),
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if !(v.is_finite() && v > 0.0) {
        bail!("invalid parameter `{field}`: must be finite and > 0 (got {v})");
    }
    Ok(v)
}

fn at_least(field: &str, v: usize, min: usize) -> Result<usize> {
    if v < min {
        bail!("invalid parameter `{field}`: must be >= {min} (got {v})");
    }
    Ok(v)
}

#[derive(Debug, Clone, Serialize)]
pub struct PsoSettings {
    pub particles: usize,
    pub iterations: usize,
    pub train_detunings: usize,
    pub train_reps: usize,
    pub validation_detunings: usize,
    pub validation_reps: usize,
    pub validate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RtSettings {
    pub repetitions: Vec<u32>,
    pub shot_us: f64,
}

/// Fully merged and validated settings. Serialized into every manifest.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    /// Empty: each subcommand picks its own default set.
    pub protocols: Vec<ProtocolKind>,
    pub n: Option<usize>,
    pub n_range: Option<(usize, usize)>,
    pub g: usize,
    pub f: Option<usize>,
    pub tau_min_ns: f64,
    pub f0: f64,
    pub f1: f64,
    /// `null` when infinite.
    pub t2star_us: f64,
    pub timing: TimingChoice,
    pub timing_model: TimingModel,
    pub detunings: Detunings,
    pub f_true_hz: f64,
    pub reps: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub quantize_phase: bool,
    pub phase_rule: PhaseRule,
    pub increments: Option<String>,
    #[serde(skip)]
    pub workers: Option<usize>,
    pub bootstrap: BootstrapSettings,
    pub pso: PsoSettings,
    pub rt: RtSettings,
    #[serde(skip)]
    pub model: MeasurementModel,
}

impl Settings {
    pub fn tau_min(&self) -> f64 {
        self.tau_min_ns * 1e-9
    }

    pub fn detuning_values(&self) -> Vec<f64> {
        self.detunings.values(self.tau_min())
    }

    /// Merges flags over the config file over defaults; `env_seed` is the
    /// raw value of [`SEED_ENV`], if set.
    pub fn resolve(
        args: &CommonArgs,
        pso: &PsoArgs,
        rt: &RtArgs,
        env_seed: Option<&str>,
    ) -> Result<Self> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };

        let protocol_names: Vec<String> = if !args.protocol.is_empty() {
            args.protocol.clone()
        } else {
            match &file.protocol {
                Some(OneOrMany::One(s)) => s.split(',').map(str::to_string).collect(),
                Some(OneOrMany::Many(v)) => v.clone(),
                None => Vec::new(),
            }
        };
        let mut protocols = Vec::new();
        for name in protocol_names {
            let kind: ProtocolKind = name.trim().parse()?;
            if !protocols.contains(&kind) {
                protocols.push(kind);
            }
        }

        let n = args.n.or(file.n);
        let n_range = match args.n_range.as_deref().or(file.n_range.as_deref()) {
            Some(s) => Some(parse_n_range(s)?),
            None => None,
        };
        let g = at_least("g", args.g.or(file.g).unwrap_or(5), 1)?;
        let f = args.f.or(file.f);

        let tau_min_ns = positive("tau_min_ns", args.tau_min_ns.or(file.tau_min_ns).unwrap_or(20.0))?;
        let f0 = args.f0.or(file.f0).unwrap_or(MeasurementModel::REFERENCE_F0);
        let f1 = args.f1.or(file.f1).unwrap_or(MeasurementModel::REFERENCE_F1);
        let t2star_us = match (args.t2star_us, &file.t2star_us) {
            (Some(v), _) => v,
            (None, Some(NumberOrText::Number(v))) => *v,
            (None, Some(NumberOrText::Text(s))) => s
                .trim()
                .parse()
                .map_err(|_| anyhow!("invalid parameter `t2star_us`: `{s}` is not a number or \"inf\""))?,
            (None, None) => MeasurementModel::REFERENCE_T2_STAR * 1e6,
        };
        if t2star_us.is_nan() || t2star_us <= 0.0 {
            bail!("invalid parameter `t2star_us`: must be > 0 or inf (got {t2star_us})");
        }
        let model = MeasurementModel::new(f0, f1, t2star_us * 1e-6, tau_min_ns * 1e-9)?;

        let timing = args.timing.or(file.timing).unwrap_or_default();
        let defaults = TimingModel::default();
        let us = |v: Option<f64>, d: f64| v.map_or(d, |x| x * 1e-6);
        let timing_model = TimingModel {
            t_init: us(file.t_init_us, defaults.t_init),
            t_read: us(file.t_read_us, defaults.t_read),
            compute_overlapped: file.compute_overlapped.unwrap_or(defaults.compute_overlapped),
            t_compute_start: us(file.t_compute_start_us, defaults.t_compute_start),
            t_compute_end: us(file.t_compute_end_us, defaults.t_compute_end),
            sensing_repetitions: 1,
        };
        timing_model.validate()?;

        let detunings = match (&args.detunings, &file.detunings) {
            (Some(s), _) | (None, Some(DetuningsValue::Text(s))) => s.parse()?,
            (None, Some(DetuningsValue::Count(c))) => Detunings::Grid(*c),
            (None, Some(DetuningsValue::List(v))) => Detunings::List(v.clone()),
            (None, None) => Detunings::Grid(64),
        };
        let fmax = model.max_detuning();
        match &detunings {
            Detunings::Grid(0) => bail!("invalid parameter `detunings`: grid size must be >= 1"),
            Detunings::List(v) if v.is_empty() => bail!("invalid parameter `detunings`: list is empty"),
            Detunings::List(v) => {
                if let Some(x) = v.iter().find(|x| !(x.abs() < fmax)) {
                    bail!("invalid parameter `detunings`: {x} Hz lies outside (-{fmax}, {fmax})");
                }
            }
            Detunings::Grid(_) => {}
        }

        let f_true_hz = args.f_true_hz.or(file.f_true_hz).unwrap_or(2e6);
        if !(f_true_hz.abs() < fmax) {
            bail!("invalid parameter `f_true_hz`: must lie in (-{fmax}, {fmax}) (got {f_true_hz})");
        }

        let reps = at_least("reps", args.reps.or(file.reps).unwrap_or(25), 1)?;
        let seed = match args.seed.or(file.seed) {
            Some(s) => s,
            None => match env_seed {
                Some(raw) => raw
                    .trim()
                    .parse()
                    .map_err(|_| anyhow!("invalid {SEED_ENV} `{raw}`: expected an unsigned 64-bit integer"))?,
                None => 0,
            },
        };
        let out = args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("results"));
        let quantize_phase = args.quantize_phase || file.quantize_phase.unwrap_or(false);
        let phase_rule = match &args.phase_rule {
            Some(s) => parse_phase_rule(s)?,
            None => file.phase_rule.unwrap_or_default(),
        };
        let increments = args.increments.clone().or(file.increments);
        let workers = match args.workers.or(file.workers) {
            Some(w) => Some(at_least("workers", w, 1)?),
            None => None,
        };

        let bootstrap = BootstrapSettings {
            resamples: at_least("bootstrap_resamples", file.bootstrap_resamples.unwrap_or(200), 1)?,
            confidence: file.confidence.unwrap_or(0.95),
        };
        if !(bootstrap.confidence > 0.0 && bootstrap.confidence < 1.0) {
            bail!("invalid parameter `confidence`: must lie in (0, 1) (got {})", bootstrap.confidence);
        }

        let pso = PsoSettings {
            particles: at_least("particles", pso.particles.or(file.particles).unwrap_or(10), 2)?,
            iterations: at_least("iterations", pso.iterations.or(file.iterations).unwrap_or(400), 1)?,
            train_detunings: at_least(
                "train_detunings",
                pso.train_detunings.or(file.train_detunings).unwrap_or(16),
                1,
            )?,
            train_reps: at_least("train_reps", pso.train_reps.or(file.train_reps).unwrap_or(4), 2)?,
            validation_detunings: at_least(
                "validation_detunings",
                pso.validation_detunings.or(file.validation_detunings).unwrap_or(64),
                1,
            )?,
            validation_reps: at_least(
                "validation_reps",
                pso.validation_reps.or(file.validation_reps).unwrap_or(4),
                2,
            )?,
            validate: !pso.no_validate && file.validate.unwrap_or(true),
        };

        let repetitions = if !rt.repetitions.is_empty() {
            rt.repetitions.clone()
        } else {
            file.repetitions.unwrap_or_else(|| vec![3600, 50_000])
        };
        if repetitions.is_empty() || repetitions.contains(&0) {
            bail!("invalid parameter `repetitions`: need at least one value, each >= 1");
        }
        let rt = RtSettings {
            repetitions,
            shot_us: positive("shot_us", rt.shot_us.or(file.shot_us).unwrap_or(1.0))?,
        };

        Ok(Self {
            protocols,
            n,
            n_range,
            g,
            f,
            tau_min_ns,
            f0,
            f1,
            t2star_us,
            timing,
            timing_model,
            detunings,
            f_true_hz,
            reps,
            seed,
            out,
            quantize_phase,
            phase_rule,
            increments,
            workers,
            bootstrap,
            pso,
            rt,
            model,
        })
    }
}
