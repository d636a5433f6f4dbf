//! Bayesian estimation of a static detuning with a single qubit read out by
//! Ramsey interferometry.
//!
//! The posterior over the accumulated phase is held as a truncated Fourier
//! series, updated exactly after every binary outcome. Protocols choose the
//! sensing times from an exponential schedule and the readout phases either
//! adaptively (from the posterior) or from a fixed sweep.

pub mod error;
pub mod estimation;
pub mod experiments;
pub mod protocols;
pub mod seed;
pub mod swarm;

pub use error::{Error, Result};
pub use estimation::{
    estimate_frequency, posterior_holevo_variance, CircularDistribution, FourierDistribution,
    GridDistribution, MeasurementModel, Outcome, RamseySetting,
};
pub use protocols::{
    run_protocol, PhaseIncrementTable, Protocol, ProtocolKind, RunTrace, Schedule, TimingModel,
};
