//! Sensing-time schedules, the estimation protocols that run on them, and
//! the wall-clock accounting of a finished run.

pub mod protocol;
pub mod schedule;
pub mod timing;

pub use protocol::{
    quantize_phase, run_protocol, NonAdaptiveSweep, PhaseIncrementTable, PhaseRule, Protocol,
    ProtocolKind,
    RunTrace, TraceStep,
};
pub use schedule::{make_schedule, Schedule, Slot, MAX_STEPS};
pub use timing::{schedule_wall_time, wall_time, TimingModel, WallTime};
