//! Coded cooperative computation at the edge: an LT codec, a deterministic
//! discrete-event simulator of a collector offloading coded rows to
//! heterogeneous helpers, the adaptive collector protocol, baseline
//! schedulers and closed-form predictors.

pub mod baselines;
pub mod c3p;
pub mod codec;
pub mod engine;
pub mod runner;
pub mod theory;
pub mod workload;

pub use c3p::{C3pParams, C3pScheduler, EstimatorMode, StopRule};
pub use engine::{run, RunMetrics, RunOutput, RunTrace, Scheduler, SimConfig};
pub use runner::{run_kind, RunSpec, SchedulerKind, StopMode};
pub use workload::{ChannelModel, HelperProfile, HelperSpec, PacketSizes, Population, RuntimeScenario, Tapes};
