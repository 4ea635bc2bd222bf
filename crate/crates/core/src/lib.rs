//! Secure cell-free massive MIMO downlink under an active pilot-contamination
//! attack.
//!
//! The crate is organised bottom-up:
//!
//! * [`scenario`] draws network geometries and large-scale fading.
//! * [`channel`] turns a drop into MMSE estimation statistics and samples
//!   small-scale realizations.
//! * [`ppzf`] holds the protective partial zero-forcing closed forms and a
//!   Monte Carlo oracle for every expectation they rely on.
//! * [`sca`] builds and solves the convexified power-allocation subproblems.
//! * [`resilience`] scores recovery trajectories and selects the deployed
//!   allocation.
//!
//! All powers are in milliwatts and every gain is expressed relative to the
//! receiver noise power, so the noise term of every SINR is exactly one.

pub mod channel;
pub mod error;
pub mod ppzf;
pub mod resilience;
pub mod sca;
pub mod scenario;

pub use channel::{ChannelRealization, ChannelStatistics, PilotConfig};
pub use error::{Error, Result};
pub use ppzf::{PerformanceReport, PowerAllocation, SinrCoefficients, UserPartition};
pub use resilience::{ResilienceTrace, ResilienceWeights};
pub use sca::{IteratePoint, ScaOptions, SecrecyProblem, ServiceTargets};
pub use scenario::{NetworkDrop, Point, ScenarioConfig};
