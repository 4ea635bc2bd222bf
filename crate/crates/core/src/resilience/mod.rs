//! Absorption, adaptation and recovery scores, resilience-aware iterate
//! selection and the outage timeline.

mod algorithm;
mod clock;
mod metrics;
mod timeline;
mod trace;

pub use algorithm::{run_algorithm1, score_fixed_allocation, Algorithm1Outcome, RecoverySchedule};
pub use clock::{Clock, ClockMode, FixedClock, WallClock, DEFAULT_STEP_MS};
pub use metrics::{absorption, adaptation, overall, recovery, ResilienceWeights, SIMPLEX_TOLERANCE};
pub use timeline::{recover, run_outage_timeline, steady_state, RecoveryStrategy, TimelineConfig, TimelineOutcome};
pub use trace::{ResilienceTrace, ScoreTracker, TraceRecord};
