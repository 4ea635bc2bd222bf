use std::time::Instant;

use serde::{Deserialize, Serialize};

/// Time source for the recovery score. `lap` is called once after each
/// iteration and returns the milliseconds elapsed since `start`.
pub trait Clock {
    fn start(&mut self);
    fn lap(&mut self) -> f64;
}

#[derive(Debug, Default)]
pub struct WallClock {
    origin: Option<Instant>,
}

impl Clock for WallClock {
    fn start(&mut self) {
        self.origin = Some(Instant::now());
    }

    fn lap(&mut self) -> f64 {
        let origin = *self.origin.get_or_insert_with(Instant::now);
        origin.elapsed().as_secs_f64() * 1e3
    }
}

/// Advances by a fixed duration per lap, so lap `n` reads `n * step_ms`.
#[derive(Debug, Clone)]
pub struct FixedClock {
    pub step_ms: f64,
    laps: u64,
}

impl FixedClock {
    pub fn new(step_ms: f64) -> Self {
        Self { step_ms, laps: 0 }
    }
}

impl Clock for FixedClock {
    fn start(&mut self) {
        self.laps = 0;
    }

    fn lap(&mut self) -> f64 {
        self.laps += 1;
        self.laps as f64 * self.step_ms
    }
}

pub const DEFAULT_STEP_MS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    Wall,
    Fixed { step_ms: f64 },
}

impl Default for ClockMode {
    fn default() -> Self {
        ClockMode::Fixed { step_ms: DEFAULT_STEP_MS }
    }
}

impl ClockMode {
    pub fn build(&self) -> Box<dyn Clock + Send> {
        match *self {
            ClockMode::Wall => Box::new(WallClock::default()),
            ClockMode::Fixed { step_ms } => Box::new(FixedClock::new(step_ms)),
        }
    }
}
