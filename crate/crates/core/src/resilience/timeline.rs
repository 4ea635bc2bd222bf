use serde::{Deserialize, Serialize};

use super::algorithm::{run_algorithm1, score_fixed_allocation, Algorithm1Outcome, RecoverySchedule};
use super::clock::ClockMode;
use super::metrics::{absorption, ResilienceWeights};
use crate::channel::{estimation_quality, PilotConfig};
use crate::error::{Error, Result};
use crate::ppzf::{partition_users, PowerAllocation};
use crate::scenario::NetworkDrop;
use crate::sca::{ScaOptions, SecrecyProblem, ServiceTargets};

/// How the network reacts after the outage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecoveryStrategy {
    /// Resilience-aware SCA from the even split.
    Optimize,
    /// Equal user power with a fixed AN share, never re-optimized.
    EqualSplit { an_fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineConfig {
    pub t0_ms: f64,
    pub t_d_ms: f64,
    pub n_max: usize,
    /// Iteration cap of the pre-attack SCA run, which stops on convergence.
    pub steady_max_iter: usize,
    pub weights: ResilienceWeights,
    pub clock: ClockMode,
    pub antennas: usize,
    pub threshold_fraction: f64,
    pub strategy: RecoveryStrategy,
}

impl Default for TimelineConfig {
    fn default() -> Self {
        Self {
            t0_ms: 500.0,
            t_d_ms: 500.0,
            n_max: 50,
            steady_max_iter: 100,
            weights: ResilienceWeights::default(),
            clock: ClockMode::default(),
            antennas: 4,
            threshold_fraction: 0.1,
            strategy: RecoveryStrategy::Optimize,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TimelineOutcome {
    /// Allocation in force before the attack.
    pub steady: PowerAllocation,
    /// Objective of the steady allocation before the attack, with the
    /// attacked user's plain rate standing in for its secrecy rate.
    pub psi_steady: f64,
    pub psi_t0: f64,
    /// The problem solved after the outage, kept for rescoring and reports.
    pub attacked: SecrecyProblem,
    pub recovery: Algorithm1Outcome,
}

/// Allocation in force before the attack.
///
/// Under [`RecoveryStrategy::Optimize`] it comes from SCA on the rate terms
/// only, since the secrecy rate is undefined without an eavesdropper; it is
/// therefore the same for every priority split.
pub fn steady_state(
    drop: &NetworkDrop,
    pilots_pre: &PilotConfig,
    targets: &ServiceTargets,
    p_max: &[f64],
    options: &ScaOptions,
    config: &TimelineConfig,
) -> Result<PowerAllocation> {
    match config.strategy {
        RecoveryStrategy::Optimize => {
            let pre = build_problem(drop, pilots_pre, targets.with_omega(0.0, 1.0), p_max, options, config)?;
            let run = pre.run_sca(pre.initial_point(), config.steady_max_iter, true);
            if let (Some(e), 1) = (&run.failure, run.points.len()) {
                return Err(e.clone());
            }
            Ok(run.last().u.clone())
        }
        RecoveryStrategy::EqualSplit { an_fraction } => equal_split(p_max, drop.users(), an_fraction),
    }
}

/// Outage at `t0` and recovery from a given steady allocation.
///
/// At `t0` the statistics switch to the attacked ones while `steady` is
/// held, which fixes the absorption score; recovery then starts from the
/// even split.
#[allow(clippy::too_many_arguments)]
pub fn recover(
    drop: &NetworkDrop,
    pilots_pre: &PilotConfig,
    pilots_attack: &PilotConfig,
    steady: PowerAllocation,
    targets: &ServiceTargets,
    p_max: &[f64],
    options: &ScaOptions,
    config: &TimelineConfig,
) -> Result<TimelineOutcome> {
    if !(config.t_d_ms > 0.0) {
        return Err(Error::InvalidConfig("resilience.t_d_ms must be positive".into()));
    }
    let pre = build_problem(drop, pilots_pre, targets.clone(), p_max, options, config)?;
    let attacked = build_problem(drop, pilots_attack, targets.clone(), p_max, options, config)?;
    let psi_steady = pre.psi(&steady);
    let psi_t0 = attacked.psi(&steady);
    let schedule = RecoverySchedule {
        weights: config.weights,
        n_max: config.n_max,
        t0_ms: config.t0_ms,
        t_d_ms: config.t_d_ms,
        alpha_abs: absorption(psi_t0),
    };
    let mut clock = config.clock.build();
    let recovery = match config.strategy {
        RecoveryStrategy::Optimize => run_algorithm1(&attacked, attacked.initial_point(), &schedule, clock.as_mut())?,
        RecoveryStrategy::EqualSplit { .. } => score_fixed_allocation(&attacked, &steady, &schedule, clock.as_mut())?,
    };
    Ok(TimelineOutcome { steady, psi_steady, psi_t0, attacked, recovery })
}

/// Steady state without Eve, outage at `t0`, then recovery.
pub fn run_outage_timeline(
    drop: &NetworkDrop,
    pilots_pre: &PilotConfig,
    pilots_attack: &PilotConfig,
    targets: &ServiceTargets,
    p_max: &[f64],
    options: &ScaOptions,
    config: &TimelineConfig,
) -> Result<TimelineOutcome> {
    let steady = steady_state(drop, pilots_pre, targets, p_max, options, config)?;
    recover(drop, pilots_pre, pilots_attack, steady, targets, p_max, options, config)
}

fn build_problem(
    drop: &NetworkDrop,
    pilots: &PilotConfig,
    targets: ServiceTargets,
    p_max: &[f64],
    options: &ScaOptions,
    config: &TimelineConfig,
) -> Result<SecrecyProblem> {
    let stats = estimation_quality(drop, pilots)?;
    let part = partition_users(&stats, config.antennas, config.threshold_fraction)?;
    SecrecyProblem::new(stats, part, targets, p_max.to_vec(), options.clone())
}

fn equal_split(p_max: &[f64], users: usize, an_fraction: f64) -> Result<PowerAllocation> {
    if !(0.0..1.0).contains(&an_fraction) {
        return Err(Error::InvalidConfig(format!("AN fraction {an_fraction} outside [0, 1)")));
    }
    Ok(PowerAllocation::equal_split(p_max, users, an_fraction))
}
