use super::clock::Clock;
use super::metrics::ResilienceWeights;
use super::trace::{ResilienceTrace, ScoreTracker};
use crate::error::{Error, Result};
use crate::ppzf::PowerAllocation;
use crate::sca::{IteratePoint, SecrecyProblem, StepDiagnostics};

/// Scoring context shared by every recovery run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoverySchedule {
    pub weights: ResilienceWeights,
    pub n_max: usize,
    pub t0_ms: f64,
    pub t_d_ms: f64,
    pub alpha_abs: f64,
}

#[derive(Debug, Clone)]
pub struct Algorithm1Outcome {
    /// Allocation of the best-scoring record, if any iteration succeeded.
    pub best: Option<PowerAllocation>,
    pub trace: ResilienceTrace,
    /// One allocation per trace record.
    pub snapshots: Vec<PowerAllocation>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Algorithm1Outcome {
    pub fn last(&self) -> Option<&PowerAllocation> {
        self.snapshots.last()
    }
}

/// Resilience-aware SCA: every iterate is scored when it becomes available
/// and the best one seen so far is kept.
///
/// Iterate `n` is stamped `t0 + clock.lap()` right after its subproblem is
/// solved. A failed subproblem ends the run; earlier records are kept.
pub fn run_algorithm1(
    problem: &SecrecyProblem,
    start: IteratePoint,
    schedule: &RecoverySchedule,
    clock: &mut dyn Clock,
) -> Result<Algorithm1Outcome> {
    if schedule.n_max == 0 {
        return Err(Error::InvalidConfig("resilience.n_max must be at least 1".into()));
    }
    let mut tracker =
        ScoreTracker::new(schedule.weights, schedule.t0_ms, schedule.t_d_ms, schedule.alpha_abs)?;
    let mut snapshots = Vec::with_capacity(schedule.n_max);
    let mut diagnostics = Vec::with_capacity(schedule.n_max);
    let mut failure = None;
    let mut point = start;

    clock.start();
    for n in 1..=schedule.n_max {
        match problem.step(&point) {
            Ok((next, diag)) => {
                let t_n = schedule.t0_ms + clock.lap();
                tracker.push(n, t_n, diag.psi);
                snapshots.push(next.u.clone());
                diagnostics.push(diag);
                point = next;
            }
            Err(e) => {
                failure = Some(format!("iteration {n}: {e}"));
                break;
            }
        }
    }

    let trace = tracker.finish(failure);
    let best = trace.best_index.map(|i| snapshots[i].clone());
    Ok(Algorithm1Outcome { best, trace, snapshots, diagnostics })
}

/// Scores a fixed allocation at every iteration slot, for non-adaptive
/// baselines.
pub fn score_fixed_allocation(
    problem: &SecrecyProblem,
    alloc: &PowerAllocation,
    schedule: &RecoverySchedule,
    clock: &mut dyn Clock,
) -> Result<Algorithm1Outcome> {
    if schedule.n_max == 0 {
        return Err(Error::InvalidConfig("resilience.n_max must be at least 1".into()));
    }
    let mut tracker =
        ScoreTracker::new(schedule.weights, schedule.t0_ms, schedule.t_d_ms, schedule.alpha_abs)?;
    let psi = problem.psi(alloc);
    clock.start();
    for n in 1..=schedule.n_max {
        tracker.push(n, schedule.t0_ms + clock.lap(), psi);
    }
    let trace = tracker.finish(None);
    let snapshots = vec![alloc.clone(); schedule.n_max];
    Ok(Algorithm1Outcome { best: Some(alloc.clone()), trace, snapshots, diagnostics: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::super::clock::FixedClock;
    use super::*;
    use crate::channel::{ChannelStatistics, PilotConfig};
    use crate::ppzf::UserPartition;
    use crate::sca::{ScaOptions, ServiceTargets};
    use nalgebra::{DMatrix, DVector};

    fn problem() -> SecrecyProblem {
        let beta = DMatrix::from_row_slice(2, 3, &[1.0, 0.5, 0.05, 0.02, 1.0, 0.8]);
        let pilots = PilotConfig::uniform(3, 3, 4.0, 3.0);
        let stats = ChannelStatistics::from_gains(beta, DVector::from_row_slice(&[0.3, 0.2]), &pilots).unwrap();
        let part = UserPartition::from_strong_sets(4, 3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let targets = ServiceTargets::uniform(3, 1.0, 2.0, 0.05, (0.5, 0.5));
        SecrecyProblem::new(stats, part, targets, vec![10.0, 10.0], ScaOptions::default()).unwrap()
    }

    fn schedule(weights: ResilienceWeights, n_max: usize) -> RecoverySchedule {
        RecoverySchedule { weights, n_max, t0_ms: 500.0, t_d_ms: 500.0, alpha_abs: 0.3 }
    }

    #[test]
    fn records_follow_the_fixed_clock() {
        let p = problem();
        let out = run_algorithm1(&p, p.initial_point(), &schedule(Default::default(), 6), &mut FixedClock::new(100.0))
            .unwrap();
        assert!(out.trace.failure.is_none());
        assert_eq!(out.trace.records.len(), 6);
        assert_eq!(out.snapshots.len(), 6);
        for (i, r) in out.trace.records.iter().enumerate() {
            assert_eq!(r.iter, i + 1);
            assert_eq!(r.t_ms, 500.0 + 100.0 * (i + 1) as f64);
            assert_eq!(r.psi, p.psi(&out.snapshots[i]));
        }
        // t_n - t0 reaches T_d at n = 5
        assert_eq!(out.trace.records[4].alpha_rec, 1.0);
        assert!((out.trace.records[5].alpha_rec - 500.0 / 600.0).abs() < 1e-15);
    }

    #[test]
    fn adaptation_only_weights_pick_lowest_objective() {
        let p = problem();
        let out =
            run_algorithm1(&p, p.initial_point(), &schedule(Default::default(), 8), &mut FixedClock::new(100.0)).unwrap();
        let psi: Vec<f64> = out.trace.records.iter().map(|r| r.psi).collect();
        let min = psi.iter().cloned().fold(f64::INFINITY, f64::min);
        let best = out.trace.best_index.unwrap();
        assert_eq!(psi[best], min);
        assert_eq!(psi.iter().position(|v| *v == min), Some(best));
        assert_eq!(out.best.as_ref(), Some(&out.snapshots[best]));
    }

    #[test]
    fn deterministic_under_fixed_clock() {
        let p = problem();
        let w = ResilienceWeights::new(0.2, 0.5, 0.3).unwrap();
        let a = run_algorithm1(&p, p.initial_point(), &schedule(w, 5), &mut FixedClock::new(100.0)).unwrap();
        let b = run_algorithm1(&p, p.initial_point(), &schedule(w, 5), &mut FixedClock::new(100.0)).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.snapshots, b.snapshots);
    }

    #[test]
    fn failure_keeps_earlier_records() {
        let mut p = problem();
        p.targets.se_min = vec![50.0; 3];
        let out =
            run_algorithm1(&p, p.initial_point(), &schedule(Default::default(), 4), &mut FixedClock::new(100.0)).unwrap();
        assert!(out.trace.records.is_empty());
        assert!(out.best.is_none());
        assert!(out.trace.failure.as_deref().unwrap().starts_with("iteration 1"));
    }

    #[test]
    fn zero_iterations_rejected() {
        let p = problem();
        let err = run_algorithm1(&p, p.initial_point(), &schedule(Default::default(), 0), &mut FixedClock::new(1.0));
        assert!(matches!(err, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn fixed_allocation_repeats_one_score() {
        let p = problem();
        let alloc = PowerAllocation::equal_split(&p.p_max, 3, 0.25);
        let out = score_fixed_allocation(&p, &alloc, &schedule(Default::default(), 3), &mut FixedClock::new(100.0))
            .unwrap();
        assert_eq!(out.trace.records.len(), 3);
        assert!(out.trace.records.iter().all(|r| r.psi == p.psi(&alloc)));
        assert_eq!(out.trace.best_index, Some(0));
    }
}
