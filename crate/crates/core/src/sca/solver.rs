use serde::{Deserialize, Serialize};

use super::conic::ConicSubproblem;
use super::point::IteratePoint;
use super::SecrecyProblem;
use crate::error::{Error, Result};
use crate::ppzf::PowerAllocation;

/// Per-iteration solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// True objective at the new iterate.
    pub psi: f64,
    /// Optimal value of the convex subproblem.
    pub surrogate_objective: f64,
    pub max_violation: f64,
    pub solve_time_s: f64,
    pub solver_iterations: u32,
    pub status: String,
    /// Whether the secrecy constraint had to be relaxed to stay feasible.
    pub relaxed_secrecy: bool,
    pub variables: usize,
    pub rows: usize,
}

/// Outcome of a plain SCA run.
#[derive(Debug, Clone)]
pub struct ScaRun {
    /// `points[0]` is the starting point.
    pub points: Vec<IteratePoint>,
    /// True objective per point.
    pub psi: Vec<f64>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub converged: bool,
    /// Set when an iteration failed; earlier iterates remain valid.
    pub failure: Option<Error>,
}

impl ScaRun {
    pub fn last(&self) -> &IteratePoint {
        self.points.last().expect("run holds at least the starting point")
    }

    pub fn final_psi(&self) -> f64 {
        *self.psi.last().expect("run holds at least the starting point")
    }
}

impl SecrecyProblem {
    /// Projects a solver output onto the allocation domain: negative
    /// amplitudes are clipped and any AP over budget is scaled back.
    fn project(&self, mut u: PowerAllocation) -> PowerAllocation {
        u.u_users.iter_mut().chain(u.u_an.iter_mut()).for_each(|v| *v = v.max(0.0));
        for l in 0..u.aps() {
            let used = u.ap_power(l);
            if used > self.p_max[l] {
                let s = (self.p_max[l] / used).sqrt();
                u.u_users.row_mut(l).scale_mut(s);
                u.u_an[l] *= s;
            }
        }
        u
    }

    /// Solves `sub` and turns its solution into the next iterate.
    pub fn solve_subproblem(&self, sub: &ConicSubproblem) -> Result<(IteratePoint, StepDiagnostics)> {
        let sol = sub.solve(self.options.solver_tolerance, self.options.solver_max_iter)?;
        let lay = &sub.layout;
        let (aps, users) = (lay.aps, lay.users);
        let mut u = PowerAllocation::zeros(aps, users);
        for k in 0..users {
            for l in 0..aps {
                u.u_users[(l, k)] = sol.x[lay.u_index(l, k)];
            }
        }
        if let Some(an) = lay.u_an {
            for l in 0..aps {
                u.u_an[l] = sol.x[an + l];
            }
        }
        let mut point = IteratePoint::at(&self.coeffs, self.project(u));
        point.tau = (0..users).map(|k| sol.x[lay.tau + k]).collect();
        point.zeta1 = sol.x[lay.zeta];
        point.eta1 = lay.eta.map(|i| sol.x[i]).unwrap_or(0.0);
        let diag = StepDiagnostics {
            psi: self.psi(&point.u),
            surrogate_objective: sol.objective,
            max_violation: sol.max_violation,
            solve_time_s: sol.solve_time_s,
            solver_iterations: sol.iterations,
            status: sol.status,
            relaxed_secrecy: false,
            variables: sub.num_vars(),
            rows: sub.num_rows(),
        };
        Ok((point, diag))
    }

    /// One outer iteration. When the attacked user cannot be kept ahead of
    /// the eavesdropper inside the linearization, the step is retried
    /// without `zeta_1 >= 0`.
    pub fn step(&self, point: &IteratePoint) -> Result<(IteratePoint, StepDiagnostics)> {
        let strict = self.build_subproblem(point, false)?;
        match self.solve_subproblem(&strict) {
            Err(Error::Infeasible(_)) if self.coeffs.eve_active => {
                let relaxed = self.build_subproblem(point, true)?;
                let (p, mut d) = self.solve_subproblem(&relaxed)?;
                d.relaxed_secrecy = true;
                Ok((p, d))
            }
            other => other,
        }
    }

    /// Plain SCA from `start`: stops after `max_iter` steps, or earlier once
    /// the objective change drops below the stop tolerance when
    /// `stop_early` is set.
    pub fn run_sca(&self, start: IteratePoint, max_iter: usize, stop_early: bool) -> ScaRun {
        let mut run = ScaRun {
            psi: vec![self.psi(&start.u)],
            points: vec![start],
            diagnostics: Vec::new(),
            converged: false,
            failure: None,
        };
        for _ in 0..max_iter {
            match self.step(run.last()) {
                Ok((next, diag)) => {
                    let tol = self.options.stop_tolerance;
                    // a relaxed step can make progress on the surrogate while
                    // the true objective is still flat at SSE = 0
                    let settled = if diag.relaxed_secrecy {
                        run.diagnostics.last().is_some_and(|d| {
                            d.relaxed_secrecy && (d.surrogate_objective - diag.surrogate_objective).abs() < tol
                        })
                    } else {
                        (diag.psi - run.final_psi()).abs() < tol
                    };
                    run.psi.push(diag.psi);
                    run.points.push(next);
                    run.diagnostics.push(diag);
                    if stop_early && settled {
                        run.converged = true;
                        break;
                    }
                }
                Err(e) => {
                    run.failure = Some(e);
                    break;
                }
            }
        }
        run
    }
}

#[cfg(test)]
mod tests {
    use super::super::{ScaOptions, ServiceTargets};
    use super::*;
    use crate::channel::{ChannelStatistics, PilotConfig};
    use crate::ppzf::UserPartition;
    use nalgebra::{DMatrix, DVector};

    fn problem(options: ScaOptions) -> SecrecyProblem {
        let beta = DMatrix::from_row_slice(2, 3, &[1.0, 0.5, 0.05, 0.02, 1.0, 0.8]);
        let pilots = PilotConfig::uniform(3, 3, 4.0, 3.0);
        let stats = ChannelStatistics::from_gains(beta, DVector::from_row_slice(&[0.3, 0.2]), &pilots).unwrap();
        let part = UserPartition::from_strong_sets(4, 3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let targets = ServiceTargets::uniform(3, 1.0, 2.0, 0.05, (0.5, 0.5));
        SecrecyProblem::new(stats, part, targets, vec![10.0, 10.0], options).unwrap()
    }

    #[test]
    fn steps_stay_feasible_and_descend() {
        let p = problem(ScaOptions::default());
        let run = p.run_sca(p.initial_point(), 15, false);
        assert!(run.failure.is_none(), "{:?}", run.failure);
        for w in run.psi.windows(2) {
            assert!(w[1] <= w[0] + 1e-6, "{:?}", run.psi);
        }
        for pt in &run.points {
            pt.u.check_budget(&p.p_max, 1e-6 * 10.0).unwrap();
        }
        assert!(run.final_psi() < run.psi[0]);
    }

    #[test]
    fn piecewise_rates_also_run() {
        let opts = ScaOptions {
            rate_encoding: super::super::RateEncoding::PiecewiseLinear { segments: 32, g_max: 1e3 },
            ..Default::default()
        };
        let p = problem(opts);
        let run = p.run_sca(p.initial_point(), 5, false);
        assert!(run.failure.is_none(), "{:?}", run.failure);
        assert!(run.final_psi() < run.psi[0]);
    }

    #[test]
    fn impossible_minimum_rate_is_infeasible() {
        let mut p = problem(ScaOptions::default());
        p.targets.se_min = vec![50.0; 3];
        let err = p.step(&p.initial_point()).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "{err:?}");
    }
}
