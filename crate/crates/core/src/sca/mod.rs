//! Successive convex approximation of the weighted-gap power allocation.
//!
//! Each outer iteration linearizes the non-convex SINR constraints around the
//! current allocation, solves the resulting conic program and re-linearizes
//! at its solution.

pub mod conic;
mod grid;
mod point;
mod solver;
mod subproblem;
mod targets;

use serde::{Deserialize, Serialize};

pub use conic::{AffineExpr, ConeBlock, ConeKind, ConicSolution, ConicSubproblem, GuardLayout, VariableLayout};
pub use point::{
    eve_signal, eve_sinr_lower_bound, initial_allocation, initial_point, log2_tangent, sinr_lower_bound, tangent,
    IteratePoint,
};
pub use grid::{grid_search_single, GridOptimum};
pub use solver::{ScaRun, StepDiagnostics};
pub use targets::{psi_omega, relative_gap, ServiceTargets};

use crate::channel::ChannelStatistics;
use crate::error::{Error, Result};
use crate::ppzf::{PowerAllocation, SinrCoefficients, UserPartition};

/// How `tau <= log2(1 + g)` is encoded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateEncoding {
    ExpCone,
    /// Chords of `log2(1 + g)` on `[0, g_max]`, plus `g <= g_max`.
    PiecewiseLinear { segments: usize, g_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaOptions {
    /// Gap and feasibility tolerance of the conic solver.
    pub solver_tolerance: f64,
    pub solver_max_iter: u32,
    /// Outer loop stops once successive objectives differ by less than this.
    pub stop_tolerance: f64,
    /// Smallest power (mW) given to any user at the initial point.
    pub epsilon_floor: f64,
    pub x_floor_factor: f64,
    /// Lower limit on the linearized denominators.
    pub denominator_floor: f64,
    pub rate_encoding: RateEncoding,
    /// Adds upper surrogates for every rate so the objective cannot hide
    /// overshoot above the targets.
    pub overshoot_guard: bool,
    pub artificial_noise: bool,
}

impl Default for ScaOptions {
    fn default() -> Self {
        Self {
            solver_tolerance: 1e-8,
            solver_max_iter: 200,
            stop_tolerance: 1e-5,
            epsilon_floor: 1e-6,
            x_floor_factor: 1e-6,
            denominator_floor: 1e-3,
            rate_encoding: RateEncoding::ExpCone,
            overshoot_guard: true,
            artificial_noise: true,
        }
    }
}

impl ScaOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("solver_tolerance", self.solver_tolerance),
            ("stop_tolerance", self.stop_tolerance),
            ("epsilon_floor", self.epsilon_floor),
            ("x_floor_factor", self.x_floor_factor),
            ("denominator_floor", self.denominator_floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("solver.{name} must be positive")));
            }
        }
        if let RateEncoding::PiecewiseLinear { segments, g_max } = self.rate_encoding {
            if segments == 0 || !(g_max > 0.0 && g_max.is_finite()) {
                return Err(Error::InvalidConfig("piecewise rate encoding needs segments >= 1 and g_max > 0".into()));
            }
        }
        Ok(())
    }
}

/// Everything one SCA run needs: statistics, precoder structure, targets and
/// budgets.
#[derive(Debug, Clone)]
pub struct SecrecyProblem {
    pub stats: ChannelStatistics,
    pub part: UserPartition,
    pub coeffs: SinrCoefficients,
    pub targets: ServiceTargets,
    /// Per-AP budget in mW.
    pub p_max: Vec<f64>,
    pub options: ScaOptions,
}

impl SecrecyProblem {
    pub fn new(
        stats: ChannelStatistics,
        part: UserPartition,
        targets: ServiceTargets,
        p_max: Vec<f64>,
        options: ScaOptions,
    ) -> Result<Self> {
        if part.aps() != stats.aps() || part.users() != stats.users() || p_max.len() != stats.aps() {
            return Err(Error::Dimension("statistics, partition and budgets disagree on the network size".into()));
        }
        if p_max.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidConfig("per-AP power budgets must be positive".into()));
        }
        targets.validate(stats.users())?;
        options.validate()?;
        let coeffs = SinrCoefficients::new(&stats, &part);
        Ok(Self { stats, part, coeffs, targets, p_max, options })
    }

    /// Same problem with other targets or weights.
    pub fn with_targets(&self, targets: ServiceTargets) -> Result<Self> {
        targets.validate(self.stats.users())?;
        Ok(Self { targets, ..self.clone() })
    }

    pub fn initial_point(&self) -> IteratePoint {
        initial_point(&self.coeffs, &self.p_max, self.options.epsilon_floor)
    }

    pub fn point_at(&self, u: PowerAllocation) -> IteratePoint {
        IteratePoint::at(&self.coeffs, u)
    }

    /// True objective at `u`.
    pub fn psi(&self, u: &PowerAllocation) -> f64 {
        psi_omega(&self.coeffs.report(u), &self.targets)
    }
}
