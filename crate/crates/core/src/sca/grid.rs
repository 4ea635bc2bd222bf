use rayon::prelude::*;

use super::SecrecyProblem;
use crate::error::{Error, Result};
use crate::ppzf::PowerAllocation;

/// Best point of an exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptimum {
    pub psi: f64,
    pub rho_user: f64,
    pub rho_an: f64,
}

/// Exhaustive search over `(rho_1, rho_AN)` with `rho_1 + rho_AN <= P_max`
/// on a grid of `steps` cells per axis. Only defined for one AP and one user.
pub fn grid_search_single(problem: &SecrecyProblem, steps: usize) -> Result<GridOptimum> {
    if problem.coeffs.aps() != 1 || problem.coeffs.users() != 1 {
        return Err(Error::Dimension("grid search needs exactly one AP and one user".into()));
    }
    if steps == 0 {
        return Err(Error::InvalidConfig("grid needs at least one step".into()));
    }
    let p = problem.p_max[0];
    let h = p / steps as f64;
    let an_steps = if problem.options.artificial_noise { steps } else { 0 };
    let best = (0..=steps)
        .into_par_iter()
        .map(|i| {
            let mut u = PowerAllocation::zeros(1, 1);
            let mut best = GridOptimum { psi: f64::INFINITY, rho_user: 0.0, rho_an: 0.0 };
            let rho_user = i as f64 * h;
            for j in 0..=an_steps.min(steps - i) {
                let rho_an = j as f64 * h;
                u.u_users[(0, 0)] = rho_user.sqrt();
                u.u_an[0] = rho_an.sqrt();
                let psi = problem.psi(&u);
                if psi < best.psi {
                    best = GridOptimum { psi, rho_user, rho_an };
                }
            }
            best
        })
        .reduce(
            || GridOptimum { psi: f64::INFINITY, rho_user: 0.0, rho_an: 0.0 },
            |a, b| if b.psi < a.psi || (b.psi == a.psi && (b.rho_user, b.rho_an) < (a.rho_user, a.rho_an)) { b } else { a },
        );
    Ok(best)
}
