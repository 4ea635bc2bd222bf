use std::f64::consts::LN_2;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::ppzf::{PerformanceReport, PowerAllocation, SinrCoefficients};

/// One SCA iterate: the allocation, its surrogate variables and the values
/// the next subproblem is linearized around.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IteratePoint {
    pub u: PowerAllocation,
    pub tau: Vec<f64>,
    pub eta1: f64,
    pub zeta1: f64,
    pub gamma_e: f64,
    /// `x_k = a_k^T u_k`.
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub f_d: f64,
    pub grad_f_d: Vec<f64>,
    /// True closed-form performance at `u`.
    pub report: PerformanceReport,
}

impl IteratePoint {
    /// Builds the point at `u` with every surrogate set to its true value.
    pub fn at(coeffs: &SinrCoefficients, u: PowerAllocation) -> Self {
        let report = coeffs.report(&u);
        let gamma_e = report.sinr_eve.unwrap_or(0.0);
        let eta1 = report.se_eve.unwrap_or(0.0);
        let tau = report.se_users.clone();
        let zeta1 = (tau[coeffs.attacked_user] - eta1).max(0.0);
        let mut point = Self {
            u,
            tau,
            eta1,
            zeta1,
            gamma_e,
            x: Vec::new(),
            phi: Vec::new(),
            f_d: 0.0,
            grad_f_d: Vec::new(),
            report,
        };
        point.refresh(coeffs);
        point
    }

    /// Re-derives the cached linearization data from `u`; the Eve SINR
    /// surrogate is reset to the true Eve SINR.
    pub fn refresh(&mut self, coeffs: &SinrCoefficients) {
        let users = coeffs.users();
        self.x = (0..users).map(|k| coeffs.coherent(k, &self.u)).collect();
        self.phi = (0..users).map(|k| coeffs.interference(k, &self.u)).collect();
        self.f_d = coeffs.eve_denominator(&self.u);
        self.grad_f_d = coeffs.eve_denominator_gradient(&self.u);
        self.report = coeffs.report(&self.u);
        self.gamma_e = self.report.sinr_eve.unwrap_or(0.0);
    }
}

/// Even split of each AP's budget over the users, no AN, with every power
/// floored at `epsilon_floor`.
pub fn initial_allocation(p_max: &[f64], users: usize, epsilon_floor: f64) -> PowerAllocation {
    let mut u = PowerAllocation::zeros(p_max.len(), users);
    for (l, cap) in p_max.iter().enumerate() {
        let rho = (cap / users as f64).max(epsilon_floor);
        u.u_users.row_mut(l).fill(rho.sqrt());
    }
    u
}

pub fn initial_point(coeffs: &SinrCoefficients, p_max: &[f64], epsilon_floor: f64) -> IteratePoint {
    IteratePoint::at(coeffs, initial_allocation(p_max, coeffs.users(), epsilon_floor))
}

/// Global lower bound of `x^2 / phi` from its tangent at `(x_n, phi_n)`.
pub fn sinr_lower_bound(x_n: f64, phi_n: f64, x: f64, phi: f64) -> f64 {
    let r = x_n / phi_n;
    2.0 * r * x - r * r * phi
}

/// Tangent of `log2(1 + g)` at `g_n`; an upper bound since the function is
/// concave.
pub fn log2_tangent(g_n: f64, g: f64) -> f64 {
    (1.0 + g_n).log2() + (g - g_n) / ((1.0 + g_n) * LN_2)
}

/// `f(u_n) + grad^T (u - u_n)` on flattened allocations.
pub fn tangent(value_n: f64, grad: &[f64], u_n: &[f64], u: &[f64]) -> f64 {
    value_n + grad.iter().zip(u.iter().zip(u_n)).map(|(g, (a, b))| g * (a - b)).sum::<f64>()
}

/// Eve's signal vector `[b^T u_1; sqrt(eve_leak) . u_1]`, whose squared norm
/// is the Eve SINR numerator.
pub fn eve_signal(coeffs: &SinrCoefficients, u: &PowerAllocation) -> DVector<f64> {
    let u1 = u.u_users.column(coeffs.attacked_user);
    let mut v = DVector::zeros(coeffs.aps() + 1);
    v[0] = coeffs.eve_gain.dot(&u1);
    for l in 0..coeffs.aps() {
        v[l + 1] = coeffs.eve_leak[l].max(0.0).sqrt() * u1[l];
    }
    v
}

/// Lower bound of the Eve SINR `|v|^2 / f_D` from its tangent at `(v_n, f_n)`.
pub fn eve_sinr_lower_bound(v_n: &DVector<f64>, f_n: f64, v: &DVector<f64>, f: f64) -> f64 {
    2.0 * v_n.dot(v) / f_n - v_n.norm_squared() / (f_n * f_n) * f
}
