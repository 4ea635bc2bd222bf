use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ppzf::PerformanceReport;

/// Desired and minimum service levels plus the priority between the
/// attacked user's secrecy and everyone else's rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceTargets {
    /// Desired secrecy spectral efficiency of the attacked user (bit/s/Hz).
    pub sse_des: f64,
    pub se_des: Vec<f64>,
    pub se_min: Vec<f64>,
    pub omega1: f64,
    pub omega2: f64,
}

impl ServiceTargets {
    pub fn uniform(users: usize, sse_des: f64, se_des: f64, se_min: f64, omega: (f64, f64)) -> Self {
        Self {
            sse_des,
            se_des: vec![se_des; users],
            se_min: vec![se_min; users],
            omega1: omega.0,
            omega2: omega.1,
        }
    }

    /// Same service levels with a different priority split.
    pub fn with_omega(&self, omega1: f64, omega2: f64) -> Self {
        Self { omega1, omega2, ..self.clone() }
    }

    pub fn users(&self) -> usize {
        self.se_des.len()
    }

    pub fn validate(&self, users: usize) -> Result<()> {
        if self.se_des.len() != users || self.se_min.len() != users {
            return Err(Error::Dimension(format!("service targets for {} users", self.se_des.len())));
        }
        if !(self.sse_des > 0.0) || self.se_des.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidConfig("desired efficiencies must be positive".into()));
        }
        if self.se_min.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidConfig("minimum efficiencies must be non-negative".into()));
        }
        if !(self.omega1 >= 0.0 && self.omega2 >= 0.0) || (self.omega1 + self.omega2 - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "priority weights ({}, {}) must be non-negative and sum to one",
                self.omega1, self.omega2
            )));
        }
        Ok(())
    }
}

/// Squared relative gap `(value / target - 1)^2`.
pub fn relative_gap(value: f64, target: f64) -> f64 {
    (value / target - 1.0).powi(2)
}

/// Weighted squared gap between achieved and desired performance.
///
/// The secrecy term uses the attacked user's plain rate when no eavesdropper
/// is active. With a single user the rate term is empty and contributes zero.
pub fn psi_omega(report: &PerformanceReport, targets: &ServiceTargets) -> f64 {
    let users = report.se_users.len();
    let secrecy = targets.omega1 * relative_gap(report.secrecy_or_rate(), targets.sse_des);
    if users < 2 {
        return secrecy;
    }
    let rates: f64 = (0..users)
        .filter(|&k| k != report.attacked_user)
        .map(|k| relative_gap(report.se_users[k], targets.se_des[k]))
        .sum();
    secrecy + targets.omega2 / (users - 1) as f64 * rates
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(se: Vec<f64>, sse: Option<f64>) -> PerformanceReport {
        PerformanceReport {
            sinr_users: se.iter().map(|s| 2f64.powf(*s) - 1.0).collect(),
            se_users: se,
            sinr_eve: None,
            se_eve: None,
            sse_target: sse,
            attacked_user: 0,
        }
    }

    #[test]
    fn exact_targets_give_zero() {
        let t = ServiceTargets::uniform(3, 3.0, 5.0, 0.1, (0.5, 0.5));
        assert_eq!(psi_omega(&report(vec![4.0, 5.0, 5.0], Some(3.0)), &t), 0.0);
    }

    #[test]
    fn secrecy_only() {
        let t = ServiceTargets::uniform(3, 3.0, 5.0, 0.1, (1.0, 0.0));
        assert_eq!(psi_omega(&report(vec![4.0, 1.0, 9.0], Some(1.5)), &t), 0.25);
    }

    #[test]
    fn rates_only() {
        let t = ServiceTargets::uniform(3, 3.0, 5.0, 0.1, (0.0, 1.0));
        let v = psi_omega(&report(vec![0.0, 6.0, 4.0], Some(0.0)), &t);
        assert!((v - 0.04).abs() < 1e-15);
    }

    #[test]
    fn single_user_has_no_rate_term() {
        let t = ServiceTargets::uniform(1, 2.0, 5.0, 0.1, (0.5, 0.5));
        assert_eq!(psi_omega(&report(vec![3.0], Some(1.0)), &t), 0.5 * 0.25);
    }

    #[test]
    fn validation() {
        assert!(ServiceTargets::uniform(2, 3.0, 5.0, 0.1, (0.3, 0.3)).validate(2).is_err());
        assert!(ServiceTargets::uniform(2, 0.0, 5.0, 0.1, (0.5, 0.5)).validate(2).is_err());
        assert!(ServiceTargets::uniform(2, 3.0, 5.0, 0.1, (0.5, 0.5)).validate(3).is_err());
        assert!(ServiceTargets::uniform(2, 3.0, 5.0, 0.1, (0.2, 0.8)).validate(2).is_ok());
    }
}
