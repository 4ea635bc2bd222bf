use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simplex tolerance for the resilience weights.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Weights of absorption, adaptation and recovery in the overall score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResilienceWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl ResilienceWeights {
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64) -> Result<Self> {
        let w = Self { lambda1, lambda2, lambda3 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let l = [self.lambda1, self.lambda2, self.lambda3];
        if l.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig(format!("resilience.lambda {l:?} has a negative or non-finite entry")));
        }
        let sum: f64 = l.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidConfig(format!("resilience.lambda {l:?} sums to {sum}, expected 1")));
        }
        Ok(())
    }
}

impl Default for ResilienceWeights {
    fn default() -> Self {
        Self { lambda1: 0.0, lambda2: 1.0, lambda3: 0.0 }
    }
}

/// `1 - Psi(t0)`, unclamped.
pub fn absorption(psi_at_t0: f64) -> f64 {
    1.0 - psi_at_t0
}

/// `1 - Psi(t_n)`, unclamped.
pub fn adaptation(psi_at_tn: f64) -> f64 {
    1.0 - psi_at_tn
}

/// 1 while the recovery is within the deadline, `T_d / (t_n - t0)` after.
pub fn recovery(t_n: f64, t0: f64, t_d: f64) -> f64 {
    let elapsed = t_n - t0;
    if elapsed <= t_d {
        1.0
    } else {
        t_d / elapsed
    }
}

pub fn overall(abs: f64, ada: f64, rec: f64, w: &ResilienceWeights) -> Result<f64> {
    w.validate()?;
    Ok(w.lambda1 * abs + w.lambda2 * ada + w.lambda3 * rec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scores() {
        assert_eq!(absorption(0.0), 1.0);
        assert_eq!(absorption(0.25), 0.75);
        assert_eq!(adaptation(2.0), -1.0);
        assert_eq!(recovery(750.0, 500.0, 500.0), 1.0);
        assert_eq!(recovery(1500.0, 500.0, 500.0), 0.5);
        assert_eq!(recovery(1000.0, 500.0, 500.0), 1.0);
        assert_eq!(recovery(500.0, 500.0, f64::INFINITY), 1.0);
    }

    #[test]
    fn weights() {
        let w = ResilienceWeights::new(0.0, 0.5, 0.5).unwrap();
        assert!((overall(0.3, 0.98, 1.0, &w).unwrap() - 0.99).abs() < 1e-15);
        assert!(ResilienceWeights::new(0.2, 0.2, 0.2).unwrap_err().to_string().contains("resilience.lambda"));
        assert!(ResilienceWeights::new(-0.1, 0.6, 0.5).is_err());
        assert!(ResilienceWeights::new(0.0, 0.5, 0.5 + 5e-10).is_ok());
    }
}
