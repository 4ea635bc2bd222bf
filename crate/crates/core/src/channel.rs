//! Uplink pilot training under the pilot-contamination attack.
//!
//! Pilot sequences are never materialized. Orthonormality means the
//! projection of the received block onto pilot `k` only carries user `k`,
//! plus the eavesdropper when `k` is the attacked user.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::NetworkDrop;

/// Default uplink pilot power (mW) for users and the eavesdropper.
pub const DEFAULT_PILOT_POWER_MW: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotConfig {
    pub tau_p: usize,
    /// Per-user pilot power in mW.
    pub p_users: Vec<f64>,
    /// Eavesdropper pilot power in mW; zero means no attack.
    pub p_eve: f64,
    /// Index of the user whose pilot the eavesdropper copies.
    pub attacked_user: usize,
}

impl PilotConfig {
    pub fn uniform(tau_p: usize, users: usize, p_user: f64, p_eve: f64) -> Self {
        Self { tau_p, p_users: vec![p_user; users], p_eve, attacked_user: 0 }
    }

    pub fn validate(&self, users: usize) -> Result<()> {
        if self.p_users.len() != users {
            return Err(Error::Dimension(format!(
                "{} pilot powers for {} users",
                self.p_users.len(),
                users
            )));
        }
        if self.tau_p < users {
            return Err(Error::NotEnoughPilots { tau_p: self.tau_p, users });
        }
        if self.attacked_user >= users {
            return Err(Error::InvalidConfig(format!(
                "attacked user {} out of range",
                self.attacked_user
            )));
        }
        if self.p_users.iter().chain(std::iter::once(&self.p_eve)).any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidConfig("pilot powers must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Same configuration with the eavesdropper silent.
    pub fn without_attack(&self) -> Self {
        Self { p_eve: 0.0, ..self.clone() }
    }
}

/// Large-scale gains and MMSE estimate variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStatistics {
    pub beta_users: DMatrix<f64>,
    pub beta_eve: DVector<f64>,
    pub gamma_users: DMatrix<f64>,
    pub gamma_eve: DVector<f64>,
    pub eve_active: bool,
    pub attacked_user: usize,
}

impl ChannelStatistics {
    pub fn aps(&self) -> usize {
        self.beta_users.nrows()
    }

    pub fn users(&self) -> usize {
        self.beta_users.ncols()
    }

    /// Computes the estimate variances from raw gains.
    ///
    /// `gamma_{l,k} = tau p_k beta_{l,k}^2 / (tau p_k beta_{l,k} + d_k tau p_e beta_{l,e} + 1)`
    /// and `gamma_{l,e} = tau p_e beta_{l,e}^2 / (tau p_1 beta_{l,1} + tau p_e beta_{l,e} + 1)`.
    pub fn from_gains(beta_users: DMatrix<f64>, beta_eve: DVector<f64>, pilots: &PilotConfig) -> Result<Self> {
        let (aps, users) = beta_users.shape();
        if beta_eve.len() != aps {
            return Err(Error::Dimension(format!("{} eve gains for {} APs", beta_eve.len(), aps)));
        }
        pilots.validate(users)?;
        let tau = pilots.tau_p as f64;
        let target = pilots.attacked_user;

        let mut gamma_users = DMatrix::zeros(aps, users);
        let mut gamma_eve = DVector::zeros(aps);
        for l in 0..aps {
            let eve_term = tau * pilots.p_eve * beta_eve[l];
            for k in 0..users {
                let own = tau * pilots.p_users[k] * beta_users[(l, k)];
                let contamination = if k == target { eve_term } else { 0.0 };
                gamma_users[(l, k)] = own * beta_users[(l, k)] / (own + contamination + 1.0);
            }
            let target_term = tau * pilots.p_users[target] * beta_users[(l, target)];
            gamma_eve[l] = eve_term * beta_eve[l] / (target_term + eve_term + 1.0);
        }

        Ok(Self {
            beta_users,
            beta_eve,
            gamma_users,
            gamma_eve,
            eve_active: pilots.p_eve > 0.0,
            attacked_user: target,
        })
    }
}

/// MMSE estimation statistics for a drop.
pub fn estimation_quality(drop: &NetworkDrop, pilots: &PilotConfig) -> Result<ChannelStatistics> {
    ChannelStatistics::from_gains(drop.beta_users.clone(), drop.beta_eve.clone(), pilots)
}

/// One small-scale fading realization with the matching MMSE estimates.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Per AP, an `antennas x users` matrix of true channels.
    pub h_users: Vec<DMatrix<Complex64>>,
    pub h_eve: Vec<DVector<Complex64>>,
    pub h_hat_users: Vec<DMatrix<Complex64>>,
    /// Estimate of the eavesdropper channel obtained from the attacked pilot.
    pub h_hat_eve: Vec<DVector<Complex64>>,
}

/// Draws a `CN(0, 1)` sample.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn sample_realization(
    stats: &ChannelStatistics,
    pilots: &PilotConfig,
    antennas: usize,
    seed: u64,
) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_realization_with(stats, pilots, antennas, &mut rng)
}

pub fn sample_realization_with<R: Rng + ?Sized>(
    stats: &ChannelStatistics,
    pilots: &PilotConfig,
    antennas: usize,
    rng: &mut R,
) -> ChannelRealization {
    let (aps, users) = (stats.aps(), stats.users());
    let tau = pilots.tau_p as f64;
    let target = stats.attacked_user;
    let eve_amp = (tau * pilots.p_eve).sqrt();

    let mut h_users = Vec::with_capacity(aps);
    let mut h_eve = Vec::with_capacity(aps);
    let mut h_hat_users = Vec::with_capacity(aps);
    let mut h_hat_eve = Vec::with_capacity(aps);

    for l in 0..aps {
        let h = DMatrix::from_fn(antennas, users, |_, k| {
            complex_normal(rng) * stats.beta_users[(l, k)].sqrt()
        });
        let he = DVector::from_fn(antennas, |_, _| complex_normal(rng) * stats.beta_eve[l].sqrt());
        let noise = DMatrix::from_fn(antennas, users, |_, _| complex_normal(rng));

        let mut h_hat = DMatrix::zeros(antennas, users);
        let mut he_hat = DVector::zeros(antennas);
        for k in 0..users {
            let amp = (tau * pilots.p_users[k]).sqrt();
            let mut y: DVector<Complex64> = h.column(k) * Complex64::from(amp) + noise.column(k);
            let mut denom = amp * amp * stats.beta_users[(l, k)] + 1.0;
            if k == target {
                y += &he * Complex64::from(eve_amp);
                denom += eve_amp * eve_amp * stats.beta_eve[l];
                let eve_coeff = eve_amp * stats.beta_eve[l] / denom;
                he_hat = &y * Complex64::from(eve_coeff);
            }
            let coeff = amp * stats.beta_users[(l, k)] / denom;
            h_hat.set_column(k, &(&y * Complex64::from(coeff)));
        }

        h_users.push(h);
        h_eve.push(he);
        h_hat_users.push(h_hat);
        h_hat_eve.push(he_hat);
    }

    ChannelRealization { h_users, h_eve, h_hat_users, h_hat_eve }
}
