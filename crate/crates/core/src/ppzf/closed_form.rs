use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::partition::UserPartition;
use crate::channel::ChannelStatistics;
use crate::error::{Error, Result};

/// Per-AP amplitude coefficients: `u = sqrt(rho)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    /// `aps x users`.
    pub u_users: DMatrix<f64>,
    pub u_an: DVector<f64>,
}

impl PowerAllocation {
    pub fn zeros(aps: usize, users: usize) -> Self {
        Self { u_users: DMatrix::zeros(aps, users), u_an: DVector::zeros(aps) }
    }

    /// Splits `p_max[l]` with a fraction `an_fraction` going to artificial
    /// noise and the remainder shared evenly among the users.
    pub fn equal_split(p_max: &[f64], users: usize, an_fraction: f64) -> Self {
        let aps = p_max.len();
        let u_users = DMatrix::from_fn(aps, users, |l, _| (p_max[l] * (1.0 - an_fraction) / users as f64).sqrt());
        let u_an = DVector::from_fn(aps, |l, _| (p_max[l] * an_fraction).sqrt());
        Self { u_users, u_an }
    }

    pub fn aps(&self) -> usize {
        self.u_users.nrows()
    }

    pub fn users(&self) -> usize {
        self.u_users.ncols()
    }

    pub fn rho(&self, ap: usize, user: usize) -> f64 {
        self.u_users[(ap, user)].powi(2)
    }

    pub fn rho_an(&self, ap: usize) -> f64 {
        self.u_an[ap].powi(2)
    }

    pub fn ap_power(&self, ap: usize) -> f64 {
        self.u_users.row(ap).norm_squared() + self.u_an[ap].powi(2)
    }

    /// Flattens as `[u_{.,1}; ...; u_{.,K}; u_AN]`, each block of length `L`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.u_users.as_slice().to_vec();
        v.extend_from_slice(self.u_an.as_slice());
        v
    }

    pub fn from_vec(aps: usize, users: usize, v: &[f64]) -> Result<Self> {
        if v.len() != aps * (users + 1) {
            return Err(Error::Dimension(format!("allocation vector of length {}", v.len())));
        }
        Ok(Self {
            u_users: DMatrix::from_column_slice(aps, users, &v[..aps * users]),
            u_an: DVector::from_column_slice(&v[aps * users..]),
        })
    }

    /// Checks non-negativity and the per-AP budget with absolute slack `tol`.
    pub fn check_budget(&self, p_max: &[f64], tol: f64) -> Result<()> {
        if self.u_users.iter().chain(self.u_an.iter()).any(|u| !u.is_finite() || *u < -tol) {
            return Err(Error::InvalidConfig("negative or non-finite amplitude".into()));
        }
        for (l, cap) in p_max.iter().enumerate() {
            let used = self.ap_power(l);
            if used > cap + tol {
                return Err(Error::InvalidConfig(format!("AP {l} uses {used} > {cap}")));
            }
        }
        Ok(())
    }
}

/// Closed-form performance of one allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub sinr_users: Vec<f64>,
    pub se_users: Vec<f64>,
    pub sinr_eve: Option<f64>,
    pub se_eve: Option<f64>,
    /// `[SE_target - SE_eve]^+`, absent when no eavesdropper is active.
    pub sse_target: Option<f64>,
    pub attacked_user: usize,
}

impl PerformanceReport {
    /// Secrecy rate of the attacked user, or its plain rate when nobody
    /// eavesdrops.
    pub fn secrecy_or_rate(&self) -> f64 {
        self.sse_target.unwrap_or(self.se_users[self.attacked_user])
    }
}

pub fn spectral_efficiency(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

pub fn secrecy_gap(se_user: f64, se_eve: f64) -> f64 {
    (se_user - se_eve).max(0.0)
}

fn leak(stats: &ChannelStatistics, part: &UserPartition, l: usize, k: usize) -> f64 {
    let g = if part.is_strong(l, k) { stats.gamma_users[(l, k)] } else { 0.0 };
    stats.beta_users[(l, k)] - g
}

fn eve_leak(stats: &ChannelStatistics, part: &UserPartition, l: usize) -> f64 {
    let g = if part.is_strong(l, stats.attacked_user) { stats.gamma_eve[l] } else { 0.0 };
    stats.beta_eve[l] - g
}

/// SINR of user `k`, summed term by term over APs and power coefficients.
pub fn sinr_user(k: usize, alloc: &PowerAllocation, stats: &ChannelStatistics, part: &UserPartition) -> f64 {
    let (aps, users) = (stats.aps(), stats.users());
    let coherent: f64 = (0..aps)
        .map(|l| (part.free_dims(l) as f64 * alloc.rho(l, k) * stats.gamma_users[(l, k)]).sqrt())
        .sum();
    let mut interference = 0.0;
    for t in 0..users {
        for l in 0..aps {
            interference += alloc.rho(l, t) * leak(stats, part, l, k);
        }
    }
    let an: f64 = (0..aps).map(|l| alloc.rho_an(l) * leak(stats, part, l, k)).sum();
    coherent * coherent / (interference + an + 1.0)
}

/// SINR of the eavesdropper listening to the attacked user.
pub fn sinr_eve(alloc: &PowerAllocation, stats: &ChannelStatistics, part: &UserPartition) -> Result<f64> {
    if !stats.eve_active {
        return Err(Error::EveInactive);
    }
    let (aps, users) = (stats.aps(), stats.users());
    let target = stats.attacked_user;
    let coherent: f64 = (0..aps)
        .map(|l| (alloc.rho(l, target) * part.free_dims(l) as f64 * stats.gamma_eve[l]).sqrt())
        .sum();
    let own_power: f64 = (0..aps).map(|l| alloc.rho(l, target) * stats.beta_eve[l]).sum();
    let nulled: f64 = part.zf_aps[target].iter().map(|&l| alloc.rho(l, target) * stats.gamma_eve[l]).sum();

    let mut interference = 0.0;
    for t in (0..users).filter(|&t| t != target) {
        for l in 0..aps {
            interference += alloc.rho(l, t) * eve_leak(stats, part, l);
        }
    }
    let an: f64 = (0..aps).map(|l| alloc.rho_an(l) * eve_leak(stats, part, l)).sum();
    Ok((coherent * coherent + own_power - nulled) / (interference + an + 1.0))
}

/// Full closed-form report; secrecy fields are `None` without an active
/// eavesdropper.
pub fn evaluate(alloc: &PowerAllocation, stats: &ChannelStatistics, part: &UserPartition) -> PerformanceReport {
    let sinr_users: Vec<f64> = (0..stats.users()).map(|k| sinr_user(k, alloc, stats, part)).collect();
    let se_users: Vec<f64> = sinr_users.iter().map(|s| spectral_efficiency(*s)).collect();
    let sinr_eve = sinr_eve(alloc, stats, part).ok();
    let se_eve = sinr_eve.map(spectral_efficiency);
    let sse_target = se_eve.map(|e| secrecy_gap(se_users[stats.attacked_user], e));
    PerformanceReport { sinr_users, se_users, sinr_eve, se_eve, sse_target, attacked_user: stats.attacked_user }
}

/// Vectorized form of the SINR expressions.
///
/// User `k` sees `(a_k^T u_k)^2 / phi_k(u)` with
/// `phi_k(u) = sum_t |A_k u_t|^2 + |A_k u_AN|^2 + 1`; the eavesdropper sees
/// `((b^T u_1)^2 + |B u_1|^2) / (sum_{t != 1} |B u_t|^2 + |B u_AN|^2 + 1)`.
/// The diagonal matrices are stored squared.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrCoefficients {
    /// `a_{l,k} = sqrt((M - |S_l|) gamma_{l,k})`.
    pub gain: DMatrix<f64>,
    /// `beta_{l,k} - delta_{l,k} gamma_{l,k}`.
    pub leak: DMatrix<f64>,
    pub eve_gain: DVector<f64>,
    pub eve_leak: DVector<f64>,
    pub attacked_user: usize,
    pub eve_active: bool,
}

impl SinrCoefficients {
    pub fn new(stats: &ChannelStatistics, part: &UserPartition) -> Self {
        let (aps, users) = (stats.aps(), stats.users());
        let gain = DMatrix::from_fn(aps, users, |l, k| (part.free_dims(l) as f64 * stats.gamma_users[(l, k)]).sqrt());
        let leak = DMatrix::from_fn(aps, users, |l, k| leak(stats, part, l, k));
        let eve_gain = DVector::from_fn(aps, |l, _| (part.free_dims(l) as f64 * stats.gamma_eve[l]).sqrt());
        let eve_leak = DVector::from_fn(aps, |l, _| eve_leak(stats, part, l));
        Self { gain, leak, eve_gain, eve_leak, attacked_user: stats.attacked_user, eve_active: stats.eve_active }
    }

    pub fn aps(&self) -> usize {
        self.gain.nrows()
    }

    pub fn users(&self) -> usize {
        self.gain.ncols()
    }

    /// Per-AP transmit power `sum_t u_{l,t}^2 + u_{AN,l}^2`.
    fn ap_powers(u: &PowerAllocation) -> DVector<f64> {
        DVector::from_fn(u.aps(), |l, _| u.ap_power(l))
    }

    /// `a_k^T u_k`.
    pub fn coherent(&self, k: usize, u: &PowerAllocation) -> f64 {
        self.gain.column(k).dot(&u.u_users.column(k))
    }

    /// `phi_k(u)`.
    pub fn interference(&self, k: usize, u: &PowerAllocation) -> f64 {
        self.leak.column(k).dot(&Self::ap_powers(u)) + 1.0
    }

    /// Gradient of `phi_k` in the flattened layout of [`PowerAllocation::to_vec`].
    pub fn interference_gradient(&self, k: usize, u: &PowerAllocation) -> Vec<f64> {
        let (aps, users) = (self.aps(), self.users());
        let mut g = Vec::with_capacity(aps * (users + 1));
        for t in 0..users {
            g.extend((0..aps).map(|l| 2.0 * self.leak[(l, k)] * u.u_users[(l, t)]));
        }
        g.extend((0..aps).map(|l| 2.0 * self.leak[(l, k)] * u.u_an[l]));
        g
    }

    pub fn sinr_user(&self, k: usize, u: &PowerAllocation) -> f64 {
        self.coherent(k, u).powi(2) / self.interference(k, u)
    }

    /// `(b^T u_1)^2 + |B u_1|^2`.
    pub fn eve_numerator(&self, u: &PowerAllocation) -> f64 {
        let u1 = u.u_users.column(self.attacked_user);
        self.eve_gain.dot(&u1).powi(2) + self.eve_leak.dot(&u1.component_mul(&u1))
    }

    /// `f_D(u)`.
    pub fn eve_denominator(&self, u: &PowerAllocation) -> f64 {
        let target = self.attacked_user;
        let mut total = 1.0;
        for l in 0..self.aps() {
            let others: f64 = (0..self.users()).filter(|&t| t != target).map(|t| u.u_users[(l, t)].powi(2)).sum();
            total += self.eve_leak[l] * (others + u.u_an[l].powi(2));
        }
        total
    }

    /// Gradient of `f_D` in the flattened layout.
    pub fn eve_denominator_gradient(&self, u: &PowerAllocation) -> Vec<f64> {
        let (aps, users) = (self.aps(), self.users());
        let mut g = Vec::with_capacity(aps * (users + 1));
        for t in 0..users {
            if t == self.attacked_user {
                g.extend(std::iter::repeat(0.0).take(aps));
            } else {
                g.extend((0..aps).map(|l| 2.0 * self.eve_leak[l] * u.u_users[(l, t)]));
            }
        }
        g.extend((0..aps).map(|l| 2.0 * self.eve_leak[l] * u.u_an[l]));
        g
    }

    pub fn sinr_eve(&self, u: &PowerAllocation) -> Result<f64> {
        if !self.eve_active {
            return Err(Error::EveInactive);
        }
        Ok(self.eve_numerator(u) / self.eve_denominator(u))
    }

    /// Same content as [`evaluate`], computed from the vectorized forms.
    pub fn report(&self, u: &PowerAllocation) -> PerformanceReport {
        let sinr_users: Vec<f64> = (0..self.users()).map(|k| self.sinr_user(k, u)).collect();
        let se_users: Vec<f64> = sinr_users.iter().map(|s| spectral_efficiency(*s)).collect();
        let sinr_eve = self.sinr_eve(u).ok();
        let se_eve = sinr_eve.map(spectral_efficiency);
        let sse_target = se_eve.map(|e| secrecy_gap(se_users[self.attacked_user], e));
        PerformanceReport { sinr_users, se_users, sinr_eve, se_eve, sse_target, attacked_user: self.attacked_user }
    }
}
