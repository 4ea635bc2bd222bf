//! Randomized instances with a term-by-term reference for the SINR closed
//! forms.
#![allow(dead_code)]

use cfres_core::channel::{ChannelStatistics, PilotConfig};
use cfres_core::ppzf::{PowerAllocation, UserPartition};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Raw inputs of one randomized instance.
pub struct Instance {
    pub antennas: usize,
    pub beta: Vec<Vec<f64>>,
    pub beta_e: Vec<f64>,
    pub tau: f64,
    pub p: Vec<f64>,
    pub p_e: f64,
    pub target: usize,
    pub strong: Vec<Vec<usize>>,
    pub rho: Vec<Vec<f64>>,
    pub rho_an: Vec<f64>,
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let aps = rng.gen_range(1..7);
    let users = rng.gen_range(1..7);
    let antennas = rng.gen_range(2..9);
    let beta = (0..aps).map(|_| (0..users).map(|_| log_uniform(rng, 1e-3, 1e2)).collect()).collect();
    let beta_e = (0..aps).map(|_| log_uniform(rng, 1e-3, 1e2)).collect();
    let mut strong = Vec::new();
    for _ in 0..aps {
        let mut all: Vec<usize> = (0..users).collect();
        all.shuffle(rng);
        let n = rng.gen_range(0..=users.min(antennas - 1));
        strong.push(all[..n].to_vec());
    }
    Instance {
        antennas,
        beta,
        beta_e,
        tau: rng.gen_range(users..users + 4) as f64,
        p: (0..users).map(|_| rng.gen_range(1.0..200.0)).collect(),
        p_e: if rng.gen_bool(0.8) { rng.gen_range(0.5..200.0) } else { 0.0 },
        target: rng.gen_range(0..users),
        strong,
        rho: (0..aps).map(|_| (0..users).map(|_| rng.gen_range(0.0..50.0)).collect()).collect(),
        rho_an: (0..aps).map(|_| if rng.gen_bool(0.7) { rng.gen_range(0.0..50.0) } else { 0.0 }).collect(),
    }
}

impl Instance {
    pub fn aps(&self) -> usize {
        self.beta.len()
    }

    pub fn users(&self) -> usize {
        self.p.len()
    }

    pub fn delta(&self, l: usize, k: usize) -> f64 {
        if self.strong[l].contains(&k) {
            1.0
        } else {
            0.0
        }
    }

    pub fn free(&self, l: usize) -> f64 {
        (self.antennas - self.strong[l].len()) as f64
    }

    pub fn gamma(&self, l: usize, k: usize) -> f64 {
        let contamination = if k == self.target { self.tau * self.p_e * self.beta_e[l] } else { 0.0 };
        self.tau * self.p[k] * self.beta[l][k].powi(2) / (self.tau * self.p[k] * self.beta[l][k] + contamination + 1.0)
    }

    pub fn gamma_e(&self, l: usize) -> f64 {
        let t = self.target;
        self.tau * self.p_e * self.beta_e[l].powi(2)
            / (self.tau * self.p[t] * self.beta[l][t] + self.tau * self.p_e * self.beta_e[l] + 1.0)
    }

    /// Scalar user SINR written out term by term. `g` and `ge` are the
    /// estimate variances; `beta - gamma` cancels badly when pilots are
    /// strong, so the same values must feed both sides of a comparison.
    pub fn sinr_k(&self, k: usize, g: &DMatrix<f64>) -> f64 {
        let (aps, users) = (self.aps(), self.users());
        let mut num = 0.0;
        for l in 0..aps {
            num += (self.free(l) * self.rho[l][k] * g[(l, k)]).sqrt();
        }
        let mut den = 1.0;
        for t in 0..users {
            for l in 0..aps {
                den += self.rho[l][t] * (self.beta[l][k] - self.delta(l, k) * g[(l, k)]);
            }
        }
        for l in 0..aps {
            den += self.rho_an[l] * (self.beta[l][k] - self.delta(l, k) * g[(l, k)]);
        }
        num * num / den
    }

    pub fn sinr_e(&self, ge: &DVector<f64>) -> f64 {
        let (aps, users, t1) = (self.aps(), self.users(), self.target);
        let mut coherent = 0.0;
        let mut power = 0.0;
        let mut nulled = 0.0;
        for l in 0..aps {
            coherent += (self.rho[l][t1] * self.free(l) * ge[l]).sqrt();
            power += self.rho[l][t1] * self.beta_e[l];
            if self.strong[l].contains(&t1) {
                nulled += self.rho[l][t1] * ge[l];
            }
        }
        let mut den = 1.0;
        for t in (0..users).filter(|&t| t != t1) {
            for l in 0..aps {
                den += self.rho[l][t] * (self.beta_e[l] - self.delta(l, t1) * ge[l]);
            }
        }
        for l in 0..aps {
            den += self.rho_an[l] * (self.beta_e[l] - self.delta(l, t1) * ge[l]);
        }
        (coherent * coherent + power - nulled) / den
    }

    pub fn build(&self) -> (ChannelStatistics, UserPartition, PowerAllocation) {
        let (aps, users) = (self.aps(), self.users());
        let pilots = PilotConfig { tau_p: self.tau as usize, p_users: self.p.clone(), p_eve: self.p_e, attacked_user: self.target };
        let stats = ChannelStatistics::from_gains(
            DMatrix::from_fn(aps, users, |l, k| self.beta[l][k]),
            DVector::from_vec(self.beta_e.clone()),
            &pilots,
        )
        .unwrap();
        let part = UserPartition::from_strong_sets(self.antennas, users, self.strong.clone()).unwrap();
        let alloc = PowerAllocation {
            u_users: DMatrix::from_fn(aps, users, |l, k| self.rho[l][k].sqrt()),
            u_an: DVector::from_fn(aps, |l, _| self.rho_an[l].sqrt()),
        };
        (stats, part, alloc)
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Seeded stream for instance generation.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
