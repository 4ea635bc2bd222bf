//! Monte Carlo check of every expectation the closed forms are built from.
//!
//! Each term pairs a per-realization statistic with the closed-form value of
//! its expectation. Samples are drawn in fixed-size chunks, each with its own
//! ChaCha stream, and reduced in chunk order so results do not depend on the
//! thread count.

use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::closed_form::{PowerAllocation, SinrCoefficients};
use super::partition::UserPartition;
use super::precoder::{build_precoders, ApPrecoders};
use crate::channel::{sample_realization_with, ChannelRealization, ChannelStatistics, PilotConfig};
use crate::error::{Error, Result};

const CHUNK: usize = 512;

/// Absolute slack for terms whose samples are all (numerically) identical.
const EXACT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    /// `|w_{l,k}|^2`, unit mean.
    BeamNorm { ap: usize, user: usize },
    /// `|v_l|^2`, unit mean.
    NoiseBeamNorm { ap: usize },
    /// `Re(h_{l,k}^H w_{l,k})`, mean `sqrt((M - |S_l|) gamma_{l,k})`.
    CoherentGain { ap: usize, user: usize },
    /// `|h_{l,k}^H w_{l,k}|^2`, mean `(M - |S_l|) gamma + beta - delta gamma`.
    OwnPower { ap: usize, user: usize },
    /// `|h_{l,k}^H w_{l,t}|^2` for `t != k`.
    CrossInterference { ap: usize, user: usize, beam: usize },
    /// `|hhat_{l,k}^H w_{l,t}|^2` for strong `k != t`, exactly zero.
    ZeroForcingResidual { ap: usize, user: usize, beam: usize },
    /// `|h_{l,k}^H v_l|^2`.
    NoiseLeakageUser { ap: usize, user: usize },
    /// `|h_{l,e}^H v_l|^2`.
    NoiseLeakageEve { ap: usize },
    /// `Re(h_{l,e}^H w_{l,1})`, mean `sqrt((M - |S_l|) gamma_{l,e})`.
    EveCoherentGain { ap: usize },
    /// `|h_{l,e}^H w_{l,1}|^2`.
    EveOwnPower { ap: usize },
    /// `|h_{l,e}^H w_{l,t}|^2` for `t != 1`.
    EveCrossInterference { ap: usize, beam: usize },
    /// `Re(sum_l sqrt(rho_{l,k}) h_{l,k}^H w_{l,k})`, mean `a_k^T u_k`.
    UserSignal { user: usize },
    /// Total received signal-plus-AN power of user `k`, mean `x_k^2 + phi_k - 1`.
    UserReceivedPower { user: usize },
    /// `|sum_l sqrt(rho_{l,1}) h_{l,e}^H w_{l,1}|^2`, mean `f_N`.
    EveSignalPower,
    /// Interference plus AN power at the eavesdropper, mean `f_D - 1`.
    EveInterferencePower,
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Term::BeamNorm { ap, user } => write!(f, "beam_norm[ap={ap},user={user}]"),
            Term::NoiseBeamNorm { ap } => write!(f, "an_beam_norm[ap={ap}]"),
            Term::CoherentGain { ap, user } => write!(f, "coherent_gain[ap={ap},user={user}]"),
            Term::OwnPower { ap, user } => write!(f, "own_power[ap={ap},user={user}]"),
            Term::CrossInterference { ap, user, beam } => {
                write!(f, "cross_interference[ap={ap},user={user},beam={beam}]")
            }
            Term::ZeroForcingResidual { ap, user, beam } => {
                write!(f, "zf_residual[ap={ap},user={user},beam={beam}]")
            }
            Term::NoiseLeakageUser { ap, user } => write!(f, "an_leakage[ap={ap},user={user}]"),
            Term::NoiseLeakageEve { ap } => write!(f, "an_leakage[ap={ap},eve]"),
            Term::EveCoherentGain { ap } => write!(f, "eve_coherent_gain[ap={ap}]"),
            Term::EveOwnPower { ap } => write!(f, "eve_own_power[ap={ap}]"),
            Term::EveCrossInterference { ap, beam } => write!(f, "eve_cross_interference[ap={ap},beam={beam}]"),
            Term::UserSignal { user } => write!(f, "user_signal[user={user}]"),
            Term::UserReceivedPower { user } => write!(f, "user_received_power[user={user}]"),
            Term::EveSignalPower => write!(f, "eve_signal_power"),
            Term::EveInterferencePower => write!(f, "eve_interference_power"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermEstimate {
    pub term: Term,
    pub closed_form: f64,
    pub empirical: f64,
    pub std_error: f64,
}

impl TermEstimate {
    /// Deviation in units of the standard error.
    pub fn z_score(&self) -> f64 {
        let diff = (self.empirical - self.closed_form).abs();
        if diff <= EXACT_TOLERANCE * (1.0 + self.closed_form.abs()) {
            0.0
        } else if self.std_error > 0.0 {
            diff / self.std_error
        } else {
            f64::INFINITY
        }
    }

    pub fn relative_error(&self) -> f64 {
        (self.empirical - self.closed_form).abs() / self.closed_form.abs().max(f64::MIN_POSITIVE)
    }

    pub fn within(&self, standard_errors: f64) -> bool {
        self.z_score() <= standard_errors
    }
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub samples: usize,
    pub terms: Vec<TermEstimate>,
}

impl OracleReport {
    pub fn failures(&self, standard_errors: f64) -> Vec<&TermEstimate> {
        self.terms.iter().filter(|t| !t.within(standard_errors)).collect()
    }

    pub fn find(&self, term: Term) -> Option<&TermEstimate> {
        self.terms.iter().find(|t| t.term == term)
    }
}

/// Walks every term in a fixed order, handing the closed form and the
/// per-realization statistic to `sink`.
fn visit_terms(
    coeffs: &SinrCoefficients,
    part: &UserPartition,
    alloc: &PowerAllocation,
    real: &ChannelRealization,
    pre: &[ApPrecoders],
    eve: bool,
    sink: &mut impl FnMut(Term, f64, f64),
) {
    let (aps, users) = (part.aps(), part.users());
    let target = coeffs.attacked_user;
    let inner = |a: nalgebra::DVectorView<Complex64>, b: nalgebra::DVectorView<Complex64>| a.dotc(&b);

    for l in 0..aps {
        let h = &real.h_users[l];
        let p = &pre[l];
        sink(Term::NoiseBeamNorm { ap: l }, 1.0, p.v.norm_squared());
        for k in 0..users {
            if coeffs.gain[(l, k)] > 0.0 {
                sink(Term::BeamNorm { ap: l, user: k }, 1.0, p.w.column(k).norm_squared());
            }
            let own = inner(h.column(k), p.w.column(k));
            sink(Term::CoherentGain { ap: l, user: k }, coeffs.gain[(l, k)], own.re);
            sink(
                Term::OwnPower { ap: l, user: k },
                coeffs.gain[(l, k)].powi(2) + coeffs.leak[(l, k)],
                own.norm_sqr(),
            );
            for t in (0..users).filter(|&t| t != k) {
                let value = inner(h.column(k), p.w.column(t)).norm_sqr();
                sink(Term::CrossInterference { ap: l, user: k, beam: t }, coeffs.leak[(l, k)], value);
                if part.is_strong(l, k) && part.is_strong(l, t) {
                    let residual = inner(real.h_hat_users[l].column(k), p.w.column(t)).norm_sqr();
                    sink(Term::ZeroForcingResidual { ap: l, user: k, beam: t }, 0.0, residual);
                }
            }
            let leak = inner(h.column(k), p.v.column(0)).norm_sqr();
            sink(Term::NoiseLeakageUser { ap: l, user: k }, coeffs.leak[(l, k)], leak);
        }
        if eve {
            let he = real.h_eve[l].column(0);
            sink(Term::NoiseLeakageEve { ap: l }, coeffs.eve_leak[l], inner(he, p.v.column(0)).norm_sqr());
            let own = inner(he, p.w.column(target));
            sink(Term::EveCoherentGain { ap: l }, coeffs.eve_gain[l], own.re);
            sink(Term::EveOwnPower { ap: l }, coeffs.eve_gain[l].powi(2) + coeffs.eve_leak[l], own.norm_sqr());
            for t in (0..users).filter(|&t| t != target) {
                let value = inner(he, p.w.column(t)).norm_sqr();
                sink(Term::EveCrossInterference { ap: l, beam: t }, coeffs.eve_leak[l], value);
            }
        }
    }

    // Allocation-weighted aggregates.
    fn beam_sum<'a>(
        rx: impl Fn(usize) -> nalgebra::DVectorView<'a, Complex64>,
        pre: &[ApPrecoders],
        alloc: &PowerAllocation,
        t: usize,
    ) -> Complex64 {
        (0..pre.len()).map(|l| rx(l).dotc(&pre[l].w.column(t)) * alloc.u_users[(l, t)]).sum()
    }
    fn noise_power<'a>(
        rx: impl Fn(usize) -> nalgebra::DVectorView<'a, Complex64>,
        pre: &[ApPrecoders],
        alloc: &PowerAllocation,
    ) -> f64 {
        (0..pre.len()).map(|l| alloc.rho_an(l) * rx(l).dotc(&pre[l].v.column(0)).norm_sqr()).sum()
    }
    for k in 0..users {
        let rx = |l: usize| real.h_users[l].column(k);
        let x = coeffs.coherent(k, alloc);
        let phi = coeffs.interference(k, alloc);
        let signal = beam_sum(rx, pre, alloc, k);
        sink(Term::UserSignal { user: k }, x, signal.re);
        let mut power: f64 = (0..users).map(|t| beam_sum(rx, pre, alloc, t).norm_sqr()).sum();
        power += noise_power(rx, pre, alloc);
        sink(Term::UserReceivedPower { user: k }, x * x + phi - 1.0, power);
    }
    if eve {
        let rx = |l: usize| real.h_eve[l].column(0);
        sink(Term::EveSignalPower, coeffs.eve_numerator(alloc), beam_sum(rx, pre, alloc, target).norm_sqr());
        let mut power: f64 = (0..users).filter(|&t| t != target).map(|t| beam_sum(rx, pre, alloc, t).norm_sqr()).sum();
        power += noise_power(rx, pre, alloc);
        sink(Term::EveInterferencePower, coeffs.eve_denominator(alloc) - 1.0, power);
    }
}

#[derive(Default, Clone)]
struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl Moments {
    fn merge(mut self, other: Moments) -> Moments {
        if self.sum.is_empty() {
            return other;
        }
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        self
    }
}

/// Estimates every expectation term from `n_samples` realizations.
pub fn oracle_expectations(
    stats: &ChannelStatistics,
    pilots: &PilotConfig,
    part: &UserPartition,
    alloc: &PowerAllocation,
    n_samples: usize,
    seed: u64,
) -> Result<OracleReport> {
    if n_samples < 2 {
        return Err(Error::InvalidConfig("oracle needs at least two samples".into()));
    }
    let coeffs = SinrCoefficients::new(stats, part);
    let eve = stats.eve_active;
    let chunks = n_samples.div_ceil(CHUNK);

    let per_chunk: Vec<Result<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(n_samples - c * CHUNK);
            let mut m = Moments::default();
            for _ in 0..count {
                let real = sample_realization_with(stats, pilots, part.antennas, &mut rng);
                let pre = build_precoders(&real, stats, part, &mut rng)?;
                let mut idx = 0;
                visit_terms(&coeffs, part, alloc, &real, &pre, eve, &mut |_, _, v| {
                    if idx == m.sum.len() {
                        m.sum.push(0.0);
                        m.sum_sq.push(0.0);
                    }
                    m.sum[idx] += v;
                    m.sum_sq[idx] += v * v;
                    idx += 1;
                });
            }
            Ok(m)
        })
        .collect();

    let mut total = Moments::default();
    for m in per_chunk {
        total = total.merge(m?);
    }

    // The term list and closed forms do not depend on the realization.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let real = sample_realization_with(stats, pilots, part.antennas, &mut rng);
    let pre = build_precoders(&real, stats, part, &mut rng)?;
    let mut specs = Vec::new();
    visit_terms(&coeffs, part, alloc, &real, &pre, eve, &mut |term, cf, _| specs.push((term, cf)));

    let n = n_samples as f64;
    let terms = specs
        .into_iter()
        .enumerate()
        .map(|(i, (term, closed_form))| {
            let mean = total.sum[i] / n;
            let var = ((total.sum_sq[i] / n - mean * mean) * n / (n - 1.0)).max(0.0);
            TermEstimate { term, closed_form, empirical: mean, std_error: (var / n).sqrt() }
        })
        .collect();
    Ok(OracleReport { samples: n_samples, terms })
}
