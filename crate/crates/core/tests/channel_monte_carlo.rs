use cfres_core::channel::{sample_realization_with, ChannelStatistics, PilotConfig};
use cfres_core::ppzf::{build_precoders, UserPartition};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ANTENNAS: usize = 4;
const DRAWS: usize = 100_000;

fn instance() -> (ChannelStatistics, PilotConfig) {
    let beta = DMatrix::from_row_slice(2, 3, &[1.0, 0.5, 0.05, 0.02, 1.0, 0.8]);
    let pilots = PilotConfig::uniform(3, 3, 4.0, 3.0);
    let stats = ChannelStatistics::from_gains(beta, DVector::from_row_slice(&[0.6, 0.3]), &pilots).unwrap();
    (stats, pilots)
}

/// Per (AP, user): sum of |hhat|^2, |h - hhat|^2, hhat^* (h - hhat) over
/// antennas and draws.
struct Moments {
    est: DMatrix<f64>,
    err: DMatrix<f64>,
    cross: DMatrix<num_complex::Complex64>,
    eve_est: DVector<f64>,
}

fn moments(stats: &ChannelStatistics, pilots: &PilotConfig) -> Moments {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (aps, users) = (stats.aps(), stats.users());
    let mut m = Moments {
        est: DMatrix::zeros(aps, users),
        err: DMatrix::zeros(aps, users),
        cross: DMatrix::zeros(aps, users),
        eve_est: DVector::zeros(aps),
    };
    for _ in 0..DRAWS {
        let r = sample_realization_with(stats, pilots, ANTENNAS, &mut rng);
        for l in 0..aps {
            for k in 0..users {
                for a in 0..ANTENNAS {
                    let hat = r.h_hat_users[l][(a, k)];
                    let e = r.h_users[l][(a, k)] - hat;
                    m.est[(l, k)] += hat.norm_sqr();
                    m.err[(l, k)] += e.norm_sqr();
                    m.cross[(l, k)] += hat.conj() * e;
                }
            }
            m.eve_est[l] += r.h_hat_eve[l].norm_squared();
        }
    }
    m
}

#[test]
fn estimates_match_mmse_statistics() {
    let (stats, pilots) = instance();
    let m = moments(&stats, &pilots);
    let n = DRAWS as f64;
    for l in 0..stats.aps() {
        for k in 0..stats.users() {
            let (beta, gamma) = (stats.beta_users[(l, k)], stats.gamma_users[(l, k)]);
            let per_antenna = m.est[(l, k)] / (n * ANTENNAS as f64);
            assert!((per_antenna / gamma - 1.0).abs() < 0.01, "var hhat[{l},{k}] {per_antenna} vs {gamma}");
            // E|hhat|^2 over the whole vector
            let norm = m.est[(l, k)] / n;
            assert!((norm / (ANTENNAS as f64 * gamma) - 1.0).abs() < 0.01);
            let err = m.err[(l, k)] / (n * ANTENNAS as f64);
            assert!((err / (beta - gamma) - 1.0).abs() < 0.01, "error var [{l},{k}] {err} vs {}", beta - gamma);
            let cross = m.cross[(l, k)].norm() / (n * ANTENNAS as f64) / (gamma * (beta - gamma)).sqrt();
            assert!(cross < 1e-2, "estimate/error correlation [{l},{k}] {cross}");
        }
        let eve = m.eve_est[l] / (n * ANTENNAS as f64);
        assert!((eve / stats.gamma_eve[l] - 1.0).abs() < 0.01, "eve estimate [{l}] {eve}");
    }
}

#[test]
fn eve_and_target_estimates_are_collinear() {
    let (stats, pilots) = instance();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..1000 {
        let r = sample_realization_with(&stats, &pilots, ANTENNAS, &mut rng);
        for l in 0..stats.aps() {
            let a = r.h_hat_users[l].column(0);
            let b = &r.h_hat_eve[l];
            let cos = a.dotc(b).norm() / (a.norm() * b.norm());
            assert!((cos - 1.0).abs() < 1e-12, "{cos}");
        }
    }
}

#[test]
fn precoders_have_unit_mean_norm() {
    let (stats, pilots) = instance();
    let part = UserPartition::from_strong_sets(ANTENNAS, 3, vec![vec![0, 1], vec![1, 2]]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let draws = 10_000;
    let mut w = DMatrix::<f64>::zeros(2, 3);
    let mut v = DVector::<f64>::zeros(2);
    for _ in 0..draws {
        let r = sample_realization_with(&stats, &pilots, ANTENNAS, &mut rng);
        let pre = build_precoders(&r, &stats, &part, &mut rng).unwrap();
        for (l, p) in pre.iter().enumerate() {
            for k in 0..3 {
                w[(l, k)] += p.w.column(k).norm_squared();
            }
            v[l] += p.v.norm_squared();
        }
    }
    for l in 0..2 {
        for k in 0..3 {
            let mean = w[(l, k)] / draws as f64;
            let kind = if part.is_strong(l, k) { "pzf" } else { "pmrt" };
            assert!((mean - 1.0).abs() < 0.03, "{kind} beam [{l},{k}] {mean}");
        }
        assert!((v[l] / draws as f64 - 1.0).abs() < 0.03, "an beam [{l}]");
    }
}

proptest! {
    #[test]
    fn eve_power_only_degrades_the_attacked_user(
        beta in prop::collection::vec(1e-4..10.0f64, 6),
        beta_e in prop::collection::vec(1e-4..10.0f64, 2),
        p_lo in 0.0..50.0f64,
        dp in 0.0..100.0f64,
    ) {
        let gains = DMatrix::from_row_slice(2, 3, &beta);
        let eg = DVector::from_row_slice(&beta_e);
        let lo = ChannelStatistics::from_gains(gains.clone(), eg.clone(), &PilotConfig::uniform(3, 3, 100.0, p_lo)).unwrap();
        let hi = ChannelStatistics::from_gains(gains, eg, &PilotConfig::uniform(3, 3, 100.0, p_lo + dp)).unwrap();
        for l in 0..2 {
            prop_assert!(hi.gamma_users[(l, 0)] <= lo.gamma_users[(l, 0)]);
            for k in 1..3 {
                prop_assert_eq!(hi.gamma_users[(l, k)], lo.gamma_users[(l, k)]);
            }
        }
    }
}
