use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use super::partition::UserPartition;
use crate::channel::{complex_normal, ChannelRealization, ChannelStatistics};
use crate::error::{Error, Result};

/// Relative pivot below which the strong-user Gram matrix counts as singular.
const RANK_TOLERANCE: f64 = 1e-12;

/// Precoders of one AP for one channel realization.
#[derive(Debug, Clone)]
pub struct ApPrecoders {
    /// Projector onto the orthogonal complement of the strong users' estimates.
    pub projector: DMatrix<Complex64>,
    /// `antennas x users`; column `k` is PZF when `k` is strong, PMRT otherwise.
    pub w: DMatrix<Complex64>,
    /// Artificial-noise beam.
    pub v: DVector<Complex64>,
}

/// Builds PZF, PMRT and AN beams at every AP.
///
/// PZF columns come from the pseudo-inverse of the strong users' estimates,
/// scaled by `sqrt((M - |S_l|) gamma)`; PMRT and AN beams are projected by
/// `B_l` and normalized by their expected norms, so each beam has unit mean
/// squared norm.
pub fn build_precoders<R: Rng + ?Sized>(
    real: &ChannelRealization,
    stats: &ChannelStatistics,
    part: &UserPartition,
    rng: &mut R,
) -> Result<Vec<ApPrecoders>> {
    let antennas = part.antennas;
    let users = part.users();
    (0..part.aps())
        .map(|l| {
            let strong = &part.strong_sets[l];
            let h_hat = &real.h_hat_users[l];
            let free = part.free_dims(l) as f64;
            let mut w = DMatrix::zeros(antennas, users);

            let projector = if strong.is_empty() {
                DMatrix::identity(antennas, antennas)
            } else {
                let hs = h_hat.select_columns(strong.iter());
                let gram = hs.adjoint() * &hs;
                let scale = gram.diagonal().iter().map(|d| d.re).fold(0.0, f64::max);
                let chol = gram.cholesky().ok_or(Error::RankDeficient { ap: l })?;
                let pivots = chol.l_dirty().diagonal();
                if pivots.iter().any(|p| p.re * p.re <= RANK_TOLERANCE * scale) {
                    return Err(Error::RankDeficient { ap: l });
                }
                let pinv = hs.clone() * chol.inverse();
                for (j, &k) in strong.iter().enumerate() {
                    let s = (free * stats.gamma_users[(l, k)]).sqrt();
                    w.set_column(k, &(pinv.column(j) * Complex64::from(s)));
                }
                DMatrix::identity(antennas, antennas) - &pinv * hs.adjoint()
            };

            for &k in &part.weak_sets[l] {
                let norm = (free * stats.gamma_users[(l, k)]).sqrt();
                if norm > 0.0 {
                    w.set_column(k, &(&projector * h_hat.column(k) / Complex64::from(norm)));
                }
            }

            let a = DVector::from_fn(antennas, |_, _| complex_normal(rng));
            let v = &projector * a / Complex64::from(free.sqrt());
            Ok(ApPrecoders { projector, w, v })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_realization, PilotConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (ChannelStatistics, PilotConfig, UserPartition) {
        let beta = DMatrix::from_row_slice(2, 3, &[1.0, 0.5, 0.05, 0.02, 1.0, 0.8]);
        let pilots = PilotConfig::uniform(3, 3, 5.0, 5.0);
        let stats = ChannelStatistics::from_gains(beta, DVector::from_row_slice(&[0.6, 0.3]), &pilots).unwrap();
        let part = UserPartition::from_strong_sets(4, 3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        (stats, pilots, part)
    }

    #[test]
    fn pseudo_inverse_and_projector_identities() {
        let (stats, pilots, part) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..20 {
            let real = sample_realization(&stats, &pilots, 4, seed);
            let pre = build_precoders(&real, &stats, &part, &mut rng).unwrap();
            for (l, p) in pre.iter().enumerate() {
                let free = part.free_dims(l) as f64;
                for &k in &part.strong_sets[l] {
                    for &t in &part.strong_sets[l] {
                        let inner = real.h_hat_users[l].column(k).dotc(&p.w.column(t));
                        let expected = if k == t { (free * stats.gamma_users[(l, t)]).sqrt() } else { 0.0 };
                        assert!((inner - Complex64::from(expected)).norm() < 1e-9);
                    }
                    let nulled = &p.projector * real.h_hat_users[l].column(k);
                    assert!(nulled.norm() < 1e-9);
                }
                assert!((&p.projector * &p.projector - &p.projector).norm() < 1e-9);
                assert!((p.projector.adjoint() - &p.projector).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn empty_strong_set_uses_identity() {
        let (stats, pilots, _) = setup();
        let part = UserPartition::from_strong_sets(4, 3, vec![vec![], vec![]]).unwrap();
        let real = sample_realization(&stats, &pilots, 4, 1);
        let pre = build_precoders(&real, &stats, &part, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!((&pre[0].projector - DMatrix::<Complex64>::identity(4, 4)).norm() == 0.0);
    }

    #[test]
    fn duplicate_estimates_are_rank_deficient() {
        let (stats, pilots, part) = setup();
        let mut real = sample_realization(&stats, &pilots, 4, 2);
        let c = real.h_hat_users[1].column(1).into_owned();
        real.h_hat_users[1].set_column(2, &(c * Complex64::new(0.0, 2.0)));
        let err = build_precoders(&real, &stats, &part, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert_eq!(err, Error::RankDeficient { ap: 1 });
    }
}
