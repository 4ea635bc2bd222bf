use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelStatistics;
use crate::error::{Error, Result};

/// Strong/weak user split at every AP.
///
/// Strong users at AP `l` are served by partial zero-forcing; weak users and
/// the artificial noise live in the orthogonal complement of the strong
/// users' estimated channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserPartition {
    pub antennas: usize,
    pub strong_sets: Vec<Vec<usize>>,
    pub weak_sets: Vec<Vec<usize>>,
    /// APs at which each user is strong.
    pub zf_aps: Vec<Vec<usize>>,
    /// APs at which each user is weak.
    pub mrt_aps: Vec<Vec<usize>>,
    /// `aps x users`, true iff the user is strong at the AP.
    pub delta: DMatrix<bool>,
}

impl UserPartition {
    /// Builds the derived sets from explicit strong sets.
    pub fn from_strong_sets(antennas: usize, users: usize, strong_sets: Vec<Vec<usize>>) -> Result<Self> {
        let aps = strong_sets.len();
        let mut delta = DMatrix::from_element(aps, users, false);
        for (l, set) in strong_sets.iter().enumerate() {
            if set.len() + 1 > antennas {
                return Err(Error::InvalidConfig(format!(
                    "AP {l} has {} strong users but only {antennas} antennas",
                    set.len()
                )));
            }
            for &k in set {
                if k >= users || delta[(l, k)] {
                    return Err(Error::InvalidConfig(format!("bad strong user {k} at AP {l}")));
                }
                delta[(l, k)] = true;
            }
        }
        let weak_sets = (0..aps)
            .map(|l| (0..users).filter(|&k| !delta[(l, k)]).collect())
            .collect();
        let zf_aps = (0..users)
            .map(|k| (0..aps).filter(|&l| delta[(l, k)]).collect())
            .collect();
        let mrt_aps = (0..users)
            .map(|k| (0..aps).filter(|&l| !delta[(l, k)]).collect())
            .collect();
        Ok(Self { antennas, strong_sets, weak_sets, zf_aps, mrt_aps, delta })
    }

    pub fn aps(&self) -> usize {
        self.delta.nrows()
    }

    pub fn users(&self) -> usize {
        self.delta.ncols()
    }

    /// `M - |S_l|`, the dimension left after nulling the strong users.
    pub fn free_dims(&self, ap: usize) -> usize {
        self.antennas - self.strong_sets[ap].len()
    }

    pub fn is_strong(&self, ap: usize, user: usize) -> bool {
        self.delta[(ap, user)]
    }
}

/// Splits users at each AP by large-scale gain.
///
/// A user is strong when its gain is at least `threshold_fraction` times the
/// largest gain at that AP; at most `min(M - 1, K)` of the largest such users
/// are kept, ties broken by ascending user index.
pub fn partition_users(stats: &ChannelStatistics, antennas: usize, threshold_fraction: f64) -> Result<UserPartition> {
    if !(threshold_fraction > 0.0 && threshold_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "threshold fraction {threshold_fraction} outside (0, 1]"
        )));
    }
    if antennas < 2 {
        return Err(Error::InvalidConfig("at least two antennas per AP are required".into()));
    }
    let (aps, users) = (stats.aps(), stats.users());
    let cap = (antennas - 1).min(users);

    let strong_sets = (0..aps)
        .map(|l| {
            let row = stats.beta_users.row(l);
            let max = row.iter().cloned().fold(0.0, f64::max);
            let mut candidates: Vec<usize> =
                (0..users).filter(|&k| max > 0.0 && row[k] >= threshold_fraction * max).collect();
            // stable sort keeps ascending index among equal gains
            candidates.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap());
            candidates.truncate(cap);
            candidates.sort_unstable();
            candidates
        })
        .collect();

    UserPartition::from_strong_sets(antennas, users, strong_sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::PilotConfig;
    use nalgebra::DVector;

    fn stats(beta: DMatrix<f64>) -> ChannelStatistics {
        let users = beta.ncols();
        let aps = beta.nrows();
        ChannelStatistics::from_gains(beta, DVector::from_element(aps, 1.0), &PilotConfig::uniform(users, users, 1.0, 0.0))
            .unwrap()
    }

    #[test]
    fn threshold_rule() {
        let p = partition_users(&stats(DMatrix::from_row_slice(1, 3, &[1.0, 0.5, 0.05])), 4, 0.1).unwrap();
        assert_eq!(p.strong_sets[0], vec![0, 1]);
        assert_eq!(p.weak_sets[0], vec![2]);
        assert_eq!(p.free_dims(0), 2);
    }

    #[test]
    fn equal_gains_truncate_by_index() {
        let p = partition_users(&stats(DMatrix::from_element(1, 10, 0.3)), 4, 0.1).unwrap();
        assert_eq!(p.strong_sets[0], vec![0, 1, 2]);
        assert_eq!(p.weak_sets[0].len(), 7);
    }

    #[test]
    fn single_user_always_strong() {
        let p = partition_users(&stats(DMatrix::from_row_slice(3, 1, &[0.1, 2.0, 1e-6])), 4, 0.1).unwrap();
        for l in 0..3 {
            assert_eq!(p.strong_sets[l], vec![0]);
            assert!(p.weak_sets[l].is_empty());
        }
        assert_eq!(p.zf_aps[0], vec![0, 1, 2]);
    }

    #[test]
    fn truncation_keeps_largest() {
        let p = partition_users(&stats(DMatrix::from_row_slice(1, 5, &[0.5, 0.9, 0.6, 1.0, 0.55])), 3, 0.1).unwrap();
        assert_eq!(p.strong_sets[0], vec![1, 3]);
    }

    #[test]
    fn derived_sets_consistent() {
        let beta = DMatrix::from_fn(6, 7, |l, k| ((l * 7 + k * 3) % 11) as f64 + 0.5);
        let p = partition_users(&stats(beta), 4, 0.3).unwrap();
        for l in 0..6 {
            assert_eq!(p.strong_sets[l].len() + p.weak_sets[l].len(), 7);
            assert!(p.strong_sets[l].len() <= 3);
            assert!(p.strong_sets[l].iter().all(|k| !p.weak_sets[l].contains(k)));
        }
        for k in 0..7 {
            assert_eq!(p.zf_aps[k].len() + p.mrt_aps[k].len(), 6);
            for &l in &p.zf_aps[k] {
                assert!(p.delta[(l, k)] && p.strong_sets[l].contains(&k));
            }
        }
    }

    #[test]
    fn rejects_bad_threshold() {
        let s = stats(DMatrix::from_element(1, 2, 1.0));
        assert!(partition_users(&s, 4, 0.0).is_err());
        assert!(partition_users(&s, 4, 1.5).is_err());
        assert!(partition_users(&s, 1, 0.5).is_err());
    }

    #[test]
    fn explicit_sets_validated() {
        assert!(UserPartition::from_strong_sets(2, 3, vec![vec![0, 1]]).is_err());
        assert!(UserPartition::from_strong_sets(4, 3, vec![vec![0, 0]]).is_err());
        let p = UserPartition::from_strong_sets(4, 3, vec![vec![], vec![2]]).unwrap();
        assert_eq!(p.weak_sets[0], vec![0, 1, 2]);
        assert_eq!(p.mrt_aps[2], vec![0]);
    }
}
