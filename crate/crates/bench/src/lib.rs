//! Fixtures shared by the benchmarks in `benches/`.

use cfres_core::channel::{estimation_quality, PilotConfig};
use cfres_core::ppzf::partition_users;
use cfres_core::sca::{ScaOptions, SecrecyProblem, ServiceTargets};
use cfres_core::scenario::{generate_drop, ScenarioConfig};

/// Attacked problem on a drop of the given size with default propagation,
/// targets 3/5/0.1 and a 200 mW budget per AP.
pub fn attacked_problem(aps: usize, users: usize, seed: u64) -> SecrecyProblem {
    let cfg = ScenarioConfig { aps, users, ..Default::default() };
    let drop = generate_drop(&cfg, seed).expect("valid scenario");
    let stats = estimation_quality(&drop, &PilotConfig::uniform(users, users, 100.0, 100.0)).expect("valid pilots");
    let part = partition_users(&stats, cfg.antennas, 0.1).expect("valid partition");
    let targets = ServiceTargets::uniform(users, 3.0, 5.0, 0.1, (0.5, 0.5));
    SecrecyProblem::new(stats, part, targets, vec![200.0; aps], ScaOptions::default()).expect("valid problem")
}
