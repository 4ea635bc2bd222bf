use cfres_core::channel::{ChannelStatistics, PilotConfig};
use cfres_core::ppzf::{oracle_expectations, PowerAllocation, Term, UserPartition};
use nalgebra::{DMatrix, DVector};

/// Two APs, four antennas, three users; user 1 is strong at AP 1 and weak at AP 2.
pub fn mixed_instance() -> (ChannelStatistics, PilotConfig, UserPartition, PowerAllocation) {
    let beta = DMatrix::from_row_slice(2, 3, &[1.0, 0.5, 0.05, 0.02, 1.0, 0.8]);
    let pilots = PilotConfig::uniform(3, 3, 4.0, 3.0);
    let stats = ChannelStatistics::from_gains(beta, DVector::from_row_slice(&[0.6, 0.3]), &pilots).unwrap();
    let part = UserPartition::from_strong_sets(4, 3, vec![vec![0, 1], vec![1, 2]]).unwrap();
    let alloc = PowerAllocation {
        u_users: DMatrix::from_row_slice(2, 3, &[1.1, 0.7, 0.4, 0.3, 0.9, 1.2]),
        u_an: DVector::from_row_slice(&[0.8, 0.5]),
    };
    (stats, pilots, part, alloc)
}

#[test]
fn every_term_within_five_standard_errors() {
    let (stats, pilots, part, alloc) = mixed_instance();
    let report = oracle_expectations(&stats, &pilots, &part, &alloc, 20_000, 17).unwrap();
    for t in &report.terms {
        println!("{:40} cf={:>10.5} mc={:>10.5} se={:.2e} z={:.2}", t.term.to_string(), t.closed_form, t.empirical, t.std_error, t.z_score());
    }
    let failures = report.failures(5.0);
    assert!(failures.is_empty(), "{failures:#?}");
    let strong = report.find(Term::NoiseLeakageEve { ap: 0 }).unwrap();
    assert!((strong.closed_form - (stats.beta_eve[0] - stats.gamma_eve[0])).abs() < 1e-15);
    let weak = report.find(Term::NoiseLeakageEve { ap: 1 }).unwrap();
    assert_eq!(weak.closed_form, stats.beta_eve[1]);
}
