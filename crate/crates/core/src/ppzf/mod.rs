//! Protective partial zero-forcing: user partitioning, closed-form SINRs,
//! per-realization precoders and the Monte Carlo expectation oracle.

mod closed_form;
mod oracle;
mod partition;
mod precoder;

pub use closed_form::{
    evaluate, secrecy_gap, sinr_eve, sinr_user, spectral_efficiency, PerformanceReport, PowerAllocation,
    SinrCoefficients,
};
pub use oracle::{oracle_expectations, OracleReport, Term, TermEstimate};
pub use partition::{partition_users, UserPartition};
pub use precoder::{build_precoders, ApPrecoders};
