use thiserror::Error;

/// Errors raised by the simulation and optimization routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("pilot length {tau_p} is shorter than the user count {users}")]
    NotEnoughPilots { tau_p: usize, users: usize },

    #[error("eavesdropper is not active; secrecy quantities are undefined")]
    EveInactive,

    #[error("estimated strong-user channel matrix at AP {ap} is rank deficient")]
    RankDeficient { ap: usize },

    #[error("degenerate linearization point: x_{user} = {value:e} is below the floor {floor:e}")]
    DegenerateLinearization { user: usize, value: f64, floor: f64 },

    #[error("subproblem is infeasible: {0}")]
    Infeasible(String),

    #[error("conic solver failed: {0}")]
    SolverFailure(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, Error>;
