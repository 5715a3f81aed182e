use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("branch domains {i} and {j} overlap on an interval")]
    OverlappingDomains { i: usize, j: usize },

    #[error("branch {branch} is not strictly monotone near x = {at}")]
    NonMonotoneBranch { branch: usize, at: f64 },

    #[error("branch {branch} maps outside [0,1]: reached {value}")]
    RangeEscape { branch: usize, value: f64 },

    #[error("step tolerance {requested} unreachable; achieved {achieved} with {cells} cells")]
    UnreachableTolerance { requested: f64, achieved: f64, cells: usize },

    #[error("orbit hits an interior breakpoint at step {step} (x = {x})")]
    OrbitHitsBreakpoint { step: usize, x: f64 },

    #[error("orbit escapes the branch domains at step {step} (x = {x})")]
    OrbitEscapes { step: usize, x: f64 },

    #[error("partition is not Markov: T(Y_{from}) cuts Y_{to} (overlap fraction {overlap})")]
    NotMarkov { from: usize, to: usize, overlap: f64 },

    #[error("no irreducible core with positive entropy")]
    TrivialCore,

    #[error("iteration did not converge after {iterations} steps (residual {residual})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("minimizer bracket exceeded 2^60 at a = {a}; pressure is unbounded below")]
    BracketOverflow { a: f64 },

    #[error("a = {a} lies outside the ergodic average range")]
    NotInH { a: f64 },

    #[error("stage {stage}: no feasible cylinder schedule (coverage reached {coverage})")]
    InfeasibleSchedule { stage: usize, coverage: f64 },

    #[error("stage {stage}: no cylinder passes the selection windows")]
    EmptySelection { stage: usize },

    #[error("no measure on the mesh meets |∫f dμ - {a}| <= {tolerance}")]
    InfeasibleConstraint { a: f64, tolerance: f64 },

    #[error("a = {a} outside the digit value hull [{lo}, {hi}]")]
    OutOfHull { a: f64, lo: f64, hi: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code classes: 2 validation, 3 numerical failure.
    /// Check violations (exit 4) are not errors; the check report carries them.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::OverlappingDomains { .. }
            | Error::NonMonotoneBranch { .. }
            | Error::RangeEscape { .. }
            | Error::OrbitHitsBreakpoint { .. }
            | Error::OrbitEscapes { .. }
            | Error::NotMarkov { .. }
            | Error::TrivialCore
            | Error::OutOfHull { .. }
            | Error::Config(_)
            | Error::Io(_) => 2,
            Error::UnreachableTolerance { .. }
            | Error::NoConvergence { .. }
            | Error::BracketOverflow { .. }
            | Error::NotInH { .. }
            | Error::InfeasibleSchedule { .. }
            | Error::EmptySelection { .. }
            | Error::InfeasibleConstraint { .. } => 3,
        }
    }
}
