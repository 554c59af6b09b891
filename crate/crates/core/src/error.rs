use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("schema violation: {0}")]
    Schema(String),

    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("unsupported matroid: {0}")]
    UnsupportedMatroid(String),

    #[error("parameter out of range: {0}")]
    Param(String),

    #[error("enumeration guard exceeded for {what}: {actual} > {limit}{hint}")]
    Guard {
        what: &'static str,
        limit: u64,
        actual: u64,
        hint: &'static str,
    },

    #[error("infeasible base: the accepted set is not independent")]
    InfeasibleBase,

    #[error("LP solve failed: {0}")]
    Lp(#[from] LpError),

    #[error("point lies outside the matroid polytope: {0}")]
    OutsidePolytope(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("i/o: {0}")]
    Io(String),
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum LpError {
    #[error("model is infeasible")]
    Infeasible,
    #[error("model is unbounded")]
    Unbounded,
    #[error("iteration cap of {0} pivots exceeded")]
    IterationCap(usize),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn guard(what: &'static str, limit: u64, actual: u64) -> Result<()> {
    if actual > limit {
        Err(Error::Guard { what, limit, actual, hint: "" })
    } else {
        Ok(())
    }
}
