use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes across the library.
///
/// [`Error::is_validation`] distinguishes bad inputs (CLI exit code 2) from
/// runtime failures such as impossible records or oracle caps (exit code 3).
#[derive(Debug, Error)]
pub enum Error {
    /// A physical specification violates an invariant (populations, norms, contrasts).
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// An operation received arguments outside its domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Configuration problems, reported with field paths.
    #[error("invalid configuration:\n{0}")]
    Config(String),

    /// Phase grid too coarse to integrate the requested trigonometric degree exactly.
    #[error("quadrature grid too coarse: M={m}, need at least {needed} points per dimension")]
    QuadratureDegree { m: usize, needed: usize },

    /// Coefficient truncation leaves too much probability outside the window.
    #[error("truncation tail too large: {0}")]
    Truncation(String),

    /// Posterior mass underflowed; the supplied record is impossible under the model.
    #[error("zero-probability record: posterior mass fell below 1e-300")]
    ZeroProbabilityRecord,

    /// A conditional asked for a record whose exact probability is zero.
    #[error("impossible record: the conditioning sequence has probability zero")]
    ImpossibleRecord,

    /// Orientation requested where no transverse direction is defined.
    #[error("no orientation possible: {0}")]
    NoOrientation(String),

    /// Exact-oracle size cap exceeded.
    #[error("oracle cap exceeded: {0}")]
    OracleCap(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse: {0}")]
    ConfigParse(#[from] toml::de::Error),
}

impl Error {
    /// True when the error reflects invalid user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpec(_)
                | Error::InvalidInput(_)
                | Error::Config(_)
                | Error::QuadratureDegree { .. }
                | Error::Truncation(_)
                | Error::ConfigParse(_)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_classification() {
        assert!(Error::InvalidSpec("x".into()).is_validation());
        assert!(Error::QuadratureDegree { m: 8, needed: 11 }.is_validation());
        assert!(!Error::ZeroProbabilityRecord.is_validation());
        assert!(!Error::OracleCap("p too large".into()).is_validation());
        assert!(!Error::ImpossibleRecord.is_validation());
    }
}
