use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Normalizing a factor whose total mass is (numerically) zero, i.e.
    /// conditioning on a null event.
    #[error("zero mass: {0}")]
    ZeroMass(String),

    /// An adjustment stratum with positive mass never receives the exposure
    /// level being adjusted for.
    #[error("positivity violation: {0}")]
    PositivityViolation(String),

    /// The supplied probabilities cannot come from any joint distribution
    /// satisfying the model's constraints.
    #[error("infeasible data: {0}")]
    InfeasibleData(String),

    #[error("weak instrument: first-stage effect {denominator} is below threshold {threshold}")]
    WeakInstrument { denominator: f64, threshold: f64 },

    /// The probability of causation conditions on an event of probability zero.
    #[error("probability of causation undefined: {0}")]
    PcUndefined(String),

    #[error("cycle detected: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),

    #[error("cardinality mismatch for variable {name}: {left} vs {right}")]
    CardinalityMismatch { name: String, left: usize, right: usize },

    #[error("unknown variable: {0}")]
    UnknownVariable(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for errors that describe an estimand that is undefined or not
    /// identifiable from the given (well-formed) inputs, as opposed to
    /// malformed inputs.
    pub fn is_estimand_failure(&self) -> bool {
        matches!(
            self,
            Error::ZeroMass(_)
                | Error::PositivityViolation(_)
                | Error::InfeasibleData(_)
                | Error::WeakInstrument { .. }
                | Error::PcUndefined(_)
        )
    }

    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ZeroMass(_) => "zero_mass",
            Error::PositivityViolation(_) => "positivity_violation",
            Error::InfeasibleData(_) => "infeasible_data",
            Error::WeakInstrument { .. } => "weak_instrument",
            Error::PcUndefined(_) => "pc_undefined",
            Error::CycleDetected(_) => "cycle_detected",
            Error::CardinalityMismatch { .. } => "cardinality_mismatch",
            Error::UnknownVariable(_) => "unknown_variable",
            Error::InvalidModel(_) => "invalid_model",
            Error::InvalidQuery(_) => "invalid_query",
            Error::InvalidInput(_) => "invalid_input",
        }
    }
}
