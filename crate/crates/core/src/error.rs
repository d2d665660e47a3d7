use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A quantity expected to be rational kept an irrational cyclotomic part.
    #[error("value is not rational: {0}")]
    NotRational(String),

    #[error("division by a series that vanishes through its valid range")]
    ZeroLeading,

    #[error("exp needs strictly positive valuation, series starts at exponent {0}/48")]
    NonPositiveValuation(i64),

    #[error("coefficient at exponent {requested}/48 requested but series is only valid through {valid_to}/48")]
    BeyondTruncation { requested: i64, valid_to: i64 },

    #[error("multivariate exp of a series with a constant part")]
    ConstantPartPresent,

    #[error("epsilon sign is not integral: {0}")]
    NonIntegral(String),

    #[error("wall search is not bounded: {0}")]
    UnboundedSearch(String),

    #[error("residue for xi^2 = {xi_sq}, N = {degree} should vanish by the wall congruence but is {value}")]
    CongruenceViolation {
        xi_sq: i64,
        degree: u32,
        value: String,
    },

    #[error("xi^2 must be negative, got {0}")]
    NonNegativeXiSq(i64),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error: {0}")]
    Parse(String),
}
