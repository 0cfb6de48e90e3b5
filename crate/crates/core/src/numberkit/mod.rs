//! Continued fractions, convergents and the Liouville exponent
//! `beta(alpha) = limsup ln q_{n+1} / q_n`.

mod expansion;
mod precise;
mod tower;

pub use expansion::{
    alpha_from_quotients, beta_estimate, cf_expand, circle_norm, mul_frac, rotation_distance,
    rotation_distance_exact, BetaEstimate, CfExpansion, CfSource, Frequency, LogLevel, QuotientRule,
    Termination, DEFAULT_BIT_BUDGET,
};
pub use precise::{ceil_exp, rational_to_f64, PreciseReal};
pub use tower::Tower;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumberError {
    #[error("value {0} is outside (0, 1)")]
    Domain(String),
    #[error("working precision exhausted before the first quotient")]
    PrecisionExhausted,
    #[error("denominator at level {level} exceeds the {cap_bits}-bit integer budget")]
    Overflow { level: usize, cap_bits: u64 },
    #[error("expansion terminated exactly: input is rational")]
    RationalInput,
    #[error("need at least {needed} levels, have {have}")]
    TooShallow { needed: usize, have: usize },
    #[error("rotation distance needs a nonzero multiple")]
    ZeroMultiple,
    #[error("cannot parse '{0}'")]
    Parse(String),
}
