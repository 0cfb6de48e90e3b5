//! Quantitative near-periodicity of coefficient sequences and lower bounds
//! on block products of the off-diagonal weights.

mod certificate;
mod checks;
mod sine;

pub use certificate::{
    lambda_certificate, theta_test, trig_poly_circle_zeros, verify_lambda_bound_on_blocks, BlockReport,
    CertificateForm, LambdaCertificate, ProductZeroProfile, QualifyingLevel, ThetaTest, ThetaTestRow,
    QUADRATURE_NODES, THETA_TEST_RANGE,
};
pub(crate) use certificate::poly_roots;
pub use checks::{
    check_beta_almost_periodic, check_lambda_beta_bound, AlmostPeriodicReport, InducedCheck, LambdaBoundReport,
    SequenceWindow,
};
pub use sine::{
    ln_abs_sin_pi, ln_sine_product_rational, sine_product_deviation, sine_product_deviation_unchecked, SineDeviation,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numberkit::NumberError;

/// Default absolute cap on the scanned window `|m| <= W`.
pub const DEFAULT_PERIODICITY_CAP: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PeriodicityError {
    #[error("window [{have_lo}, {have_hi}] does not cover [{need_lo}, {need_hi}]")]
    WindowTooSmall { need_lo: i64, need_hi: i64, have_lo: i64, have_hi: i64 },
    #[error("weight vanishes at site {site}")]
    ZeroInWindow { site: i64 },
    #[error("sine term {j} vanishes exactly")]
    ExactZeroTerm { j: u64 },
    #[error("{q} is not a continued-fraction denominator of alpha")]
    NotADenominator { q: u64 },
    #[error("no denominator with ln q_(n+1) > 2 beta q_n within the available depth")]
    NoQualifyingDenominator,
    #[error("beta = {beta} needs 0 < 2 beta < beta(alpha) ~ {beta_alpha}")]
    BetaOutOfRange { beta: f64, beta_alpha: f64 },
    #[error("delta = {delta} outside (0, {max})")]
    DeltaOutOfRange { delta: f64, max: f64 },
    #[error("phase {theta} fails the Diophantine test")]
    ThetaNotAdmissible { theta: f64 },
    #[error("invalid zero profile: {0}")]
    InvalidProfile(String),
    #[error(transparent)]
    Number(#[from] NumberError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicityParams {
    pub beta: f64,
    pub delta: f64,
    pub lambda: f64,
    pub q: u64,
    /// Desk-scale stand-in for `e^{delta beta q}`.
    pub window_cap: u64,
}

impl PeriodicityParams {
    pub fn new(beta: f64, delta: f64, lambda: f64, q: u64, window_cap: u64) -> Self {
        PeriodicityParams { beta, delta, lambda, q, window_cap }
    }

    /// `min(e^{delta beta q}, window_cap)`, the half-width actually scanned.
    pub fn effective_window(&self) -> i64 {
        let growth = (self.delta * self.beta * self.q as f64).exp();
        growth.min(self.window_cap as f64).floor().max(0.0) as i64
    }
}
