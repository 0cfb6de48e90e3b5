//! Trigonometric-polynomial control of transfer-matrix norms: the
//! decomposition `F_n = f_n / g_n`, large-norm intervals, the localization
//! density of large norms along an orbit, norm-sum growth, and a sublevel
//! measure bound for real-rooted polynomials.
//!
//! All the growing quantities are carried as logarithms or relative to a
//! common `ln_scale`; at `n = 200` the functions involved are of size
//! `e^{600}` and more.

mod decompose;
mod density;
mod interval;
mod sublevel;

pub use decompose::{
    decompose_f, decompose_f_with, mahler_log_mean, measure_strip_constant, DecomposeConfig, GridRow,
    StripConstant, TrigDecomposition, FG_ERROR_CEILING, MAX_DECOMPOSE_N, MAX_GRID,
};
pub use density::{
    localization_density, sum_norm_growth, DirectionSum, JmRow, NormGrowthCertificate, SumNormGrowth, MAX_SUM_LEN,
};
pub use interval::{find_large_norm_interval, LargeNormInterval};
pub use sublevel::{sublevel_measure_bound, SublevelReport};

use thiserror::Error;

use crate::cocycle::CocycleError;
use crate::lattice::LatticeError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FourierError {
    #[error("n = {n} with a {grid}-point grid exceeds the evaluation budget")]
    BudgetExceeded { n: usize, grid: usize },
    #[error("input is not analytic: {0}")]
    NonAnalyticInput(String),
    #[error("empty level set: max ln f_n = {max_ln_f:.3} vs threshold {threshold_ln:.3}")]
    EmptyLevelSet { max_ln_f: f64, threshold_ln: f64 },
    #[error("window {m}: best index {best_j} has ln norm {best_ln_norm:.4} <= {threshold_ln:.4}")]
    NotFound { m: usize, best_j: i64, best_ln_norm: f64, threshold_ln: f64 },
    #[error("degenerate zeros: {0}")]
    DegenerateZeros(String),
    #[error("w vanishes at site {site:?}")]
    SingularStep { site: Option<i64> },
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

impl From<CocycleError> for FourierError {
    fn from(e: CocycleError) -> Self {
        match e {
            CocycleError::SingularStep { site } => FourierError::SingularStep { site },
            CocycleError::Lattice(l) => FourierError::Lattice(l),
            other => FourierError::InvalidInput(other.to_string()),
        }
    }
}

/// `n_2(rho) = ln(8 / (1 - e^{-pi rho})) / (pi rho)`: past it the tail of
/// the truncation is below one.
pub fn n2_threshold(rho: f64) -> f64 {
    let pr = std::f64::consts::PI * rho;
    (8.0 / (1.0 - (-pr).exp())).ln() / pr
}

/// `ln sum_i e^{x_i}` accumulated one term at a time.
#[inline]
pub(crate) fn log_add_exp(acc: f64, x: f64) -> f64 {
    if acc == f64::NEG_INFINITY {
        return x;
    }
    if x == f64::NEG_INFINITY {
        return acc;
    }
    let m = acc.max(x);
    m + ((acc - m).exp() + (x - m).exp()).ln()
}
