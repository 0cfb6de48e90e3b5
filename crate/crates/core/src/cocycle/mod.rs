//! Transfer-matrix cocycles in overflow-safe scaled arithmetic.
//!
//! `A_n = D_n / w_n` with `D_n = [[E - v_n, -conj(w_{n-1})], [w_n, 0]]`, and
//! products `A(n, m) = A_{n+m-1} ... A_m`.

mod lyapunov;
mod power;
mod product;
mod regularize;
mod scaled;
mod trace;

pub use lyapunov::{default_phases, lyapunov_at, lyapunov_birkhoff, weight_may_vanish, LyapunovEstimate, LyapunovMethod};
pub use power::{
    hyperbolic_power_growth, EllipticInfo, HyperbolicInfo, LinearWindow, PowerDiagnostics, PowerKind, WindowRow,
    WINDOW_C1_HIGH, WINDOW_C1_LOW,
};
pub use product::{
    a_product, d_product, product, product_with_cap, r_product, r_step, step_matrices, weight_product, ProductValue,
    StepMatrices, Which, DEFAULT_LOG_SCALE_CAP, MAX_PRODUCT_LEN,
};
pub use regularize::{
    a_tilde_product, conj_diag, measure_lambda, regularity_bounds_check, regularize_product, regularized_step, t_entry,
    trace_gap_ln, BoundCheck, LambdaMeasurement, RegularityReport, RegularizedProduct, CONJUGACY_TOL,
};
pub use scaled::{Mat2, ScaledMatrix2x2, ScaledScalar};
pub use trace::{classify_trace, trace_classify, TraceLabel, TraceRow, TraceScan, DEFAULT_KAPPA};

use thiserror::Error;

use crate::lattice::LatticeError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CocycleError {
    #[error("w vanishes at site {site:?}; use the D representation")]
    SingularStep { site: Option<i64> },
    #[error("log scale {log_scale} exceeded the cap at site {site}")]
    Overflow { site: i64, log_scale: f64 },
    #[error("product length {n} exceeds the limit")]
    TooLong { n: i64 },
    #[error("conjugacy residual {residual:e} above tolerance")]
    ConjugacyResidual { residual: f64 },
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}
