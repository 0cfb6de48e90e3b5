//! Weyl-Titchmarsh functions, half-line solutions, subordinacy lengths and
//! the finite-scale spectral-dimension diagnostics built on them.
//!
//! Boundary data are normalized in the gauge-invariant variables
//! `x_0 = conj(w_0) u_0 / sqrt|w_0|`, `x_1 = sqrt|w_0| u_1`, which makes the
//! Wronskian of `u^phi` and `v^phi` equal to one for any `w_0 != 0`. For
//! `w_0 = 1` these are just `(u_0, u_1)`.
//!
//! Left half-line objects are computed on the reflected operator
//! `(U psi)_n = psi_{1-n}`, whose coefficients are `conj(w_{-n})` and
//! `v_{1-n}`.

mod mfunc;
mod scans;
mod solution;

pub use mfunc::{
    box_borel_transform, half_line_m, half_line_m_with, rotate_m, sup_rotated_abs, truncated_m0, whole_line_m,
    whole_line_m_value, whole_line_m_with, DiscreteMeasure, DklCheck, IdentityRow, MConfig, MValue, WholeLineM,
    DKL_GRID, IDENTITY_ANGLES, IDENTITY_TOL,
};
pub use scans::{
    gamma_scan, gamma_scan_with, jl_sandwich_check, phi_grid, power_law_check, GammaConfig, GammaRow, GammaScan,
    GammaVerdict, JlReport, JlRow, PowerLawReport, PowerLawRow, ScanPoint, JL_LOWER, JL_SLACK, JL_UPPER,
};
pub use solution::{
    half_line_solution, subordinacy_length, HalfLineSolution, NormProfile, MAX_SOLUTION_LEN, RECURRENCE_TOL,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{LatticeError, OperatorModel};

type C = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("weight vanishes at site {site}")]
    SingularStep { site: i64 },
    #[error("computed range of {have} sites is too short (need at least {need})")]
    RangeTooShort { need: usize, have: usize },
    #[error("no convergence at truncation {n}: values differ by {gap:e}")]
    NotConverged { n: usize, value_n: C, value_2n: C, gap: f64 },
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

/// `(w_n, v_n)` of the half-line problem on `side`, `n >= 0`.
#[inline]
pub(crate) fn side_site(model: &OperatorModel, side: Side, n: i64) -> (C, f64) {
    match side {
        Side::Right => model.site(n),
        Side::Left => (model.weight(-n).conj(), model.potential(1 - n)),
    }
}

/// Coverage check for `side_site(.., n)` with `0 <= n <= n_max`.
pub(crate) fn check_side_covers(model: &OperatorModel, side: Side, n_max: i64) -> Result<(), LatticeError> {
    match side {
        Side::Right => model.check_covers(0, n_max),
        Side::Left => model.check_covers(-n_max, 1),
    }
}

/// Lattice site of the side-local weight index `n`.
#[inline]
pub(crate) fn lattice_site(side: Side, n: i64) -> i64 {
    match side {
        Side::Right => n,
        Side::Left => -n,
    }
}
