use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::RangeInclusive;

use super::sampling::SamplingFunction;
use super::LatticeError;
use crate::numberkit::mul_frac;

/// Default cap on window length for [`sample_window`].
pub const DEFAULT_WINDOW_CAP: usize = 10_000_000;

/// Relative threshold under which a sampled weight counts as a zero.
pub const ZERO_TOL: f64 = 1e-14;

/// Generator of the Jacobi coefficients `(w_n, v_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OperatorModel {
    /// `w_n = c(theta + n alpha)`, `v_n = v(theta + n alpha)`.
    Quasiperiodic { c: SamplingFunction, v: SamplingFunction, alpha: f64, theta: f64 },
    /// Explicit coefficients for sites `offset .. offset + len`.
    Explicit { offset: i64, w: Vec<Complex64>, v: Vec<f64> },
}

impl OperatorModel {
    pub fn quasiperiodic(c: SamplingFunction, v: SamplingFunction, alpha: f64, theta: f64) -> Self {
        OperatorModel::Quasiperiodic { c, v, alpha, theta: theta.rem_euclid(1.0) }
    }

    /// Free Laplacian `w = 1`, `v = 0`.
    pub fn free() -> Self {
        Self::quasiperiodic(SamplingFunction::constant(1.0), SamplingFunction::constant(0.0), 0.0, 0.0)
    }

    /// Schrodinger operator with `v = 2 lambda cos 2 pi theta`.
    pub fn almost_mathieu(lambda: f64, alpha: f64, theta: f64) -> Self {
        Self::quasiperiodic(
            SamplingFunction::constant(1.0),
            SamplingFunction::Cosine { amplitude: 2.0 * lambda, shift: 0.0 },
            alpha,
            theta,
        )
    }

    /// Phase of site `j`, reduced to [0, 1).
    #[inline]
    pub fn phase(&self, j: i64) -> f64 {
        match self {
            OperatorModel::Quasiperiodic { alpha, theta, .. } => (theta + mul_frac(j as f64, *alpha)).rem_euclid(1.0),
            OperatorModel::Explicit { .. } => 0.0,
        }
    }

    /// Sites covered by the model (`None` = all of Z).
    pub fn domain(&self) -> Option<RangeInclusive<i64>> {
        match self {
            OperatorModel::Quasiperiodic { .. } => None,
            OperatorModel::Explicit { offset, w, .. } => Some(*offset..=offset + w.len() as i64 - 1),
        }
    }

    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        match self.domain() {
            None => true,
            Some(r) => lo >= *r.start() && hi <= *r.end(),
        }
    }

    pub fn check_covers(&self, lo: i64, hi: i64) -> Result<(), LatticeError> {
        if self.covers(lo, hi) {
            Ok(())
        } else {
            Err(LatticeError::OutOfRange { lo, hi })
        }
    }

    /// `w_j`. Explicit models panic outside their domain; callers check
    /// coverage once with [`check_covers`](Self::check_covers).
    #[inline]
    pub fn weight(&self, j: i64) -> Complex64 {
        match self {
            OperatorModel::Quasiperiodic { c, .. } => c.eval(self.phase(j)),
            OperatorModel::Explicit { offset, w, .. } => w[(j - offset) as usize],
        }
    }

    /// `(w_j, v_j)` with a single phase evaluation.
    #[inline]
    pub fn site(&self, j: i64) -> (Complex64, f64) {
        match self {
            OperatorModel::Quasiperiodic { c, v, .. } => {
                let x = self.phase(j);
                (c.eval(x), v.eval_real(x))
            }
            OperatorModel::Explicit { offset, w, v } => {
                let i = (j - offset) as usize;
                (w[i], v[i])
            }
        }
    }

    #[inline]
    pub fn potential(&self, j: i64) -> f64 {
        match self {
            OperatorModel::Quasiperiodic { v, .. } => v.eval_real(self.phase(j)),
            OperatorModel::Explicit { offset, v, .. } => v[(j - offset) as usize],
        }
    }

    pub fn with_theta(&self, new_theta: f64) -> Self {
        match self {
            OperatorModel::Quasiperiodic { c, v, alpha, .. } => Self::quasiperiodic(c.clone(), v.clone(), *alpha, new_theta),
            other => other.clone(),
        }
    }

    pub fn theta(&self) -> f64 {
        match self {
            OperatorModel::Quasiperiodic { theta, .. } => *theta,
            OperatorModel::Explicit { .. } => 0.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            OperatorModel::Quasiperiodic { alpha, .. } => *alpha,
            OperatorModel::Explicit { .. } => 0.0,
        }
    }

    /// The model at `(theta - alpha, -alpha)`, used for backward products.
    pub fn reversed_frequency(&self) -> Self {
        match self {
            OperatorModel::Quasiperiodic { c, v, alpha, theta } => {
                Self::quasiperiodic(c.clone(), v.clone(), -alpha, theta - alpha)
            }
            other => other.clone(),
        }
    }

    pub fn weight_sup_bound(&self) -> f64 {
        match self {
            OperatorModel::Quasiperiodic { c, .. } => c.sup_bound(),
            OperatorModel::Explicit { w, .. } => w.iter().map(|x| x.norm()).fold(0.0, f64::max),
        }
    }

    pub fn potential_sup_bound(&self) -> f64 {
        match self {
            OperatorModel::Quasiperiodic { v, .. } => v.sup_bound(),
            OperatorModel::Explicit { v, .. } => v.iter().map(|x| x.abs()).fold(0.0, f64::max),
        }
    }

    /// `||H|| <= 2 sup|c| + sup|v|`.
    pub fn norm_bound(&self) -> f64 {
        2.0 * self.weight_sup_bound() + self.potential_sup_bound()
    }

    /// Whether a sampled weight should be treated as an exact zero.
    pub fn is_zero_weight(&self, w: Complex64) -> bool {
        w.norm() <= ZERO_TOL * self.weight_sup_bound().max(f64::MIN_POSITIVE)
    }

    /// Off-diagonal sampling function, for quasiperiodic models.
    pub fn off_diagonal(&self) -> Option<&SamplingFunction> {
        match self {
            OperatorModel::Quasiperiodic { c, .. } => Some(c),
            OperatorModel::Explicit { .. } => None,
        }
    }

    pub fn diagonal(&self) -> Option<&SamplingFunction> {
        match self {
            OperatorModel::Quasiperiodic { v, .. } => Some(v),
            OperatorModel::Explicit { .. } => None,
        }
    }
}

/// Coefficients over a window of sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleWindow {
    pub start: i64,
    pub w: Vec<Complex64>,
    pub v: Vec<f64>,
    /// Sites where `w_j` vanishes (to relative [`ZERO_TOL`]).
    pub zeros: Vec<i64>,
}

/// Samples `(w_j, v_j)` for `j` in `range`.
pub fn sample_window(model: &OperatorModel, range: RangeInclusive<i64>, cap: usize) -> Result<SampleWindow, LatticeError> {
    let (lo, hi) = (*range.start(), *range.end());
    if hi < lo {
        return Ok(SampleWindow { start: lo, w: vec![], v: vec![], zeros: vec![] });
    }
    let len = (hi - lo + 1) as u64;
    if len > cap as u64 {
        return Err(LatticeError::WindowTooLarge { len, cap: cap as u64 });
    }
    model.check_covers(lo, hi)?;
    let mut w = Vec::with_capacity(len as usize);
    let mut v = Vec::with_capacity(len as usize);
    let mut zeros = Vec::new();
    for j in lo..=hi {
        let wj = model.weight(j);
        if model.is_zero_weight(wj) {
            zeros.push(j);
        }
        w.push(wj);
        v.push(model.potential(j));
    }
    Ok(SampleWindow { start: lo, w, v, zeros })
}
