//! Extended Harper's model:
//! `c(theta) = l1 e^{-2 pi i (theta + alpha/2)} + l2 + l3 e^{2 pi i (theta + alpha/2)}`,
//! `v(theta) = 2 cos 2 pi theta`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::model::OperatorModel;
use super::sampling::{SamplingFunction, TrigPoly};
use super::LatticeError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EhmParams {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl EhmParams {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Result<Self, LatticeError> {
        if !(l1 >= 0.0 && l2 >= 0.0 && l3 >= 0.0) || !(l1 + l2 + l3).is_finite() {
            return Err(LatticeError::InvalidCoupling(format!("({l1}, {l2}, {l3})")));
        }
        Ok(EhmParams { l1, l2, l3 })
    }

    /// Parses `l1,l2,l3`.
    pub fn parse(text: &str) -> Result<Self, LatticeError> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(LatticeError::InvalidCoupling(text.to_string()));
        }
        let mut v = [0.0; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p.parse().map_err(|_| LatticeError::InvalidCoupling(text.to_string()))?;
        }
        Self::new(v[0], v[1], v[2])
    }

    /// The off-diagonal sampling function with the `alpha/2` shift bound in.
    pub fn off_diagonal(&self, alpha: f64) -> SamplingFunction {
        SamplingFunction::Trig(TrigPoly::from_pairs(&[
            (-1, Complex64::from_polar(self.l1, -PI * alpha)),
            (0, Complex64::new(self.l2, 0.0)),
            (1, Complex64::from_polar(self.l3, PI * alpha)),
        ]))
    }

    pub fn model(&self, alpha: f64, theta: f64) -> OperatorModel {
        OperatorModel::quasiperiodic(
            self.off_diagonal(alpha),
            SamplingFunction::Cosine { amplitude: 2.0, shift: 0.0 },
            alpha,
            theta,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RLabel {
    R1,
    R2,
    R3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeoLabel {
    RegionI,
    RegionII,
    RegionIII,
    LineI,
    LineII,
    LineIII,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EhmRegion {
    pub r: RLabel,
    pub geometric: GeoLabel,
    /// True when the point lies outside the three published coupling sets
    /// and the label is the continuous extension described in the docs.
    pub extended: bool,
}

/// Region label of a coupling triple, using exact comparisons.
///
/// With `s = l1 + l3`, `t = l2`: open regions `I = {s<1, t<1}`,
/// `II = {t > max(s,1)}`, `III = {s > max(t,1)}` and boundary lines
/// `L_I = {s=1, t<1}`, `L_II = {t=1, s<=1}`, `L_III = {s=t>1}`.
/// `I -> R1`, `II -> R2`, `III -> R2` (or `R3` when `l1 = l3`),
/// `L_II -> R3`, `L_III -> R3`. Points the published sets miss (`L_I`,
/// `L_III` with `l1 != l3`, `t = 0`, `s = 0 < t < 1`) get the label of the
/// zero-or-positive Lyapunov side they belong to and `extended = true`.
pub fn ehm_classify(p: &EhmParams) -> Result<EhmRegion, LatticeError> {
    let s = p.l1 + p.l3;
    let t = p.l2;
    if t == 0.0 && s == 0.0 {
        return Err(LatticeError::Unclassifiable);
    }
    let symmetric = p.l1 == p.l3;
    let (r, geometric, extended) = if t == 1.0 && s <= 1.0 {
        (RLabel::R3, GeoLabel::LineII, false)
    } else if s == 1.0 && t < 1.0 {
        (RLabel::R3, GeoLabel::LineI, true)
    } else if s == t && t > 1.0 {
        (RLabel::R3, GeoLabel::LineIII, !symmetric)
    } else if s < 1.0 && t < 1.0 {
        (RLabel::R1, GeoLabel::RegionI, t == 0.0 || s == 0.0)
    } else if t > s.max(1.0) {
        (RLabel::R2, GeoLabel::RegionII, false)
    } else {
        // s > max(t, 1)
        let r = if symmetric { RLabel::R3 } else { RLabel::R2 };
        (r, GeoLabel::RegionIII, t == 0.0)
    };
    Ok(EhmRegion { r, geometric, extended })
}

/// Closed-form Lyapunov exponent on the spectrum.
///
/// In region I (`s <= 1`, `t <= 1`):
/// `ln((1 + sqrt(1 - 4 l1 l3)) / (t + sqrt(t^2 - 4 l1 l3)))` if `t >= s`,
/// otherwise `ln((1 + sqrt(1 - 4 l1 l3)) / (2 max(l1, l3)))`; zero elsewhere.
pub fn ehm_lyapunov_formula(p: &EhmParams) -> Result<f64, LatticeError> {
    let region = ehm_classify(p)?;
    let s = p.l1 + p.l3;
    let t = p.l2;
    let in_region_one = matches!(region.geometric, GeoLabel::RegionI | GeoLabel::LineI | GeoLabel::LineII);
    if !in_region_one {
        return Ok(0.0);
    }
    let prod = 4.0 * p.l1 * p.l3;
    let num = 1.0 + (1.0 - prod).max(0.0).sqrt();
    let den = if t >= s {
        t + (t * t - prod).max(0.0).sqrt()
    } else if p.l1 >= p.l3 {
        2.0 * p.l1
    } else {
        2.0 * p.l3
    };
    Ok((num / den).ln().max(0.0))
}
