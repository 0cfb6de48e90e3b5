use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_side_covers, lattice_site, side_site, Side, SpectralError};
use crate::cocycle::ScaledScalar;
use crate::lattice::OperatorModel;

type C = Complex64;

/// Longest half-line solution computed.
pub const MAX_SOLUTION_LEN: usize = 1_000_000;

/// Bound on the relative three-term residual, per unit of `1 + |E|`.
pub const RECURRENCE_TOL: f64 = 1e-9;

#[inline]
fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Log prefix sums of `|u_n|^2`, `n >= 1`, for truncated `l`-norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormProfile {
    /// `ln |u_n|` for `n = 0 ..= len`.
    pub ln_abs: Vec<f64>,
    /// `ln sum_{n=1}^{k} |u_n|^2` for `k = 0 ..= len`.
    ln_prefix: Vec<f64>,
}

impl NormProfile {
    pub fn from_ln_abs(ln_abs: Vec<f64>) -> Self {
        let mut ln_prefix = Vec::with_capacity(ln_abs.len());
        let mut acc = f64::NEG_INFINITY;
        ln_prefix.push(acc);
        for &l in ln_abs.iter().skip(1) {
            acc = log_add_exp(acc, 2.0 * l);
            ln_prefix.push(acc);
        }
        NormProfile { ln_abs, ln_prefix }
    }

    /// From `|u_n|`, `n = 0 ..`.
    pub fn from_abs(abs: &[f64]) -> Self {
        Self::from_ln_abs(abs.iter().map(|a| a.ln()).collect())
    }

    pub fn from_scaled(values: &[ScaledScalar]) -> Self {
        Self::from_ln_abs(values.iter().map(|s| s.log_mag).collect())
    }

    /// Largest available index.
    pub fn len(&self) -> usize {
        self.ln_abs.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.ln_abs.len() <= 1
    }

    /// `ln ||u||_l^2` with
    /// `||u||_l^2 = sum_{n=1}^{[l]} |u_n|^2 + (l - [l]) |u_{[l]+1}|^2`.
    pub fn ln_norm_sq(&self, ell: f64) -> Result<f64, SpectralError> {
        if !(ell >= 0.0) || !ell.is_finite() {
            return Err(SpectralError::InvalidInput(format!("length {ell} must be finite and nonnegative")));
        }
        let k = ell.floor() as usize;
        let frac = ell - k as f64;
        let need = if frac > 0.0 { k + 1 } else { k };
        if need > self.len() {
            return Err(SpectralError::RangeTooShort { need, have: self.len() });
        }
        let base = self.ln_prefix[k];
        Ok(if frac > 0.0 { log_add_exp(base, frac.ln() + 2.0 * self.ln_abs[k + 1]) } else { base })
    }

    pub fn ln_ell_norm(&self, ell: f64) -> Result<f64, SpectralError> {
        Ok(0.5 * self.ln_norm_sq(ell)?)
    }

    pub fn ell_norm(&self, ell: f64) -> Result<f64, SpectralError> {
        Ok(self.ln_ell_norm(ell)?.exp())
    }

    /// `ln ||u||_k` at integer `k <= len`.
    fn ln_norm_at(&self, k: usize) -> f64 {
        0.5 * self.ln_prefix[k]
    }
}

/// The `l` with `||u||_l ||v||_l = 1 / (2 eps)`, by bisection to relative
/// `1e-10`.
pub fn subordinacy_length(u: &NormProfile, v: &NormProfile, eps: f64) -> Result<f64, SpectralError> {
    if !(eps > 0.0) {
        return Err(SpectralError::InvalidInput(format!("eps = {eps} must be positive")));
    }
    let target = -(2.0 * eps).ln();
    let have = u.len().min(v.len());
    let at = |k: usize| u.ln_norm_at(k) + v.ln_norm_at(k);
    if at(have) < target {
        return Err(SpectralError::RangeTooShort { need: have + 1, have });
    }
    // smallest integer k with P(k) >= target
    let (mut lo_k, mut hi_k) = (0usize, have);
    while hi_k - lo_k > 1 {
        let mid = (lo_k + hi_k) / 2;
        if at(mid) >= target {
            hi_k = mid;
        } else {
            lo_k = mid;
        }
    }
    let k = if at(lo_k) >= target { lo_k } else { hi_k };
    if k == 0 {
        return Ok(0.0);
    }
    let p = |ell: f64| -> f64 { u.ln_ell_norm(ell).unwrap_or(f64::NEG_INFINITY) + v.ln_ell_norm(ell).unwrap_or(f64::NEG_INFINITY) };
    let (mut lo, mut hi) = ((k - 1) as f64, k as f64);
    for _ in 0..200 {
        if hi - lo <= 1e-10 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if p(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solution pair `u^phi`, `v^phi = u^{phi + pi/2}` of `Hu = Eu` on one
/// half-line, stored as phase and log-magnitude.
///
/// `values[n]` is `u_n` on the right. On the left it is the reflected
/// sequence `u_{1-n}`, so both sides share one norm convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfLineSolution {
    pub phi: f64,
    pub side: Side,
    pub e: f64,
    /// Normalized boundary pair `(x_0, x_1) = (-sin phi, cos phi)` of `u`.
    pub boundary: [C; 2],
    pub values: Vec<ScaledScalar>,
    pub partner: Vec<ScaledScalar>,
    /// Lattice site of a vanishing weight that ended the recurrence.
    pub truncated_at: Option<i64>,
    /// `max |w_n|` over the weights used.
    pub max_weight: f64,
    /// Largest relative three-term residual over interior sites, divided
    /// by `1 + |E|`.
    pub residual: f64,
    u_profile: NormProfile,
    v_profile: NormProfile,
}

impl HalfLineSolution {
    pub fn len(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() <= 1
    }

    pub fn u_profile(&self) -> &NormProfile {
        &self.u_profile
    }

    pub fn v_profile(&self) -> &NormProfile {
        &self.v_profile
    }

    pub fn ell_norm(&self, ell: f64) -> Result<f64, SpectralError> {
        self.u_profile.ell_norm(ell)
    }

    pub fn partner_ell_norm(&self, ell: f64) -> Result<f64, SpectralError> {
        self.v_profile.ell_norm(ell)
    }

    pub fn subordinacy_length(&self, eps: f64) -> Result<f64, SpectralError> {
        subordinacy_length(&self.u_profile, &self.v_profile, eps)
    }

    /// `([l] - 1) / (2 max(1, max|w|))`, the lower bound on
    /// `||u||_l ||v||_l` implied by the unit Wronskian.
    pub fn wronskian_floor(&self, ell: f64) -> f64 {
        (ell.floor() - 1.0) / (2.0 * self.max_weight.max(1.0))
    }

    /// `u_0 cos phi + u_1 sin phi` in normalized variables.
    pub fn boundary_residual(&self) -> f64 {
        (self.boundary[0] * self.phi.cos() + self.boundary[1] * self.phi.sin()).norm()
    }
}

struct Runner {
    // (u_n, u_{n-1}) times e^{-scale}
    cur: C,
    prev: C,
    scale: f64,
    out: Vec<ScaledScalar>,
}

impl Runner {
    fn new(u0: C, u1: C, cap: usize) -> Self {
        let mut out = Vec::with_capacity(cap + 1);
        out.push(ScaledScalar::from_complex(u0));
        out.push(ScaledScalar::from_complex(u1));
        Runner { cur: u1, prev: u0, scale: 0.0, out }
    }

    /// Advances one site; returns the relative residual of the step.
    fn step(&mut self, e: f64, v: f64, w: C, w_prev: C) -> f64 {
        let next = ((e - v) * self.cur - w_prev.conj() * self.prev) / w;
        let r = (w * next + w_prev.conj() * self.prev + (v - e) * self.cur).norm();
        let local = next.norm().max(self.cur.norm()).max(self.prev.norm());
        let rel = if local > 0.0 { r / local } else { 0.0 };
        self.prev = self.cur;
        self.cur = next;
        let mut s = ScaledScalar::from_complex(next);
        s.log_mag += self.scale;
        self.out.push(s);
        let big = self.cur.norm().max(self.prev.norm());
        if big > 1e100 || (big < 1e-100 && big > 0.0) {
            self.cur /= big;
            self.prev /= big;
            self.scale += big.ln();
        }
        rel
    }
}

/// `u^phi` and its partner on `side` over side-local indices `0 ..= length`.
///
/// A vanishing weight `w_n`, `n >= 1`, ends the recurrence at `u_n` and is
/// flagged in `truncated_at`; `w_0 = 0` leaves the boundary condition
/// undefined and is an error.
pub fn half_line_solution(
    model: &OperatorModel,
    e: f64,
    phi: f64,
    side: Side,
    length: usize,
) -> Result<HalfLineSolution, SpectralError> {
    if length > MAX_SOLUTION_LEN {
        return Err(SpectralError::InvalidInput(format!("length {length} exceeds {MAX_SOLUTION_LEN}")));
    }
    if length < 1 {
        return Err(SpectralError::InvalidInput("length must be at least 1".into()));
    }
    check_side_covers(model, side, length as i64)?;
    let (w0, _) = side_site(model, side, 0);
    if model.is_zero_weight(w0) {
        return Err(SpectralError::SingularStep { site: lattice_site(side, 0) });
    }
    let root = w0.norm().sqrt();
    let a = w0.conj() / root;
    let to_u = |x0: C, x1: C| (x0 / a, x1 / root);
    let (s, c) = phi.sin_cos();
    let bx = [C::new(-s, 0.0), C::new(c, 0.0)];
    let by = [C::new(-c, 0.0), C::new(-s, 0.0)];
    let (u0, u1) = to_u(bx[0], bx[1]);
    let (v0, v1) = to_u(by[0], by[1]);
    let mut ru = Runner::new(u0, u1, length);
    let mut rv = Runner::new(v0, v1, length);

    let mut w_prev = w0;
    let mut max_weight = w0.norm();
    let mut residual = 0.0f64;
    let mut truncated_at = None;
    for n in 1..length as i64 {
        let (w, v) = side_site(model, side, n);
        if model.is_zero_weight(w) {
            truncated_at = Some(lattice_site(side, n));
            break;
        }
        max_weight = max_weight.max(w.norm());
        residual = residual.max(ru.step(e, v, w, w_prev)).max(rv.step(e, v, w, w_prev));
        w_prev = w;
    }
    let residual = residual / (1.0 + e.abs());
    let u_profile = NormProfile::from_scaled(&ru.out);
    let v_profile = NormProfile::from_scaled(&rv.out);
    Ok(HalfLineSolution {
        phi,
        side,
        e,
        boundary: bx,
        values: ru.out,
        partner: rv.out,
        truncated_at,
        max_weight,
        residual,
        u_profile,
        v_profile,
    })
}
