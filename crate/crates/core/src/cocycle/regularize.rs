//! The unitary regularization `A~_n = r_{n-1} T_n^{-1} A_n T_{n-1}` that turns
//! a complex cocycle into a real unimodular one.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::product::{a_product, r_step};
use super::scaled::{Mat2, ScaledMatrix2x2, ScaledScalar};
use super::CocycleError;
use crate::lattice::OperatorModel;

type C = Complex64;

/// Largest conjugacy residual tolerated by [`regularize_product`].
pub const CONJUGACY_TOL: f64 = 1e-8;

/// Second diagonal entry of `T_n = diag(1, t_n)`, `t_n = w_n / |w_n|`.
///
/// This is the branch of `sqrt(w_n / conj(w_n))` for which
/// `conj(w_n) t_n = |w_n|`, which is what makes the closed form of `A~_n` hold
/// for every argument of `w_n`.
#[inline]
pub fn t_entry(w: C) -> C {
    w / w.norm()
}

/// `A~_n = (1/sqrt|w_n w_{n-1}|) [[E - v_n, -|w_{n-1}|], [|w_n|, 0]]`.
#[inline]
pub fn regularized_step(e: f64, v: f64, w: C, w_prev: C) -> Mat2 {
    let (a, b) = (w.norm(), w_prev.norm());
    Mat2::real(e - v, -b, a, 0.0).scale_real(1.0 / (a * b).sqrt())
}

/// `diag(1, left)^{-1} * m * diag(1, right)` for unit `left`, `right`.
pub fn conj_diag(m: &ScaledMatrix2x2, left: C, right: C) -> ScaledMatrix2x2 {
    let [a, b, c, d] = m.entries.m;
    let li = left.conj();
    let mut out = *m;
    out.entries = Mat2::new(a, b * right, c * li, d * li * right);
    out.det = m.det.mul(ScaledScalar::from_complex(li * right));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizedProduct {
    pub a_tilde: ScaledMatrix2x2,
    pub a: ScaledMatrix2x2,
    /// `r(n, m-1)`.
    pub r: ScaledScalar,
    /// `t_{n+m-1}`.
    pub t_end: C,
    /// `t_{m-1}`.
    pub t_start: C,
    /// `||A~ - r T^{-1} A T|| / ||A~||`.
    pub residual: f64,
}

/// `A~(n, m)` by direct stepwise multiplication, with the conjugacy identity
/// against `A(n, m)` checked.
pub fn regularize_product(model: &OperatorModel, e: f64, n: i64, m: i64) -> Result<RegularizedProduct, CocycleError> {
    if n < 1 {
        return Err(CocycleError::InvalidInput(format!("length {n} < 1")));
    }
    model.check_covers(m - 1, m + n - 1)?;
    let mut at = ScaledMatrix2x2::identity();
    let mut r = ScaledScalar::one();
    let mut w_prev = model.weight(m - 1);
    if model.is_zero_weight(w_prev) {
        return Err(CocycleError::SingularStep { site: Some(m - 1) });
    }
    let t_start = t_entry(w_prev);
    for j in m..m + n {
        let (w, v) = model.site(j);
        if model.is_zero_weight(w) {
            return Err(CocycleError::SingularStep { site: Some(j) });
        }
        at.left_mul_step(&regularized_step(e, v, w, w_prev), ScaledScalar::one());
        r = r.mul(ScaledScalar::from_complex(r_step(w, w_prev)));
        w_prev = w;
    }
    let t_end = t_entry(w_prev);
    let a = a_product(model, e, n, m)?;
    let rhs = conj_diag(&a, t_end, t_start).scale_by(r);
    let residual = (at.ln_op_norm_diff(&rhs) - at.ln_op_norm()).exp();
    if !(residual <= CONJUGACY_TOL) {
        return Err(CocycleError::ConjugacyResidual { residual });
    }
    Ok(RegularizedProduct { a_tilde: at, a, r, t_end, t_start, residual })
}

/// `A~(n, m)` without the conjugacy check.
pub fn a_tilde_product(model: &OperatorModel, e: f64, n: i64, m: i64) -> Result<ScaledMatrix2x2, CocycleError> {
    model.check_covers(m - 1, m + n - 1)?;
    let mut at = ScaledMatrix2x2::identity();
    let mut w_prev = model.weight(m - 1);
    for j in m..m + n {
        let (w, v) = model.site(j);
        if model.is_zero_weight(w) || model.is_zero_weight(w_prev) {
            return Err(CocycleError::SingularStep { site: Some(j) });
        }
        at.left_mul_step(&regularized_step(e, v, w, w_prev), ScaledScalar::one());
        w_prev = w;
    }
    Ok(at)
}

/// Growth and lower-bound exponents of the weights on a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaMeasurement {
    /// `max_m -(1/q) ln |w(q, m)|`.
    pub lower_exponent: f64,
    /// `max_{1<=n<=q, m} (1/n) ln max(||D(n,m)||, |w(n,m)|)`.
    pub growth_exponent: f64,
    /// Larger of the two, floored at zero.
    pub lambda: f64,
}

/// Measures the exponent `Lambda` for which `|w(q,m)| >= e^{-Lambda q}` and
/// `||D(n,m)||, |w(n,m)| <= e^{Lambda n}` hold on `|m| <= window`.
pub fn measure_lambda(model: &OperatorModel, e: f64, q: i64, window: i64) -> Result<LambdaMeasurement, CocycleError> {
    if q < 1 || window < 0 {
        return Err(CocycleError::InvalidInput(format!("q = {q}, window = {window}")));
    }
    model.check_covers(-window - 1, window + q)?;
    let rows: Vec<(f64, f64)> = (-window..=window)
        .into_par_iter()
        .map(|m| {
            let mut d = ScaledMatrix2x2::identity();
            let mut lw = 0.0;
            let mut growth = f64::NEG_INFINITY;
            let mut w_prev = model.weight(m - 1);
            for k in 0..q {
                let (w, v) = model.site(m + k);
                let step = super::product::step_matrices(e, v, w, w_prev);
                d.left_mul_step(&step.d, ScaledScalar::from_complex(w * w_prev.conj()));
                lw += w.norm().ln();
                let g = d.ln_op_norm().max(lw) / (k + 1) as f64;
                growth = growth.max(g);
                w_prev = w;
            }
            (-lw / q as f64, growth)
        })
        .collect();
    let lower = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let growth = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(LambdaMeasurement { lower_exponent: lower, growth_exponent: growth, lambda: lower.max(growth).max(0.0) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    /// Largest observed value over the window.
    pub observed: f64,
    /// Natural log of `observed`, finite even when `observed` overflows.
    pub ln_observed: f64,
    pub bound: f64,
    pub ln_bound: f64,
    /// Window offset where the maximum is attained.
    pub argmax: i64,
    pub pass: bool,
}

impl BoundCheck {
    fn new(name: &str, ln_observed: f64, argmax: i64, ln_bound: f64) -> Self {
        BoundCheck {
            name: name.to_string(),
            observed: ln_observed.exp(),
            ln_observed,
            bound: ln_bound.exp(),
            ln_bound,
            argmax,
            pass: ln_observed <= ln_bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub q: i64,
    pub window: i64,
    pub beta: f64,
    pub lambda: f64,
    pub e: f64,
    /// `| |r^{+-}(q,m)| - 1 |`, `||T_{m+q}^{-1} T_m - I||`,
    /// `||A(q,m) - A(q,m+q)||`, `||A~(q,m) - A~(q,m+q)||`,
    /// `| |Tr A~(q,m)| - |Tr A(q,m)| |`, in that order.
    pub checks: Vec<BoundCheck>,
}

impl RegularityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn ln_abs(x: f64) -> f64 {
    x.abs().ln()
}

/// Evaluates the five almost-periodicity quantities of the regularized
/// cocycle over `|m| <= window` against their exponential bounds.
pub fn regularity_bounds_check(
    model: &OperatorModel,
    e: f64,
    q: i64,
    window: i64,
    beta: f64,
    lambda: f64,
) -> Result<RegularityReport, CocycleError> {
    if q < 1 || window < 0 {
        return Err(CocycleError::InvalidInput(format!("q = {q}, window = {window}")));
    }
    let lo = -window;
    let hi = window + q;
    model.check_covers(lo - 1, hi + q)?;
    // A(q, m) and A~(q, m) for every m needed
    let table: Vec<(ScaledMatrix2x2, ScaledMatrix2x2)> = (lo..=hi)
        .into_par_iter()
        .map(|m| Ok((a_product(model, e, q, m)?, a_tilde_product(model, e, q, m)?)))
        .collect::<Result<_, CocycleError>>()?;
    let at = |m: i64| &table[(m - lo) as usize];

    let qf = q as f64;
    let mut best = [(f64::NEG_INFINITY, -window); 5];
    for m in -window..=window {
        let wm = model.weight(m);
        let wmq = model.weight(m + q);
        // |r(q,m)| = sqrt(|w_{m+q}| / |w_m|) by telescoping
        let ln_r = 0.5 * (wmq.norm().ln() - wm.norm().ln());
        let r_dev = (ln_r.exp() - 1.0).abs().max(((-ln_r).exp() - 1.0).abs());
        let t_dev = (t_entry(wm) / t_entry(wmq) - 1.0).norm();
        let (a0, t0) = at(m);
        let (a1, t1) = at(m + q);
        let a_dev = a0.ln_op_norm_diff(a1);
        let at_dev = t0.ln_op_norm_diff(t1);
        let tr_gap = trace_gap_ln(t0, a0);
        let vals = [ln_abs(r_dev), ln_abs(t_dev), a_dev, at_dev, tr_gap];
        for (slot, v) in best.iter_mut().zip(vals) {
            if v > slot.0 {
                *slot = (v, m);
            }
        }
    }
    let b2 = -(beta - 2.0 * lambda) * qf;
    let b6 = -(beta - 6.0 * lambda) * qf;
    let b4 = -(beta - 4.0 * lambda) * qf;
    let names = ["r_modulus", "t_conjugator", "a_shift", "a_tilde_shift", "trace_gap"];
    let bounds = [b2, 4f64.ln() + b2, b6, b6, 12f64.ln() + b4];
    let checks = (0..5).map(|i| BoundCheck::new(names[i], best[i].0, best[i].1, bounds[i])).collect();
    Ok(RegularityReport { q, window, beta, lambda, e, checks })
}

/// `ln | |Tr A~| - |Tr A| |` with both traces at a common scale.
pub fn trace_gap_ln(a_tilde: &ScaledMatrix2x2, a: &ScaledMatrix2x2) -> f64 {
    let s = a_tilde.log2_scale.max(a.log2_scale);
    let x = a_tilde.entries.trace().norm() * (a_tilde.log2_scale - s).exp2();
    let y = a.entries.trace().norm() * (a.log2_scale - s).exp2();
    s * std::f64::consts::LN_2 + (x - y).abs().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{EhmParams, SamplingFunction, TrigPoly};

    #[test]
    fn real_positive_weight_is_already_regular() {
        let model = OperatorModel::quasiperiodic(
            SamplingFunction::constant(0.7),
            SamplingFunction::Cosine { amplitude: 1.3, shift: 0.1 },
            0.618,
            0.2,
        );
        let p = regularize_product(&model, 0.4, 50, 3).unwrap();
        assert_eq!(p.t_end, C::new(1.0, 0.0));
        assert!((p.r.abs() - 1.0).abs() < 1e-14);
        assert!(p.a_tilde.ln_op_norm_diff(&p.a) - p.a.ln_op_norm() < (1e-12f64).ln());
    }

    #[test]
    fn conjugacy_with_complex_weights() {
        let c = TrigPoly::from_pairs(&[(-1, C::new(0.2, 0.3)), (0, C::new(1.1, -0.4)), (2, C::new(0.0, 0.25))]);
        let model = OperatorModel::quasiperiodic(
            SamplingFunction::Trig(c),
            SamplingFunction::Cosine { amplitude: 2.0, shift: 0.0 },
            0.41421356237309503,
            0.05,
        );
        let p = regularize_product(&model, 0.3, 2000, -100).unwrap();
        assert!(p.residual < 1e-10, "{}", p.residual);
        assert!((p.a_tilde.det_value() - 1.0).norm() < 1e-10);
        assert!(p.a_tilde.entries.is_real(0.0));
    }

    #[test]
    fn constant_coefficients_have_zero_deviation() {
        let model = OperatorModel::quasiperiodic(
            SamplingFunction::constant(0.8),
            SamplingFunction::constant(0.3),
            0.618,
            0.0,
        );
        let rep = regularity_bounds_check(&model, 0.5, 5, 20, 1.0, 0.1).unwrap();
        for c in &rep.checks {
            assert!(c.observed <= 1e-12, "{} {}", c.name, c.observed);
        }
        assert!(rep.all_pass());
    }

    #[test]
    fn lambda_of_constant_weight() {
        let model = EhmParams::new(0.0, 0.5, 0.0).unwrap().model(0.618, 0.0);
        let lm = measure_lambda(&model, 0.0, 8, 10).unwrap();
        assert!((lm.lower_exponent - 2f64.ln()).abs() < 1e-12);
    }
}
