use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::decompose::{measure_strip_constant, DecomposeConfig};
use super::interval::{find_large_norm_interval, LargeNormInterval};
use super::{decompose_f, log_add_exp, n2_threshold, FourierError};
use crate::cocycle::{step_matrices, ScaledMatrix2x2, ScaledScalar};
use crate::lattice::OperatorModel;

/// Largest `ell` accepted by [`sum_norm_growth`].
pub const MAX_SUM_LEN: usize = 100_000;

/// Walks `A(k)` for `k = 1 ..= len`, handing `(k, ln ||A(k)||_HS)` to `f`.
fn walk_norms(
    model: &OperatorModel,
    e: f64,
    len: usize,
    mut f: impl FnMut(usize, f64),
) -> Result<(), FourierError> {
    model.check_covers(-1, len as i64)?;
    let mut acc = ScaledMatrix2x2::identity();
    let mut w_prev = model.weight(-1);
    for s in 0..len as i64 {
        let (w, v) = model.site(s);
        if model.is_zero_weight(w) {
            return Err(FourierError::SingularStep { site: Some(s) });
        }
        let a = step_matrices(e, v, w, w_prev).a()?;
        acc.left_mul_step(&a, ScaledScalar::from_complex(w_prev.conj() / w));
        f(s as usize + 1, acc.ln_hs_norm());
        w_prev = w;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JmRow {
    pub m: usize,
    pub window_lo: u64,
    pub window_hi: u64,
    /// First index of the window with `ln ||A(j)|| > c0 q a`.
    pub j: u64,
    pub ln_norm: f64,
}

/// Large norms at density one per `2 q_n` block along the orbit of `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormGrowthCertificate {
    pub q_n: u64,
    pub a: f64,
    pub c1: f64,
    pub d: u64,
    /// `3a / (2 C1 - a)`.
    pub c2: f64,
    /// `c2 / (320 d)`.
    pub c0: f64,
    /// `[c2 q_n / (4d)] - 1`.
    pub k_n: i64,
    /// `max(5 d n0 / c2, ln(sup|c| / |c(theta)|) / (c0 a))` with
    /// `n0 = max(n2, 4 / a)`.
    pub n1: f64,
    pub past_n1: bool,
    /// `c0 q_n a`.
    pub threshold_ln: f64,
    pub rows: Vec<JmRow>,
    /// `ln sum_{k=1}^{(2m+2) q_n - 1} ||A(k)||^2` for each window.
    pub window_sums_ln: Vec<f64>,
    /// `sum >= (m+1) e^{2 c0 q_n a}` at every window end.
    pub sum_lower_ok: bool,
    /// `Delta_{k_n}`, when `k_n >= 1` and the level set is nonempty.
    pub delta: Option<LargeNormInterval>,
}

/// Indices `j_m in [2 m q_n, (2m+2) q_n)` with `||A(j_m)||_HS > e^{c0 q_n a}`
/// for `m = 0 .. windows`; the first window starts at 1.
pub fn localization_density(
    model: &OperatorModel,
    e: f64,
    q_n: u64,
    a: f64,
    windows: usize,
) -> Result<NormGrowthCertificate, FourierError> {
    if !(a > 0.0 && a.is_finite()) || q_n == 0 || windows == 0 {
        return Err(FourierError::InvalidInput(format!("need a > 0, q_n > 0, windows > 0 (a = {a}, q_n = {q_n})")));
    }
    let strip = measure_strip_constant(model, e, q_n as usize, &DecomposeConfig::default())?;
    let c1 = strip.c1;
    if 2.0 * c1 <= a {
        return Err(FourierError::InvalidInput(format!("a = {a} is not below 2 C1 = {}", 2.0 * c1)));
    }
    let d = (c1 / (PI * strip.rho)).floor().max(0.0) as u64 + 2;
    let c2 = 3.0 * a / (2.0 * c1 - a);
    let c0 = c2 / (320.0 * d as f64);
    let q = q_n as f64;
    let k_n = (c2 * q / (4.0 * d as f64)).floor() as i64 - 1;
    let n0 = n2_threshold(strip.rho).max(4.0 / a);
    let c_theta = model.weight(0).norm();
    if model.is_zero_weight(model.weight(0)) {
        return Err(FourierError::SingularStep { site: Some(0) });
    }
    let n1 = (5.0 * d as f64 * n0 / c2).max((model.weight_sup_bound() / c_theta).ln() / (c0 * a));
    let threshold_ln = c0 * q * a;

    let total = 2 * windows as u64 * q_n;
    let mut found: Vec<Option<(u64, f64)>> = vec![None; windows];
    let mut best: Vec<(u64, f64)> = vec![(0, f64::NEG_INFINITY); windows];
    let mut window_sums_ln = vec![f64::NEG_INFINITY; windows];
    let mut sum = f64::NEG_INFINITY;
    walk_norms(model, e, total as usize - 1, |k, ln| {
        let k = k as u64;
        sum = log_add_exp(sum, 2.0 * ln);
        let m = (k / (2 * q_n)) as usize;
        if ln > best[m].1 {
            best[m] = (k, ln);
        }
        if found[m].is_none() && ln > threshold_ln {
            found[m] = Some((k, ln));
        }
        if (k + 1) % (2 * q_n) == 0 {
            window_sums_ln[m] = sum;
        }
    })?;
    let mut rows = Vec::with_capacity(windows);
    for (m, hit) in found.iter().enumerate() {
        let lo = (2 * m as u64 * q_n).max(1);
        let hi = (2 * m as u64 + 2) * q_n;
        match hit {
            Some((j, ln)) => rows.push(JmRow { m, window_lo: lo, window_hi: hi, j: *j, ln_norm: *ln }),
            None => {
                return Err(FourierError::NotFound {
                    m,
                    best_j: best[m].0 as i64,
                    best_ln_norm: best[m].1,
                    threshold_ln,
                })
            }
        }
    }
    let sum_lower_ok =
        window_sums_ln.iter().enumerate().all(|(m, s)| *s >= ((m + 1) as f64).ln() + 2.0 * threshold_ln);
    let delta = if k_n >= 1 {
        decompose_f(model, e, k_n as usize).ok().and_then(|dec| find_large_norm_interval(&dec, a).ok())
    } else {
        None
    };
    Ok(NormGrowthCertificate {
        q_n,
        a,
        c1,
        d,
        c2,
        c0,
        k_n,
        n1,
        past_n1: q >= n1,
        threshold_ln,
        rows,
        window_sums_ln,
        sum_lower_ok,
        delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionSum {
    /// `ln sum_{k=1}^{ell} ||A(k)||_HS^2`.
    pub ln_sum: f64,
    /// `ln(sum) / ln(ell)`.
    pub exponent_fit: f64,
    pub meets_target: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumNormGrowth {
    pub ell: usize,
    /// `1 + gain`, the exponent to beat.
    pub target_exponent: f64,
    pub forward: DirectionSum,
    /// Same sum for the cocycle at `(theta - alpha, -alpha)`.
    pub reversed: DirectionSum,
    /// `|sum_fwd / sum_rev - 1|`.
    pub direction_gap: f64,
}

fn direction(model: &OperatorModel, e: f64, ell: usize, target: f64) -> Result<DirectionSum, FourierError> {
    let mut sum = f64::NEG_INFINITY;
    walk_norms(model, e, ell, |_, ln| sum = log_add_exp(sum, 2.0 * ln))?;
    let exponent_fit = sum / (ell as f64).ln();
    Ok(DirectionSum { ln_sum: sum, exponent_fit, meets_target: exponent_fit >= target })
}

/// `sum_{k=1}^{ell} ||A(k)||^2` in both directions, against `ell^{1 + gain}`.
pub fn sum_norm_growth(model: &OperatorModel, e: f64, ell: usize, gain: f64) -> Result<SumNormGrowth, FourierError> {
    if !(2..=MAX_SUM_LEN).contains(&ell) {
        return Err(FourierError::InvalidInput(format!("need 2 <= ell <= {MAX_SUM_LEN}, got {ell}")));
    }
    let target = 1.0 + gain;
    let forward = direction(model, e, ell, target)?;
    let reversed = direction(&model.reversed_frequency(), e, ell, target)?;
    Ok(SumNormGrowth {
        ell,
        target_exponent: target,
        forward,
        reversed,
        direction_gap: (forward.ln_sum - reversed.ln_sum).exp_m1().abs(),
    })
}
