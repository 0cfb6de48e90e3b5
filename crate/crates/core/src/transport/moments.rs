use serde::{Deserialize, Serialize};
use std::f64::consts::LN_10;

use super::propagate::Evolution;
use super::{TransportError, LEAKAGE_LIMIT};

/// Snapshots per e-fold of `e^{-2t/T}` required by [`moments`].
pub const POINTS_PER_EFOLD: f64 = 8.0;
/// The Abel integral must reach `t = ABEL_CUTOFF * T`.
pub const ABEL_CUTOFF: f64 = 6.0;
pub const TAIL_REL_TOL: f64 = 1e-6;
/// Default minimum span of usable `T`, in decades.
pub const MIN_FIT_DECADES: f64 = 1.5;

/// Abel-averaged moments `(2/T) int_0^inf e^{-2t/T} sum |n|^p |psi_n(t)|^2 dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    pub p: f64,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Difference against the same quadrature on every other snapshot, over 3.
    pub quad_err: Vec<f64>,
    /// Bound on the part of the integral past the last snapshot.
    pub tail_bound: Vec<f64>,
    /// `tail_bound <= 1e-6 value` at every `T`.
    pub tail_ok: bool,
    pub box_half_width: usize,
    pub leakage: f64,
    /// Requested `T` values dropped because the run stopped on leakage.
    pub truncated: bool,
}

/// `s int_{t0}^{t1} e^{-s t} (m0 + (m1 - m0)(t - t0)/h) dt`.
fn panel(s: f64, t0: f64, t1: f64, m0: f64, m1: f64) -> f64 {
    let h = t1 - t0;
    let x = s * h;
    let e0 = (-s * t0).exp();
    // int_0^h e^{-s u} du and int_0^h u e^{-s u} du, times s
    let a = -(-x).exp_m1();
    let b = if x < 1e-3 {
        h * (x / 2.0 - x * x / 3.0 + x * x * x / 8.0)
    } else {
        (1.0 - (-x).exp() * (1.0 + x)) / s
    };
    e0 * (m0 * a + (m1 - m0) / h * b)
}

fn abel(s: f64, ts: &[f64], ms: &[f64]) -> f64 {
    (1..ts.len()).filter(|&i| ts[i] > ts[i - 1]).map(|i| panel(s, ts[i - 1], ts[i], ms[i - 1], ms[i])).sum()
}

/// Tail of the Abel integral past `te`, from `sum |n|^p |psi_n|^2 <= L^p` and
/// `||X psi(t)|| <= 2 max|w| t`.
fn tail(p: f64, s: f64, te: f64, half_width: usize, max_weight: f64) -> f64 {
    let i0 = (-s * te).exp();
    let i2 = i0 * (te * te + 2.0 * te / s + 2.0 / (s * s));
    let c2 = (2.0 * max_weight).powi(2);
    let lp = (half_width as f64).powf(p);
    let light_cone = if p <= 2.0 { i0 + c2 * i2 } else { (half_width as f64).powf(p - 2.0) * c2 * i2 };
    (lp * i0).min(light_cone)
}

pub fn moments(ev: &Evolution, p: f64, t_grid: &[f64]) -> Result<MomentSeries, TransportError> {
    let k = ev
        .order_index(p)
        .ok_or_else(|| TransportError::InvalidInput(format!("order {p} was not accumulated by the evolution")))?;
    if t_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(TransportError::InvalidInput("T values must be positive".into()));
    }
    let ts: Vec<f64> = ev.snapshots.iter().map(|s| s.t).collect();
    let ms: Vec<f64> = ev.snapshots.iter().map(|s| s.moments[k]).collect();
    if ts.first() != Some(&0.0) {
        return Err(TransportError::InvalidInput("snapshots must start at t = 0".into()));
    }
    let t_end = *ts.last().unwrap();
    let mut out = MomentSeries {
        p,
        t_grid: Vec::new(),
        values: Vec::new(),
        quad_err: Vec::new(),
        tail_bound: Vec::new(),
        tail_ok: true,
        box_half_width: ev.half_width,
        leakage: ev.leakage,
        truncated: false,
    };
    // every other snapshot, keeping the last one
    let mut coarse: Vec<usize> = (0..ts.len()).step_by(2).collect();
    if *coarse.last().unwrap() != ts.len() - 1 {
        coarse.push(ts.len() - 1);
    }
    let cts: Vec<f64> = coarse.iter().map(|&i| ts[i]).collect();
    let cms: Vec<f64> = coarse.iter().map(|&i| ms[i]).collect();
    for &big_t in t_grid {
        if t_end < ABEL_CUTOFF * big_t {
            if ev.stopped_at.is_some() {
                out.truncated = true;
                continue;
            }
            return Err(TransportError::GridTooCoarse {
                big_t,
                reason: format!("snapshots end at t = {t_end} < {ABEL_CUTOFF} T"),
            });
        }
        let h_max = big_t / (2.0 * POINTS_PER_EFOLD);
        if let Some(i) = (1..ts.len()).find(|&i| ts[i - 1] < ABEL_CUTOFF * big_t && ts[i] - ts[i - 1] > h_max * (1.0 + 1e-9))
        {
            return Err(TransportError::GridTooCoarse {
                big_t,
                reason: format!("spacing {} at t = {} exceeds T/16", ts[i] - ts[i - 1], ts[i - 1]),
            });
        }
        let s = 2.0 / big_t;
        let value = abel(s, &ts, &ms);
        let coarse_value = abel(s, &cts, &cms);
        let tb = tail(p, s, t_end, ev.half_width, ev.max_weight);
        out.tail_ok &= tb <= TAIL_REL_TOL * value;
        out.t_grid.push(big_t);
        out.values.push(value);
        out.quad_err.push((value - coarse_value).abs() / 3.0);
        out.tail_bound.push(tb);
    }
    if out.t_grid.is_empty() {
        return Err(TransportError::LeakageExceeded { t: ev.stopped_at.unwrap_or(t_end), mass: ev.leakage.max(LEAKAGE_LIMIT) });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowFit {
    pub t_lo: f64,
    pub t_hi: f64,
    pub points: usize,
    /// Least-squares slope of `ln <|X|^p>` against `ln T`, divided by `p`.
    pub slope: f64,
    /// RMS residual of the fit in `ln <|X|^p>`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportExponents {
    pub p: f64,
    pub beta_minus: f64,
    pub beta_plus: f64,
    pub windows: Vec<WindowFit>,
    /// The series vanishes identically; both exponents are reported as 0.
    pub degenerate: bool,
    pub decades: f64,
}

fn fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    (slope, (rss / n).sqrt())
}

pub fn transport_exponents(series: &MomentSeries) -> Result<TransportExponents, TransportError> {
    transport_exponents_with(series, MIN_FIT_DECADES)
}

/// Extreme slopes over half-decade windows starting in the upper half of the
/// `T` range.
pub fn transport_exponents_with(series: &MomentSeries, min_decades: f64) -> Result<TransportExponents, TransportError> {
    let p = series.p;
    if series.values.iter().all(|&v| v == 0.0) && !series.values.is_empty() {
        let decades = series.t_grid.last().map_or(0.0, |hi| (hi / series.t_grid[0]).log10());
        return Ok(TransportExponents { p, beta_minus: 0.0, beta_plus: 0.0, windows: vec![], degenerate: true, decades });
    }
    let pts: Vec<(f64, f64)> =
        series.t_grid.iter().zip(&series.values).filter(|(_, v)| **v > 0.0).map(|(t, v)| (t.ln(), v.ln())).collect();
    let decades = if pts.len() < 2 { 0.0 } else { (pts[pts.len() - 1].0 - pts[0].0) / LN_10 };
    if decades < min_decades * (1.0 - 1e-9) {
        return Err(TransportError::RangeTooShort { decades, required: min_decades });
    }
    let mid = 0.5 * (pts[0].0 + pts[pts.len() - 1].0);
    let top = pts[pts.len() - 1].0;
    let half = 0.5 * LN_10;
    let mut windows = Vec::new();
    for (i, &(x0, _)) in pts.iter().enumerate() {
        if x0 < mid - 1e-12 || x0 + half > top + 1e-9 {
            continue;
        }
        let w: Vec<&(f64, f64)> = pts[i..].iter().take_while(|(x, _)| *x <= x0 + half + 1e-9).collect();
        if w.len() < 3 {
            continue;
        }
        let xs: Vec<f64> = w.iter().map(|q| q.0).collect();
        let ys: Vec<f64> = w.iter().map(|q| q.1).collect();
        let (slope, residual) = fit(&xs, &ys);
        windows.push(WindowFit {
            t_lo: x0.exp(),
            t_hi: xs[xs.len() - 1].exp(),
            points: w.len(),
            slope: slope / p,
            residual,
        });
    }
    if windows.is_empty() {
        return Err(TransportError::RangeTooShort { decades, required: min_decades });
    }
    let beta_plus = windows.iter().map(|w| w.slope).fold(f64::NEG_INFINITY, f64::max);
    let beta_minus = windows.iter().map(|w| w.slope).fold(f64::INFINITY, f64::min);
    Ok(TransportExponents { p, beta_minus, beta_plus, windows, degenerate: false, decades })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panel_integrates_linear_profiles_exactly() {
        // s int_0^inf e^{-st} t dt = 1/s
        let s = 0.5;
        let ts: Vec<f64> = (0..=4000).map(|i| i as f64 * 0.02).collect();
        let ms = ts.clone();
        assert!((abel(s, &ts, &ms) - 1.0 / s * (1.0 - (-s * 80.0).exp() * (1.0 + s * 80.0))).abs() < 1e-12);
    }

    #[test]
    fn power_law_series_fits_its_exponent() {
        let t_grid: Vec<f64> = (0..=30).map(|k| 10f64.powf(1.0 + k as f64 / 10.0)).collect();
        let values = t_grid.iter().map(|t| 3.0 * t.powf(1.4)).collect();
        let series = MomentSeries {
            p: 2.0,
            t_grid,
            values,
            quad_err: vec![],
            tail_bound: vec![],
            tail_ok: true,
            box_half_width: 0,
            leakage: 0.0,
            truncated: false,
        };
        let r = transport_exponents(&series).unwrap();
        assert!((r.beta_plus - 0.7).abs() < 1e-12 && (r.beta_minus - 0.7).abs() < 1e-12);
        assert!(r.windows.iter().all(|w| w.t_lo >= 10f64.powf(2.5) * 0.999));
        let short = MomentSeries { t_grid: series.t_grid[..12].to_vec(), values: series.values[..12].to_vec(), ..series };
        assert!(matches!(transport_exponents(&short), Err(TransportError::RangeTooShort { .. })));
    }
}
