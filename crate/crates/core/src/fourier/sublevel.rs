use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::FourierError;
use crate::periodicity::poly_roots;

/// Measured `|p^{-1}(a, b)|` against
/// `2 diam(z(p - a)) max{t, t^{1/2}}`, `t = (b - a) / (zeta(p) + a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublevelReport {
    pub degree: usize,
    pub roots: Vec<f64>,
    pub critical_points: Vec<f64>,
    /// `min |p|` over the critical points; `None` in degree one.
    pub zeta: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub preimage_len: f64,
    /// Diameter of the real solutions of `p = a`.
    pub diam: f64,
    pub bound: f64,
    /// Degree one: no critical points, the bound is reported as infinite.
    pub vacuous: bool,
    pub holds: bool,
}

fn eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn derivative(p: &[f64]) -> Vec<f64> {
    p.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect()
}

/// Root of `f` in `[lo, hi]` given a sign change, to full precision.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A monotone piece of `p` between consecutive critical points.
struct Piece {
    lo: f64,
    hi: f64,
    /// Values at the ends, infinite at unbounded ends.
    v_lo: f64,
    v_hi: f64,
}

impl Piece {
    fn range(&self) -> (f64, f64) {
        (self.v_lo.min(self.v_hi), self.v_lo.max(self.v_hi))
    }

    /// The `x` in the piece with `p(x) = y`, for `y` in the closed range.
    fn solve(&self, p: &[f64], y: f64) -> f64 {
        if y == self.v_lo {
            return self.lo;
        }
        if y == self.v_hi {
            return self.hi;
        }
        let f = |x: f64| eval(p, x) - y;
        let increasing = self.v_hi > self.v_lo;
        let up = |x: f64| if increasing { f(x) } else { -f(x) };
        let (mut lo, mut hi) = (self.lo, self.hi);
        // bracket unbounded ends by doubling
        let anchor = if lo.is_finite() { lo } else if hi.is_finite() { hi } else { 0.0 };
        if !lo.is_finite() {
            let mut step = 1.0;
            lo = anchor - step;
            while up(lo) > 0.0 {
                step *= 2.0;
                lo = anchor - step;
            }
        }
        if !hi.is_finite() {
            let mut step = 1.0;
            hi = anchor + step;
            while up(hi) < 0.0 {
                step *= 2.0;
                hi = anchor + step;
            }
        }
        bisect(up, lo, hi)
    }
}

fn trimmed(p: &[f64]) -> Vec<f64> {
    let mut v = p.to_vec();
    while v.len() > 1 && *v.last().unwrap() == 0.0 {
        v.pop();
    }
    v
}

/// Real roots of a polynomial with only simple real zeros, sorted.
fn real_simple_roots(p: &[f64]) -> Result<Vec<f64>, FourierError> {
    let n = p.len() - 1;
    if n == 1 {
        return Ok(vec![-p[0] / p[1]]);
    }
    let coeffs: Vec<Complex64> = p.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    let mut roots = Vec::with_capacity(n);
    for z in poly_roots(&coeffs) {
        if z.im.abs() > 1e-6 * z.norm().max(1.0) {
            return Err(FourierError::DegenerateZeros(format!("non-real zero {z}")));
        }
        roots.push(z.re);
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    let spread = (roots[n - 1] - roots[0]).max(1.0);
    if roots.windows(2).any(|w| w[1] - w[0] <= 1e-9 * spread) {
        return Err(FourierError::DegenerateZeros("repeated zero".into()));
    }
    // isolate: p changes sign between consecutive zeros, then polish
    let mut polished = Vec::with_capacity(n);
    for i in 0..n {
        let left = if i == 0 { roots[0] - spread } else { 0.5 * (roots[i - 1] + roots[i]) };
        let right = if i == n - 1 { roots[n - 1] + spread } else { 0.5 * (roots[i] + roots[i + 1]) };
        let (fl, fr) = (eval(p, left), eval(p, right));
        if fl == 0.0 || fr == 0.0 || (fl > 0.0) == (fr > 0.0) {
            return Err(FourierError::DegenerateZeros(format!("zero near {} not isolated", roots[i])));
        }
        polished.push(bisect(|x| eval(p, x), left, right));
    }
    Ok(polished)
}

/// Checks `|p^{-1}(a, b)| <= 2 diam(z(p - a)) max{t, t^{1/2}}` for a real
/// polynomial (ascending coefficients) with simple real zeros.
pub fn sublevel_measure_bound(p: &[f64], a: f64, b: f64) -> Result<SublevelReport, FourierError> {
    if !(a >= 0.0 && a < b && b.is_finite()) {
        return Err(FourierError::InvalidInput(format!("need 0 <= a < b, got ({a}, {b})")));
    }
    if p.iter().any(|c| !c.is_finite()) {
        return Err(FourierError::InvalidInput("non-finite coefficient".into()));
    }
    let p = trimmed(p);
    let degree = p.len() - 1;
    if degree == 0 {
        return Err(FourierError::DegenerateZeros("constant polynomial".into()));
    }
    let roots = real_simple_roots(&p)?;
    let dp = derivative(&p);
    let critical_points: Vec<f64> = roots.windows(2).map(|w| bisect(|x| eval(&dp, x), w[0], w[1])).collect();
    let zeta = critical_points.iter().map(|&x| eval(&p, x).abs()).reduce(f64::min);

    let lead = p[degree];
    let at_pos_inf = lead.signum() * f64::INFINITY;
    let at_neg_inf = if degree % 2 == 0 { at_pos_inf } else { -at_pos_inf };
    let mut cuts = vec![f64::NEG_INFINITY];
    cuts.extend(&critical_points);
    cuts.push(f64::INFINITY);
    let pieces: Vec<Piece> = cuts
        .windows(2)
        .map(|w| Piece {
            lo: w[0],
            hi: w[1],
            v_lo: if w[0].is_finite() { eval(&p, w[0]) } else { at_neg_inf },
            v_hi: if w[1].is_finite() { eval(&p, w[1]) } else { at_pos_inf },
        })
        .collect();

    let mut preimage_len = 0.0;
    let mut level_a = Vec::new();
    for piece in &pieces {
        let (lo_v, hi_v) = piece.range();
        let (y1, y2) = (a.max(lo_v), b.min(hi_v));
        if y1 < y2 {
            preimage_len += (piece.solve(&p, y2) - piece.solve(&p, y1)).abs();
        }
        if lo_v <= a && a <= hi_v {
            level_a.push(piece.solve(&p, a));
        }
    }
    let diam = match (level_a.iter().cloned().reduce(f64::min), level_a.iter().cloned().reduce(f64::max)) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0.0,
    };
    let (bound, vacuous) = match zeta {
        Some(z) => {
            let t = (b - a) / (z + a);
            (2.0 * diam * t.max(t.sqrt()), false)
        }
        None => (f64::INFINITY, true),
    };
    let holds = preimage_len <= bound * (1.0 + 1e-9) + 1e-12;
    Ok(SublevelReport { degree, roots, critical_points, zeta, a, b, preimage_len, diam, bound, vacuous, holds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_closed_form() {
        let r = sublevel_measure_bound(&[-1.0, 0.0, 1.0], 0.0, 0.5).unwrap();
        assert!((r.preimage_len - 2.0 * (1.5f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!((r.bound - 4.0 * 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.zeta, Some(1.0));
        assert!(r.holds && !r.vacuous);
    }

    #[test]
    fn linear_case_is_vacuous() {
        let r = sublevel_measure_bound(&[0.0, 1.0], 0.0, 1.0).unwrap();
        assert!((r.preimage_len - 1.0).abs() < 1e-12);
        assert!(r.vacuous && r.zeta.is_none() && r.holds);
    }

    #[test]
    fn scaling_leaves_both_sides_fixed() {
        let p = [0.3, -1.2, -0.4, 1.0];
        let q: Vec<f64> = p.iter().map(|c| 2.0 * c).collect();
        let r1 = sublevel_measure_bound(&p, 0.1, 0.7).unwrap();
        let r2 = sublevel_measure_bound(&q, 0.2, 1.4).unwrap();
        assert!((r1.preimage_len - r2.preimage_len).abs() < 1e-12);
        assert!((r1.bound - r2.bound).abs() < 1e-9 * r1.bound);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(sublevel_measure_bound(&[1.0, 0.0, 1.0], 0.0, 1.0), Err(FourierError::DegenerateZeros(_))));
        assert!(matches!(sublevel_measure_bound(&[1.0, -2.0, 1.0], 0.0, 1.0), Err(FourierError::DegenerateZeros(_))));
        assert!(matches!(sublevel_measure_bound(&[3.0], 0.0, 1.0), Err(FourierError::DegenerateZeros(_))));
    }
}
