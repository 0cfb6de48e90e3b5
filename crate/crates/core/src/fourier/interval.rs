use serde::{Deserialize, Serialize};

use super::decompose::TrigDecomposition;
use super::FourierError;

const BISECTION_STEPS: usize = 40;

/// Level sets `{F_n > e^{na/8}}`, `{P_n > e^{na/3}}`, `{f_n > e^{na/2}}` on
/// the decomposition grid and the longest arc inside the middle one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargeNormInterval {
    pub n: usize,
    pub a: f64,
    /// `n a / 8`, `n a / 3`, `n a / 2`.
    pub thresholds_ln: [f64; 3],
    /// Grid measures of the three level sets, outermost first.
    pub measures: [f64; 3],
    /// Grid points breaking `Theta3 <= Theta2 <= Theta1`.
    pub chain_violations: usize,
    pub chain_ok: bool,
    pub c1: f64,
    pub d: u64,
    /// `3a / (2 C1 - a)`.
    pub c2: f64,
    /// `Leb(Theta3) >= c2` on the grid.
    pub theta3_floor_ok: bool,
    pub n2: f64,
    /// `4 / a`.
    pub n3: f64,
    pub past_thresholds: bool,
    /// Arc `[start, end)`; `end` may exceed 1 when it wraps.
    pub delta_start: f64,
    pub delta_end: f64,
    pub delta_len: f64,
    pub delta_points: usize,
    /// `c2 / (4 d n)`.
    pub length_floor: f64,
    pub length_ok: bool,
    /// `F_n > e^{na/8}` at every grid point of the arc.
    pub norm_ok: bool,
    pub max_ln_f: f64,
}

impl LargeNormInterval {
    pub fn all_pass(&self) -> bool {
        self.chain_ok && self.length_ok && self.norm_ok
    }
}

fn refine(dec: &TrigDecomposition, mut inside: f64, mut outside: f64, t: f64) -> Result<f64, FourierError> {
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (inside + outside);
        if dec.ln_p_at(mid.rem_euclid(1.0))? > t {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok(inside)
}

pub fn find_large_norm_interval(dec: &TrigDecomposition, a: f64) -> Result<LargeNormInterval, FourierError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(FourierError::InvalidInput(format!("need a > 0, got {a}")));
    }
    if 2.0 * dec.c1 <= a {
        return Err(FourierError::InvalidInput(format!("a = {a} is not below 2 C1 = {}", 2.0 * dec.c1)));
    }
    let nf = dec.n as f64;
    let t = [nf * a / 8.0, nf * a / 3.0, nf * a / 2.0];
    let g = dec.grid;
    let in1: Vec<bool> = dec.ln_big_f.iter().map(|x| x.map_or(true, |v| v > t[0])).collect();
    let in2: Vec<bool> = (0..g).map(|i| dec.ln_p(i) > t[1]).collect();
    let in3: Vec<bool> = dec.ln_f.iter().map(|&v| v > t[2]).collect();
    let chain_violations = (0..g).filter(|&i| (in3[i] && !in2[i]) || (in2[i] && !in1[i])).count();
    let frac = |s: &[bool]| s.iter().filter(|&&x| x).count() as f64 / g as f64;
    let measures = [frac(&in1), frac(&in2), frac(&in3)];
    let max_ln_f = dec.ln_scale;
    if measures[1] == 0.0 {
        return Err(FourierError::EmptyLevelSet { max_ln_f, threshold_ln: t[1] });
    }
    let c2 = 3.0 * a / (2.0 * dec.c1 - a);
    let n3 = 4.0 / a;
    let length_floor = c2 / (4.0 * dec.d as f64 * nf);

    // longest cyclic run of in2
    let (start, len) = if measures[1] == 1.0 {
        (0, g)
    } else {
        let first_out = in2.iter().position(|x| !x).unwrap();
        let (mut best, mut cur_start, mut cur) = ((0, 0), 0, 0);
        for s in 1..=g {
            let i = (first_out + s) % g;
            if in2[i] {
                if cur == 0 {
                    cur_start = i;
                }
                cur += 1;
                if cur > best.1 {
                    best = (cur_start, cur);
                }
            } else {
                cur = 0;
            }
        }
        best
    };
    let h = 1.0 / g as f64;
    let (delta_start, delta_end) = if len == g {
        (0.0, 1.0)
    } else {
        let lo = start as f64 * h;
        let hi = (start + len - 1) as f64 * h;
        (refine(dec, lo, lo - h, t[1])?, refine(dec, hi, hi + h, t[1])?)
    };
    let delta_len = delta_end - delta_start;
    let norm_ok = (0..len).all(|k| in1[(start + k) % g]);
    Ok(LargeNormInterval {
        n: dec.n,
        a,
        thresholds_ln: t,
        measures,
        chain_violations,
        chain_ok: chain_violations == 0,
        c1: dec.c1,
        d: dec.d,
        c2,
        theta3_floor_ok: measures[2] >= c2,
        n2: dec.n2,
        n3,
        past_thresholds: nf > dec.n2.max(n3),
        delta_start: delta_start.rem_euclid(1.0),
        delta_end: delta_start.rem_euclid(1.0) + delta_len,
        delta_len,
        delta_points: len,
        length_floor,
        length_ok: delta_len >= length_floor,
        norm_ok,
        max_ln_f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::decompose_f;
    use crate::lattice::{EhmParams, OperatorModel, SamplingFunction};

    #[test]
    fn constant_hyperbolic_toy_fills_the_circle() {
        let model =
            OperatorModel::quasiperiodic(SamplingFunction::constant(1.0), SamplingFunction::constant(0.0), 0.618, 0.0);
        let dec = decompose_f(&model, 3.0, 60).unwrap();
        let l = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!(dec.ln_f.iter().all(|x| (x / (2.0 * l * 60.0) - 1.0).abs() < 0.02));
        let r = find_large_norm_interval(&dec, 1.0).unwrap();
        assert_eq!(r.measures, [1.0, 1.0, 1.0]);
        assert!(r.all_pass() && r.delta_len == 1.0);
    }

    #[test]
    fn critical_model_has_empty_level_set() {
        // region II: L = 0 on the spectrum
        let model = EhmParams::new(0.0, 2.0, 0.0).unwrap().model(0.6180339887498949, 0.1);
        let dec = decompose_f(&model, 0.0, 40).unwrap();
        let err = find_large_norm_interval(&dec, 4.0).unwrap_err();
        assert!(matches!(err, FourierError::EmptyLevelSet { .. }), "{err:?}");
    }
}
