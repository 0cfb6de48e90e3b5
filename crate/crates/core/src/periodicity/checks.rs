use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use super::{PeriodicityError, PeriodicityParams};
use crate::lattice::OperatorModel;

/// Values `a_j` for `j = start .. start + values.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceWindow {
    pub start: i64,
    pub values: Vec<Complex64>,
}

impl SequenceWindow {
    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    #[inline]
    pub fn get(&self, j: i64) -> Complex64 {
        self.values[(j - self.start) as usize]
    }

    fn require(&self, lo: i64, hi: i64) -> Result<(), PeriodicityError> {
        if lo < self.start || hi > self.end() {
            Err(PeriodicityError::WindowTooSmall { need_lo: lo, need_hi: hi, have_lo: self.start, have_hi: self.end() })
        } else {
            Ok(())
        }
    }

    /// Weights `w_j` of a model on `lo ..= hi`.
    pub fn weights(model: &OperatorModel, lo: i64, hi: i64) -> Self {
        SequenceWindow { start: lo, values: (lo..=hi).map(|j| model.weight(j)).collect() }
    }

    /// Potential values `v_j` of a model on `lo ..= hi`.
    pub fn potentials(model: &OperatorModel, lo: i64, hi: i64) -> Self {
        SequenceWindow { start: lo, values: (lo..=hi).map(|j| Complex64::new(model.potential(j), 0.0)).collect() }
    }

    /// The window needed to check `params`: `|m| <= W` plus `q` on each side.
    pub fn for_params(model: &OperatorModel, params: &PeriodicityParams, weights: bool) -> Self {
        let w = params.effective_window();
        let (lo, hi) = (-w - params.q as i64, w + params.q as i64);
        if weights {
            Self::weights(model, lo, hi)
        } else {
            Self::potentials(model, lo, hi)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlmostPeriodicReport {
    pub pass: bool,
    /// `ln max_m |a_m - a_{m+-q}| + beta q`; `-inf` for an exactly periodic window.
    pub worst_margin: f64,
    pub worst_m: i64,
    pub effective_window: i64,
}

/// `max_{|m| <= W} |a_m - a_{m+-q}| <= e^{-beta q}` on the effective window.
pub fn check_beta_almost_periodic(
    seq: &SequenceWindow,
    params: &PeriodicityParams,
) -> Result<AlmostPeriodicReport, PeriodicityError> {
    let w = params.effective_window();
    let q = params.q as i64;
    seq.require(-w - q, w + q)?;
    let mut worst = 0.0f64;
    let mut worst_m = -w;
    for m in -w..=w {
        let a = seq.get(m);
        let d = (a - seq.get(m + q)).norm().max((a - seq.get(m - q)).norm());
        if d > worst {
            worst = d;
            worst_m = m;
        }
    }
    let worst_margin = worst.ln() + params.beta * q as f64;
    Ok(AlmostPeriodicReport { pass: worst_margin <= 0.0, worst_margin, worst_m, effective_window: w })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedCheck {
    pub observed: f64,
    pub bound: f64,
    pub worst_m: i64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaBoundReport {
    pub pass: bool,
    /// `min_m ln prod_{j=m}^{m+q-1} |w_j|`.
    pub min_log_product: f64,
    /// `min_log_product / q`.
    pub min_log_product_per_q: f64,
    pub worst_m: i64,
    pub effective_window: i64,
    /// `min_{1 <= r < q, m} ln |w(r, m)|` against `-2 Lambda q`.
    pub partial_products: InducedCheck,
    /// `min_m ln |w_m|` against `-2 Lambda q`.
    pub single_site: InducedCheck,
    /// `max_m |w_{m+-q} / w_m - 1|` against `e^{-(beta - 2 Lambda) q}`.
    pub ratio: InducedCheck,
}

/// Sliding minimum of `xs[i + 1 ..= i + len]` for each start `i`.
fn sliding_min(xs: &[f64], len: usize) -> Vec<f64> {
    let n = xs.len();
    if len == 0 || n <= len {
        return vec![f64::INFINITY; n.saturating_sub(len)];
    }
    let mut out = Vec::with_capacity(n - len);
    let mut dq: VecDeque<usize> = VecDeque::new();
    for j in 1..n {
        while dq.back().is_some_and(|&b| xs[b] >= xs[j]) {
            dq.pop_back();
        }
        dq.push_back(j);
        if j >= len {
            let i = j - len;
            while dq.front().is_some_and(|&f| f <= i) {
                dq.pop_front();
            }
            out.push(xs[*dq.front().unwrap()]);
        }
    }
    out
}

/// `min_{|m| <= W} prod_{j=m}^{m+q-1} |w_j| > e^{-Lambda q}` plus the induced
/// partial-product, single-site and ratio bounds.
pub fn check_lambda_beta_bound(
    seq: &SequenceWindow,
    params: &PeriodicityParams,
) -> Result<LambdaBoundReport, PeriodicityError> {
    let w = params.effective_window();
    let q = params.q as i64;
    let qf = q as f64;
    seq.require(-w - q, w + q)?;
    for j in -w - q..=w + q {
        if seq.get(j).norm() == 0.0 {
            return Err(PeriodicityError::ZeroInWindow { site: j });
        }
    }
    // prefix[i] = sum_{j < lo + i} ln|w_j| with lo = -w
    let lo = -w;
    let len = (2 * w + q + 1) as usize;
    let mut prefix = Vec::with_capacity(len + 1);
    prefix.push(0.0f64);
    let mut acc = 0.0f64;
    let mut comp = 0.0f64;
    for j in 0..len as i64 {
        let y = seq.get(lo + j).norm().ln() - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
        prefix.push(acc);
    }
    let mut min_full = f64::INFINITY;
    let mut worst_m = lo;
    for m in lo..=w {
        let i = (m - lo) as usize;
        let s = prefix[i + q as usize] - prefix[i];
        if s < min_full {
            min_full = s;
            worst_m = m;
        }
    }
    let bound2 = -2.0 * params.lambda * qf;

    // partial products ln|w(r, m)| = prefix[i + r] - prefix[i], 1 <= r < q
    let mut partial = InducedCheck { observed: f64::INFINITY, bound: bound2, worst_m: lo, pass: true };
    if q > 1 {
        let mins = sliding_min(&prefix, (q - 1) as usize);
        for m in lo..=w {
            let i = (m - lo) as usize;
            let v = mins[i] - prefix[i];
            if v < partial.observed {
                partial.observed = v;
                partial.worst_m = m;
            }
        }
    }
    partial.pass = partial.observed >= bound2;

    let mut single = InducedCheck { observed: f64::INFINITY, bound: bound2, worst_m: lo, pass: true };
    let mut ratio = InducedCheck {
        observed: 0.0,
        bound: -(params.beta - 2.0 * params.lambda) * qf,
        worst_m: lo,
        pass: true,
    };
    for m in lo..=w {
        let wm = seq.get(m);
        let v = wm.norm().ln();
        if v < single.observed {
            single.observed = v;
            single.worst_m = m;
        }
        let r = ((seq.get(m + q) / wm) - 1.0).norm().max(((seq.get(m - q) / wm) - 1.0).norm());
        if r > ratio.observed {
            ratio.observed = r;
            ratio.worst_m = m;
        }
    }
    single.pass = single.observed >= bound2;
    // compared in log form, reported as values
    ratio.pass = ratio.observed.ln() < ratio.bound;
    ratio.bound = ratio.bound.exp();

    Ok(LambdaBoundReport {
        pass: min_full > -params.lambda * qf,
        min_log_product: min_full,
        min_log_product_per_q: min_full / qf,
        worst_m,
        effective_window: w,
        partial_products: partial,
        single_site: single,
        ratio,
    })
}
