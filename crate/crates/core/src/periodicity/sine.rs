use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

use super::PeriodicityError;
use crate::numberkit::{circle_norm, mul_frac, Frequency};

/// `ln |sin pi x|`, evaluated through the distance to the nearest integer so
/// that points close to a zero keep full relative accuracy.
#[inline]
pub fn ln_abs_sin_pi(x: f64) -> f64 {
    (PI * circle_norm(x)).sin().ln()
}

/// `ln prod_{j=0}^{q-1} 2 |sin pi (theta + j p / q)|`, with the rotation
/// reduced exactly modulo 1.
pub fn ln_sine_product_rational(theta: f64, p: u64, q: u64) -> f64 {
    (0..q)
        .map(|j| {
            let r = ((j as u128 * p as u128) % q as u128) as f64 / q as f64;
            LN_2 + ln_abs_sin_pi(theta + r)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineDeviation {
    /// `sum_{j != j0} ln |sin pi (theta + j alpha)|`.
    pub sum_excl_min: f64,
    /// `sum_excl_min + (q - 1) ln 2`.
    pub deviation: f64,
    pub j0: u64,
    /// `|deviation| / ln q` (zero for `q = 1`).
    pub c_eff: f64,
}

/// Sum of `ln |sin pi (theta + j alpha)|` over `0 <= j < q` without its
/// smallest term. `q` must be a continued-fraction denominator of `alpha`.
pub fn sine_product_deviation(theta: f64, freq: &Frequency, q: u64) -> Result<SineDeviation, PeriodicityError> {
    if !freq.is_denominator(q) {
        return Err(PeriodicityError::NotADenominator { q });
    }
    sine_product_deviation_unchecked(theta, freq.value, q)
}

/// As [`sine_product_deviation`] without the denominator check.
pub fn sine_product_deviation_unchecked(theta: f64, alpha: f64, q: u64) -> Result<SineDeviation, PeriodicityError> {
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut j0 = 0;
    for j in 0..q {
        let x = theta + mul_frac(j as f64, alpha);
        if circle_norm(x) == 0.0 {
            return Err(PeriodicityError::ExactZeroTerm { j });
        }
        let l = ln_abs_sin_pi(x);
        sum += l;
        if l < min {
            min = l;
            j0 = j;
        }
    }
    let sum_excl_min = sum - min;
    let deviation = sum_excl_min + (q as f64 - 1.0) * LN_2;
    let c_eff = if q > 1 { deviation.abs() / (q as f64).ln() } else { 0.0 };
    Ok(SineDeviation { sum_excl_min, deviation, j0, c_eff })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_identity_small_case() {
        let theta: f64 = 0.123;
        let lhs = ln_sine_product_rational(theta, 3, 7);
        let rhs = (2.0 * (PI * 7.0 * theta).sin().abs()).ln();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn zero_term_is_an_error() {
        let g = Frequency::golden(20);
        assert_eq!(sine_product_deviation(0.0, &g, 89), Err(PeriodicityError::ExactZeroTerm { j: 0 }));
    }

    #[test]
    fn non_denominator_rejected() {
        let g = Frequency::golden(20);
        assert!(matches!(sine_product_deviation(0.3, &g, 90), Err(PeriodicityError::NotADenominator { .. })));
    }

    #[test]
    fn golden_89_is_moderate() {
        let g = Frequency::golden(20);
        let d = sine_product_deviation(0.3141, &g, 89).unwrap();
        assert!(d.c_eff < 20.0);
        assert!(d.j0 < 89);
    }
}
