//! Positive magnitudes too large for `f64`, stored as iterated exponentials.
//!
//! A value is `exp^height(top)`. In canonical form `height > 0` implies
//! `top > EXP_LIMIT`, so two canonical towers compare lexicographically.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

const EXP_LIMIT: f64 = 709.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tower {
    pub height: u32,
    pub top: f64,
}

impl Tower {
    pub fn from_f64(x: f64) -> Self {
        Tower { height: 0, top: x }
    }

    /// Natural log of an exact positive integer, as a plain value.
    pub fn ln_biguint(q: &BigUint) -> f64 {
        let bits = q.bits();
        if bits <= 1000 {
            q.to_f64().unwrap_or(f64::INFINITY).ln()
        } else {
            let shift = bits - 64;
            let head = (q >> shift).to_f64().unwrap_or(f64::INFINITY);
            head.ln() + shift as f64 * std::f64::consts::LN_2
        }
    }

    pub fn from_biguint(q: &BigUint) -> Self {
        let l = Self::ln_biguint(q);
        if l <= EXP_LIMIT {
            Tower::from_f64(q.to_f64().unwrap_or(f64::INFINITY))
        } else {
            Tower { height: 1, top: l }
        }
    }

    fn canonical(mut self) -> Self {
        while self.height > 0 && self.top <= EXP_LIMIT {
            self.top = self.top.exp();
            self.height -= 1;
        }
        self
    }

    pub fn exp(self) -> Self {
        if self.height == 0 && self.top <= EXP_LIMIT {
            Tower::from_f64(self.top.exp())
        } else {
            Tower { height: self.height + 1, top: self.top }
        }
    }

    /// Natural logarithm; the value must be positive.
    pub fn ln(self) -> Self {
        if self.height == 0 {
            Tower::from_f64(self.top.ln())
        } else {
            Tower { height: self.height - 1, top: self.top }.canonical()
        }
    }

    /// Collapses to `f64`, saturating at infinity.
    pub fn to_f64(self) -> f64 {
        if self.height == 0 {
            self.top
        } else {
            f64::INFINITY
        }
    }

    /// Sum of two positive magnitudes. Exact up to `f64` rounding while the
    /// logarithms are finite; beyond that the smaller term is negligible.
    pub fn add(self, other: Tower) -> Tower {
        if self.height == 0 && other.height == 0 {
            let s = self.top + other.top;
            if s.is_finite() {
                return Tower::from_f64(s);
            }
        }
        let (la, lb) = (self.ln(), other.ln());
        if la.height == 0 && lb.height == 0 {
            let (hi, lo) = if la.top >= lb.top { (la.top, lb.top) } else { (lb.top, la.top) };
            return Tower::from_f64(hi + (lo - hi).exp().ln_1p()).exp();
        }
        if self.cmp_mag(&other) == Ordering::Less {
            other
        } else {
            self
        }
    }

    /// Multiplication by a positive constant.
    pub fn scale(self, s: f64) -> Tower {
        if self.height == 0 {
            let p = self.top * s;
            if p.is_finite() {
                return Tower::from_f64(p);
            }
        }
        let l = self.ln();
        if l.height == 0 {
            Tower::from_f64(l.top + s.ln()).exp()
        } else {
            self
        }
    }

    pub fn cmp_mag(&self, other: &Tower) -> Ordering {
        let (a, b) = (self.canonical(), other.canonical());
        a.height
            .cmp(&b.height)
            .then(a.top.partial_cmp(&b.top).unwrap_or(Ordering::Equal))
    }

    /// `exp(ln(self) - ln(other))` for positive towers, i.e. the ratio
    /// `self / other` as a plain value (0 or infinity when out of range).
    pub fn ratio(self, other: Tower) -> f64 {
        let (a, b) = (self.canonical(), other.canonical());
        if a.height == 0 && b.height == 0 {
            return a.top / b.top;
        }
        let (la, lb) = (a.ln(), b.ln());
        if la.height == 0 && lb.height == 0 {
            return (la.top - lb.top).exp();
        }
        match la.cmp_mag(&lb) {
            Ordering::Greater => f64::INFINITY,
            Ordering::Less => 0.0,
            Ordering::Equal => 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values_stay_plain() {
        let t = Tower::from_f64(3.0).exp().ln();
        assert!((t.to_f64() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn double_exponential_ratio() {
        // q = e^{1e98}; ln(q + ln q) / q is 1 to double precision
        let q = Tower { height: 1, top: 1e98 };
        let lnq = q.ln();
        let next_ln = q.add(lnq);
        assert!((next_ln.ln().ratio(q.ln()) - 1.0).abs() < 1e-12);
        assert_eq!(q.cmp_mag(&lnq), Ordering::Greater);
    }

    #[test]
    fn ln_of_large_integer() {
        let q = BigUint::from(1u8) << 3000u32;
        let l = Tower::ln_biguint(&q);
        assert!((l - 3000.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }
}
