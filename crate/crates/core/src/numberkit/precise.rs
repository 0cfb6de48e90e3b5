//! Real numbers known to lie in a rational interval.
//!
//! Every constructor yields a certified bracket `lo <= x <= hi`; exact
//! rationals have `lo == hi`. Continued-fraction quotients are extracted
//! only while both endpoints agree on them.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::NumberError;

#[derive(Debug, Clone, PartialEq)]
pub struct PreciseReal {
    pub lo: BigRational,
    pub hi: BigRational,
    /// Working precision in bits (width of the bracket is at most 2^-bits).
    pub bits: u32,
}

fn pow2(bits: u32) -> BigInt {
    BigInt::one() << bits
}

impl PreciseReal {
    pub fn exact(x: BigRational) -> Self {
        PreciseReal { lo: x.clone(), hi: x, bits: u32::MAX }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    /// `(sqrt(5) - 1) / 2`.
    pub fn golden(bits: u32) -> Self {
        // s = floor(sqrt(5) * 2^bits)
        let s = (BigInt::from(5) << (2 * bits)).sqrt();
        let den = pow2(bits + 1);
        let lo = BigRational::new(&s - pow2(bits), den.clone());
        let hi = BigRational::new(&s + 1 - pow2(bits), den);
        PreciseReal { lo, hi, bits }
    }

    /// `sqrt(2) - 1`.
    pub fn sqrt2_minus_1(bits: u32) -> Self {
        let s = (BigInt::from(2) << (2 * bits)).sqrt();
        let den = pow2(bits);
        let lo = BigRational::new(&s - pow2(bits), den.clone());
        let hi = BigRational::new(&s + 1 - pow2(bits), den);
        PreciseReal { lo, hi, bits }
    }

    /// Parses a plain decimal such as `0.318`; the value is exact.
    pub fn parse_decimal(text: &str) -> Result<Self, NumberError> {
        let t = text.trim();
        let bad = || NumberError::Parse(text.to_string());
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((a, b)) => (a, b),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let mut num: BigInt = digits.parse().map_err(|_| bad())?;
        if neg {
            num = -num;
        }
        let den = BigInt::from(10u32).pow(frac_part.len() as u32);
        Ok(PreciseReal::exact(BigRational::new(num, den)))
    }

    /// A double taken as accurate to half an ulp.
    pub fn from_f64(x: f64) -> Result<Self, NumberError> {
        let mid = BigRational::from_float(x).ok_or_else(|| NumberError::Parse(x.to_string()))?;
        let ulp = x.abs() * f64::EPSILON;
        let r = BigRational::from_float(ulp.max(f64::MIN_POSITIVE)).unwrap();
        Ok(PreciseReal { lo: &mid - &r, hi: &mid + &r, bits: 52 })
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(BigInt::from(2))
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.midpoint())
    }
}

/// Accurate conversion of a big rational to the nearest-ish double.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let neg = x.is_negative();
    let n = x.numer().abs().to_biguint().unwrap();
    let d = x.denom().abs().to_biguint().unwrap();
    // scale so the integer quotient has ~64 significant bits
    let shift = 64i64 + d.bits() as i64 - n.bits() as i64;
    let q = if shift >= 0 { (n << shift as u64) / d } else { n / (d << (-shift) as u64) };
    let v = q.to_f64().unwrap() * 2f64.powi(-shift as i32);
    if neg {
        -v
    } else {
        v
    }
}

/// `ceil(exp(x))` for an exact nonnegative rational `x`, via fixed-point
/// Taylor series and repeated squaring with guard bits.
pub fn ceil_exp(x: &BigRational) -> BigUint {
    let xf = rational_to_f64(x);
    let mag_bits = (xf / std::f64::consts::LN_2).ceil().max(0.0) as u64;
    // halvings so that the reduced argument is below 2^-10
    let halvings = (xf.max(1.0).log2().ceil() as u64) + 10;
    let frac_bits = mag_bits + halvings + 96;
    let one = BigInt::one() << frac_bits;
    // r = x / 2^halvings in fixed point
    let r: BigInt = (x.numer() << frac_bits) / (x.denom() << halvings);
    // exp(r) = sum r^k / k!
    let mut term = one.clone();
    let mut sum = one.clone();
    let mut k = 1u32;
    while !term.is_zero() {
        term = (&term * &r >> frac_bits) / BigInt::from(k);
        sum += &term;
        k += 1;
    }
    for _ in 0..halvings {
        sum = &sum * &sum >> frac_bits;
    }
    let int_part = &sum >> frac_bits;
    let has_frac = !(&sum - (&int_part << frac_bits)).is_zero();
    let c = if has_frac { int_part + 1 } else { int_part };
    c.to_biguint().expect("exp is positive")
}
