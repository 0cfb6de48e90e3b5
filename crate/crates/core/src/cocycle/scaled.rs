use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use std::ops::{Add, Mul, Sub};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Plain complex 2x2 matrix, row-major `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub m: [C; 4],
}

impl Mat2 {
    pub const fn new(a: C, b: C, c: C, d: C) -> Self {
        Mat2 { m: [a, b, c, d] }
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2::new(C::new(a, 0.0), C::new(b, 0.0), C::new(c, 0.0), C::new(d, 0.0))
    }

    pub const fn identity() -> Self {
        Mat2::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn diag(x: C, y: C) -> Self {
        Mat2::new(x, ZERO, ZERO, y)
    }

    #[inline]
    pub fn det(&self) -> C {
        self.m[0] * self.m[3] - self.m[1] * self.m[2]
    }

    #[inline]
    pub fn trace(&self) -> C {
        self.m[0] + self.m[3]
    }

    pub fn scale(&self, s: C) -> Self {
        Mat2 { m: self.m.map(|x| x * s) }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Mat2 { m: self.m.map(|x| x * s) }
    }

    pub fn adjugate(&self) -> Self {
        Mat2::new(self.m[3], -self.m[1], -self.m[2], self.m[0])
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == ZERO {
            None
        } else {
            Some(self.adjugate().scale(d.inv()))
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Hilbert-Schmidt (Frobenius) norm.
    pub fn hs_norm(&self) -> f64 {
        self.m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Operator 2-norm, the largest singular value.
    pub fn op_norm(&self) -> f64 {
        let f = self.m.iter().map(|x| x.norm_sqr()).sum::<f64>();
        let d = self.det().norm();
        let disc = (f * f - 4.0 * d * d).max(0.0).sqrt();
        ((f + disc) / 2.0).sqrt()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.m.iter().all(|x| x.im.abs() <= tol * (1.0 + x.re.abs()))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, o: Mat2) -> Mat2 {
        let [a, b, c, d] = self.m;
        let [e, f, g, h] = o.m;
        Mat2::new(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2 { m: [self.m[0] + o.m[0], self.m[1] + o.m[1], self.m[2] + o.m[2], self.m[3] + o.m[3]] }
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2 { m: [self.m[0] - o.m[0], self.m[1] - o.m[1], self.m[2] - o.m[2], self.m[3] - o.m[3]] }
    }
}

/// Complex number `phase * e^{log_mag}` with `|phase| = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledScalar {
    pub phase: C,
    pub log_mag: f64,
}

impl ScaledScalar {
    pub fn one() -> Self {
        ScaledScalar { phase: ONE, log_mag: 0.0 }
    }

    pub fn from_complex(z: C) -> Self {
        let r = z.norm();
        if r == 0.0 {
            ScaledScalar { phase: ONE, log_mag: f64::NEG_INFINITY }
        } else {
            ScaledScalar { phase: z / r, log_mag: r.ln() }
        }
    }

    pub fn mul(self, o: ScaledScalar) -> Self {
        let p = self.phase * o.phase;
        ScaledScalar { phase: p / p.norm(), log_mag: self.log_mag + o.log_mag }
    }

    pub fn inv(self) -> Self {
        ScaledScalar { phase: self.phase.conj(), log_mag: -self.log_mag }
    }

    pub fn value(self) -> C {
        self.phase * self.log_mag.exp()
    }

    pub fn abs(self) -> f64 {
        self.log_mag.exp()
    }
}

/// Complex 2x2 matrix `2^{log2_scale} * entries` with the largest entry of
/// `entries` kept in [1/2, 2].
///
/// The scale is kept in base 2 so that renormalization only ever adds
/// integers to it: exact, where a natural-log accumulator would round at
/// `ulp(log_scale)` on every step of a long product.
///
/// The determinant is carried alongside as a [`ScaledScalar`] and updated
/// multiplicatively: for long hyperbolic products `ad - bc` of the
/// normalized entries cancels catastrophically, while the product of step
/// determinants stays exact to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledMatrix2x2 {
    pub entries: Mat2,
    pub log2_scale: f64,
    pub det: ScaledScalar,
}

impl ScaledMatrix2x2 {
    pub fn identity() -> Self {
        ScaledMatrix2x2 { entries: Mat2::identity(), log2_scale: 0.0, det: ScaledScalar::one() }
    }

    pub fn from_mat(m: Mat2) -> Self {
        let mut s = ScaledMatrix2x2 { entries: m, log2_scale: 0.0, det: ScaledScalar::from_complex(m.det()) };
        s.renormalize();
        s
    }

    /// Brings the largest entry modulus back into [1/2, 2] by an exact
    /// power-of-two rescaling.
    #[inline]
    pub fn renormalize(&mut self) {
        let mx = self.entries.max_abs();
        if mx == 0.0 || !mx.is_finite() || (0.5..=2.0).contains(&mx) {
            return;
        }
        let k = mx.log2().floor() as i32;
        self.entries = self.entries.scale_real(2f64.powi(-k));
        self.log2_scale += k as f64;
    }

    /// `self * rhs` (rhs applied first).
    #[inline]
    pub fn mul(&self, rhs: &ScaledMatrix2x2) -> Self {
        let mut r = ScaledMatrix2x2 {
            entries: self.entries * rhs.entries,
            log2_scale: self.log2_scale + rhs.log2_scale,
            det: self.det.mul(rhs.det),
        };
        r.renormalize();
        r
    }

    /// `m * self` for a plain step matrix, i.e. apply `m` after `self`.
    #[inline]
    pub fn left_mul_step(&mut self, m: &Mat2, det_m: ScaledScalar) {
        self.entries = *m * self.entries;
        self.det = self.det.mul(det_m);
        self.renormalize();
    }

    /// Inverse via the adjugate and the tracked determinant.
    pub fn inverse(&self) -> Self {
        let det_inv = self.det.inv();
        // M^{-1} = adj(M) / det(M) with adj(M) = e^{s} adj(E)
        let mut r = ScaledMatrix2x2 {
            entries: self.entries.adjugate().scale(det_inv.phase),
            log2_scale: self.log2_scale + det_inv.log_mag / LN_2,
            det: det_inv,
        };
        r.renormalize();
        r
    }

    pub fn scale_by(&self, s: ScaledScalar) -> Self {
        let mut r = ScaledMatrix2x2 {
            entries: self.entries.scale(s.phase),
            log2_scale: self.log2_scale + s.log_mag / LN_2,
            det: self.det.mul(ScaledScalar { phase: s.phase * s.phase, log_mag: 2.0 * s.log_mag }),
        };
        r.renormalize();
        r
    }

    /// Natural log of the scale factor.
    pub fn log_scale(&self) -> f64 {
        self.log2_scale * LN_2
    }

    /// Represented matrix; may overflow for long products.
    pub fn to_mat(&self) -> Mat2 {
        self.entries.scale_real(self.log2_scale.exp2())
    }

    /// `ln ||M||_2`.
    pub fn ln_op_norm(&self) -> f64 {
        self.log_scale() + self.entries.op_norm().ln()
    }

    /// `ln ||M||_HS`.
    pub fn ln_hs_norm(&self) -> f64 {
        self.log_scale() + self.entries.hs_norm().ln()
    }

    pub fn trace(&self) -> ScaledScalar {
        let t = ScaledScalar::from_complex(self.entries.trace());
        ScaledScalar { phase: t.phase, log_mag: t.log_mag + self.log_scale() }
    }

    /// `|Tr M|`, saturating at infinity.
    pub fn trace_abs(&self) -> f64 {
        self.entries.trace().norm() * self.log2_scale.exp2()
    }

    /// Determinant recomputed from the normalized entries,
    /// `4^{log2_scale} det(entries)`; accurate only for well-conditioned
    /// products.
    pub fn det_from_entries(&self) -> C {
        self.entries.det() * (2.0 * self.log2_scale).exp2()
    }

    /// Determinant tracked through the multiplications.
    pub fn det_value(&self) -> C {
        self.det.value()
    }

    /// `ln ||self - other||_2` computed at a common scale.
    pub fn ln_op_norm_diff(&self, other: &ScaledMatrix2x2) -> f64 {
        let s = self.log2_scale.max(other.log2_scale);
        let a = self.entries.scale_real((self.log2_scale - s).exp2());
        let b = other.entries.scale_real((other.log2_scale - s).exp2());
        s * LN_2 + (a - b).op_norm().ln()
    }
}
