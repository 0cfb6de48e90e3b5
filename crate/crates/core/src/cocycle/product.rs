use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::scaled::{Mat2, ScaledMatrix2x2, ScaledScalar};
use super::CocycleError;
use crate::lattice::OperatorModel;

type C = Complex64;

/// Largest `|n|` accepted by [`product`].
pub const MAX_PRODUCT_LEN: i64 = 10_000_000;

/// Default ceiling on `|log_scale|` before a product reports overflow.
pub const DEFAULT_LOG_SCALE_CAP: f64 = 1e6;

/// One step of the cocycle. `a` is `None` when `w_n = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMatrices {
    pub d: Mat2,
    pub a: Option<Mat2>,
}

impl StepMatrices {
    pub fn a(&self) -> Result<Mat2, CocycleError> {
        self.a.ok_or(CocycleError::SingularStep { site: None })
    }
}

/// `D_n = [[E - v_n, -conj(w_{n-1})], [w_n, 0]]` and `A_n = D_n / w_n`.
#[inline]
pub fn step_matrices(e: f64, v_n: f64, w_n: C, w_prev: C) -> StepMatrices {
    let d = Mat2::new(C::new(e - v_n, 0.0), -w_prev.conj(), w_n, C::new(0.0, 0.0));
    let a = if w_n == C::new(0.0, 0.0) { None } else { Some(d.scale(w_n.inv())) };
    StepMatrices { d, a }
}

/// Which cocycle product to form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    A,
    D,
    W,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProductValue {
    Matrix(ScaledMatrix2x2),
    Scalar(ScaledScalar),
}

impl ProductValue {
    pub fn matrix(self) -> Option<ScaledMatrix2x2> {
        match self {
            ProductValue::Matrix(m) => Some(m),
            ProductValue::Scalar(_) => None,
        }
    }

    pub fn scalar(self) -> Option<ScaledScalar> {
        match self {
            ProductValue::Scalar(s) => Some(s),
            ProductValue::Matrix(_) => None,
        }
    }
}

/// Product over sites `m ..= n + m - 1`, later sites multiplied on the left.
///
/// `n = 0` gives the identity; `n < 0` gives the inverse of the forward
/// product of length `-n` starting at `n + m`.
pub fn product(model: &OperatorModel, e: f64, n: i64, m: i64, which: Which) -> Result<ProductValue, CocycleError> {
    product_with_cap(model, e, n, m, which, DEFAULT_LOG_SCALE_CAP)
}

pub fn product_with_cap(
    model: &OperatorModel,
    e: f64,
    n: i64,
    m: i64,
    which: Which,
    log_scale_cap: f64,
) -> Result<ProductValue, CocycleError> {
    if n.abs() > MAX_PRODUCT_LEN {
        return Err(CocycleError::TooLong { n });
    }
    if n < 0 {
        return Ok(match product_with_cap(model, e, -n, m + n, which, log_scale_cap)? {
            ProductValue::Matrix(p) => ProductValue::Matrix(p.inverse()),
            ProductValue::Scalar(s) => ProductValue::Scalar(s.inv()),
        });
    }
    match which {
        Which::A => forward_matrix(model, e, n, m, true, log_scale_cap).map(ProductValue::Matrix),
        Which::D => forward_matrix(model, e, n, m, false, log_scale_cap).map(ProductValue::Matrix),
        Which::W => weight_product(model, n, m).map(ProductValue::Scalar),
        Which::R => r_product(model, n, m).map(ProductValue::Scalar),
    }
}

/// `A(n, m)` for `n >= 0`.
pub fn a_product(model: &OperatorModel, e: f64, n: i64, m: i64) -> Result<ScaledMatrix2x2, CocycleError> {
    forward_matrix(model, e, n, m, true, DEFAULT_LOG_SCALE_CAP)
}

/// `D(n, m)` for `n >= 0`.
pub fn d_product(model: &OperatorModel, e: f64, n: i64, m: i64) -> Result<ScaledMatrix2x2, CocycleError> {
    forward_matrix(model, e, n, m, false, DEFAULT_LOG_SCALE_CAP)
}

fn forward_matrix(
    model: &OperatorModel,
    e: f64,
    n: i64,
    m: i64,
    divide: bool,
    cap: f64,
) -> Result<ScaledMatrix2x2, CocycleError> {
    if n == 0 {
        return Ok(ScaledMatrix2x2::identity());
    }
    model.check_covers(m - 1, m + n - 1)?;
    let mut acc = ScaledMatrix2x2::identity();
    let mut w_prev = model.weight(m - 1);
    for j in m..m + n {
        let (w, v) = model.site(j);
        let step = step_matrices(e, v, w, w_prev);
        let mat = if divide {
            if model.is_zero_weight(w) {
                return Err(CocycleError::SingularStep { site: Some(j) });
            }
            step.a.ok_or(CocycleError::SingularStep { site: Some(j) })?
        } else {
            step.d
        };
        // det D_j = w_j conj(w_{j-1}); det A_j = conj(w_{j-1}) / w_j
        let det = if divide { w_prev.conj() / w } else { w * w_prev.conj() };
        acc.left_mul_step(&mat, ScaledScalar::from_complex(det));
        if acc.log_scale().abs() > cap {
            return Err(CocycleError::Overflow { site: j, log_scale: acc.log_scale() });
        }
        w_prev = w;
    }
    Ok(acc)
}

/// `w(n, m)` for `n >= 0`.
pub fn weight_product(model: &OperatorModel, n: i64, m: i64) -> Result<ScaledScalar, CocycleError> {
    if n == 0 {
        return Ok(ScaledScalar::one());
    }
    model.check_covers(m, m + n - 1)?;
    let mut acc = ScaledScalar::one();
    for j in m..m + n {
        acc = acc.mul(ScaledScalar::from_complex(model.weight(j)));
    }
    Ok(acc)
}

/// `r_j = w_{j+1} / sqrt|w_{j+1} w_j|`.
#[inline]
pub fn r_step(w_next: C, w: C) -> C {
    w_next / (w_next.norm() * w.norm()).sqrt()
}

/// `r(n, m)` for `n >= 0`.
pub fn r_product(model: &OperatorModel, n: i64, m: i64) -> Result<ScaledScalar, CocycleError> {
    if n == 0 {
        return Ok(ScaledScalar::one());
    }
    model.check_covers(m, m + n)?;
    let mut acc = ScaledScalar::one();
    let mut w = model.weight(m);
    for j in m..m + n {
        let w_next = model.weight(j + 1);
        if model.is_zero_weight(w) || model.is_zero_weight(w_next) {
            return Err(CocycleError::SingularStep { site: Some(j) });
        }
        acc = acc.mul(ScaledScalar::from_complex(r_step(w_next, w)));
        w = w_next;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::EhmParams;

    const I: C = C::new(0.0, 1.0);

    fn one() -> C {
        C::new(1.0, 0.0)
    }

    #[test]
    fn step_examples() {
        let s = step_matrices(0.0, 0.0, one(), one());
        assert_eq!(s.a.unwrap(), Mat2::real(0.0, -1.0, 1.0, 0.0));
        assert_eq!(s.a.unwrap().det(), one());

        let s = step_matrices(2.0, 0.0, I, one());
        assert_eq!(s.d, Mat2::new(C::new(2.0, 0.0), -one(), I, C::new(0.0, 0.0)));
        assert_eq!(s.d.det(), I);

        let s = step_matrices(1.0, 0.0, C::new(0.0, 0.0), one());
        assert!(s.a.is_none());
        assert!(matches!(s.a(), Err(CocycleError::SingularStep { .. })));
        assert_eq!(s.d.m[0], one());
    }

    #[test]
    fn free_rotation_squares_to_minus_identity() {
        let p = a_product(&OperatorModel::free(), 0.0, 2, 1).unwrap();
        assert!((p.to_mat() - Mat2::identity().scale_real(-1.0)).op_norm() < 1e-15);
        assert!((p.trace().value() + 2.0).norm() < 1e-15);
    }

    #[test]
    fn ehm_weight_product_modulus() {
        let model = EhmParams::new(0.0, 0.5, 0.0).unwrap().model(0.618, 0.1);
        for n in [1, 10, 500] {
            let w = weight_product(&model, n, 3).unwrap();
            assert!((w.log_mag - n as f64 * 0.5f64.ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn negative_length_inverts() {
        let model = EhmParams::new(0.2, 0.7, 0.1).unwrap().model(0.3819660112501051, 0.2);
        let fwd = a_product(&model, 0.4, 7, -3).unwrap();
        let back = product(&model, 0.4, -7, 4, Which::A).unwrap().matrix().unwrap();
        assert!((fwd.mul(&back).to_mat() - Mat2::identity()).op_norm() < 1e-9);
    }

    #[test]
    fn singular_window_is_refused_for_a_only() {
        let model = OperatorModel::Explicit {
            offset: 0,
            w: vec![one(), one(), C::new(0.0, 0.0), one(), one()],
            v: vec![0.0; 5],
        };
        assert!(matches!(a_product(&model, 0.5, 3, 1), Err(CocycleError::SingularStep { site: Some(2) })));
        assert!(d_product(&model, 0.5, 3, 1).is_ok());
    }
}
