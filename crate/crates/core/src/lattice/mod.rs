//! Operator models: coefficient generators, the extended Harper's model and
//! finite-box spectra.

mod ehm;
mod model;
mod sampling;
mod tridiag;

pub use ehm::{ehm_classify, ehm_lyapunov_formula, EhmParams, EhmRegion, GeoLabel, RLabel};
pub use model::{sample_window, OperatorModel, SampleWindow, DEFAULT_WINDOW_CAP, ZERO_TOL};
pub use sampling::{SamplingFunction, TrigPoly};
pub use tridiag::{
    box_spectrum_range, finite_box_spectrum, stable_box_spectrum, tridiagonal_eigenvalues, MAX_BOX_SITES,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("window of {len} sites exceeds the cap of {cap}")]
    WindowTooLarge { len: u64, cap: u64 },
    #[error("sites {lo}..={hi} are outside the explicit model's range")]
    OutOfRange { lo: i64, hi: i64 },
    #[error("coupling triple {0} is invalid (need three nonnegative reals)")]
    InvalidCoupling(String),
    #[error("couplings with l2 = 0 and l1 + l3 = 0 have no region")]
    Unclassifiable,
    #[error("tridiagonal eigensolver did not converge at index {index}")]
    EigenNotConverged { index: usize },
    #[error("coefficient file line {line}: {msg}")]
    CoefficientFile { line: usize, msg: String },
}

/// Parses Fourier coefficients from lines `k re im`; `#` starts a comment.
pub fn parse_coefficient_file(text: &str) -> Result<TrigPoly, LatticeError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| LatticeError::CoefficientFile { line: i + 1, msg: msg.to_string() };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(err("expected `k re im`"));
        }
        let k: i64 = f[0].parse().map_err(|_| err("index is not an integer"))?;
        let re: f64 = f[1].parse().map_err(|_| err("real part is not a number"))?;
        let im: f64 = f[2].parse().map_err(|_| err("imaginary part is not a number"))?;
        pairs.push((k, num_complex::Complex64::new(re, im)));
    }
    if pairs.is_empty() {
        return Err(LatticeError::CoefficientFile { line: 0, msg: "no coefficients".into() });
    }
    Ok(TrigPoly::from_pairs(&pairs))
}
