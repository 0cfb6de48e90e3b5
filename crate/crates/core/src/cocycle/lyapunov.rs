use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::product::{a_product, d_product, weight_product};
use super::CocycleError;
use crate::lattice::{OperatorModel, SamplingFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LyapunovMethod {
    /// `(1/n) ln ||A(n)||` directly.
    Direct,
    /// `(1/n) ln ||D(n)|| - (1/n) ln |w(n)|`, used when `c` can vanish.
    DwSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub e: f64,
    pub n: i64,
    pub thetas: Vec<f64>,
    pub per_theta: Vec<f64>,
    pub mean: f64,
    pub std_error: f64,
    pub method: LyapunovMethod,
}

/// Whether the off-diagonal can come close to zero on the circle.
pub fn weight_may_vanish(model: &OperatorModel) -> bool {
    match model {
        OperatorModel::Quasiperiodic { c, .. } => {
            if !c.known_zeros().is_empty() {
                return true;
            }
            if let SamplingFunction::Trig(p) = c {
                if p.degree() == 0 {
                    return p.coeff(0).norm() == 0.0;
                }
            }
            let sup = c.sup_bound();
            const GRID: usize = 4096;
            (0..GRID).any(|i| c.eval(i as f64 / GRID as f64).norm() < 1e-3 * sup)
        }
        OperatorModel::Explicit { w, .. } => w.iter().any(|x| model.is_zero_weight(*x)),
    }
}

/// `(1/n) ln ||A(n; theta)||` over sites `0 .. n-1`.
pub fn lyapunov_at(model: &OperatorModel, e: f64, n: i64, method: LyapunovMethod) -> Result<f64, CocycleError> {
    let nf = n as f64;
    match method {
        LyapunovMethod::Direct => Ok(a_product(model, e, n, 0)?.ln_op_norm() / nf),
        LyapunovMethod::DwSplit => {
            let d = d_product(model, e, n, 0)?;
            let w = weight_product(model, n, 0)?;
            if !w.log_mag.is_finite() {
                return Err(CocycleError::SingularStep { site: None });
            }
            Ok((d.ln_op_norm() - w.log_mag) / nf)
        }
    }
}

/// Birkhoff average of `(1/n) ln ||A(n; theta)||` over the given phases.
pub fn lyapunov_birkhoff(model: &OperatorModel, e: f64, n: i64, thetas: &[f64]) -> Result<LyapunovEstimate, CocycleError> {
    if n < 1000 {
        return Err(CocycleError::InvalidInput(format!("product length {n} < 1000")));
    }
    if thetas.len() < 4 {
        return Err(CocycleError::InvalidInput(format!("{} phases, need at least 4", thetas.len())));
    }
    let method = if weight_may_vanish(model) { LyapunovMethod::DwSplit } else { LyapunovMethod::Direct };
    let per_theta = thetas
        .par_iter()
        .map(|&t| lyapunov_at(&model.with_theta(t), e, n, method))
        .collect::<Result<Vec<_>, _>>()?;
    let k = per_theta.len() as f64;
    let mean = per_theta.iter().sum::<f64>() / k;
    let var = per_theta.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(LyapunovEstimate {
        e,
        n,
        thetas: thetas.to_vec(),
        per_theta,
        mean,
        std_error: (var / k).sqrt(),
        method,
    })
}

/// `k` equally spaced phases with a fixed irrational offset.
pub fn default_phases(k: usize) -> Vec<f64> {
    (0..k).map(|i| (i as f64 + 0.31415926535) / k as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{stable_box_spectrum, EhmParams};

    #[test]
    fn free_laplacian_outside_spectrum() {
        let est = lyapunov_birkhoff(&OperatorModel::free(), 5.0, 100_000, &default_phases(4)).unwrap();
        let exact = ((5.0 + 21f64.sqrt()) / 2.0).ln();
        assert!((est.mean - exact).abs() < 2e-2);
        assert_eq!(est.method, LyapunovMethod::Direct);
    }

    #[test]
    fn free_laplacian_at_zero() {
        let est = lyapunov_birkhoff(&OperatorModel::free(), 0.0, 100_000, &default_phases(4)).unwrap();
        assert!(est.mean.abs() <= 2e-2);
    }

    #[test]
    fn ehm_constant_weight_gives_ln2() {
        let alpha = (5f64.sqrt() - 1.0) / 2.0;
        let model = EhmParams::new(0.0, 0.5, 0.0).unwrap().model(alpha, 0.0);
        let spec = stable_box_spectrum(&model, 200, 1e-6).unwrap();
        let e = spec[spec.len() / 3];
        let est = lyapunov_birkhoff(&model, e, 20_000, &default_phases(8)).unwrap();
        assert!((est.mean - 2f64.ln()).abs() < 2e-2, "{}", est.mean);
    }

    #[test]
    fn preconditions() {
        assert!(lyapunov_birkhoff(&OperatorModel::free(), 0.0, 10, &default_phases(4)).is_err());
        assert!(lyapunov_birkhoff(&OperatorModel::free(), 0.0, 2000, &default_phases(3)).is_err());
    }
}
