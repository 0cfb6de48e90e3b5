use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Trigonometric polynomial `sum_k c_k e^{2 pi i k theta}` stored densely
/// from index `kmin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    pub kmin: i64,
    pub coeffs: Vec<Complex64>,
}

impl TrigPoly {
    /// Builds from `(k, c_k)` pairs; repeated indices add up.
    pub fn from_pairs(pairs: &[(i64, Complex64)]) -> Self {
        if pairs.is_empty() {
            return TrigPoly { kmin: 0, coeffs: vec![Complex64::new(0.0, 0.0)] };
        }
        let kmin = pairs.iter().map(|p| p.0).min().unwrap();
        let kmax = pairs.iter().map(|p| p.0).max().unwrap();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); (kmax - kmin + 1) as usize];
        for &(k, c) in pairs {
            coeffs[(k - kmin) as usize] += c;
        }
        TrigPoly { kmin, coeffs }.trimmed()
    }

    pub fn constant(c: Complex64) -> Self {
        TrigPoly { kmin: 0, coeffs: vec![c] }
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.len() > 1 && self.coeffs.last().unwrap().norm() == 0.0 {
            self.coeffs.pop();
        }
        while self.coeffs.len() > 1 && self.coeffs[0].norm() == 0.0 {
            self.coeffs.remove(0);
            self.kmin += 1;
        }
        self
    }

    pub fn kmax(&self) -> i64 {
        self.kmin + self.coeffs.len() as i64 - 1
    }

    /// Largest `|k|` with a nonzero coefficient.
    pub fn degree(&self) -> u64 {
        self.kmin.unsigned_abs().max(self.kmax().unsigned_abs())
    }

    pub fn pairs(&self) -> Vec<(i64, Complex64)> {
        self.coeffs.iter().enumerate().map(|(i, c)| (self.kmin + i as i64, *c)).collect()
    }

    /// Value at a complex phase `z`; real `z` is the circle.
    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        let e = (Complex64::i() * 2.0 * PI * z).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * e + c;
        }
        acc * (Complex64::i() * 2.0 * PI * z * self.kmin as f64).exp()
    }

    pub fn eval(&self, theta: f64) -> Complex64 {
        let e = Complex64::from_polar(1.0, 2.0 * PI * theta);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * e + c;
        }
        if self.kmin == 0 {
            acc
        } else {
            acc * Complex64::from_polar(1.0, 2.0 * PI * (self.kmin as f64 * theta).rem_euclid(1.0))
        }
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    /// Real-valued on the circle iff `c_{-k} = conj(c_k)`.
    pub fn is_real_valued(&self, tol: f64) -> bool {
        self.pairs().iter().all(|&(k, c)| {
            let partner = self.coeff(-k);
            (partner - c.conj()).norm() <= tol
        })
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        if k < self.kmin || k > self.kmax() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k - self.kmin) as usize]
        }
    }
}

/// Sampling functions on the circle `T = R/Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SamplingFunction {
    Trig(TrigPoly),
    /// `amplitude * cos 2 pi (theta + shift)`.
    Cosine { amplitude: f64, shift: f64 },
    /// `envelope(theta) * prod_l |sin pi (theta - theta_l)|^{tau_l}`: an
    /// analytic envelope times finitely many power-type zeros.
    ZeroProduct { envelope: Box<SamplingFunction>, zeros: Vec<(f64, f64)> },
}

impl SamplingFunction {
    pub fn constant(c: f64) -> Self {
        SamplingFunction::Trig(TrigPoly::constant(Complex64::new(c, 0.0)))
    }

    pub fn eval(&self, theta: f64) -> Complex64 {
        match self {
            SamplingFunction::Trig(p) => p.eval(theta),
            SamplingFunction::Cosine { amplitude, shift } => {
                Complex64::new(amplitude * (2.0 * PI * (theta + shift).rem_euclid(1.0)).cos(), 0.0)
            }
            SamplingFunction::ZeroProduct { envelope, zeros } => {
                let mut r = envelope.eval(theta);
                for &(t0, tau) in zeros {
                    r *= (PI * (theta - t0).rem_euclid(1.0)).sin().abs().powf(tau);
                }
                r
            }
        }
    }

    /// Real part of [`eval`](Self::eval); for potentials.
    pub fn eval_real(&self, theta: f64) -> f64 {
        self.eval(theta).re
    }

    /// Holomorphic extension at a complex phase, when one exists.
    pub fn eval_complex(&self, z: Complex64) -> Option<Complex64> {
        match self {
            SamplingFunction::Trig(p) => Some(p.eval_complex(z)),
            SamplingFunction::Cosine { amplitude, shift } => {
                Some((2.0 * PI * (z + shift)).cos() * *amplitude)
            }
            SamplingFunction::ZeroProduct { .. } => None,
        }
    }

    /// Width of the strip of analyticity (infinite for trig polynomials).
    pub fn analyticity_width(&self) -> Option<f64> {
        match self {
            SamplingFunction::Trig(_) | SamplingFunction::Cosine { .. } => Some(f64::INFINITY),
            SamplingFunction::ZeroProduct { .. } => None,
        }
    }

    pub fn fourier_coeffs(&self) -> Option<TrigPoly> {
        match self {
            SamplingFunction::Trig(p) => Some(p.clone()),
            SamplingFunction::Cosine { amplitude, shift } => Some(TrigPoly::from_pairs(&[
                (-1, Complex64::from_polar(amplitude / 2.0, -2.0 * PI * shift)),
                (1, Complex64::from_polar(amplitude / 2.0, 2.0 * PI * shift)),
            ])),
            SamplingFunction::ZeroProduct { .. } => None,
        }
    }

    /// Upper bound on `sup |f|` over the circle.
    pub fn sup_bound(&self) -> f64 {
        match self {
            SamplingFunction::Trig(p) => p.l1_norm(),
            SamplingFunction::Cosine { amplitude, .. } => amplitude.abs(),
            SamplingFunction::ZeroProduct { envelope, .. } => envelope.sup_bound(),
        }
    }

    /// Zeros known by construction, as `(theta_l, tau_l)`.
    pub fn known_zeros(&self) -> &[(f64, f64)] {
        match self {
            SamplingFunction::ZeroProduct { zeros, .. } => zeros,
            _ => &[],
        }
    }
}
