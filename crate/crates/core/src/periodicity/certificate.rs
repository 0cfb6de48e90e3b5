//! Lower bounds on `q`-blocks of `prod |c(theta + j alpha)|` for sampling
//! functions of the form `g(theta) prod_l |sin pi (theta - theta_l)|^{tau_l}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

use super::sine::ln_abs_sin_pi;
use super::PeriodicityError;
use crate::lattice::{SamplingFunction, TrigPoly};
use crate::numberkit::{beta_estimate, circle_norm, mul_frac, Frequency};

type C = Complex64;

/// Quadrature nodes for `int ln |g|`.
pub const QUADRATURE_NODES: usize = 1 << 16;

/// Search range for the Diophantine phase test.
pub const THETA_TEST_RANGE: i64 = 100_000;

/// Zeros of `c` on the circle, listed with multiplicity and order `tau` in
/// (0, 1]; a double zero appears twice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductZeroProfile {
    pub c: SamplingFunction,
    pub zeros: Vec<(f64, f64)>,
    /// `int ln |c|`.
    pub mean_log: f64,
    /// `int ln |g|`.
    pub mean_log_g: f64,
    /// `|I_N - I_{N/2}|` for the `ln |g|` quadrature.
    pub quadrature_error: f64,
    /// `inf |g|` over a fine grid.
    pub g_inf: f64,
}

impl ProductZeroProfile {
    /// Builds the profile, locating zeros of trigonometric polynomials
    /// automatically.
    pub fn new(c: SamplingFunction) -> Result<Self, PeriodicityError> {
        let zeros = if !c.known_zeros().is_empty() {
            c.known_zeros().to_vec()
        } else if let Some(p) = c.fourier_coeffs() {
            trig_poly_circle_zeros(&p)
        } else {
            vec![]
        };
        Self::with_zeros(c, zeros)
    }

    pub fn with_zeros(c: SamplingFunction, zeros: Vec<(f64, f64)>) -> Result<Self, PeriodicityError> {
        if zeros.iter().any(|&(_, t)| !(t > 0.0 && t <= 1.0)) {
            return Err(PeriodicityError::InvalidProfile("orders must lie in (0, 1]".into()));
        }
        let mut prof = ProductZeroProfile { c, zeros, mean_log: 0.0, mean_log_g: 0.0, quadrature_error: 0.0, g_inf: 0.0 };
        let fine = prof.ln_g_mean(QUADRATURE_NODES);
        let coarse = prof.ln_g_mean(QUADRATURE_NODES / 2);
        // one Richardson step on the midpoint rule
        prof.mean_log_g = fine + (fine - coarse) / 3.0;
        prof.quadrature_error = (fine - coarse).abs();
        prof.mean_log = prof.mean_log_g - LN_2 * prof.tau_sum();
        prof.g_inf = (0..QUADRATURE_NODES)
            .map(|i| prof.ln_abs_g((i as f64 + 0.25) / QUADRATURE_NODES as f64))
            .fold(f64::INFINITY, f64::min)
            .exp();
        if !(prof.g_inf > 0.0) {
            return Err(PeriodicityError::InvalidProfile("envelope vanishes".into()));
        }
        Ok(prof)
    }

    pub fn tau_sum(&self) -> f64 {
        self.zeros.iter().map(|z| z.1).sum()
    }

    /// `ln |g(theta)| = ln |c(theta)| - sum tau_l ln |sin pi (theta - theta_l)|`.
    pub fn ln_abs_g(&self, theta: f64) -> f64 {
        match &self.c {
            SamplingFunction::ZeroProduct { envelope, zeros } if *zeros == self.zeros => envelope.eval(theta).norm().ln(),
            c => {
                let mut v = c.eval(theta).norm().ln();
                for &(t0, tau) in &self.zeros {
                    v -= tau * ln_abs_sin_pi(theta - t0);
                }
                v
            }
        }
    }

    fn ln_g_mean(&self, n: usize) -> f64 {
        let s: f64 = (0..n).into_par_iter().map(|i| self.ln_abs_g((i as f64 + 0.5) / n as f64)).sum();
        s / n as f64
    }

    /// `c / e^{mean_log}`, which has zero logarithmic mean.
    pub fn zero_mean_sampling(&self) -> Result<SamplingFunction, PeriodicityError> {
        let s = (-self.mean_log).exp();
        match &self.c {
            SamplingFunction::Trig(p) => {
                let pairs: Vec<(i64, C)> = p.pairs().into_iter().map(|(k, a)| (k, a * s)).collect();
                Ok(SamplingFunction::Trig(TrigPoly::from_pairs(&pairs)))
            }
            SamplingFunction::Cosine { amplitude, shift } => {
                Ok(SamplingFunction::Cosine { amplitude: amplitude * s, shift: *shift })
            }
            SamplingFunction::ZeroProduct { .. } => {
                Err(PeriodicityError::InvalidProfile("rescaling of product-form functions is not supported".into()))
            }
        }
    }

    /// The same profile for `c / e^{mean_log}`.
    pub fn rescaled_to_zero_mean(&self) -> Result<Self, PeriodicityError> {
        Self::with_zeros(self.zero_mean_sampling()?, self.zeros.clone())
    }
}

/// Zeros on the unit circle of `sum_k a_k e^{2 pi i k theta}`, as
/// `(theta_l, 1)` with multiplicity.
pub fn trig_poly_circle_zeros(p: &TrigPoly) -> Vec<(f64, f64)> {
    let mut full: Vec<C> = vec![C::new(0.0, 0.0); (p.kmax() - p.kmin + 1) as usize];
    for (k, c) in p.pairs() {
        full[(k - p.kmin) as usize] = c;
    }
    let scale = full.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return vec![];
    }
    // vanishing low coefficients are roots at 0, high ones lower the degree
    let tiny = 1e-14 * scale;
    let lo = full.iter().position(|x| x.norm() > tiny).unwrap();
    let hi = full.iter().rposition(|x| x.norm() > tiny).unwrap();
    let mut out: Vec<(f64, f64)> = poly_roots(&full[lo..=hi])
        .into_iter()
        .filter(|z| (z.norm() - 1.0).abs() < 1e-6)
        .map(|z| ((z.arg() / (2.0 * PI)).rem_euclid(1.0), 1.0))
        .collect();
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

/// Roots of `a_0 + a_1 z + ... + a_d z^d`.
pub(crate) fn poly_roots(a: &[C]) -> Vec<C> {
    let d = a.len().saturating_sub(1);
    match d {
        0 => vec![],
        1 => vec![-a[0] / a[1]],
        2 => {
            let (c0, b, c2) = (a[0], a[1], a[2]);
            let disc = (b * b - c0 * c2 * 4.0).sqrt();
            let s = if (b.conj() * disc).re >= 0.0 { -(b + disc) / 2.0 } else { -(b - disc) / 2.0 };
            if s.norm() == 0.0 {
                vec![C::new(0.0, 0.0); 2]
            } else {
                vec![s / c2, c0 / s]
            }
        }
        _ => durand_kerner(a),
    }
}

fn durand_kerner(a: &[C]) -> Vec<C> {
    let d = a.len() - 1;
    let lead = a[d];
    let monic: Vec<C> = a.iter().map(|x| x / lead).collect();
    let eval = |z: C| monic.iter().rev().fold(C::new(0.0, 0.0), |acc, c| acc * z + c);
    let seed = C::new(0.4, 0.9);
    let mut z: Vec<C> = (0..d).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..d {
            let mut den = C::new(1.0, 0.0);
            for j in 0..d {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    z
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateForm {
    /// `Lambda_1 = -int ln|c| + 2 delta^2 min(beta, 1)`,
    /// `Lambda = -int ln|c| + 6 delta^2 min(beta, 1)`;
    /// needs `delta < 2 S / (1 + S)`, `S = sum tau_l`, when `c` has zeros.
    General,
    /// Zero-mean analytic `c`: `Lambda_1 = 2 delta^2 min(beta, 1)`,
    /// `Lambda = 6 delta^2 min(beta, 1)`; needs `delta < 1`.
    ZeroMeanAnalytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualifyingLevel {
    pub n: usize,
    /// `q_n` when it fits in 64 bits.
    pub q: Option<u64>,
    /// `ln q_{n+1} / q_n`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaCertificate {
    pub form: CertificateForm,
    pub beta: f64,
    pub delta: f64,
    pub mean_log: f64,
    pub lambda1: f64,
    pub lambda: f64,
    /// `ln 2 sum tau - ln inf|g| + delta^2 min(beta, 1)`, the bound that
    /// needs only a bounded envelope.
    pub lambda1_inf: f64,
    /// Finite-depth estimate of `beta(alpha)`.
    pub beta_alpha: f64,
    /// Levels with `ln q_{n+1} > 2 beta q_n`.
    pub q_sequence: Vec<QualifyingLevel>,
}

/// Certified exponents for the `(Lambda, beta)` lower bound.
pub fn lambda_certificate(
    profile: &ProductZeroProfile,
    freq: &Frequency,
    beta: f64,
    delta: f64,
    form: CertificateForm,
) -> Result<LambdaCertificate, PeriodicityError> {
    let est = beta_estimate(&freq.expansion)?;
    let beta_alpha = est.verdict_at_depth;
    if !(beta > 0.0 && 2.0 * beta < beta_alpha) {
        return Err(PeriodicityError::BetaOutOfRange { beta, beta_alpha });
    }
    let s = profile.tau_sum();
    let bt = beta.min(1.0);
    let (lambda1, lambda) = match form {
        CertificateForm::General => {
            if !(delta > 0.0) || (s > 0.0 && delta >= 2.0 * s / (1.0 + s)) {
                return Err(PeriodicityError::DeltaOutOfRange { delta, max: if s > 0.0 { 2.0 * s / (1.0 + s) } else { f64::INFINITY } });
            }
            (-profile.mean_log + 2.0 * delta * delta * bt, -profile.mean_log + 6.0 * delta * delta * bt)
        }
        CertificateForm::ZeroMeanAnalytic => {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(PeriodicityError::DeltaOutOfRange { delta, max: 1.0 });
            }
            if profile.mean_log.abs() > 1e-9 {
                return Err(PeriodicityError::InvalidProfile(format!("log mean {} is not zero", profile.mean_log)));
            }
            (2.0 * delta * delta * bt, 6.0 * delta * delta * bt)
        }
    };
    let q_sequence: Vec<QualifyingLevel> = est
        .levels
        .iter()
        .filter(|(_, r)| *r > 2.0 * beta)
        .map(|&(n, ratio)| QualifyingLevel { n, q: freq.expansion.q_u64(n), ratio })
        .collect();
    if q_sequence.is_empty() {
        return Err(PeriodicityError::NoQualifyingDenominator);
    }
    Ok(LambdaCertificate {
        form,
        beta,
        delta,
        mean_log: profile.mean_log,
        lambda1,
        lambda,
        lambda1_inf: LN_2 * s - profile.g_inf.ln() + delta * delta * bt,
        beta_alpha,
        q_sequence,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaTestRow {
    pub theta_l: f64,
    /// `min_{1 <= |n| <= N} n^2 ||theta - theta_l + n alpha||`; zero when
    /// `theta = theta_l`.
    pub gamma: f64,
    pub worst_n: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaTest {
    pub theta: f64,
    pub range: i64,
    pub rows: Vec<ThetaTestRow>,
    pub admissible: bool,
}

/// Finite-range check of `||theta - theta_l + n alpha|| >= gamma_l / n^2`.
pub fn theta_test(profile: &ProductZeroProfile, theta: f64, alpha: f64, range: i64) -> ThetaTest {
    let rows: Vec<ThetaTestRow> = profile
        .zeros
        .iter()
        .map(|&(t0, _)| {
            let base = theta - t0;
            if circle_norm(base) == 0.0 {
                return ThetaTestRow { theta_l: t0, gamma: 0.0, worst_n: 0 };
            }
            let mut gamma = f64::INFINITY;
            let mut worst_n = 1;
            for n in 1..=range {
                for sn in [n, -n] {
                    let g = (n as f64).powi(2) * circle_norm(base + mul_frac(sn as f64, alpha));
                    if g < gamma {
                        gamma = g;
                        worst_n = sn;
                    }
                }
            }
            ThetaTestRow { theta_l: t0, gamma, worst_n }
        })
        .collect();
    let admissible = rows.iter().all(|r| r.gamma > 0.0);
    ThetaTest { theta, range, rows, admissible }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub pass: bool,
    pub q: u64,
    /// `min_k ln prod_{j=kq}^{(k+1)q-1} |c(theta + j alpha)|`.
    pub min_log_block: f64,
    pub worst_k: i64,
    /// `-Lambda_1 q`.
    pub log_bound: f64,
    /// Blocks scanned: `|k| <= effective_blocks`.
    pub effective_blocks: i64,
    pub theta: ThetaTest,
}

/// Scans `q`-blocks `|k| <= min(e^{delta beta q} / q, cap / q)`.
#[allow(clippy::too_many_arguments)]
pub fn verify_lambda_bound_on_blocks(
    profile: &ProductZeroProfile,
    c: &SamplingFunction,
    theta: f64,
    alpha: f64,
    q: u64,
    beta: f64,
    delta: f64,
    lambda1: f64,
    window_cap: u64,
) -> Result<BlockReport, PeriodicityError> {
    let test = theta_test(profile, theta, alpha, THETA_TEST_RANGE);
    if !test.admissible {
        return Err(PeriodicityError::ThetaNotAdmissible { theta });
    }
    let qf = q as f64;
    let by_growth = (delta * beta * qf).exp() / qf;
    let by_cap = window_cap as f64 / qf;
    let kmax = by_growth.min(by_cap).floor().max(0.0) as i64;
    let blocks: Vec<Result<(i64, f64), PeriodicityError>> = (-kmax..=kmax)
        .into_par_iter()
        .map(|k| {
            let mut s = 0.0;
            for j in k * q as i64..(k + 1) * q as i64 {
                let x = theta + mul_frac(j as f64, alpha);
                let v = c.eval(x.rem_euclid(1.0)).norm();
                if v == 0.0 {
                    return Err(PeriodicityError::ZeroInWindow { site: j });
                }
                s += v.ln();
            }
            Ok((k, s))
        })
        .collect();
    let mut min = f64::INFINITY;
    let mut worst_k = -kmax;
    // sequential reduction keeps ties deterministic
    for b in blocks {
        let (k, s) = b?;
        if s < min {
            min = s;
            worst_k = k;
        }
    }
    let log_bound = -lambda1 * qf;
    Ok(BlockReport { pass: min > log_bound, q, min_log_block: min, worst_k, log_bound, effective_blocks: kmax, theta: test })
}
