//! Powers of a real unimodular matrix: hyperbolic diagonalization, the
//! elliptic expansion and the near-parabolic linear window.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::scaled::{Mat2, ScaledMatrix2x2};
use super::CocycleError;

type C = Complex64;

/// Lower constant of the linear window.
pub const WINDOW_C1_LOW: f64 = 1.0 / 3.0;
/// Upper constant of the linear window.
pub const WINDOW_C1_HIGH: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PowerKind {
    Hyperbolic,
    Elliptic,
    Parabolic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicInfo {
    /// Eigenvalue with `|rho| > 1`.
    pub rho: f64,
    /// Conjugator with `|det B| = 1`.
    pub b: Mat2,
    pub norm_b: f64,
    /// `sqrt||G|| / sqrt(|Tr G| - 2)`, doubled when `|Tr G| > 6`.
    pub bound: f64,
    pub bound_ok: bool,
    /// `||G - B diag(rho, 1/rho) B^{-1}|| / ||G||`.
    pub diagonalization_error: f64,
    /// `ln ||G^N||` and `ln(||B||^2 |rho|^N)`.
    pub ln_power_norm: f64,
    pub ln_power_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticInfo {
    /// `Tr G = 2 cos psi`, `psi` in `(0, pi)`.
    pub psi: f64,
    /// `(sin j psi / sin psi, cos j psi)` for `j = 1..=N`.
    pub coeffs: Vec<(f64, f64)>,
    pub max_power_norm: f64,
}

/// Checks of `c1 < (rho^k + rho^-k)/2 < C1` and
/// `c1 k < (rho^k - rho^-k)/(rho - rho^-1) < C1 k` for `k <= tau^{-1/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearWindow {
    pub tau: f64,
    pub k_max: u64,
    pub rows: Vec<WindowRow>,
    pub all_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub k: u64,
    pub even: f64,
    pub odd: f64,
    pub power_norm: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerDiagnostics {
    pub trace: f64,
    pub kind: PowerKind,
    pub n: u64,
    pub hyperbolic: Option<HyperbolicInfo>,
    pub elliptic: Option<EllipticInfo>,
    /// `max_j ||formula_j - G^j|| / max(1, ||G^j||)` over `j = 1..=N`.
    pub reconstruction_error: f64,
    pub window: Option<LinearWindow>,
}

fn real_mat(g: &ScaledMatrix2x2) -> Result<[f64; 4], CocycleError> {
    let m = g.to_mat();
    if !m.is_real(1e-12) {
        return Err(CocycleError::InvalidInput("matrix is not real".into()));
    }
    let d = g.det_value();
    if (d - 1.0).norm() > 1e-10 {
        return Err(CocycleError::InvalidInput(format!("determinant {d} is not 1")));
    }
    Ok(m.m.map(|x| x.re))
}

fn rmat(m: &[f64; 4]) -> Mat2 {
    Mat2::real(m[0], m[1], m[2], m[3])
}

/// Direct powers `G^1 .. G^N`, stopping early before overflow.
fn powers(g: Mat2, n: u64) -> Vec<Mat2> {
    let mut out = Vec::with_capacity(n as usize);
    let mut p = g;
    for _ in 0..n {
        if !(p.max_abs() < 1e150) {
            break;
        }
        out.push(p);
        p = g * p;
    }
    out
}

/// Largest relative deviation between the closed form and the direct powers.
fn reconstruction(direct: &[Mat2], formula: impl Fn(u64) -> Mat2) -> f64 {
    direct
        .iter()
        .enumerate()
        .map(|(i, p)| (formula(i as u64 + 1) - *p).op_norm() / p.op_norm().max(1.0))
        .fold(0.0, f64::max)
}

/// Diagnostics for the powers `G^j`, `j <= N`, of a real unimodular `G`.
pub fn hyperbolic_power_growth(g: &ScaledMatrix2x2, n: u64) -> Result<PowerDiagnostics, CocycleError> {
    let m = real_mat(g)?;
    let gm = rmat(&m);
    let tr = m[0] + m[3];
    let gap = tr.abs() - 2.0;
    let n = n.max(1);
    let direct = powers(gm, n.min(100_000));
    let id = Mat2::identity();
    let half = gm - id.scale_real(tr / 2.0);

    let mut out = PowerDiagnostics {
        trace: tr,
        kind: PowerKind::Parabolic,
        n,
        hyperbolic: None,
        elliptic: None,
        reconstruction_error: 0.0,
        window: None,
    };

    if gap > 0.0 {
        out.kind = PowerKind::Hyperbolic;
        let root = (tr * tr - 4.0).sqrt();
        let rho = (tr + tr.signum() * root) / 2.0;
        let b = eigenbasis(&m, rho);
        let norm_b = b.op_norm();
        let norm_g = gm.op_norm();
        let mut bound = norm_g.sqrt() / gap.sqrt();
        if tr.abs() > 6.0 {
            bound *= 2.0;
        }
        let bi = b.inverse().unwrap_or(id);
        let recon = b * Mat2::diag(C::new(rho, 0.0), C::new(1.0 / rho, 0.0)) * bi;
        let mut p = ScaledMatrix2x2::identity();
        let sg = ScaledMatrix2x2::from_mat(gm);
        for _ in 0..n {
            p = sg.mul(&p);
        }
        out.hyperbolic = Some(HyperbolicInfo {
            rho,
            b,
            norm_b,
            bound,
            bound_ok: norm_b <= bound,
            diagonalization_error: (recon - gm).op_norm() / norm_g,
            ln_power_norm: p.ln_op_norm(),
            ln_power_bound: 2.0 * norm_b.ln() + n as f64 * rho.abs().ln(),
        });
        out.reconstruction_error = reconstruction(&direct, |k| {
            let kf = k as f64;
            let a = ((kf * rho.abs().ln()).exp() - (-kf * rho.abs().ln()).exp()) / (rho.abs() - 1.0 / rho.abs());
            let c = ((kf * rho.abs().ln()).exp() + (-kf * rho.abs().ln()).exp()) / 2.0;
            let s = tr.signum().powi(k as i32);
            half.scale_real(a * s * tr.signum()) + id.scale_real(c * s)
        });
    } else if gap < 0.0 {
        out.kind = PowerKind::Elliptic;
        let psi = (tr / 2.0).clamp(-1.0, 1.0).acos();
        let sp = psi.sin();
        let coeffs: Vec<(f64, f64)> = (1..=n).map(|j| ((j as f64 * psi).sin() / sp, (j as f64 * psi).cos())).collect();
        out.reconstruction_error = reconstruction(&direct, |k| {
            let (s, c) = coeffs[k as usize - 1];
            half.scale_real(s) + id.scale_real(c)
        });
        let max_power_norm = direct.iter().map(|p| p.op_norm()).fold(0.0, f64::max);
        out.elliptic = Some(EllipticInfo { psi, coeffs, max_power_norm });
    } else {
        let s = tr.signum();
        // (sG)^k = k (sG - I) + I
        out.reconstruction_error = reconstruction(&direct, |k| {
            let sk = s.powi(k as i32);
            (gm.scale_real(s) - id).scale_real(k as f64 * sk) + id.scale_real(sk)
        });
    }

    let tau = gap.abs();
    if tau < 1.0 && tau > 0.0 {
        out.window = Some(linear_window(tr, tau, &direct));
    }
    Ok(out)
}

/// Unit eigenvectors for `rho` and `1/rho`, scaled so `|det B| = 1`.
fn eigenbasis(m: &[f64; 4], rho: f64) -> Mat2 {
    let vec_for = |lam: f64| -> (f64, f64) {
        let c1 = (m[1], lam - m[0]);
        let c2 = (lam - m[3], m[2]);
        let n1 = c1.0.hypot(c1.1);
        let n2 = c2.0.hypot(c2.1);
        if n1 >= n2 {
            (c1.0 / n1, c1.1 / n1)
        } else {
            (c2.0 / n2, c2.1 / n2)
        }
    };
    let (x1, y1) = vec_for(rho);
    let (x2, y2) = vec_for(1.0 / rho);
    let det = (x1 * y2 - x2 * y1).abs();
    Mat2::real(x1, x2, y1, y2).scale_real(1.0 / det.sqrt())
}

fn linear_window(tr: f64, tau: f64, direct: &[Mat2]) -> LinearWindow {
    let k_max = (tau.powf(-0.5).floor() as u64).max(1).min(direct.len() as u64);
    let t = tr.abs() / 2.0;
    let rows: Vec<WindowRow> = (1..=k_max)
        .map(|k| {
            let kf = k as f64;
            let (even, odd) = if t > 1.0 {
                let x = t.acosh();
                ((kf * x).cosh(), (kf * x).sinh() / x.sinh())
            } else {
                let x = t.acos();
                if x == 0.0 {
                    (1.0, kf)
                } else {
                    ((kf * x).cos(), (kf * x).sin() / x.sin())
                }
            };
            let ok = WINDOW_C1_LOW < even
                && even < WINDOW_C1_HIGH
                && WINDOW_C1_LOW * kf < odd
                && odd < WINDOW_C1_HIGH * kf;
            WindowRow { k, even, odd, power_norm: direct[k as usize - 1].op_norm(), ok }
        })
        .collect();
    let all_ok = rows.iter().all(|r| r.ok);
    LinearWindow { tau, k_max, rows, all_ok }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn s(m: Mat2) -> ScaledMatrix2x2 {
        ScaledMatrix2x2::from_mat(m)
    }

    #[test]
    fn diagonal_hyperbolic() {
        let d = hyperbolic_power_growth(&s(Mat2::real(2.0, 0.0, 0.0, 0.5)), 20).unwrap();
        assert_eq!(d.kind, PowerKind::Hyperbolic);
        let h = d.hyperbolic.unwrap();
        assert!((h.norm_b - 1.0).abs() < 1e-15);
        assert!((h.bound - 2.0).abs() < 1e-15);
        assert!(h.bound_ok);
        assert!((h.ln_power_norm - 20.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rotation_expansion() {
        let (c, sn) = ((PI / 3.0).cos(), (PI / 3.0).sin());
        let d = hyperbolic_power_growth(&s(Mat2::real(c, -sn, sn, c)), 50).unwrap();
        assert_eq!(d.kind, PowerKind::Elliptic);
        assert!(d.reconstruction_error < 1e-12);
        assert!(d.elliptic.unwrap().max_power_norm < 1.0 + 1e-12);
    }

    #[test]
    fn parabolic_identity() {
        let d = hyperbolic_power_growth(&s(Mat2::real(1.0, 1.0, 0.0, 1.0)), 30).unwrap();
        assert_eq!(d.kind, PowerKind::Parabolic);
        assert_eq!(d.reconstruction_error, 0.0);
        let d = hyperbolic_power_growth(&s(Mat2::real(-1.0, 3.0, 0.0, -1.0)), 30).unwrap();
        assert_eq!(d.reconstruction_error, 0.0);
    }

    #[test]
    fn general_hyperbolic_bound_and_formula() {
        let g = Mat2::real(2.0, 1.0, 1.0, 1.0);
        let d = hyperbolic_power_growth(&s(g), 15).unwrap();
        let h = d.hyperbolic.unwrap();
        assert!(h.diagonalization_error < 1e-14);
        assert!(h.bound_ok);
        assert!(h.ln_power_norm <= h.ln_power_bound + 1e-12);
        assert!(d.reconstruction_error < 1e-12);
        let g = Mat2::real(-2.0, 1.0, 1.0, -1.0);
        assert!(hyperbolic_power_growth(&s(g), 15).unwrap().reconstruction_error < 1e-12);
    }

    #[test]
    fn near_parabolic_window() {
        let eps: f64 = 1e-4;
        let x = eps.sqrt();
        let g = Mat2::real(x.cos(), -x.sin(), x.sin(), x.cos());
        let d = hyperbolic_power_growth(&s(g), 200).unwrap();
        let w = d.window.unwrap();
        assert!(w.all_ok);
        assert!(w.k_max >= 100);
    }

    #[test]
    fn rejects_non_unimodular() {
        assert!(hyperbolic_power_growth(&s(Mat2::real(2.0, 0.0, 0.0, 1.0)), 3).is_err());
    }
}
