use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{n2_threshold, FourierError};
use crate::cocycle::{
    a_product, d_product, step_matrices, weight_product, CocycleError, Mat2, ScaledMatrix2x2, ScaledScalar,
};
use crate::lattice::{OperatorModel, TrigPoly};
use crate::numberkit::mul_frac;
use crate::periodicity::poly_roots;

type C = Complex64;

/// Largest product length accepted by [`decompose_f`].
pub const MAX_DECOMPOSE_N: usize = 2000;

/// Largest evaluation grid.
pub const MAX_GRID: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeConfig {
    /// Cap on the strip width `rho`; trig polynomials are entire.
    pub rho_cap: f64,
    /// The strip constant is measured on `|Im z| = strip_fraction * rho`.
    pub strip_fraction: f64,
    /// Short lengths for the linear fit of `ln sup ||D(m)||^2`.
    pub fit_lengths: Vec<usize>,
    /// Points per boundary line of the strip.
    pub boundary_points: usize,
    /// Grid points per unit of the truncation degree `dn`.
    pub oversample: usize,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig { rho_cap: 1.0, strip_fraction: 0.9, fit_lengths: vec![4, 8, 16, 32], boundary_points: 256, oversample: 8 }
    }
}

/// Measured growth constant `C1` with `sup_{|Im z| = h} ||D~(m; z)||^2_HS <= e^{C1 m}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripConstant {
    pub rho: f64,
    pub height: f64,
    pub lengths: Vec<usize>,
    /// `ln sup ||D~(m)||^2_HS` for each fit length.
    pub sup_ln: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// The same supremum at the target length.
    pub at_n: (usize, f64),
    /// `max(slope, sup_ln / m over all measured m)`, so that the bound
    /// holds at every measured length.
    pub c1: f64,
}

fn analytic_parts(model: &OperatorModel) -> Result<(TrigPoly, TrigPoly, f64), FourierError> {
    let (c, v) = match (model.off_diagonal(), model.diagonal()) {
        (Some(c), Some(v)) => (c, v),
        _ => return Err(FourierError::NonAnalyticInput("explicit coefficient lists have no extension".into())),
    };
    let c = c.fourier_coeffs().ok_or_else(|| FourierError::NonAnalyticInput("off-diagonal has power-type zeros".into()))?;
    let v = v.fourier_coeffs().ok_or_else(|| FourierError::NonAnalyticInput("diagonal has power-type zeros".into()))?;
    Ok((c, v, model.alpha()))
}

/// `int_T ln|p|` by Jensen's formula: `ln|lead| + sum ln max(1, |root|)`.
pub fn mahler_log_mean(p: &TrigPoly) -> f64 {
    let lead = *p.coeffs.last().unwrap();
    if lead.norm() == 0.0 {
        return f64::NEG_INFINITY;
    }
    lead.norm().ln() + poly_roots(&p.coeffs).iter().map(|r| r.norm().max(1.0).ln()).sum::<f64>()
}

fn strip_ln_hs_sq(c: &TrigPoly, v: &TrigPoly, alpha: f64, e: f64, b: f64, x: f64, y: f64, m: usize) -> f64 {
    // conj(c(conj z)) is the holomorphic extension of conj(c)
    let cstar = |z: C| c.eval_complex(z.conj()).conj();
    let mut acc = ScaledMatrix2x2::identity();
    for j in 0..m as i64 {
        let zj = C::new((x + mul_frac(j as f64, alpha)).rem_euclid(1.0), y);
        let zp = C::new((x + mul_frac((j - 1) as f64, alpha)).rem_euclid(1.0), y);
        let w = c.eval_complex(zj);
        let wp = cstar(zp);
        let step = Mat2::new(e - v.eval_complex(zj), -wp, w, C::new(0.0, 0.0));
        acc.left_mul_step(&step, ScaledScalar::from_complex(w * wp));
    }
    2.0 * (acc.ln_hs_norm() - m as f64 * b)
}

fn strip_sup(c: &TrigPoly, v: &TrigPoly, alpha: f64, e: f64, b: f64, h: f64, m: usize, pts: usize) -> f64 {
    (0..2 * pts)
        .into_par_iter()
        .map(|i| {
            let y = if i < pts { h } else { -h };
            strip_ln_hs_sq(c, v, alpha, e, b, (i % pts) as f64 / pts as f64, y, m)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Measures `C1` for the `b`-rescaled `D` cocycle on the strip boundary.
pub fn measure_strip_constant(
    model: &OperatorModel,
    e: f64,
    n: usize,
    cfg: &DecomposeConfig,
) -> Result<StripConstant, FourierError> {
    let (c, v, alpha) = analytic_parts(model)?;
    let b = mahler_log_mean(&c);
    if !b.is_finite() {
        return Err(FourierError::NonAnalyticInput("off-diagonal vanishes identically".into()));
    }
    let rho = cfg.rho_cap;
    let h = cfg.strip_fraction * rho;
    let lengths = cfg.fit_lengths.clone();
    if lengths.len() < 2 {
        return Err(FourierError::InvalidInput("need at least two fit lengths".into()));
    }
    let sup_ln: Vec<f64> = lengths.iter().map(|&m| strip_sup(&c, &v, alpha, e, b, h, m, cfg.boundary_points)).collect();
    let xs: Vec<f64> = lengths.iter().map(|&m| m as f64).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = sup_ln.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&sup_ln).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let at_n = (n, strip_sup(&c, &v, alpha, e, b, h, n.max(1), cfg.boundary_points));
    let c1 = xs
        .iter()
        .zip(&sup_ln)
        .map(|(x, y)| y / x)
        .chain(std::iter::once(at_n.1 / at_n.0.max(1) as f64))
        .fold(slope, f64::max);
    Ok(StripConstant { rho, height: h, lengths, sup_ln, slope, intercept, at_n, c1 })
}

/// Estimated relative rounding error of the `F g = f` comparison above
/// which a grid point is left out.
pub const FG_ERROR_CEILING: f64 = 1e-9;

/// `ln max_k ||D_{n-1} ... D_k|| ||D_{k-1} ... D_0|| / ||D(n)||`: a rounding
/// error at step `k` is amplified by this factor, so it is large exactly at
/// the deep dips of `||D(n)||` along the circle.
fn ln_cancellation(model: &OperatorModel, e: f64, n: i64, ln_total: f64) -> f64 {
    let mut steps = Vec::with_capacity(n as usize);
    let mut w_prev = model.weight(-1);
    for j in 0..n {
        let (w, v) = model.site(j);
        steps.push(ScaledMatrix2x2::from_mat(step_matrices(e, v, w, w_prev).d));
        w_prev = w;
    }
    let mut heads = Vec::with_capacity(n as usize);
    let mut head = ScaledMatrix2x2::identity();
    for s in &steps {
        heads.push(head.ln_hs_norm());
        head = s.mul(&head);
    }
    let mut tail = ScaledMatrix2x2::identity();
    let mut worst = f64::NEG_INFINITY;
    for k in (0..n as usize).rev() {
        tail = tail.mul(&steps[k]);
        worst = worst.max(tail.ln_hs_norm() + heads[k]);
    }
    worst - ln_total
}

/// `F_n = ||A(n)||^2_HS = f_n / g_n` on a uniform grid, with `f_n` split
/// into its Fourier truncation `P_n` (`|k| <= dn`) and tail `R_n`.
///
/// Grid data are relative to `e^{ln_scale}`, the maximum of `f_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigDecomposition {
    pub n: usize,
    pub e: f64,
    pub rho: f64,
    /// `b = int ln|c|`; all matrices are divided by `e^b`.
    pub b_rescale: f64,
    pub strip: StripConstant,
    pub c1: f64,
    /// `[C1 / (pi rho)] + 2`.
    pub d: u64,
    /// `2 n max(deg c, deg v)`, the exact degree bound of `f_n`.
    pub degree_bound: u64,
    /// Truncation index `dn`.
    pub cut: u64,
    pub grid: usize,
    pub ln_scale: f64,
    pub ln_f: Vec<f64>,
    pub ln_g: Vec<f64>,
    /// `ln F_n` from the `A` products; `None` where a weight vanishes.
    pub ln_big_f: Vec<Option<f64>>,
    /// Scaled coefficients of `f_n` for `|k| <= degree_bound`, from `-kcap`.
    pub coeffs: Vec<C>,
    pub kcap: i64,
    pub p_scaled: Vec<f64>,
    pub r_scaled: Vec<f64>,
    /// `dn >= degree_bound`: `R_n` vanishes identically.
    pub r_structural: bool,
    pub ln_max_r: f64,
    /// `ln sum_{dn < |k| <= degree_bound} |f^(k)|`.
    pub ln_r_tail: f64,
    /// Coefficient mass past the exact degree: FFT rounding only.
    pub ln_fft_noise: f64,
    /// `ln(8 e^{C1 n} e^{-pi rho d n} / (1 - e^{-pi rho}))`.
    pub ln_r_bound: f64,
    pub r_bound_ok: bool,
    pub n2: f64,
    /// `max|R_n| < 1`, once `n > n2`.
    pub r_check: Option<bool>,
    pub parseval_rel: f64,
    pub parseval_ok: bool,
    /// `max |P + R - f|` in units of `max f`.
    pub pr_max_err: f64,
    /// `max |F g / f - 1|` over grid points with nonvanishing weights and
    /// estimated rounding error `n eps e^{kappa}` below [`FG_ERROR_CEILING`].
    pub fg_max_rel: f64,
    pub fg_checked: usize,
    /// Points left out for ill-conditioning (deep dips of `f_n`).
    pub fg_excluded: usize,
    /// Largest `kappa = ln(max_k ||D(n; k)|| ||D(k; 0)|| / ||D(n)||)`.
    pub max_ln_cancellation: f64,
    /// `max |ln|det D~(n)| - (ln g_n(theta) + ln g_n(theta - alpha)) / 2|`.
    pub det_identity_max: f64,
    pub decay_ok: bool,
    /// Smallest `ln bound - ln |f^(k)|` over `|k| <= degree_bound`.
    pub decay_worst_margin: f64,
    pub mean_ln_g_over_n: f64,
    pub model: OperatorModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub theta: f64,
    pub ln_big_f: Option<f64>,
    pub ln_f: f64,
    pub ln_g: f64,
    pub ln_p: f64,
    /// `R_n` in absolute units.
    pub r: f64,
}

impl TrigDecomposition {
    pub fn theta(&self, i: usize) -> f64 {
        i as f64 / self.grid as f64
    }

    /// `ln P_n` at grid point `i`; `-inf` where `P_n <= 0`.
    pub fn ln_p(&self, i: usize) -> f64 {
        let p = self.p_scaled[i];
        if p > 0.0 {
            self.ln_scale + p.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Scaled coefficient `f^(k) e^{-ln_scale}`.
    pub fn coeff(&self, k: i64) -> C {
        if k.abs() > self.kcap {
            C::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.kcap) as usize]
        }
    }

    /// `ln P_n(theta)` off the grid.
    pub fn ln_p_at(&self, theta: f64) -> Result<f64, FourierError> {
        if self.r_structural {
            let m = self.model.with_theta(theta);
            let dp = d_product(&m, self.e, self.n as i64, 0)?;
            return Ok(2.0 * (dp.ln_hs_norm() - self.n as f64 * self.b_rescale));
        }
        let cut = self.cut as i64;
        let mut acc = 0.0;
        for k in -cut..=cut {
            acc += (self.coeff(k) * C::from_polar(1.0, 2.0 * PI * (k as f64 * theta).rem_euclid(1.0))).re;
        }
        Ok(if acc > 0.0 { self.ln_scale + acc.ln() } else { f64::NEG_INFINITY })
    }

    pub fn grid_rows(&self) -> Vec<GridRow> {
        (0..self.grid)
            .map(|i| GridRow {
                theta: self.theta(i),
                ln_big_f: self.ln_big_f[i],
                ln_f: self.ln_f[i],
                ln_g: self.ln_g[i],
                ln_p: self.ln_p(i),
                r: self.r_scaled[i] * self.ln_scale.exp(),
            })
            .collect()
    }
}

pub fn decompose_f(model: &OperatorModel, e: f64, n: usize) -> Result<TrigDecomposition, FourierError> {
    decompose_f_with(model, e, n, &DecomposeConfig::default())
}

struct Row {
    ln_f: f64,
    ln_g: f64,
    ln_big_f: Option<f64>,
    det_err: Option<f64>,
    kappa: f64,
}

pub fn decompose_f_with(
    model: &OperatorModel,
    e: f64,
    n: usize,
    cfg: &DecomposeConfig,
) -> Result<TrigDecomposition, FourierError> {
    if n == 0 || n > MAX_DECOMPOSE_N {
        return Err(FourierError::BudgetExceeded { n, grid: 0 });
    }
    let (c, v, _) = analytic_parts(model)?;
    let strip = measure_strip_constant(model, e, n, cfg)?;
    let b = mahler_log_mean(&c);
    let rho = strip.rho;
    let c1 = strip.c1;
    let d = (c1 / (PI * rho)).floor().max(0.0) as u64 + 2;
    let degree_bound = 2 * n as u64 * c.degree().max(v.degree());
    let cut = d * n as u64;
    let r_structural = cut >= degree_bound;
    let grid = ((cfg.oversample as u64 * cut).max(4 * degree_bound + 2).max(64) as usize).next_power_of_two();
    if grid > MAX_GRID {
        return Err(FourierError::BudgetExceeded { n, grid });
    }
    let nf = n as f64;
    let ni = n as i64;

    let rows: Vec<Row> = (0..grid)
        .into_par_iter()
        .map(|i| -> Result<Row, FourierError> {
            let m = model.with_theta(i as f64 / grid as f64);
            let dp = d_product(&m, e, ni, 0)?;
            let ln_f = 2.0 * (dp.ln_hs_norm() - nf * b);
            let ln_g = 2.0 * (weight_product(&m, ni, 0)?.log_mag - nf * b);
            let ln_g_prev = 2.0 * (weight_product(&m, ni, -1)?.log_mag - nf * b);
            let ln_det = dp.det.log_mag - 2.0 * nf * b;
            let det_err = (ln_det.is_finite() && ln_g.is_finite() && ln_g_prev.is_finite())
                .then(|| (ln_det - 0.5 * (ln_g + ln_g_prev)).abs());
            let ln_big_f = match a_product(&m, e, ni, 0) {
                Ok(a) => Some(2.0 * a.ln_hs_norm()),
                Err(CocycleError::SingularStep { .. }) => None,
                Err(other) => return Err(other.into()),
            };
            let kappa = ln_cancellation(&m, e, ni, dp.ln_hs_norm());
            Ok(Row { ln_f, ln_g, ln_big_f, det_err, kappa })
        })
        .collect::<Result<_, _>>()?;

    let ln_f: Vec<f64> = rows.iter().map(|r| r.ln_f).collect();
    let ln_g: Vec<f64> = rows.iter().map(|r| r.ln_g).collect();
    let ln_big_f: Vec<Option<f64>> = rows.iter().map(|r| r.ln_big_f).collect();
    let det_identity_max = rows.iter().filter_map(|r| r.det_err).fold(0.0, f64::max);
    let ln_scale = ln_f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let f_scaled: Vec<f64> = ln_f.iter().map(|x| (x - ln_scale).exp()).collect();

    let mut planner = FftPlanner::<f64>::new();
    let mut spec: Vec<C> = f_scaled.iter().map(|&x| C::new(x, 0.0)).collect();
    planner.plan_fft_forward(grid).process(&mut spec);
    let inv_n = 1.0 / grid as f64;
    spec.iter_mut().for_each(|x| *x *= inv_n);
    let at = |k: i64| spec[k.rem_euclid(grid as i64) as usize];

    let parseval_lhs: f64 = spec.iter().map(|x| x.norm_sqr()).sum();
    let parseval_rhs = f_scaled.iter().map(|x| x * x).sum::<f64>() * inv_n;
    let parseval_rel = (parseval_lhs - parseval_rhs).abs() / parseval_rhs;

    let kcap = degree_bound as i64;
    let coeffs: Vec<C> = (-kcap..=kcap).map(at).collect();
    let half = grid as i64 / 2;
    let (mut tail, mut noise) = (0.0, 0.0);
    for k in (1 - half)..=half {
        let a = k.unsigned_abs();
        if a > cut.max(degree_bound) {
            noise += at(k).norm();
        } else if a > cut {
            tail += at(k).norm();
        }
    }
    let ln_r_tail = ln_scale + tail.ln();
    let ln_fft_noise = ln_scale + noise.ln();

    let (p_scaled, r_scaled) = if r_structural {
        (f_scaled.clone(), vec![0.0; grid])
    } else {
        let mut tail_spec = vec![C::new(0.0, 0.0); grid];
        for k in (1 - half)..=half {
            let a = k.unsigned_abs();
            if a > cut && a <= degree_bound {
                tail_spec[k.rem_euclid(grid as i64) as usize] = at(k);
            }
        }
        planner.plan_fft_inverse(grid).process(&mut tail_spec);
        let r: Vec<f64> = tail_spec.iter().map(|x| x.re).collect();
        let p: Vec<f64> = f_scaled.iter().zip(&r).map(|(f, r)| f - r).collect();
        (p, r)
    };
    let pr_max_err = (0..grid).map(|i| (p_scaled[i] + r_scaled[i] - f_scaled[i]).abs()).fold(0.0, f64::max);
    let max_r = r_scaled.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let ln_max_r = if max_r == 0.0 { f64::NEG_INFINITY } else { ln_scale + max_r.ln() };
    let pr = PI * rho;
    let ln_r_bound = 8f64.ln() + c1 * nf - pr * (d * n as u64) as f64 - (1.0 - (-pr).exp()).ln();
    let n2 = n2_threshold(rho);

    let mut fg_max_rel: f64 = 0.0;
    let (mut fg_checked, mut fg_excluded) = (0, 0);
    let max_ln_cancellation = rows.iter().map(|r| r.kappa).fold(f64::NEG_INFINITY, f64::max);
    for (i, big) in ln_big_f.iter().enumerate() {
        if let Some(lf) = big {
            if !ln_g[i].is_finite() {
                continue;
            }
            if nf * f64::EPSILON * rows[i].kappa.exp() > FG_ERROR_CEILING {
                fg_excluded += 1;
                continue;
            }
            fg_max_rel = fg_max_rel.max((lf + ln_g[i] - ln_f[i]).exp_m1().abs());
            fg_checked += 1;
        }
    }

    let noise_floor = (16.0 * f64::EPSILON * (grid as f64).log2()).ln() + ln_scale;
    let mut decay_worst_margin = f64::INFINITY;
    for k in -kcap..=kcap {
        let ln_abs = ln_scale + at(k).norm().ln();
        let bound = 4f64.ln() + c1 * nf - pr * k.abs() as f64;
        decay_worst_margin = decay_worst_margin.min(bound.max(noise_floor) - ln_abs);
    }

    let mean_ln_g_over_n = ln_g.iter().sum::<f64>() / grid as f64 / nf;

    Ok(TrigDecomposition {
        n,
        e,
        rho,
        b_rescale: b,
        c1,
        strip,
        d,
        degree_bound,
        cut,
        grid,
        ln_scale,
        ln_f,
        ln_g,
        ln_big_f,
        coeffs,
        kcap,
        p_scaled,
        r_scaled,
        r_structural,
        ln_max_r,
        ln_r_tail,
        ln_fft_noise,
        ln_r_bound,
        r_bound_ok: ln_max_r <= ln_r_bound,
        n2,
        r_check: (nf > n2).then_some(ln_max_r < 0.0),
        parseval_rel,
        parseval_ok: parseval_rel <= 1e-6,
        pr_max_err,
        fg_max_rel,
        fg_checked,
        fg_excluded,
        max_ln_cancellation,
        det_identity_max,
        decay_ok: decay_worst_margin >= 0.0,
        decay_worst_margin,
        mean_ln_g_over_n,
        model: model.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{EhmParams, SamplingFunction};

    const GOLDEN: f64 = 0.6180339887498949;

    #[test]
    fn mahler_of_simple_polys() {
        // 2 + e(theta): |root| = 2 -> ln 1 + ln 2
        let p = TrigPoly::from_pairs(&[(0, C::new(2.0, 0.0)), (1, C::new(1.0, 0.0))]);
        assert!((mahler_log_mean(&p) - 2f64.ln()).abs() < 1e-12);
        let q = TrigPoly::from_pairs(&[(0, C::new(0.5, 0.0)), (1, C::new(1.0, 0.0))]);
        assert!(mahler_log_mean(&q).abs() < 1e-12);
        // numerical mean of ln|c| for an EHM coupling
        let c = EhmParams::new(0.2, 0.5, 0.1).unwrap().off_diagonal(GOLDEN);
        let m = 200_000;
        let num: f64 = (0..m).map(|i| c.eval((i as f64 + 0.5) / m as f64).norm().ln()).sum::<f64>() / m as f64;
        let c = c.fourier_coeffs().unwrap();
        assert!((mahler_log_mean(&c) - num).abs() < 1e-6);
    }

    #[test]
    fn schrodinger_case_has_unit_g() {
        let model = OperatorModel::almost_mathieu(1.5, GOLDEN, 0.0);
        let dec = decompose_f(&model, 0.3, 40).unwrap();
        assert_eq!(dec.b_rescale, 0.0);
        assert!(dec.ln_g.iter().all(|g| *g == 0.0));
        assert!(dec.fg_max_rel < 1e-12 && dec.fg_checked == dec.grid);
        assert!(dec.r_structural && dec.parseval_ok && dec.decay_ok, "{}", dec.decay_worst_margin);
    }

    #[test]
    fn power_type_zeros_are_rejected() {
        let c = SamplingFunction::ZeroProduct { envelope: Box::new(SamplingFunction::constant(1.0)), zeros: vec![(0.2, 1.0)] };
        let model = OperatorModel::quasiperiodic(c, SamplingFunction::constant(0.0), GOLDEN, 0.0);
        assert!(matches!(decompose_f(&model, 0.0, 10), Err(FourierError::NonAnalyticInput(_))));
        assert!(matches!(decompose_f(&model, 0.0, 5000), Err(FourierError::BudgetExceeded { .. })));
    }

    #[test]
    fn strip_growth_forces_structural_truncation() {
        // C1 grows like 2 pi h deg c on the strip, so dn covers the degree 2nK
        let c = SamplingFunction::Trig(TrigPoly::from_pairs(&[(0, C::new(1.0, 0.0)), (3, C::new(0.3, 0.0))]));
        let model = OperatorModel::quasiperiodic(c, SamplingFunction::constant(0.0), GOLDEN, 0.0);
        let dec = decompose_f(&model, 0.5, 8).unwrap();
        assert_eq!(dec.degree_bound, 48);
        assert!(dec.d >= 6 && dec.r_structural);
        assert!(dec.pr_max_err == 0.0 && dec.parseval_ok && dec.decay_ok);
        assert!(dec.det_identity_max < 1e-9 && dec.fg_max_rel < 1e-8);
    }
}
