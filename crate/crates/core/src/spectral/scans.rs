use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use super::mfunc::{half_line_m_with, rotate_m, whole_line_m_value, MConfig};
use super::solution::{half_line_solution, HalfLineSolution, MAX_SOLUTION_LEN};
use super::{Side, SpectralError};
use crate::lattice::OperatorModel;

type C = Complex64;

/// `5 - sqrt 24`.
pub const JL_LOWER: f64 = 0.10102051443364424;
/// `5 + sqrt 24`.
pub const JL_UPPER: f64 = 9.898979485566356;
/// Relative slack on each side of the sandwich.
pub const JL_SLACK: f64 = 0.05;

const START_LEN: usize = 1024;

/// `k` boundary angles `-pi/2 + pi (i + 1) / k`, covering `(-pi/2, pi/2]`.
pub fn phi_grid(k: usize) -> Vec<f64> {
    (0..k).map(|i| -FRAC_PI_2 + PI * (i + 1) as f64 / k as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaVerdict {
    ContinuityConsistent,
    SingularityConsistent,
    Undecided,
}

impl GammaVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            GammaVerdict::ContinuityConsistent => "continuity-consistent",
            GammaVerdict::SingularityConsistent => "singularity-consistent",
            GammaVerdict::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaConfig {
    /// Largest grid minimum of `eps^{1-gamma} |M|` read as bounded.
    pub ceiling: f64,
    /// Slope in `ln eps` at or below `-margin` reads as growth.
    pub margin: f64,
    /// Rounding allowance on the "slope >= 0" test.
    pub slope_tol: f64,
    pub m: MConfig,
}

impl Default for GammaConfig {
    fn default() -> Self {
        GammaConfig { ceiling: 1e3, margin: 0.05, slope_tol: 1e-9, m: MConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub eps: f64,
    pub m: C,
    /// `eps^{1 - gamma} |M(E + i eps)|`.
    pub indicator: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRow {
    pub e: f64,
    pub gamma: f64,
    pub points: Vec<ScanPoint>,
    pub min_indicator: f64,
    pub argmin_eps: f64,
    /// Least-squares slope of `ln indicator` in `ln eps` over the smallest
    /// decade of the grid.
    pub slope: f64,
    pub verdict: GammaVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaScan {
    pub rows: Vec<GammaRow>,
    /// Largest grid `gamma` at which every energy reads continuity-consistent.
    pub gamma_low: Option<f64>,
    /// Smallest grid `gamma` at which every energy reads singularity-consistent.
    pub gamma_high: Option<f64>,
    pub measure: String,
}

fn check_eps_grid(eps: &[f64]) -> Result<(), SpectralError> {
    let bad = |msg: &str| Err(SpectralError::InvalidInput(format!("eps grid: {msg}")));
    if eps.len() < 3 || eps.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return bad("need at least three positive values");
    }
    let lo = eps.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eps.iter().cloned().fold(0.0, f64::max);
    if (hi / lo).log10() < 3.0 - 1e-9 {
        return bad("must span at least three decades");
    }
    let mut sorted = eps.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let steps: Vec<f64> = sorted.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let mean = steps.iter().sum::<f64>() / steps.len() as f64;
    if steps.iter().any(|s| (s - mean).abs() > 1e-6 * mean.abs().max(1e-12)) {
        return bad("must be log-spaced");
    }
    Ok(())
}

fn small_end_slope(points: &[ScanPoint]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p.eps.ln(), p.indicator.ln())).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let cut = pts[0].0 + std::f64::consts::LN_10 * (1.0 + 1e-9);
    let mut take = pts.iter().take_while(|p| p.0 <= cut).count();
    take = take.max(3).min(pts.len());
    let sel = &pts[..take];
    let n = sel.len() as f64;
    let mx = sel.iter().map(|p| p.0).sum::<f64>() / n;
    let my = sel.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = sel.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = sel.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `gamma` scan over any Borel transform `f(E, eps) = M(E + i eps)`.
pub fn gamma_scan_with<F>(
    energies: &[f64],
    gammas: &[f64],
    eps_grid: &[f64],
    cfg: &GammaConfig,
    f: F,
) -> Result<GammaScan, SpectralError>
where
    F: Fn(f64, f64) -> Result<C, SpectralError> + Sync,
{
    check_eps_grid(eps_grid)?;
    let pairs: Vec<(usize, usize)> =
        (0..energies.len()).flat_map(|i| (0..eps_grid.len()).map(move |j| (i, j))).collect();
    let values: Vec<C> =
        pairs.par_iter().map(|&(i, j)| f(energies[i], eps_grid[j])).collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::with_capacity(energies.len() * gammas.len());
    for (i, &e) in energies.iter().enumerate() {
        for &gamma in gammas {
            let points: Vec<ScanPoint> = eps_grid
                .iter()
                .enumerate()
                .map(|(j, &eps)| {
                    let m = values[i * eps_grid.len() + j];
                    ScanPoint { eps, m, indicator: eps.powf(1.0 - gamma) * m.norm() }
                })
                .collect();
            let (argmin_eps, min_indicator) = points
                .iter()
                .map(|p| (p.eps, p.indicator))
                .fold((f64::NAN, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            let slope = small_end_slope(&points);
            let verdict = if slope <= -cfg.margin {
                GammaVerdict::SingularityConsistent
            } else if min_indicator <= cfg.ceiling && slope >= -cfg.slope_tol {
                GammaVerdict::ContinuityConsistent
            } else {
                GammaVerdict::Undecided
            };
            rows.push(GammaRow { e, gamma, points, min_indicator, argmin_eps, slope, verdict });
        }
    }
    let all = |g: f64, v: GammaVerdict| rows.iter().filter(|r| r.gamma == g).all(|r| r.verdict == v);
    let gamma_low = gammas
        .iter()
        .copied()
        .filter(|&g| all(g, GammaVerdict::ContinuityConsistent))
        .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.max(g))));
    let gamma_high = gammas
        .iter()
        .copied()
        .filter(|&g| all(g, GammaVerdict::SingularityConsistent))
        .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.min(g))));
    Ok(GammaScan { rows, gamma_low, gamma_high, measure: String::new() })
}

/// `gamma` scan of the trace measure of `delta_0`, `delta_1`.
pub fn gamma_scan(
    model: &OperatorModel,
    energies: &[f64],
    gammas: &[f64],
    eps_grid: &[f64],
    cfg: &GammaConfig,
) -> Result<GammaScan, SpectralError> {
    let mut scan = gamma_scan_with(energies, gammas, eps_grid, cfg, |e, eps| {
        whole_line_m_value(model, C::new(e, eps), &cfg.m).map(|v| v.value)
    })?;
    scan.measure = "trace measure of delta_0 and delta_1".into();
    Ok(scan)
}

/// Solution long enough that `||u||_l ||v||_l` reaches `1 / (2 eps)`.
fn solution_for(
    model: &OperatorModel,
    e: f64,
    phi: f64,
    eps: f64,
    max_len: usize,
) -> Result<(HalfLineSolution, f64), SpectralError> {
    let mut len = START_LEN.min(max_len);
    loop {
        let sol = half_line_solution(model, e, phi, Side::Right, len)?;
        match sol.subordinacy_length(eps) {
            Ok(ell) => return Ok((sol, ell)),
            Err(SpectralError::RangeTooShort { .. }) if len < max_len && sol.truncated_at.is_none() => {
                len = (2 * len).min(max_len);
            }
            Err(err) => return Err(err),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JlRow {
    pub phi: f64,
    pub m: C,
    pub ell: f64,
    /// `||u^phi||_l / ||v^phi||_l`.
    pub ratio: f64,
    /// `(5 - sqrt 24) / |m_phi|`.
    pub lower: f64,
    /// `(5 + sqrt 24) / |m_phi|`.
    pub upper: f64,
    /// `||u||_l ||v||_l >= ([l] - 1) / (2 max(1, max|w|))`.
    pub wronskian_ok: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JlReport {
    pub e: f64,
    pub eps: f64,
    pub rows: Vec<JlRow>,
    pub all_pass: bool,
    pub slack: f64,
}

/// Both sides of the subordinacy sandwich at each angle, from the resolvent
/// `m_phi(E + i eps)` on one side and real-energy solutions on the other.
pub fn jl_sandwich_check(model: &OperatorModel, e: f64, eps: f64, phis: &[f64]) -> Result<JlReport, SpectralError> {
    let m0 = half_line_m_with(model, Side::Right, 0.0, C::new(e, eps), &MConfig::default())?.value;
    let rows = phis
        .par_iter()
        .map(|&phi| {
            let (sol, ell) = solution_for(model, e, phi, eps, MAX_SOLUTION_LEN)?;
            let m = rotate_m(m0, phi);
            let lu = sol.u_profile().ln_ell_norm(ell)?;
            let lv = sol.v_profile().ln_ell_norm(ell)?;
            let ratio = (lu - lv).exp();
            let lower = JL_LOWER / m.norm();
            let upper = JL_UPPER / m.norm();
            let pass = ratio > lower * (1.0 - JL_SLACK) && ratio < upper * (1.0 + JL_SLACK);
            let wronskian_ok = (lu + lv).exp() >= sol.wronskian_floor(ell) * (1.0 - 1e-9);
            Ok(JlRow { phi, m, ell, ratio, lower, upper, wronskian_ok, pass })
        })
        .collect::<Result<Vec<_>, SpectralError>>()?;
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(JlReport { e, eps, rows, all_pass, slack: JL_SLACK })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawRow {
    pub k: usize,
    pub eta: f64,
    pub phi: f64,
    /// `L_k = l(phi, eta_k, E)`, absent when the range budget ran out.
    pub scale: Option<f64>,
    pub ln_v_norm_sq: f64,
    /// `ln (L^gamma / 16)`.
    pub ln_lower: f64,
    /// `ln L^{2 - gamma}`.
    pub ln_upper: f64,
    /// `ln max_{n <= [L] + 1} |v_n|^2`.
    pub ln_max_v_sq: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawReport {
    pub e: f64,
    pub gamma: f64,
    pub rows: Vec<PowerLawRow>,
    /// Fraction of computed `(k, phi)` with both sides holding.
    pub pass_fraction: f64,
    /// `||v||_L^2 <= L max |v_n|^2` on every computed row.
    pub cauchy_ok: bool,
}

/// `L^gamma / 16 <= ||v^phi||_L^2 <= L^{2 - gamma}` at `L = l(phi, eta_k, E)`
/// over a `phi` grid of `n_phi` angles.
pub fn power_law_check(
    model: &OperatorModel,
    e: f64,
    gamma: f64,
    etas: &[f64],
    n_phi: usize,
    max_len: usize,
) -> Result<PowerLawReport, SpectralError> {
    if etas.is_empty() || etas.iter().any(|&x| !(x > 0.0)) {
        return Err(SpectralError::InvalidInput("etas must be positive".into()));
    }
    let max_len = max_len.min(MAX_SOLUTION_LEN);
    let eta_min = etas.iter().cloned().fold(f64::INFINITY, f64::min);
    let per_phi: Vec<Vec<PowerLawRow>> = phi_grid(n_phi)
        .par_iter()
        .map(|&phi| {
            let sol = match solution_for(model, e, phi, eta_min, max_len) {
                Ok((s, _)) => s,
                Err(SpectralError::RangeTooShort { .. }) => half_line_solution(model, e, phi, Side::Right, max_len)?,
                Err(err) => return Err(err),
            };
            Ok(etas.iter().enumerate().map(|(k, &eta)| power_row(&sol, k, eta, phi, gamma)).collect())
        })
        .collect::<Result<Vec<_>, SpectralError>>()?;
    let mut rows: Vec<PowerLawRow> = per_phi.into_iter().flatten().collect();
    rows.sort_by(|a, b| a.k.cmp(&b.k).then(a.phi.total_cmp(&b.phi)));
    let computed: Vec<&PowerLawRow> = rows.iter().filter(|r| r.scale.is_some()).collect();
    let pass_fraction = if computed.is_empty() {
        0.0
    } else {
        computed.iter().filter(|r| r.lower_ok && r.upper_ok).count() as f64 / computed.len() as f64
    };
    let cauchy_ok = computed.iter().all(|r| r.ln_v_norm_sq <= r.scale.unwrap().ln() + r.ln_max_v_sq + 1e-12);
    Ok(PowerLawReport { e, gamma, rows, pass_fraction, cauchy_ok })
}

fn power_row(sol: &HalfLineSolution, k: usize, eta: f64, phi: f64, gamma: f64) -> PowerLawRow {
    let failed = |msg: String| PowerLawRow {
        k,
        eta,
        phi,
        scale: None,
        ln_v_norm_sq: f64::NAN,
        ln_lower: f64::NAN,
        ln_upper: f64::NAN,
        ln_max_v_sq: f64::NAN,
        lower_ok: false,
        upper_ok: false,
        error: Some(msg),
    };
    let ell = match sol.subordinacy_length(eta) {
        Ok(l) => l,
        Err(err) => return failed(err.to_string()),
    };
    let ln_v_norm_sq = match sol.v_profile().ln_norm_sq(ell) {
        Ok(v) => v,
        Err(err) => return failed(err.to_string()),
    };
    let top = (ell.floor() as usize + 1).min(sol.len());
    let ln_max_v_sq = sol.partner[1..=top].iter().map(|s| 2.0 * s.log_mag).fold(f64::NEG_INFINITY, f64::max);
    let ln_l = ell.ln();
    let ln_lower = gamma * ln_l - 16f64.ln();
    let ln_upper = (2.0 - gamma) * ln_l;
    PowerLawRow {
        k,
        eta,
        phi,
        scale: Some(ell),
        ln_v_norm_sq,
        ln_lower,
        ln_upper,
        ln_max_v_sq,
        lower_ok: ln_lower <= ln_v_norm_sq,
        upper_ok: ln_v_norm_sq <= ln_upper,
        error: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::EhmParams;
    use crate::spectral::DiscreteMeasure;

    const GOLDEN: f64 = 0.6180339887498949;

    fn eps_grid(a: i32, b: i32, per_decade: usize) -> Vec<f64> {
        let n = (b - a) as usize * per_decade;
        (0..=n).map(|i| 10f64.powf(a as f64 + i as f64 / per_decade as f64)).rev().collect()
    }

    #[test]
    fn constants() {
        assert!((JL_LOWER - (5.0 - 24f64.sqrt())).abs() < 1e-15);
        assert!((JL_UPPER - (5.0 + 24f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn point_mass_is_singular_for_positive_gamma() {
        let mu = DiscreteMeasure { atoms: vec![(0.25, 1.0)] };
        let grid = eps_grid(-6, -2, 4);
        let scan = gamma_scan_with(&[0.25], &[0.0, 0.3, 0.9], &grid, &GammaConfig::default(), |e, eps| {
            Ok(mu.borel_transform(C::new(e, eps)))
        })
        .unwrap();
        assert_eq!(scan.rows[0].verdict, GammaVerdict::ContinuityConsistent);
        assert_eq!(scan.rows[1].verdict, GammaVerdict::SingularityConsistent);
        assert_eq!(scan.rows[2].verdict, GammaVerdict::SingularityConsistent);
        assert_eq!(scan.gamma_low, Some(0.0));
        assert_eq!(scan.gamma_high, Some(0.3));
    }

    #[test]
    fn short_grid_rejected() {
        let r = gamma_scan_with(&[0.0], &[0.5], &[1e-2, 1e-3, 1e-4], &GammaConfig::default(), |_, _| Ok(C::new(0.0, 1.0)));
        assert!(matches!(r, Err(SpectralError::InvalidInput(_))));
    }

    #[test]
    fn free_sandwich_at_zero() {
        let r = jl_sandwich_check(&OperatorModel::free(), 0.0, 1e-3, &[0.0]).unwrap();
        assert!(r.all_pass, "{r:?}");
        assert!(r.rows[0].wronskian_ok);
    }

    #[test]
    fn free_power_law() {
        let r = power_law_check(&OperatorModel::free(), 0.0, 0.9, &[1e-2, 1e-3, 1e-4], 16, 1 << 20).unwrap();
        assert_eq!(r.pass_fraction, 1.0);
        assert!(r.cauchy_ok);
    }

    #[test]
    fn supercritical_upper_bound_fails() {
        let model = EhmParams::new(0.0, 1.0 / 3.0, 0.0).unwrap().model(GOLDEN, 0.1);
        let r = power_law_check(&model, 0.3, 0.9, &[1e-4, 1e-8], 16, 1 << 18).unwrap();
        let big: Vec<_> = r.rows.iter().filter(|x| x.k == 1 && x.scale.is_some()).collect();
        let fails = big.iter().filter(|x| !x.upper_ok).count();
        assert!(fails * 2 > big.len(), "{fails} of {}", big.len());
    }
}
