use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use super::{check_side_covers, lattice_site, side_site, Side, SpectralError};
use crate::lattice::OperatorModel;

type C = Complex64;

/// Number of boundary angles in the dominance check `|M| <= sup |m_phi|`.
pub const DKL_GRID: usize = 32;

/// Angles at which the gluing identity for `M` is checked.
pub const IDENTITY_ANGLES: [f64; 4] = [0.0, 0.3, -0.7, 1.2];

/// Relative tolerance of the gluing identity.
pub const IDENTITY_TOL: f64 = 1e-6;

/// Truncation schedule for resolvent-based values: `n` doubles from
/// `start` until two successive values agree to `tol max(1, |value|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MConfig {
    pub start: usize,
    pub max: usize,
    pub tol: f64,
}

impl Default for MConfig {
    fn default() -> Self {
        MConfig { start: 256, max: 1 << 25, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MValue {
    pub value: C,
    /// Truncation of the accepted value.
    pub n: usize,
    /// `|value(n) - value(n / 2)|`.
    pub gap: f64,
}

fn check_z(z: C) -> Result<(), SpectralError> {
    if !(z.im.abs() >= 1e-6) || !z.re.is_finite() {
        return Err(SpectralError::InvalidInput(format!("need |Im z| >= 1e-6, got z = {z}")));
    }
    Ok(())
}

fn converge(cfg: &MConfig, f: impl Fn(usize) -> Result<C, SpectralError>) -> Result<MValue, SpectralError> {
    let mut n = cfg.start.max(2);
    let mut prev = f(n)?;
    loop {
        let next_n = 2 * n;
        if next_n > cfg.max {
            let gap = f64::NAN;
            return Err(SpectralError::NotConverged { n, value_n: prev, value_2n: C::new(f64::NAN, f64::NAN), gap });
        }
        let next = f(next_n)?;
        let gap = (next - prev).norm();
        if gap <= cfg.tol * next.norm().max(1.0) {
            return Ok(MValue { value: next, n: next_n, gap });
        }
        if 2 * next_n > cfg.max {
            return Err(SpectralError::NotConverged { n, value_n: prev, value_2n: next, gap });
        }
        prev = next;
        n = next_n;
    }
}

/// Dirichlet m-function `|w_0| G(1, 1)` of the half-line operator on `side`
/// truncated to sites `1 ..= n`.
///
/// Vanishing weights inside the range decouple the tail, which the
/// continued fraction handles without special cases.
pub fn truncated_m0(model: &OperatorModel, side: Side, z: C, n: usize) -> Result<C, SpectralError> {
    check_side_covers(model, side, n as i64)?;
    let (w0, _) = side_site(model, side, 0);
    if model.is_zero_weight(w0) {
        return Err(SpectralError::SingularStep { site: lattice_site(side, 0) });
    }
    let mut g = C::new(0.0, 0.0);
    for k in (1..=n as i64).rev() {
        let (w, v) = side_site(model, side, k);
        let coupling = if k == n as i64 { 0.0 } else { w.norm_sqr() };
        g = (v - z - coupling * g).inv();
    }
    Ok(w0.norm() * g)
}

/// `m_phi = (sin phi + m_0 cos phi) / (cos phi - m_0 sin phi)`.
#[inline]
pub fn rotate_m(m0: C, phi: f64) -> C {
    let (s, c) = phi.sin_cos();
    (s + m0 * c) / (c - m0 * s)
}

/// `sup_phi |m_phi|` in closed form: the orbit of `m_0` is the circle
/// `|(m - i) / (m + i)| = rho`, whose farthest point from 0 has modulus
/// `(1 + rho) / (1 - rho)`.
pub fn sup_rotated_abs(m0: C) -> f64 {
    let i = C::new(0.0, 1.0);
    let rho = ((m0 - i) / (m0 + i)).norm();
    (1.0 + rho) / (1.0 - rho)
}

pub fn half_line_m(model: &OperatorModel, side: Side, phi: f64, z: C) -> Result<MValue, SpectralError> {
    half_line_m_with(model, side, phi, z, &MConfig::default())
}

/// Half-line m-function with boundary angle `phi`, certified by doubling
/// the truncation.
pub fn half_line_m_with(
    model: &OperatorModel,
    side: Side,
    phi: f64,
    z: C,
    cfg: &MConfig,
) -> Result<MValue, SpectralError> {
    check_z(z)?;
    let m0 = converge(cfg, |n| truncated_m0(model, side, z, n))?;
    Ok(MValue { value: rotate_m(m0.value, phi), ..m0 })
}

/// `G(0, 0) + G(1, 1)` for the box on sites `1 - n ..= n`: the Borel
/// transform of the trace measure of `delta_0` and `delta_1`.
pub fn box_borel_transform(model: &OperatorModel, z: C, n: usize) -> Result<C, SpectralError> {
    let n = n.max(1) as i64;
    model.check_covers(1 - n, n)?;
    let zero = C::new(0.0, 0.0);
    // right block 2..=n, seen from site 2
    let mut g_r = zero;
    for k in (2..=n).rev() {
        let (w, v) = model.site(k);
        let coupling = if k == n { 0.0 } else { w.norm_sqr() };
        g_r = (v - z - coupling * g_r).inv();
    }
    // left block 1-n..=-1, seen from site -1
    let mut g_l = zero;
    for k in (1 - n)..=-1 {
        let coupling = if k == 1 - n { 0.0 } else { model.weight(k - 1).norm_sqr() };
        g_l = (model.potential(k) - z - coupling * g_l).inv();
    }
    let (w0, v0) = model.site(0);
    let (w1, v1) = model.site(1);
    let w_m1 = if n >= 2 { model.weight(-1).norm_sqr() } else { 0.0 };
    let a1 = v1 - z - if n >= 2 { w1.norm_sqr() * g_r } else { zero };
    let a0 = v0 - z - w_m1 * g_l;
    let det = a0 * a1 - w0.norm_sqr();
    Ok((a0 + a1) / det)
}

/// `M(z)` with the box size chosen by doubling; no consistency checks.
pub fn whole_line_m_value(model: &OperatorModel, z: C, cfg: &MConfig) -> Result<MValue, SpectralError> {
    check_z(z)?;
    converge(cfg, |n| box_borel_transform(model, z, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DklCheck {
    /// `max |m_phi|` over the angle grid.
    pub grid_sup: f64,
    /// Exact `sup_phi |m_phi|`.
    pub exact_sup: f64,
    /// `|w_0| |M|`, the quantity dominated.
    pub normalized_abs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub phi: f64,
    pub m_right: C,
    pub m_left: C,
    /// `(m_phi m~_{pi/2 - phi} - 1) / (m_phi + m~_{pi/2 - phi})`.
    pub predicted: C,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WholeLineM {
    pub z: C,
    /// Borel transform of `mu_{delta_0} + mu_{delta_1}`.
    pub value: C,
    pub n: usize,
    pub gap: f64,
    /// Total mass of the measure, for the bound `|M| <= 2 / Im z`.
    pub total_mass: f64,
    pub mass_bound_ok: bool,
    /// `|w_0|`: the half-line functions glue to `|w_0| M`.
    pub w0_abs: f64,
    pub m0_right: C,
    pub m0_left: C,
    pub dkl: DklCheck,
    pub identity: Vec<IdentityRow>,
    pub identity_pass: bool,
}

pub fn whole_line_m(model: &OperatorModel, z: C) -> Result<WholeLineM, SpectralError> {
    whole_line_m_with(model, z, &MConfig::default())
}

/// `M(z)` plus the recorded cross-checks against the half-line functions.
pub fn whole_line_m_with(model: &OperatorModel, z: C, cfg: &MConfig) -> Result<WholeLineM, SpectralError> {
    let mv = whole_line_m_value(model, z, cfg)?;
    let right = half_line_m_with(model, Side::Right, 0.0, z, cfg)?;
    let left = half_line_m_with(model, Side::Left, 0.0, z, cfg)?;
    let w0_abs = model.weight(0).norm();
    let normalized = w0_abs * mv.value;

    let grid_sup = (0..DKL_GRID)
        .map(|i| -FRAC_PI_2 + PI * (i + 1) as f64 / DKL_GRID as f64)
        .map(|phi| rotate_m(right.value, phi).norm())
        .fold(0.0, f64::max);
    let exact_sup = sup_rotated_abs(right.value);
    let slack = 1e-6 * normalized.norm().max(1.0);
    let dkl = DklCheck { grid_sup, exact_sup, normalized_abs: normalized.norm(), pass: normalized.norm() <= grid_sup + slack };

    let identity: Vec<IdentityRow> = IDENTITY_ANGLES
        .iter()
        .map(|&phi| {
            let mr = rotate_m(right.value, phi);
            let ml = rotate_m(left.value, FRAC_PI_2 - phi);
            let predicted = (mr * ml - 1.0) / (mr + ml);
            let rel_error = (predicted - normalized).norm() / normalized.norm().max(1.0);
            IdentityRow { phi, m_right: mr, m_left: ml, predicted, rel_error }
        })
        .collect();
    let identity_pass = identity.iter().all(|r| r.rel_error <= IDENTITY_TOL);
    let total_mass = 2.0;
    Ok(WholeLineM {
        z,
        value: mv.value,
        n: mv.n,
        gap: mv.gap,
        total_mass,
        mass_bound_ok: mv.value.norm() <= total_mass / z.im.abs() * (1.0 + 1e-12),
        w0_abs,
        m0_right: right.value,
        m0_left: left.value,
        dkl,
        identity,
        identity_pass,
    })
}

/// Finite atomic measure `sum_k weight_k delta_{x_k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub atoms: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    pub fn borel_transform(&self, z: C) -> C {
        self.atoms.iter().map(|&(x, w)| w / (x - z)).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }
}
