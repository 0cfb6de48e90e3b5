use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use super::{TransportError, LEAKAGE_LIMIT, MAX_SITES};
use crate::lattice::OperatorModel;

/// Truncation bound aimed for on each Chebyshev step.
pub const STEP_TOL: f64 = 1e-12;
/// Largest `a dt` taken in one Chebyshev step; longer intervals are split.
const MAX_STEP_ARG: f64 = 200.0;
/// Sites at the edge of the active window with `|psi|^2` below this are zeroed.
const TRIM_MASS: f64 = 1e-60;

/// `H` restricted to sites `-L ..= L` with Dirichlet ends, shifted and scaled
/// so that its spectrum sits inside `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct BoxHamiltonian {
    pub half_width: usize,
    diag: Vec<f64>,
    /// `off[i]` couples box index `i` to `i + 1`.
    off: Vec<Complex64>,
    center: f64,
    radius: f64,
    /// `(diag - center) / radius`, `off / radius` and its conjugate.
    sd: Vec<f64>,
    so: Vec<Complex64>,
    soc: Vec<Complex64>,
}

impl BoxHamiltonian {
    pub fn new(model: &OperatorModel, half_width: usize) -> Result<Self, TransportError> {
        let n = 2 * half_width + 1;
        if n > MAX_SITES {
            return Err(TransportError::BoxTooLarge { sites: n });
        }
        let l = half_width as i64;
        model.check_covers(-l, l)?;
        let mut diag = Vec::with_capacity(n);
        let mut off = Vec::with_capacity(n);
        for j in -l..=l {
            let (w, v) = model.site(j);
            diag.push(v);
            if j < l {
                off.push(w);
            }
        }
        // Gershgorin enclosure
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let r = if i > 0 { off[i - 1].norm() } else { 0.0 } + if i + 1 < n { off[i].norm() } else { 0.0 };
            lo = lo.min(diag[i] - r);
            hi = hi.max(diag[i] + r);
        }
        let center = 0.5 * (lo + hi);
        let radius = (0.5 * (hi - lo) * (1.0 + 1e-12)).max(1e-12 * center.abs().max(1.0));
        let sd = diag.iter().map(|d| (d - center) / radius).collect();
        let so: Vec<Complex64> = off.iter().map(|w| w / radius).collect();
        let soc = so.iter().map(|w| w.conj()).collect();
        Ok(BoxHamiltonian { half_width, diag, off, center, radius, sd, so, soc })
    }

    pub fn sites(&self) -> usize {
        self.diag.len()
    }

    pub fn max_weight(&self) -> f64 {
        self.off.iter().map(|w| w.norm()).fold(0.0, f64::max)
    }

    /// `H u` over the whole box.
    pub fn apply(&self, u: &[Complex64], out: &mut [Complex64]) {
        let n = u.len();
        for i in 0..n {
            let mut s = u[i] * self.diag[i];
            if i + 1 < n {
                s += self.off[i] * u[i + 1];
            }
            if i > 0 {
                s += self.off[i - 1].conj() * u[i - 1];
            }
            out[i] = s;
        }
    }

    /// `<u, H u>` over the box indices `lo ..= hi` (zero elsewhere).
    pub fn energy_on(&self, u: &[Complex64], lo: usize, hi: usize) -> f64 {
        let mut e = 0.0;
        for i in lo..=hi {
            e += self.diag[i] * u[i].norm_sqr();
            if i < hi {
                e += 2.0 * (u[i].conj() * self.off[i] * u[i + 1]).re;
            }
        }
        e
    }

    pub fn energy(&self, u: &[Complex64]) -> f64 {
        self.energy_on(u, 0, u.len() - 1)
    }

    /// `out = Hs u` and `acc += c out` on `lo ..= hi`, with `u` zero outside.
    fn first_pass(&self, lo: usize, hi: usize, u: &[Complex64], out: &mut [Complex64], acc: &mut [Complex64], c: Complex64) {
        for i in lo..=hi {
            let mut s = u[i] * self.sd[i];
            if i < hi {
                s += self.so[i] * u[i + 1];
            }
            if i > lo {
                s += self.soc[i - 1] * u[i - 1];
            }
            out[i] = s;
            acc[i] += s * c;
        }
    }

    /// `prev <- 2 Hs cur - prev` and `acc += c prev` on `lo ..= hi`.
    fn recurrence_pass(
        &self,
        lo: usize,
        hi: usize,
        cur: &[Complex64],
        prev: &mut [Complex64],
        acc: &mut [Complex64],
        c: Complex64,
    ) {
        let cur = &cur[lo..=hi];
        let prev = &mut prev[lo..=hi];
        let acc = &mut acc[lo..=hi];
        let sd = &self.sd[lo..=hi];
        let so = &self.so[lo..hi];
        let soc = &self.soc[lo..hi];
        let n = cur.len();
        let mut step = |i: usize, s: Complex64| {
            let t = s * 2.0 - prev[i];
            prev[i] = t;
            acc[i] += t * c;
        };
        if n == 1 {
            step(0, cur[0] * sd[0]);
            return;
        }
        step(0, cur[0] * sd[0] + so[0] * cur[1]);
        for i in 1..n - 1 {
            step(i, cur[i] * sd[i] + so[i] * cur[i + 1] + soc[i - 1] * cur[i - 1]);
        }
        step(n - 1, cur[n - 1] * sd[n - 1] + soc[n - 2] * cur[n - 2]);
    }
}

/// `J_0(x) .. J_kmax(x)` for `x >= 0` by Miller's backward recurrence,
/// normalized with `J_0 + 2 sum J_{2k} = 1`.
pub fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if x < 1e-8 {
        // leading terms (x/2)^k / k!
        let mut term = 1.0;
        for (k, v) in out.iter_mut().enumerate() {
            if k > 0 {
                term *= x / 2.0 / k as f64;
            }
            *v = term;
        }
        out[0] = 1.0 - x * x / 4.0;
        return out;
    }
    let start = {
        let m = kmax.max(x as usize) + 30 + (40.0 * (kmax.max(x as usize) as f64)).sqrt() as usize;
        m + (m % 2)
    };
    let (mut jp1, mut j) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    for k in (0..=start).rev() {
        if k <= kmax {
            out[k] = j;
        }
        if k % 2 == 0 {
            norm += if k == 0 { j } else { 2.0 * j };
        }
        if k == 0 {
            break;
        }
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        if j.abs() > 1e250 {
            let s = 1e-250;
            j *= s;
            jp1 *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// Smallest `K >= x` with `2 sum_{k > K} (x/2)^k / k! <= tol`, and that bound.
fn truncation_order(x: f64, tol: f64) -> (usize, f64) {
    let half = x / 2.0;
    let mut ln_term = 0.0; // ln((x/2)^k / k!) at k = 0
    let mut k = 0usize;
    loop {
        let next = k + 1;
        let ln_next = ln_term + half.ln() - (next as f64).ln();
        if next as f64 >= x {
            let ratio = half / (next as f64 + 1.0);
            if ratio < 1.0 {
                let bound = 2.0 * ln_next.exp() / (1.0 - ratio);
                if bound <= tol || x == 0.0 {
                    return (k, bound);
                }
            }
        }
        ln_term = ln_next;
        k = next;
    }
}

/// Chebyshev coefficients of `e^{-i x s}` on `[-1, 1]`.
#[derive(Debug, Clone)]
struct StepCoeffs {
    coeffs: Vec<Complex64>,
    phase: Complex64,
    bound: f64,
}

fn step_coeffs(h: &BoxHamiltonian, dt: f64) -> StepCoeffs {
    let x = h.radius * dt;
    let (k, bound) = if x == 0.0 { (0, 0.0) } else { truncation_order(x, STEP_TOL) };
    let j = bessel_j_sequence(x, k);
    let mut minus_i_pow = Complex64::new(1.0, 0.0);
    let coeffs = (0..=k)
        .map(|n| {
            let c = minus_i_pow * j[n] * if n == 0 { 1.0 } else { 2.0 };
            minus_i_pow *= Complex64::new(0.0, -1.0);
            c
        })
        .collect();
    StepCoeffs { coeffs, phase: Complex64::from_polar(1.0, -h.center * dt), bound }
}

/// Per-snapshot diagnostics and moment sums `sum |n|^p |psi_n|^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    /// `| ||psi|| - 1 |`.
    pub norm_dev: f64,
    pub energy: f64,
    /// Mass on the outer twentieth of the box at each end.
    pub boundary_mass: f64,
    /// One entry per requested order.
    pub moments: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Moment orders accumulated at every snapshot.
    pub orders: Vec<f64>,
    /// Keep the full state at every snapshot.
    pub keep_states: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evolution {
    pub half_width: usize,
    pub orders: Vec<f64>,
    /// `max |w|` over the box.
    pub max_weight: f64,
    pub snapshots: Vec<Snapshot>,
    pub states: Option<Vec<Vec<Complex64>>>,
    /// Largest boundary mass seen, including the snapshot that stopped the run.
    pub leakage: f64,
    /// Time at which the boundary mass first exceeded the limit.
    pub stopped_at: Option<f64>,
    pub max_norm_dev: f64,
    pub max_energy_drift: f64,
    /// Sum of the per-step truncation bounds.
    pub truncation_bound: f64,
    pub matvecs: usize,
}

impl Evolution {
    pub fn last_time(&self) -> f64 {
        self.snapshots.last().map_or(0.0, |s| s.t)
    }

    pub fn order_index(&self, p: f64) -> Option<usize> {
        self.orders.iter().position(|&q| q == p)
    }
}

fn boundary_width(half_width: usize) -> usize {
    if half_width == 0 {
        0
    } else {
        (half_width / 20).max(1)
    }
}

/// `e^{-itH} delta_0` on the box `-L ..= L` at the (nondecreasing, nonnegative) times `times`.
pub fn evolve(
    model: &OperatorModel,
    half_width: usize,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<Evolution, TransportError> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(TransportError::InvalidInput("times must be finite, nonnegative and sorted".into()));
    }
    if opts.orders.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
        return Err(TransportError::InvalidInput("moment orders must be positive".into()));
    }
    let h = BoxHamiltonian::new(model, half_width)?;
    let n = h.sites();
    let l = half_width;
    let weights: Vec<Vec<f64>> = opts
        .orders
        .iter()
        .map(|&p| (0..n).map(|i| (i as f64 - l as f64).abs().powf(p)).collect())
        .collect();
    let bw = boundary_width(l);

    let zero = Complex64::new(0.0, 0.0);
    let mut psi = vec![zero; n];
    psi[l] = Complex64::new(1.0, 0.0);
    let (mut cur, mut nxt, mut acc) = (vec![zero; n], vec![zero; n], vec![zero; n]);
    // psi vanishes outside the active window lo ..= hi
    let (mut lo, mut hi) = (l, l);
    let e0 = h.energy(&psi);
    let mut cache: HashMap<u64, StepCoeffs> = HashMap::new();
    let mut out = Evolution {
        half_width: l,
        orders: opts.orders.clone(),
        max_weight: h.max_weight(),
        snapshots: Vec::with_capacity(times.len()),
        states: opts.keep_states.then(Vec::new),
        leakage: 0.0,
        stopped_at: None,
        max_norm_dev: 0.0,
        max_energy_drift: 0.0,
        truncation_bound: 0.0,
        matvecs: 0,
    };
    let mut now = 0.0;
    for &t in times {
        let span = t - now;
        if span > 0.0 {
            let pieces = (span * h.radius / MAX_STEP_ARG).ceil().max(1.0) as usize;
            let dt = span / pieces as f64;
            let sc = cache.entry(dt.to_bits()).or_insert_with(|| step_coeffs(&h, dt)).clone();
            for _ in 0..pieces {
                // T_k(Hs) psi is supported within k sites of the support of psi
                let reach = sc.coeffs.len() - 1;
                let (wlo, whi) = (lo.saturating_sub(reach), (hi + reach).min(n - 1));
                for i in wlo..=whi {
                    cur[i] = psi[i];
                    nxt[i] = zero;
                    acc[i] = psi[i] * sc.coeffs[0];
                }
                if reach >= 1 {
                    h.first_pass(wlo, whi, &cur, &mut nxt, &mut acc, sc.coeffs[1]);
                    out.matvecs += 1;
                    // (cur, nxt) = (T_{k-1}, T_k) psi
                    for c in &sc.coeffs[2..] {
                        h.recurrence_pass(wlo, whi, &nxt, &mut cur, &mut acc, *c);
                        out.matvecs += 1;
                        std::mem::swap(&mut cur, &mut nxt);
                    }
                }
                for i in wlo..=whi {
                    psi[i] = acc[i] * sc.phase;
                }
                out.truncation_bound += sc.bound;
                // drop negligible tails, charging their norm to the error bound
                let (mut a, mut b) = (wlo, whi);
                let mut dropped = 0.0;
                while a < b && a < l && psi[a].norm_sqr() < TRIM_MASS {
                    dropped += psi[a].norm_sqr();
                    psi[a] = zero;
                    a += 1;
                }
                while b > a && b > l && psi[b].norm_sqr() < TRIM_MASS {
                    dropped += psi[b].norm_sqr();
                    psi[b] = zero;
                    b -= 1;
                }
                out.truncation_bound += dropped.sqrt();
                (lo, hi) = (a, b);
            }
            now = t;
        }
        let mass = |r: std::ops::Range<usize>| r.fold(0.0, |s, i| s + psi[i].norm_sqr());
        let norm_dev = (mass(lo..hi + 1).sqrt() - 1.0).abs();
        let boundary_mass = if bw == 0 { 0.0 } else { mass(lo..(hi + 1).min(bw)) + mass(lo.max(n - bw)..hi + 1) };
        out.leakage = out.leakage.max(boundary_mass);
        if boundary_mass > LEAKAGE_LIMIT {
            out.stopped_at = Some(t);
            if out.snapshots.iter().all(|s| s.t == 0.0) {
                return Err(TransportError::LeakageExceeded { t, mass: boundary_mass });
            }
            break;
        }
        let energy = h.energy_on(&psi, lo, hi);
        out.max_norm_dev = out.max_norm_dev.max(norm_dev);
        out.max_energy_drift = out.max_energy_drift.max((energy - e0).abs());
        let moments = weights.iter().map(|w| (lo..=hi).map(|i| w[i] * psi[i].norm_sqr()).sum()).collect();
        out.snapshots.push(Snapshot { t, norm_dev, energy, boundary_mass, moments });
        if let Some(states) = out.states.as_mut() {
            states.push(psi.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_small_values() {
        // J_0(1), J_1(1), J_5(10)
        let j = bessel_j_sequence(1.0, 3);
        assert!((j[0] - 0.7651976865579666).abs() < 1e-14);
        assert!((j[1] - 0.4400505857449335).abs() < 1e-14);
        let j = bessel_j_sequence(10.0, 5);
        assert!((j[5] - -0.2340615281867936).abs() < 1e-13);
    }

    #[test]
    fn truncation_order_covers_the_argument() {
        for x in [0.5, 3.0, 40.0, 200.0] {
            let (k, b) = truncation_order(x, STEP_TOL);
            assert!(k as f64 >= x && b <= STEP_TOL, "{x}: {k} {b}");
        }
    }

    #[test]
    fn initial_snapshot_is_the_delta() {
        let ev = evolve(&OperatorModel::free(), 5, &[0.0], &EvolveOptions { orders: vec![2.0], keep_states: true })
            .unwrap();
        let psi = &ev.states.unwrap()[0];
        assert_eq!(psi[5], Complex64::new(1.0, 0.0));
        assert!(psi.iter().enumerate().all(|(i, z)| i == 5 || *z == Complex64::new(0.0, 0.0)));
        assert_eq!(ev.snapshots[0].moments[0], 0.0);
    }

    #[test]
    fn small_box_leaks() {
        let err = evolve(&OperatorModel::free(), 10, &[0.0, 20.0], &EvolveOptions::default()).unwrap_err();
        assert!(matches!(err, TransportError::LeakageExceeded { .. }));
    }
}
