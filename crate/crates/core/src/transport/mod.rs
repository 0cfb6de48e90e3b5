//! Wavepacket spreading `e^{-itH} delta_0` on a finite box, Abel-averaged
//! moments `<|X|^p>(T)` and windowed transport exponents.
//!
//! The Abel integral is treated as an ordinary Lebesgue integral in `t`: the
//! moment profile is interpolated linearly between snapshots and integrated
//! against the exponential weight in closed form.

mod moments;
mod propagate;

pub use moments::{
    moments, transport_exponents, transport_exponents_with, MomentSeries, TransportExponents, WindowFit,
    ABEL_CUTOFF, MIN_FIT_DECADES, POINTS_PER_EFOLD, TAIL_REL_TOL,
};
pub use propagate::{bessel_j_sequence, evolve, BoxHamiltonian, EvolveOptions, Evolution, Snapshot, STEP_TOL};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{LatticeError, OperatorModel};

pub const MAX_SITES: usize = 100_000;
pub const LEAKAGE_LIMIT: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("boundary mass {mass:.3e} exceeds the leakage limit at t = {t}")]
    LeakageExceeded { t: f64, mass: f64 },
    #[error("snapshot grid too coarse for T = {big_t}: {reason}")]
    GridTooCoarse { big_t: f64, reason: String },
    #[error("usable T range spans {decades:.3} decades, need {required}")]
    RangeTooShort { decades: f64, required: f64 },
    #[error("box of {sites} sites exceeds the site budget")]
    BoxTooLarge { sites: usize },
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Box half-width `L >= 4 max(1, sup|c|) t_max`, clipped to a finite model's
/// domain.
pub fn auto_box(model: &OperatorModel, t_max: f64) -> usize {
    let speed = model.weight_sup_bound().max(1.0);
    let mut l = (4.0 * speed * t_max).ceil() as usize;
    if let Some(r) = model.domain() {
        let fit = (-*r.start()).min(*r.end()).max(0) as usize;
        l = l.min(fit);
    }
    l
}

/// Snapshot times from 0 to `tail * t_hi` with spacing
/// `max(t_lo, t / tail) / 16`, fine enough for every `T` in `[t_lo, t_hi]`.
pub fn abel_schedule(t_lo: f64, t_hi: f64, tail: f64) -> Vec<f64> {
    let end = tail * t_hi;
    let mut ts = vec![0.0];
    let mut t = 0.0;
    while t < end {
        let h = t_lo.max(t / tail) / (2.0 * POINTS_PER_EFOLD);
        t = (t + h).min(end);
        ts.push(t);
    }
    ts
}

/// Log-spaced grid with `per_decade` points per decade, both ends included.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let steps = ((hi / lo).log10() * per_decade as f64).round().max(1.0) as usize;
    (0..=steps).map(|k| lo * (hi / lo).powf(k as f64 / steps as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportConfig {
    pub p: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub per_decade: usize,
    /// `None`: [`auto_box`].
    pub box_half_width: Option<usize>,
    /// Snapshots run to `tail * t_hi`.
    pub tail: f64,
    pub min_decades: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig {
            p: 2.0,
            t_lo: 10.0,
            t_hi: 1000.0,
            per_decade: 20,
            box_half_width: None,
            tail: 10.0,
            min_decades: MIN_FIT_DECADES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportRun {
    pub config: TransportConfig,
    pub half_width: usize,
    pub snapshots: usize,
    pub matvecs: usize,
    pub max_norm_dev: f64,
    pub max_energy_drift: f64,
    pub truncation_bound: f64,
    pub series: MomentSeries,
    pub exponents: TransportExponents,
}

pub fn run_transport(model: &OperatorModel, cfg: &TransportConfig) -> Result<TransportRun, TransportError> {
    if !(cfg.t_lo > 0.0 && cfg.t_hi > cfg.t_lo && cfg.tail >= ABEL_CUTOFF && cfg.per_decade > 0) {
        return Err(TransportError::InvalidInput(format!(
            "need 0 < T_lo < T_hi, tail >= {ABEL_CUTOFF}, per_decade > 0"
        )));
    }
    let times = abel_schedule(cfg.t_lo, cfg.t_hi, cfg.tail);
    let t_max = *times.last().unwrap();
    let half_width = cfg.box_half_width.unwrap_or_else(|| auto_box(model, t_max));
    let ev = evolve(model, half_width, &times, &EvolveOptions { orders: vec![cfg.p], keep_states: false })?;
    let series = moments(&ev, cfg.p, &log_grid(cfg.t_lo, cfg.t_hi, cfg.per_decade))?;
    let exponents = transport_exponents_with(&series, cfg.min_decades)?;
    Ok(TransportRun {
        config: cfg.clone(),
        half_width,
        snapshots: ev.snapshots.len(),
        matvecs: ev.matvecs,
        max_norm_dev: ev.max_norm_dev,
        max_energy_drift: ev.max_energy_drift,
        truncation_bound: ev.truncation_bound,
        series,
        exponents,
    })
}
