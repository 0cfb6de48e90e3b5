use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::product::a_product;
use super::regularize::{a_tilde_product, trace_gap_ln};
use super::CocycleError;
use crate::lattice::OperatorModel;

/// Default threshold exponent: the margin is `2 e^{-kappa Lambda q}`.
pub const DEFAULT_KAPPA: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceLabel {
    /// `|Tr| > 2 + margin`.
    S1,
    /// `||Tr| - 2| <= margin`.
    S2,
    /// `|Tr| < 2 - margin`.
    EllipticStrict,
}

impl TraceLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceLabel::S1 => "S1",
            TraceLabel::S2 => "S2",
            TraceLabel::EllipticStrict => "elliptic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub e: f64,
    pub trace_abs: f64,
    pub ln_trace_abs: f64,
    /// `|Tr A(q)| - 2`.
    pub gap_to_2: f64,
    pub label: TraceLabel,
    pub trace_tilde_abs: f64,
    /// `| |Tr A~(q)| - |Tr A(q)| |`.
    pub tr_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceScan {
    pub q: i64,
    pub lambda: f64,
    pub kappa: f64,
    /// `2 e^{-kappa Lambda q}`.
    pub margin: f64,
    pub rows: Vec<TraceRow>,
    /// Fraction of grid points labelled S2.
    pub s2_fraction: f64,
    /// `e^{-Lambda q / 10}`, the reference scale for `s2_fraction`.
    pub s2_reference: f64,
}

pub fn classify_trace(trace_abs: f64, margin: f64) -> TraceLabel {
    let gap = trace_abs - 2.0;
    if gap.abs() <= margin {
        TraceLabel::S2
    } else if gap > 0.0 {
        TraceLabel::S1
    } else {
        TraceLabel::EllipticStrict
    }
}

/// Labels each energy by the trace of `A(q; E) = A(q, 1; E)`.
pub fn trace_classify(
    model: &OperatorModel,
    q: i64,
    energies: &[f64],
    lambda: f64,
    kappa: f64,
) -> Result<TraceScan, CocycleError> {
    if q < 1 {
        return Err(CocycleError::InvalidInput(format!("q = {q}")));
    }
    let margin = 2.0 * (-kappa * lambda * q as f64).exp();
    let rows = energies
        .par_iter()
        .map(|&e| {
            let a = a_product(model, e, q, 1)?;
            let at = a_tilde_product(model, e, q, 1)?;
            let trace_abs = a.trace_abs();
            Ok(TraceRow {
                e,
                trace_abs,
                ln_trace_abs: a.trace().log_mag,
                gap_to_2: trace_abs - 2.0,
                label: classify_trace(trace_abs, margin),
                trace_tilde_abs: at.trace_abs(),
                tr_gap: trace_gap_ln(&at, &a).exp(),
            })
        })
        .collect::<Result<Vec<_>, CocycleError>>()?;
    let s2 = rows.iter().filter(|r| r.label == TraceLabel::S2).count();
    let s2_fraction = if rows.is_empty() { 0.0 } else { s2 as f64 / rows.len() as f64 };
    Ok(TraceScan {
        q,
        lambda,
        kappa,
        margin,
        rows,
        s2_fraction,
        s2_reference: (-lambda * q as f64 / 10.0).exp(),
    })
}
