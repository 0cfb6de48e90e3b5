pub mod bounds;
pub mod cocycle;
pub mod freq;
pub mod model;
pub mod spectral;
pub mod growth;
pub mod transport;

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use qpjacobi::numberkit::Frequency;

use crate::config::ModelSpec;
use crate::error::CliError;
use crate::output::num;
use crate::inputs::{self, ModelFamily};

/// Per-run state: the single seeded generator and the notes that end up in
/// every artifact header.
pub struct Ctx {
    pub rng: ChaCha8Rng,
    pub notes: Vec<String>,
}

impl Ctx {
    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Builds the model and draws its phases, logging the draw.
    pub fn model(&mut self, m: &ModelSpec) -> Result<(ModelFamily, Vec<f64>), CliError> {
        let fam = inputs::build_model(m)?;
        let theta = m.theta.as_deref().unwrap_or("0");
        let phases = inputs::phases("model.theta", theta, &mut self.rng)?;
        if theta.starts_with("random:") {
            let list: Vec<String> = phases.iter().map(|t| num(*t)).collect();
            self.note(format!("phases drawn: {}", list.join(",")));
        }
        Ok((fam, phases))
    }

    pub fn energies(&mut self, field: &str, s: &str, fam: &ModelFamily, theta: f64) -> Result<Vec<f64>, CliError> {
        let e = inputs::energies(field, s, &fam.at(theta), &mut self.rng)?;
        if s.starts_with("spectrum:") {
            let list: Vec<String> = e.iter().map(|x| num(*x)).collect();
            self.note(format!("energies drawn at theta = {}: {}", num(theta), list.join(",")));
        }
        Ok(e)
    }
}

/// Largest denominator `q <= cap` (above 1) that has a successor, with the successor.
pub fn default_q(freq: &Frequency, cap: u64) -> Option<(u64, u64)> {
    let qs = freq.denominators();
    qs.windows(2).filter(|w| w[0] > 1 && w[0] <= cap).last().map(|w| (w[0], w[1]))
}

/// `0.9 ln(q_{k+1}) / q_k` for `q = q_k`; `None` when `q` is not a denominator.
pub fn default_beta(freq: &Frequency, q: u64) -> Option<f64> {
    let qs = freq.denominators();
    let i = qs.iter().position(|&x| x == q)?;
    qs.get(i + 1).map(|&next| 0.9 * (next as f64).ln() / q as f64)
}

/// Unit-variant enums as their serialized names.
pub fn label<T: Serialize>(x: &T) -> String {
    match serde_json::to_value(x) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(v) => v.to_string(),
        Err(_) => String::new(),
    }
}

pub fn bool_str(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

/// Fills the model section, using `theta` when no phase was given.
pub fn model_defaults(m: Option<ModelSpec>, theta: &str) -> ModelSpec {
    let mut m = m.unwrap_or_default();
    m.theta.get_or_insert_with(|| theta.to_string());
    inputs::resolve_model(Some(m))
}
