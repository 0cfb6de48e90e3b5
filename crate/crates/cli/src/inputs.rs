//! Parsers for the small text specs used by flags and config values.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use qpjacobi::lattice::{
    parse_coefficient_file, stable_box_spectrum, EhmParams, OperatorModel, SamplingFunction,
};
use qpjacobi::numberkit::Frequency;

use crate::config::ModelSpec;
use crate::error::CliError;

/// Depth and precision used to expand the frequency of a model.
pub const FREQ_DEPTH: usize = 40;
pub const FREQ_BITS: u32 = 4096;
/// Half-width of the box whose spectrum feeds `spectrum:K`.
pub const SPECTRUM_HALF_WIDTH: i64 = 1000;
pub const SPECTRUM_TOL: f64 = 1e-6;

pub fn parse_f64(field: &str, s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| CliError::config(field, format!("`{s}` is not a finite number")))
}

pub fn parse_list(field: &str, s: &str) -> Result<Vec<f64>, CliError> {
    let v: Result<Vec<f64>, _> = s.split(',').filter(|t| !t.trim().is_empty()).map(|t| parse_f64(field, t)).collect();
    let v = v?;
    if v.is_empty() {
        return Err(CliError::config(field, "empty list"));
    }
    Ok(v)
}

/// `a:b` as a pair of numbers.
pub fn parse_range(field: &str, s: &str) -> Result<(f64, f64), CliError> {
    let (a, b) = s.split_once(':').ok_or_else(|| CliError::config(field, format!("expected `a:b`, got `{s}`")))?;
    Ok((parse_f64(field, a)?, parse_f64(field, b)?))
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    Ehm(EhmParams),
    Cosine(f64),
    Custom(SamplingFunction),
}

/// A model family at a fixed frequency; phases are supplied per use.
#[derive(Debug, Clone)]
pub struct ModelFamily {
    pub kind: ModelKind,
    pub freq: Frequency,
}

impl ModelFamily {
    pub fn alpha(&self) -> f64 {
        self.freq.value
    }

    pub fn at(&self, theta: f64) -> OperatorModel {
        let alpha = self.alpha();
        match &self.kind {
            ModelKind::Ehm(p) => p.model(alpha, theta),
            ModelKind::Cosine(l) => OperatorModel::almost_mathieu(*l, alpha, theta),
            ModelKind::Custom(c) => OperatorModel::quasiperiodic(
                c.clone(),
                SamplingFunction::Cosine { amplitude: 2.0, shift: 0.0 },
                alpha,
                theta,
            ),
        }
    }

    pub fn ehm(&self) -> Option<&EhmParams> {
        match &self.kind {
            ModelKind::Ehm(p) => Some(p),
            _ => None,
        }
    }

    /// Off-diagonal sampling function.
    pub fn c(&self) -> SamplingFunction {
        self.at(0.0).off_diagonal().cloned().expect("quasiperiodic")
    }
}

pub fn frequency(field: &str, spec: &str) -> Result<Frequency, CliError> {
    Frequency::parse(spec, FREQ_DEPTH, FREQ_BITS).map_err(|e| CliError::config(field, e.to_string()))
}

/// Fills model defaults: EHM `0,1,0` at the golden frequency, phase 0.
pub fn resolve_model(spec: Option<ModelSpec>) -> ModelSpec {
    let mut m = spec.unwrap_or_default();
    if m.ehm.is_none() && m.schrodinger_cos.is_none() && m.custom.is_none() {
        m.ehm = Some("0,1,0".into());
    }
    m.alpha.get_or_insert_with(|| "golden".into());
    m.theta.get_or_insert_with(|| "0".into());
    m
}

pub fn build_model(spec: &ModelSpec) -> Result<ModelFamily, CliError> {
    let chosen = [spec.ehm.is_some(), spec.schrodinger_cos.is_some(), spec.custom.is_some()];
    if chosen.iter().filter(|&&x| x).count() != 1 {
        return Err(CliError::config("model", "give exactly one of ehm, schrodinger_cos, custom"));
    }
    let kind = if let Some(text) = &spec.ehm {
        ModelKind::Ehm(EhmParams::parse(text).map_err(|e| CliError::config("model.ehm", e.to_string()))?)
    } else if let Some(l) = spec.schrodinger_cos {
        if !l.is_finite() {
            return Err(CliError::config("model.schrodinger_cos", "coupling must be finite"));
        }
        ModelKind::Cosine(l)
    } else {
        let path = spec.custom.as_ref().unwrap();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        let p = parse_coefficient_file(&text).map_err(|e| CliError::config("model.custom", e.to_string()))?;
        ModelKind::Custom(SamplingFunction::Trig(p))
    };
    let freq = frequency("model.alpha", spec.alpha.as_deref().unwrap_or("golden"))?;
    Ok(ModelFamily { kind, freq })
}

/// `value`, `random:K`, `grid:K` (`k/K`) or `list:a,b,..`.
pub fn phases(field: &str, spec: &str, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, CliError> {
    let count = |s: &str| -> Result<usize, CliError> {
        s.trim()
            .parse::<usize>()
            .ok()
            .filter(|&k| k > 0)
            .ok_or_else(|| CliError::config(field, format!("bad count `{s}`")))
    };
    if let Some(k) = spec.strip_prefix("random:") {
        Ok((0..count(k)?).map(|_| rng.gen::<f64>()).collect())
    } else if let Some(k) = spec.strip_prefix("grid:") {
        let k = count(k)?;
        Ok((0..k).map(|i| i as f64 / k as f64).collect())
    } else if let Some(l) = spec.strip_prefix("list:") {
        parse_list(field, l)
    } else {
        Ok(vec![parse_f64(field, spec)?])
    }
}

/// `value`, `a:b:K` (`K` evenly spaced points), `list:a,b,..`, or
/// `spectrum:K` (`K` distinct eigenvalues drawn from the stable spectrum
/// of a 2001-site box at the first phase).
pub fn energies(field: &str, spec: &str, model: &OperatorModel, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, CliError> {
    if let Some(k) = spec.strip_prefix("spectrum:") {
        let k: usize = k
            .trim()
            .parse()
            .ok()
            .filter(|&k| k > 0)
            .ok_or_else(|| CliError::config(field, format!("bad count `{k}`")))?;
        let spec = stable_box_spectrum(model, SPECTRUM_HALF_WIDTH, SPECTRUM_TOL)
            .map_err(|e| CliError::config(field, e.to_string()))?;
        let k = k.min(spec.len());
        let mut idx = sample(rng, spec.len(), k).into_vec();
        idx.sort_unstable();
        Ok(idx.into_iter().map(|i| spec[i]).collect())
    } else if let Some(l) = spec.strip_prefix("list:") {
        parse_list(field, l)
    } else if spec.matches(':').count() == 2 {
        let parts: Vec<&str> = spec.split(':').collect();
        let (a, b) = (parse_f64(field, parts[0])?, parse_f64(field, parts[1])?);
        let k: usize = parts[2]
            .trim()
            .parse()
            .ok()
            .filter(|&k| k > 0)
            .ok_or_else(|| CliError::config(field, format!("bad count `{}`", parts[2])))?;
        if k == 1 {
            return Ok(vec![a]);
        }
        Ok((0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect())
    } else {
        Ok(vec![parse_f64(field, spec)?])
    }
}

/// `eps = 10^{-x}` for `x` from `a` to `b`, `per` points per decade.
pub fn eps_grid(field: &str, spec: &str, per: usize) -> Result<Vec<f64>, CliError> {
    let (a, b) = parse_range(field, spec)?;
    if !(b > a) || per == 0 {
        return Err(CliError::config(field, "need a < b and a positive density"));
    }
    let steps = ((b - a) * per as f64).round().max(1.0) as usize;
    Ok((0..=steps).map(|k| 10f64.powf(-(a + (b - a) * k as f64 / steps as f64))).collect())
}
