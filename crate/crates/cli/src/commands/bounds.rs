use rayon::prelude::*;
use serde_json::{json, Value};

use qpjacobi::cocycle::measure_lambda;
use qpjacobi::periodicity::{
    check_beta_almost_periodic, check_lambda_beta_bound, lambda_certificate, sine_product_deviation,
    verify_lambda_bound_on_blocks, CertificateForm, PeriodicityParams, ProductZeroProfile, SequenceWindow,
};

use super::{default_beta, default_q, model_defaults, Ctx};
use crate::config::{BoundsParams, ModelSpec};
use crate::error::CliError;
use crate::output::{num, Artifact};
use crate::inputs;

/// Largest denominator scanned by `aj09` when no `q` is given.
pub const AJ09_Q_CAP: u64 = 10_946;

pub fn resolve(m: Option<ModelSpec>, p: Option<BoundsParams>) -> Result<(ModelSpec, BoundsParams), CliError> {
    let mut p = p.unwrap_or_default();
    let check = p.check.get_or_insert_with(|| "ap".into()).clone();
    let theta = if check == "aj09" { "random:100" } else { "0" };
    let m = model_defaults(m, theta);
    let freq = inputs::build_model(&m)?.freq;
    match check.as_str() {
        "ap" | "lb" | "certify" => {
            if p.q.is_none() {
                p.q = default_q(&freq, 100).map(|(q, _)| q);
            }
            if p.beta.is_none() {
                p.beta = p.q.and_then(|q| default_beta(&freq, q));
            }
            p.delta.get_or_insert(0.1);
            p.window_cap.get_or_insert(10_000);
            if check == "ap" {
                p.sequence.get_or_insert_with(|| "weights".into());
            }
        }
        "aj09" => {
            p.c_max.get_or_insert(20.0);
        }
        other => return Err(CliError::config("bounds.check", format!("unknown check `{other}`"))),
    }
    Ok((m, p))
}

fn need<T: Copy>(v: Option<T>, field: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::config(field, "no default available for this frequency; set it explicitly"))
}

fn failure(err: impl ToString) -> Value {
    json!({"pass": false, "worst_margin": null, "worst_index": null, "effective_window": null, "error": err.to_string()})
}

pub fn run(ctx: &mut Ctx, m: &ModelSpec, p: &BoundsParams) -> Result<Vec<Artifact>, CliError> {
    let (fam, phases) = ctx.model(m)?;
    let check = p.check.as_deref().unwrap();
    let report = match check {
        "aj09" => aj09(&fam, &phases, p)?,
        _ => {
            let q = need(p.q, "bounds.q")?;
            let beta = need(p.beta, "bounds.beta")?;
            let delta = p.delta.unwrap();
            let model = fam.at(phases[0]);
            let lambda = match p.lambda {
                Some(l) => Some(l),
                None if check == "lb" => {
                    let w = p.window_cap.unwrap().min(1000) as i64;
                    match measure_lambda(&model, 0.0, q as i64, w) {
                        Ok(l) => {
                            ctx.note(format!("measured lambda: {}", num(l.lambda)));
                            Some(l.lambda)
                        }
                        Err(e) => return Ok(vec![Artifact::json("bounds-lb", &failure(e))]),
                    }
                }
                None => None,
            };
            let params = PeriodicityParams::new(beta, delta, lambda.unwrap_or(0.0), q, p.window_cap.unwrap());
            match check {
                "ap" => {
                    let weights = match p.sequence.as_deref().unwrap() {
                        "weights" => true,
                        "potential" => false,
                        other => return Err(CliError::config("bounds.sequence", format!("unknown sequence `{other}`"))),
                    };
                    let seq = SequenceWindow::for_params(&model, &params, weights);
                    match check_beta_almost_periodic(&seq, &params) {
                        Ok(r) => json!({
                            "pass": r.pass,
                            "worst_margin": r.worst_margin,
                            "worst_index": r.worst_m,
                            "effective_window": r.effective_window,
                        }),
                        Err(e) => failure(e),
                    }
                }
                "lb" => {
                    let seq = SequenceWindow::for_params(&model, &params, true);
                    match check_lambda_beta_bound(&seq, &params) {
                        Ok(r) => json!({
                            "pass": r.pass,
                            "worst_margin": r.min_log_product_per_q + params.lambda,
                            "worst_index": r.worst_m,
                            "effective_window": r.effective_window,
                            "lambda": params.lambda,
                            "min_log_product_per_q": r.min_log_product_per_q,
                            "partial_products": r.partial_products,
                            "single_site": r.single_site,
                            "ratio": r.ratio,
                        }),
                        Err(e) => failure(e),
                    }
                }
                _ => certify(&fam, phases[0], q, beta, delta, p.window_cap.unwrap()),
            }
        }
    };
    Ok(vec![Artifact::json(format!("bounds-{check}"), &report)])
}

fn certify(fam: &inputs::ModelFamily, theta: f64, q: u64, beta: f64, delta: f64, cap: u64) -> Value {
    let c = fam.c();
    let profile = match ProductZeroProfile::new(c.clone()) {
        Ok(p) => p,
        Err(e) => return failure(e),
    };
    let cert = match lambda_certificate(&profile, &fam.freq, beta, delta, CertificateForm::General) {
        Ok(c) => c,
        Err(e) => return failure(e),
    };
    match verify_lambda_bound_on_blocks(&profile, &c, theta, fam.alpha(), q, beta, delta, cert.lambda1, cap) {
        Ok(b) => json!({
            "pass": b.pass,
            "worst_margin": b.min_log_block - b.log_bound,
            "worst_index": b.worst_k,
            "effective_window": b.effective_blocks,
            "certificate": cert,
            "blocks": b,
        }),
        Err(e) => json!({
            "pass": false,
            "worst_margin": null,
            "worst_index": null,
            "effective_window": null,
            "certificate": cert,
            "error": e.to_string(),
        }),
    }
}

fn aj09(fam: &inputs::ModelFamily, phases: &[f64], p: &BoundsParams) -> Result<Value, CliError> {
    let c_max = p.c_max.unwrap();
    let qs: Vec<u64> = match p.q {
        Some(q) => vec![q],
        None => fam.freq.denominators().into_iter().filter(|&q| q > 1 && q <= AJ09_Q_CAP).collect(),
    };
    let mut rows = Vec::new();
    let (mut pass, mut worst, mut worst_idx) = (true, f64::INFINITY, Value::Null);
    for &q in &qs {
        let res: Vec<_> = phases.par_iter().map(|&t| sine_product_deviation(t, &fam.freq, q)).collect();
        let mut max_c = f64::NEG_INFINITY;
        let mut errors = Vec::new();
        for (i, r) in res.iter().enumerate() {
            match r {
                Ok(d) => {
                    max_c = max_c.max(d.c_eff);
                    if c_max - d.c_eff < worst {
                        worst = c_max - d.c_eff;
                        worst_idx = json!({"q": q, "theta_index": i});
                    }
                }
                Err(e) => errors.push(json!({"theta_index": i, "error": e.to_string()})),
            }
        }
        let ok = errors.is_empty() && max_c <= c_max;
        pass &= ok;
        rows.push(json!({"q": q, "max_c_eff": max_c, "pass": ok, "errors": errors}));
    }
    Ok(json!({
        "pass": pass,
        "worst_margin": worst,
        "worst_index": worst_idx,
        "effective_window": qs.last(),
        "c_max": c_max,
        "phases": phases.len(),
        "rows": rows,
    }))
}
