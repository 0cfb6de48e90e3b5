use rayon::prelude::*;

use qpjacobi::cocycle::{
    lyapunov_birkhoff, measure_lambda, regularity_bounds_check, trace_classify, DEFAULT_KAPPA,
};
use qpjacobi::lattice::ehm_lyapunov_formula;

use super::{bool_str, default_beta, default_q, label, model_defaults, Ctx};
use crate::config::{CocycleParams, ModelSpec};
use crate::error::CliError;
use crate::output::{num, opt_num, Artifact, Table};
use crate::inputs;

pub fn resolve(m: Option<ModelSpec>, p: Option<CocycleParams>) -> Result<(ModelSpec, CocycleParams), CliError> {
    let mut p = p.unwrap_or_default();
    let op = p.op.get_or_insert_with(|| "lyapunov".into()).clone();
    let m = match op.as_str() {
        "lyapunov" => {
            p.energies.get_or_insert_with(|| "spectrum:8".into());
            p.n.get_or_insert(100_000);
            model_defaults(m, "random:8")
        }
        "trace-scan" | "regularity" => {
            let m = model_defaults(m, "0");
            let freq = inputs::build_model(&m)?.freq;
            if p.q.is_none() {
                p.q = default_q(&freq, 100).map(|(q, _)| q as i64);
            }
            p.m_window.get_or_insert(if op == "regularity" { 10_000 } else { 1_000 });
            if op == "trace-scan" {
                p.energies.get_or_insert_with(|| "-3:3:61".into());
                p.kappa.get_or_insert(DEFAULT_KAPPA);
            } else {
                p.energies.get_or_insert_with(|| "0".into());
                if p.beta.is_none() {
                    p.beta = p.q.and_then(|q| default_beta(&freq, q as u64));
                }
            }
            m
        }
        other => return Err(CliError::config("cocycle.op", format!("unknown op `{other}`"))),
    };
    Ok((m, p))
}

pub fn run(ctx: &mut Ctx, m: &ModelSpec, p: &CocycleParams) -> Result<Vec<Artifact>, CliError> {
    let (fam, phases) = ctx.model(m)?;
    let energies = ctx.energies("cocycle.energies", p.energies.as_deref().unwrap(), &fam, phases[0])?;
    match p.op.as_deref().unwrap() {
        "lyapunov" => {
            let n = p.n.unwrap();
            let model = fam.at(0.0);
            let target = fam.ehm().and_then(|e| ehm_lyapunov_formula(e).ok());
            let rows: Vec<_> = energies.par_iter().map(|&e| lyapunov_birkhoff(&model, e, n, &phases)).collect();
            let mut t = Table::new(&["E", "n", "phases", "mean", "std_error", "formula", "abs_err", "error"]);
            for (e, r) in energies.iter().zip(rows) {
                match r {
                    Ok(est) => t.row(&[
                        num(*e),
                        n.to_string(),
                        est.thetas.len().to_string(),
                        num(est.mean),
                        num(est.std_error),
                        opt_num(target),
                        opt_num(target.map(|l| (est.mean - l).abs())),
                        String::new(),
                    ]),
                    Err(err) => t.row(&[num(*e), n.to_string(), phases.len().to_string(), "".into(), "".into(), opt_num(target), "".into(), err.to_string()]),
                }
            }
            Ok(vec![Artifact::csv("cocycle-lyapunov", t.finish())])
        }
        "trace-scan" => {
            let q = p.q.ok_or_else(|| CliError::config("cocycle.q", "no denominator available; give --q"))?;
            let model = fam.at(phases[0]);
            let lambda = match p.lambda {
                Some(l) => l,
                None => {
                    let l = measure_lambda(&model, energies[0], q, p.m_window.unwrap())
                        .map_err(|e| CliError::config("cocycle.lambda", format!("cannot measure: {e}")))?
                        .lambda;
                    ctx.note(format!("measured lambda: {}", num(l)));
                    l
                }
            };
            let kappa = p.kappa.unwrap();
            let rows: Vec<_> = energies
                .par_iter()
                .map(|&e| trace_classify(&model, q, &[e], lambda, kappa).map(|s| s.rows[0].clone()))
                .collect();
            let mut t = Table::new(&[
                "E", "trace_abs", "gap_to_2", "label", "trace_tilde_abs", "ln_trace_abs", "tr_gap", "error",
            ]);
            for (e, r) in energies.iter().zip(rows) {
                match r {
                    Ok(row) => t.row(&[
                        num(*e),
                        num(row.trace_abs),
                        num(row.gap_to_2),
                        label(&row.label),
                        num(row.trace_tilde_abs),
                        num(row.ln_trace_abs),
                        num(row.tr_gap),
                        String::new(),
                    ]),
                    Err(err) => {
                        let mut f = vec![num(*e)];
                        f.extend(std::iter::repeat(String::new()).take(6));
                        f.push(err.to_string());
                        t.row(&f)
                    }
                }
            }
            Ok(vec![Artifact::csv("cocycle-trace-scan", t.finish())])
        }
        _ => {
            let q = p.q.ok_or_else(|| CliError::config("cocycle.q", "no denominator available; give --q"))?;
            let beta = p.beta.ok_or_else(|| CliError::config("cocycle.beta", "q is not a denominator; give --beta"))?;
            let window = p.m_window.unwrap();
            let model = fam.at(phases[0]);
            let rows: Vec<_> = energies
                .par_iter()
                .map(|&e| {
                    let lambda = match p.lambda {
                        Some(l) => l,
                        None => measure_lambda(&model, e, q, window)?.lambda,
                    };
                    regularity_bounds_check(&model, e, q, window, beta, lambda)
                })
                .collect();
            let mut t = Table::new(&[
                "E", "lambda", "check", "observed", "bound", "ln_observed", "ln_bound", "argmax", "pass", "error",
            ]);
            for (e, r) in energies.iter().zip(rows) {
                match r {
                    Ok(rep) => {
                        for c in &rep.checks {
                            t.row(&[
                                num(*e),
                                num(rep.lambda),
                                c.name.clone(),
                                num(c.observed),
                                num(c.bound),
                                num(c.ln_observed),
                                num(c.ln_bound),
                                c.argmax.to_string(),
                                bool_str(c.pass).into(),
                                String::new(),
                            ]);
                        }
                    }
                    Err(err) => {
                        let mut f = vec![num(*e)];
                        f.extend(std::iter::repeat(String::new()).take(8));
                        f.push(err.to_string());
                        t.row(&f)
                    }
                }
            }
            Ok(vec![Artifact::csv("cocycle-regularity", t.finish())])
        }
    }
}
