use serde_json::json;

use qpjacobi::fourier::{
    decompose_f, find_large_norm_interval, localization_density, sublevel_measure_bound, sum_norm_growth,
    TrigDecomposition,
};

use super::{default_q, model_defaults, Ctx};
use crate::config::{GrowthParams, ModelSpec};
use crate::error::CliError;
use crate::output::{num, opt_num, Artifact, Table};
use crate::inputs;

pub fn resolve(m: Option<ModelSpec>, p: Option<GrowthParams>) -> Result<(ModelSpec, GrowthParams), CliError> {
    let mut p = p.unwrap_or_default();
    let op = p.op.get_or_insert_with(|| "decompose".into()).clone();
    let m = model_defaults(m, "0");
    match op.as_str() {
        "decompose" | "interval" => {
            p.n.get_or_insert(100);
            p.energy.get_or_insert(0.0);
            p.dump_grid.get_or_insert(false);
            if op == "interval" {
                p.a.get_or_insert(1.0);
            }
        }
        "density" => {
            p.energy.get_or_insert(0.0);
            p.a.get_or_insert(1.0);
            p.windows.get_or_insert(20);
            if p.q.is_none() {
                p.q = default_q(&inputs::build_model(&m)?.freq, 100).map(|(q, _)| q);
            }
        }
        "sums" => {
            p.energy.get_or_insert(0.0);
            p.ell.get_or_insert(1000);
            p.gain.get_or_insert(1.0);
        }
        "sublevel" => {
            p.poly.get_or_insert_with(|| "-1,0,1".into());
            p.a.get_or_insert(0.5);
            p.b.get_or_insert(1.0);
        }
        other => return Err(CliError::config("growth.op", format!("unknown op `{other}`"))),
    }
    Ok((m, p))
}

fn summary(d: &TrigDecomposition) -> serde_json::Value {
    json!({
        "n": d.n,
        "e": d.e,
        "rho": d.rho,
        "c1": d.c1,
        "d": d.d,
        "degree_bound": d.degree_bound,
        "grid": d.grid,
        "r_structural": d.r_structural,
        "ln_max_r": d.ln_max_r,
        "max_abs_r": d.ln_max_r.exp(),
        "ln_r_bound": d.ln_r_bound,
        "r_bound_ok": d.r_bound_ok,
        "r_check": d.r_check,
        "parseval_rel": d.parseval_rel,
        "parseval_ok": d.parseval_ok,
        "fg_max_rel": d.fg_max_rel,
        "det_identity_max": d.det_identity_max,
        "decay_ok": d.decay_ok,
        "mean_ln_g_over_n": d.mean_ln_g_over_n,
    })
}

fn grid_csv(d: &TrigDecomposition) -> Artifact {
    let mut t = Table::new(&["theta", "ln_F", "ln_f", "ln_g", "ln_P", "R"]);
    for r in d.grid_rows() {
        t.row(&[num(r.theta), opt_num(r.ln_big_f), num(r.ln_f), num(r.ln_g), num(r.ln_p), num(r.r)]);
    }
    Artifact::csv("growth-grid", t.finish())
}

fn err_json(name: &str, e: impl ToString) -> Artifact {
    Artifact::json(name, &json!({"error": e.to_string()}))
}

pub fn run(ctx: &mut Ctx, m: &ModelSpec, p: &GrowthParams) -> Result<Vec<Artifact>, CliError> {
    let op = p.op.as_deref().unwrap();
    let name = format!("growth-{op}");
    if op == "sublevel" {
        let coeffs = inputs::parse_list("growth.poly", p.poly.as_deref().unwrap())?;
        return Ok(vec![match sublevel_measure_bound(&coeffs, p.a.unwrap(), p.b.unwrap()) {
            Ok(r) => Artifact::json(name, &r),
            Err(e) => err_json(&name, e),
        }]);
    }
    let (fam, phases) = ctx.model(m)?;
    let model = fam.at(phases[0]);
    let e = p.energy.unwrap();
    match op {
        "decompose" | "interval" => {
            let d = match decompose_f(&model, e, p.n.unwrap()) {
                Ok(d) => d,
                Err(err) => return Ok(vec![err_json(&name, err)]),
            };
            let mut out = vec![if op == "decompose" {
                Artifact::json(name, &summary(&d))
            } else {
                match find_large_norm_interval(&d, p.a.unwrap()) {
                    Ok(r) => Artifact::json(name, &json!({"decomposition": summary(&d), "interval": r})),
                    Err(err) => err_json(&name, err),
                }
            }];
            if p.dump_grid.unwrap() {
                out.push(grid_csv(&d));
            }
            Ok(out)
        }
        "density" => {
            let q = p.q.ok_or_else(|| CliError::config("growth.q", "no denominator available; give --q"))?;
            Ok(vec![match localization_density(&model, e, q, p.a.unwrap(), p.windows.unwrap()) {
                Ok(r) => Artifact::json(name, &r),
                Err(err) => err_json(&name, err),
            }])
        }
        _ => Ok(vec![match sum_norm_growth(&model, e, p.ell.unwrap(), p.gain.unwrap()) {
            Ok(r) => Artifact::json(name, &r),
            Err(err) => err_json(&name, err),
        }]),
    }
}
