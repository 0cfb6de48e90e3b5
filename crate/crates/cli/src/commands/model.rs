use qpjacobi::lattice::{ehm_classify, ehm_lyapunov_formula};

use super::{model_defaults, Ctx};
use crate::config::{ModelParams, ModelSpec};
use crate::error::CliError;
use crate::output::{num, Artifact, Table};

pub fn resolve(m: Option<ModelSpec>, p: Option<ModelParams>) -> (ModelSpec, ModelParams) {
    let mut p = p.unwrap_or_default();
    p.sites.get_or_insert_with(|| "-10:10".into());
    (model_defaults(m, "0"), p)
}

pub fn run(ctx: &mut Ctx, m: &ModelSpec, p: &ModelParams) -> Result<Vec<Artifact>, CliError> {
    let (fam, phases) = ctx.model(m)?;
    let sites = p.sites.as_deref().unwrap();
    let bad = || CliError::config("model_output.sites", format!("expected integers `a:b`, got `{sites}`"));
    let (a, b) = sites.split_once(':').ok_or_else(bad)?;
    let (a, b): (i64, i64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if b < a || b - a > 10_000_000 {
        return Err(bad());
    }
    if let Some(e) = fam.ehm() {
        match ehm_classify(e) {
            Ok(r) => ctx.note(format!("ehm region: {}", serde_json::to_string(&r).unwrap_or_default())),
            Err(err) => ctx.note(format!("ehm region: {err}")),
        }
        if let Ok(l) = ehm_lyapunov_formula(e) {
            ctx.note(format!("ehm lyapunov exponent on the spectrum: {}", num(l)));
        }
    }
    let mut t = Table::new(&["theta", "n", "w_re", "w_im", "w_abs", "v"]);
    for &theta in &phases {
        let model = fam.at(theta);
        for n in a..=b {
            let (w, v) = model.site(n);
            t.row(&[num(theta), n.to_string(), num(w.re), num(w.im), num(w.norm()), num(v)]);
        }
    }
    Ok(vec![Artifact::csv("model", t.finish())])
}
