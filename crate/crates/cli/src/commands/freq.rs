use serde_json::{json, Value};

use qpjacobi::numberkit::{beta_estimate, Frequency};

use crate::config::FreqParams;
use crate::error::CliError;
use crate::output::{num, Artifact, Table};

pub fn resolve(p: Option<FreqParams>) -> FreqParams {
    let mut p = p.unwrap_or_default();
    p.alpha.get_or_insert_with(|| "golden".into());
    p.depth.get_or_insert(20);
    p.json.get_or_insert(false);
    p
}

/// Integers as JSON numbers when they fit, decimal strings otherwise.
fn big(s: String) -> Value {
    match s.parse::<u64>() {
        Ok(v) => Value::from(v),
        Err(_) => Value::String(s),
    }
}

pub fn run(p: &FreqParams) -> Result<Vec<Artifact>, CliError> {
    let depth = p.depth.unwrap();
    if depth == 0 {
        return Err(CliError::config("freq.depth", "depth must be positive"));
    }
    let bits = 256 + 4 * depth.min(1 << 20) as u32;
    let f = Frequency::parse(p.alpha.as_deref().unwrap(), depth, bits)
        .map_err(|e| CliError::config("freq.alpha", e.to_string()))?;
    let cf = &f.expansion;
    let beta = beta_estimate(cf);
    let levels: Vec<f64> = beta.as_ref().map(|b| b.levels.iter().map(|l| l.1).collect()).unwrap_or_default();

    if p.json.unwrap() {
        let mut rec = json!({
            "alpha": f.label,
            "value": f.value,
            "quotients": cf.quotients.iter().map(|a| big(a.to_string())).collect::<Vec<_>>(),
            "convergents": cf.convergents.iter().map(|(p, q)| json!([big(p.to_string()), big(q.to_string())])).collect::<Vec<_>>(),
            "beta_levels": levels,
        });
        match &beta {
            Ok(b) => rec["beta_verdict"] = json!(b.verdict_at_depth),
            Err(e) => rec["beta_error"] = json!(e.to_string()),
        }
        if !cf.extension.is_empty() {
            rec["log_levels"] = cf
                .extension
                .iter()
                .map(|l| json!({"ln_a": l.ln_a.to_f64(), "ln_q": l.ln_q.to_f64()}))
                .collect();
        }
        return Ok(vec![Artifact::json("freq", &rec)]);
    }

    let mut t = Table::new(&["n", "a_n", "p_n", "q_n", "beta_level"]);
    for (i, (a, (pn, qn))) in cf.quotients.iter().zip(&cf.convergents).enumerate() {
        let lvl = levels.get(i).map(|x| num(*x)).unwrap_or_default();
        t.row(&[(i + 1).to_string(), a.to_string(), pn.to_string(), qn.to_string(), lvl]);
    }
    let mut art = Artifact::csv("freq", t.finish());
    if let Ok(b) = &beta {
        art.header.push(format!("beta verdict at depth: {}", num(b.verdict_at_depth)));
    }
    Ok(vec![art])
}
