use qpjacobi::transport::{
    abel_schedule, auto_box, evolve, moments, transport_exponents_with, EvolveOptions, TransportConfig, TransportError,
};

use super::{model_defaults, Ctx};
use crate::config::{ModelSpec, TransportParams};
use crate::error::CliError;
use crate::output::{num, Artifact, Table};
use crate::inputs;

pub fn resolve(m: Option<ModelSpec>, p: Option<TransportParams>) -> (ModelSpec, TransportParams) {
    let d = TransportConfig::default();
    let mut p = p.unwrap_or_default();
    p.p.get_or_insert(d.p);
    p.t_decades.get_or_insert_with(|| "1:3".into());
    p.per_decade.get_or_insert(d.per_decade);
    p.box_size.get_or_insert_with(|| "auto".into());
    p.min_decades.get_or_insert(d.min_decades);
    (model_defaults(m, "0"), p)
}

pub fn run(ctx: &mut Ctx, m: &ModelSpec, p: &TransportParams) -> Result<Vec<Artifact>, CliError> {
    let (fam, phases) = ctx.model(m)?;
    let (a, b) = inputs::parse_range("transport.t_decades", p.t_decades.as_deref().unwrap())?;
    let box_half_width = match p.box_size.as_deref().unwrap() {
        "auto" => None,
        s => Some(
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::config("transport.box_size", format!("expected `auto` or an integer, got `{s}`")))?,
        ),
    };
    let cfg = TransportConfig {
        p: p.p.unwrap(),
        t_lo: 10f64.powf(a),
        t_hi: 10f64.powf(b),
        per_decade: p.per_decade.unwrap(),
        box_half_width,
        min_decades: p.min_decades.unwrap(),
        ..TransportConfig::default()
    };
    let mut t = Table::new(&[
        "T", "moment", "window_slope_min", "window_slope_max", "leakage", "quad_err", "tail_bound", "error",
    ]);
    let model = fam.at(phases[0]);
    let run = || -> Result<_, TransportError> {
        if !(cfg.t_lo > 0.0 && cfg.t_hi > cfg.t_lo && cfg.per_decade > 0) {
            return Err(TransportError::InvalidInput("need 0 < T_lo < T_hi and per_decade > 0".into()));
        }
        let times = abel_schedule(cfg.t_lo, cfg.t_hi, cfg.tail);
        let half_width = cfg.box_half_width.unwrap_or_else(|| auto_box(&model, *times.last().unwrap()));
        let ev = evolve(&model, half_width, &times, &EvolveOptions { orders: vec![cfg.p], keep_states: false })?;
        let grid = qpjacobi::transport::log_grid(cfg.t_lo, cfg.t_hi, cfg.per_decade);
        let series = moments(&ev, cfg.p, &grid)?;
        Ok((ev, series))
    };
    match run() {
        Ok((ev, s)) => {
            ctx.note(format!("box half-width: {}", ev.half_width));
            ctx.note(format!(
                "max norm deviation: {}, max energy drift: {}, truncation bound: {}",
                num(ev.max_norm_dev),
                num(ev.max_energy_drift),
                num(ev.truncation_bound)
            ));
            ctx.note(format!("abel tail within 1e-6 of every moment: {}", s.tail_ok));
            if s.truncated {
                ctx.note("boundary leakage stopped the run before the last requested T");
            }
            let windows = match transport_exponents_with(&s, cfg.min_decades) {
                Ok(ex) => {
                    ctx.note(format!("beta_minus: {}, beta_plus: {}", num(ex.beta_minus), num(ex.beta_plus)));
                    ex.windows
                }
                Err(e) => {
                    ctx.note(format!("exponent fit: {e}"));
                    vec![]
                }
            };
            for (i, &tt) in s.t_grid.iter().enumerate() {
                let slopes: Vec<f64> = windows.iter().filter(|w| w.t_lo <= tt && tt <= w.t_hi).map(|w| w.slope).collect();
                let (lo, hi) = if slopes.is_empty() {
                    (String::new(), String::new())
                } else {
                    (
                        num(slopes.iter().copied().fold(f64::INFINITY, f64::min)),
                        num(slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                    )
                };
                t.row(&[
                    num(tt),
                    num(s.values[i]),
                    lo,
                    hi,
                    num(s.leakage),
                    num(s.quad_err[i]),
                    num(s.tail_bound[i]),
                    String::new(),
                ]);
            }
        }
        Err(e) => {
            t.row(&["", "", "", "", "", "", "", &e.to_string()]);
        }
    }
    Ok(vec![Artifact::csv("transport", t.finish())])
}
