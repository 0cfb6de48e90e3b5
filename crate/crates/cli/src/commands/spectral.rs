use num_complex::Complex64;
use rayon::prelude::*;

use qpjacobi::spectral::{
    gamma_scan, half_line_m, jl_sandwich_check, phi_grid, power_law_check, whole_line_m, GammaConfig, Side,
    MAX_SOLUTION_LEN,
};

use super::{bool_str, model_defaults, Ctx};
use crate::config::{ModelSpec, SpectralParams};
use crate::error::CliError;
use crate::output::{num, Artifact, Table};
use crate::inputs;

const COLUMNS: [&str; 8] = ["E", "eps", "gamma", "value_re", "value_im", "indicator", "verdict", "error"];

pub fn resolve(m: Option<ModelSpec>, p: Option<SpectralParams>) -> Result<(ModelSpec, SpectralParams), CliError> {
    let mut p = p.unwrap_or_default();
    let op = p.op.get_or_insert_with(|| "m".into()).clone();
    if !matches!(op.as_str(), "m" | "M" | "gamma-scan" | "jl" | "powerlaw") {
        return Err(CliError::config("spectral.op", format!("unknown op `{op}`")));
    }
    p.energies.get_or_insert_with(|| "0".into());
    p.eps_decades.get_or_insert_with(|| "1:4".into());
    p.eps_per_decade.get_or_insert(4);
    p.gamma_grid.get_or_insert_with(|| "0.2:1:5".into());
    p.phi.get_or_insert(0.0);
    p.side.get_or_insert_with(|| "right".into());
    p.n_phi.get_or_insert(8);
    p.max_len.get_or_insert(MAX_SOLUTION_LEN);
    Ok((model_defaults(m, "0"), p))
}

fn row(t: &mut Table, e: f64, eps: f64, gamma: Option<f64>, v: Option<Complex64>, ind: Option<f64>, verdict: &str, err: &str) {
    let o = |x: Option<f64>| x.map(num).unwrap_or_default();
    t.row(&[
        num(e),
        num(eps),
        o(gamma),
        o(v.map(|z| z.re)),
        o(v.map(|z| z.im)),
        o(ind),
        verdict.to_string(),
        err.to_string(),
    ]);
}

pub fn run(ctx: &mut Ctx, m: &ModelSpec, p: &SpectralParams) -> Result<Vec<Artifact>, CliError> {
    let (fam, phases) = ctx.model(m)?;
    let energies = ctx.energies("spectral.energies", p.energies.as_deref().unwrap(), &fam, phases[0])?;
    let eps = inputs::eps_grid("spectral.eps_decades", p.eps_decades.as_deref().unwrap(), p.eps_per_decade.unwrap())?;
    let model = fam.at(phases[0]);
    let op = p.op.as_deref().unwrap();
    let mut t = Table::new(&COLUMNS);
    let pairs: Vec<(f64, f64)> = energies.iter().flat_map(|&e| eps.iter().map(move |&x| (e, x))).collect();
    match op {
        "m" | "M" => {
            let side = match p.side.as_deref().unwrap() {
                "right" => Side::Right,
                "left" => Side::Left,
                other => return Err(CliError::config("spectral.side", format!("unknown side `{other}`"))),
            };
            let phi = p.phi.unwrap();
            let vals: Vec<_> = pairs
                .par_iter()
                .map(|&(e, x)| {
                    let z = Complex64::new(e, x);
                    if op == "m" {
                        half_line_m(&model, side, phi, z).map(|v| v.value)
                    } else {
                        whole_line_m(&model, z).map(|v| v.value)
                    }
                })
                .collect();
            for (&(e, x), v) in pairs.iter().zip(vals) {
                match v {
                    Ok(z) => row(&mut t, e, x, None, Some(z), None, "", ""),
                    Err(err) => row(&mut t, e, x, None, None, None, "", &err.to_string()),
                }
            }
        }
        "gamma-scan" => {
            let gammas = inputs::energies("spectral.gamma_grid", p.gamma_grid.as_deref().unwrap(), &model, &mut ctx.rng)?;
            let cfg = GammaConfig::default();
            // one scan per energy so that a failing energy only loses its own rows
            let scans: Vec<_> = energies.par_iter().map(|&e| gamma_scan(&model, &[e], &gammas, &eps, &cfg)).collect();
            for (&e, s) in energies.iter().zip(scans) {
                match s {
                    Ok(scan) => {
                        for r in &scan.rows {
                            for pt in &r.points {
                                row(&mut t, r.e, pt.eps, Some(r.gamma), Some(pt.m), Some(pt.indicator), r.verdict.as_str(), "");
                            }
                        }
                    }
                    Err(err) => row(&mut t, e, f64::NAN, None, None, None, "", &err.to_string()),
                }
            }
        }
        "jl" => {
            let phis = phi_grid(p.n_phi.unwrap());
            let reps: Vec<_> = pairs.par_iter().map(|&(e, x)| jl_sandwich_check(&model, e, x, &phis)).collect();
            let mut t = Table::new(&[&COLUMNS[..7], &["phi", "ell", "lower", "upper", "wronskian_ok", "error"]].concat());
            for (&(e, x), r) in pairs.iter().zip(reps) {
                match r {
                    Ok(rep) => {
                        for jr in &rep.rows {
                            t.row(&[
                                num(e),
                                num(x),
                                String::new(),
                                num(jr.m.re),
                                num(jr.m.im),
                                num(jr.ratio),
                                if jr.pass { "pass" } else { "fail" }.to_string(),
                                num(jr.phi),
                                num(jr.ell),
                                num(jr.lower),
                                num(jr.upper),
                                bool_str(jr.wronskian_ok).to_string(),
                                String::new(),
                            ]);
                        }
                    }
                    Err(err) => {
                        let mut f = vec![num(e), num(x)];
                        f.extend(std::iter::repeat(String::new()).take(10));
                        f.push(err.to_string());
                        t.row(&f);
                    }
                }
            }
            return Ok(vec![Artifact::csv("spectral-jl", t.finish())]);
        }
        _ => {
            let gammas = inputs::energies("spectral.gamma_grid", p.gamma_grid.as_deref().unwrap(), &model, &mut ctx.rng)?;
            let gamma = gammas[0];
            let reps: Vec<_> = energies
                .par_iter()
                .map(|&e| power_law_check(&model, e, gamma, &eps, p.n_phi.unwrap(), p.max_len.unwrap()))
                .collect();
            for (&e, r) in energies.iter().zip(reps) {
                match r {
                    Ok(rep) => {
                        for pr in &rep.rows {
                            let verdict = if pr.lower_ok && pr.upper_ok { "pass" } else { "fail" };
                            row(&mut t, e, pr.eta, Some(gamma), None, Some(pr.ln_v_norm_sq), verdict, pr.error.as_deref().unwrap_or(""));
                        }
                    }
                    Err(err) => row(&mut t, e, f64::NAN, Some(gamma), None, None, "", &err.to_string()),
                }
            }
        }
    }
    let name = if op == "M" { "spectral-whole-m".to_string() } else { format!("spectral-{op}") };
    Ok(vec![Artifact::csv(name, t.finish())])
}
