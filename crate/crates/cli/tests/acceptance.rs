//! Acceptance suite. Runs every criterion in order, prints one line each and
//! exits nonzero when any fails. Runtime limits are measured per criterion,
//! so the criteria run sequentially rather than as parallel tests.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;
use std::time::Instant;

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qpjacobi::cocycle::{a_product, a_tilde_product, d_product, r_product, regularize_product};
use qpjacobi::fourier::{decompose_f, find_large_norm_interval, localization_density, sublevel_measure_bound};
use qpjacobi::lattice::{stable_box_spectrum, EhmParams, OperatorModel};
use qpjacobi::periodicity::ln_sine_product_rational;
use qpjacobi::spectral::jl_sandwich_check;
use qpjacobi::transport::{run_transport, TransportConfig};
use qpjacobi_cli::config::ExperimentConfig;
use qpjacobi_cli::{run_experiment, Artifact, RunOutput};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;
/// Energy in the spectrum of EHM (0.2, 0.3, 0.2) at the golden frequency.
const E_FOURIER: f64 = 0.279_424_330_443_433_9;

/// Criteria that fail for mathematical reasons rather than defects. They
/// still run and print FAIL; a pass here is reported as unexpected.
/// 14: for odd degree and a >= zeta(p), p = a has a single real root, so
/// diam z(p - a) = 0 and the bound is 0 while p^{-1}(a, b) has positive
/// length (for example x^3 - x with a = 1/2, b = 1).
const KNOWN_UNATTAINABLE: &[usize] = &[14];

/// Bodies of CLI runs made by earlier criteria, replayed by the determinism check.
static RUNS: Mutex<Vec<(String, String, Vec<String>)>> = Mutex::new(Vec::new());

fn cli(cmd: &str, toml: &str) -> Result<RunOutput, String> {
    let cfg = ExperimentConfig::parse(toml).map_err(|e| e.to_string())?;
    let out = run_experiment(&cfg, cmd).map_err(|e| e.to_string())?;
    let bodies = out.artifacts.iter().map(|a| a.body_text().to_string()).collect();
    RUNS.lock().unwrap().push((cmd.to_string(), toml.to_string(), bodies));
    Ok(out)
}

fn rows(a: &Artifact) -> Vec<HashMap<String, String>> {
    let mut rd = csv::Reader::from_reader(a.body_text().as_bytes());
    let head: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    rd.records()
        .map(|r| head.iter().cloned().zip(r.unwrap().iter().map(String::from)).collect())
        .collect()
}

fn json(a: &Artifact) -> serde_json::Value {
    serde_json::from_str(a.body_text()).unwrap()
}

fn f(row: &HashMap<String, String>, k: &str) -> f64 {
    row[k].parse().unwrap_or(f64::NAN)
}

fn zero_free_ehm(rng: &mut ChaCha8Rng) -> OperatorModel {
    // |c| >= l2 - l1 - l3 > 0.1
    let (l1, l3) = (rng.gen_range(0.0..0.45), rng.gen_range(0.0..0.45));
    let l2 = rng.gen_range(1.0..2.0);
    EhmParams::new(l1, l2, l3).unwrap().model(rng.gen_range(0.1..0.9), rng.gen())
}

fn c1_lyapunov() -> Outcome {
    let cases = [("0,0.5,0", 2f64.ln()), ("0.2,0.3,0.2", ((1.0 + 0.84f64.sqrt()) / 0.4).ln())];
    let mut worst = 0f64;
    let mut slowest = 0f64;
    for (couplings, target) in cases {
        let t = Instant::now();
        let out = cli(
            "cocycle",
            &format!(
                "seed = 1\n[model]\nehm = \"{couplings}\"\ntheta = \"random:8\"\n\
                 [cocycle]\nop = \"lyapunov\"\nenergies = \"spectrum:8\"\nn = 100000\n"
            ),
        )?;
        let secs = t.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
        let rs = rows(&out.artifacts[0]);
        ensure!(rs.len() == 8, "{couplings}: {} rows", rs.len());
        for r in &rs {
            ensure!(r["error"].is_empty() && r["phases"] == "8", "{couplings}: {r:?}");
            let err = (f(r, "mean") - target).abs();
            ensure!(err <= 2e-2, "{couplings} at E = {}: mean {} vs {target}", r["E"], r["mean"]);
            worst = worst.max(err);
        }
        ensure!(secs <= 60.0, "{couplings}: {secs:.1} s");
    }
    Ok(format!("max |L - formula| = {worst:.2e}, slowest {slowest:.1} s"))
}

/// `S_{m+n-1} ... S_m` for the regularized steps, by QR accumulation:
/// returns the product scaled by `e^{-log_scale}` and `det`.
fn regularized_by_qr(model: &OperatorModel, e: f64, n: i64, m: i64) -> ([f64; 4], f64, f64) {
    let mut q = [1.0, 0.0, 0.0, 1.0];
    let mut r = [1.0, 0.0, 0.0, 1.0];
    let (mut log_scale, mut ln_det, mut sign) = (0.0, 0.0, 1.0);
    let mut b_abs = model.weight(m - 1).norm();
    for j in m..m + n {
        let (w, v) = model.site(j);
        let a_abs = w.norm();
        let s = 1.0 / (a_abs * b_abs).sqrt();
        let step = [(e - v) * s, -b_abs * s, a_abs * s, 0.0];
        let bm = [
            step[0] * q[0] + step[1] * q[2],
            step[0] * q[1] + step[1] * q[3],
            step[2] * q[0] + step[3] * q[2],
            step[2] * q[1] + step[3] * q[3],
        ];
        let r11 = bm[0].hypot(bm[2]);
        let (q1x, q1y) = (bm[0] / r11, bm[2] / r11);
        let (q2x, q2y) = (-q1y, q1x);
        let r12 = q1x * bm[1] + q1y * bm[3];
        let r22 = q2x * bm[1] + q2y * bm[3];
        ln_det += r11.ln() + r22.abs().ln();
        sign *= r22.signum();
        q = [q1x, q2x, q1y, q2y];
        r = [r11 * r[0], r11 * r[1] + r12 * r[3], 0.0, r22 * r[3]];
        let mx = r.iter().fold(0f64, |acc, x| acc.max(x.abs()));
        r.iter_mut().for_each(|x| *x /= mx);
        log_scale += mx.ln();
        b_abs = a_abs;
    }
    let m = [
        q[0] * r[0],
        q[0] * r[1] + q[1] * r[3],
        q[2] * r[0],
        q[2] * r[1] + q[3] * r[3],
    ];
    (m, log_scale, sign * ln_det.exp())
}

fn c2_unit_determinant() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut det_err, mut oracle_err, mut prod_err) = (0f64, 0f64, 0f64);
    for _ in 0..100 {
        let model = zero_free_ehm(&mut rng);
        let e = rng.gen_range(-4.0..4.0);
        let m = rng.gen_range(-1000..=1000);
        let at = a_tilde_product(&model, e, 10_000, m).map_err(|e| e.to_string())?;
        let (om, oscale, odet) = regularized_by_qr(&model, e, 10_000, m);
        det_err = det_err.max((at.det_value() - 1.0).norm());
        oracle_err = oracle_err.max((odet - 1.0).abs());
        let k = (oscale - at.log_scale()).exp();
        let diff: f64 = (0..4).map(|i| (at.entries.m[i] - om[i] * k).norm_sqr()).sum::<f64>().sqrt();
        let norm: f64 = (0..4).map(|i| at.entries.m[i].norm_sqr()).sum::<f64>().sqrt();
        prod_err = prod_err.max(diff / norm);
    }
    ensure!(det_err <= 1e-10, "tracked det off by {det_err:.2e}");
    ensure!(oracle_err <= 1e-10, "QR det off by {oracle_err:.2e}");
    ensure!(prod_err <= 1e-8, "product differs from the QR oracle by {prod_err:.2e}");
    Ok(format!("|det - 1| <= {:.1e} (tracked), {oracle_err:.1e} (QR oracle); product agreement {prod_err:.1e}", det_err))
}

fn c3_conjugacy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 10_000;
    let (mut worst, mut worst_lib) = (0f64, 0f64);
    for _ in 0..50 {
        let model = zero_free_ehm(&mut rng);
        let e = rng.gen_range(-4.0..4.0);
        let m = rng.gen_range(-1000..=1000);
        let at = a_tilde_product(&model, e, n, m).map_err(|e| e.to_string())?;
        let a = a_product(&model, e, n, m).map_err(|e| e.to_string())?;
        let r = r_product(&model, n, m - 1).map_err(|e| e.to_string())?;
        // T_j = diag(1, t_j), t_j = w_j / |w_j|
        let unit = |w: C| w / w.norm();
        let (t_end, t_start) = (unit(model.weight(m + n - 1)), unit(model.weight(m - 1)));
        let k = r.phase * ((a.log2_scale - at.log2_scale) * std::f64::consts::LN_2 + r.log_mag).exp();
        let [a11, a12, a21, a22] = a.entries.m;
        let rhs = [a11, a12 * t_start, a21 * t_end.conj(), a22 * t_end.conj() * t_start].map(|z| z * k);
        let diff: f64 = (0..4).map(|i| (at.entries.m[i] - rhs[i]).norm_sqr()).sum::<f64>().sqrt();
        let norm: f64 = (0..4).map(|i| at.entries.m[i].norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(diff / norm);
        worst_lib = worst_lib.max(regularize_product(&model, e, n, m).map_err(|e| e.to_string())?.residual);
    }
    ensure!(worst <= 1e-8, "residual {worst:.2e}");
    Ok(format!("max relative residual {worst:.2e} (library estimate {worst_lib:.2e})"))
}

fn c4_regularity() -> Outcome {
    let out = cli(
        "cocycle",
        "[model]\nehm = \"0.1,1,0.1\"\nalpha = \"golden\"\ntheta = \"0\"\n\
         [cocycle]\nop = \"regularity\"\nenergies = \"list:0,0.5,-1.2\"\nq = 89\nm_window = 10000\n",
    )?;
    let beta = 0.9 * 144f64.ln() / 89.0;
    let used = out.resolved.cocycle.as_ref().unwrap().beta.unwrap();
    ensure!((used - beta).abs() < 1e-15, "beta {used} vs {beta}");
    let rs = rows(&out.artifacts[0]);
    ensure!(rs.len() == 15, "{} rows", rs.len());
    let mut tightest = f64::NEG_INFINITY;
    for r in &rs {
        ensure!(r["error"].is_empty() && r["pass"] == "true", "{r:?}");
        ensure!(f(r, "ln_observed") < f(r, "ln_bound"), "{r:?}");
        tightest = tightest.max(f(r, "ln_observed") - f(r, "ln_bound"));
    }
    Ok(format!("5 bounds x 3 energies hold, tightest ln(observed/bound) = {tightest:.1}"))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn c5_sine_product() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0f64;
    let mut k = 0;
    while k < 50 {
        let q: u64 = rng.gen_range(2..=10_000);
        let p: u64 = rng.gen_range(1..q);
        let theta: f64 = rng.gen();
        if gcd(p, q) != 1 {
            continue;
        }
        k += 1;
        let lhs = ln_sine_product_rational(theta, p, q).exp();
        let rhs = 2.0 * (PI * q as f64 * theta).sin().abs();
        worst = worst.max((lhs - rhs).abs());
    }
    ensure!(worst <= 1e-9, "max |difference| {worst:.2e}");
    Ok(format!("max |difference| {worst:.2e}"))
}

fn fibonacci_upto(cap: u64) -> Vec<u64> {
    let mut v = vec![1u64, 2];
    while v[v.len() - 1] + v[v.len() - 2] <= cap {
        v.push(v[v.len() - 1] + v[v.len() - 2]);
    }
    v
}

/// `|sum_{j != j0} ln|sin pi(theta + j alpha)| + (q - 1) ln 2| / ln q`.
fn c_eff(theta: f64, alpha: f64, q: u64) -> f64 {
    let logs: Vec<f64> = (0..q).map(|j| (PI * (theta + (j as f64 * alpha).fract())).sin().abs().ln()).collect();
    let min = logs.iter().cloned().fold(f64::INFINITY, f64::min);
    let dev = logs.iter().sum::<f64>() - min + (q as f64 - 1.0) * 2f64.ln();
    dev.abs() / (q as f64).ln()
}

fn c6_aj09() -> Outcome {
    let t = Instant::now();
    let out = cli("bounds", "seed = 6\n[model]\nalpha = \"golden\"\ntheta = \"random:100\"\n[bounds]\ncheck = \"aj09\"\n")?;
    let secs = t.elapsed().as_secs_f64();
    let rep = json(&out.artifacts[0]);
    let qs: Vec<u64> = rep["rows"].as_array().unwrap().iter().map(|r| r["q"].as_u64().unwrap()).collect();
    ensure!(qs == fibonacci_upto(10_946)[1..], "denominators {qs:?}");
    ensure!(rep["phases"] == 100, "{}", rep["phases"]);
    let max_c = rep["rows"].as_array().unwrap().iter().map(|r| r["max_c_eff"].as_f64().unwrap()).fold(0.0, f64::max);
    ensure!(rep["pass"] == true && max_c <= 20.0, "max C_eff {max_c}");
    // independent recomputation at the largest q
    let header = out.artifacts[0].header.iter().find(|l| l.starts_with("phases drawn:")).unwrap();
    let thetas: Vec<f64> = header["phases drawn:".len()..].trim().split(',').map(|s| s.parse().unwrap()).collect();
    let oracle = thetas.iter().map(|&th| c_eff(th, GOLDEN, 10_946)).fold(0.0, f64::max);
    let reported = rep["rows"].as_array().unwrap().last().unwrap()["max_c_eff"].as_f64().unwrap();
    ensure!((oracle - reported).abs() <= 1e-6 * oracle.max(1.0), "q = 10946: {reported} vs oracle {oracle}");
    ensure!(secs <= 120.0, "{secs:.1} s");
    Ok(format!("max C_eff = {max_c:.3} over {} denominators x 100 phases, {secs:.1} s", qs.len()))
}

fn c7_beta() -> Outcome {
    let out = cli("freq", "[freq]\nalpha = \"rule:exp=1\"\ndepth = 6\njson = true\n")?;
    let rep = json(&out.artifacts[0]);
    let quot = rep["quotients"].as_array().unwrap();
    // a_1 = 1, a_2 = ceil(e^1), a_3 = ceil(e^4)
    ensure!(quot[0] == 1 && quot[1] == 3 && quot[2] == 55, "quotients {quot:?}");
    let liouville = rep["beta_verdict"].as_f64().unwrap();
    ensure!((0.9..=1.1).contains(&liouville), "exp rule verdict {liouville}");
    let out = cli("freq", "[freq]\nalpha = \"golden\"\ndepth = 30\njson = true\n")?;
    let rep = json(&out.artifacts[0]);
    let conv = rep["convergents"].as_array().unwrap();
    let fib = fibonacci_upto(u64::MAX / 2);
    for (k, pq) in conv.iter().enumerate() {
        ensure!(pq[1] == fib[k], "q_{} = {} vs {}", k + 1, pq[1], fib[k]);
    }
    let golden = rep["beta_verdict"].as_f64().unwrap();
    ensure!(golden <= 0.1, "golden verdict {golden}");
    Ok(format!("exp rule verdict {liouville:.4} at depth 6, golden verdict {golden:.4} at depth 30"))
}

/// Barycentric interpolation through first-kind Chebyshev nodes on `[-r, r]`.
fn chebyshev_eval(values: &[C], r: f64, x: f64) -> C {
    let n = values.len();
    let (mut num, mut den) = (C::new(0.0, 0.0), 0.0);
    for (k, v) in values.iter().enumerate() {
        let ang = PI * (2 * k + 1) as f64 / (2 * n) as f64;
        let node = r * ang.cos();
        let w = if k % 2 == 0 { ang.sin() } else { -ang.sin() };
        if x == node {
            return *v;
        }
        num += v * (w / (x - node));
        den += w / (x - node);
    }
    num / den
}

fn c8_trace_polynomial() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let model = EhmParams::new(0.2, 0.3, 0.2).unwrap().model(GOLDEN, rng.gen());
    let radius = model.norm_bound();
    let trace = |e: f64, q: i64| d_product(&model, e, q, 0).map(|d| d.trace().value()).map_err(|e| e.to_string());
    // Relative to the sup norm on the interval: pointwise relative error is
    // limited to about eps * max|Tr| / |Tr(E)|, which passes 1e-8 at q = 34.
    let (mut worst, mut worst_pointwise) = (0f64, 0f64);
    for q in [5usize, 13, 34] {
        let nodes: Result<Vec<C>, String> = (0..=q)
            .map(|k| trace(radius * (PI * (2 * k + 1) as f64 / (2 * (q + 1)) as f64).cos(), q as i64))
            .collect();
        let nodes = nodes?;
        let fine: Result<Vec<f64>, String> =
            (0..=4000).map(|i| trace(-radius + 2.0 * radius * i as f64 / 4000.0, q as i64).map(|t| t.norm())).collect();
        let sup = fine?.into_iter().fold(0f64, f64::max);
        for _ in 0..50 {
            let e = rng.gen_range(-radius..radius);
            let exact = trace(e, q as i64)?;
            let err = (chebyshev_eval(&nodes, radius, e) - exact).norm();
            ensure!(err <= 1e-8 * sup, "q = {q}, E = {e}: error {:.2e} of max|Tr| = {sup:.2e}", err / sup);
            worst = worst.max(err / sup);
            worst_pointwise = worst_pointwise.max(err / exact.norm());
        }
    }
    Ok(format!("max error {worst:.2e} of max|Tr| over 150 off-node energies (pointwise relative {worst_pointwise:.1e})"))
}

fn c9_jl() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (lo, hi) = (5.0 - 24f64.sqrt(), 5.0 + 24f64.sqrt());
    let (mut min_s, mut max_s) = (f64::INFINITY, 0f64);
    for k in 0..20 {
        let p = EhmParams::new(rng.gen(), rng.gen(), rng.gen()).unwrap();
        let model = p.model(rng.gen_range(0.1..0.9), rng.gen());
        let e = rng.gen_range(-3.0..3.0);
        let eps = 10f64.powf(-rng.gen_range(1.0..4.0));
        let phi = rng.gen_range(0.0..PI);
        let rep = jl_sandwich_check(&model, e, eps, &[phi]).map_err(|e| format!("probe {k}: {e}"))?;
        let row = &rep.rows[0];
        // ratio = ||u||_l / ||v||_l; the sandwich is (5 - sqrt 24) <= |m| ratio <= (5 + sqrt 24)
        let s = row.ratio * row.m.norm();
        ensure!(s > lo * 0.95 && s < hi * 1.05, "probe {k}: |m| ||u||/||v|| = {s}");
        ensure!(row.pass, "probe {k}: library verdict fails");
        min_s = min_s.min(s);
        max_s = max_s.max(s);
    }
    Ok(format!("|m| ||u||/||v|| in [{min_s:.3}, {max_s:.3}] vs [{lo:.3}, {hi:.3}]"))
}

fn c10_free_transport() -> Outcome {
    let t = Instant::now();
    let cfg = TransportConfig { t_lo: 50.0, t_hi: 1000.0, min_decades: 20f64.log10(), ..TransportConfig::default() };
    let run = run_transport(&OperatorModel::free(), &cfg).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let ex = &run.exponents;
    ensure!((0.9..=1.05).contains(&ex.beta_minus) && (0.9..=1.05).contains(&ex.beta_plus), "beta = [{}, {}]", ex.beta_minus, ex.beta_plus);
    ensure!(run.max_norm_dev <= 1e-9, "norm deviation {:.2e}", run.max_norm_dev);
    ensure!(run.max_energy_drift <= 1e-8, "energy drift {:.2e}", run.max_energy_drift);
    // sum_n n^2 J_n(2t)^2 = 2 t^2, so the Abel average is exactly T^2
    let s = &run.series;
    for ((v, e), tt) in s.values.iter().zip(&s.quad_err).zip(&s.t_grid) {
        ensure!((v - tt * tt).abs() <= 2.0 * e + 1e-9 * tt * tt, "T = {tt}: {v} vs {}", tt * tt);
    }
    ensure!(secs <= 120.0, "{secs:.1} s");
    Ok(format!(
        "beta in [{:.4}, {:.4}], L = {}, norm dev {:.1e}, energy drift {:.1e}, {secs:.1} s",
        ex.beta_minus, ex.beta_plus, run.half_width, run.max_norm_dev, run.max_energy_drift
    ))
}

fn c11_quasilocalization() -> Outcome {
    let model = EhmParams::new(0.0, 1.0 / 3.0, 0.0).unwrap().model(GOLDEN, 0.0);
    let cfg = TransportConfig { t_lo: 10.0, t_hi: 1000.0, ..TransportConfig::default() };
    let run = run_transport(&model, &cfg).map_err(|e| e.to_string())?;
    let b = run.exponents.beta_plus;
    ensure!(b <= 0.4, "beta+ = {b}");
    Ok(format!("evidence only: beta+ = {b:.4}, beta- = {:.4}", run.exponents.beta_minus))
}

fn fourier_model() -> OperatorModel {
    EhmParams::new(0.2, 0.3, 0.2).unwrap().model(GOLDEN, 0.0)
}

fn c12_decomposition() -> Outcome {
    let model = fourier_model();
    let spec = stable_box_spectrum(&model, 1000, 1e-6).map_err(|e| e.to_string())?;
    let gap = spec.iter().map(|x| (x - E_FOURIER).abs()).fold(f64::INFINITY, f64::min);
    ensure!(gap < 1e-6, "E is {gap:.1e} from the box spectrum");
    let mut parts = vec![];
    for n in [100usize, 200] {
        let d = decompose_f(&model, E_FOURIER, n).map_err(|e| e.to_string())?;
        ensure!(d.r_structural || d.ln_max_r < 0.0, "n = {n}: ln max|R| = {}", d.ln_max_r);
        ensure!(d.parseval_rel <= 1e-6, "n = {n}: Parseval {:.2e}", d.parseval_rel);
        ensure!(d.grid as u64 >= 8 * d.d * n as u64, "n = {n}: grid {} < 8dn", d.grid);
        let iv = find_large_norm_interval(&d, 1.0).map_err(|e| e.to_string())?;
        ensure!(iv.chain_ok && iv.chain_violations == 0, "n = {n}: inclusion chain broken");
        let floor = iv.c2 / (4.0 * iv.d as f64 * n as f64);
        ensure!(iv.delta_points > 0 && iv.delta_len >= floor, "n = {n}: |Delta| = {} < {floor}", iv.delta_len);
        parts.push(format!("n = {n}: C1 = {:.2}, |Delta| = {:.3e} >= {floor:.3e}, Parseval {:.1e}", d.c1, iv.delta_len, d.parseval_rel));
    }
    Ok(parts.join("; "))
}

fn c13_density() -> Outcome {
    let model = fourier_model();
    let cert = localization_density(&model, E_FOURIER, 89, 1.0, 20).map_err(|e| e.to_string())?;
    ensure!(cert.rows.len() == 20, "{} windows found", cert.rows.len());
    let threshold = cert.c0 * 89.0 * 1.0;
    let mut margin = f64::INFINITY;
    for (m, r) in cert.rows.iter().enumerate() {
        let (lo, hi) = (2 * m as u64 * 89, (2 * m as u64 + 2) * 89);
        ensure!(r.j >= lo.max(1) && r.j < hi, "window {m}: j = {}", r.j);
        let a = a_product(&model, E_FOURIER, r.j as i64, 0).map_err(|e| e.to_string())?;
        let ln_hs = a.log_scale() + 0.5 * a.entries.m.iter().map(|z| z.norm_sqr()).sum::<f64>().ln();
        ensure!(ln_hs > threshold, "window {m}: ln ||A({})|| = {ln_hs} <= {threshold}", r.j);
        margin = margin.min(ln_hs - threshold);
    }
    Ok(format!("20 of 20 windows, threshold c0 q a = {threshold:.3e}, min margin {margin:.3}"))
}

fn eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let glo = g(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0) == glo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `|{x : a < p(x) < b}|` from a dense grid refined at the critical points,
/// with every level crossing bracketed and bisected.
fn preimage_oracle(p: &[f64], roots: &[f64], a: f64, b: f64) -> f64 {
    let dp: Vec<f64> = p.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
    let mut nodes: Vec<f64> = roots.windows(2).map(|w| bisect(|x| eval(&dp, x), w[0], w[1])).collect();
    let mut reach = 1.0;
    while eval(p, roots[0] - reach).abs() <= b || eval(p, roots[roots.len() - 1] + reach).abs() <= b {
        reach *= 2.0;
    }
    let (lo, hi) = (roots[0] - reach, roots[roots.len() - 1] + reach);
    nodes.extend((0..=200_000).map(|i| lo + (hi - lo) * i as f64 / 200_000.0));
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut cuts = vec![lo, hi];
    for w in nodes.windows(2) {
        for level in [a, b] {
            let g = |x: f64| eval(p, x) - level;
            if (g(w[0]) > 0.0) != (g(w[1]) > 0.0) {
                cuts.push(bisect(g, w[0], w[1]));
            }
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.windows(2)
        .filter(|w| {
            let y = eval(p, 0.5 * (w[0] + w[1]));
            a < y && y < b
        })
        .map(|w| w[1] - w[0])
        .sum()
}

fn c14_sublevel() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (mut worst, mut k) = (0f64, 0);
    let (mut violations, mut below_zeta, mut below_zeta_held) = (vec![], 0, 0);
    while k < 100 {
        let deg = 3 + k % 2;
        let mut roots: Vec<f64> = (0..deg).map(|_| rng.gen_range(-2.0..2.0)).collect();
        roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
        if roots.windows(2).any(|w| w[1] - w[0] < 0.05) {
            continue;
        }
        k += 1;
        let lead = rng.gen_range(0.5..2.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let mut p = vec![lead];
        for &r in &roots {
            // multiply by (x - r), ascending coefficients
            let mut next = vec![0.0; p.len() + 1];
            for (i, c) in p.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= r * c;
            }
            p = next;
        }
        let a = rng.gen_range(0.0..1.0);
        let b = a + rng.gen_range(0.01..2.0);
        let rep = sublevel_measure_bound(&p, a, b).map_err(|e| e.to_string())?;
        let oracle = preimage_oracle(&p, &roots, a, b);
        let err = (rep.preimage_len - oracle).abs();
        ensure!(err <= 1e-6, "case {k}: measure {} vs oracle {oracle}", rep.preimage_len);
        worst = worst.max(err);
        let holds = oracle <= rep.bound;
        ensure!(!rep.vacuous && holds == rep.holds, "case {k}: library verdict disagrees");
        if a < rep.zeta.unwrap() {
            below_zeta += 1;
            below_zeta_held += holds as usize;
        }
        if !holds {
            violations.push(format!("deg {deg}, a = {a:.3}, zeta = {:.3}, diam = {}, measure {oracle:.3}", rep.zeta.unwrap(), rep.diam));
        }
    }
    ensure!(
        violations.is_empty(),
        "{} of 100 violate the bound (measure agrees with the oracle to {worst:.1e}; {below_zeta_held} of {below_zeta} \
         cases with a < zeta hold); first: {}",
        violations.len(),
        violations[0]
    );
    Ok(format!("100 of 100 hold, max |measure - oracle| = {worst:.1e}"))
}

fn c15_determinism() -> Outcome {
    let runs = RUNS.lock().unwrap().clone();
    ensure!(!runs.is_empty(), "no recorded runs");
    for (cmd, toml, bodies) in &runs {
        // different worker count, same seed
        let cfg = ExperimentConfig::parse(&format!("threads = 1\n{toml}")).map_err(|e| e.to_string())?;
        let again = run_experiment(&cfg, cmd).map_err(|e| e.to_string())?;
        let again: Vec<&str> = again.artifacts.iter().map(|a| a.body_text()).collect();
        ensure!(&again == bodies, "{cmd} run differs on replay");
    }
    let t = "seed = 15\n[model]\nehm = \"0,0.5,0\"\n[transport]\nt_decades = \"1:2\"\nper_decade = 5\n";
    let a = run_experiment(&ExperimentConfig::parse(t).unwrap(), "transport").map_err(|e| e.to_string())?;
    let b = run_experiment(&ExperimentConfig::parse(t).unwrap(), "transport").map_err(|e| e.to_string())?;
    ensure!(a.artifacts == b.artifacts, "transport run differs on replay");
    Ok(format!("{} recorded runs and a transport run replay byte-identically", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 15] = [
        ("EHM Lyapunov exponent matches the closed form", c1_lyapunov),
        ("regularized cocycle has unit determinant", c2_unit_determinant),
        ("conjugacy identity between A and regularized A", c3_conjugacy),
        ("regularity bounds at q = 89", c4_regularity),
        ("rational sine-product identity", c5_sine_product),
        ("sine-product deviation constant <= 20", c6_aj09),
        ("Liouville exponent estimator", c7_beta),
        ("trace is a degree-q polynomial in E", c8_trace_polynomial),
        ("two-sided m-function sandwich", c9_jl),
        ("free Laplacian is ballistic", c10_free_transport),
        ("supercritical EHM transport is slow", c11_quasilocalization),
        ("Fourier decomposition and large-norm interval", c12_decomposition),
        ("large norms in every window", c13_density),
        ("sublevel measure bound", c14_sublevel),
        ("reruns are byte-identical", c15_determinism),
    ];
    let mut unexpected = 0;
    let mut passed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        let known = KNOWN_UNATTAINABLE.contains(&(i + 1));
        match outcome {
            Ok(detail) => {
                passed += 1;
                unexpected += known as usize;
                let flag = if known { " (listed as unattainable; update the list)" } else { "" };
                println!("criterion {:>2}: PASS  {title}: {detail}{flag} [{secs:.1} s]", i + 1);
            }
            Err(why) => {
                unexpected += !known as usize;
                let flag = if known { " (known: the inequality is false when p = a has one real root)" } else { "" };
                println!("criterion {:>2}: FAIL  {title}: {why}{flag} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {passed} of {} criteria pass, {unexpected} unexpected outcomes", criteria.len());
    if unexpected > 0 {
        std::process::exit(1);
    }
}
