use std::f64::consts::PI;

use proptest::prelude::*;
use qpjacobi::lattice::EhmParams;
use qpjacobi::numberkit::Frequency;
use qpjacobi::periodicity::*;

proptest! {
    #[test]
    fn sine_product_over_a_rational_orbit(q in 2u64..3000, p_frac in 0.0f64..1.0, theta in 0.0f64..1.0) {
        let p = 1 + ((q - 1) as f64 * p_frac) as u64 % (q - 1);
        prop_assume!(num_integer::gcd(p, q) == 1);
        let got = ln_sine_product_rational(theta, p, q).exp();
        let want = 2.0 * (PI * q as f64 * theta).sin().abs();
        prop_assert!((got - want).abs() < 1e-9);
    }

    #[test]
    fn deviation_matches_a_direct_sum(theta in 0.0f64..1.0, level in 2usize..14) {
        let g = Frequency::golden(30);
        let q = g.denominators()[level];
        let dev = sine_product_deviation(theta, &g, q).unwrap();
        let logs: Vec<f64> = (0..q).map(|j| (PI * (theta + j as f64 * g.value)).sin().abs().ln()).collect();
        let min = logs.iter().cloned().fold(f64::INFINITY, f64::min);
        let want = logs.iter().sum::<f64>() - min + (q - 1) as f64 * 2f64.ln();
        prop_assert!((dev.deviation - want).abs() < 1e-8 * (1.0 + want.abs()));
        prop_assert!((dev.c_eff - want.abs() / (q as f64).ln()).abs() < 1e-8);
    }
}

#[test]
fn non_denominators_are_refused() {
    let g = Frequency::golden(30);
    assert!(matches!(sine_product_deviation(0.1, &g, 10), Err(PeriodicityError::NotADenominator { q: 10 })));
}

#[test]
fn periodic_weights_are_almost_periodic_up_to_rounding() {
    // rational alpha = 1/5 makes w 5-periodic; in doubles the shifts differ only by rounding
    let model = EhmParams::new(0.3, 1.0, 0.2).unwrap().model(0.2, 0.1);
    for beta in [0.5, 2.0, 5.0] {
        let params = PeriodicityParams::new(beta, 0.5, 1.0, 5, 200);
        let seq = SequenceWindow::for_params(&model, &params, true);
        let rep = check_beta_almost_periodic(&seq, &params).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.worst_margin - beta * 5.0 < (1e-13f64).ln(), "{rep:?}");
    }
}

#[test]
fn product_bound_implies_the_induced_bounds() {
    let g = Frequency::golden(30);
    let model = EhmParams::new(0.1, 1.0, 0.1).unwrap().model(g.value, 0.0);
    for q in [13u64, 89, 233] {
        for lambda in [0.01, 0.1, 0.5, 1.0] {
            let params = PeriodicityParams::new(0.01, 0.5, lambda, q, 2000);
            let seq = SequenceWindow::for_params(&model, &params, true);
            let rep = check_lambda_beta_bound(&seq, &params).unwrap();
            if rep.pass {
                assert!(rep.partial_products.pass && rep.single_site.pass, "q = {q}, lambda = {lambda}");
            }
            // min over windows of the block product, recomputed
            let w = params.effective_window();
            let ln: Vec<f64> = (-w..=w + q as i64).map(|j| model.weight(j).norm().ln()).collect();
            let min = (0..=(2 * w) as usize).map(|i| ln[i..i + q as usize].iter().sum::<f64>()).fold(f64::INFINITY, f64::min);
            assert!((rep.min_log_product - min).abs() < 1e-9 * (1.0 + min.abs()), "q = {q}");
        }
    }
}

#[test]
fn certificate_lambda_decreases_to_the_log_mean() {
    let alpha = 0.3;
    let c = EhmParams::new(0.1, 1.0, 0.2).unwrap().off_diagonal(alpha);
    let profile = ProductZeroProfile::new(c.clone()).unwrap();
    let n = 1 << 14;
    let mean: f64 = (0..n).map(|i| c.eval((i as f64 + 0.5) / n as f64).norm().ln()).sum::<f64>() / n as f64;
    assert!((profile.mean_log - mean).abs() < 1e-10);
    let freq = Frequency::parse("rule:exp=1", 6, 1024).unwrap();
    let mut prev = f64::INFINITY;
    for delta in [0.8, 0.4, 0.2, 0.1, 0.01, 0.001] {
        let cert = lambda_certificate(&profile, &freq, 0.3, delta, CertificateForm::General).unwrap();
        assert!(cert.lambda < prev);
        assert!((cert.lambda - (-mean + 6.0 * delta * delta * 0.3)).abs() < 1e-10);
        prev = cert.lambda;
    }
    assert!((prev + mean).abs() < 1e-5);
}

#[test]
fn golden_has_no_positive_beta_certificate() {
    let profile = ProductZeroProfile::new(EhmParams::new(0.1, 1.0, 0.2).unwrap().off_diagonal(0.6)).unwrap();
    let r = lambda_certificate(&profile, &Frequency::golden(30), 0.1, 0.1, CertificateForm::General);
    assert!(matches!(r, Err(PeriodicityError::BetaOutOfRange { .. })));
}
