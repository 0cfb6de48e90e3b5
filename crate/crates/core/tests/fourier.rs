use num_complex::Complex64;
use proptest::prelude::*;
use qpjacobi::cocycle::d_product;
use qpjacobi::fourier::*;
use qpjacobi::lattice::{EhmParams, TrigPoly};

fn golden() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

#[test]
fn decomposition_invariants() {
    let model = EhmParams::new(0.2, 0.3, 0.2).unwrap().model(golden(), 0.0);
    for (e, n) in [(0.0, 40), (0.5, 80), (-1.0, 120)] {
        let d = decompose_f(&model, e, n).unwrap();
        assert!(d.parseval_rel <= 1e-6, "Parseval {}", d.parseval_rel);
        assert!(d.r_bound_ok, "R tail");
        assert!(d.det_identity_max <= 1e-9, "det identity {}", d.det_identity_max);
        assert!(d.grid as u64 >= 8 * d.d * n as u64);
        // f_n(theta) = ||D(n; theta)||_HS^2 / e^{2 n b} on the grid
        for i in (0..d.grid).step_by(d.grid / 16) {
            let theta = d.theta(i);
            let m = d_product(&model.with_theta(theta), e, n as i64, 0).unwrap();
            let ln_hs2 = 2.0 * m.log_scale() + m.entries.m.iter().map(|z| z.norm_sqr()).sum::<f64>().ln();
            let want = ln_hs2 - 2.0 * n as f64 * d.b_rescale;
            assert!((d.ln_f[i] - want).abs() < 1e-9 * (1.0 + want.abs()), "theta = {theta}: {} vs {want}", d.ln_f[i]);
        }
    }
}

#[test]
fn interval_chain_holds_past_the_threshold() {
    let model = EhmParams::new(0.2, 0.3, 0.2).unwrap().model(golden(), 0.0);
    let d = decompose_f(&model, 0.2794243304434339, 100).unwrap();
    let iv = find_large_norm_interval(&d, 1.0).unwrap();
    assert!(iv.chain_ok);
    assert_eq!(iv.thresholds_ln, [100.0 / 8.0, 100.0 / 3.0, 50.0]);
    assert!(iv.measures[2] <= iv.measures[1] && iv.measures[1] <= iv.measures[0]);
    assert!((iv.length_floor - iv.c2 / (4.0 * iv.d as f64 * 100.0)).abs() < 1e-15);
}

#[test]
fn mahler_measure_of_a_linear_factor() {
    // int ln|a + b e^{2 pi i x}| = ln max(|a|, |b|)
    for (a, b) in [(2.0, 0.5), (0.3, 1.7), (1.0, 0.999)] {
        let p = TrigPoly::from_pairs(&[(0, Complex64::new(a, 0.0)), (1, Complex64::new(b, 0.0))]);
        assert!((mahler_log_mean(&p) - f64::max(a, b).ln()).abs() < 1e-9);
    }
}

#[test]
fn sublevel_closed_form_example() {
    let r = sublevel_measure_bound(&[-1.0, 0.0, 1.0], 0.0, 0.5).unwrap();
    assert!((r.preimage_len - 2.0 * (1.5f64.sqrt() - 1.0)).abs() < 1e-12);
    assert!((r.bound - 4.0 * 0.5f64.sqrt()).abs() < 1e-12);
    assert!(r.holds && !r.vacuous);
}

#[test]
fn sublevel_linear_input_is_vacuous() {
    let r = sublevel_measure_bound(&[0.0, 1.0], 0.0, 1.0).unwrap();
    assert!((r.preimage_len - 1.0).abs() < 1e-12);
    assert!(r.vacuous && r.zeta.is_none());
}

#[test]
fn sublevel_rejects_complex_roots() {
    assert!(sublevel_measure_bound(&[1.0, 0.0, 1.0], 0.0, 1.0).is_err());
}

proptest! {
    #[test]
    fn sublevel_bound_is_scale_invariant(
        r1 in -2.0f64..-0.5, r2 in -0.4f64..0.4, r3 in 0.5f64..2.0, a in 0.0f64..1.0, width in 0.01f64..2.0, k in 0.1f64..10.0,
    ) {
        // p = (x - r1)(x - r2)(x - r3)
        let p = [-r1 * r2 * r3, r1 * r2 + r1 * r3 + r2 * r3, -(r1 + r2 + r3), 1.0];
        let base = sublevel_measure_bound(&p, a, a + width).unwrap();
        let scaled = sublevel_measure_bound(&p.map(|c| k * c), k * a, k * (a + width)).unwrap();
        prop_assert!((base.preimage_len - scaled.preimage_len).abs() < 1e-9);
        prop_assert!((base.bound - scaled.bound).abs() < 1e-9 * (1.0 + base.bound));
    }

    #[test]
    fn sublevel_bound_holds_below_the_critical_values(
        r1 in -2.0f64..-0.5, r2 in -0.4f64..0.4, r3 in 0.5f64..2.0, r4 in 2.1f64..3.0, frac in 0.0f64..1.0, width in 0.01f64..2.0,
    ) {
        let mut p = vec![1.0];
        for r in [r1, r2, r3, r4] {
            let mut next = vec![0.0; p.len() + 1];
            for (i, c) in p.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= r * c;
            }
            p = next;
        }
        let zeta = sublevel_measure_bound(&p, 0.0, 1.0).unwrap().zeta.unwrap();
        let a = frac * zeta;
        let r = sublevel_measure_bound(&p, a, a + width).unwrap();
        prop_assert!(r.holds, "len {} > bound {}", r.preimage_len, r.bound);
    }
}
