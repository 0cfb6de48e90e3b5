use num_complex::Complex64 as C;
use proptest::prelude::*;
use qpjacobi::cocycle::*;
use qpjacobi::lattice::{EhmParams, OperatorModel};

fn zero_free(l1: f64, l3: f64, l2: f64, alpha: f64, theta: f64) -> OperatorModel {
    EhmParams::new(l1, l2, l3).unwrap().model(alpha, theta)
}

fn rel_diff(a: &ScaledMatrix2x2, b: &ScaledMatrix2x2) -> f64 {
    (a.ln_op_norm_diff(b) - a.ln_op_norm()).exp()
}

/// `A_{m+n-1} ... A_m` by plain multiplication, for short products.
fn naive_a(model: &OperatorModel, e: f64, n: i64, m: i64) -> [C; 4] {
    let mut p = [C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)];
    for j in m..m + n {
        let (w, v) = model.site(j);
        let wp = model.weight(j - 1);
        // A_j = (1 / w_j) [[E - v_j, -conj(w_{j-1})], [w_j, 0]]
        let s = [(e - v) / w, -wp.conj() / w, C::new(1.0, 0.0), C::new(0.0, 0.0)];
        p = [
            s[0] * p[0] + s[1] * p[2],
            s[0] * p[1] + s[1] * p[3],
            s[2] * p[0] + s[3] * p[2],
            s[2] * p[1] + s[3] * p[3],
        ];
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn short_products_match_plain_multiplication(
        l1 in 0.0f64..0.45, l3 in 0.0f64..0.45, l2 in 1.0f64..2.0, alpha in 0.1f64..0.9, theta in 0.0f64..1.0,
        e in -4.0f64..4.0, n in 1i64..25, m in -100i64..100,
    ) {
        let model = zero_free(l1, l3, l2, alpha, theta);
        let got = a_product(&model, e, n, m).unwrap().to_mat();
        let want = naive_a(&model, e, n, m);
        let scale = want.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..4 {
            prop_assert!((got.m[i] - want[i]).norm() <= 1e-11 * scale);
        }
    }

    #[test]
    fn splitting_a_product_is_associative(
        l1 in 0.0f64..0.45, l3 in 0.0f64..0.45, l2 in 1.0f64..2.0, alpha in 0.1f64..0.9, theta in 0.0f64..1.0,
        e in -4.0f64..4.0, n in 2i64..200_000, cut in 0.0f64..1.0, m in -1000i64..1000,
    ) {
        let model = zero_free(l1, l3, l2, alpha, theta);
        let k = ((n as f64 * cut) as i64).clamp(1, n - 1);
        let whole = a_product(&model, e, n, m).unwrap();
        let split = a_product(&model, e, n - k, m + k).unwrap().mul(&a_product(&model, e, k, m).unwrap());
        prop_assert!(rel_diff(&whole, &split) <= 1e-10, "relative difference {}", rel_diff(&whole, &split));
    }

    #[test]
    fn a_is_d_over_the_weight_product(
        l1 in 0.0f64..0.45, l3 in 0.0f64..0.45, l2 in 1.0f64..2.0, alpha in 0.1f64..0.9, theta in 0.0f64..1.0,
        e in -4.0f64..4.0, n in 1i64..5000, m in -500i64..500,
    ) {
        let model = zero_free(l1, l3, l2, alpha, theta);
        let a = a_product(&model, e, n, m).unwrap();
        let d = d_product(&model, e, n, m).unwrap();
        let ln_w: f64 = (m..m + n).map(|j| model.weight(j).norm().ln()).sum();
        prop_assert!((a.ln_op_norm() - (d.ln_op_norm() - ln_w)).abs() <= 1e-9 * (1.0 + a.ln_op_norm().abs()));
        prop_assert!((weight_product(&model, n, m).unwrap().log_mag - ln_w).abs() <= 1e-9 * (1.0 + ln_w.abs()));
    }

    #[test]
    fn short_regularized_products_have_unit_determinant_from_entries(
        l1 in 0.0f64..0.45, l3 in 0.0f64..0.45, l2 in 1.0f64..2.0, alpha in 0.1f64..0.9, theta in 0.0f64..1.0,
        e in -2.0f64..2.0, n in 1i64..12, m in -100i64..100,
    ) {
        let model = zero_free(l1, l3, l2, alpha, theta);
        let at = a_tilde_product(&model, e, n, m).unwrap();
        let size = at.ln_hs_norm().exp();
        prop_assert!((at.det_from_entries() - 1.0).norm() <= 1e-12 * size * size);
        prop_assert!(at.to_mat().is_real(1e-12 * size));
    }

    #[test]
    fn lyapunov_estimates_are_subadditive(
        l1 in 0.0f64..0.45, l3 in 0.0f64..0.45, l2 in 1.0f64..2.0, alpha in 0.1f64..0.9, e in -3.0f64..3.0, n in 1000i64..4000,
    ) {
        let model = zero_free(l1, l3, l2, alpha, 0.0);
        let phases = default_phases(8);
        let short = lyapunov_birkhoff(&model, e, n, &phases).unwrap();
        let long = lyapunov_birkhoff(&model, e, 2 * n, &phases).unwrap();
        prop_assert!(long.mean <= short.mean + 2.0 * (short.std_error + long.std_error + 2f64.ln() / n as f64));
    }
}

#[test]
fn free_laplacian_traces_are_chebyshev() {
    // Tr A(n) = 2 T_n(E / 2) for w = 1, v = 0
    let model = OperatorModel::free();
    for &e in &[-1.9, -0.3, 0.0, 0.7, 1.5] {
        let x: f64 = e / 2.0;
        for n in [1i64, 5, 17, 60] {
            let want = 2.0 * (n as f64 * x.acos()).cos();
            let got = a_product(&model, e, n, 0).unwrap().trace().value();
            assert!((got.re - want).abs() < 1e-10 && got.im.abs() < 1e-12, "E = {e}, n = {n}");
        }
    }
}

#[test]
fn supercritical_amo_grows_at_the_herman_rate() {
    // lambda = 2: L = ln 2 at every energy in the spectrum, and >= ln 2 off it
    let model = OperatorModel::almost_mathieu(2.0, (5f64.sqrt() - 1.0) / 2.0, 0.0);
    let est = lyapunov_birkhoff(&model, 3.0, 100_000, &default_phases(4)).unwrap();
    assert!(est.mean >= 2f64.ln() - 1e-3);
}

#[test]
fn zero_weights_are_refused_by_a_products() {
    // c vanishes at theta = 1/2 - alpha/2 for l1 = l3 = 1/2, l2 = 1
    let alpha = 0.3;
    let model = EhmParams::new(0.5, 1.0, 0.5).unwrap().model(alpha, 0.5 - alpha / 2.0);
    assert!(a_product(&model, 0.0, 5, 0).is_err());
    assert!(d_product(&model, 0.0, 5, 0).is_ok());
}

#[test]
fn associativity_holds_at_a_million_sites() {
    let model = zero_free(0.2, 0.1, 1.3, (5f64.sqrt() - 1.0) / 2.0, 0.37);
    let n = 1_000_000;
    for (e, k) in [(-2.5, 1), (0.4, 333_333), (3.1, 999_999)] {
        let whole = a_product(&model, e, n, -7).unwrap();
        let split = a_product(&model, e, n - k, k - 7).unwrap().mul(&a_product(&model, e, k, -7).unwrap());
        assert!(rel_diff(&whole, &split) <= 1e-10, "E = {e}: {}", rel_diff(&whole, &split));
    }
}
