use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use qpjacobi::lattice::{EhmParams, OperatorModel};
use qpjacobi::spectral::*;

fn model(l1: f64, l2: f64, l3: f64, alpha: f64, theta: f64) -> OperatorModel {
    EhmParams::new(l1, l2, l3).unwrap().model(alpha, theta)
}

/// `((H - z)^{-1})_{00} + ((H - z)^{-1})_{11}` on sites `1 - n ..= n` by dense LU.
fn dense_borel(model: &OperatorModel, z: C, n: i64) -> C {
    let size = (2 * n) as usize;
    let mut h = DMatrix::<C>::zeros(size, size);
    for (i, j) in (1 - n..=n).enumerate() {
        let (w, v) = model.site(j);
        h[(i, i)] = C::new(v, 0.0) - z;
        if i + 1 < size {
            h[(i, i + 1)] = w;
            h[(i + 1, i)] = w.conj();
        }
    }
    let g = h.try_inverse().unwrap();
    let zero = (n - 1) as usize;
    g[(zero, zero)] + g[(zero + 1, zero + 1)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn box_borel_transform_matches_dense_resolvent(
        l1 in 0.0f64..1.0, l2 in 0.1f64..1.5, l3 in 0.0f64..1.0, alpha in 0.1f64..0.9, theta in 0.0f64..1.0,
        re in -3.0f64..3.0, im in 0.01f64..1.0, n in 1i64..60,
    ) {
        let m = model(l1, l2, l3, alpha, theta);
        let z = C::new(re, im);
        let got = box_borel_transform(&m, z, n as usize).unwrap();
        let want = dense_borel(&m, z, n);
        prop_assert!((got - want).norm() <= 1e-9 * want.norm().max(1.0));
    }

    #[test]
    fn m_functions_are_herglotz(
        l1 in 0.0f64..0.45, l2 in 1.0f64..1.5, l3 in 0.0f64..0.45, alpha in 0.1f64..0.9, theta in 0.0f64..1.0,
        re in -3.0f64..3.0, im in 0.05f64..1.0, phi in -1.5f64..1.5,
    ) {
        let m = model(l1, l2, l3, alpha, theta);
        let z = C::new(re, im);
        for side in [Side::Right, Side::Left] {
            prop_assert!(half_line_m(&m, side, phi, z).unwrap().value.im > 0.0);
        }
        let whole = whole_line_m(&m, z).unwrap();
        prop_assert!(whole.value.im > 0.0);
        // Borel bound for the two-state trace measure
        prop_assert!(whole.value.norm() <= 2.0 / im * (1.0 + 1e-12));
        prop_assert!(whole.dkl.pass);
        prop_assert!(whole.identity_pass);
    }

    #[test]
    fn solution_norms_respect_the_wronskian(
        l1 in 0.0f64..0.45, l2 in 1.0f64..1.5, l3 in 0.0f64..0.45, alpha in 0.1f64..0.9, theta in 0.0f64..1.0,
        e in -3.0f64..3.0, phi in -1.5f64..1.5, ell in 2.0f64..400.0,
    ) {
        let m = model(l1, l2, l3, alpha, theta);
        let sol = half_line_solution(&m, e, phi, Side::Right, 512).unwrap();
        let prod = sol.ell_norm(ell).unwrap() * sol.partner_ell_norm(ell).unwrap();
        prop_assert!(prod >= sol.wronskian_floor(ell) * (1.0 - 1e-12));
        prop_assert!(sol.residual < 1e-9);
    }
}

#[test]
fn free_wronskian_floor_is_the_unit_one() {
    let sol = half_line_solution(&OperatorModel::free(), 0.3, 0.4, Side::Right, 100).unwrap();
    for ell in [2.0, 10.5, 99.0] {
        assert_eq!(sol.wronskian_floor(ell), (f64::floor(ell) - 1.0) / 2.0);
        assert!(sol.ell_norm(ell).unwrap() * sol.partner_ell_norm(ell).unwrap() >= (f64::floor(ell) - 1.0) / 2.0);
    }
}

#[test]
fn free_half_line_m_is_the_semicircle_transform() {
    // m(z) = (-z + sqrt(z^2 - 4)) / 2 with the branch in the upper half-plane
    for &z in &[C::new(0.3, 0.5), C::new(-1.2, 0.1), C::new(2.5, 1.0)] {
        let s = (z * z - 4.0).sqrt();
        let mut want = (-z + s) / 2.0;
        if want.im <= 0.0 {
            want = (-z - s) / 2.0;
        }
        let got = half_line_m(&OperatorModel::free(), Side::Right, 0.0, z).unwrap().value;
        assert!((got - want).norm() < 1e-7, "z = {z}: {got} vs {want}");
    }
}

#[test]
fn jl_sandwich_holds_for_the_free_laplacian() {
    let rep = jl_sandwich_check(&OperatorModel::free(), 0.5, 1e-3, &phi_grid(8)).unwrap();
    assert!(rep.all_pass);
    for r in &rep.rows {
        let s = r.ratio * r.m.norm();
        assert!(s > JL_LOWER * (1.0 - JL_SLACK) && s < JL_UPPER * (1.0 + JL_SLACK));
    }
    assert!((JL_LOWER - (5.0 - 24f64.sqrt())).abs() < 1e-15 && (JL_UPPER - (5.0 + 24f64.sqrt())).abs() < 1e-15);
}
