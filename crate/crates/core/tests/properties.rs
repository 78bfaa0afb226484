use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use chentype::chen::{
    condition_residuals, model_scalars, resolve_auto_radius, solve_type_coefficients, spectral_decomposition,
    ClassificationAtlas, TypeVerdict,
};
use chentype::embedding::{sigma, CanonicalTriple, HorizontalVector, SpaceFormPoint};
use chentype::hypersurface::{
    class_a_residual, scalar_invariants, shape_operator, curvature_deviation, Chart, Family, FamilySpec,
};
use chentype::laplace::{laplace_beltrami, position_field, FdConfig};
use chentype::quaternion::{projector, trace_metric, QMatrix};
use chentype::sampling::{horizontal_unit, quadric_point, rng, unit_quaternion};
use nalgebra::DVector;
use proptest::prelude::*;

fn sign() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(-1.0)]
}

/// A legal family member with `m ∈ {2, 3}`.
fn model() -> impl Strategy<Value = FamilySpec> {
    (0usize..5, 2usize..4, 0usize..3, 0.05f64..0.95).prop_map(|(f, m, k, t)| {
        let family = Family::ALL[f];
        let k = k.min(m - 1);
        let r = t * family.max_radius().min(2.5);
        FamilySpec::new(family, m, k, r).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projector_is_fiber_invariant_and_on_the_quadric(seed in 0u64..10_000, c in sign(), m in 2usize..5) {
        let mut r = rng(seed);
        let z = quadric_point(&mut r, m, c, 1.0);
        let p = projector(&z).unwrap();
        let q = unit_quaternion(&mut r);
        prop_assert!(projector(&z.left_mul(q)).unwrap().max_diff(&p) < 1e-12);
        let centered = p.axpy(-1.0 / (m + 1) as f64, &QMatrix::identity(m + 1, c));
        let want = c * m as f64 / (2.0 * (m + 1) as f64);
        prop_assert!((trace_metric(&centered, &centered).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn sigma_inner_products(seed in 0u64..10_000, c in sign()) {
        let mut r = rng(seed);
        let z = quadric_point(&mut r, 2, c, 1.0);
        let p = SpaceFormPoint::new(z.clone()).unwrap();
        let t = CanonicalTriple::standard();
        let v: Vec<_> = (0..4).map(|_| horizontal_unit(&mut r, &z)).collect();
        let h = |a: &chentype::QVector| HorizontalVector::new(z.clone(), a.clone()).unwrap();
        let s01 = sigma(&p, &h(&v[0]), &h(&v[1])).value;
        let s23 = sigma(&p, &h(&v[2]), &h(&v[3])).value;
        let mut want = 2.0 * v[0].dot(&v[1]) * v[2].dot(&v[3])
            + v[0].dot(&v[2]) * v[1].dot(&v[3])
            + v[0].dot(&v[3]) * v[1].dot(&v[2]);
        for q in 1..=3 {
            let (j0, j1) = (t.apply(q, &v[0]), t.apply(q, &v[1]));
            want += j0.dot(&v[2]) * j1.dot(&v[3]) + j0.dot(&v[3]) * j1.dot(&v[2]);
        }
        prop_assert!((trace_metric(&s01, &s23).unwrap() - c * want).abs() < 1e-8);
    }

    #[test]
    fn quaternionic_triple_relations(seed in 0u64..10_000, c in sign()) {
        let mut r = rng(seed);
        let z = quadric_point(&mut r, 3, c, 1.0);
        let x = horizontal_unit(&mut r, &z);
        let y = horizontal_unit(&mut r, &z);
        let t = CanonicalTriple::standard();
        for q in 1..=3 {
            prop_assert!((&t.apply(q, &t.apply(q, &x)) + &x).max_abs() < 1e-12);
            prop_assert!((t.apply(q, &x).dot(&y) + x.dot(&t.apply(q, &y))).abs() < 1e-12);
        }
        let next = |q: usize| q % 3 + 1;
        for q in 1..=3 {
            let lhs = t.apply(q, &t.apply(next(q), &x));
            let swapped = t.apply(next(q), &t.apply(q, &x));
            let third = t.apply(next(next(q)), &x);
            prop_assert!((&lhs - &third).max_abs() < 1e-12);
            prop_assert!((&swapped + &third).max_abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn model_frames_match_the_table(sp in model(), seed in 0u64..1000) {
        let chart = Chart::new(sp, seed);
        let frame = shape_operator(&chart, &vec![0.0; chart.n()]).unwrap();
        let dev = curvature_deviation(&frame, &sp);
        prop_assert!(dev.is_some_and(|d| d < 1e-6), "{sp}: {dev:?}");
        prop_assert!(frame.u_principal_residual() <= 1e-8);
        prop_assert!(frame.d_invariance_residual() <= 1e-8);
    }

    #[test]
    fn laplacian_is_linear(sp in model(), seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let chart = Chart::new(sp, seed);
        let u = vec![0.0; chart.n()];
        let cfg = FdConfig::default();
        let pos = position_field(&chart);
        let sq = |p: &[f64]| -> chentype::Result<DVector<f64>> { Ok(pos(p)?.map(|v| v * v)) };
        let comb = |p: &[f64]| -> chentype::Result<DVector<f64>> { Ok(pos(p)? * a + sq(p)? * b) };
        let lhs = laplace_beltrami(&comb, &chart, &u, &cfg).unwrap();
        let rhs = laplace_beltrami(&pos, &chart, &u, &cfg).unwrap() * a + laplace_beltrami(&sq, &chart, &u, &cfg).unwrap() * b;
        // Roundoff of the second difference at the finest step.
        let bound = 64.0 * f64::EPSILON * (a.abs() + b.abs() + 1.0) / (0.5 * cfg.h).powi(2) * 20.0;
        prop_assert!((&lhs - &rhs).amax() <= bound, "{}", (&lhs - &rhs).amax());
    }

    #[test]
    fn two_type_coefficients_satisfy_the_conditions(m in 2usize..6, t in 0.05f64..0.95, hyperbolic in any::<bool>(), far in any::<bool>()) {
        let family = if hyperbolic { Family::H1k } else { Family::P1k };
        let k = if far { m - 1 } else { 0 };
        let r = t * family.max_radius().min(2.5);
        let sp = FamilySpec::new(family, m, k, r).unwrap();
        let tc = solve_type_coefficients(&sp);
        prop_assume!(tc.verdict == TypeVerdict::TwoType);
        let (a, b) = (tc.a.unwrap(), tc.b.unwrap());
        prop_assert!(tc.discriminant().unwrap() > 0.0);
        let rep = condition_residuals(&model_scalars(&sp), a, b);
        let scale = a.abs().max(b.abs()).max(1.0);
        prop_assert!(rep.max_scalar_residual() <= 1e-9 * scale / 1e2, "{sp}: {rep:?}");
        let chart = Chart::new(sp, 0);
        let d = spectral_decomposition(&chart, &vec![0.0; chart.n()], &tc).unwrap();
        prop_assert!(d.reconstruction_residual() <= 1e-8);
    }

    #[test]
    fn class_b_partners_follow_the_pattern(m in 2usize..6, t in 0.05f64..0.95, hyperbolic in any::<bool>()) {
        let family = if hyperbolic { Family::H2 } else { Family::P2 };
        let sp = FamilySpec::new(family, m, 0, t * family.max_radius().min(2.5)).unwrap();
        let s = model_scalars(&sp);
        prop_assert!(!s.partners_undefined);
        let row = sp.model_curvatures();
        for (i, (tau, _)) in s.tau.iter().enumerate() {
            let other = if (tau - row.mu).abs() < 1e-12 { row.nu } else { row.mu };
            let got = s.partners[i].map(|p| p.unwrap());
            prop_assert!((got[0] - tau).abs() <= 1e-12 * tau.abs().max(1.0));
            prop_assert!((got[1] - other).abs() <= 1e-12 * other.abs().max(1.0));
            prop_assert!((got[2] - other).abs() <= 1e-12 * other.abs().max(1.0));
        }
    }

    #[test]
    fn hyperbolic_families_have_no_admissible_two_type_radii(m in 3usize..7, k in 1usize..5, r in 0.05f64..3.0) {
        let k = 1 + (k - 1) % (m - 2);
        prop_assert_eq!(solve_type_coefficients(&FamilySpec::new(Family::H1k, m, k, r).unwrap()).verdict, TypeVerdict::NotTwoType);
        prop_assert_eq!(solve_type_coefficients(&FamilySpec::new(Family::H2, m, 0, r).unwrap()).verdict, TypeVerdict::ThreeType);
        prop_assert!(resolve_auto_radius(Family::H1k, m, k, "two-type").unwrap().is_empty());
        prop_assert!(resolve_auto_radius(Family::H2, m, 0, "two-type").unwrap().is_empty());
    }

    #[test]
    fn atlas_radii_are_legal(f in 0usize..5, m in 2usize..5, k in 0usize..4) {
        let family = Family::ALL[f];
        let k = if family.has_k() { k.min(m - 1) } else { 0 };
        let atlas = ClassificationAtlas::for_cell(family, m, k, &[0.2, 1.0, 1.7, 9.0]).unwrap();
        for row in &atlas.rows {
            if family.has_radius() {
                prop_assert!(row.radius > 0.0 && row.radius < family.max_radius());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn class_a_models_satisfy_the_derivative_formula(m in 2usize..4, far in any::<bool>(), t in 0.15f64..0.85, hyperbolic in any::<bool>(), seed in 0u64..100) {
        let family = if hyperbolic { Family::H1k } else { Family::P1k };
        let k = if far { m - 1 } else { 0 };
        let sp = FamilySpec::new(family, m, k, t * family.max_radius().min(2.0)).unwrap();
        let chart = Chart::new(sp, seed);
        let res = class_a_residual(&chart, &vec![0.0; chart.n()], 1e-3).unwrap();
        prop_assert!(res <= 1e-5, "{sp}: {res:e}");
    }
}

#[test]
fn balanced_clifford_tori_are_minimal() {
    for k in 1..4 {
        let m = 2 * k + 1;
        let sp = FamilySpec::new(Family::P1k, m, k, FRAC_PI_4).unwrap();
        assert!(model_scalars(&sp).f.abs() < 1e-12);
        let chart = Chart::new(sp, 5);
        let f = scalar_invariants(&shape_operator(&chart, &vec![0.0; chart.n()]).unwrap()).f;
        assert!(f.abs() < 1e-9, "m={m}: {f:e}");
        assert_eq!(solve_type_coefficients(&sp).verdict, TypeVerdict::TwoType);
    }
}

#[test]
fn mirrored_tubes_share_their_coefficients() {
    for m in 2..5 {
        for r in [0.3, 0.9, 1.3] {
            let near = solve_type_coefficients(&FamilySpec::new(Family::P1k, m, 0, r).unwrap());
            let far = solve_type_coefficients(&FamilySpec::new(Family::P1k, m, m - 1, FRAC_PI_2 - r).unwrap());
            assert_eq!(near.verdict, far.verdict);
            for (x, y) in near.eigenvalues.iter().zip(&far.eigenvalues) {
                assert!((x - y).abs() < 1e-9 * x.abs().max(1.0));
            }
        }
    }
}
