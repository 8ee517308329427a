use foliate_core::geodesic::integrate_geodesic;
use foliate_core::maxdist::{lorentz_distance, lorentz_distance_with, CausalStatus, DistanceOptions};
use foliate_core::metric::{classify_vector, lorentz_norm, BoostFrame, CausalCharacter, Metric, MetricSpec};
use foliate_core::Vec2;
use proptest::prelude::*;

fn families() -> [MetricSpec; 3] {
    [MetricSpec::flat(), MetricSpec::conformal(0.1), MetricSpec::sheared(0.2)]
}

fn point() -> impl Strategy<Value = Vec2> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| Vec2::new(x, y))
}

fn deck() -> impl Strategy<Value = Vec2> {
    (-3i32..=3, -3i32..=3).prop_map(|(a, b)| Vec2::new(a as f64, b as f64))
}

fn fast() -> DistanceOptions {
    DistanceOptions {
        sweep: 128,
        step: 2e-3,
        ..DistanceOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_is_deck_periodic(p in point(), k in deck()) {
        for m in families() {
            let (a, b) = (m.matrix(&p), m.matrix(&(p + k)));
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn signature_holds_everywhere(p in point()) {
        for m in families() {
            let g = m.matrix(&p);
            prop_assert!(g.determinant() < 0.0);
            prop_assert!(g[(1, 1)] < 0.0);
        }
    }

    #[test]
    fn boost_velocities_are_unit_future(p in point(), theta in -4.0..4.0f64) {
        for m in families() {
            let f = BoostFrame::at(&m, &p);
            let v = f.velocity(theta);
            prop_assert!((lorentz_norm(&m, &p, &v) + 1.0).abs() < 1e-9);
            prop_assert_eq!(classify_vector(&m, &p, &v), CausalCharacter::FutureTimelike);
            let back = f.rapidity(&m.matrix(&p), &v).unwrap();
            prop_assert!((back - theta).abs() < 1e-8);
        }
    }

    #[test]
    fn classification_respects_scaling_and_reversal(p in point(), v in point(), s in 0.01..100.0f64) {
        prop_assume!(v.norm() > 1e-3);
        for m in families() {
            let c = classify_vector(&m, &p, &v);
            prop_assert_eq!(classify_vector(&m, &p, &(v * s)), c);
            let r = classify_vector(&m, &p, &-v);
            let expected = match c {
                CausalCharacter::FutureTimelike => CausalCharacter::PastTimelike,
                CausalCharacter::PastTimelike => CausalCharacter::FutureTimelike,
                CausalCharacter::FutureNull => CausalCharacter::PastNull,
                CausalCharacter::PastNull => CausalCharacter::FutureNull,
                other => other,
            };
            prop_assert_eq!(r, expected);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn geodesics_are_reversible_and_deck_equivariant(p in point(), k in deck(), theta in -1.0..1.0f64) {
        for m in [MetricSpec::conformal(0.1), MetricSpec::sheared(0.2)] {
            let v = BoostFrame::at(&m, &p).velocity(theta);
            let g = integrate_geodesic(&m, p, v, 3.0, 5e-3).unwrap();
            prop_assert!(g.norm_drift < 1e-8);
            let back = integrate_geodesic(&m, g.end(), -g.end_velocity(), 3.0, 5e-3).unwrap();
            prop_assert!((back.end() - p).norm() < 1e-7);
            let shifted = integrate_geodesic(&m, p + k, v, 3.0, 5e-3).unwrap();
            prop_assert!((shifted.end() - (g.end() + k)).norm() < 1e-9);
        }
    }

    #[test]
    fn flat_distance_closed_form(x in point(), d in (-1.0..1.0f64, 0.1..3.0f64)) {
        let (lean, dy) = d;
        let y = x + Vec2::new(0.9 * lean * dy, dy);
        let r = lorentz_distance(&MetricSpec::flat(), x, y);
        let exact = (dy * dy - (0.9 * lean * dy).powi(2)).sqrt();
        prop_assert_eq!(r.status, CausalStatus::Timelike);
        prop_assert!((r.value - exact).abs() < 1e-6);
        // the past is never reached
        let rev = lorentz_distance(&MetricSpec::flat(), y, x);
        prop_assert_eq!(rev.status, CausalStatus::NotCausallyRelated);
        prop_assert_eq!(rev.value, 0.0);
    }

    #[test]
    fn flat_spacelike_pairs_are_unrelated(x in point(), d in (1.2..3.0f64, -1.0..1.0f64)) {
        let y = x + Vec2::new(d.0, d.1 * 0.8 * d.0);
        let r = lorentz_distance(&MetricSpec::flat(), x, y);
        prop_assert_eq!(r.status, CausalStatus::NotCausallyRelated);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn sheared_distance_is_deck_invariant(x in point(), k in deck(), lean in -0.3..0.3f64, dy in 0.5..1.5f64) {
        let m = MetricSpec::sheared(0.2);
        let y = x + Vec2::new(lean * dy, dy);
        let a = lorentz_distance_with(&m, x, y, &fast());
        let b = lorentz_distance_with(&m, x + k, y + k, &fast());
        prop_assert_eq!(a.status, b.status);
        prop_assert!((a.value - b.value).abs() < 1e-8);
    }

    #[test]
    fn sheared_reverse_triangle(x in point(), l1 in -0.3..0.3f64, l2 in -0.3..0.3f64, dy in 0.4..1.0f64) {
        let m = MetricSpec::sheared(0.2);
        let y = x + Vec2::new(l1 * dy, dy);
        let z = y + Vec2::new(l2 * dy, dy);
        let xy = lorentz_distance_with(&m, x, y, &fast());
        let yz = lorentz_distance_with(&m, y, z, &fast());
        let xz = lorentz_distance_with(&m, x, z, &fast());
        prop_assert_eq!(xz.status, CausalStatus::Timelike);
        prop_assert!(xz.value >= xy.value + yz.value - 1e-8);
    }
}
