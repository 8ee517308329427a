use foliate_core::busemann::{
    busemann_toward, calibration_check, check_periodicity, integral_curves_with, rational_direction_field_with,
    BusemannError, ConstructionOptions, LeafOptions, RationalOptions, Target,
};
use foliate_core::causal::estimate_cone;
use foliate_core::lines::{find_periodic_line, LinesError};
use foliate_core::maxdist::{lorentz_distance, verify_eikonal, Resolution, Window};
use foliate_core::metric::{BoostFrame, MetricSpec};
use foliate_core::Vec2;

fn long_schedule() -> ConstructionOptions {
    ConstructionOptions {
        n_poles: 18,
        ..ConstructionOptions::default()
    }
}

#[test]
fn flat_periodic_line_is_the_straight_one() {
    let m = MetricSpec::flat();
    let line = find_periodic_line(&m, Vec2::new(0.2, 0.3), [1, 3], 1e-6).unwrap();
    assert!((line.period_length - 8f64.sqrt()).abs() < 1e-6);
    assert!(line.closure_defect < 1e-6);
    assert!((line.point_at(2.0 * line.period) - (line.base + 2.0 * line.deck_vector())).norm() < 1e-6);
}

#[test]
fn spacelike_and_imprimitive_decks_are_refused() {
    let m = MetricSpec::flat();
    let p = Vec2::new(0.0, 0.0);
    assert!(matches!(find_periodic_line(&m, p, [2, 1], 1e-6), Err(LinesError::OutsideCone(..))));
    assert!(matches!(find_periodic_line(&m, p, [0, 2], 1e-6), Err(LinesError::InvalidInput(_))));
}

#[test]
fn sheared_periodic_line_is_maximal() {
    let m = MetricSpec::sheared(0.2);
    let p = Vec2::new(0.5, 0.5);
    let line = find_periodic_line(&m, p, [0, 1], 1e-6).unwrap();
    // one period of a line maximizes between its endpoints
    let d = lorentz_distance(&m, p, p + Vec2::new(0.0, 1.0));
    assert!((d.value - line.period_length).abs() < 1e-5, "{} vs {}", d.value, line.period_length);
    let deck = lorentz_distance(&m, p, p + Vec2::new(0.0, 2.0));
    assert!((deck.value - 2.0 * line.period_length).abs() < 1e-4);
}

#[test]
fn flat_tilted_busemann_matches_closed_form() {
    let m = MetricSpec::flat();
    let alpha = Vec2::new(0.3, 1.0).normalize();
    let f = busemann_toward(
        &m,
        Vec2::new(0.5, 0.5),
        Target::Direction(alpha),
        Window::unit(),
        Resolution::square(9),
        1e-5,
        &long_schedule(),
    )
    .unwrap();
    assert!(f.converged);
    let v = alpha / (alpha.y * alpha.y - alpha.x * alpha.x).sqrt();
    let du = Vec2::new(v.x, -v.y);
    for (i, j, _) in f.nodes() {
        let k = f.index(i, j);
        if f.valid[k] {
            assert!((f.differential[k] - du).norm() < 1e-4, "{:?}", f.differential[k]);
        }
    }
    let e = verify_eikonal(&f, &m);
    assert!(e.max_residual < 1e-6 && e.future_timelike);
}

#[test]
fn flat_vertical_field_is_periodic_and_foliates() {
    let m = MetricSpec::flat();
    let window = Window::new(0.0, 2.0, 0.0, 2.0).unwrap();
    let f = busemann_toward(
        &m,
        Vec2::new(1.0, 1.0),
        Target::Deck([0, 1]),
        window,
        Resolution::square(9),
        1e-5,
        &long_schedule(),
    )
    .unwrap();
    let per = check_periodicity(&f).unwrap();
    assert!(per.node_aligned && per.pairs > 0);
    assert!(per.defect < 1e-4, "{}", per.defect);

    let seeds: Vec<Vec2> = (0..6).map(|i| Vec2::new(0.2 + 0.3 * i as f64, 0.1)).collect();
    let opts = LeafOptions {
        cone: Some(estimate_cone(&m, 100.0).unwrap()),
        ..LeafOptions::default()
    };
    let chart = integral_curves_with(&m, &f, &seeds, 1.5, &opts).unwrap();
    assert_eq!(chart.leaves.len(), 6);
    assert!(chart.min_separation > 0.25);
    assert!(chart.max_direction_error < 1e-3);
    for leaf in &chart.leaves {
        for q in &leaf.points {
            assert!((q.x - leaf.seed.x).abs() < 1e-4);
        }
    }
}

#[test]
fn sheared_field_calibrates_timelike_curves() {
    let m = MetricSpec::sheared(0.2);
    let p = Vec2::new(0.5, 0.5);
    let f = busemann_toward(
        &m,
        p,
        Target::Deck([0, 1]),
        Window::unit(),
        Resolution::square(17),
        1e-4,
        &ConstructionOptions::default(),
    )
    .unwrap();
    assert!(verify_eikonal(&f, &m).max_residual < 1e-3);

    let opts = LeafOptions {
        cone: Some(estimate_cone(&m, 100.0).unwrap()),
        ..LeafOptions::default()
    };
    let chart = integral_curves_with(&m, &f, &[Vec2::new(0.5, 0.1)], 0.8, &opts).unwrap();
    let leaf = &chart.leaves[0].points;
    let r = calibration_check(&m, &f, leaf).unwrap();
    assert!(r.residual < 1e-3, "{r:?}");

    // a bent future timelike polyline loses length against u
    let a = Vec2::new(0.3, 0.1);
    let mid = a + 0.3 * BoostFrame::at(&m, &a).velocity(0.5);
    let b = mid + 0.3 * BoostFrame::at(&m, &mid).velocity(-0.5);
    let curve: Vec<Vec2> = (0..=40)
        .map(|i| {
            let s = i as f64 / 40.0;
            if s <= 0.5 {
                a + (mid - a) * (2.0 * s)
            } else {
                mid + (b - mid) * (2.0 * s - 1.0)
            }
        })
        .collect();
    let r = calibration_check(&m, &f, &curve).unwrap();
    assert!(r.slack > 1e-3, "{r:?}");
}

#[test]
fn flat_rational_routes_agree() {
    let m = MetricSpec::flat();
    let r = rational_direction_field_with(
        &m,
        Vec2::new(0.5, 0.5),
        [0, 1],
        Window::unit(),
        Resolution::square(9),
        1e-4,
        &RationalOptions::default(),
    )
    .unwrap();
    assert_eq!(r.nearby.len(), 3);
    assert!(r.route_gap < 5e-3, "{}", r.route_gap);
}

#[test]
fn out_of_cone_direction_is_refused() {
    let m = MetricSpec::flat();
    let err = busemann_toward(
        &m,
        Vec2::new(0.5, 0.5),
        Target::Direction(Vec2::new(1.0, 0.2)),
        Window::unit(),
        Resolution::square(5),
        1e-4,
        &ConstructionOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, BusemannError::Lines(LinesError::OutsideCone(..))), "{err}");
}
