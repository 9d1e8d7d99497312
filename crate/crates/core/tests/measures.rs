use framecert_core::measure::{
    approximate_identity, finite_mass, support_superset, total_mass, validate, ApproxKind, Domain, SupportSet,
};
use framecert_core::{Atoms, BoundedDensity, Ifs, IntervalUnion, MeasureExpr};

fn unit() -> MeasureExpr {
    MeasureExpr::lebesgue_interval(0.0, 1.0).unwrap()
}

#[test]
fn convolution_mass_is_product_of_masses() {
    let mu = unit().convolve(MeasureExpr::dirac(5.0).scale(2.0));
    assert!((finite_mass(&mu).unwrap() - 2.0).abs() < 1e-12);
    let hull = support_superset(&mu).hull().unwrap();
    assert!((hull.lo - 5.0).abs() < 1e-12 && (hull.hi - 6.0).abs() < 1e-12);
}

#[test]
fn lebesgue_on_line_has_infinite_mass() {
    let m = total_mass(&MeasureExpr::Lebesgue).unwrap();
    assert!(!m.is_finite());
    assert!(m.value().is_none());
}

#[test]
fn density_mass_matches_riemann_sum() {
    let set = IntervalUnion::interval(0.0, 1.0).unwrap();
    let phi = BoundedDensity::piecewise_constant(vec![0.3, 0.7], vec![2.0, 0.5, 2.0], Domain::Set(set)).unwrap();
    let mu = unit().density(phi.clone());
    let n = 100_000;
    let riemann: f64 = (0..n).map(|i| phi.eval((i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
    assert!((finite_mass(&mu).unwrap() - riemann).abs() < 1e-4);
    assert!((finite_mass(&mu).unwrap() - 1.4).abs() < 1e-9);
}

#[test]
fn ifs_measures_are_probabilities() {
    let mu = MeasureExpr::ifs(Ifs::uniform(4, vec![0, 2]));
    assert!((finite_mass(&mu).unwrap() - 1.0).abs() < 1e-12);
    let h = support_superset(&mu).hull().unwrap();
    assert!(h.lo.abs() < 1e-12 && (h.hi - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn normalize_scales_to_unit_mass() {
    let mu = MeasureExpr::atoms_1d([(0.0, 3.0), (1.0, 1.0)]).normalize();
    assert!((finite_mass(&mu).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn translate_moves_atoms() {
    let mu = MeasureExpr::atoms_1d([(0.0, 1.0), (1.0, 1.0)]).translate_1d(2.5);
    match support_superset(&mu) {
        SupportSet::Points { coords, .. } => assert_eq!(coords, vec![2.5, 3.5]),
        s => panic!("expected points, got {s:?}"),
    }
}

#[test]
fn two_dimensional_atoms_report_dimension() {
    let a = Atoms::new(2, vec![0.0, 0.0, 1.0, 1.0], vec![0.5, 0.5]).unwrap();
    assert_eq!(MeasureExpr::atomic(a).dim().unwrap(), 2);
}

#[test]
fn mixed_dimensions_are_rejected() {
    let a = Atoms::new(2, vec![0.0, 0.0], vec![1.0]).unwrap();
    let mu = MeasureExpr::atomic(a).plus(MeasureExpr::dirac(0.0));
    assert!(mu.dim().is_err());
    assert!(!validate(&mu).is_empty());
}

#[test]
fn approximate_identities_are_probability_measures() {
    for kind in [ApproxKind::I, ApproxKind::Ii, ApproxKind::Iii, ApproxKind::Iv { m: 3 }] {
        for n in 1..6 {
            let m = finite_mass(&approximate_identity(kind, n).unwrap()).unwrap();
            assert!((m - 1.0).abs() < 1e-12, "{kind:?} n={n}: {m}");
        }
    }
    assert!(approximate_identity(ApproxKind::I, 0).is_err());
    assert!(approximate_identity(ApproxKind::Iv { m: 1 }, 2).is_err());
}

#[test]
fn negative_weights_are_reported() {
    let mu = MeasureExpr::atomic(Atoms::new(1, vec![0.0], vec![-1.0]).unwrap());
    assert!(!validate(&mu).is_empty());
    assert!(validate(&MeasureExpr::dirac(0.0)).is_empty());
}

#[test]
fn measure_json_round_trip() {
    let set = IntervalUnion::new([(0.0, 0.25), (0.5, 0.75)]).unwrap();
    let mu = MeasureExpr::ifs(Ifs::uniform(4, vec![0, 2]))
        .convolve(MeasureExpr::lebesgue_on(set.clone()))
        .restrict(set)
        .scale(0.5)
        .plus(MeasureExpr::dirac(1.0))
        .translate_1d(-0.125)
        .normalize();
    let text = serde_json::to_string(&mu).unwrap();
    assert_eq!(serde_json::from_str::<MeasureExpr>(&text).unwrap(), mu);
    assert!(text.contains("\"node\":\"convolve\""));
}
