use framecert_core::constructions::{canonical_pairs, BoundCert, CatalogOptions, CertifiedPair};
use framecert_core::measure::ApproxKind;
use framecert_core::verifier::{
    approx_identity_limit_check, estimate_bounds, exact_frame_bounds_atomic, frame_ratio, gen_test_family, norm_sq,
    verify_pair, FamilyKind, Verdict, VerifyOptions,
};
use framecert_core::{Accuracy, Atoms, Ifs, MeasureExpr, TestFunction, VerifyError};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `Σ_λ c_λ |Σ_j f_j w_j e^{−2πiλx_j}|² / Σ_j |f_j|² w_j`, evaluated directly.
fn brute_ratio(xs: &[(f64, f64)], nu: &[(f64, f64)], f: &[Complex64]) -> f64 {
    let top: f64 = nu
        .iter()
        .map(|(l, cl)| {
            let s: Complex64 = xs
                .iter()
                .zip(f)
                .map(|((x, w), fj)| fj * w * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * l * x))
                .sum();
            cl * s.norm_sqr()
        })
        .sum();
    let bottom: f64 = xs.iter().zip(f).map(|((_, w), fj)| fj.norm_sqr() * w).sum();
    top / bottom
}

#[test]
fn dirac_against_dirac_is_tight() {
    let d = MeasureExpr::dirac(0.0);
    let ex = exact_frame_bounds_atomic(&d, &d, 8).unwrap();
    assert!((ex.lower - 1.0).abs() < 1e-14 && (ex.upper - 1.0).abs() < 1e-14);
}

#[test]
fn two_points_against_dirac_are_bessel_only() {
    let mu = MeasureExpr::atoms_1d([(0.0, 0.5), (1.0, 0.5)]);
    let ex = exact_frame_bounds_atomic(&mu, &MeasureExpr::dirac(0.0), 8).unwrap();
    assert!(ex.lower.abs() < 1e-14 && (ex.upper - 1.0).abs() < 1e-14);
}

#[test]
fn exact_bounds_respect_cap() {
    let mu = MeasureExpr::atoms_1d((0..10).map(|i| (i as f64 / 10.0, 0.1)));
    assert!(matches!(
        exact_frame_bounds_atomic(&mu, &MeasureExpr::dirac(0.0), 4),
        Err(VerifyError::AtomCap { atoms: 10, cap: 4 })
    ));
}

#[test]
fn extreme_vectors_attain_extreme_ratios() {
    let xs = [(0.0, 0.25), (0.2, 0.5), (0.7, 0.25)];
    let nus = [(0.0, 1.0), (1.0, 2.0), (3.0, 0.5)];
    let mu = MeasureExpr::atoms_1d(xs);
    let nu = MeasureExpr::atoms_1d(nus);
    let ex = exact_frame_bounds_atomic(&mu, &nu, 8).unwrap();
    let opts = VerifyOptions::default();
    for (v, want) in [(&ex.lower_vec, ex.lower), (&ex.upper_vec, ex.upper)] {
        let r = frame_ratio(v, &mu, &nu, None, &opts).unwrap().ratio.unwrap();
        assert!((r - want).abs() < 1e-9 * want.max(1.0), "{r} vs {want}");
    }
}

#[test]
fn norm_of_step_on_interval() {
    let mu = MeasureExpr::lebesgue_interval(0.0, 1.0).unwrap();
    let f = TestFunction::step(vec![0.25], vec![c(2.0, 0.0), c(0.0, 1.0)]).unwrap();
    let (n, err) = norm_sq(&f, &mu, &Accuracy::default()).unwrap();
    assert!((n - (0.25 * 4.0 + 0.75)).abs() <= err + 1e-14);
}

#[test]
fn norm_of_exponential_on_cantor_is_one() {
    let mu = MeasureExpr::ifs(Ifs::uniform(4, vec![0, 2]));
    let (n, err) = norm_sq(&TestFunction::exponential(5), &mu, &Accuracy::default()).unwrap();
    assert!((n - 1.0).abs() <= err + 1e-14);
}

#[test]
fn zero_function_has_no_ratio() {
    let mu = MeasureExpr::dirac(0.0);
    let zero = TestFunction::trig(vec![(0, c(0.0, 0.0))]);
    assert!(matches!(frame_ratio(&zero, &mu, &mu, None, &VerifyOptions::default()), Err(VerifyError::ZeroNorm)));
}

#[test]
fn families_are_reproducible_and_start_with_constant() {
    let mu = MeasureExpr::lebesgue_interval(0.0, 1.0).unwrap();
    let acc = Accuracy::default();
    for kind in [FamilyKind::Trig, FamilyKind::Step] {
        let a = gen_test_family(&mu, kind, 12, 6, 99, &acc).unwrap();
        let b = gen_test_family(&mu, kind, 12, 6, 99, &acc).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 12);
        assert_eq!(a[0], TestFunction::constant());
        assert_ne!(a, gen_test_family(&mu, kind, 12, 6, 100, &acc).unwrap());
    }
    let atoms = MeasureExpr::atoms_1d([(0.0, 1.0), (0.5, 1.0)]);
    let pv = gen_test_family(&atoms, FamilyKind::PointValues, 5, 0, 1, &acc).unwrap();
    assert_eq!(pv.len(), 5);
    assert!(matches!(gen_test_family(&mu, FamilyKind::Trig, 0, 3, 1, &acc), Err(VerifyError::EmptyFamily)));
}

#[test]
fn trig_degrees_stay_below_maximum() {
    let mu = MeasureExpr::lebesgue_interval(0.0, 1.0).unwrap();
    let fam = gen_test_family(&mu, FamilyKind::Trig, 50, 4, 3, &Accuracy::default()).unwrap();
    assert!(fam.iter().all(|f| f.degree().unwrap() <= 4));
}

#[test]
fn plancherel_pair_is_consistent() {
    let pair = &canonical_pairs(&CatalogOptions::default()).unwrap()[0];
    let rep = verify_pair(pair, FamilyKind::Step, 8, 4, 5, &VerifyOptions::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::Consistent);
    for r in &rep.ratios {
        let ratio = r.ratio.unwrap();
        assert!(ratio <= 1.0 + r.error && ratio >= 1.0 - r.error, "{r:?}");
    }
}

#[test]
fn wrong_upper_bound_is_flagged() {
    let mu = MeasureExpr::atoms_1d([(0.0, 0.5), (0.5, 0.5)]);
    let nu = MeasureExpr::atoms_1d([(0.0, 1.0), (1.0, 1.0)]);
    let ex = exact_frame_bounds_atomic(&mu, &nu, 8).unwrap();
    let fam = vec![ex.upper_vec.clone(), ex.lower_vec.clone()];
    let opts = VerifyOptions::default();
    let low_b = BoundCert::stated(0.0, ex.upper * 0.5).unwrap();
    let rep = estimate_bounds(&mu, &nu, &fam, Some(&low_b), None, &opts).unwrap();
    assert_eq!(rep.verdict, Verdict::UpperViolated);
    assert!(rep.verdict.is_violation());
}

#[test]
fn wrong_lower_bound_is_flagged() {
    let mu = MeasureExpr::atoms_1d([(0.0, 0.5), (0.5, 0.5)]);
    let nu = MeasureExpr::atoms_1d([(0.0, 1.0), (1.0, 1.0)]);
    let ex = exact_frame_bounds_atomic(&mu, &nu, 8).unwrap();
    let fam = vec![ex.lower_vec.clone()];
    let cert = BoundCert::stated(ex.lower + 0.5, ex.upper + 1.0).unwrap();
    let rep = estimate_bounds(&mu, &nu, &fam, Some(&cert), None, &VerifyOptions::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::LowerViolated);
}

#[test]
fn missing_cert_is_inconclusive() {
    let mu = MeasureExpr::dirac(0.0);
    let fam = vec![TestFunction::constant()];
    let rep = estimate_bounds(&mu, &mu, &fam, None, None, &VerifyOptions::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::Inconclusive);
    assert_eq!(rep.emp_lower, rep.emp_upper);
}

#[test]
fn empty_family_reports_no_ratios() {
    let pair = &canonical_pairs(&CatalogOptions::default()).unwrap()[0];
    let rep = estimate_bounds(&pair.mu, &pair.nu, &[], Some(&pair.cert), None, &VerifyOptions::default()).unwrap();
    assert!(rep.ratios.is_empty());
    assert!(rep.emp_lower.is_none() && rep.emp_upper.is_none());
}

#[test]
fn lattice_pair_is_parseval() {
    let pair = &canonical_pairs(&CatalogOptions::default()).unwrap()[1];
    let rep = verify_pair(pair, FamilyKind::Trig, 10, 8, 11, &VerifyOptions::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::Consistent);
    for r in &rep.ratios {
        assert!((r.ratio.unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn limit_check_stays_consistent() {
    let pair = &canonical_pairs(&CatalogOptions::default()).unwrap()[1];
    let fam = gen_test_family(&pair.mu, FamilyKind::Trig, 6, 3, 2, &Accuracy::default()).unwrap();
    let rep = approx_identity_limit_check(pair, ApproxKind::Ii, &[1, 2, 4], &fam, &VerifyOptions::default()).unwrap();
    assert_eq!(rep.entries.len(), 3);
    assert!(rep.all_consistent && rep.drift_ok, "{rep:?}");
}

fn small_atoms() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-2.0..2.0f64, 0.05..2.0f64), 1..6)
}

fn coefficients(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b)), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ratios_lie_inside_exact_bounds(
        (xs, f) in small_atoms().prop_flat_map(|xs| { let n = xs.len(); (Just(xs), coefficients(n)) }),
        nus in prop::collection::vec((-4i32..4, 0.1..2.0f64), 1..6),
    ) {
        let nus: Vec<(f64, f64)> = nus.into_iter().map(|(l, w)| (l as f64, w)).collect();
        prop_assume!(f.iter().zip(&xs).map(|(fj, (_, w))| fj.norm_sqr() * w).sum::<f64>() > 1e-6);
        let mu = MeasureExpr::atomic(Atoms::line(xs.iter().copied()));
        let nu = MeasureExpr::atomic(Atoms::line(nus.iter().copied()));
        let ex = exact_frame_bounds_atomic(&mu, &nu, 16).unwrap();
        let direct = brute_ratio(&xs, &nus, &f);
        let tol = 1e-9 * ex.upper.max(1.0);
        prop_assert!(direct >= ex.lower - tol && direct <= ex.upper + tol);
        let fun = TestFunction::point_values(&Atoms::line(xs.iter().copied()), f).unwrap();
        let r = frame_ratio(&fun, &mu, &nu, None, &VerifyOptions::default()).unwrap();
        prop_assert!((r.ratio.unwrap() - direct).abs() <= r.error + tol);
    }

    #[test]
    fn ratio_is_scale_invariant(
        terms in prop::collection::vec((-6i64..6, -1.0..1.0f64, -1.0..1.0f64), 1..5),
        re in 0.1..5.0f64,
        im in -5.0..5.0f64,
    ) {
        let f = TestFunction::trig(terms.into_iter().map(|(k, a, b)| (k, c(a, b))).collect());
        let pair: CertifiedPair = canonical_pairs(&CatalogOptions::default()).unwrap().swap_remove(1);
        let opts = VerifyOptions::default();
        let Ok(r1) = frame_ratio(&f, &pair.mu, &pair.nu, pair.truncation.as_ref(), &opts) else {
            return Ok(());
        };
        let r2 = frame_ratio(&f.scaled(c(re, im)), &pair.mu, &pair.nu, pair.truncation.as_ref(), &opts).unwrap();
        let (a, b) = (r1.ratio.unwrap(), r2.ratio.unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0), "{a} vs {b}");
    }

    #[test]
    fn measure_serde_round_trips(xs in small_atoms(), s in -3.0..3.0f64, alpha in 0.1..4.0f64) {
        let mu = MeasureExpr::atomic(Atoms::line(xs)).translate_1d(s).scale(alpha)
            .plus(MeasureExpr::ifs(Ifs::uniform(4, vec![0, 2])));
        let text = serde_json::to_string(&mu).unwrap();
        prop_assert_eq!(serde_json::from_str::<MeasureExpr>(&text).unwrap(), mu);
    }
}
