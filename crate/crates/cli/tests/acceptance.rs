//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use framecert_core::constructions::{
    self as cons, canonical_pairs, mu4, BoundCert, CatalogOptions, CertifiedPair, FrameWeight, DEFAULT_CHAIN_CAP,
};
use framecert_core::measure::{approximate_identity, realize_atomic, ApproxKind, Domain};
use framecert_core::transform::{ifs_mask, ifs_transform};
use framecert_core::verifier::{
    approx_identity_limit_check, estimate_bounds, exact_frame_bounds_atomic, frame_ratio, gen_test_family,
    FamilyKind, FrameReport, Verdict, VerifyOptions,
};
use framecert_core::{Atoms, BoundedDensity, IntervalUnion, MeasureExpr, TestFunction};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn unit() -> MeasureExpr {
    MeasureExpr::lebesgue_interval(0.0, 1.0).unwrap()
}

fn lattice(cut: i64) -> MeasureExpr {
    MeasureExpr::atomic(Atoms::line((-cut..=cut).map(|n| (n as f64, 1.0))))
}

fn parseval_exactness() -> Outcome {
    let opts = VerifyOptions::default();
    let family = gen_test_family(&unit(), FamilyKind::Trig, 100, 32, 11, &opts.accuracy).unwrap();
    let rep = estimate_bounds(&unit(), &lattice(64), &family, None, None, &opts).unwrap();
    let worst = rep
        .ratios
        .iter()
        .map(|r| (r.ratio.unwrap() - 1.0).abs())
        .fold(0.0, f64::max);
    check(worst <= 1e-12, format!("100 trig tests, max |ratio - 1| = {worst:.2e}"))
}

fn plancherel_identity() -> Outcome {
    let opts = VerifyOptions {
        window: 2048.0,
        ..VerifyOptions::default()
    };
    let family = gen_test_family(&unit(), FamilyKind::Step, 20, 0, 12, &opts.accuracy).unwrap();
    let rep = estimate_bounds(&unit(), &MeasureExpr::Lebesgue, &family, None, None, &opts).unwrap();
    let mut worst = 0.0f64;
    let mut covered = true;
    for r in &rep.ratios {
        let x = r.ratio.unwrap();
        worst = worst.max((x - 1.0).abs());
        // the residual 1 - ratio must be covered by the certified tail
        covered &= r.tail.is_some() && (1.0 - x) <= r.error && x <= 1.0 + r.error;
    }
    check(
        worst <= 5e-3 && covered,
        format!("20 step tests over [-2048, 2048], max |ratio - 1| = {worst:.2e}, tails cover residual: {covered}"),
    )
}

fn random_atoms(rng: &mut ChaCha8Rng, sizes: std::ops::RangeInclusive<usize>, dim: usize, spread: f64, mass: (f64, f64)) -> Atoms {
    let n = rng.random_range(sizes);
    let coords = (0..n * dim).map(|_| rng.random_range(-spread..spread)).collect();
    let weights = (0..n).map(|_| rng.random_range(mass.0..mass.1)).collect();
    Atoms::new(dim, coords, weights).unwrap()
}

fn disc(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(rng.random::<f64>().sqrt(), std::f64::consts::TAU * rng.random::<f64>())
}

fn ratio_of(f: &TestFunction, mu: &MeasureExpr, nu: &MeasureExpr) -> f64 {
    frame_ratio(f, mu, nu, None, &VerifyOptions::default())
        .unwrap()
        .ratio
        .unwrap()
}

fn atomic_oracle_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut outside, mut missed) = (0usize, 0usize);
    for trial in 0..500 {
        let dim = if trial % 5 == 4 { 2 } else { 1 };
        let m = random_atoms(&mut rng, 1..=8, dim, 1.5, (0.1, 1.0));
        let n = random_atoms(&mut rng, 1..=8, dim, 3.0, (0.1, 2.0));
        let (mu, nu) = (MeasureExpr::atomic(m.clone()), MeasureExpr::atomic(n));
        let exact = exact_frame_bounds_atomic(&mu, &nu, 512).unwrap();
        for _ in 0..10 {
            let f = TestFunction::point_values(&m, (0..m.len()).map(|_| disc(&mut rng)).collect()).unwrap();
            let r = ratio_of(&f, &mu, &nu);
            if r < exact.lower - 1e-10 || r > exact.upper + 1e-10 {
                outside += 1;
            }
        }
        let lo = ratio_of(&exact.lower_vec, &mu, &nu);
        let hi = ratio_of(&exact.upper_vec, &mu, &nu);
        if (lo - exact.lower).abs() > 1e-9 || (hi - exact.upper).abs() > 1e-9 {
            missed += 1;
        }
    }
    check(
        outside == 0 && missed == 0,
        format!("500 pairs x 10 samples: {outside} ratios outside [A, B]; {missed} eigen-directions off their extreme"),
    )
}

/// An atomic base pair certified by its own exact bounds.
fn exact_pair(rng: &mut ChaCha8Rng, mu: MeasureExpr) -> CertifiedPair {
    let nu = MeasureExpr::atomic(random_atoms(rng, 10..=10, 1, 3.0, (0.2, 2.0)));
    pair_for(mu, nu)
}

fn pair_for(mu: MeasureExpr, nu: MeasureExpr) -> CertifiedPair {
    let b = exact_frame_bounds_atomic(&mu, &nu, 512).unwrap();
    CertifiedPair::new(mu, nu, BoundCert::stated(b.lower, b.upper).unwrap()).unwrap()
}

fn random_step_density(rng: &mut ChaCha8Rng) -> BoundedDensity {
    let mut breaks: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
    breaks.sort_by(f64::total_cmp);
    let values = (0..4).map(|_| rng.random_range(0.25..3.0)).collect();
    BoundedDensity::piecewise_constant(breaks, values, Domain::Line).unwrap()
}

fn random_probability(rng: &mut ChaCha8Rng) -> MeasureExpr {
    let k = rng.random_range(1..=3);
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let s: f64 = w.iter().sum();
    MeasureExpr::atoms_1d(w.iter().map(|x| (rng.random_range(-0.5..0.5), x / s)).collect::<Vec<_>>())
}

fn transformed(rng: &mut ChaCha8Rng, trial: usize) -> Result<(String, CertifiedPair), String> {
    let m = random_atoms(rng, 1..=5, 1, 1.0, (0.1, 1.0));
    let hull = {
        let xs: Vec<f64> = m.iter().map(|(p, _)| p[0]).collect();
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        IntervalUnion::interval(lo - 0.1, hi + 0.1).unwrap()
    };
    let base = exact_pair(rng, MeasureExpr::atomic(m.clone()));
    let e = |r: Result<CertifiedPair, framecert_core::CertError>| r.map_err(|e| e.to_string());
    Ok(match trial % 9 {
        0 => {
            let phi = random_step_density(rng);
            let name = format!("density_restrict(m={:.3}, M={:.3})", phi.lower(), phi.upper());
            let first = m.x(0);
            let set = IntervalUnion::interval(first - 1e-3, first + 1e-3).unwrap();
            let set = if rng.random::<bool>() { Some(&set) } else { None };
            (name, e(cons::density_restrict(&base, set, &phi))?)
        }
        1 => {
            let a = rng.random_range(0.1..5.0);
            (format!("scale_base(alpha={a:.3})"), e(cons::scale_base(&base, a))?)
        }
        2 => {
            let w = if rng.random::<bool>() {
                FrameWeight::Constant(rng.random_range(0.1..4.0))
            } else {
                FrameWeight::Density(random_step_density(rng))
            };
            ("scale_frame_measure".into(), e(cons::scale_frame_measure(&base, &w))?)
        }
        3 => {
            let other = exact_pair(rng, base.mu.clone());
            let (a, b) = (rng.random_range(0.1..2.0), rng.random_range(0.1..2.0));
            (format!("mix(alpha={a:.3}, beta={b:.3})"), e(cons::mix_frame_measures(&base, &other, a, b))?)
        }
        4 => {
            let rho = random_probability(rng);
            ("convolve_probability".into(), e(cons::convolve_frame_measure_with_probability(&base, &rho))?)
        }
        5 => {
            let parts: Vec<_> = (0..rng.random_range(1..=3))
                .map(|_| (hull.clone(), random_step_density(rng)))
                .collect();
            ("sum_with_densities".into(), e(cons::sum_with_densities(&base, &parts))?)
        }
        6 => {
            let m2 = MeasureExpr::atomic(random_atoms(rng, 1..=5, 1, 1.0, (0.1, 1.0)));
            let b2 = exact_frame_bounds_atomic(&m2, &base.nu, 512).unwrap();
            let other = CertifiedPair::new(m2, base.nu.clone(), BoundCert::stated(0.0, b2.upper).unwrap()).unwrap();
            ("sum_bessel".into(), e(cons::sum_bessel_pairs(&base, &other))?)
        }
        7 => {
            let t = rng.random_range(-10.0..10.0);
            (format!("translate(t={t:.3})"), e(cons::translate_pair(&base, vec![t]))?)
        }
        _ => {
            let phi = random_step_density(rng);
            let rhos: Vec<_> = (0..rng.random_range(1..=2)).map(|_| random_probability(rng)).collect();
            (
                "smooth_base".into(),
                e(cons::smooth_base(&base, &phi, &rhos, 1.0 / 1024.0, DEFAULT_CHAIN_CAP))?,
            )
        }
    })
}

fn certificate_propagation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    for trial in 0..200 {
        let (name, p) = transformed(&mut rng, trial)?;
        let b = exact_frame_bounds_atomic(&p.mu, &p.nu, 512).map_err(|e| e.to_string())?;
        if b.lower < p.cert.a() - 1e-9 || b.upper > p.cert.b() + 1e-9 {
            failures.push(format!(
                "{name}: exact [{}, {}] vs cert [{}, {}]",
                b.lower,
                b.upper,
                p.cert.a(),
                p.cert.b()
            ));
        }
    }
    check(
        failures.is_empty(),
        format!("200 transformer applications, {} outside cert {:?}", failures.len(), failures.first()),
    )
}

fn convolution_chain_theorem() -> Outcome {
    let base = CertifiedPair::new(unit(), lattice(64), BoundCert::plancherel()).unwrap();
    let phi = BoundedDensity::piecewise_constant(vec![0.3, 0.7], vec![2.0, 0.5, 2.0], Domain::Line).unwrap();
    let sets = [IntervalUnion::interval(0.0, 0.5).unwrap(), IntervalUnion::interval(0.0, 0.25).unwrap()];
    let p = cons::convolution_chain(&base, &phi, &sets, true, DEFAULT_CHAIN_CAP).map_err(|e| e.to_string())?;
    let resolution = 1.0 / 1024.0;
    let mu = realize_atomic(&p.mu, 12, resolution).map_err(|e| e.to_string())?;
    // the N-point DFT lattice makes L²(μ) ↦ ∫|f̂dμ|²dν diagonal on a grid of
    // spacing 1/N, so its exact bounds read off the realized density
    let n = (1.0 / resolution) as i64;
    let nu = MeasureExpr::atomic(Atoms::line((0..n).map(|k| (k as f64, 1.0))));
    let exact = exact_frame_bounds_atomic(&mu, &nu, 1024).map_err(|e| e.to_string())?;
    let in_band = exact.lower >= 0.5 - 0.02 && exact.upper <= 2.0 + 0.02;
    let MeasureExpr::Atomic { atoms } = &mu else { unreachable!() };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut inside = true;
    for _ in 0..10 {
        let f = TestFunction::point_values(atoms, (0..atoms.len()).map(|_| disc(&mut rng)).collect()).unwrap();
        let r = frame_ratio(&f, &mu, &nu, None, &VerifyOptions::default()).unwrap();
        let x = r.ratio.unwrap();
        inside &= x >= p.cert.a() - r.error && x <= p.cert.b() + r.error;
    }
    check(
        in_band && inside && (p.cert.a(), p.cert.b()) == (0.5, 2.0),
        format!(
            "cert [{}, {}], exact bounds of {}-atom realization [{:.4}, {:.4}], sampled ratios inside cert: {inside}",
            p.cert.a(),
            p.cert.b(),
            atoms.len(),
            exact.lower,
            exact.upper
        ),
    )
}

fn cantor_self_similarity() -> Outcome {
    let ifs = mu4();
    let mut worst = 0.0f64;
    let mut ok = true;
    for i in 0..1000 {
        let t = 10f64.powf(-2.0 + 6.0 * i as f64 / 999.0);
        let full = ifs_transform(&ifs, t, 32);
        let inner = ifs_transform(&ifs, t / 4.0, 32);
        let m = ifs_mask(&[0, 2], &[0.5, 0.5], t / 4.0);
        let gap = (full.value - m * inner.value).norm();
        let bound = full.abs_error_bound + inner.abs_error_bound;
        ok &= gap <= bound;
        worst = worst.max(gap / bound.max(f64::MIN_POSITIVE));
    }
    check(ok, format!("1000 log-spaced t in [1e-2, 1e4], max gap/bound = {worst:.3}"))
}

fn cantor_spectrum_run(depth: u32, cut: u32) -> Result<FrameReport, String> {
    let opts = CatalogOptions {
        trunc_t: cut,
        ..CatalogOptions::default()
    };
    let pair = canonical_pairs(&opts).map_err(|e| e.to_string())?.remove(3);
    let mu = realize_atomic(&MeasureExpr::ifs(mu4()), depth, 1.0 / 1024.0).map_err(|e| e.to_string())?;
    let vopts = VerifyOptions::default();
    let family = gen_test_family(&mu, FamilyKind::Trig, 30, 3, 7, &vopts.accuracy).map_err(|e| e.to_string())?;
    estimate_bounds(&mu, &pair.nu, &family, Some(&pair.cert), pair.truncation.as_ref(), &vopts)
        .map_err(|e| e.to_string())
}

fn cantor_spectrum() -> Outcome {
    let coarse = cantor_spectrum_run(10, 256)?;
    let fine = cantor_spectrum_run(12, 1024)?;
    let (l1, u1) = (coarse.emp_lower.unwrap(), coarse.emp_upper.unwrap());
    let (l2, u2) = (fine.emp_lower.unwrap(), fine.emp_upper.unwrap());
    let within = l1 >= 0.9 && u1 <= 1.1;
    // both runs contain f ≡ 1 with ratio 1 up to rounding
    let slack = 1e-12;
    let tighter = (u2 - l2) <= (u1 - l1) + slack
        && (l2 - 1.0).abs() <= (l1 - 1.0).abs() + slack
        && (u2 - 1.0).abs() <= (u1 - 1.0).abs() + slack;
    check(
        within && tighter,
        format!("depth 10/T 256: [{l1:.6}, {u1:.6}]; depth 12/T 1024: [{l2:.6}, {u2:.6}]"),
    )
}

fn approximate_identity_stability() -> Outcome {
    let pair = canonical_pairs(&CatalogOptions::default()).map_err(|e| e.to_string())?.remove(1);
    let opts = VerifyOptions::default();
    let family = gen_test_family(&pair.mu, FamilyKind::Trig, 20, 4, 8, &opts.accuracy).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let mut ok = true;
    for kind in [ApproxKind::I, ApproxKind::Ii, ApproxKind::Iii, ApproxKind::Iv { m: 2 }] {
        approximate_identity(kind, 1).map_err(|e| e.to_string())?;
        let rep = approx_identity_limit_check(&pair, kind, &[1, 2, 4, 8], &family, &opts).map_err(|e| e.to_string())?;
        let same_cert = rep
            .entries
            .iter()
            .all(|e| e.report.cert.as_ref().map(|c| (c.a(), c.b())) == Some((1.0, 1.0)));
        ok &= rep.all_consistent && rep.drift_ok && same_cert;
        let drift = rep.entries.iter().map(|e| e.drift).fold(0.0, f64::max);
        lines.push(format!("{kind:?}: consistent={} drift={drift:.1e}", rep.all_consistent));
        debug_assert!(rep.entries.iter().all(|e| e.report.verdict != Verdict::UpperViolated));
    }
    check(ok, lines.join("; "))
}

fn cli_determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("framecert-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let config = r#"{"command": "verify", "pair": {"catalog": 1}, "family": {"kind": "trig", "count": 20, "max_degree": 6}}"#;
    let mut artifacts = Vec::new();
    for format in ["json", "csv"] {
        let mut runs = Vec::new();
        for k in 0..2 {
            let out = dir.join(format!("run{k}.{format}"));
            let status = Command::new(env!("CARGO_BIN_EXE_framecert"))
                .args(["--inline", config, "--seed", "42", "--format", format, "--out"])
                .arg(&out)
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return Err(format!("verify exited with {status}"));
            }
            runs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        artifacts.push((format, runs[0] == runs[1], runs[0].len()));
    }
    let _ = std::fs::remove_dir_all(&dir);
    check(
        artifacts.iter().all(|a| a.1),
        artifacts
            .iter()
            .map(|(f, same, len)| format!("{f}: identical={same} ({len} bytes)"))
            .collect::<Vec<_>>()
            .join(", "),
    )
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("parseval exactness on the integer lattice", Duration::from_secs(5), parseval_exactness),
        ("plancherel identity for Lebesgue measure", Duration::from_secs(30), plancherel_identity),
        ("atomic oracle soundness", Duration::from_secs(20), atomic_oracle_soundness),
        ("certificate propagation", Duration::from_secs(60), certificate_propagation),
        ("convolution chain bounds", Duration::from_secs(120), convolution_chain_theorem),
        ("cantor self-similarity", Duration::from_secs(5), cantor_self_similarity),
        ("cantor spectrum as frame measure", Duration::from_secs(600), cantor_spectrum),
        ("approximate-identity stability", Duration::from_secs(300), approximate_identity_stability),
        ("cli determinism", Duration::from_secs(5), cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= *budget => (true, d),
            Ok(d) => (false, format!("{d}; over time budget {budget:?}")),
            Err(d) => (false, d),
        };
        failed += usize::from(!ok);
        println!(
            "[{}] {} {name}: {detail} ({:.2}s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
