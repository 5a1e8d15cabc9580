use meanfield::branch_tracer::{
    beta_derivatives, find_roots, sample_profile, trace_branches, RootKind, RootScan, ScanWindow,
};
use meanfield::radial_ode::compute_beta_with;
use meanfield::{ProblemParams, ShootingConfig};

fn params(lambda: f64) -> ProblemParams {
    ProblemParams::new(lambda).unwrap()
}

fn scan(lambda: f64, ds: f64) -> RootScan {
    let window = ScanWindow { ds, ..ScanWindow::default() };
    let profile = sample_profile(&params(lambda), &window, &ShootingConfig::default()).unwrap();
    assert!(profile.failures.is_empty());
    find_roots(&profile).unwrap()
}

#[test]
fn six_has_only_the_trivial_root() {
    let s = scan(6.0, 0.05);
    assert_eq!(s.roots.len(), 1, "{:?}", s.roots);
    assert_eq!(s.roots[0].kind, RootKind::Trivial);
    assert!((s.roots[0].s_root - 24f64.ln()).abs() <= 1e-6);
    assert!(s.suspected.is_empty(), "{:?}", s.suspected);
}

#[test]
fn two_roots_away_from_six() {
    for lambda in [4.5, 5.0, 5.5, 6.5, 7.0, 8.0] {
        let s = scan(lambda, 0.05);
        assert!(s.roots.len() >= 2, "lambda {lambda}: {:?}", s.roots);
        assert_eq!(s.count(RootKind::Trivial), 1, "lambda {lambda}");
        assert!(s.roots.windows(2).all(|w| w[0].s_root < w[1].s_root));
        for r in &s.roots {
            assert!(r.residual.abs() <= 1e-8);
            assert_eq!(r.kind == RootKind::Trivial, (r.s_root - params(lambda).trivial_shot()).abs() <= 1e-6);
        }
    }
}

#[test]
fn nonzero_root_sits_on_the_side_given_by_the_slope() {
    // Below 6 the trivial root has β̇ < 0 and the other root lies above it.
    for (lambda, above) in [(5.0, true), (7.0, false), (8.0, false)] {
        let s = scan(lambda, 0.05);
        let trivial = params(lambda).trivial_shot();
        let other = s.roots.iter().find(|r| r.kind == RootKind::Nonzero).unwrap();
        assert_eq!(other.s_root > trivial, above, "lambda {lambda}");
    }
}

#[test]
fn roots_survive_halved_tolerances() {
    let tight = ShootingConfig::default().scaled_tolerances(0.5);
    for lambda in [5.0, 7.0, 8.0] {
        for r in scan(lambda, 0.05).roots {
            let beta = compute_beta_with(&params(lambda), r.s_root, &tight).unwrap();
            assert!((beta - 2.0 * lambda).abs() <= 1e-6, "lambda {lambda}: {beta}");
        }
    }
}

#[test]
fn halving_ds_never_loses_roots() {
    for lambda in [5.0, 6.0, 7.0, 8.0] {
        let coarse = scan(lambda, 0.1);
        let fine = scan(lambda, 0.05);
        assert!(fine.roots.len() >= coarse.roots.len(), "lambda {lambda}");
        for (a, b) in coarse.roots.iter().zip(&fine.roots) {
            assert!((a.s_root - b.s_root).abs() <= 1e-6);
        }
    }
}

#[test]
fn degeneracy_signature_at_six() {
    let cfg = ShootingConfig::default();
    let (d6, dd6) = beta_derivatives(&params(6.0), 24f64.ln(), &cfg).unwrap();
    assert!(d6.abs() <= 1e-4, "{d6:e}");
    assert!(dd6 > 0.0, "{dd6}");
    let (d5, _) = beta_derivatives(&params(5.0), params(5.0).trivial_shot(), &cfg).unwrap();
    let (d7, _) = beta_derivatives(&params(7.0), params(7.0).trivial_shot(), &cfg).unwrap();
    assert!(d5 < -0.1 && d7 > 0.1, "{d5} {d7}");
}

#[test]
fn degeneracy_is_localized_near_six() {
    let table = trace_branches(4.0, 8.0, 0.05, &ScanWindow::default(), &ShootingConfig::default()).unwrap();
    assert!(table.is_complete(), "{:?}", table.gaps);
    assert_eq!(table.diagnostics.len(), 80);
    let (lo, hi) = table.degeneracy_crossing().expect("one sign change");
    assert!(lo >= 5.95 - 1e-12 && hi <= 6.05 + 1e-12, "({lo}, {hi})");
    for summary in &table.summaries {
        let expected = if summary.lambda == 6.0 { 1 } else { 2 };
        assert!(summary.certified >= expected, "{summary:?}");
    }
}
