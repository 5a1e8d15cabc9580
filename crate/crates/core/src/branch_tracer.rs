//! Sampling of `β(s)`, certified roots of `β(s) = 2λ`, and continuation of
//! those roots in `λ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::radial_ode::{compute_beta_with, ShootingConfig};

/// `|β(s_root) - 2λ|` required of a certified root.
pub const ROOT_TOL: f64 = 1e-8;

/// A root within this distance of `ln 4λ` is the trivial one.
pub const TRIVIAL_TOL: f64 = 1e-6;

/// Roots closer than this are the same root.
pub const MERGE_TOL: f64 = 1e-6;

/// Step of the five-point stencils used for `β̇` and `β̈` at a point.
pub const STENCIL_STEP: f64 = 0.02;

const POLISH_TOL: f64 = 1e-11;
const MAX_REFINE_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanWindow {
    pub s_min: f64,
    pub s_max: f64,
    pub ds: f64,
}

impl Default for ScanWindow {
    fn default() -> Self {
        Self {
            s_min: -10.0,
            s_max: 15.0,
            ds: 0.05,
        }
    }
}

impl ScanWindow {
    pub fn validate(&self, params: &ProblemParams) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.ds > 0.0 && self.ds.is_finite()) {
            return bad(format!("ds must be positive (got {})", self.ds));
        }
        let s_t = params.trivial_shot();
        if !(self.s_min < s_t && s_t < self.s_max) {
            return bad(format!(
                "scan window [{}, {}] must contain ln(4 lambda) = {s_t:.6}",
                self.s_min, self.s_max
            ));
        }
        Ok(())
    }

    /// `s_min + k ds` for `k = 0..=n`, with `n = round((s_max - s_min)/ds)`.
    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.s_max - self.s_min) / self.ds).round() as usize;
        (0..=n).map(|k| self.s_min + k as f64 * self.ds).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub s: f64,
    pub error: String,
}

/// `β` on a uniform grid, with finite-difference `β̇` and `β̈`.
///
/// Failed samples hold `NaN` and are listed in `failures`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaProfile {
    pub params: ProblemParams,
    pub config: ShootingConfig,
    pub window: ScanWindow,
    pub samples: Vec<(f64, f64)>,
    pub d_beta: Vec<f64>,
    pub dd_beta: Vec<f64>,
    pub failures: Vec<SampleFailure>,
}

impl BetaProfile {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn beta_at(&self, s: f64) -> Result<f64> {
        compute_beta_with(&self.params, s, &self.config)
    }
}

pub fn sample_profile(
    params: &ProblemParams,
    window: &ScanWindow,
    config: &ShootingConfig,
) -> Result<BetaProfile> {
    window.validate(params)?;
    config.validate()?;
    let grid = window.grid();
    let results: Vec<Result<f64>> = grid
        .par_iter()
        .map(|&s| compute_beta_with(params, s, config))
        .collect();

    let mut samples = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    for (&s, res) in grid.iter().zip(results) {
        match res {
            Ok(beta) => samples.push((s, beta)),
            Err(e) => {
                samples.push((s, f64::NAN));
                failures.push(SampleFailure { s, error: e.to_string() });
            }
        }
    }
    let betas: Vec<f64> = samples.iter().map(|p| p.1).collect();
    let (d_beta, dd_beta) = grid_derivatives(&betas, window.ds);
    Ok(BetaProfile {
        params: *params,
        config: *config,
        window: *window,
        samples,
        d_beta,
        dd_beta,
        failures,
    })
}

/// Second-order differences: central inside, one-sided at the two ends.
fn grid_derivatives(b: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = b.len();
    if n < 4 {
        return (vec![f64::NAN; n], vec![f64::NAN; n]);
    }
    let mut d = vec![0.0; n];
    let mut dd = vec![0.0; n];
    for k in 1..n - 1 {
        d[k] = (b[k + 1] - b[k - 1]) / (2.0 * h);
        dd[k] = (b[k + 1] - 2.0 * b[k] + b[k - 1]) / (h * h);
    }
    d[0] = (-3.0 * b[0] + 4.0 * b[1] - b[2]) / (2.0 * h);
    d[n - 1] = (3.0 * b[n - 1] - 4.0 * b[n - 2] + b[n - 3]) / (2.0 * h);
    dd[0] = (2.0 * b[0] - 5.0 * b[1] + 4.0 * b[2] - b[3]) / (h * h);
    dd[n - 1] = (2.0 * b[n - 1] - 5.0 * b[n - 2] + 4.0 * b[n - 3] - b[n - 4]) / (h * h);
    (d, dd)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootKind {
    Trivial,
    Nonzero,
}

impl RootKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RootKind::Trivial => "trivial",
            RootKind::Nonzero => "nonzero",
        }
    }
}

/// A certified solution of `β(s) = 2λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRoot {
    pub params: ProblemParams,
    pub s_root: f64,
    /// `β̇(s_root)`.
    pub beta_slope: f64,
    /// `β(s_root) - 2λ`.
    pub residual: f64,
    pub kind: RootKind,
    pub bracket: (f64, f64),
}

/// A sample where `β - 2λ` comes close to zero without changing sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspectedTangency {
    pub s: f64,
    pub residual: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootScan {
    pub roots: Vec<BranchRoot>,
    pub suspected: Vec<SuspectedTangency>,
}

impl RootScan {
    pub fn count(&self, kind: RootKind) -> usize {
        self.roots.iter().filter(|r| r.kind == kind).count()
    }
}

/// `(β̇, β̈)` at `s` from five-point stencils of step [`STENCIL_STEP`].
pub fn beta_derivatives(params: &ProblemParams, s: f64, config: &ShootingConfig) -> Result<(f64, f64)> {
    let h = STENCIL_STEP;
    let pts = [s - 2.0 * h, s - h, s, s + h, s + 2.0 * h];
    let b: Vec<f64> = pts
        .iter()
        .map(|&x| compute_beta_with(params, x, config))
        .collect::<Result<_>>()?;
    let d = (b[0] - 8.0 * b[1] + 8.0 * b[3] - b[4]) / (12.0 * h);
    let dd = (-b[0] + 16.0 * b[1] - 30.0 * b[2] + 16.0 * b[3] - b[4]) / (12.0 * h * h);
    Ok((d, dd))
}

/// Bracketed refinement of a sign change: Illinois-modified regula falsi,
/// falling back to bisection whenever the bracket fails to halve.
fn refine_bracket(
    f: impl Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
) -> Result<(f64, f64)> {
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    let mut side = 0i8;
    let mut last_width = f64::INFINITY;
    for _ in 0..MAX_REFINE_ITERS {
        let width = b - a;
        if best.1.abs() <= POLISH_TOL || width <= 1e-14 * (1.0 + a.abs()) {
            break;
        }
        let secant = (a * fb - b * fa) / (fb - fa);
        let x = if secant > a && secant < b && width <= 0.5 * last_width {
            secant
        } else {
            0.5 * (a + b)
        };
        last_width = width;
        let fx = f(x)?;
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx == 0.0 {
            break;
        }
        if (fx < 0.0) == (fa < 0.0) {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Ok(best)
}

pub fn find_roots(profile: &BetaProfile) -> Result<RootScan> {
    if profile.samples.is_empty() {
        return Err(Error::EmptyScan);
    }
    if !profile.is_complete() {
        return Err(Error::IncompleteProfile(profile.failures.len()));
    }
    let params = &profile.params;
    let target = params.target_beta();
    let g = |s: f64| profile.beta_at(s).map(|b| b - target);
    let s_t = params.trivial_shot();

    // Sign-change brackets; the cell holding ln 4λ is split around it so a
    // nonzero root sharing that cell is still seen.
    let mut brackets: Vec<(f64, f64, f64, f64)> = Vec::new();
    let pts: Vec<(f64, f64)> = profile.samples.iter().map(|&(s, b)| (s, b - target)).collect();
    for pair in pts.windows(2) {
        let ((a, fa), (b, fb)) = (pair[0], pair[1]);
        if a < s_t && s_t < b {
            let delta = 0.01 * (b - a);
            let (lo, hi) = (s_t - delta, s_t + delta);
            let (flo, fhi) = (g(lo)?, g(hi)?);
            for (x0, f0, x1, f1) in [(a, fa, lo, flo), (hi, fhi, b, fb)] {
                if f0 * f1 < 0.0 {
                    brackets.push((x0, x1, f0, f1));
                }
            }
        } else if fa == 0.0 {
            brackets.push((a, a, fa, fa));
        } else if fa * fb < 0.0 {
            brackets.push((a, b, fa, fb));
        }
    }
    if let Some(&(s, f)) = pts.last() {
        if f == 0.0 {
            brackets.push((s, s, f, f));
        }
    }

    let config = &profile.config;
    let mut roots = Vec::new();

    // The trivial root is known in closed form; at degenerate λ it is a
    // tangency and no bracket can see it, so it is certified directly.
    let f_t = g(s_t)?;
    if f_t.abs() <= ROOT_TOL {
        let (slope, _) = beta_derivatives(params, s_t, config)?;
        let cell = containing_cell(&profile.samples, s_t);
        roots.push(BranchRoot {
            params: *params,
            s_root: s_t,
            beta_slope: slope,
            residual: f_t,
            kind: RootKind::Trivial,
            bracket: cell,
        });
    }

    for (a, b, fa, fb) in brackets {
        let (s, f) = if a == b { (a, fa) } else { refine_bracket(g, a, b, fa, fb)? };
        if f.abs() > ROOT_TOL {
            continue;
        }
        let (slope, _) = beta_derivatives(params, s, config)?;
        let kind = if (s - s_t).abs() <= TRIVIAL_TOL {
            RootKind::Trivial
        } else {
            RootKind::Nonzero
        };
        roots.push(BranchRoot {
            params: *params,
            s_root: s,
            beta_slope: slope,
            residual: f,
            kind,
            bracket: (a, b),
        });
    }
    let roots = merge_roots(roots);

    let max_curv = profile
        .dd_beta
        .iter()
        .fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { m });
    let ds = profile.window.ds;
    let threshold = 10.0 * ds * ds * max_curv;
    let mut suspected = Vec::new();
    for k in 1..pts.len().saturating_sub(1) {
        let (prev, (s, f), next) = (pts[k - 1].1, pts[k], pts[k + 1].1);
        let same_sign = f != 0.0 && prev * f > 0.0 && next * f > 0.0;
        let local_min = f.abs() <= prev.abs() && f.abs() <= next.abs();
        let near_root = roots.iter().any(|r| (r.s_root - s).abs() <= 2.0 * ds);
        if same_sign && local_min && f.abs() < threshold && !near_root {
            suspected.push(SuspectedTangency { s, residual: f, threshold });
        }
    }
    Ok(RootScan { roots, suspected })
}

fn containing_cell(samples: &[(f64, f64)], s: f64) -> (f64, f64) {
    samples
        .windows(2)
        .find(|w| w[0].0 <= s && s <= w[1].0)
        .map(|w| (w[0].0, w[1].0))
        .unwrap_or((s, s))
}

/// Sorts by `s` and merges roots closer than [`MERGE_TOL`]; a merged root
/// keeps the entry whose bracket midpoint is nearest to it, and is trivial if
/// either entry was.
fn merge_roots(mut roots: Vec<BranchRoot>) -> Vec<BranchRoot> {
    roots.sort_by(|a, b| a.s_root.total_cmp(&b.s_root));
    let mut out: Vec<BranchRoot> = Vec::with_capacity(roots.len());
    for root in roots {
        match out.last_mut() {
            Some(prev) if (root.s_root - prev.s_root).abs() <= MERGE_TOL => {
                let trivial = prev.kind == RootKind::Trivial || root.kind == RootKind::Trivial;
                let mid = |r: &BranchRoot| ((r.bracket.0 + r.bracket.1) / 2.0 - r.s_root).abs();
                if mid(&root) < mid(prev) {
                    *prev = root;
                }
                if trivial {
                    prev.kind = RootKind::Trivial;
                }
            }
            _ => out.push(root),
        }
    }
    out
}

/// One row of the bifurcation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub lambda: f64,
    pub s_root: f64,
    pub kind: RootKind,
    pub beta_slope: f64,
}

/// `β̇` and `β̈` at the trivial shot `ln 4λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyPoint {
    pub lambda: f64,
    pub d_beta: f64,
    pub dd_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSummary {
    pub lambda: f64,
    pub certified: usize,
    pub suspected: usize,
}

/// A grid value of `λ` whose scan did not complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchGap {
    pub lambda: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationTable {
    pub rows: Vec<BranchRow>,
    pub summaries: Vec<LambdaSummary>,
    pub diagnostics: Vec<DegeneracyPoint>,
    pub gaps: Vec<BranchGap>,
}

impl BifurcationTable {
    pub fn is_complete(&self) -> bool {
        self.gaps.is_empty()
    }

    /// The unique interval `(λ_k, λ_{k+1})` on which `β̇(ln 4λ)` changes
    /// sign, or `None` if there is no such interval or more than one.
    pub fn degeneracy_crossing(&self) -> Option<(f64, f64)> {
        let crossings: Vec<(f64, f64)> = self
            .diagnostics
            .windows(2)
            .filter(|w| w[0].d_beta * w[1].d_beta <= 0.0)
            .map(|w| (w[0].lambda, w[1].lambda))
            .collect();
        match crossings.as_slice() {
            [one] => Some(*one),
            _ => None,
        }
    }
}

/// `λ_min + k dλ` for `k = 1..=n`, i.e. the half-open range `(λ_min, λ_max]`.
pub fn lambda_grid(lambda_min: f64, lambda_max: f64, d_lambda: f64) -> Result<Vec<f64>> {
    if !(d_lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("d_lambda must be positive (got {d_lambda})")));
    }
    if !(4.0 <= lambda_min && lambda_min < lambda_max && lambda_max <= 8.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda range ({lambda_min}, {lambda_max}] must lie in (4, 8]"
        )));
    }
    let n = ((lambda_max - lambda_min) / d_lambda).round() as usize;
    // Snap to 12 decimals so that grid values like 6 are exact.
    Ok((1..=n)
        .map(|k| ((lambda_min + k as f64 * d_lambda) * 1e12).round() / 1e12)
        .filter(|&l| l <= lambda_max + 1e-12)
        .collect())
}

pub fn trace_branches(
    lambda_min: f64,
    lambda_max: f64,
    d_lambda: f64,
    window: &ScanWindow,
    config: &ShootingConfig,
) -> Result<BifurcationTable> {
    let grid = lambda_grid(lambda_min, lambda_max, d_lambda)?;
    for &lambda in &grid {
        window.validate(&ProblemParams::new(lambda)?)?;
    }
    config.validate()?;

    type Scanned = (f64, Result<RootScan>, Result<(f64, f64)>);
    let per_lambda: Vec<Scanned> = grid
        .par_iter()
        .map(|&lambda| {
            let params = ProblemParams::new(lambda).expect("grid inside (4, 8]");
            let scan = sample_profile(&params, window, config).and_then(|p| find_roots(&p));
            let diag = beta_derivatives(&params, params.trivial_shot(), config);
            (lambda, scan, diag)
        })
        .collect();

    let mut table = BifurcationTable {
        rows: Vec::new(),
        summaries: Vec::new(),
        diagnostics: Vec::new(),
        gaps: Vec::new(),
    };
    for (lambda, scan, diag) in per_lambda {
        match scan {
            Ok(scan) => {
                table.summaries.push(LambdaSummary {
                    lambda,
                    certified: scan.roots.len(),
                    suspected: scan.suspected.len(),
                });
                table.rows.extend(scan.roots.iter().map(|r| BranchRow {
                    lambda,
                    s_root: r.s_root,
                    kind: r.kind,
                    beta_slope: r.beta_slope,
                }));
            }
            Err(e) => table.gaps.push(BranchGap { lambda, reason: e.to_string() }),
        }
        match diag {
            Ok((d_beta, dd_beta)) => table.diagnostics.push(DegeneracyPoint { lambda, d_beta, dd_beta }),
            Err(e) => table.gaps.push(BranchGap {
                lambda,
                reason: format!("degeneracy diagnostic: {e}"),
            }),
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: f64) -> ProblemParams {
        ProblemParams::new(lambda).unwrap()
    }

    #[test]
    fn grid_has_expected_size() {
        assert_eq!(ScanWindow::default().grid().len(), 501);
        let w = ScanWindow { s_min: 0.0, s_max: 1.0, ds: 0.25 };
        assert_eq!(w.grid(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn window_must_contain_trivial_shot() {
        let p = params(6.0);
        assert!(ScanWindow { s_min: 4.0, s_max: 10.0, ds: 0.1 }.validate(&p).is_err());
        assert!(ScanWindow { s_min: -1.0, s_max: 10.0, ds: 0.0 }.validate(&p).is_err());
        assert!(ScanWindow::default().validate(&p).is_ok());
    }

    #[test]
    fn grid_derivatives_are_exact_on_quadratics() {
        let h = 0.1;
        let b: Vec<f64> = (0..10).map(|k| {
            let s = k as f64 * h;
            3.0 * s * s - s + 2.0
        }).collect();
        let (d, dd) = grid_derivatives(&b, h);
        for k in 0..10 {
            let s = k as f64 * h;
            assert!((d[k] - (6.0 * s - 1.0)).abs() < 1e-9, "k={k}");
            assert!((dd[k] - 6.0).abs() < 1e-7, "k={k}");
        }
    }

    #[test]
    fn refine_bracket_finds_simple_roots() {
        let f = |x: f64| Ok(x.powi(3) - 2.0);
        let (x, fx) = refine_bracket(f, 0.0, 3.0, -2.0, 25.0).unwrap();
        assert!((x - 2f64.cbrt()).abs() < 1e-11, "{x}");
        assert!(fx.abs() <= POLISH_TOL);
        let g = |x: f64| Ok((x - 0.3).tanh());
        let (x, _) = refine_bracket(g, -5.0, 5.0, (-5.3f64).tanh(), 4.7f64.tanh()).unwrap();
        assert!((x - 0.3).abs() < 1e-10);
    }

    #[test]
    fn lambda_grid_is_half_open() {
        assert_eq!(lambda_grid(4.5, 8.0, 0.5).unwrap(), vec![5.0, 5.5, 6.0, 6.5, 7.0, 7.5, 8.0]);
        let fine = lambda_grid(4.0, 8.0, 0.05).unwrap();
        assert_eq!(fine.len(), 80);
        assert!(fine.contains(&6.0));
        assert!(lambda_grid(3.0, 8.0, 0.5).is_err());
        assert!(lambda_grid(4.5, 9.0, 0.5).is_err());
        assert!(lambda_grid(4.5, 8.0, 0.0).is_err());
    }

    #[test]
    fn merge_keeps_trivial_kind() {
        let p = params(7.0);
        let mk = |s: f64, kind, bracket| BranchRoot {
            params: p,
            s_root: s,
            beta_slope: 0.0,
            residual: 0.0,
            kind,
            bracket,
        };
        let merged = merge_roots(vec![
            mk(1.0 + 4e-7, RootKind::Nonzero, (0.9, 1.1)),
            mk(0.5, RootKind::Nonzero, (0.4, 0.6)),
            mk(1.0, RootKind::Trivial, (0.0, 1.0)),
        ]);
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[0].s_root, 0.5);
        assert_eq!(merged[1].kind, RootKind::Trivial);
        // the (0.9, 1.1) bracket is centred on the root
        assert_eq!(merged[1].bracket, (0.9, 1.1));
    }

    #[test]
    fn empty_and_partial_profiles_are_rejected() {
        let p = params(7.0);
        let mut prof = BetaProfile {
            params: p,
            config: ShootingConfig::default(),
            window: ScanWindow::default(),
            samples: vec![],
            d_beta: vec![],
            dd_beta: vec![],
            failures: vec![],
        };
        assert_eq!(find_roots(&prof).unwrap_err(), Error::EmptyScan);
        prof.samples = vec![(0.0, 14.0), (0.05, f64::NAN)];
        prof.failures = vec![SampleFailure { s: 0.05, error: "x".into() }];
        assert_eq!(find_roots(&prof).unwrap_err(), Error::IncompleteProfile(1));
    }

    #[test]
    fn coarse_scan_at_seven_finds_two_roots() {
        let p = params(7.0);
        let w = ScanWindow { s_min: -2.0, s_max: 6.0, ds: 0.25 };
        let prof = sample_profile(&p, &w, &ShootingConfig::default()).unwrap();
        let scan = find_roots(&prof).unwrap();
        assert_eq!(scan.roots.len(), 2, "{scan:?}");
        assert_eq!(scan.count(RootKind::Trivial), 1);
        for r in &scan.roots {
            assert!(r.residual.abs() <= ROOT_TOL);
            assert!(r.bracket.0 <= r.s_root && r.s_root <= r.bracket.1);
        }
        let trivial = scan.roots.iter().find(|r| r.kind == RootKind::Trivial).unwrap();
        assert_eq!(trivial.s_root, p.trivial_shot());
    }
}
