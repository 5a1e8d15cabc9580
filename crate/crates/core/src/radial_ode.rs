//! Radial shooting for the planar Liouville-type problem
//!
//! ```text
//! w'' + w'/r + (1 + r²)^l e^w = 0,   w(0) = s,  w'(0) = 0
//! ```
//!
//! The problem is integrated in `t = ln r`. Rather than `w` itself the
//! integrator carries the shifted unknown
//!
//! ```text
//! u = w + λ ln(1 + e^{2t}) - ln(4λ),    u_tt = λ sech²(t) (1 - e^u),
//! ```
//!
//! which is the sphere-side function read in Mercator coordinates. `u` stays
//! bounded where `w` grows like `-β t`, and the trivial branch `u ≡ 0` is
//! reproduced exactly. The state also carries the accumulated planar mass
//! `m(t) = ∫_0^{e^t} (1+ρ²)^l e^w ρ dρ`, so it is `[u, u_t, m]`. Flux
//! conservation gives `m = -w_t` in the continuum; numerically the two are
//! independent estimates of the same quantity.

use serde::{Deserialize, Serialize};

use crate::dopri::{self, Tolerances, Trajectory};
use crate::error::{Error, Result};
use crate::params::ProblemParams;

/// Largest radius at which the Taylor seed is trusted.
pub const SERIES_MAX_RADIUS: f64 = 1e-2;

/// The fitted slope must clear `2l + 2` by at least this much.
pub const TAIL_MARGIN: f64 = 1e-3;

/// Target fraction of the total mass left to the analytic tail.
const TAIL_FRACTION: f64 = 1e-13;

/// Upper bound on `ln r` when the truncation radius is pushed outward.
const T_CAP: f64 = 400.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingConfig {
    /// Radius at which the series seed hands over to the integrator, for
    /// `s ≤ 0`. Larger shots start at `r_start · e^{-s/2}` so that the seed
    /// stays in its convergence regime.
    pub r_start: f64,
    /// Nominal truncation radius. It is pushed outward when the analytic
    /// tail would still carry more than a `1e-13` fraction of the mass.
    pub r_max: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Width of the slope-fit window, in decades of `r` below the end.
    pub slope_window: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            r_start: 1e-3,
            r_max: 1e6,
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            slope_window: 1.0,
        }
    }
}

impl ShootingConfig {
    /// Tolerances 100× tighter than the default, for trajectories that are
    /// resampled on the sphere and differentiated spectrally there.
    pub fn for_reconstruction() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.r_start > 0.0 && self.r_start <= SERIES_MAX_RADIUS) {
            return bad(format!(
                "r_start must lie in (0, {SERIES_MAX_RADIUS}] (got {})",
                self.r_start
            ));
        }
        if !(self.r_max > 1.0 && self.r_max.is_finite()) {
            return bad(format!("r_max must exceed 1 (got {})", self.r_max));
        }
        for (name, v) in [("abs_tol", self.abs_tol), ("rel_tol", self.rel_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1) (got {v})"));
            }
        }
        let decades = (self.r_max / self.r_start).log10();
        if !(self.slope_window > 0.0 && self.slope_window < decades) {
            return bad(format!(
                "slope_window must lie in (0, {decades:.3}) decades (got {})",
                self.slope_window
            ));
        }
        Ok(())
    }

    /// Same configuration with both tolerances scaled by `factor`.
    pub fn scaled_tolerances(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            ..*self
        }
    }

    /// Seed radius actually used for shooting value `s`.
    pub fn effective_r_start(&self, s: f64) -> f64 {
        self.r_start * (-0.5 * s).exp().min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialNode {
    pub r: f64,
    pub w: f64,
    pub w_prime: f64,
}

/// One shooting trajectory together with its asymptotic slope.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub params: ProblemParams,
    pub s: f64,
    /// Accepted integrator steps, from the seed radius to the final radius.
    pub nodes: Vec<RadialNode>,
    /// Mass integral plus analytic tail.
    pub beta: f64,
    /// Flux form `-r w'(r_end)` closed with the same tail.
    pub mass: f64,
    /// Slope of `-w` against `ln r` over the fit window.
    pub slope_beta: f64,
    /// `|slope_beta - beta|`.
    pub beta_gap: f64,
    /// Mass carried by the analytic tail beyond the last node.
    pub tail_mass: f64,
    trajectory: Trajectory<3>,
}

impl RadialSolution {
    pub fn r_start(&self) -> f64 {
        self.nodes[0].r
    }

    pub fn r_end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].r
    }

    /// `(w, r·w')` at `t = ln r`. Below the seed radius the Taylor seed is
    /// used; beyond the last node the result is `None`.
    pub fn eval_log(&self, t: f64) -> Option<(f64, f64)> {
        let lambda = self.params.lambda();
        self.eval_shifted(t)
            .map(|(u, ut)| (u - shift(lambda, t), ut - shift_rate(lambda, t)))
    }

    /// The shifted unknown `(u, u_t)` at `t = ln r`; see the module docs.
    pub fn eval_shifted(&self, t: f64) -> Option<(f64, f64)> {
        if t < self.trajectory.t_start() {
            let lambda = self.params.lambda();
            let r = t.exp();
            let (w, wp) = taylor_seed(&self.params, self.s, r);
            return Some((w + shift(lambda, t), r * wp + shift_rate(lambda, t)));
        }
        self.trajectory.eval(t).map(|y| (y[0], y[1]))
    }

    /// `(w, w')` at radius `r`.
    pub fn eval(&self, r: f64) -> Option<(f64, f64)> {
        if r <= 0.0 {
            return Some((self.s, 0.0));
        }
        self.eval_log(r.ln()).map(|(w, rw)| (w, rw / r))
    }
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `dm/dt = r² (1 + r²)^l e^w = λ sech²(t) e^u` at `t = ln r`.
fn mass_rate(lambda: f64, t: f64, u: f64) -> f64 {
    let a = t.abs();
    (lambda.ln() + u + 4f64.ln() - 2.0 * a - 2.0 * (-2.0 * a).exp().ln_1p()).exp()
}

/// `λ ln(1 + r²) - ln(4λ)`: the offset between `u` and `w`.
fn shift(lambda: f64, t: f64) -> f64 {
    lambda * log1p_exp(2.0 * t) - (4.0 * lambda).ln()
}

/// `d/dt` of [`shift`], i.e. `2λ r²/(1 + r²)`.
fn shift_rate(lambda: f64, t: f64) -> f64 {
    2.0 * lambda / (1.0 + (-2.0 * t).exp())
}

fn taylor_seed(params: &ProblemParams, s: f64, r: f64) -> (f64, f64) {
    let es = s.exp();
    let c2 = -es / 4.0;
    let c4 = -es * (params.l() + c2) / 16.0;
    let r2 = r * r;
    (
        s + c2 * r2 + c4 * r2 * r2,
        2.0 * c2 * r + 4.0 * c4 * r * r2,
    )
}

/// Degree-4 Taylor expansion of the regular solution at `r_start`.
///
/// Matching `w'' + w'/r = -(1+r²)^l e^w` order by order gives
/// `c₂ = -e^s/4` and `c₄ = -e^s (l + c₂)/16`.
pub fn series_start(params: &ProblemParams, s: f64, r_start: f64) -> Result<(f64, f64)> {
    if !(r_start > 0.0 && r_start <= SERIES_MAX_RADIUS) {
        return Err(Error::InvalidParameter(format!(
            "series radius must lie in (0, {SERIES_MAX_RADIUS}] (got {r_start})"
        )));
    }
    if !s.is_finite() {
        return Err(Error::InvalidParameter(format!("shooting value must be finite (got {s})")));
    }
    Ok(taylor_seed(params, s, r_start))
}

pub fn integrate_radial(
    params: &ProblemParams,
    s: f64,
    config: &ShootingConfig,
) -> Result<RadialSolution> {
    config.validate()?;
    let r0 = config.effective_r_start(s);
    let (w0, wp0) = series_start(params, s, r0)?;
    let lambda = params.lambda();
    let rhs = |t: f64, y: &[f64; 3]| {
        let q = mass_rate(lambda, t, y[0]);
        // λ sech²(t) (1 - e^u) = λ sech²(t) - q
        let a = t.abs();
        let sech2 = 4.0 * (-2.0 * a).exp() / (1.0 + (-2.0 * a).exp()).powi(2);
        [y[1], lambda * sech2 - q, q]
    };
    let tol = Tolerances {
        abs: config.abs_tol,
        rel: config.rel_tol,
        h_max: f64::INFINITY,
    };
    let t0 = r0.ln();
    // Mass inside the seed disc equals the flux -r w'(r).
    let seed = [
        w0 + shift(lambda, t0),
        r0 * wp0 + shift_rate(lambda, t0),
        -r0 * wp0,
    ];
    let mut traj = dopri::integrate(&rhs, t0, seed, config.r_max.ln(), &tol)?;

    let window = config.slope_window * std::f64::consts::LN_10;
    let threshold = params.integrability_threshold();
    let w_at = |t: f64, u: f64| u - shift(lambda, t);
    let (slope_beta, tail) = loop {
        let t_end = traj.t_end();
        let [u_end, _, m_end] = traj.last_state();
        let t_lo = t_end - window;
        let u_lo = traj.eval(t_lo).expect("window inside trajectory")[0];
        let slope = -(w_at(t_end, u_end) - w_at(t_lo, u_lo)) / window;
        let gap = slope - threshold;
        if !(gap > TAIL_MARGIN) {
            return Err(Error::TailDivergence { slope, threshold });
        }
        let tail = mass_rate(lambda, t_end, u_end) / gap;
        let excess = tail / (TAIL_FRACTION * (m_end + tail));
        if excess <= 1.0 || t_end >= T_CAP {
            break (slope, tail);
        }
        let t_next = (t_end + excess.ln() / gap + window).min(T_CAP);
        dopri::advance(&rhs, &mut traj, t_next, &tol)?;
    };

    check_monotone_tail(&traj, lambda, window, config.rel_tol)?;

    let t_end = traj.t_end();
    let [_, ut_end, m_end] = traj.last_state();
    let beta = m_end + tail;
    let nodes = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, y)| {
            let r = t.exp();
            RadialNode {
                r,
                w: w_at(t, y[0]),
                w_prime: (y[1] - shift_rate(lambda, t)) / r,
            }
        })
        .collect();
    Ok(RadialSolution {
        params: *params,
        s,
        nodes,
        beta,
        mass: shift_rate(lambda, t_end) - ut_end + tail,
        slope_beta,
        beta_gap: (slope_beta - beta).abs(),
        tail_mass: tail,
        trajectory: traj,
    })
}

/// `-r w'` is the enclosed mass and can only grow; a decrease beyond the
/// integration noise over the fit window means the run is not trustworthy.
fn check_monotone_tail(traj: &Trajectory<3>, lambda: f64, window: f64, rel_tol: f64) -> Result<()> {
    let t_lo = traj.t_end() - window;
    let flux: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| **t >= t_lo)
        .map(|(&t, y)| shift_rate(lambda, t) - y[1])
        .collect();
    let scale = flux.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
    let noise = 10.0 * rel_tol * scale;
    let worst_drop = flux
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(0.0f64, f64::max);
    if worst_drop > noise {
        let spread = flux.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - flux.iter().cloned().fold(f64::INFINITY, f64::min);
        return Err(Error::NonAsymptoticTail { spread });
    }
    Ok(())
}

/// `β(s)` with the default configuration.
pub fn compute_beta(params: &ProblemParams, s: f64) -> Result<f64> {
    compute_beta_with(params, s, &ShootingConfig::default())
}

pub fn compute_beta_with(params: &ProblemParams, s: f64, config: &ShootingConfig) -> Result<f64> {
    integrate_radial(params, s, config).map(|sol| sol.beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: f64) -> ProblemParams {
        ProblemParams::new(lambda).unwrap()
    }

    fn closed_form(lambda: f64, r: f64) -> (f64, f64) {
        let w = -lambda * (r * r).ln_1p() + (4.0 * lambda).ln();
        let wp = -2.0 * lambda * r / (1.0 + r * r);
        (w, wp)
    }

    #[test]
    fn series_leading_order_at_s_zero() {
        let (w, wp) = series_start(&params(6.0), 0.0, 1e-3).unwrap();
        assert!((w + 0.25e-6).abs() < 1e-11, "{w}");
        assert!((wp + 0.5e-3).abs() < 1e-8, "{wp}");
    }

    #[test]
    fn series_matches_trivial_closed_form() {
        let r = 1e-3;
        let (w, wp) = series_start(&params(6.0), 24f64.ln(), r).unwrap();
        let (we, wpe) = closed_form(6.0, r);
        assert!((w - we).abs() <= 1e-12);
        assert!((wp - wpe).abs() <= 1e-12);
    }

    #[test]
    fn series_rejects_radius_out_of_range() {
        for r in [0.0, -1e-4, 2e-2, f64::NAN] {
            assert!(series_start(&params(6.0), 0.0, r).is_err());
        }
    }

    #[test]
    fn config_validation() {
        assert!(ShootingConfig::default().validate().is_ok());
        let bad = [
            ShootingConfig { r_start: 0.5, ..Default::default() },
            ShootingConfig { r_max: 0.9, ..Default::default() },
            ShootingConfig { rel_tol: 0.0, ..Default::default() },
            ShootingConfig { abs_tol: -1.0, ..Default::default() },
            ShootingConfig { slope_window: 0.0, ..Default::default() },
            ShootingConfig { slope_window: 20.0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn trivial_branch_is_reproduced_on_every_node() {
        for lambda in [6.0, 8.0] {
            let sol = integrate_radial(&params(lambda), (4.0 * lambda).ln(), &Default::default())
                .unwrap();
            let sup = sol
                .nodes
                .iter()
                .map(|n| (n.w - closed_form(lambda, n.r).0).abs())
                .fold(0.0, f64::max);
            assert!(sup <= 1e-8, "lambda {lambda}: sup error {sup:e}");
            assert!((sol.beta - 2.0 * lambda).abs() <= 1e-7, "beta {}", sol.beta);
            assert!((sol.mass - 2.0 * lambda).abs() <= 1e-7, "mass {}", sol.mass);
        }
    }

    #[test]
    fn nodes_are_increasing_and_span_the_window() {
        let cfg = ShootingConfig::default();
        let sol = integrate_radial(&params(7.0), 1.0, &cfg).unwrap();
        assert!(sol.nodes.windows(2).all(|w| w[1].r > w[0].r));
        assert!((sol.r_start() - cfg.effective_r_start(1.0)).abs() < 1e-18);
        assert!(sol.r_end() >= cfg.r_max * (1.0 - 1e-12));
    }

    #[test]
    fn large_shots_start_closer_to_the_origin() {
        let cfg = ShootingConfig::default();
        assert_eq!(cfg.effective_r_start(-3.0), cfg.r_start);
        assert!((cfg.effective_r_start(10.0) - 1e-3 * (-5f64).exp()).abs() < 1e-18);
    }

    #[test]
    fn estimators_agree() {
        let cfg = ShootingConfig::default();
        for (lambda, s) in [(6.0, 5.0), (7.0, 2.0), (8.0, -3.0), (5.0, 10.0)] {
            let sol = integrate_radial(&params(lambda), s, &cfg).unwrap();
            assert!(
                sol.beta_gap <= 10.0 * cfg.rel_tol * sol.beta,
                "({lambda}, {s}): gap {:e}",
                sol.beta_gap
            );
            assert!((sol.mass - sol.beta).abs() <= 10.0 * cfg.rel_tol * sol.beta);
            assert!(sol.beta > params(lambda).integrability_threshold());
        }
    }

    #[test]
    fn dense_output_matches_closed_form_between_nodes() {
        let lambda = 7.0;
        let sol = integrate_radial(&params(lambda), 28f64.ln(), &Default::default()).unwrap();
        for k in 0..50 {
            let r = 10f64.powf(-4.0 + 0.2 * k as f64);
            let (w, wp) = sol.eval(r).unwrap();
            let (we, wpe) = closed_form(lambda, r);
            assert!((w - we).abs() < 1e-8, "r={r}: {}", w - we);
            assert!((wp - wpe).abs() < 1e-8 * (1.0 + wpe.abs()), "r={r}");
        }
        assert!(sol.eval(sol.r_end() * 2.0).is_none());
    }

    #[test]
    fn compute_beta_is_deterministic() {
        let p = params(6.5);
        let a = compute_beta(&p, 1.25).unwrap();
        let b = compute_beta(&p, 1.25).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn log1p_exp_is_stable() {
        assert_eq!(log1p_exp(800.0), 800.0);
        assert!((log1p_exp(0.0) - 2f64.ln()).abs() < 1e-16);
        assert!(log1p_exp(-800.0) >= 0.0);
    }
}
