//! Dormand–Prince 5(4) with Hairer's continuous extension.
//!
//! Fixed-size state, explicit step-size control, FSAL. Every accepted step
//! is kept as a [`DenseSegment`] so callers can evaluate the trajectory at
//! arbitrary points afterwards.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const MAX_STEPS: usize = 1_000_000;

/// Tolerances and step limits.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
    /// Largest step allowed; `f64::INFINITY` for none.
    pub h_max: f64,
}

/// Interpolant of a single accepted step.
#[derive(Debug, Clone)]
pub struct DenseSegment<const N: usize> {
    pub t0: f64,
    pub h: f64,
    coeffs: [[f64; N]; 5],
}

impl<const N: usize> DenseSegment<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        std::array::from_fn(|i| {
            r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])))
        })
    }
}

/// An integrated trajectory: accepted step points plus their interpolants.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub segments: Vec<DenseSegment<N>>,
    /// Derivative at the last point, reused when the run is continued.
    last_deriv: [f64; N],
    last_h: f64,
}

impl<const N: usize> Trajectory<N> {
    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one point")
    }

    pub fn last_state(&self) -> [f64; N] {
        *self.states.last().expect("trajectory has at least one point")
    }

    /// Dense-output evaluation; `None` outside `[t_start, t_end]`.
    pub fn eval(&self, t: f64) -> Option<[f64; N]> {
        if t < self.t_start() || t > self.t_end() {
            return None;
        }
        if self.segments.is_empty() {
            return Some(self.states[0]);
        }
        let idx = self
            .segments
            .partition_point(|seg| seg.t1() < t)
            .min(self.segments.len() - 1);
        Some(self.segments[idx].eval(t))
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn error_norm<const N: usize>(
    err: &[f64; N],
    y0: &[f64; N],
    y1: &[f64; N],
    tol: &Tolerances,
) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sk = tol.abs + tol.rel * y0[i].abs().max(y1[i].abs());
            (err[i] / sk).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(
    f: &F,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    span: f64,
    tol: &Tolerances,
) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    // Hairer & Wanner's starting-step heuristic.
    let sk: [f64; N] = std::array::from_fn(|i| tol.abs + tol.rel * y0[i].abs());
    let rms = |v: &[f64; N]| {
        ((0..N).map(|i| (v[i] / sk[i]).powi(2)).sum::<f64>() / N as f64).sqrt()
    };
    let d0 = rms(y0);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(tol.h_max).min(0.01 * span);
    // The Euler probe can overflow a stiff exponential right-hand side.
    let d2 = loop {
        let y1 = axpy(y0, h0, &[(1.0, f0)]);
        let f1 = f(t0 + h0, &y1);
        let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
        let d2 = rms(&diff) / h0;
        if d2.is_finite() || h0 < 1e-12 {
            break d2;
        }
        h0 *= 0.01;
    };
    let h1 = if !d2.is_finite() {
        h0
    } else if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(tol.h_max)
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end > t0`.
pub fn integrate<const N: usize, F>(
    f: &F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    tol: &Tolerances,
) -> Result<Trajectory<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let f0 = f(t0, &y0);
    let h = initial_step(f, t0, &y0, &f0, t_end - t0, tol);
    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![y0],
        segments: Vec::new(),
        last_deriv: f0,
        last_h: h,
    };
    advance(f, &mut traj, t_end, tol)?;
    Ok(traj)
}

/// Continues an existing trajectory up to `t_end`.
pub fn advance<const N: usize, F>(
    f: &F,
    traj: &mut Trajectory<N>,
    t_end: f64,
    tol: &Tolerances,
) -> Result<()>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut t = traj.t_end();
    let mut y = traj.last_state();
    let mut k1 = traj.last_deriv;
    let mut h = traj.last_h.min(tol.h_max);
    let mut reject = false;

    for _ in 0..MAX_STEPS {
        if t >= t_end {
            break;
        }
        let h_min = 16.0 * f64::EPSILON * t.abs().max(1.0);
        if h < h_min {
            return Err(Error::StepFailure { t, h });
        }
        let last = t + 1.01 * h >= t_end;
        if last {
            h = t_end - t;
        }

        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y1);

        let err: [f64; N] = std::array::from_fn(|i| {
            h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        });
        let err = error_norm(&err, &y, &y1, tol);
        if !err.is_finite() {
            h *= FAC_MIN;
            reject = true;
            continue;
        }

        let fac = if err == 0.0 {
            FAC_MAX
        } else {
            (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
        };

        if err <= 1.0 {
            let ydiff: [f64; N] = std::array::from_fn(|i| y1[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
            let r4: [f64; N] = std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]);
            let r5: [f64; N] = std::array::from_fn(|i| {
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            });
            traj.segments.push(DenseSegment {
                t0: t,
                h,
                coeffs: [y, ydiff, bspl, r4, r5],
            });
            t = if last { t_end } else { t + h };
            y = y1;
            k1 = k7;
            traj.times.push(t);
            traj.states.push(y);
            // No growth right after a rejection.
            let fac = if reject { fac.min(1.0) } else { fac };
            reject = false;
            if !last {
                h = (h * fac).min(tol.h_max);
            }
        } else {
            h *= fac.min(1.0);
            reject = true;
        }
    }
    if t < t_end {
        return Err(Error::StepFailure { t, h });
    }
    traj.last_deriv = k1;
    traj.last_h = h;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol(rel: f64) -> Tolerances {
        Tolerances {
            abs: rel * 1e-2,
            rel,
            h_max: f64::INFINITY,
        }
    }

    #[test]
    fn exponential_decay() {
        let f = |_t: f64, y: &[f64; 1]| [-y[0]];
        let traj = integrate(&f, 0.0, [1.0], 5.0, &tol(1e-10)).unwrap();
        assert_eq!(traj.t_end(), 5.0);
        assert!((traj.last_state()[0] - (-5f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let traj = integrate(&f, 0.0, [0.0, 1.0], 10.0, &tol(1e-11)).unwrap();
        for k in 0..=200 {
            let t = 10.0 * k as f64 / 200.0;
            let y = traj.eval(t).unwrap();
            assert!((y[0] - t.sin()).abs() < 1e-9, "t={t} err={}", y[0] - t.sin());
            assert!((y[1] - t.cos()).abs() < 1e-9);
        }
        assert!(traj.eval(10.5).is_none());
        assert!(traj.eval(-0.1).is_none());
    }

    #[test]
    fn continuation_matches_single_run() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let t = tol(1e-11);
        let mut split = integrate(&f, 0.0, [0.0, 1.0], 4.0, &t).unwrap();
        advance(&f, &mut split, 8.0, &t).unwrap();
        let y = split.last_state();
        assert!((y[0] - 8f64.sin()).abs() < 1e-9);
        assert!(split.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn error_scales_with_tolerance() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let err = |rel| {
            let y = integrate(&f, 0.0, [0.0, 1.0], 20.0, &tol(rel)).unwrap().last_state();
            (y[0] - 20f64.sin()).abs()
        };
        let coarse = err(1e-6);
        let fine = err(1e-9);
        assert!(fine < coarse / 50.0, "coarse {coarse:e} fine {fine:e}");
    }

    #[test]
    fn blow_up_reports_step_failure() {
        // y' = y², y(0)=1 blows up at t=1.
        let f = |_t: f64, y: &[f64; 1]| [y[0] * y[0]];
        let res = integrate(&f, 0.0, [1.0], 2.0, &tol(1e-8));
        assert!(matches!(res, Err(Error::StepFailure { .. })), "{res:?}");
    }
}
