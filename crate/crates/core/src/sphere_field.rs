//! Axisymmetric functions on the unit sphere, sampled on a Gauss–Legendre
//! grid in `x₃`.
//!
//! The colatitude `θ` is measured from the pole `x₃ = -1`, which is where
//! the stereographic projection from `N = (0, 0, 1)` puts the planar origin.
//! So `x₃ = -cos θ`, `r = tan(θ/2)` and `ln r = atanh(x₃)`. Integrals use the
//! raw area element (total `4π`): `∫ f dA = 2π Σ_k w_k f(x₃,k)`.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::branch_tracer::BranchRoot;
use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::quadrature::GaussLegendre;
use crate::radial_ode::{integrate_radial, RadialSolution, ShootingConfig};

pub const MIN_THETA_NODES: usize = 64;
/// Enough for the most concentrated branch solution in `(4, 8]`.
pub const DEFAULT_THETA_NODES: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereField {
    pub params: ProblemParams,
    /// Colatitudes from the `x₃ = -1` pole, ascending in `(0, π)`.
    pub theta_nodes: Vec<f64>,
    pub u_values: Vec<f64>,
    /// `du/dθ`.
    pub u_prime_values: Vec<f64>,
    /// Gauss–Legendre weights in `x₃`, summing to 2.
    pub weights: Vec<f64>,
}

impl SphereField {
    /// Samples `profile(θ) -> (u, du/dθ)` on an `n`-node grid.
    pub fn from_profile(
        params: ProblemParams,
        n_theta: usize,
        profile: impl Fn(f64) -> (f64, f64),
    ) -> Self {
        let gl = GaussLegendre::new(n_theta);
        let theta_nodes: Vec<f64> = gl.nodes.iter().map(|&x| (-x).acos()).collect();
        let (u_values, u_prime_values) = theta_nodes.iter().map(|&th| profile(th)).unzip();
        Self {
            params,
            theta_nodes,
            u_values,
            u_prime_values,
            weights: gl.weights,
        }
    }

    pub fn zero(params: ProblemParams, n_theta: usize) -> Self {
        Self::from_profile(params, n_theta, |_| (0.0, 0.0))
    }

    pub fn len(&self) -> usize {
        self.theta_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_nodes.is_empty()
    }

    /// `x₃` at every node (ascending; these are the Gauss–Legendre nodes).
    pub fn x3(&self) -> Vec<f64> {
        self.theta_nodes.iter().map(|th| -th.cos()).collect()
    }

    /// `∫_{S²} f dA` for an axisymmetric integrand given per node.
    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        2.0 * PI
            * self
                .weights
                .iter()
                .enumerate()
                .map(|(k, w)| w * f(k))
                .sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    /// `(1/4π) ∫ e^u dA`; equals 1 for a normalized solution.
    pub fn mean_exp(&self) -> f64 {
        self.integrate(|k| self.u_values[k].exp()) / (4.0 * PI)
    }

    /// Sphere Laplacian `Δu = d/dx₃ (sin θ · du/dθ)`, one spectral
    /// derivative of the sampled flux. Differentiating `u` twice would
    /// amplify interpolation noise by another factor of `n²`.
    pub fn laplacian(&self) -> Vec<f64> {
        let gl = GaussLegendre {
            nodes: self.x3(),
            weights: self.weights.clone(),
        };
        let flux = DVector::from_iterator(
            self.len(),
            self.theta_nodes
                .iter()
                .zip(&self.u_prime_values)
                .map(|(th, up)| th.sin() * up),
        );
        (gl.differentiation_matrix() * flux).iter().copied().collect()
    }

    /// `sup_k |Δu + λ(e^u - 1)|` with the spectral Laplacian.
    pub fn equation_residual(&self) -> f64 {
        let lambda = self.params.lambda();
        self.laplacian()
            .iter()
            .zip(&self.u_values)
            .map(|(lap, u)| (lap + lambda * (u.exp() - 1.0)).abs())
            .fold(0.0, f64::max)
    }

    /// `|du/dθ|` at the nodes nearest each pole.
    pub fn pole_slopes(&self) -> (f64, f64) {
        (
            self.u_prime_values[0].abs(),
            self.u_prime_values[self.len() - 1].abs(),
        )
    }

    /// `u + δu` with `δu` given as a profile in `θ`.
    pub fn perturbed(&self, delta: impl Fn(f64) -> (f64, f64)) -> Self {
        let mut out = self.clone();
        for (k, &th) in self.theta_nodes.iter().enumerate() {
            let (du, dup) = delta(th);
            out.u_values[k] += du;
            out.u_prime_values[k] += dup;
        }
        out
    }

    /// Rows of `theta,u,u_prime,weight`.
    pub fn rows(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        (0..self.len()).map(|k| {
            [
                self.theta_nodes[k],
                self.u_values[k],
                self.u_prime_values[k],
                self.weights[k],
            ]
        })
    }
}

/// Maps a certified root and its trajectory back to the sphere.
pub fn reconstruct(root: &BranchRoot, solution: &RadialSolution, n_theta: usize) -> Result<SphereField> {
    if (root.s_root - solution.s).abs() > 1e-12 * (1.0 + root.s_root.abs()) {
        return Err(Error::TrajectoryMismatch {
            trajectory: solution.s,
            root: root.s_root,
        });
    }
    reconstruct_trajectory(solution, n_theta)
}

/// `u(θ) = w(tan(θ/2)) + λ ln(1 + tan²(θ/2)) - ln(4λ)` for any trajectory,
/// root or not. Non-roots give fields that are singular at `x₃ = 1`; the
/// validators are expected to reject them.
pub fn reconstruct_trajectory(solution: &RadialSolution, n_theta: usize) -> Result<SphereField> {
    if n_theta < MIN_THETA_NODES {
        return Err(Error::InvalidParameter(format!(
            "n_theta must be at least {MIN_THETA_NODES} (got {n_theta})"
        )));
    }
    let gl = GaussLegendre::new(n_theta);
    let mut u_values = Vec::with_capacity(n_theta);
    let mut u_prime_values = Vec::with_capacity(n_theta);
    for &x in &gl.nodes {
        let t = x.atanh();
        let (u, u_t) = solution.eval_shifted(t).ok_or(Error::GridExceedsTrajectory {
            r: t.exp(),
            r_end: solution.r_end(),
        })?;
        // dt/dθ = 1/sin θ
        let sin_theta = (1.0 - x * x).sqrt();
        u_values.push(u);
        u_prime_values.push(u_t / sin_theta);
    }
    Ok(SphereField {
        params: solution.params,
        theta_nodes: gl.nodes.iter().map(|&x| (-x).acos()).collect(),
        u_values,
        u_prime_values,
        weights: gl.weights,
    })
}

/// Shoots from `s` at reconstruction tolerances and samples the result.
pub fn field_at(params: &ProblemParams, s: f64, n_theta: usize) -> Result<SphereField> {
    let solution = integrate_radial(params, s, &ShootingConfig::for_reconstruction())?;
    reconstruct_trajectory(&solution, n_theta)
}

/// Curvature of `e^u g₀` by the conformal formula `K = e^{-u}(1 - Δu/2)`,
/// with `Δu` taken spectrally from the field.
pub fn gauss_curvature(field: &SphereField) -> Vec<f64> {
    field
        .laplacian()
        .iter()
        .zip(&field.u_values)
        .map(|(lap, u)| (-u).exp() * (1.0 - 0.5 * lap))
        .collect()
}

/// The same curvature with `Δu = λ(1 - e^u)` substituted:
/// `K = λ/2 + (1 - λ/2) e^{-u}`, which is `3 - 2e^{-u}` at `λ = 6`.
pub fn gauss_curvature_from_equation(field: &SphereField) -> Vec<f64> {
    let half = 0.5 * field.params.lambda();
    field
        .u_values
        .iter()
        .map(|u| half + (1.0 - half) * (-u).exp())
        .collect()
}

/// `∫ K dA_{e^u g₀}`; `4π` by Gauss–Bonnet.
pub fn total_curvature(field: &SphereField, curvature: &[f64]) -> f64 {
    field.integrate(|k| curvature[k] * field.u_values[k].exp())
}
