//! Independent solver for the axisymmetric sphere problem
//! `u'' + cot θ u' + λ(e^u - 1) = 0` on `(0, π)`.
//!
//! In `x = x₃` the operator is `((1 - x²) u_x)_x`, which collocated at
//! Gauss–Legendre nodes is exact on polynomials of degree `< n`. The poles
//! are never nodes and regularity there comes with the polynomial basis,
//! so the discrete system is square without boundary rows. The nodes are
//! those of [`SphereField`], so no interpolation is needed to compare with
//! the shooting pipeline.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::quadrature::GaussLegendre;
use crate::sphere_field::{SphereField, MIN_THETA_NODES};

/// Guesses closer than this to `u ≡ 0` at a degenerate `λ` are refused.
const DEGENERATE_GUESS_RADIUS: f64 = 1e-6;

const MAX_BACKTRACKS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollocationProblem {
    pub params: ProblemParams,
    pub n_nodes: usize,
    pub theta_nodes: Vec<f64>,
    pub initial_guess: Vec<f64>,
    /// Initial Newton step fraction in `(0, 1]`.
    pub damping: f64,
    pub max_iter: usize,
    pub residual_tol: f64,
}

impl CollocationProblem {
    /// Problem on the `n`-node grid with `guess(θ)` as the starting iterate.
    pub fn new(params: ProblemParams, n_nodes: usize, guess: impl Fn(f64) -> f64) -> Self {
        let gl = GaussLegendre::new(n_nodes);
        let theta_nodes: Vec<f64> = gl.nodes.iter().map(|&x| (-x).acos()).collect();
        let initial_guess = theta_nodes.iter().map(|&th| guess(th)).collect();
        Self {
            params,
            n_nodes,
            theta_nodes,
            initial_guess,
            damping: 1.0,
            max_iter: 50,
            residual_tol: 1e-10,
        }
    }

    /// Starts from the values of an existing field on its own grid.
    pub fn from_field(field: &SphereField) -> Self {
        Self {
            params: field.params,
            n_nodes: field.len(),
            theta_nodes: field.theta_nodes.clone(),
            initial_guess: field.u_values.clone(),
            damping: 1.0,
            max_iter: 50,
            residual_tol: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_nodes < MIN_THETA_NODES {
            return bad(format!("n_nodes must be at least {MIN_THETA_NODES} (got {})", self.n_nodes));
        }
        if self.theta_nodes.len() != self.n_nodes || self.initial_guess.len() != self.n_nodes {
            return bad("node and guess lengths must equal n_nodes".into());
        }
        if !self.theta_nodes.iter().all(|&t| t > 0.0 && t < std::f64::consts::PI) {
            return bad("collocation nodes must be interior to (0, pi)".into());
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad(format!("damping must lie in (0, 1] (got {})", self.damping));
        }
        if !(self.residual_tol > 0.0) || self.max_iter == 0 {
            return bad("residual_tol and max_iter must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollocationSolution {
    pub field: SphereField,
    pub iterations: usize,
    /// Sup-norm of the discrete residual before each Newton step and after
    /// the last one.
    pub residual_history: Vec<f64>,
}

fn residual(lap: &DMatrix<f64>, u: &DVector<f64>, lambda: f64) -> DVector<f64> {
    lap * u + u.map(|v| lambda * v.exp_m1())
}

pub fn solve_bvp(problem: &CollocationProblem) -> Result<CollocationSolution> {
    problem.validate()?;
    let params = problem.params;
    let lambda = params.lambda();
    let gl = GaussLegendre::new(problem.n_nodes);
    let lap = gl.sphere_laplacian();

    let mut u = DVector::from_column_slice(&problem.initial_guess);
    let mut res = residual(&lap, &u, lambda);
    let mut norm = res.amax();
    let mut history = vec![norm];

    if norm > problem.residual_tol {
        let mode = params.degenerate_mode(1e-12);
        if mode.is_some() && u.amax() <= DEGENERATE_GUESS_RADIUS {
            return Err(Error::SingularJacobian { lambda, mode });
        }
    }

    let mut iterations = 0;
    while norm > problem.residual_tol {
        if iterations == problem.max_iter {
            return Err(Error::NoConvergence { history });
        }
        let mut jac = lap.clone();
        for i in 0..u.len() {
            jac[(i, i)] += lambda * u[i].exp();
        }
        let step = jac
            .lu()
            .solve(&(-&res))
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or(Error::SingularJacobian {
                lambda,
                mode: params.degenerate_mode(1e-12),
            })?;

        let mut frac = problem.damping;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = &u + frac * &step;
            let trial_res = residual(&lap, &trial, lambda);
            let trial_norm = trial_res.amax();
            if trial_norm.is_finite() && trial_norm < norm {
                accepted = Some((trial, trial_res, trial_norm));
                break;
            }
            frac *= 0.5;
        }
        let Some((trial, trial_res, trial_norm)) = accepted else {
            return Err(Error::NoConvergence { history });
        };
        u = trial;
        res = trial_res;
        norm = trial_norm;
        history.push(norm);
        iterations += 1;
    }

    let du_dx = gl.differentiation_matrix() * &u;
    let field = SphereField {
        params,
        u_prime_values: problem
            .theta_nodes
            .iter()
            .zip(du_dx.iter())
            .map(|(th, d)| d * th.sin())
            .collect(),
        theta_nodes: problem.theta_nodes.clone(),
        u_values: u.iter().copied().collect(),
        weights: gl.weights,
    };
    Ok(CollocationSolution {
        field,
        iterations,
        residual_history: history,
    })
}

/// Smallest `n_modes` eigenvalues of the discretized `-(d²/dθ² + cot θ d/dθ)`
/// on axisymmetric functions, using `max(64, 4 n_modes)` nodes.
pub fn linearized_spectrum(n_modes: usize) -> Result<Vec<f64>> {
    linearized_spectrum_on(n_modes, MIN_THETA_NODES.max(4 * n_modes))
}

pub fn linearized_spectrum_on(n_modes: usize, n_nodes: usize) -> Result<Vec<f64>> {
    if n_modes == 0 || 4 * n_modes > n_nodes {
        return Err(Error::InvalidParameter(format!(
            "need 0 < n_modes <= n_nodes/4 (got {n_modes} modes on {n_nodes} nodes)"
        )));
    }
    let gl = GaussLegendre::new(n_nodes);
    let lap = gl.sphere_laplacian();
    // Self-adjoint in the quadrature inner product: conjugate by W^{1/2}.
    let sq: Vec<f64> = gl.weights.iter().map(|w| w.sqrt()).collect();
    let sym = DMatrix::from_fn(n_nodes, n_nodes, |i, j| {
        let a = -lap[(i, j)] * sq[i] / sq[j];
        let b = -lap[(j, i)] * sq[j] / sq[i];
        0.5 * (a + b)
    });
    let mut eig: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    eig.truncate(n_modes);
    Ok(eig)
}

/// The mode `j` with `j(j+1) = λ` among the given eigenvalues, if any.
pub fn degenerate_mode(params: &ProblemParams, eigenvalues: &[f64]) -> Option<usize> {
    let lambda = params.lambda();
    eigenvalues
        .iter()
        .position(|e| (e - lambda).abs() <= 1e-6 * lambda.max(1.0))
}
