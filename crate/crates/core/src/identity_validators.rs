//! Integral identities every solution of `Δu = λ(1 - e^u)` satisfies,
//! evaluated on an axisymmetric [`SphereField`] as signed residuals.
//!
//! The identities are exact in the continuum; the tolerances below are the
//! quadrature and integrator error budget, not properties of the equation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere_field::SphereField;

pub const KW_FIRST_ORDER_TOL: f64 = 1e-6;
pub const SECOND_ORDER_TOL: f64 = 1e-5;
pub const TRIPLE_PRODUCT_TOL: f64 = 1e-8;
pub const NORMALIZATION_TOL: f64 = 1e-7;
pub const RIGIDITY_TOL: f64 = 1e-6;

/// Azimuthal nodes used to check the transverse first moments.
const AZIMUTHAL_NODES: usize = 16;

/// `∫ x₃ e^u dA`. Must vanish for every solution with `λ ≠ 2`.
pub fn check_kw_first_order(field: &SphereField) -> f64 {
    let x3 = field.x3();
    field.integrate(|k| x3[k] * field.u_values[k].exp())
}

/// `(∫ x₁ e^u dA, ∫ x₂ e^u dA)` with the azimuth integrated by an
/// equispaced rule. Zero by symmetry up to rounding.
pub fn check_kw_transverse(field: &SphereField) -> [f64; 2] {
    let n = AZIMUTHAL_NODES;
    let (mut c, mut s) = (0.0, 0.0);
    for j in 0..n {
        let phi = 2.0 * PI * (j as f64 + 0.5) / n as f64;
        c += phi.cos();
        s += phi.sin();
    }
    let dphi = 2.0 * PI / n as f64;
    // ∫ sinθ e^u dx₃, the polar part of both moments.
    let polar: f64 = field
        .theta_nodes
        .iter()
        .zip(&field.weights)
        .zip(&field.u_values)
        .map(|((th, w), u)| w * th.sin() * u.exp())
        .sum();
    [c * dphi * polar, s * dphi * polar]
}

/// `∫ F e^u dA` with `F = 3x₃² - 1`.
pub fn second_harmonic_moment(field: &SphereField) -> f64 {
    let x3 = field.x3();
    field.integrate(|k| (3.0 * x3[k] * x3[k] - 1.0) * field.u_values[k].exp())
}

/// `3 ∫ (1 - x₃²) |∇u|² dA`.
pub fn axial_energy(field: &SphereField) -> f64 {
    let x3 = field.x3();
    field.integrate(|k| 3.0 * (1.0 - x3[k] * x3[k]) * field.u_prime_values[k].powi(2))
}

/// Both sides of `λ(6 - λ) ∫ F e^u = ½ ∫ (2∇²F - ΔF g)(∇u, ∇u)` for
/// `F = 3x₃² - 1`. For axisymmetric `u` the right side reduces to
/// `3 ∫ (1 - x₃²)|∇u|²`. Both use the same grid.
pub fn check_second_order(field: &SphereField) -> (f64, f64) {
    let lambda = field.params.lambda();
    let lhs = lambda * (6.0 - lambda) * second_harmonic_moment(field);
    (lhs, axial_energy(field))
}

/// `|lhs - rhs| / max(|lhs|, |rhs|, 1)`.
///
/// Relative once the sides are of order one, absolute below that, so the
/// trivial solution (both sides zero) is not judged on rounding noise.
pub fn second_order_gap(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
}

/// `∫ X_i u X_j u X_k u e^u dA` for one index triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleProduct {
    pub indices: [u8; 3],
    /// Closed-form azimuthal factor.
    pub azimuthal: f64,
    /// `∫ (u_θ)³ e^u dx₃`, shared by every triple without index 3.
    pub polar: f64,
    pub value: f64,
}

/// `∫_0^{2π} cos^a φ sin^b φ dφ`.
fn azimuthal_moment(a: u32, b: u32) -> f64 {
    if a % 2 == 1 || b % 2 == 1 {
        return 0.0;
    }
    let double_fact = |n: i64| (1..=n).rev().step_by(2).map(|k| k as f64).product::<f64>();
    2.0 * PI * double_fact(a as i64 - 1) * double_fact(b as i64 - 1) / double_fact((a + b) as i64)
}

/// All ten index triples `i ≤ j ≤ k` over the Killing fields
/// `X₁ = x₂∂₃ - x₃∂₂`, `X₂ = x₃∂₁ - x₁∂₃`, `X₃ = x₁∂₂ - x₂∂₁`.
///
/// For `u = u(x₃)`: `X₁u = sin φ u_θ`, `X₂u = -cos φ u_θ`, `X₃u = 0`.
pub fn check_triple_products(field: &SphereField) -> Vec<TripleProduct> {
    let polar: f64 = field
        .weights
        .iter()
        .zip(&field.u_values)
        .zip(&field.u_prime_values)
        .map(|((w, u), up)| w * up.powi(3) * u.exp())
        .sum();
    let mut out = Vec::with_capacity(10);
    for i in 1..=3u8 {
        for j in i..=3 {
            for k in j..=3 {
                let idx = [i, j, k];
                let (azimuthal, polar) = if idx.contains(&3) {
                    (0.0, 0.0)
                } else {
                    let sines = idx.iter().filter(|&&m| m == 1).count() as u32;
                    let cosines = 3 - sines;
                    let sign = if cosines.is_multiple_of(2) { 1.0 } else { -1.0 };
                    (sign * azimuthal_moment(cosines, sines), polar)
                };
                out.push(TripleProduct {
                    indices: idx,
                    azimuthal,
                    polar,
                    value: azimuthal * polar,
                });
            }
        }
    }
    out
}

/// `3 ∫ (1 - x₃²)|∇u|² dA` at `λ = 6`, where the second-order identity
/// forces it to vanish.
pub fn check_axisym_rigidity_at_6(field: &SphereField) -> Result<f64> {
    let lambda = field.params.lambda();
    if lambda != 6.0 {
        return Err(Error::InvalidParameter(format!(
            "rigidity check applies at lambda = 6 only (got {lambda})"
        )));
    }
    Ok(axial_energy(field))
}

pub fn normalization_residual(field: &SphereField) -> f64 {
    (field.mean_exp() - 1.0).abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub field_id: String,
    pub lambda: f64,
    pub kw_first_order: f64,
    pub kw_transverse: [f64; 2],
    pub second_order_lhs: f64,
    pub second_order_rhs: f64,
    pub second_order_residual: f64,
    /// `∫ F e^u dA`, whose sign must match `6 - λ` on nonzero solutions.
    pub second_harmonic_moment: f64,
    pub triple_product_residuals: Vec<TripleProduct>,
    pub normalization_residual: f64,
    /// Present only at `λ = 6`.
    pub rigidity_energy: Option<f64>,
    pub partial: bool,
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        !self.partial && self.checks.iter().all(|c| c.passed)
    }

    /// Largest `value / tolerance` over failed checks: how far a rejected
    /// field misses.
    pub fn failure_margin(&self) -> Option<f64> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.value / c.tolerance)
            .reduce(f64::max)
    }
}

/// Runs every check and collects pass/fail outcomes.
pub fn validate(field: &SphereField, field_id: impl Into<String>) -> ValidationReport {
    let lambda = field.params.lambda();
    let kw = check_kw_first_order(field);
    let kw_t = check_kw_transverse(field);
    let (lhs, rhs) = check_second_order(field);
    let gap = second_order_gap(lhs, rhs);
    let triples = check_triple_products(field);
    let norm = normalization_residual(field);
    let rigidity = check_axisym_rigidity_at_6(field).ok();

    let mut checks = Vec::new();
    let mut push = |name: &str, value: f64, tolerance: f64| {
        checks.push(CheckOutcome {
            name: name.to_string(),
            value,
            tolerance,
            passed: value.is_finite() && value <= tolerance,
        })
    };
    push("kw_first_order", kw.abs(), KW_FIRST_ORDER_TOL);
    push("kw_transverse", kw_t[0].abs().max(kw_t[1].abs()), KW_FIRST_ORDER_TOL);
    push("second_order", gap, SECOND_ORDER_TOL);
    let worst_triple = triples.iter().map(|t| t.value.abs()).fold(0.0, f64::max);
    push("triple_products", worst_triple, TRIPLE_PRODUCT_TOL);
    push("normalization", norm, NORMALIZATION_TOL);
    if let Some(e) = rigidity {
        push("axisym_rigidity", e, RIGIDITY_TOL);
    }

    let finite = [kw, kw_t[0], kw_t[1], lhs, rhs, gap, norm]
        .iter()
        .chain(triples.iter().map(|t| &t.value))
        .all(|v| v.is_finite());
    ValidationReport {
        field_id: field_id.into(),
        lambda,
        kw_first_order: kw,
        kw_transverse: kw_t,
        second_order_lhs: lhs,
        second_order_rhs: rhs,
        second_order_residual: gap,
        second_harmonic_moment: second_harmonic_moment(field),
        triple_product_residuals: triples,
        normalization_residual: norm,
        rigidity_energy: rigidity,
        partial: !finite,
        checks,
    }
}
