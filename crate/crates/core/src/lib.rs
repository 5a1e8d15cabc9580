//! Axially symmetric solutions of the mean field equation `Δu = λ(1 − e^u)`
//! on the unit sphere.
//!
//! Solutions are found by radial shooting in the stereographic plane: every
//! shooting value `s` produces a planar trajectory with asymptotic slope
//! `β(s)`, and sphere solutions correspond exactly to roots of `β(s) = 2λ`.
//! Roots are mapped back to the sphere, checked against the integral
//! identities every solution must satisfy, and cross-validated by an
//! independent spectral collocation solver.

pub mod branch_tracer;
pub mod collocation;
mod dopri;
pub mod error;
pub mod identity_validators;
pub mod params;
pub mod quadrature;
pub mod radial_ode;
pub mod sphere_field;

pub use error::{Error, Result};
pub use params::ProblemParams;
pub use radial_ode::{compute_beta, integrate_radial, RadialSolution, ShootingConfig};
