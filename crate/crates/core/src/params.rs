use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The coupling constant of `Δu = λ(1 − e^u)`.
///
/// Only `lambda` is stored; the planar exponent `l = λ − 2` and the mean
/// field coupling `α = 2/λ` are derived on demand so they can never drift
/// out of sync with it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ProblemParams {
    lambda: f64,
}

impl ProblemParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 2.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda must exceed 2 (got {lambda})"
            )));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Exponent of the planar weight `(1 + r²)^l`.
    pub fn l(&self) -> f64 {
        self.lambda - 2.0
    }

    pub fn alpha(&self) -> f64 {
        2.0 / self.lambda
    }

    /// Shooting value of the trivial branch, `ln(4λ) = ln(8/α)`.
    pub fn trivial_shot(&self) -> f64 {
        (4.0 * self.lambda).ln()
    }

    /// The solvability target `β(s) = 2λ`.
    pub fn target_beta(&self) -> f64 {
        2.0 * self.lambda
    }

    /// Planar mass below which the tail integral `∫ r^{2l+1-β}` diverges.
    pub fn integrability_threshold(&self) -> f64 {
        2.0 * self.l() + 2.0
    }

    /// Smallest `j` with `j(j+1) = λ` up to `tol`, if λ is a sphere eigenvalue.
    pub fn degenerate_mode(&self, tol: f64) -> Option<u32> {
        let j = ((1.0 + 4.0 * self.lambda).sqrt() - 1.0) / 2.0;
        let k = j.round();
        let eig = k * (k + 1.0);
        ((eig - self.lambda).abs() <= tol).then_some(k as u32)
    }
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    lambda: f64,
    l: f64,
    alpha: f64,
}

impl TryFrom<RawParams> for ProblemParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ProblemParams::new(raw.lambda)
    }
}

impl From<ProblemParams> for RawParams {
    fn from(p: ProblemParams) -> Self {
        RawParams {
            lambda: p.lambda,
            l: p.l(),
            alpha: p.alpha(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let p = ProblemParams::new(6.0).unwrap();
        assert_eq!(p.l(), 4.0);
        assert_eq!(p.alpha() * p.lambda(), 2.0);
        assert_eq!(p.target_beta(), 12.0);
        assert_eq!(p.integrability_threshold(), 10.0);
        assert!((p.trivial_shot() - 24f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_small_lambda() {
        for bad in [1.5, 2.0, -3.0, f64::NAN, f64::INFINITY] {
            let err = ProblemParams::new(bad).unwrap_err();
            assert!(err.to_string().contains("lambda must exceed 2"), "{err}");
        }
    }

    #[test]
    fn degenerate_modes() {
        let at = |x: f64| ProblemParams::new(x).unwrap().degenerate_mode(1e-12);
        assert_eq!(at(6.0), Some(2));
        assert_eq!(at(12.0), Some(3));
        assert_eq!(at(7.0), None);
        assert_eq!(at(5.0), None);
    }

    #[test]
    fn serde_recomputes_derived_fields() {
        let p = ProblemParams::new(7.0).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"l\":5.0"));
        let back: ProblemParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"lambda":1.0,"l":-1.0,"alpha":2.0}"#;
        assert!(serde_json::from_str::<ProblemParams>(bad).is_err());
    }
}
