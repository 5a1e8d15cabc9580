//! Gauss–Legendre rules in `x = cos θ` and the polynomial collocation
//! operators built on them.

use nalgebra::DMatrix;

/// Legendre polynomial `P_n(x)` and its derivative, by the three-term
/// recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    // P'_n = n (x P_n - P_{n-1}) / (x² - 1); only used strictly inside (-1, 1).
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_{-1}^{1} f(x) dx`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Barycentric interpolation weights, `(-1)^j sqrt((1 - x_j²) w_j)`.
    pub fn barycentric_weights(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(j, (&x, &w))| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * ((1.0 - x * x) * w).sqrt()
            })
            .collect()
    }

    /// First-derivative matrix of the interpolating polynomial.
    pub fn differentiation_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let v = self.barycentric_weights();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let dij = (v[j] / v[i]) / (self.nodes[i] - self.nodes[j]);
                    d[(i, j)] = dij;
                    diag -= dij;
                }
            }
            d[(i, i)] = diag;
        }
        d
    }

    /// Axisymmetric sphere Laplacian `(1 - x²) ∂²ₓ - 2x ∂ₓ` on the nodes.
    ///
    /// Exact on polynomials of degree `< n`, so the pole regularity of
    /// `u` is built in and no boundary rows are needed.
    pub fn sphere_laplacian(&self) -> DMatrix<f64> {
        let d = self.differentiation_matrix();
        let d2 = &d * &d;
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| {
            let x = self.nodes[i];
            (1.0 - x * x) * d2[(i, j)] - 2.0 * x * d[(i, j)]
        })
    }
}
