//! Gauss rules on the unit segment and collapsed (Duffy) Gauss rules on the
//! reference triangle `{(x, y) : x, y >= 0, x + y <= 1}`.
//!
//! No rule has a point on a vertex or an edge, which keeps integrands that are
//! singular at mesh vertices (or along mesh lines) finite at every node.

/// Gauss–Legendre nodes and weights on `[0, 1]`, exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Newton on P_n starting from the Chebyshev-like guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` via the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Rule on the reference segment `[0, 1]`.
#[derive(Debug, Clone)]
pub struct SegmentRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl SegmentRule {
    pub fn with_degree(degree: usize) -> Self {
        let n = degree / 2 + 1;
        let (points, weights) = gauss_legendre(n);
        Self { points, weights, degree: 2 * n - 1 }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Rule on the reference triangle. Weights sum to 1/2.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    /// Collapsed tensor Gauss rule, exact for polynomials of total degree `degree`.
    pub fn triangle(degree: usize) -> Self {
        let n = (degree + 3) / 2;
        let (g, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (xi, wx) in g.iter().zip(&w) {
            for (eta, wy) in g.iter().zip(&w) {
                points.push([*xi, eta * (1.0 - xi)]);
                weights.push(wx * wy * (1.0 - xi));
            }
        }
        Self { points, weights, degree: 2 * n - 2 }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn segment_rules_are_exact() {
        for deg in 0..=15 {
            let r = SegmentRule::with_degree(deg);
            assert!(r.degree >= deg);
            for p in 0..=deg as i32 {
                let q: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(p)).sum();
                assert!((q - 1.0 / (p + 1) as f64).abs() < 1e-14, "deg {deg} p {p}");
            }
            assert!(r.points.iter().all(|&x| x > 0.0 && x < 1.0));
        }
    }

    #[test]
    fn triangle_rules_are_exact() {
        for deg in 0..=14 {
            let r = QuadratureRule::triangle(deg);
            assert!(r.degree >= deg);
            assert!((r.weights.iter().sum::<f64>() - 0.5).abs() < 1e-14);
            for a in 0..=deg as u32 {
                for b in 0..=(deg as u32 - a) {
                    let q: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    assert!((q - exact).abs() < 1e-14, "deg {deg} x^{a} y^{b}: {q} vs {exact}");
                }
            }
            assert!(r.points.iter().all(|p| p[0] > 0.0 && p[1] > 0.0 && p[0] + p[1] < 1.0));
        }
    }
}
