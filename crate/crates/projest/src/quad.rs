//! Gauss-Legendre quadrature.
//!
//! Used throughout the test suites as an independent integration oracle; the
//! production coefficient paths never go through quadrature.

/// A Gauss-Legendre rule with `n` nodes on [-1, 1].
///
/// Exact for polynomials up to degree 2n - 1.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev initial guess, refined by Newton on P_n.
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, z);
                let step = p / dp;
                z -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, z);
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            weights[i] = w;
            nodes[n - 1 - i] = z;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrate `f` over [a, b].
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = crate::stats::KahanSum::new();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * x));
        }
        half * acc.value()
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Convenience: integrate with a fresh `n`-node rule.
pub fn integrate<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> f64 {
    GaussLegendre::new(n).integrate(a, b, f)
}

/// Adaptive 2-D quadrature over an axis-aligned rectangle.
///
/// Splits a cell into four quadrants when the tensor Gauss estimate changes
/// by more than the local tolerance; handles integrable corner singularities
/// by grading the subdivision toward them.
pub fn adaptive_2d<F: Fn(f64, f64) -> f64 + Copy>(
    f: F,
    ax: f64,
    bx: f64,
    ay: f64,
    by: f64,
    tol: f64,
) -> f64 {
    let rule = GaussLegendre::new(6);
    adaptive_2d_cell(f, ax, bx, ay, by, tol, &rule, 0)
}

fn tensor_cell<F: Fn(f64, f64) -> f64>(
    f: &F,
    ax: f64,
    bx: f64,
    ay: f64,
    by: f64,
    rule: &GaussLegendre,
) -> f64 {
    let hx = 0.5 * (bx - ax);
    let mx = 0.5 * (ax + bx);
    let hy = 0.5 * (by - ay);
    let my = 0.5 * (ay + by);
    let mut acc = crate::stats::KahanSum::new();
    for (&xi, &wi) in rule.nodes().iter().zip(rule.weights()) {
        for (&yj, &wj) in rule.nodes().iter().zip(rule.weights()) {
            acc.add(wi * wj * f(mx + hx * xi, my + hy * yj));
        }
    }
    hx * hy * acc.value()
}

fn adaptive_2d_cell<F: Fn(f64, f64) -> f64 + Copy>(
    f: F,
    ax: f64,
    bx: f64,
    ay: f64,
    by: f64,
    tol: f64,
    rule: &GaussLegendre,
    depth: u32,
) -> f64 {
    let coarse = tensor_cell(&f, ax, bx, ay, by, rule);
    let mx = 0.5 * (ax + bx);
    let my = 0.5 * (ay + by);
    let quads = [
        (ax, mx, ay, my),
        (mx, bx, ay, my),
        (ax, mx, my, by),
        (mx, bx, my, by),
    ];
    let fine: f64 = quads
        .iter()
        .map(|&(a, b, c, d)| tensor_cell(&f, a, b, c, d, rule))
        .sum();
    if (fine - coarse).abs() <= tol * fine.abs().max(1e-300) || depth >= 40 {
        return fine;
    }
    quads
        .iter()
        .map(|&(a, b, c, d)| adaptive_2d_cell(f, a, b, c, d, tol * 0.7, rule, depth + 1))
        .sum()
}
