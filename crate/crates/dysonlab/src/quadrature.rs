//! Gauss-Legendre rules on `[0, 1]` and the collocation integration matrix.

use std::f64::consts::PI;

/// Legendre `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
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
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to `[0, 1]` together with the matrix
/// `S[i][l] = int_0^{x_i} L_l(x) dx` of integrated Lagrange cardinal functions.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub integration: Vec<Vec<f64>>,
}

impl UnitRule {
    pub fn gauss_legendre(q: usize) -> Self {
        let (x, w) = gauss_legendre(q);
        let nodes: Vec<f64> = x.iter().map(|v| 0.5 * (v + 1.0)).collect();
        let weights: Vec<f64> = w.iter().map(|v| 0.5 * v).collect();
        let mut integration = vec![vec![0.0; q]; q];
        for (i, row) in integration.iter_mut().enumerate() {
            let upper = nodes[i];
            // q-point rule on [0, upper] is exact for the degree q-1 cardinal functions.
            for (&xk, &wk) in nodes.iter().zip(&weights) {
                let y = upper * xk;
                for (l, slot) in row.iter_mut().enumerate() {
                    *slot += upper * wk * lagrange(&nodes, l, y);
                }
            }
        }
        Self {
            nodes,
            weights,
            integration,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn lagrange(nodes: &[f64], l: usize, x: f64) -> f64 {
    nodes
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != l)
        .map(|(_, &xk)| (x - xk) / (nodes[l] - xk))
        .product()
}

/// Composite Gauss-Legendre integration of a scalar function on `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize, q: usize) -> f64 {
    let (x, w) = gauss_legendre(q);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mut part = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            part += wi * f(lo + 0.5 * h * (xi + 1.0));
        }
        total += 0.5 * h * part;
    }
    total
}
