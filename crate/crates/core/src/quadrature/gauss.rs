//! Gauss-Legendre rules on [-1, 1], computed once per order and cached.

use std::sync::OnceLock;

const MAX_ORDER: usize = 1024;

#[derive(Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    fn compute(order: usize) -> Self {
        let m = order;
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for i in 0..m.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    let (_, d) = legendre(m, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    /// ∫ₐᵇ f via this rule.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }

    /// Mapped nodes and weights on [a, b], appended to the output vectors.
    pub fn push_mapped(&self, a: f64, b: f64, nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            nodes.push(c + h * x);
            weights.push(w * h);
        }
    }
}

fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The cached Gauss-Legendre rule with `order` points (1 ≤ order ≤ 1024).
pub fn gauss_legendre(order: usize) -> &'static GaussRule {
    static CACHE: [OnceLock<GaussRule>; MAX_ORDER + 1] = [const { OnceLock::new() }; MAX_ORDER + 1];
    let order = order.clamp(1, MAX_ORDER);
    CACHE[order].get_or_init(|| GaussRule::compute(order))
}
