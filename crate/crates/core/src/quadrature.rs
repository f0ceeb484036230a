//! Gauss-Legendre rules and composite panels.

use std::f64::consts::PI;

/// Nodes and weights of an n-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on the Legendre recurrence,
    /// seeded with the Tricomi estimate of each root.
    pub fn new(order: usize) -> Self {
        assert!(order > 0, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
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

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto `[a, b]`, in ascending order.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite rule: one `rule` per panel between consecutive breakpoints.
/// Breakpoints are sorted and deduplicated; empty panels are skipped.
pub fn composite_nodes(rule: &GaussLegendre, breakpoints: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = breakpoints.to_vec();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
    cuts.windows(2).filter(|w| w[1] > w[0]).flat_map(|w| rule.mapped(w[0], w[1]).collect::<Vec<_>>()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 64, 127] {
            let rule = GaussLegendre::new(n);
            let s: f64 = rule.weights().iter().sum();
            assert_relative_eq!(s, 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn three_point_rule_matches_closed_form() {
        let rule = GaussLegendre::new(3);
        let r = (0.6f64).sqrt();
        assert_relative_eq!(rule.nodes()[0], -r, epsilon = 1e-15);
        assert_relative_eq!(rule.nodes()[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(rule.weights()[0], 5.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(rule.weights()[1], 8.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let rule = GaussLegendre::new(8);
        for deg in 0..16i32 {
            let got = rule.integrate(0.0, 2.0, |x| x.powi(deg));
            let exact = 2f64.powi(deg + 1) / (deg as f64 + 1.0);
            assert_relative_eq!(got, exact, max_relative = 1e-13);
        }
    }

    #[test]
    fn composite_handles_kinks() {
        let rule = GaussLegendre::new(20);
        let nodes = composite_nodes(&rule, &[0.0, 1.0, 1.0, 3.0]);
        assert_eq!(nodes.len(), 40);
        let got: f64 = nodes.iter().map(|&(x, w)| w * (x - 1.0).abs()).sum();
        assert_relative_eq!(got, 0.5 + 2.0, epsilon = 1e-13);
        assert!(nodes.windows(2).all(|p| p[0].0 < p[1].0));
    }
}
