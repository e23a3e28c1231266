/// Rule for `∫₀^{λmax} F(λ) dλ` with nodes `λ_i = λmax·s_i³`, `s_i = i/(n−1)`,
/// trapezoid weights in `s` times the Jacobian `3λmax·s²`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedQuadrature {
    pub lambda_max: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GradedQuadrature {
    pub fn new(lambda_max: f64, n_nodes: usize) -> Self {
        assert!(n_nodes >= 2, "graded rule needs at least two nodes");
        let ds = 1.0 / (n_nodes - 1) as f64;
        let mut nodes = Vec::with_capacity(n_nodes);
        let mut weights = Vec::with_capacity(n_nodes);
        for i in 0..n_nodes {
            let s = i as f64 * ds;
            let trap = if i == 0 || i + 1 == n_nodes { 0.5 } else { 1.0 };
            nodes.push(lambda_max * s * s * s);
            weights.push(trap * ds * 3.0 * lambda_max * s * s);
        }
        Self {
            lambda_max,
            nodes,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&l, &w)| w * f(l)).sum()
    }

    /// `∫ F(λ) cos(λ t) dλ` for each `t`, given `F` sampled on the nodes.
    pub fn cosine_integrals(&self, samples: &[f64], times: &[f64]) -> Vec<f64> {
        assert_eq!(samples.len(), self.len());
        times
            .iter()
            .map(|&t| {
                self.nodes
                    .iter()
                    .zip(&self.weights)
                    .zip(samples)
                    .map(|((&l, &w), &v)| w * v * (l * t).cos())
                    .sum()
            })
            .collect()
    }
}
