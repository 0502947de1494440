//! Gauss–Legendre quadrature.
//!
//! The solver's band-limited integrands are handled exactly by uniform
//! (rectangle-rule) grids in [`crate::basis`]; this module covers the
//! remaining integrals whose weights are *not* trigonometric polynomials:
//! `(z+ε)^β`-weighted norms on the channel, Hardy-inequality ratios, and
//! the analysis of manufactured forcings built from pointwise density
//! factors. Composite panels keep every integrand smooth inside each
//! panel, so the rules converge at machine precision for the orders used.

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
///
/// Newton iteration on the Legendre polynomial `P_n`, seeded with the
/// Chebyshev-like initial guess; accurate to round-off for `n ≤ 64`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence: p0 = 1, p1 = x, (k+1)P_{k+1} = (2k+1)xP_k - kP_{k-1}.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 1..n {
                let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// A one-dimensional quadrature rule: paired nodes and weights.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Composite Gauss–Legendre rule over consecutive panels
    /// `[edges[0], edges[1]], [edges[1], edges[2]], …` with `points`
    /// nodes per panel.
    pub fn composite(edges: &[f64], points: usize) -> Rule {
        assert!(edges.len() >= 2, "need at least one panel");
        let (xs, ws) = gauss_legendre(points);
        let mut nodes = Vec::with_capacity(points * (edges.len() - 1));
        let mut weights = Vec::with_capacity(points * (edges.len() - 1));
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            debug_assert!(b > a, "panel edges must increase");
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in xs.iter().zip(&ws) {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
        Rule { nodes, weights }
    }

    /// Uniform panels over `[a, b]`.
    pub fn uniform(a: f64, b: f64, panels: usize, points: usize) -> Rule {
        let edges: Vec<f64> = (0..=panels)
            .map(|i| a + (b - a) * i as f64 / panels as f64)
            .collect();
        Rule::composite(&edges, points)
    }

    /// Panels on `[0, 1]` geometrically graded toward `z = 0` with the
    /// innermost edge at `scale`. Resolves integrands with a boundary
    /// layer of width `scale` (e.g. `(z+ε)^k` with `k < 0` and small ε)
    /// without wasting nodes elsewhere. `scale ≥ 1` falls back to uniform
    /// panels.
    pub fn graded_unit(scale: f64, points: usize) -> Rule {
        if !(scale > 0.0) || scale >= 0.5 {
            return Rule::uniform(0.0, 1.0, 8, points);
        }
        let mut edges = vec![0.0, scale];
        let mut e = scale;
        while e < 0.5 {
            e *= 2.0;
            edges.push(e.min(1.0));
        }
        if *edges.last().unwrap() < 1.0 {
            edges.push(1.0);
        }
        Rule::composite(&edges, points)
    }

    /// Integrate a function over the rule's support.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}
