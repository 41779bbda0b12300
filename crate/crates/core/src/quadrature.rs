//! Gauss–Legendre quadrature and sphere areas.

use std::sync::OnceLock;

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
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
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Eight-point rule, shared.
    pub fn eight() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(8))
    }

    /// Composite rule with `panels` equal panels on `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        if b <= a || panels == 0 {
            return 0.0;
        }
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            let half = 0.5 * h;
            let mut s = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                s += w * f(mid + half * x);
            }
            total += s * half;
        }
        total
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Surface area of the unit sphere `S^k ⊂ R^{k+1}`, `2 π^{(k+1)/2} / Γ((k+1)/2)`.
pub fn sphere_area(k: usize) -> f64 {
    let s = (k + 1) as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(s) / libm::tgamma(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let g = GaussLegendre::new(5);
        let w: f64 = g.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
        let v = g.integrate(0.0, 2.0, 1, |x| x.powi(9));
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-10);
        let v = GaussLegendre::eight().integrate(0.0, std::f64::consts::PI, 4, f64::sin);
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_areas() {
        let pi = std::f64::consts::PI;
        assert!((sphere_area(1) - 2.0 * pi).abs() < 1e-13);
        assert!((sphere_area(2) - 4.0 * pi).abs() < 1e-13);
        assert!((sphere_area(3) - 2.0 * pi * pi).abs() < 1e-12);
    }
}
