//! Quadrature on polygonal curves and over `R^d`.

use std::sync::OnceLock;

use gauss_quad::{GaussHermite, GaussLegendre};
use nalgebra::DVector;

use crate::geometry::{compute_geometry, DiscreteCurve, Vec2};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, sorted by node.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(order).expect("order >= 2");
    let mut pairs: Vec<(f64, f64)> = (&rule).into_iter().copied().collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

fn gl4() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(4))
}

/// Quadrature nodes laid on every edge of a curve, with curvature and inner
/// normal interpolated linearly from the two endpoint vertices.
#[derive(Debug, Clone)]
pub struct CurveQuadrature {
    pub points: Vec<Vec2>,
    pub weights: Vec<f64>,
    pub curvature: Vec<f64>,
    pub normals: Vec<Vec2>,
}

impl CurveQuadrature {
    /// Four-point Gauss–Legendre rule per edge.
    pub fn new(curve: &DiscreteCurve) -> Self {
        Self::with_rule(curve, gl4())
    }

    pub fn with_order(curve: &DiscreteCurve, order: usize) -> Self {
        Self::with_rule(curve, &gauss_legendre(order))
    }

    fn with_rule(curve: &DiscreteCurve, rule: &[(f64, f64)]) -> Self {
        let geom = compute_geometry(curve);
        let n = curve.len();
        let m = curve.edge_count() * rule.len();
        let mut q = Self {
            points: Vec::with_capacity(m),
            weights: Vec::with_capacity(m),
            curvature: Vec::with_capacity(m),
            normals: Vec::with_capacity(m),
        };
        for i in 0..curve.edge_count() {
            let j = (i + 1) % n;
            let (a, b) = curve.edge(i);
            let half = 0.5 * (b - a).norm();
            for &(x, w) in rule {
                let s = 0.5 * (x + 1.0);
                q.points.push(a + (b - a) * s);
                q.weights.push(w * half);
                q.curvature
                    .push((1.0 - s) * geom.curvature[i] + s * geom.curvature[j]);
                let nu = geom.normals[i] * (1.0 - s) + geom.normals[j] * s;
                q.normals.push(nu.normalize());
            }
        }
        q
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `Σ w_q f(q)` over the nodes.
    pub fn integrate(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        (0..self.points.len()).map(|q| self.weights[q] * f(q)).sum()
    }
}

/// Tensor Gauss–Hermite rule for `∫_{R^d} f(x) dx`, built around a Gaussian
/// with the given center and per-axis standard deviation.
#[derive(Debug, Clone)]
pub struct HermiteGrid {
    pub points: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
}

impl HermiteGrid {
    pub fn new(center: &DVector<f64>, spread: f64, order: usize) -> Self {
        let rule = GaussHermite::new(order).expect("order >= 2");
        let pairs: Vec<(f64, f64)> = (&rule).into_iter().copied().collect();
        let d = center.len();
        let scale = std::f64::consts::SQRT_2 * spread;
        let total = pairs.len().pow(d as u32);
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            let mut x = center.clone();
            let mut w = 1.0;
            for (axis, &k) in idx.iter().enumerate() {
                let (node, weight) = pairs[k];
                x[axis] += scale * node;
                // undo the e^{-y^2} weight so plain integrands can be used
                w *= scale * weight * (node * node).exp();
            }
            points.push(x);
            weights.push(w);
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < pairs.len() {
                    break;
                }
                *slot = 0;
            }
        }
        Self { points, weights }
    }

    pub fn integrate(&self, f: impl Fn(&DVector<f64>) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;
    use approx::assert_relative_eq;

    #[test]
    fn gl4_is_exact_for_cubics_on_a_segment() {
        let c = shapes::segment(Vec2::new(1.0, 0.0), 1.5, 4).unwrap();
        let q = CurveQuadrature::new(&c);
        let got = q.integrate(|i| {
            let x = q.points[i].x;
            x * x * x - 2.0 * x * x + 1.0
        });
        // ∫_{-1.5}^{1.5} (x^3 - 2x^2 + 1) dx = -4·1.5^3/3 + 3
        assert_relative_eq!(got, -4.0 * 1.5f64.powi(3) / 3.0 + 3.0, epsilon = 1e-13);
    }

    #[test]
    fn weights_sum_to_length() {
        let c = shapes::ellipse(2.0, 1.0, 100).unwrap();
        let q = CurveQuadrature::new(&c);
        assert_relative_eq!(q.weights.iter().sum::<f64>(), c.length(), max_relative = 1e-14);
    }

    #[test]
    fn hermite_grid_integrates_offset_gaussian() {
        let grid = HermiteGrid::new(&DVector::from_vec(vec![0.0, 0.0]), 1.0, 40);
        let got = grid.integrate(|x| {
            let r2 = (x[0] - 0.7).powi(2) + (x[1] + 0.2).powi(2);
            (-r2 / 1.4).exp() / (std::f64::consts::PI * 1.4)
        });
        assert_relative_eq!(got, 1.0, epsilon = 1e-10);
    }
}
