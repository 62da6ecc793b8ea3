//! Polygonal plane curves and exact round spheres.
//!
//! A [`DiscreteCurve`] is a closed polygon stored counterclockwise, so the
//! left normal of the tangent is the inner unit normal and convex curves have
//! positive curvature (the unit circle has `k = 1`, `ν = -x`). Curvature at a
//! vertex is the signed inverse circumradius of the vertex and its two
//! neighbours; the measure attached to a vertex is its dual cell, half of the
//! two adjacent edges.

use std::f64::consts::PI;

use nalgebra::{DVector, Rotation2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

pub type Vec2 = Vector2<f64>;

/// Closed (or, for probes, open) polygonal curve in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    vertices: Vec<Vec2>,
    closed: bool,
}

impl DiscreteCurve {
    /// Builds a closed curve, reversing the vertex order if needed so that the
    /// curve is counterclockwise. Vertex 0 stays first.
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        validate(&vertices, true)?;
        let mut curve = Self {
            vertices,
            closed: true,
        };
        if curve.signed_area() < 0.0 {
            curve.vertices[1..].reverse();
        }
        Ok(curve)
    }

    /// Open polyline, used only as a probe for densities of non-closed sets
    /// (segments through the origin). Flows reject open curves.
    pub fn open(vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::TooFewVertices(vertices.len()));
        }
        validate(&vertices, false)?;
        Ok(Self {
            vertices,
            closed: false,
        })
    }

    /// Closed curve from already validated, counterclockwise vertices.
    pub(crate) fn from_raw(vertices: Vec<Vec2>) -> Self {
        Self {
            vertices,
            closed: true,
        }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn edge_count(&self) -> usize {
        if self.closed {
            self.vertices.len()
        } else {
            self.vertices.len() - 1
        }
    }

    /// Endpoints of edge `i`.
    pub fn edge(&self, i: usize) -> (Vec2, Vec2) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        (0..self.edge_count())
            .map(|i| {
                let (a, b) = self.edge(i);
                (b - a).norm()
            })
            .collect()
    }

    pub fn length(&self) -> f64 {
        self.edge_lengths().iter().sum()
    }

    pub fn min_edge(&self) -> f64 {
        self.edge_lengths().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_edge(&self) -> f64 {
        self.edge_lengths().into_iter().fold(0.0, f64::max)
    }

    /// Shoelace area; positive for counterclockwise curves.
    pub fn signed_area(&self) -> f64 {
        if !self.closed {
            return 0.0;
        }
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
    }

    /// Largest distance between two vertices.
    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max((a - b).norm_squared());
            }
        }
        d.sqrt()
    }

    /// Centroid of the arc-length measure.
    pub fn centroid(&self) -> Vec2 {
        let mut acc = Vec2::zeros();
        let mut total = 0.0;
        for i in 0..self.edge_count() {
            let (a, b) = self.edge(i);
            let l = (b - a).norm();
            acc += (a + b) * (0.5 * l);
            total += l;
        }
        acc / total
    }

    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::repeat(f64::INFINITY);
        let mut hi = Vec2::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Sum of exterior angles. Exactly `2π` for a simple counterclockwise polygon.
    pub fn total_turning(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i] - self.vertices[(i + n - 1) % n];
                let b = self.vertices[(i + 1) % n] - self.vertices[i];
                let cross = a.x * b.y - a.y * b.x;
                cross.atan2(a.dot(&b))
            })
            .sum()
    }

    /// Inserts the midpoint of every edge.
    pub fn refine_midpoints(&self) -> DiscreteCurve {
        let mut out = Vec::with_capacity(2 * self.vertices.len());
        for i in 0..self.edge_count() {
            let (a, b) = self.edge(i);
            out.push(a);
            out.push((a + b) * 0.5);
        }
        if !self.closed {
            out.push(*self.vertices.last().expect("non-empty"));
        }
        Self {
            vertices: out,
            closed: self.closed,
        }
    }

    pub fn map_vertices(&self, f: impl Fn(&Vec2) -> Vec2) -> DiscreteCurve {
        Self {
            vertices: self.vertices.iter().map(f).collect(),
            closed: self.closed,
        }
    }
}

fn validate(vertices: &[Vec2], closed: bool) -> Result<()> {
    let n = vertices.len();
    if closed && n < 3 {
        return Err(Error::TooFewVertices(n));
    }
    for (i, v) in vertices.iter().enumerate() {
        if !v.x.is_finite() || !v.y.is_finite() {
            return Err(Error::NonFinite(i));
        }
    }
    let edges = if closed { n } else { n - 1 };
    for i in 0..edges {
        let j = (i + 1) % n;
        if vertices[i] == vertices[j] {
            return Err(Error::DuplicateVertex(i, j));
        }
    }
    Ok(())
}

/// Per-vertex discrete geometry of a curve.
#[derive(Debug, Clone)]
pub struct CurveGeometry {
    /// Inner unit normals.
    pub normals: Vec<Vec2>,
    /// Signed curvature, positive where the curve turns left.
    pub curvature: Vec<f64>,
    /// Dual cell lengths; they partition the perimeter.
    pub dual_lengths: Vec<f64>,
    pub length: f64,
    pub centroid: Vec2,
    pub bbox: (Vec2, Vec2),
}

impl CurveGeometry {
    pub fn max_abs_curvature(&self) -> f64 {
        self.curvature.iter().fold(0.0, |m, k| m.max(k.abs()))
    }

    /// `Σ k_i · dual_i`, the discrete `∮ k dμ`.
    pub fn integrated_curvature(&self) -> f64 {
        self.curvature
            .iter()
            .zip(&self.dual_lengths)
            .map(|(k, d)| k * d)
            .sum()
    }
}

fn left_normal(t: Vec2) -> Vec2 {
    Vec2::new(-t.y, t.x)
}

/// Circumcircle curvature, inner normals and dual lengths at every vertex.
///
/// Collinear triples give `k = 0`. Endpoints of open curves get `k = 0` and
/// the normal of their only edge.
pub fn compute_geometry(curve: &DiscreteCurve) -> CurveGeometry {
    let v = curve.vertices();
    let n = v.len();
    let edges = curve.edge_lengths();
    let mut normals = Vec::with_capacity(n);
    let mut curvature = Vec::with_capacity(n);
    let mut dual_lengths = Vec::with_capacity(n);

    for i in 0..n {
        let interior = curve.is_closed() || (i > 0 && i + 1 < n);
        if !interior {
            let (a, b) = if i == 0 { (v[0], v[1]) } else { (v[n - 2], v[n - 1]) };
            normals.push(left_normal((b - a).normalize()));
            curvature.push(0.0);
            dual_lengths.push(0.5 * if i == 0 { edges[0] } else { edges[n - 2] });
            continue;
        }
        let prev = v[(i + n - 1) % n];
        let next = v[(i + 1) % n];
        let a = v[i] - prev;
        let b = next - v[i];
        let c = next - prev;
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let cross = a.x * b.y - a.y * b.x;
        let tangent = if lc > 1e-300 { c / lc } else { a / la };
        normals.push(left_normal(tangent));
        curvature.push(if lc > 1e-300 {
            2.0 * cross / (la * lb * lc)
        } else {
            0.0
        });
        let h_prev = edges[(i + edges.len() - 1) % edges.len()];
        dual_lengths.push(0.5 * (h_prev + edges[i % edges.len()]));
    }

    CurveGeometry {
        normals,
        curvature,
        dual_lengths,
        length: edges.iter().sum(),
        centroid: curve.centroid(),
        bbox: curve.bounding_box(),
    }
}

/// Rotation by an angle followed by a translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub angle: f64,
    pub translation: [f64; 2],
}

impl Isometry {
    pub fn identity() -> Self {
        Self {
            angle: 0.0,
            translation: [0.0, 0.0],
        }
    }

    pub fn new(angle: f64, translation: Vec2) -> Self {
        Self {
            angle,
            translation: [translation.x, translation.y],
        }
    }

    pub fn apply(&self, x: &Vec2) -> Vec2 {
        Rotation2::new(self.angle) * x + Vec2::new(self.translation[0], self.translation[1])
    }

    pub fn inverse(&self) -> Self {
        let t = Rotation2::new(-self.angle) * Vec2::new(self.translation[0], self.translation[1]);
        Self::new(-self.angle, -t)
    }
}

/// Maps every vertex by `x ↦ scale · L(x)`.
pub fn transform(curve: &DiscreteCurve, isometry: &Isometry, scale: f64) -> Result<DiscreteCurve> {
    ensure_positive("scale", scale)?;
    Ok(curve.map_vertices(|x| isometry.apply(x) * scale))
}

/// Area of the unit `n`-sphere in `R^{n+1}`.
pub fn unit_sphere_area(n: usize) -> f64 {
    // ω_0 = 2, ω_1 = 2π, ω_n = 2π ω_{n-2} / (n - 1)
    let mut even = 2.0;
    let mut odd = 2.0 * PI;
    let mut k = if n % 2 == 0 { 0 } else { 1 };
    while k + 2 <= n {
        k += 2;
        if n % 2 == 0 {
            even *= 2.0 * PI / (k - 1) as f64;
        } else {
            odd *= 2.0 * PI / (k - 1) as f64;
        }
    }
    if n % 2 == 0 {
        even
    } else {
        odd
    }
}

/// Round `n`-sphere in `R^{n+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereState {
    pub center: DVector<f64>,
    pub radius: f64,
    pub n: usize,
}

impl SphereState {
    pub fn new(center: DVector<f64>, radius: f64, n: usize) -> Result<Self> {
        ensure_positive("radius", radius)?;
        if n == 0 {
            return Err(Error::Invalid("sphere dimension must be at least 1".into()));
        }
        if center.len() != n + 1 {
            return Err(Error::Dimension {
                expected: n + 1,
                got: center.len(),
            });
        }
        Ok(Self { center, radius, n })
    }

    pub fn centered(radius: f64, n: usize) -> Result<Self> {
        Self::new(DVector::zeros(n + 1), radius, n)
    }

    pub fn mean_curvature(&self) -> f64 {
        self.n as f64 / self.radius
    }

    /// Norm of the second fundamental form, `√n / R`.
    pub fn second_fundamental_norm(&self) -> f64 {
        (self.n as f64).sqrt() / self.radius
    }

    pub fn area(&self) -> f64 {
        unit_sphere_area(self.n) * self.radius.powi(self.n as i32)
    }
}

/// Mean curvature (inner normal) and area of a round sphere.
pub fn sphere_geometry(s: &SphereState) -> (f64, f64) {
    (s.mean_curvature(), s.area())
}

/// Built-in test shapes, all counterclockwise.
pub mod shapes {
    use super::*;

    /// Regular `n`-gon inscribed in the circle, vertex 0 at angle 0.
    pub fn circle(center: Vec2, radius: f64, n: usize) -> Result<DiscreteCurve> {
        ensure_positive("radius", radius)?;
        let pts = (0..n)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / n as f64;
                center + Vec2::new(th.cos(), th.sin()) * radius
            })
            .collect();
        DiscreteCurve::new(pts)
    }

    /// Ellipse with semi-axes `a` (x) and `b` (y), sampled at equal arc length.
    pub fn ellipse(a: f64, b: f64, n: usize) -> Result<DiscreteCurve> {
        ensure_positive("a", a)?;
        ensure_positive("b", b)?;
        let param = |th: f64| Vec2::new(a * th.cos(), b * th.sin());
        let pts = equal_arclength(param, n, 64 * n.max(64));
        DiscreteCurve::new(pts)
    }

    /// Square of side `side` with corners rounded to `radius`, centered at the
    /// origin, sampled at equal arc length.
    pub fn rounded_square(side: f64, radius: f64, n: usize) -> Result<DiscreteCurve> {
        ensure_positive("side", side)?;
        ensure_positive("radius", radius)?;
        if 2.0 * radius >= side {
            return Err(Error::Invalid("corner radius must be below side / 2".into()));
        }
        let h = 0.5 * side - radius;
        let straight = 2.0 * h;
        let arc = 0.5 * PI * radius;
        let perimeter = 4.0 * (straight + arc);
        let corners = [
            Vec2::new(h, h),
            Vec2::new(-h, h),
            Vec2::new(-h, -h),
            Vec2::new(h, -h),
        ];
        // Start at the middle of the right side, walk counterclockwise.
        let point_at = |mut s: f64| -> Vec2 {
            s = s.rem_euclid(perimeter);
            let s = s + 0.5 * straight;
            let seg = straight + arc;
            let k = (s / seg).floor();
            let side_idx = (k as usize) % 4;
            let local = s - k * seg;
            let base = side_idx as f64 * 0.5 * PI;
            if local < straight {
                // along side `side_idx`, outward direction at angle `base`
                let dir = Vec2::new(base.cos(), base.sin());
                let tangent = Vec2::new(-base.sin(), base.cos());
                let start = corners[(side_idx + 3) % 4] + dir * radius;
                start + tangent * local
            } else {
                let th = base + (local - straight) / radius;
                corners[side_idx] + Vec2::new(th.cos(), th.sin()) * radius
            }
        };
        let pts = (0..n)
            .map(|i| point_at(perimeter * i as f64 / n as f64))
            .collect();
        DiscreteCurve::new(pts)
    }

    /// Axis-aligned square of side `side` centered at the origin (4 vertices).
    pub fn square(side: f64) -> Result<DiscreteCurve> {
        ensure_positive("side", side)?;
        let h = 0.5 * side;
        DiscreteCurve::new(vec![
            Vec2::new(h, -h),
            Vec2::new(h, h),
            Vec2::new(-h, h),
            Vec2::new(-h, -h),
        ])
    }

    /// Open segment from `-half_length·dir` to `half_length·dir` with `n` vertices.
    pub fn segment(dir: Vec2, half_length: f64, n: usize) -> Result<DiscreteCurve> {
        ensure_positive("half_length", half_length)?;
        let d = dir.normalize();
        let pts = (0..n)
            .map(|i| d * (-half_length + 2.0 * half_length * i as f64 / (n - 1) as f64))
            .collect();
        DiscreteCurve::open(pts)
    }

    fn equal_arclength(param: impl Fn(f64) -> Vec2, n: usize, dense: usize) -> Vec<Vec2> {
        let pts: Vec<Vec2> = (0..=dense)
            .map(|i| param(2.0 * PI * i as f64 / dense as f64))
            .collect();
        let mut cum = vec![0.0; dense + 1];
        for i in 1..=dense {
            cum[i] = cum[i - 1] + (pts[i] - pts[i - 1]).norm();
        }
        let total = cum[dense];
        let mut out = Vec::with_capacity(n);
        let mut j = 0;
        for i in 0..n {
            let target = total * i as f64 / n as f64;
            while cum[j + 1] < target {
                j += 1;
            }
            // Refine with the parameterization itself rather than the chord.
            let frac = (target - cum[j]) / (cum[j + 1] - cum[j]);
            let th = 2.0 * PI * (j as f64 + frac) / dense as f64;
            out.push(param(th));
        }
        out
    }
}
