//! Blow-up analysis at the singular time: parabolic rescaling, type
//! classification, limit identification and the breather test.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::density::{self, DensityOptions, SigmaLimit};
use crate::error::{Error, Result};
use crate::flow::{frame_at, FlowParams, Trajectory};
use crate::geometry::{compute_geometry, shapes, transform, DiscreteCurve, Isometry, Vec2};
use crate::heat::KernelParams;
use crate::optimize::golden_section_max;
use crate::quadrature::CurveQuadrature;

/// A frame in rescaled coordinates `ỹ = (x - p)/√(2(T - t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledFrame {
    /// `s = -½ ln(T - t)`.
    pub s: f64,
    pub curve: DiscreteCurve,
    pub source_t: f64,
    pub t_sing: f64,
    pub center: [f64; 2],
}

impl RescaledFrame {
    pub fn scale(&self) -> f64 {
        (2.0 * (self.t_sing - self.source_t)).sqrt()
    }
}

pub fn rescale_transform(curve: &DiscreteCurve, t: f64, t_sing: f64, p: Vec2) -> Result<RescaledFrame> {
    if !(t < t_sing) {
        return Err(Error::TimeOrder { s: t, t: t_sing });
    }
    let scale = (2.0 * (t_sing - t)).sqrt();
    let curve = rebuild(curve, curve.map_vertices(|x| (x - p) / scale));
    Ok(RescaledFrame {
        s: -0.5 * (t_sing - t).ln(),
        curve,
        source_t: t,
        t_sing,
        center: [p.x, p.y],
    })
}

/// Maps a rescaled frame back to the original coordinates.
pub fn inverse_rescale(frame: &RescaledFrame) -> DiscreteCurve {
    let scale = frame.scale();
    let p = Vec2::new(frame.center[0], frame.center[1]);
    rebuild(&frame.curve, frame.curve.map_vertices(|y| y * scale + p))
}

fn rebuild(like: &DiscreteCurve, mapped: DiscreteCurve) -> DiscreteCurve {
    if like.is_closed() {
        mapped
    } else {
        DiscreteCurve::open(mapped.vertices().to_vec()).unwrap_or(mapped)
    }
}

/// `(1/√(2π)) ∫ e^{-|y|²/2} dH¹` over the rescaled curve.
pub fn limit_density(frame: &RescaledFrame) -> f64 {
    gaussian_area(&frame.curve)
}

fn gaussian_area(curve: &DiscreteCurve) -> f64 {
    let q = CurveQuadrature::new(curve);
    q.integrate(|i| (-0.5 * q.points[i].norm_squared()).exp()) / (2.0 * PI).sqrt()
}

/// `(1/√(2π)) ∫ e^{-|y|²/2} |k̃ + ⟨ỹ, ν̃⟩|² dH¹`, zero on self-shrinkers.
pub fn rescaled_residual(frame: &RescaledFrame) -> Result<f64> {
    density::shrinker_residual(&frame.curve, &KernelParams::planar(Vec2::zeros(), 0.5)?)
}

fn point_segment_distance(p: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let e = b - a;
    let len2 = e.norm_squared();
    let s = if len2 > 0.0 {
        ((p - a).dot(&e) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + e * s)).norm()
}

fn directed_distance(from: &DiscreteCurve, to: &DiscreteCurve) -> f64 {
    from.vertices()
        .iter()
        .map(|p| {
            (0..to.edge_count())
                .map(|i| {
                    let (a, b) = to.edge(i);
                    point_segment_distance(p, &a, &b)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two polygons, measured from the
/// vertices of each to the edges of the other.
pub fn hausdorff(a: &DiscreteCurve, b: &DiscreteCurve) -> f64 {
    directed_distance(a, b).max(directed_distance(b, a))
}

/// Vertex count of the reference circle used by [`hausdorff_to_unit_circle`].
pub const REFERENCE_CIRCLE_N: usize = 4096;

/// Hausdorff distance to the unit circle about the origin. The curve-to-circle
/// side is exact; the other side uses a fine reference polygon.
pub fn hausdorff_to_unit_circle(curve: &DiscreteCurve) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..curve.edge_count() {
        let (a, b) = curve.edge(i);
        d = d.max(a.norm() - 1.0).max(b.norm() - 1.0);
        let closest = point_segment_distance(&Vec2::zeros(), &a, &b);
        d = d.max(1.0 - closest);
    }
    let reference = shapes::circle(Vec2::zeros(), 1.0, REFERENCE_CIRCLE_N).expect("valid circle");
    d.max(directed_distance(&reference, curve))
}

/// Largest distance from the curve to its best-fit line through the origin
/// (principal axis of the second moment).
pub fn distance_to_best_line(curve: &DiscreteCurve) -> f64 {
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for v in curve.vertices() {
        sxx += v.x * v.x;
        sxy += v.x * v.y;
        syy += v.y * v.y;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let normal = Vec2::new(-angle.sin(), angle.cos());
    curve
        .vertices()
        .iter()
        .map(|v| v.dot(&normal).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingularityType {
    TypeI,
    TypeII,
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitMatch {
    UnitCircle,
    Line,
    None,
}

/// Windowed `sup|k|·√(2(T-t))` above this counts as type II.
pub const TYPE_ONE_BOUND: f64 = 3.0;
/// Hausdorff tolerance for naming the limit.
pub const LIMIT_TOLERANCE: f64 = 0.05;
/// Rescaled curvature bound for the frame the limit is read from.
pub const LIMIT_CURVATURE_BOUND: f64 = 3.0;
/// Rescaled-coordinate jump between consecutive centers that gets flagged.
pub const CENTER_JUMP: f64 = 0.1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingularityReport {
    #[serde(rename = "type")]
    pub kind: SingularityType,
    /// `sup|k|·√(2(T-t))` over the blow-up window.
    #[serde(rename = "typeI_constant")]
    pub type_one_constant: f64,
    /// The same quantity over every recorded frame.
    pub type_one_constant_all: f64,
    pub limit_match: LimitMatch,
    /// Distance of the final rescaled frame to the unit circle.
    pub hausdorff: f64,
    pub line_distance: f64,
    #[serde(rename = "Sigma")]
    pub sigma: f64,
    pub sigma_exceeds_one: bool,
    pub limit_density: f64,
    /// Rescaled shrinker residual along the rescaled sequence.
    pub residuals: Vec<f64>,
    pub final_s: f64,
    pub final_rescaled_curvature: f64,
    pub center_jump_flagged: bool,
    #[serde(skip)]
    pub rescaled: Vec<RescaledFrame>,
}

impl SingularityReport {
    fn unresolved() -> Self {
        Self {
            kind: SingularityType::Unresolved,
            type_one_constant: f64::NAN,
            type_one_constant_all: f64::NAN,
            limit_match: LimitMatch::None,
            hausdorff: f64::NAN,
            line_distance: f64::NAN,
            sigma: f64::NAN,
            sigma_exceeds_one: false,
            limit_density: f64::NAN,
            residuals: Vec::new(),
            final_s: f64::NAN,
            final_rescaled_curvature: f64::NAN,
            center_jump_flagged: false,
            rescaled: Vec::new(),
        }
    }
}

/// Frames in the blow-up window: those whose curvature is at least a third of
/// the final one.
fn blowup_window(traj: &Trajectory) -> (Vec<usize>, Vec<f64>) {
    let t_sing = traj.estimated_t.value;
    let ks: Vec<f64> = traj
        .frames
        .iter()
        .map(|f| compute_geometry(&f.curve).max_abs_curvature())
        .collect();
    let k_last = traj
        .frames
        .iter()
        .zip(&ks)
        .rev()
        .find(|(f, _)| f.t < t_sing)
        .map(|(_, k)| *k)
        .unwrap_or(f64::NAN);
    let idx = (0..traj.frames.len())
        .filter(|&i| traj.frames[i].t < t_sing && ks[i] >= k_last / 3.0)
        .collect();
    (idx, ks)
}

/// Frames at roughly doubling distance from `T`, counted back from the last
/// resolved frame, within the blow-up window.
fn geometric_sequence(traj: &Trajectory, window: &[usize], ks: &[f64]) -> Vec<usize> {
    let t_sing = traj.estimated_t.value;
    let resolved: Vec<usize> = window
        .iter()
        .copied()
        .filter(|&i| ks[i] * traj.frames[i].curve.min_edge() <= density::RELIABLE_KH)
        .collect();
    let Some(&last) = resolved.last() else {
        return Vec::new();
    };
    let eps0 = t_sing - traj.frames[last].t;
    let mut out = vec![last];
    let mut target = 2.0 * eps0;
    for &i in resolved.iter().rev() {
        let eps = t_sing - traj.frames[i].t;
        if eps >= target {
            out.push(i);
            target = 2.0 * eps;
        }
    }
    out.reverse();
    out
}

/// Classifies the singularity at the trajectory's estimated time.
pub fn classify(traj: &Trajectory, opts: &DensityOptions) -> Result<SingularityReport> {
    let t_sing = traj.estimated_t.value;
    if traj.frames.len() < 3 || !t_sing.is_finite() {
        return Ok(SingularityReport::unresolved());
    }
    let (window, ks) = blowup_window(traj);
    let seq = geometric_sequence(traj, &window, &ks);
    if window.len() < 3 || seq.is_empty() {
        return Ok(SingularityReport::unresolved());
    }
    let kc = |i: usize| ks[i] * (2.0 * (t_sing - traj.frames[i].t)).sqrt();
    let type_one_constant = window.iter().map(|&i| kc(i)).fold(0.0, f64::max);
    let type_one_constant_all = (0..traj.frames.len())
        .filter(|&i| traj.frames[i].t < t_sing)
        .map(kc)
        .fold(0.0, f64::max);

    let mut rescaled = Vec::with_capacity(seq.len());
    for &i in &seq {
        let f = &traj.frames[i];
        let report = density::sigma(&f.curve, t_sing - f.t, opts)?;
        let p = if report.diagnostics.converged {
            report.center()
        } else {
            f.curve.centroid()
        };
        rescaled.push(rescale_transform(&f.curve, f.t, t_sing, p)?);
    }
    let center_jump_flagged = rescaled.windows(2).any(|w| {
        let a = Vec2::new(w[0].center[0], w[0].center[1]);
        let b = Vec2::new(w[1].center[0], w[1].center[1]);
        (a - b).norm() / w[1].scale() > CENTER_JUMP
    });
    let residuals = rescaled
        .iter()
        .map(rescaled_residual)
        .collect::<Result<Vec<_>>>()?;

    let final_idx = rescaled
        .iter()
        .rposition(|r| compute_geometry(&r.curve).max_abs_curvature() <= LIMIT_CURVATURE_BOUND)
        .unwrap_or(rescaled.len() - 1);
    let last = &rescaled[final_idx];
    let final_k = compute_geometry(&last.curve).max_abs_curvature();
    let haus = hausdorff_to_unit_circle(&last.curve);
    let line = distance_to_best_line(&last.curve);
    let bounded = final_k <= LIMIT_CURVATURE_BOUND;
    let limit_match = if bounded && haus < LIMIT_TOLERANCE {
        LimitMatch::UnitCircle
    } else if bounded && line < LIMIT_TOLERANCE {
        LimitMatch::Line
    } else {
        LimitMatch::None
    };

    let SigmaLimit {
        limit, exceeds_one, ..
    } = density::sigma_limit_estimate(traj, opts)?;
    let kind = if type_one_constant <= TYPE_ONE_BOUND {
        SingularityType::TypeI
    } else {
        SingularityType::TypeII
    };

    Ok(SingularityReport {
        kind,
        type_one_constant,
        type_one_constant_all,
        limit_match,
        hausdorff: haus,
        line_distance: line,
        sigma: limit.value,
        sigma_exceeds_one: exceeds_one,
        limit_density: limit_density(last),
        residuals,
        final_s: last.s,
        final_rescaled_curvature: final_k,
        center_jump_flagged,
        rescaled,
    })
}

/// `φ(t̄) = λ L(φ(0))` with `0 < λ < 1` and a rigid motion `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreatherHypothesis {
    pub t_bar: f64,
    pub lambda: f64,
    pub isometry: Isometry,
}

/// Number of rotation samples in the shape alignment grid.
pub const ALIGN_ANGLES: usize = 720;

impl BreatherHypothesis {
    pub fn new(t_bar: f64, lambda: f64, isometry: Isometry) -> Result<Self> {
        if !(t_bar > 0.0) {
            return Err(Error::NonPositive { name: "t_bar", value: t_bar });
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Breather(format!("scale {lambda} must lie in (0, 1)")));
        }
        Ok(Self {
            t_bar,
            lambda,
            isometry,
        })
    }

    /// Best-fit hypothesis at `t_bar`: `λ` from the area ratio, translation
    /// matching centroids, rotation by grid search plus polish on the
    /// Hausdorff distance.
    pub fn fit(traj: &Trajectory, t_bar: f64, params: &FlowParams) -> Result<Self> {
        let start = &traj.frames[0].curve;
        let end = frame_at(traj, t_bar, params)?;
        let lambda = (end.signed_area() / start.signed_area()).sqrt();
        let angle = best_rotation(start, &end, lambda);
        Self::new(t_bar, lambda, align(start, &end, lambda, angle))
    }
}

fn align(start: &DiscreteCurve, end: &DiscreteCurve, lambda: f64, angle: f64) -> Isometry {
    let rotated = Isometry::new(angle, Vec2::zeros()).apply(&start.centroid());
    Isometry::new(angle, end.centroid() / lambda - rotated)
}

fn best_rotation(start: &DiscreteCurve, end: &DiscreteCurve, lambda: f64) -> f64 {
    let cost = |angle: f64| {
        let iso = align(start, end, lambda, angle);
        transform(start, &iso, lambda)
            .map(|c| hausdorff(&c, end))
            .unwrap_or(f64::INFINITY)
    };
    let step = 2.0 * PI / ALIGN_ANGLES as f64;
    let (best_i, _) = (0..ALIGN_ANGLES)
        .map(|i| (i, cost(i as f64 * step)))
        .fold((0, f64::INFINITY), |acc, (i, c)| if c < acc.1 { (i, c) } else { acc });
    let center = best_i as f64 * step;
    let (angle, _, _) = golden_section_max(|a| -cost(a), center - step, center + step, 1e-9, 200);
    angle
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreatherOptions {
    /// Shape match tolerance relative to the diameter of `λ L(φ(0))`.
    pub shape_tolerance: f64,
    pub residual_tolerance: f64,
    /// Reject when `C` exceeds this multiple of the estimated singular time.
    pub horizon_factor: f64,
}

impl Default for BreatherOptions {
    fn default() -> Self {
        Self {
            shape_tolerance: 1e-2,
            residual_tolerance: 1e-5,
            horizon_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BreatherResult {
    pub is_breather: bool,
    pub residual_integral: f64,
    /// `σ(φ₀, C) - σ(φ_t̄, C - t̄)`.
    pub sigma_gap: f64,
    /// Hausdorff distance between `φ(t̄)` and `λ L(φ(0))`.
    pub shape_distance: f64,
    pub shape_match: bool,
    /// `t̄ / (1 - λ²)`.
    pub c: f64,
    /// Largest quadrature error estimate among the two σ evaluations.
    pub quadrature_error: f64,
}

/// Tests a breather hypothesis against a trajectory.
pub fn breather_check(
    traj: &Trajectory,
    h: &BreatherHypothesis,
    density_opts: &DensityOptions,
    flow_params: &FlowParams,
    opts: &BreatherOptions,
) -> Result<BreatherResult> {
    if !(h.lambda > 0.0 && h.lambda < 1.0) {
        return Err(Error::Breather(format!("scale {} must lie in (0, 1)", h.lambda)));
    }
    let last = traj.last().t;
    if !(h.t_bar > 0.0 && h.t_bar <= last) {
        return Err(Error::TimeOutOfRange {
            t: h.t_bar,
            lo: 0.0,
            hi: last,
        });
    }
    let c = h.t_bar / (1.0 - h.lambda * h.lambda);
    let horizon = opts.horizon_factor * traj.estimated_t.value;
    if !(c <= horizon) {
        return Err(Error::Breather(format!(
            "C = {c} beyond the usable horizon {horizon}"
        )));
    }

    let start = &traj.frames[0].curve;
    let end = frame_at(traj, h.t_bar, flow_params)?;
    let target = transform(start, &h.isometry, h.lambda)?;
    let shape_distance = hausdorff(&end, &target);
    let shape_match = shape_distance <= opts.shape_tolerance * target.diameter();

    let s0 = density::sigma(start, c, density_opts)?;
    let s1 = density::sigma(&end, c - h.t_bar, density_opts)?;
    let sigma_gap = s0.value - s1.value;

    let mut samples: Vec<(f64, DiscreteCurve)> = traj
        .frames
        .iter()
        .filter(|f| f.t < h.t_bar)
        .map(|f| (f.t, f.curve.clone()))
        .collect();
    samples.push((h.t_bar, end));
    let values = samples
        .iter()
        .map(|(t, curve)| {
            let rep = density::sigma(curve, c - t, density_opts)?;
            density::shrinker_residual(curve, &KernelParams::planar(rep.center(), c - t)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let residual_integral = samples
        .windows(2)
        .zip(values.windows(2))
        .map(|(s, v)| 0.5 * (s[1].0 - s[0].0) * (v[0] + v[1]))
        .sum::<f64>();

    Ok(BreatherResult {
        is_breather: shape_match && residual_integral <= opts.residual_tolerance,
        residual_integral,
        sigma_gap,
        shape_distance,
        shape_match,
        c,
        quadrature_error: s0.diagnostics.quadrature_error.max(s1.diagnostics.quadrature_error),
    })
}
