//! Curve shortening flow for polygons and the exact shrinking sphere.
//!
//! One step solves `(I - dt·L) x⁺ = x` where `L` is the arc-length Laplacian
//! of the current polygon (cotangent-free 1D form with dual-cell masses), so
//! the vertex velocity approximates `k ν`. For a regular polygon the discrete
//! Laplacian of position is exactly `-x/R²`. Vertices are then moved along
//! the curve to equal spacing by resampling a periodic cubic spline through
//! them, keeping vertex 0 fixed.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::geometry::{compute_geometry, DiscreteCurve, SphereState, Vec2};
use crate::heat::GaussianMixture;
use crate::quadrature::CurveQuadrature;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    /// `dt = cfl · (min edge)²`.
    pub cfl: f64,
    pub redistribute: bool,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            cfl: 0.25,
            redistribute: true,
        }
    }
}

/// Solves a cyclic tridiagonal system for several right-hand sides.
/// Row `i` reads `lower[i]·x[i-1] + diag[i]·x[i] + upper[i]·x[i+1] = rhs[i]`
/// with indices taken modulo `n`.
fn solve_cyclic(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [Vec<f64>]) {
    let n = diag.len();
    // Sherman–Morrison: A = B + u vᵀ with u = (γ, 0, .., 0, c_{n-1}),
    // v = (1, 0, .., 0, a_0/γ).
    let gamma = -diag[0];
    let alpha = upper[n - 1];
    let beta = lower[0];
    let mut b = diag.to_vec();
    b[0] -= gamma;
    b[n - 1] -= alpha * beta / gamma;

    let thomas = |r: &mut [f64]| {
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = upper[0] / b[0];
        d[0] = r[0] / b[0];
        for i in 1..n {
            let m = b[i] - lower[i] * c[i - 1];
            c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
            d[i] = (r[i] - lower[i] * d[i - 1]) / m;
        }
        r[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            r[i] = d[i] - c[i] * r[i + 1];
        }
    };

    let mut z = vec![0.0; n];
    z[0] = gamma;
    z[n - 1] = alpha;
    thomas(&mut z);
    let vz = z[0] + beta / gamma * z[n - 1];
    for r in rhs.iter_mut() {
        thomas(r);
        let vy = r[0] + beta / gamma * r[n - 1];
        let f = vy / (1.0 + vz);
        for (ri, zi) in r.iter_mut().zip(&z) {
            *ri -= f * zi;
        }
    }
}

/// Resamples a closed polygon at equal chord-length parameter through a
/// periodic cubic spline. Vertex 0 is kept.
pub fn redistribute(curve: &DiscreteCurve) -> DiscreteCurve {
    let v = curve.vertices();
    let n = v.len();
    let h = curve.edge_lengths();
    let total: f64 = h.iter().sum();

    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let hp = h[(i + n - 1) % n];
        let hn = h[i];
        lower[i] = hp;
        diag[i] = 2.0 * (hp + hn);
        upper[i] = hn;
        let next = v[(i + 1) % n];
        let prev = v[(i + n - 1) % n];
        for (c, r) in rhs.iter_mut().enumerate() {
            r[i] = 6.0 * ((next[c] - v[i][c]) / hn - (v[i][c] - prev[c]) / hp);
        }
    }
    solve_cyclic(&lower, &diag, &upper, &mut rhs);

    let mut out = Vec::with_capacity(n);
    out.push(v[0]);
    let mut seg = 0;
    let mut start = 0.0;
    for j in 1..n {
        let target = total * j as f64 / n as f64;
        while seg + 1 < n && start + h[seg] < target {
            start += h[seg];
            seg += 1;
        }
        let hs = h[seg];
        let a = target - start;
        let b = hs - a;
        let i1 = (seg + 1) % n;
        let mut p = Vec2::zeros();
        for c in 0..2 {
            let (m0, m1) = (rhs[c][seg], rhs[c][i1]);
            let (y0, y1) = (v[seg][c], v[i1][c]);
            p[c] = m0 * b * b * b / (6.0 * hs)
                + m1 * a * a * a / (6.0 * hs)
                + (y0 / hs - m0 * hs / 6.0) * b
                + (y1 / hs - m1 * hs / 6.0) * a;
        }
        out.push(p);
    }
    DiscreteCurve::from_raw(out)
}

/// One semi-implicit curve shortening step, followed by redistribution when
/// `params.redistribute` is set.
///
/// Fails when `dt` exceeds `cfl·(min edge)²`, or when the step would merge
/// vertices or reverse an edge (the caller should retry with a smaller `dt`).
pub fn mcf_step(curve: &DiscreteCurve, dt: f64, params: &FlowParams) -> Result<DiscreteCurve> {
    if !curve.is_closed() {
        return Err(Error::Invalid("flow needs a closed curve".into()));
    }
    if dt < 0.0 || !dt.is_finite() {
        return Err(Error::NonPositive { name: "dt", value: dt });
    }
    if dt == 0.0 {
        return Ok(curve.clone());
    }
    let h = curve.edge_lengths();
    let hmin = h.iter().cloned().fold(f64::INFINITY, f64::min);
    let bound = params.cfl * hmin * hmin;
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge { dt, bound });
    }

    let v = curve.vertices();
    let n = v.len();
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        let hp = h[(i + n - 1) % n];
        let hn = h[i];
        let dual = 0.5 * (hp + hn);
        lower[i] = -dt / (dual * hp);
        upper[i] = -dt / (dual * hn);
        diag[i] = 1.0 - lower[i] - upper[i];
    }
    let mut rhs = vec![
        v.iter().map(|p| p.x).collect::<Vec<_>>(),
        v.iter().map(|p| p.y).collect::<Vec<_>>(),
    ];
    solve_cyclic(&lower, &diag, &upper, &mut rhs);
    let next: Vec<Vec2> = (0..n).map(|i| Vec2::new(rhs[0][i], rhs[1][i])).collect();

    let mean = curve.length() / n as f64;
    for i in 0..n {
        let j = (i + 1) % n;
        let e_new = next[j] - next[i];
        if !e_new.x.is_finite() || !e_new.y.is_finite() {
            return Err(Error::StepRejected(format!("non-finite vertex {i}")));
        }
        if e_new.norm() <= 1e-12 * mean {
            return Err(Error::StepRejected(format!("vertices {i} and {j} merged")));
        }
        if e_new.dot(&(v[j] - v[i])) <= 0.0 {
            return Err(Error::StepRejected(format!("edge {i} reversed")));
        }
    }
    let stepped = DiscreteCurve::from_raw(next);
    Ok(if params.redistribute {
        redistribute(&stepped)
    } else {
        stepped
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    /// Stop once `sup|k| · initial diameter` exceeds this.
    pub k_stop: f64,
    /// Stop once the length drops below this fraction of the initial length.
    pub length_ratio: f64,
    pub max_steps: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            k_stop: 100.0,
            length_ratio: 1e-3,
            max_steps: 5_000_000,
        }
    }
}

/// When to store a frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameRule {
    /// Store when the length has dropped by this factor since the last frame.
    pub length_ratio: f64,
    /// ... or when this fraction of `area/2π` has elapsed.
    pub time_fraction: f64,
}

impl Default for FrameRule {
    fn default() -> Self {
        Self {
            length_ratio: 0.98,
            time_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub flow: FlowParams,
    pub stop: StopRule,
    pub frames: FrameRule,
    /// Times that must appear exactly as frames.
    pub checkpoints: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub curve: DiscreteCurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: f64,
    pub dt: f64,
    pub max_k: f64,
    pub min_edge: f64,
    pub length: f64,
}

/// Singular time from fitting `1/sup|k|² ≈ 2(T - t)/C²` on the final steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularTime {
    pub value: f64,
    pub uncertainty: f64,
    /// Fitted `C` in `sup|k| ≈ C/√(2(T-t))`.
    pub type_one_constant: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Curvature,
    Length,
    MaxSteps,
    StepUnderflow,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub frames: Vec<Frame>,
    pub estimated_t: SingularTime,
    pub steps: Vec<StepDiagnostics>,
    pub stop: StopReason,
    pub initial_diameter: f64,
}

impl Trajectory {
    /// True when the run ended on a flagged condition.
    pub fn truncated(&self) -> bool {
        matches!(self.stop, StopReason::MaxSteps | StopReason::StepUnderflow)
    }

    pub fn last(&self) -> &Frame {
        self.frames.last().expect("trajectory has frames")
    }
}

/// Least-squares fit of `1/k²` against `t` over the steps whose curvature is
/// at least a third of the final one, extrapolated to its zero.
///
/// The fit is quadratic in `t`: the type-I constant still drifts while the
/// shape is converging, and a straight line turns that drift into a bias of
/// order `1e-5` in `T`. The reported constant comes from the slope at the
/// zero. `uncertainty` is the fit residual propagated to `T`; it does not
/// include the discretization bias of the scheme.
pub fn fit_singular_time(steps: &[StepDiagnostics]) -> SingularTime {
    let last = match steps.last() {
        Some(s) => *s,
        None => {
            return SingularTime {
                value: f64::NAN,
                uncertainty: f64::INFINITY,
                type_one_constant: f64::NAN,
                points: 0,
            }
        }
    };
    let mut window: Vec<&StepDiagnostics> =
        steps.iter().filter(|s| s.max_k >= last.max_k / 3.0).collect();
    if window.len() < 10 {
        window = steps.iter().rev().take(10).collect();
    }
    let span = window
        .iter()
        .map(|s| (last.t - s.t).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let xs: Vec<f64> = window.iter().map(|s| (s.t - last.t) / span).collect();
    let ys: Vec<f64> = window.iter().map(|s| 1.0 / (s.max_k * s.max_k)).collect();

    let fit = |degree: usize| -> Option<(Vec<f64>, f64)> {
        let n = degree + 1;
        if xs.len() <= n {
            return None;
        }
        let mut ata = DMatrix::<f64>::zeros(n, n);
        let mut aty = DVector::<f64>::zeros(n);
        for (&x, &y) in xs.iter().zip(&ys) {
            let powers: Vec<f64> = (0..n).map(|k| x.powi(k as i32)).collect();
            for i in 0..n {
                aty[i] += powers[i] * y;
                for j in 0..n {
                    ata[(i, j)] += powers[i] * powers[j];
                }
            }
        }
        let c = ata.lu().solve(&aty)?;
        let rss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| {
                let r = y - (0..n).map(|k| c[k] * x.powi(k as i32)).sum::<f64>();
                r * r
            })
            .sum();
        Some((c.iter().copied().collect(), (rss / (xs.len() - n) as f64).sqrt()))
    };

    // zero of the fitted polynomial nearest the end of the run
    let root = |c: &[f64]| -> Option<(f64, f64)> {
        let eval = |x: f64| c.iter().enumerate().map(|(k, ck)| ck * x.powi(k as i32)).sum::<f64>();
        let slope = |x: f64| c.iter().enumerate().skip(1).map(|(k, ck)| k as f64 * ck * x.powi(k as i32 - 1)).sum::<f64>();
        let mut x = -c[0] / c[1];
        for _ in 0..50 {
            let step = eval(x) / slope(x);
            x -= step;
            if step.abs() <= 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        let s = slope(x);
        (x.is_finite() && s < 0.0).then_some((x, s))
    };

    let (resid, (x0, slope)) = match fit(2).and_then(|(c, r)| root(&c).map(|z| (r, z))) {
        Some(v) => v,
        None => match fit(1).and_then(|(c, r)| root(&c).map(|z| (r, z))) {
            Some(v) => v,
            None => {
                return SingularTime {
                    value: f64::NAN,
                    uncertainty: f64::INFINITY,
                    type_one_constant: f64::NAN,
                    points: window.len(),
                }
            }
        },
    };
    let value = last.t + x0 * span;
    let dy_dt = slope / span;
    SingularTime {
        value,
        uncertainty: resid / dy_dt.abs() + f64::EPSILON * value.abs(),
        type_one_constant: (-2.0 / dy_dt).sqrt(),
        points: window.len(),
    }
}

/// Runs the flow until a stop rule fires.
pub fn evolve(curve: &DiscreteCurve, opts: &EvolveOptions) -> Result<Trajectory> {
    if !curve.is_closed() {
        return Err(Error::Invalid("flow needs a closed curve".into()));
    }
    ensure_positive("cfl", opts.flow.cfl)?;
    let mut current = if opts.flow.redistribute {
        redistribute(curve)
    } else {
        curve.clone()
    };
    let diameter = curve.diameter();
    let length0 = curve.length();
    let time_gap = opts.frames.time_fraction * curve.signed_area().abs().max(1e-300)
        / (2.0 * std::f64::consts::PI);
    let mut checkpoints: Vec<f64> = opts.checkpoints.iter().copied().filter(|c| *c > 0.0).collect();
    checkpoints.sort_by(f64::total_cmp);
    checkpoints.dedup();
    let mut next_checkpoint = 0;

    let mut t = 0.0;
    let mut frames = vec![Frame {
        t,
        curve: current.clone(),
    }];
    let mut last_frame_len = length0;
    let mut last_frame_t = 0.0;
    let mut steps = Vec::new();
    let mut stop = StopReason::MaxSteps;

    for _ in 0..opts.stop.max_steps {
        let hmin = current.min_edge();
        let mut dt = opts.flow.cfl * hmin * hmin;
        let mut hit_checkpoint = false;
        if next_checkpoint < checkpoints.len() && t + dt >= checkpoints[next_checkpoint] {
            dt = checkpoints[next_checkpoint] - t;
            hit_checkpoint = true;
        }
        let mut attempt = dt;
        let stepped = loop {
            match mcf_step(&current, attempt, &opts.flow) {
                Ok(c) => break Some(c),
                Err(Error::StepRejected(_)) if attempt > 1e-14 * dt.max(1e-300) => {
                    attempt *= 0.5;
                    hit_checkpoint = false;
                }
                Err(Error::StepRejected(_)) => break None,
                Err(e) => return Err(e),
            }
        };
        let Some(next) = stepped else {
            stop = StopReason::StepUnderflow;
            break;
        };
        current = next;
        if hit_checkpoint {
            t = checkpoints[next_checkpoint];
            next_checkpoint += 1;
        } else {
            t += attempt;
        }

        let geom = compute_geometry(&current);
        let max_k = geom.max_abs_curvature();
        let length = geom.length;
        steps.push(StepDiagnostics {
            t,
            dt: attempt,
            max_k,
            min_edge: current.min_edge(),
            length,
        });

        let by_k = max_k * diameter > opts.stop.k_stop;
        let by_len = length < opts.stop.length_ratio * length0;
        if hit_checkpoint
            || by_k
            || by_len
            || length <= opts.frames.length_ratio * last_frame_len
            || t - last_frame_t >= time_gap
        {
            frames.push(Frame {
                t,
                curve: current.clone(),
            });
            last_frame_len = length;
            last_frame_t = t;
        }
        if by_k {
            stop = StopReason::Curvature;
            break;
        }
        if by_len {
            stop = StopReason::Length;
            break;
        }
    }
    if frames.last().map(|f| f.t) != Some(t) {
        frames.push(Frame { t, curve: current });
    }

    let mut estimated_t = fit_singular_time(&steps);
    if !(estimated_t.value > t) {
        // the fit must not place T inside the recorded run
        estimated_t.uncertainty = estimated_t.uncertainty.max((estimated_t.value - t).abs());
        estimated_t.value = t + f64::EPSILON * t.max(1.0);
    }
    Ok(Trajectory {
        frames,
        estimated_t,
        steps,
        stop,
        initial_diameter: diameter,
    })
}

/// The curve at time `t`: the latest frame not after `t`, advanced by
/// stability-bounded steps.
pub fn frame_at(traj: &Trajectory, t: f64, params: &FlowParams) -> Result<DiscreteCurve> {
    let last = traj.last().t;
    if t < 0.0 || t > last {
        return Err(Error::TimeOutOfRange { t, lo: 0.0, hi: last });
    }
    let frame = traj
        .frames
        .iter()
        .rev()
        .find(|f| f.t <= t)
        .expect("first frame is at t = 0");
    let mut curve = frame.curve.clone();
    let mut now = frame.t;
    while now < t {
        let h = curve.min_edge();
        let dt = (params.cfl * h * h).min(t - now);
        curve = mcf_step(&curve, dt, params)?;
        now += dt;
    }
    Ok(curve)
}

/// Exact shrinking sphere: `R(t) = √(R₀² - 2nt)`.
pub fn sphere_evolve(s: &SphereState, t: f64) -> Result<SphereState> {
    let t_sing = sphere_singular_time(s);
    if !(t >= 0.0 && t < t_sing) {
        return Err(Error::TimeOutOfRange { t, lo: 0.0, hi: t_sing });
    }
    let r = (s.radius * s.radius - 2.0 * s.n as f64 * t).sqrt();
    SphereState::new(s.center.clone(), r, s.n)
}

/// `R₀² / 2n`.
pub fn sphere_singular_time(s: &SphereState) -> f64 {
    s.radius * s.radius / (2.0 * s.n as f64)
}

/// Both terms of the generalized monotonicity identity
/// `d/dt[√(2(C-t)) ∫ u dμ] = term1 + term2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonTerms {
    pub total: f64,
    /// `-√(2(C-t)) ∫ u |H - ⟨∇ln u, ν⟩|² dμ`
    pub term1: f64,
    /// `-√(2(C-t)) ∫ (∇⊥∇⊥u - |∇⊥u|²/u + u/(2(C-t))) dμ`
    pub term2: f64,
}

/// Evaluates the two terms for `u = m(·, t)`; the mixture's base scale must be `C`.
pub fn hamilton_decomposition(
    curve: &DiscreteCurve,
    m: &GaussianMixture,
    c: f64,
    t: f64,
) -> Result<HamiltonTerms> {
    if (m.tau() - c).abs() > 1e-12 * c.abs().max(1.0) {
        return Err(Error::ClockMismatch {
            mixture_tau: m.tau(),
            c,
        });
    }
    if m.ambient() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: m.ambient(),
        });
    }
    if !(t >= 0.0 && t < c) {
        return Err(Error::TimeOutOfRange { t, lo: 0.0, hi: c });
    }
    let quad = CurveQuadrature::new(curve);
    let factor = (2.0 * (c - t)).sqrt();
    let mut x = DVector::zeros(2);
    let mut nu = DVector::zeros(2);
    let (mut i1, mut i2) = (0.0, 0.0);
    for q in 0..quad.len() {
        x[0] = quad.points[q].x;
        x[1] = quad.points[q].y;
        nu[0] = quad.normals[q].x;
        nu[1] = quad.normals[q].y;
        let d = m.derivatives(&x, t)?;
        let u = d.value;
        if u <= 0.0 {
            continue;
        }
        let gn = d.gradient.dot(&nu);
        let hnn = (nu.transpose() * &d.hessian * &nu)[(0, 0)];
        let defect = quad.curvature[q] - gn / u;
        i1 += quad.weights[q] * u * defect * defect;
        i2 += quad.weights[q] * (hnn - gn * gn / u + u / (2.0 * (c - t)));
    }
    let term1 = -factor * i1;
    let term2 = -factor * i2;
    Ok(HamiltonTerms {
        total: term1 + term2,
        term1,
        term2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;
    use approx::assert_relative_eq;

    fn mean_radius(c: &DiscreteCurve) -> f64 {
        c.vertices().iter().map(|v| v.norm()).sum::<f64>() / c.len() as f64
    }

    #[test]
    fn cyclic_solver_matches_dense() {
        let n = 7;
        let lower: Vec<f64> = (0..n).map(|i| -0.3 - 0.01 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| -0.2 + 0.02 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + 0.1 * i as f64).collect();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.5).collect();
        let mut b = vec![0.0; n];
        for i in 0..n {
            b[i] = lower[i] * x_true[(i + n - 1) % n] + diag[i] * x_true[i] + upper[i] * x_true[(i + 1) % n];
        }
        let mut rhs = vec![b];
        solve_cyclic(&lower, &diag, &upper, &mut rhs);
        for i in 0..n {
            assert_relative_eq!(rhs[0][i], x_true[i], epsilon = 1e-13);
        }
    }

    #[test]
    fn zero_step_is_identity() {
        let c = shapes::ellipse(2.0, 1.0, 64).unwrap();
        assert_eq!(mcf_step(&c, 0.0, &FlowParams::default()).unwrap(), c);
    }

    #[test]
    fn oversized_or_negative_step_rejected() {
        let c = shapes::circle(Vec2::zeros(), 1.0, 64).unwrap();
        let h = c.min_edge();
        assert!(matches!(
            mcf_step(&c, h * h, &FlowParams::default()),
            Err(Error::StepTooLarge { .. })
        ));
        assert!(mcf_step(&c, -1e-6, &FlowParams::default()).is_err());
    }

    #[test]
    fn circle_step_follows_radius_ode() {
        let c = shapes::circle(Vec2::zeros(), 1.0, 256).unwrap();
        let h = c.min_edge();
        let dt = 0.25 * h * h;
        let next = mcf_step(&c, dt, &FlowParams::default()).unwrap();
        // regular polygons stay regular, with R ↦ R³/(R² + dt)
        assert_relative_eq!(mean_radius(&next), 1.0 / (1.0 + dt), max_relative = 1e-13);
        let exact = (1.0 - 2.0 * dt).sqrt();
        assert!((mean_radius(&next) - exact).abs() < 2.0 * dt * dt);
    }

    #[test]
    fn redistribution_keeps_regular_polygon() {
        let c = shapes::circle(Vec2::zeros(), 1.0, 64).unwrap();
        let r = redistribute(&c);
        for (a, b) in c.vertices().iter().zip(r.vertices()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn redistribution_equalizes_spacing() {
        let pts: Vec<Vec2> = (0..128)
            .map(|i| {
                let s = i as f64 / 128.0;
                let th = 2.0 * std::f64::consts::PI * (s + 0.1 * (2.0 * std::f64::consts::PI * s).sin());
                Vec2::new(2.0 * th.cos(), th.sin())
            })
            .collect();
        let c = DiscreteCurve::new(pts).unwrap();
        let mut r = c.clone();
        for _ in 0..5 {
            r = redistribute(&r);
        }
        let h = r.edge_lengths();
        let mean = r.length() / 128.0;
        assert!(h.iter().all(|x| (x / mean - 1.0).abs() < 2e-3));
        assert_relative_eq!(r.signed_area(), c.signed_area(), max_relative = 1e-3);
    }

    #[test]
    fn sphere_evolution_examples() {
        let s = SphereState::centered(1.0, 1).unwrap();
        assert_relative_eq!(sphere_evolve(&s, 0.375).unwrap().radius, 0.5, epsilon = 1e-15);
        assert_eq!(sphere_evolve(&s, 0.0).unwrap(), s);
        let s2 = SphereState::centered(1.0, 2).unwrap();
        assert_eq!(sphere_singular_time(&s2), 0.25);
        assert!(sphere_evolve(&s2, 0.25).is_err());
    }

    #[test]
    fn fit_recovers_exact_circle_law() {
        let steps: Vec<StepDiagnostics> = (0..100)
            .map(|i| {
                let t = 0.4 + 0.0009 * i as f64;
                StepDiagnostics {
                    t,
                    dt: 0.0009,
                    max_k: 1.0 / (1.0 - 2.0 * t).sqrt(),
                    min_edge: 0.0,
                    length: 0.0,
                }
            })
            .collect();
        let fit = fit_singular_time(&steps);
        assert_relative_eq!(fit.value, 0.5, epsilon = 1e-10);
        assert_relative_eq!(fit.type_one_constant, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn decomposition_rejects_clock_mismatch() {
        let c = shapes::circle(Vec2::zeros(), 1.0, 32).unwrap();
        let m = GaussianMixture::single(DVector::zeros(2), 0.7).unwrap();
        assert!(matches!(
            hamilton_decomposition(&c, &m, 0.5, 0.0),
            Err(Error::ClockMismatch { .. })
        ));
    }
}
