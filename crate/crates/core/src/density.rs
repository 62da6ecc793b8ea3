//! Gaussian density functionals of plane curves and round spheres.
//!
//! The Huisken functional of a curve at center `p` and scale `τ` is
//! `∫_M e^{-|x-p|²/4τ} / (4πτ)^{1/2} dμ`. Its maximum over `p` is `σ(φ, τ)`,
//! the maximum of that over `τ` is `ν(φ)`. Curve integrals use four
//! Gauss–Legendre nodes per edge.
//!
//! The maximization over centers is a multi-start search: mean-shift ascent
//! (which never decreases a Gaussian-kernel density) from the centroid and a
//! grid over the inflated bounding box, then a Nelder–Mead polish of the best
//! candidate. Starts run in parallel and are reduced in a fixed order, so
//! results do not depend on the thread count.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::flow::Trajectory;
use crate::geometry::{compute_geometry, unit_sphere_area, DiscreteCurve, SphereState, Vec2};
use crate::heat::KernelParams;
use crate::optimize::{golden_section_max, nelder_mead_max, NelderMeadOptions};
use crate::quadrature::CurveQuadrature;

#[derive(Debug, Clone, Copy)]
pub struct DensityOptions {
    /// The start grid is `grid × grid` points (plus the centroid).
    pub grid: usize,
    /// Nelder–Mead restarts before a report is flagged as unconverged.
    pub max_restarts: usize,
    pub mean_shift_iters: usize,
    /// Number of log-spaced scales scanned before the golden-section search in `ν`.
    pub nu_scan: usize,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self {
            grid: 5,
            max_restarts: 3,
            mean_shift_iters: 500,
            nu_scan: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Scale at which the report was evaluated.
    pub tau: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub starts: usize,
    pub converged: bool,
    /// `|Q4 - Q2|` between four- and two-point rules at the maximizer.
    pub quadrature_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub value: f64,
    pub p_star: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tau_star: Option<f64>,
    /// Shrinker residual at the maximizer.
    pub residual: f64,
    pub diagnostics: Diagnostics,
}

impl DensityReport {
    pub fn center(&self) -> Vec2 {
        Vec2::new(self.p_star[0], self.p_star[1])
    }
}

/// `length / (4πτ)^{1/2}`, an upper bound for `σ(φ, τ)`.
pub fn density_upper_bound(curve: &DiscreteCurve, tau: f64) -> f64 {
    curve.length() / (4.0 * PI * tau).sqrt()
}

/// Huisken functional `∫_M e^{-|x-p|²/4τ} / (4πτ)^{1/2} dμ`.
pub fn huisken_functional(curve: &DiscreteCurve, params: &KernelParams) -> Result<f64> {
    ensure_positive("tau", params.tau)?;
    let p = params.planar_center()?;
    huisken_functional_with(&CurveQuadrature::new(curve), p, params.tau)
}

pub(crate) fn huisken_functional_with(quad: &CurveQuadrature, p: Vec2, tau: f64) -> Result<f64> {
    ensure_positive("tau", tau)?;
    Ok(raw_functional(quad, p, tau))
}

fn raw_functional(quad: &CurveQuadrature, p: Vec2, tau: f64) -> f64 {
    let inv = 1.0 / (4.0 * tau);
    let sum: f64 = quad
        .points
        .iter()
        .zip(&quad.weights)
        .map(|(x, w)| w * (-(x - p).norm_squared() * inv).exp())
        .sum();
    sum / (4.0 * PI * tau).sqrt()
}

/// Gaussian-weighted self-shrinker defect
/// `∫_M e^{-|x-p|²/4τ} / (4πτ)^{1/2} |k + ⟨x-p, ν⟩/(2τ)|² dμ`.
pub fn shrinker_residual(curve: &DiscreteCurve, params: &KernelParams) -> Result<f64> {
    ensure_positive("tau", params.tau)?;
    let p = params.planar_center()?;
    Ok(residual_with(&CurveQuadrature::new(curve), p, params.tau))
}

pub(crate) fn residual_with(quad: &CurveQuadrature, p: Vec2, tau: f64) -> f64 {
    let inv = 1.0 / (4.0 * tau);
    let sum: f64 = (0..quad.len())
        .map(|q| {
            let r = quad.points[q] - p;
            let defect = quad.curvature[q] + r.dot(&quad.normals[q]) / (2.0 * tau);
            quad.weights[q] * (-r.norm_squared() * inv).exp() * defect * defect
        })
        .sum();
    sum / (4.0 * PI * tau).sqrt()
}

/// Mean-shift ascent from `start`. Returns `(center, value, iterations)`.
fn mean_shift(quad: &CurveQuadrature, start: Vec2, tau: f64, max_iter: usize) -> (Vec2, f64, usize) {
    let inv = 1.0 / (4.0 * tau);
    let tol = 1e-12 * tau.sqrt();
    let mut p = start;
    let mut iters = 0;
    let mut exps = vec![0.0; quad.len()];
    while iters < max_iter {
        iters += 1;
        let mut top = f64::NEG_INFINITY;
        for (e, x) in exps.iter_mut().zip(&quad.points) {
            *e = -(x - p).norm_squared() * inv;
            top = top.max(*e);
        }
        let mut num = Vec2::zeros();
        let mut den = 0.0;
        for ((e, x), w) in exps.iter().zip(&quad.points).zip(&quad.weights) {
            let g = w * (e - top).exp();
            num += x * g;
            den += g;
        }
        let next = num / den;
        let step = (next - p).norm();
        p = next;
        if step < tol {
            break;
        }
    }
    (p, raw_functional(quad, p, tau), iters)
}

fn start_points(curve: &DiscreteCurve, tau: f64, grid: usize) -> Vec<Vec2> {
    let centroid = curve.centroid();
    let (lo, hi) = curve.bounding_box();
    let pad = 2.0 * tau.sqrt();
    let (lo, hi) = (lo.add_scalar(-pad), hi.add_scalar(pad));
    let mut out = vec![centroid];
    let g = grid.max(1);
    for i in 0..g {
        for j in 0..g {
            let fx = if g == 1 { 0.5 } else { i as f64 / (g - 1) as f64 };
            let fy = if g == 1 { 0.5 } else { j as f64 / (g - 1) as f64 };
            out.push(Vec2::new(lo.x + fx * (hi.x - lo.x), lo.y + fy * (hi.y - lo.y)));
        }
    }
    out
}

/// `σ(φ, τ)`: maximum of the Huisken functional over centers.
pub fn sigma(curve: &DiscreteCurve, tau: f64, opts: &DensityOptions) -> Result<DensityReport> {
    ensure_positive("tau", tau)?;
    let quad = CurveQuadrature::new(curve);
    sigma_with(curve, &quad, tau, opts)
}

fn sigma_with(
    curve: &DiscreteCurve,
    quad: &CurveQuadrature,
    tau: f64,
    opts: &DensityOptions,
) -> Result<DensityReport> {
    let starts = start_points(curve, tau, opts.grid);
    let climbs: Vec<(Vec2, f64, usize)> = starts
        .par_iter()
        .map(|s| mean_shift(quad, *s, tau, opts.mean_shift_iters))
        .collect();

    let centroid = curve.centroid();
    let top = climbs.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let (mut best, mut best_value, _) = climbs
        .iter()
        .filter(|c| c.1 >= top * (1.0 - 1e-12))
        .min_by(|a, b| {
            (a.0 - centroid)
                .norm()
                .total_cmp(&(b.0 - centroid).norm())
        })
        .copied()
        .expect("at least one start");
    let mut iterations: usize = climbs.iter().map(|c| c.2).sum();

    let scale = tau.sqrt();
    let mut restarts = 0;
    let mut converged = false;
    let mut step = 0.05 * scale;
    while restarts <= opts.max_restarts {
        let res = nelder_mead_max(
            |x| raw_functional(quad, Vec2::new(x[0], x[1]), tau),
            &[best.x, best.y],
            &NelderMeadOptions {
                initial_step: step,
                x_tol: 1e-9 * scale,
                f_tol: 1e-15 * best_value.max(f64::MIN_POSITIVE),
                max_iter: 500,
            },
        );
        iterations += res.iterations;
        if res.value > best_value {
            best = Vec2::new(res.x[0], res.x[1]);
            best_value = res.value;
        }
        if res.converged {
            converged = true;
            break;
        }
        restarts += 1;
        step *= 0.1;
    }

    let coarse = raw_functional(&CurveQuadrature::with_order(curve, 2), best, tau);
    Ok(DensityReport {
        value: best_value,
        p_star: [best.x, best.y],
        tau_star: None,
        residual: residual_with(quad, best, tau),
        diagnostics: Diagnostics {
            tau,
            iterations,
            restarts,
            starts: starts.len(),
            converged,
            quadrature_error: (coarse - best_value).abs(),
        },
    })
}

/// `σ` evaluated at each scale, in order.
pub fn sigma_profile(
    curve: &DiscreteCurve,
    taus: &[f64],
    opts: &DensityOptions,
) -> Result<Vec<DensityReport>> {
    let quad = CurveQuadrature::new(curve);
    for &tau in taus {
        ensure_positive("tau", tau)?;
    }
    taus.par_iter()
        .map(|&tau| sigma_with(curve, &quad, tau, opts))
        .collect()
}

/// Closed-form density of a round sphere at its own center,
/// `ω_n R^n e^{-R²/4τ} / (4πτ)^{n/2}`. The center is the maximizing point for
/// `τ ≥ R²/(2(n+1))`, which covers the homothetic scale `τ = R²/(2n)`.
pub fn sigma_sphere(s: &SphereState, tau: f64) -> Result<f64> {
    ensure_positive("tau", tau)?;
    let n = s.n as f64;
    Ok(unit_sphere_area(s.n) * s.radius.powf(n) * (-s.radius * s.radius / (4.0 * tau)).exp()
        / (4.0 * PI * tau).powf(0.5 * n))
}

/// Scale window searched by [`nu`].
pub fn nu_lower_scale(curve: &DiscreteCurve) -> f64 {
    (2.0 * curve.max_edge()).powi(2)
}

/// `ν(φ) = max_τ σ(φ, τ)`, reported with its maximizing scale and center.
///
/// Scales below `(2·max edge)²` are not resolved by the quadrature and are
/// excluded; the upper end is the first scale at which `length/(4πτ)^{1/2}`
/// drops below half the best `σ` seen. A log-spaced scan locates the best
/// bracket, golden-section search on `ln τ` refines it.
pub fn nu(curve: &DiscreteCurve, opts: &DensityOptions) -> Result<DensityReport> {
    let quad = CurveQuadrature::new(curve);
    let tau_lo = nu_lower_scale(curve);
    let mut best_seen = sigma_with(curve, &quad, tau_lo, opts)?.value;
    let mut tau_hi = tau_lo;
    while density_upper_bound(curve, tau_hi) >= 0.5 * best_seen {
        tau_hi *= 4.0;
        best_seen = best_seen.max(sigma_with(curve, &quad, tau_hi, opts)?.value);
    }

    let scan = opts.nu_scan.max(3);
    let (l0, l1) = (tau_lo.ln(), tau_hi.ln());
    let grid: Vec<f64> = (0..scan)
        .map(|i| l0 + (l1 - l0) * i as f64 / (scan - 1) as f64)
        .collect();
    let values: Vec<f64> = grid
        .iter()
        .map(|l| sigma_with(curve, &quad, l.exp(), opts).map(|r| r.value))
        .collect::<Result<_>>()?;
    let (imax, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
    let bracket_ok = imax > 0 && imax + 1 < scan;
    let a = grid[imax.saturating_sub(1)];
    let b = grid[(imax + 1).min(scan - 1)];

    let mut evals = 0;
    let (log_tau, _, _) = golden_section_max(
        |l| {
            evals += 1;
            sigma_with(curve, &quad, l.exp(), opts)
                .map(|r| r.value)
                .unwrap_or(f64::NEG_INFINITY)
        },
        a,
        b,
        1e-8,
        200,
    );
    let tau_star = log_tau.exp();
    let mut report = sigma_with(curve, &quad, tau_star, opts)?;
    report.tau_star = Some(tau_star);
    report.diagnostics.iterations += evals;
    report.diagnostics.converged &= bracket_ok;
    Ok(report)
}

/// Limit of a quantity along a trajectory as `t → T⁻`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    /// Extrapolated value at `t = T`.
    pub value: f64,
    /// Value at the last reliable frame.
    pub last_value: f64,
    /// Times of the frames used.
    pub times: Vec<f64>,
    /// Set when fewer than three usable frames were available.
    pub flagged: bool,
}

/// Largest `sup|k|·h_min` for a frame to count as resolved.
pub const RELIABLE_KH: f64 = 0.2;

/// Indices of the frames used for extrapolation: the last resolved frame with
/// `t < T` and the frames whose distances to `T` are closest to twice and four
/// times its distance.
pub(crate) fn extrapolation_frames(traj: &Trajectory) -> Vec<usize> {
    let t_sing = traj.estimated_t.value;
    let usable: Vec<usize> = traj
        .frames
        .iter()
        .enumerate()
        .filter(|(_, f)| {
            f.t < t_sing && {
                let g = compute_geometry(&f.curve);
                g.max_abs_curvature() * f.curve.min_edge() <= RELIABLE_KH
            }
        })
        .map(|(i, _)| i)
        .collect();
    let Some(&last) = usable.last() else {
        return Vec::new();
    };
    let eps0 = t_sing - traj.frames[last].t;
    let mut picked = vec![last];
    for factor in [2.0, 4.0] {
        let target = (eps0 * factor).ln();
        let pick = usable
            .iter()
            .copied()
            .filter(|i| !picked.contains(i))
            .min_by(|&i, &j| {
                let di = ((t_sing - traj.frames[i].t).ln() - target).abs();
                let dj = ((t_sing - traj.frames[j].t).ln() - target).abs();
                di.total_cmp(&dj)
            });
        if let Some(i) = pick {
            picked.push(i);
        }
    }
    picked
}

/// Quadratic extrapolation to `ε = 0` through `(ε_i, f_i)`.
pub(crate) fn extrapolate_to_zero(eps: &[f64], vals: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..eps.len() {
        let mut l = 1.0;
        for j in 0..eps.len() {
            if i != j {
                l *= (0.0 - eps[j]) / (eps[i] - eps[j]);
            }
        }
        acc += l * vals[i];
    }
    acc
}

fn limit_from(traj: &Trajectory, eval: impl Fn(usize, f64) -> Result<f64>) -> Result<LimitEstimate> {
    let t_sing = traj.estimated_t.value;
    let idx = extrapolation_frames(traj);
    if idx.is_empty() {
        return Err(Error::Trajectory("no resolved frame before the singular time".into()));
    }
    let eps: Vec<f64> = idx.iter().map(|&i| t_sing - traj.frames[i].t).collect();
    let vals: Vec<f64> = idx
        .iter()
        .zip(&eps)
        .map(|(&i, &e)| eval(i, e))
        .collect::<Result<_>>()?;
    let times = idx.iter().map(|&i| traj.frames[i].t).collect();
    if idx.len() < 3 {
        return Ok(LimitEstimate {
            value: vals[0],
            last_value: vals[0],
            times,
            flagged: true,
        });
    }
    Ok(LimitEstimate {
        value: extrapolate_to_zero(&eps, &vals),
        last_value: vals[0],
        times,
        flagged: false,
    })
}

/// Gaussian density `Θ(p)`: the Huisken functional at `p` with `τ = T - t`,
/// extrapolated to `t → T⁻`.
pub fn theta_estimate(traj: &Trajectory, p: Vec2) -> Result<LimitEstimate> {
    limit_from(traj, |i, eps| {
        huisken_functional_with(&CurveQuadrature::new(&traj.frames[i].curve), p, eps)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaLimit {
    pub limit: LimitEstimate,
    /// Maximizing centers at the frames used.
    pub centers: Vec<[f64; 2]>,
    /// `Σ > 1`: the flow really is singular.
    pub exceeds_one: bool,
}

/// `Σ = lim σ(φ_t, T - t)` as `t → T⁻`.
pub fn sigma_limit_estimate(traj: &Trajectory, opts: &DensityOptions) -> Result<SigmaLimit> {
    let idx = extrapolation_frames(traj);
    let t_sing = traj.estimated_t.value;
    let reports: Vec<DensityReport> = idx
        .iter()
        .map(|&i| sigma(&traj.frames[i].curve, t_sing - traj.frames[i].t, opts))
        .collect::<Result<_>>()?;
    let limit = limit_from(traj, |i, _| {
        let k = idx.iter().position(|&j| j == i).expect("frame index");
        Ok(reports[k].value)
    })?;
    Ok(SigmaLimit {
        exceeds_one: limit.value > 1.0,
        centers: reports.iter().map(|r| r.p_star).collect(),
        limit,
    })
}
