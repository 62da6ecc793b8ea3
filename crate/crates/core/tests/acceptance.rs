//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::{E, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gaussdens_core::density::{self, density_upper_bound, nu, nu_lower_scale, sigma, sigma_sphere, DensityOptions};
use gaussdens_core::flow::{evolve, sphere_evolve, sphere_singular_time, EvolveOptions, FlowParams, Trajectory};
use gaussdens_core::geometry::{shapes, transform, DiscreteCurve, Isometry, SphereState, Vec2};
use gaussdens_core::heat::{li_yau_check, normal_second_term, GaussianMixture, INEQUALITY_SLACK};
use gaussdens_core::singularity::{
    breather_check, classify, BreatherHypothesis, BreatherOptions, SingularityType,
};
use gaussdens_core::verify::{hamilton_fd_error, sigma_along, worst_increase, worst_integrated_slack};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn round_density() -> f64 {
    (2.0 * PI / E).sqrt()
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

struct Shared {
    circle: Trajectory,
    circle_time: Duration,
    ellipse: Trajectory,
    ellipse_time: Duration,
}

fn shared() -> Shared {
    let start = Instant::now();
    let circle = evolve(&shapes::circle(Vec2::zeros(), 1.0, 256).unwrap(), &EvolveOptions::default()).unwrap();
    let circle_time = start.elapsed();
    let start = Instant::now();
    let ellipse = evolve(&shapes::ellipse(2.0, 1.0, 512).unwrap(), &EvolveOptions::default()).unwrap();
    let ellipse_time = start.elapsed();
    Shared {
        circle,
        circle_time,
        ellipse,
        ellipse_time,
    }
}

fn opts() -> DensityOptions {
    DensityOptions::default()
}

fn shrinking_circle(s: &Shared) -> Outcome {
    let start = Instant::now();
    let t_sing = s.circle.estimated_t.value;
    let mut worst: f64 = 0.0;
    for f in s.circle.frames.iter().filter(|f| f.t <= 0.45) {
        let v = sigma(&f.curve, t_sing - f.t, &opts()).unwrap().value;
        worst = worst.max((v - round_density()).abs());
    }
    let runtime = s.circle_time + start.elapsed();
    outcome(
        (t_sing - 0.5).abs() <= 1e-3 && worst <= 5e-3 && runtime <= Duration::from_secs(10),
        format!(
            "T = {t_sing:.6} (|T-0.5| = {:.2e} <= 1e-3), max |σ - √(2π/e)| = {worst:.2e} <= 5e-3, runtime {:.2?} <= 10s",
            (t_sing - 0.5).abs(),
            runtime
        ),
    )
}

fn monotonicity(s: &Shared) -> Outcome {
    let mut increase = f64::NEG_INFINITY;
    let mut slack = f64::INFINITY;
    for traj in [&s.circle, &s.ellipse] {
        let vals = sigma_along(traj, traj.estimated_t.value, &opts()).unwrap();
        increase = increase.max(worst_increase(&vals));
        slack = slack.min(worst_integrated_slack(&vals));
    }
    outcome(
        increase < 1e-4 && slack >= -1e-3,
        format!("largest σ increase {increase:.2e} < 1e-4, worst integrated slack {slack:.2e} >= -1e-3"),
    )
}

fn test_shapes() -> Vec<DiscreteCurve> {
    vec![
        shapes::circle(Vec2::zeros(), 1.0, 256).unwrap(),
        shapes::ellipse(2.0, 1.0, 256).unwrap(),
        shapes::rounded_square(2.0, 0.4, 256).unwrap(),
    ]
}

fn rescaling() -> Outcome {
    let mut worst: f64 = 0.0;
    for c in test_shapes() {
        for tau in [0.05, 0.3, 1.0] {
            let base = sigma(&c, tau, &opts()).unwrap().value;
            for lambda in [0.5, 2.0, 10.0] {
                let scaled = transform(&c, &Isometry::identity(), lambda).unwrap();
                let v = sigma(&scaled, lambda * lambda * tau, &opts()).unwrap().value;
                worst = worst.max((v - base).abs());
            }
        }
    }
    outcome(worst < 1e-10, format!("max |σ(λφ, λ²τ) - σ(φ, τ)| = {worst:.2e} < 1e-10"))
}

fn nu_oracle() -> Outcome {
    let r = nu(&shapes::circle(Vec2::zeros(), 1.0, 256).unwrap(), &opts()).unwrap();
    let tau = r.tau_star.unwrap_or(f64::NAN);
    let dv = (r.value - round_density()).abs();
    let dt = (tau - 0.5).abs();
    outcome(
        dv <= 1e-3 && dt <= 1e-3,
        format!("ν = {:.6} (err {dv:.2e}), τ* = {tau:.6} (err {dt:.2e}), both <= 1e-3", r.value),
    )
}

fn li_yau() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut violations = 0;
    let mut margin = f64::INFINITY;
    for i in 0..1000 {
        let dim = 2 + i % 2;
        let tau = rng.random_range(0.1..3.0);
        let count = rng.random_range(1..6);
        let m = GaussianMixture::random(&mut rng, dim, tau, count, 2.0).unwrap();
        let s = rng.random_range(0.0..0.95 * tau);
        let t = rng.random_range(s..0.99 * tau);
        let x = DVector::from_fn(dim, |_, _| rng.random_range(-3.0..3.0));
        let y = if i % 10 == 0 {
            x.clone()
        } else {
            DVector::from_fn(dim, |_, _| rng.random_range(-3.0..3.0))
        };
        let c = li_yau_check(&m, &x, t, &y, s).unwrap();
        margin = margin.min(c.log_margin);
        if c.log_margin < -INEQUALITY_SLACK {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("1000 draws in dimensions 2 and 3: {violations} violations, smallest log margin {margin:.2e}"),
    )
}

fn hamilton() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let c = rng.random_range(0.3..3.0);
        let center = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        let m = GaussianMixture::single(center.clone(), c).unwrap();
        let t = rng.random_range(0.0..0.9 * c);
        let x = &center + DVector::from_fn(2, |_, _| rng.random_range(-2.0..2.0));
        let a: f64 = rng.random_range(0.0..2.0 * PI);
        let normal = DVector::from_vec(vec![a.cos(), a.sin()]);
        worst = worst.max(normal_second_term(&m, &x, t, c, &normal).unwrap().abs());
    }
    let curve = shapes::ellipse(2.0, 1.0, 512).unwrap();
    let h = curve.min_edge();
    let m = GaussianMixture::random(&mut rng, 2, 1.5, 3, 0.8).unwrap();
    let fd = hamilton_fd_error(&curve, &m, 0.01, 0.2 * h * h).unwrap();
    outcome(
        worst < 1e-12 && fd < 1e-3,
        format!("single-kernel second term max {worst:.2e} < 1e-12, finite-difference rel. err {fd:.2e} < 1e-3"),
    )
}

fn breather(s: &Shared) -> Outcome {
    let fp = FlowParams::default();
    let bo = BreatherOptions::default();
    let h = BreatherHypothesis::new(0.25, 0.5f64.sqrt(), Isometry::identity()).unwrap();
    let c = breather_check(&s.circle, &h, &opts(), &fp, &bo).unwrap();
    let he = BreatherHypothesis::fit(&s.ellipse, 0.1, &fp).unwrap();
    let e = breather_check(&s.ellipse, &he, &opts(), &fp, &bo).unwrap();
    outcome(
        c.is_breather
            && c.residual_integral < 1e-5
            && c.sigma_gap.abs() < 1e-4
            && !e.is_breather
            && e.residual_integral > 1e-2,
        format!(
            "circle: breather {} residual {:.2e} < 1e-5, gap {:.2e} < 1e-4; ellipse (λ = {:.4}): breather {} residual {:.2e} > 1e-2",
            c.is_breather, c.residual_integral, c.sigma_gap, he.lambda, e.is_breather, e.residual_integral
        ),
    )
}

fn singularity(s: &Shared) -> Outcome {
    let start = Instant::now();
    let r = classify(&s.ellipse, &opts()).unwrap();
    let runtime = s.ellipse_time + start.elapsed();
    let dd = (r.limit_density - round_density()).abs();
    outcome(
        r.kind == SingularityType::TypeI
            && (1.0..=1.5).contains(&r.type_one_constant)
            && r.hausdorff < 0.05
            && dd <= 0.02
            && r.sigma > 1.0
            && runtime <= Duration::from_secs(120),
        format!(
            "{:?}, type-I constant {:.4} in [1, 1.5], Hausdorff {:.2e} < 0.05, limit density {:.5} (err {dd:.2e} <= 0.02), Σ = {:.5} > 1, runtime {:.2?} <= 120s",
            r.kind, r.type_one_constant, r.hausdorff, r.limit_density, r.sigma, runtime
        ),
    )
}

fn spheres() -> Outcome {
    let s = SphereState::centered(2f64.sqrt(), 2).unwrap();
    let err = (sigma_sphere(&s, 0.5).unwrap() - 4.0 / E).abs();
    let mut exact = true;
    for (n, r) in [(1usize, 1.0f64), (2, 1.0), (2, 2f64.sqrt()), (3, 1.5), (5, 0.3)] {
        let sp = SphereState::centered(r, n).unwrap();
        let t = sphere_singular_time(&sp);
        exact &= t == r * r / (2.0 * n as f64);
        exact &= sphere_evolve(&sp, t).is_err();
        exact &= sphere_evolve(&sp, t * (1.0 - 1e-12)).is_ok();
    }
    outcome(
        err <= 1e-12 && exact,
        format!("|σ_sphere(2, √2, 1/2) - 4/e| = {err:.2e} <= 1e-12, T = R²/2n exact: {exact}"),
    )
}

fn endpoints() -> Outcome {
    let mut worst_lo: f64 = 0.0;
    let mut violations = 0;
    let mut evaluated = 0;
    for c in test_shapes() {
        let lo = nu_lower_scale(&c);
        worst_lo = worst_lo.max((sigma(&c, lo, &opts()).unwrap().value - 1.0).abs());
        let hi = 1e4 * c.length().powi(2);
        let taus: Vec<f64> = (0..40).map(|i| lo * (hi / lo).powf(i as f64 / 39.0)).collect();
        for r in density::sigma_profile(&c, &taus, &opts()).unwrap() {
            evaluated += 1;
            if r.value > density_upper_bound(&c, r.diagnostics.tau) {
                violations += 1;
            }
        }
    }
    outcome(
        worst_lo <= 2e-2 && violations == 0,
        format!("max |σ(τ_lo) - 1| = {worst_lo:.2e} <= 2e-2, {violations} bound violations in {evaluated} evaluations"),
    )
}

fn main() -> ExitCode {
    let s = shared();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("shrinking-circle oracle", Box::new(|| shrinking_circle(&s))),
        ("monotonicity suite", Box::new(|| monotonicity(&s))),
        ("rescaling invariance", Box::new(rescaling)),
        ("nu oracle", Box::new(nu_oracle)),
        ("li-yau battery", Box::new(li_yau)),
        ("hamilton decomposition", Box::new(hamilton)),
        ("breather test", Box::new(|| breather(&s))),
        ("singularity analysis", Box::new(|| singularity(&s))),
        ("sphere closed forms", Box::new(spheres)),
        ("density endpoints", Box::new(endpoints)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.passed {
            failed += 1;
        }
        println!(
            "[{}] criterion {:>2} {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
