use std::f64::consts::{E, PI};
use std::sync::OnceLock;

use gaussdens_core::density::{sigma, sigma_limit_estimate, theta_estimate, DensityOptions};
use gaussdens_core::flow::{evolve, EvolveOptions, FlowParams, Trajectory};
use gaussdens_core::geometry::{shapes, Isometry, Vec2};
use gaussdens_core::io::CurveFile;
use gaussdens_core::singularity::{
    breather_check, classify, inverse_rescale, limit_density, rescale_transform, BreatherHypothesis,
    BreatherOptions, LimitMatch, SingularityType,
};

fn round_density() -> f64 {
    (2.0 * PI / E).sqrt()
}

fn circle_traj() -> &'static Trajectory {
    static T: OnceLock<Trajectory> = OnceLock::new();
    T.get_or_init(|| evolve(&shapes::circle(Vec2::zeros(), 1.0, 256).unwrap(), &EvolveOptions::default()).unwrap())
}

fn ellipse_traj() -> &'static Trajectory {
    static T: OnceLock<Trajectory> = OnceLock::new();
    T.get_or_init(|| evolve(&shapes::ellipse(2.0, 1.0, 256).unwrap(), &EvolveOptions::default()).unwrap())
}

fn opts() -> DensityOptions {
    DensityOptions::default()
}

#[test]
fn theta_at_and_away_from_the_shrink_point() {
    let traj = circle_traj();
    let at = theta_estimate(traj, Vec2::zeros()).unwrap();
    assert!(!at.flagged);
    assert!((at.value - round_density()).abs() < 1e-3, "{}", at.value);
    let far = theta_estimate(traj, Vec2::new(10.0, 0.0)).unwrap();
    assert!(far.value.abs() < 1e-12);
}

#[test]
fn sigma_limit_dominates_theta() {
    for traj in [circle_traj(), ellipse_traj()] {
        let s = sigma_limit_estimate(traj, &opts()).unwrap();
        assert!(s.exceeds_one);
        assert!((s.limit.value - round_density()).abs() < 2e-3, "{}", s.limit.value);
        let shrink = *s.centers.last().unwrap();
        let shrink = Vec2::new(shrink[0], shrink[1]);
        let theta = theta_estimate(traj, shrink).unwrap().value;
        assert!(theta >= 1.0 - 1e-3, "{theta}");
        for p in [shrink, Vec2::new(0.05, 0.0), Vec2::new(0.0, -0.1), Vec2::new(1.0, 1.0)] {
            let th = theta_estimate(traj, p).unwrap().value;
            assert!(th <= s.limit.value + 1e-3, "{p:?}: {th}");
        }
    }
}

#[test]
fn circle_classification() {
    let r = classify(circle_traj(), &opts()).unwrap();
    assert_eq!(r.kind, SingularityType::TypeI);
    assert!((r.type_one_constant - 1.0).abs() < 1e-3);
    assert_eq!(r.limit_match, LimitMatch::UnitCircle);
    assert!(r.hausdorff < 1e-3);
    assert!((r.limit_density - round_density()).abs() < 1e-3);
    assert!(r.limit_density != 1.0);
    assert!(r.type_one_constant >= 1.0 - 1e-3);
}

#[test]
fn ellipse_classification_and_residual_decay() {
    let r = classify(ellipse_traj(), &opts()).unwrap();
    assert_eq!(r.kind, SingularityType::TypeI);
    assert_eq!(r.limit_match, LimitMatch::UnitCircle);
    assert!(r.hausdorff < 0.05);
    assert!(r.sigma > 1.0);
    assert!(r.type_one_constant >= 1.0 - 1e-3);
    assert!(r.residuals.len() >= 3);
    for w in r.residuals.windows(2) {
        assert!(w[1] < w[0], "{:?}", r.residuals);
    }
    for w in r.rescaled.windows(2) {
        assert!(w[1].s > w[0].s);
    }
    let json = serde_json::to_value(&r).unwrap();
    for key in ["type", "typeI_constant", "limit_match", "hausdorff", "Sigma", "limit_density"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["type"], "TypeI");
}

#[test]
fn rescaled_sigma_matches_source() {
    let traj = ellipse_traj();
    let t_sing = traj.estimated_t.value;
    for f in traj.frames.iter().step_by(40).filter(|f| f.t < t_sing) {
        let source = sigma(&f.curve, t_sing - f.t, &opts()).unwrap();
        let frame = rescale_transform(&f.curve, f.t, t_sing, source.center()).unwrap();
        let rescaled = sigma(&frame.curve, 0.5, &opts()).unwrap();
        assert!((rescaled.value - source.value).abs() < 1e-10, "t = {}", f.t);
        let back = inverse_rescale(&frame);
        for (a, b) in back.vertices().iter().zip(f.curve.vertices()) {
            assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()));
        }
    }
}

#[test]
fn rescaled_frame_export_carries_s() {
    let c = shapes::circle(Vec2::zeros(), 1.0, 8).unwrap();
    let f = rescale_transform(&c, 0.5, 1.0, Vec2::zeros()).unwrap();
    let v = serde_json::to_value(CurveFile::from(&f)).unwrap();
    assert_eq!(v["n"], 1);
    assert_eq!(v["vertices"].as_array().unwrap().len(), 8);
    assert!((v["s"].as_f64().unwrap() - 0.5 * 2f64.ln()).abs() < 1e-15);
    assert!((limit_density(&f) - round_density()).abs() < 0.05);
}

#[test]
fn circle_is_a_breather() {
    let h = BreatherHypothesis::new(0.25, 0.5f64.sqrt(), Isometry::identity()).unwrap();
    let r = breather_check(circle_traj(), &h, &opts(), &FlowParams::default(), &BreatherOptions::default()).unwrap();
    assert!(r.is_breather);
    assert!(r.residual_integral < 1e-5);
    assert!((r.c - 0.5).abs() < 1e-12);
    assert!(r.sigma_gap.abs() <= 10.0 * r.quadrature_error.max(1e-8), "{} vs {}", r.sigma_gap, r.quadrature_error);
    assert!(r.sigma_gap >= r.residual_integral - 1e-6);
}

#[test]
fn ellipse_is_not_a_breather() {
    let traj = ellipse_traj();
    let h = BreatherHypothesis::fit(traj, 0.1, &FlowParams::default()).unwrap();
    assert!(h.lambda < 1.0);
    let r = breather_check(traj, &h, &opts(), &FlowParams::default(), &BreatherOptions::default()).unwrap();
    assert!(!r.is_breather);
    assert!(!r.shape_match);
    assert!(r.residual_integral > 1e-2, "{}", r.residual_integral);
    assert!(r.sigma_gap >= r.residual_integral - 1e-3);
}

#[test]
fn breather_guards() {
    let traj = circle_traj();
    let near_one = BreatherHypothesis::new(0.25, 0.999_999, Isometry::identity()).unwrap();
    assert!(breather_check(traj, &near_one, &opts(), &FlowParams::default(), &BreatherOptions::default()).is_err());
    let late = BreatherHypothesis::new(5.0, 0.5, Isometry::identity()).unwrap();
    assert!(breather_check(traj, &late, &opts(), &FlowParams::default(), &BreatherOptions::default()).is_err());
}

#[test]
fn too_short_trajectory_is_unresolved() {
    let c = shapes::circle(Vec2::zeros(), 1.0, 64).unwrap();
    let mut opts_flow = EvolveOptions::default();
    opts_flow.stop.max_steps = 1;
    let traj = evolve(&c, &opts_flow).unwrap();
    assert!(traj.truncated());
    let r = classify(&traj, &opts()).unwrap();
    assert_eq!(r.kind, SingularityType::Unresolved);
}
