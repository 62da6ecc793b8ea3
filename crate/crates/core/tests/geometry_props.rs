use std::f64::consts::PI;

use approx::assert_relative_eq;
use gaussdens_core::geometry::{compute_geometry, shapes, transform, DiscreteCurve, Isometry, Vec2};
use proptest::prelude::*;

fn wobbly(n: usize, amp: f64, freq: u32, phase: f64) -> DiscreteCurve {
    let v = (0..n)
        .map(|i| {
            let th = 2.0 * PI * i as f64 / n as f64;
            let r = 1.0 + amp * (freq as f64 * th + phase).cos();
            Vec2::new(r * th.cos(), r * th.sin())
        })
        .collect();
    DiscreteCurve::new(v).unwrap()
}

proptest! {
    #[test]
    fn rigid_motions_preserve_curvature_and_weights(
        angle in -PI..PI, tx in -5.0..5.0f64, ty in -5.0..5.0f64,
        amp in 0.0..0.3f64, freq in 2u32..6, phase in 0.0..PI,
    ) {
        let c = wobbly(96, amp, freq, phase);
        let iso = Isometry::new(angle, Vec2::new(tx, ty));
        let moved = transform(&c, &iso, 1.0).unwrap();
        let g0 = compute_geometry(&c);
        let g1 = compute_geometry(&moved);
        let rot = Isometry::new(angle, Vec2::zeros());
        for i in 0..c.len() {
            prop_assert!((g0.curvature[i] - g1.curvature[i]).abs() < 1e-9 * (1.0 + g0.curvature[i].abs()));
            prop_assert!((g0.dual_lengths[i] - g1.dual_lengths[i]).abs() < 1e-12);
            prop_assert!((rot.apply(&g0.normals[i]) - g1.normals[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn scaling_maps_curvature_and_weights(lambda in 0.1..10.0f64, amp in 0.0..0.3f64) {
        let c = wobbly(80, amp, 3, 0.2);
        let s = transform(&c, &Isometry::identity(), lambda).unwrap();
        let g0 = compute_geometry(&c);
        let g1 = compute_geometry(&s);
        for i in 0..c.len() {
            prop_assert!((g1.curvature[i] * lambda - g0.curvature[i]).abs() < 1e-10 * (1.0 + g0.curvature[i].abs()));
            prop_assert!((g1.dual_lengths[i] - lambda * g0.dual_lengths[i]).abs() < 1e-12 * lambda);
        }
        prop_assert!((s.length() - lambda * c.length()).abs() < 1e-12 * lambda * c.length());
    }

    #[test]
    fn dual_lengths_partition_perimeter(amp in 0.0..0.4f64, freq in 2u32..7, n in 3usize..200) {
        let c = wobbly(n.max(3), amp, freq, 0.0);
        let g = compute_geometry(&c);
        let total: f64 = g.dual_lengths.iter().sum();
        prop_assert!((total - c.length()).abs() <= 1e-13 * c.length());
    }

    #[test]
    fn clockwise_input_is_reoriented(amp in 0.0..0.3f64) {
        let ccw = wobbly(64, amp, 3, 0.0);
        let cw: Vec<Vec2> = ccw.vertices().iter().rev().copied().collect();
        let c = DiscreteCurve::new(cw).unwrap();
        prop_assert!(c.signed_area() > 0.0);
        prop_assert!(compute_geometry(&c).integrated_curvature() > 0.0);
    }
}

#[test]
fn regular_polygon_curvature_is_exact() {
    // three points on a circle have that circle as circumcircle
    for n in [16, 256, 4096] {
        let g = compute_geometry(&shapes::circle(Vec2::zeros(), 1.0, n).unwrap());
        let err = g.curvature.iter().map(|k| (k - 1.0).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "n = {n}: {err}");
    }
}

#[test]
fn ellipse_curvature_converges_at_second_order() {
    let (a, b) = (2.0, 1.0);
    let err = |n: usize| {
        let c = shapes::ellipse(a, b, n).unwrap();
        let g = compute_geometry(&c);
        c.vertices()
            .iter()
            .zip(&g.curvature)
            .map(|(v, k)| {
                let (ct, st) = (v.x / a, v.y / b);
                let exact = a * b / (a * a * st * st + b * b * ct * ct).powf(1.5);
                (k - exact).abs()
            })
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(128), err(256));
    let order = (e1 / e2).log2();
    assert!(order >= 1.9, "measured order {order} ({e1:e} -> {e2:e})");
}

#[test]
fn total_turning_of_convex_curves() {
    for c in [
        shapes::ellipse(2.0, 1.0, 256).unwrap(),
        shapes::rounded_square(2.0, 0.3, 256).unwrap(),
        shapes::circle(Vec2::new(1.0, 2.0), 0.5, 64).unwrap(),
    ] {
        assert_relative_eq!(c.total_turning(), 2.0 * PI, epsilon = 1e-10);
        let g = compute_geometry(&c);
        assert_relative_eq!(g.integrated_curvature(), 2.0 * PI, max_relative = 1e-2);
    }
}

#[test]
fn square_after_refinement() {
    let sq = shapes::square(2.0).unwrap().refine_midpoints();
    let g = compute_geometry(&sq);
    assert_eq!(sq.len(), 8);
    for i in (1..8).step_by(2) {
        assert_eq!(g.curvature[i], 0.0);
    }
    assert_relative_eq!(sq.total_turning(), 2.0 * PI, epsilon = 1e-12);
}
