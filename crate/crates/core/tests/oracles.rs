//! Cross-checks against independent re-implementations and closed forms.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tvgeo_core::analytic::{cheeger_radius, opening, rasterize, Shape};
use tvgeo_core::certify::{extended_support, mnc_estimate};
use tvgeo_core::geometry::{contours, convex_hull, hausdorff, perimeter, BinaryRegion, ContourSet};
use tvgeo_core::solver::{solve, Boundary, SolverConfig};
use tvgeo_core::GridImage;

/// Free-space TV of an `n x n` image: zero padding on an `(n+1)`-torus,
/// forward differences scaled by `n`, 4-fold stencil, divided by `sqrt 2`.
fn naive_tv(u: &[f64], n: usize, periodic: bool) -> f64 {
    let m = if periodic { n } else { n + 1 };
    let at = |i: usize, j: usize| {
        let (i, j) = (i % m, j % m);
        if i < n && j < n {
            u[i * n + j]
        } else {
            0.0
        }
    };
    let s = n as f64;
    let mut tv = 0.0;
    for i in 0..m {
        for j in 0..m {
            let g = [
                at(i + 1, j) - at(i, j),
                at(i, j + 1) - at(i, j),
                at(i + 1, j + 1) - at(i + 1, j),
                at(i + 1, j + 1) - at(i, j + 1),
            ];
            tv += s * g.iter().map(|x| x * x).sum::<f64>().sqrt();
        }
    }
    tv / 2f64.sqrt() / (n * n) as f64
}

#[test]
fn solver_is_optimal_under_an_independent_energy() {
    let n = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let y: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..1.0)).collect();
    let img = GridImage::from_vec(n, y.clone()).unwrap();
    for (b, periodic) in [(Boundary::Free, false), (Boundary::Periodic, true)] {
        let lambda = 0.05;
        let r = solve(
            &img,
            &SolverConfig::new(lambda)
                .with_boundary(b)
                .with_gap_tol(1e-10)
                .with_max_iters(400_000),
        )
        .unwrap();
        assert!(r.converged);
        let h2 = 1.0 / (n * n) as f64;
        let energy = |u: &[f64]| {
            0.5 * h2
                * u.iter()
                    .zip(&y)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                + lambda * naive_tv(u, n, periodic)
        };
        let e_star = energy(r.u.values());
        // the dual objective is a lower bound on every primal energy
        let dual = 0.5
            * h2
            * (y.iter().map(|v| v * v).sum::<f64>()
                - r.u.values().iter().map(|v| v * v).sum::<f64>());
        assert!(
            e_star - dual <= 1e-9 * (e_star.abs() + 1.0),
            "{b:?}: gap {}",
            e_star - dual
        );
        // random perturbations never decrease the energy
        for _ in 0..200 {
            let k = rng.random_range(0..n * n);
            let mut u = r.u.values().to_vec();
            u[k] += rng.random_range(-1e-3..1e-3);
            assert!(energy(&u) >= e_star - 1e-12);
        }
    }
}

#[test]
fn cheeger_radii_match_quadratic_roots() {
    for side in [0.5, 1.0, 0.3] {
        let r = cheeger_radius(&Shape::rectangle(0.0, 0.0, side, side)).unwrap();
        // (4 - pi) rho^2 - 4 side rho + side^2 = 0, smaller root
        let a = 4.0 - PI;
        let want = (4.0 * side - (16.0 * side * side - 4.0 * a * side * side).sqrt()) / (2.0 * a);
        assert!((r - want).abs() < 1e-9, "{side}: {r} vs {want}");
    }
    let (w, h) = (0.4, 0.2);
    let a = 4.0 - PI;
    let want = (2.0 * (w + h) - (4.0 * (w + h) * (w + h) - 4.0 * a * w * h).sqrt()) / (2.0 * a);
    assert!((cheeger_radius(&Shape::rectangle(0.1, 0.1, w, h)).unwrap() - want).abs() < 1e-9);
    assert!((cheeger_radius(&Shape::disc(0.5, 0.5, 0.2)).unwrap() - 0.1).abs() < 1e-9);
}

#[test]
fn rectangle_opening_area_follows_steiner() {
    let n = 1024;
    let shape = Shape::rectangle(0.2, 0.25, 0.6, 0.5);
    for rho in [0.05, 0.1, 0.2] {
        let got = opening(&shape, rho, n).unwrap().area();
        let want = 0.6 * 0.5 - (4.0 - PI) * rho * rho;
        assert!(
            (got / want - 1.0).abs() < 2e-3,
            "rho {rho}: {got} vs {want}"
        );
    }
}

#[test]
fn union_of_two_discs_and_hull_share_the_perimeter() {
    let n = 512;
    let r = 0.12;
    let d = PI * r;
    let shape = Shape::union(vec![
        Shape::disc(0.5 - d / 2.0, 0.5, r),
        Shape::disc(0.5 + d / 2.0, 0.5, r),
    ])
    .unwrap();
    let region = BinaryRegion::from_fn(n, |x, y| shape.contains([x, y]));
    let p = perimeter(&region);
    let hull = convex_hull(contours(&region).vertices()).length();
    let want = 4.0 * PI * r;
    assert!((p / want - 1.0).abs() < 0.01, "{p}");
    assert!((hull / want - 1.0).abs() < 0.01, "{hull}");
    assert!((p / hull - 1.0).abs() < 0.01);
}

#[test]
fn disc_certificate_sweep_plateaus_at_eight() {
    let n = 64;
    let shape = Shape::disc(0.5, 0.5, 0.25);
    let f = rasterize(&shape, n);
    let cfg = SolverConfig::new(0.1)
        .with_gap_tol(1e-6)
        .with_max_iters(100_000);
    let sweep = mnc_estimate(&f, &[0.1, 0.08, 0.06], &cfg).unwrap();
    assert!(sweep.max_pairwise() <= 0.05, "{:?}", sweep.pairwise);
    let inside = BinaryRegion::from_fn(n, |x, y| (x - 0.5).powi(2) + (y - 0.5).powi(2) < 0.2 * 0.2);
    for e in &sweep.estimates {
        let mean =
            e.v.values()
                .iter()
                .zip(inside.mask())
                .filter(|p| *p.1)
                .map(|p| p.0)
                .sum::<f64>()
                / inside.count() as f64;
        // the discrete stencil overestimates the perimeter by a few percent
        assert!(
            (mean / 8.0 - 1.0).abs() < 0.08,
            "lambda {}: {mean}",
            e.lambda
        );
    }
}

#[test]
fn square_certificates_grow_without_plateau() {
    // v_{lambda,0} = min(v_C, 1/lambda) and the corner layers C_rho \ C_{rho+d rho}
    // have area 2 (4 - pi) rho d rho, so each halving of lambda adds
    // 2 (4 - pi) ln 2 to ||v||^2
    let n = 128;
    let f = rasterize(&Shape::centered_square(0.5), n);
    let cfg = SolverConfig::new(0.1)
        .with_gap_tol(1e-5)
        .with_max_iters(100_000);
    let sweep = mnc_estimate(&f, &[0.04, 0.02, 0.01], &cfg).unwrap();
    let want = 2.0 * (4.0 - PI) * 2f64.ln();
    for w in sweep.estimates.windows(2) {
        let step = w[1].l2_norm.powi(2) - w[0].l2_norm.powi(2);
        assert!((step / want - 1.0).abs() < 0.15, "step {step} vs {want}");
    }
    assert!(sweep.norm_slope().unwrap() < -0.02);
}

#[test]
fn disc_saturation_hugs_the_boundary() {
    let n = 256;
    let shape = Shape::disc(0.5, 0.5, 0.25);
    let f = rasterize(&shape, n);
    let cfg = SolverConfig::new(0.02)
        .with_gap_tol(1e-5)
        .with_max_iters(100_000);
    let map = extended_support(&f, 0.02, 0.02, &cfg).unwrap();
    let outer = ContourSet::new(
        contours(&map.region)
            .curves
            .into_iter()
            .filter(|c| c.is_outer())
            .collect(),
    );
    assert_eq!(outer.len(), 1);
    let boundary = shape.boundary_contours(2048);
    let h = 1.0 / n as f64;
    // along the axes the band ends within a few pixels of the circle (the
    // forward-difference stencil shifts the lower and left sides outward)
    for p in outer
        .vertices()
        .filter(|p| (p[0] - 0.5).abs() < 2.0 * h || (p[1] - 0.5).abs() < 2.0 * h)
    {
        assert!(
            boundary.distance_to(p) <= 4.0 * h,
            "{p:?}: {} pixels",
            boundary.distance_to(p) / h
        );
    }
    // along the diagonals the staircase widens the saturated band outward
    let d = hausdorff(&outer, &boundary).unwrap();
    assert!(d <= 9.0 * h, "{} pixels", d / h);
}
