use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tvgeo_core::geometry::{contours, isoperimetric_margin, level_set, perimeter, BinaryRegion};
use tvgeo_core::solver::{
    certificate_from_dual, dual_objective, primal_energy, project_unit_balls, solve, tv_d,
    Boundary, SolverConfig,
};
use tvgeo_core::{divergence4, gradient4, noise, DualField, GridImage};

fn random_image(n: usize, seed: u64) -> GridImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GridImage::from_vec(n, (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn random_field(n: usize, seed: u64, amp: f64) -> DualField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = (0..n * n)
        .map(|_| core::array::from_fn(|_| amp * rng.random_range(-1.0..1.0)))
        .collect();
    DualField::from_vec(n, v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn adjoint_identity(k in 0usize..4, seed in any::<u64>()) {
        let n = [4, 8, 16, 32][k];
        let u = random_image(n, seed);
        let z = random_field(n, seed ^ 0x5eed, 1.0);
        let lhs = gradient4(&u).dot(&z);
        let rhs = -u.dot(&divergence4(&z));
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1e-300));
    }

    #[test]
    fn projection_is_idempotent(seed in any::<u64>(), amp in 0.01f64..10.0) {
        let z = random_field(8, seed, amp);
        let p = project_unit_balls(&z);
        prop_assert!(p.is_feasible());
        prop_assert_eq!(project_unit_balls(&p), p);
    }

    #[test]
    fn weak_duality(seed in any::<u64>(), lambda in 0.01f64..0.5) {
        let n = 8;
        let y = random_image(n, seed);
        let u = random_image(n, seed.wrapping_add(1));
        for b in [Boundary::Free, Boundary::Periodic] {
            let z = project_unit_balls(&random_field(b.working_side(n), seed ^ 7, 2.0));
            let gap = primal_energy(&u, &y, lambda, b) - dual_objective(&z, &y, lambda, b).unwrap();
            prop_assert!(gap >= -1e-12);
        }
    }

    #[test]
    fn isoperimetric_inequality_for_bump_level_sets(seed in any::<u64>(), t in 0.05f64..0.95) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bumps: Vec<(f64, f64, f64)> = (0..4)
            .map(|_| (rng.random_range(0.3..0.7), rng.random_range(0.3..0.7), rng.random_range(0.003..0.01)))
            .collect();
        let u = GridImage::from_fn(64, |x, y| {
            bumps.iter().map(|&(a, b, s)| (-((x - a).powi(2) + (y - b).powi(2)) / s).exp()).fold(0.0, f64::max)
        });
        let set = level_set(&u, t).region;
        prop_assert!(isoperimetric_margin(&set) >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solver_output_is_consistent(seed in any::<u64>(), lambda in 0.02f64..0.3) {
        let n = 12;
        let y = random_image(n, seed);
        let cfg = SolverConfig::new(lambda).with_gap_tol(1e-5).with_max_iters(20_000);
        let r = solve(&y, &cfg).unwrap();
        prop_assert!(r.z.is_feasible());
        prop_assert_eq!(&certificate_from_dual(&r.z, n, r.boundary).unwrap(), &r.v);
        prop_assert_eq!(&y.axpy(-lambda, &r.v), &r.u);
    }

    #[test]
    fn certificates_are_non_expansive(seed in any::<u64>()) {
        let n = 12;
        let lambda = 0.1;
        let f = GridImage::from_fn(n, |x, y| f64::from(u8::from((x - 0.5).abs() < 0.25 && (y - 0.5).abs() < 0.2)));
        let cfg = SolverConfig::new(lambda).with_gap_tol(1e-9).with_max_iters(200_000);
        let (y1, _) = noise::add_noise(&f, 0.2, seed);
        let (y2, _) = noise::add_noise(&f, 0.2, seed.wrapping_add(1));
        let (r1, r2) = (solve(&y1, &cfg).unwrap(), solve(&y2, &cfg).unwrap());
        let dv = r1.v.axpy(-1.0, &r2.v).l2_norm();
        let dw = y1.axpy(-1.0, &y2).l2_norm();
        // ||u - u*||^2 <= 2 gap, so each certificate is within sqrt(2 gap)/lambda
        let slack = |r: &tvgeo_core::solver::SolveResult| {
            let g = r.final_gap().unwrap();
            (2.0 * (g.primal - g.dual).max(0.0)).sqrt() / lambda
        };
        prop_assert!(dv <= dw / lambda + slack(&r1) + slack(&r2) + 1e-12, "{dv} vs {}", dw / lambda);
    }

    #[test]
    fn coarea_on_rectangle_mosaics(seed in any::<u64>()) {
        // marching squares rounds each corner off by about 0.84 pixel, so the
        // rectangles are large and kept apart, one per quadrant
        let n = 128;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = GridImage::zeros(n);
        for q in 0..4usize {
            let (w, h) = (rng.random_range(40..56usize), rng.random_range(40..56usize));
            let i0 = 64 * (q / 2) + rng.random_range(2..=62 - w);
            let j0 = 64 * (q % 2) + rng.random_range(2..=62 - h);
            let level = f64::from(rng.random_range(1..5u8)) * 0.25;
            for i in i0..i0 + w {
                for j in j0..j0 + h {
                    u.set(i, j, level);
                }
            }
        }
        let mut values: Vec<f64> = u.values().to_vec();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let coarea: f64 = values
            .windows(2)
            .map(|w| perimeter(&level_set(&u, 0.5 * (w[0] + w[1])).region) * (w[1] - w[0]))
            .sum();
        let tv = tv_d(&u, Boundary::Periodic);
        prop_assert!((coarea / tv - 1.0).abs() <= 0.03, "coarea {coarea} tv {tv}");
    }
}

#[test]
fn level_lines_of_a_region_are_closed() {
    let r = BinaryRegion::from_fn(32, |x, y| (x - 0.5).powi(2) + (y - 0.5).powi(2) < 0.09);
    assert!(contours(&r).curves.iter().all(|c| c.closed));
}
