use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::BinaryRegion;
use crate::grid::GridImage;

use super::shape::Shape;

/// Anti-aliased indicator: each pixel holds the fraction of a 4x4 grid of
/// sub-samples that falls inside the shape.
pub fn rasterize(shape: &Shape, n: usize) -> GridImage {
    let h = 1.0 / n as f64;
    let mut img = GridImage::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut c = 0;
            for a in 0..4 {
                for b in 0..4 {
                    let x = (i as f64 + (a as f64 + 0.5) / 4.0) * h;
                    let y = (j as f64 + (b as f64 + 0.5) / 4.0) * h;
                    if shape.contains([x, y]) {
                        c += 1;
                    }
                }
            }
            img.set(i, j, c as f64 / 16.0);
        }
    }
    img
}

/// Pixels whose center lies in the opening `C_rho`.
pub fn opening(shape: &Shape, rho: f64, n: usize) -> Result<BinaryRegion> {
    if !shape.is_convex() {
        return Err(Error::NotConvex);
    }
    if !(rho > 0.0) || shape.erosion(rho).is_none() {
        return Err(Error::EmptyOpening { rho });
    }
    Ok(BinaryRegion::from_fn(n, |x, y| {
        shape.opening_contains([x, y], rho)
    }))
}

/// Root of `g(rho) = rho P(C_rho) - |C_rho|` on `(0, inradius]`, by
/// bisection on the closed-form measures. At the root `P(C_R)/|C_R| = 1/R`.
pub fn cheeger_radius(shape: &Shape) -> Result<f64> {
    if !shape.is_convex() {
        return Err(Error::NotConvex);
    }
    let g = |rho: f64| -> Result<f64> {
        let (p, a) = shape.opening_measures(rho)?;
        Ok(rho * p - a)
    };
    let mut lo = 0.0;
    let mut hi = shape.inradius();
    if g(hi)? <= 0.0 {
        return Err(Error::NotBracketed);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `r(x) = sup { rho : x in C_rho }` for `x` in `C \ C_R`, by bisection.
fn opening_radius(shape: &Shape, p: [f64; 2], r_max: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, r_max);
    for _ in 0..48 {
        let mid = 0.5 * (lo + hi);
        if shape.opening_contains(p, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Value of `v_C` at a point of a convex shape: `1/R` on the Cheeger set
/// `C_R`, `1/r(x)` on `C \ C_R`, 0 outside.
fn v_c_at(shape: &Shape, radius: f64, p: [f64; 2]) -> f64 {
    if !shape.contains(p) {
        0.0
    } else if shape.opening_contains(p, radius) {
        1.0 / radius
    } else {
        1.0 / opening_radius(shape, p, radius)
    }
}

fn per_component(
    shape: &Shape,
    n: usize,
    value: impl Fn(&Shape, f64, [f64; 2]) -> f64,
) -> Result<GridImage> {
    let parts = shape.components();
    let radii: Vec<f64> = parts.iter().map(cheeger_radius).collect::<Result<_>>()?;
    Ok(GridImage::from_fn(n, |x, y| {
        parts
            .iter()
            .zip(&radii)
            .map(|(c, &r)| value(c, r, [x, y]))
            .sum()
    }))
}

/// Rasterized `v_C` (sampled at pixel centers). For a union of disjoint
/// convex sets the component certificates are added.
pub fn convex_certificate_v0(shape: &Shape, n: usize) -> Result<GridImage> {
    per_component(shape, n, v_c_at)
}

/// Rasterized `v_{lambda,0} = min(v_C, 1/lambda) 1_C`: `v_C` on `C_lambda`,
/// `1/lambda` on `C \ C_lambda`.
///
/// Errors with [`Error::LambdaTooLarge`] unless `lambda` is below the Cheeger
/// radius of every component, where the formula is valid.
pub fn convex_certificate_vlambda(shape: &Shape, lambda: f64, n: usize) -> Result<GridImage> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    for c in shape.components() {
        let limit = cheeger_radius(c)?;
        if lambda >= limit {
            return Err(Error::LambdaTooLarge { lambda, limit });
        }
    }
    per_component(shape, n, |c, r, p| {
        v_c_at(c, r, p).min(1.0 / lambda) * if c.contains(p) { 1.0 } else { 0.0 }
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibrability {
    pub is_calibrable: bool,
    pub kappa_max: f64,
    /// `P(C)/|C|`.
    pub h: f64,
}

/// A convex set is calibrable iff its boundary curvature never exceeds
/// `P(C)/|C|`.
pub fn calibrable_check(shape: &Shape) -> Result<Calibrability> {
    if !shape.is_convex() {
        return Err(Error::NotConvex);
    }
    let kappa_max = shape.max_curvature();
    let h = shape.perimeter() / shape.area();
    Ok(Calibrability {
        is_calibrable: kappa_max <= h * (1.0 + 1e-12),
        kappa_max,
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    const SQ_RADIUS: f64 = 0.265_079_452_1;

    #[test]
    fn cheeger_radius_of_unit_square() {
        let r = cheeger_radius(&Shape::rectangle(0.0, 0.0, 1.0, 1.0)).unwrap();
        let exact = (2.0 - PI.sqrt()) / (4.0 - PI);
        assert!((r - exact).abs() < 1e-14);
        assert!((r - SQ_RADIUS).abs() < 1e-9);
        let (p, a) = Shape::rectangle(0.0, 0.0, 1.0, 1.0)
            .opening_measures(r)
            .unwrap();
        assert!((r * p - a).abs() <= 1e-10);
        assert!((p / a - 1.0 / r).abs() < 1e-9);
    }

    #[test]
    fn cheeger_radius_other_shapes() {
        let d = cheeger_radius(&Shape::disc(0.5, 0.5, 0.2)).unwrap();
        assert!((d - 0.1).abs() < 1e-14);
        // root of (4 - pi) rho^2 - 6 rho + 2 = 0
        let exact = (6.0 - (36.0 - 8.0 * (4.0 - PI)).sqrt()) / (2.0 * (4.0 - PI));
        let r = cheeger_radius(&Shape::rectangle(-0.5, 0.0, 2.0, 1.0)).unwrap();
        assert!((r - exact).abs() < 1e-13);
        assert!((r - 0.350_954_9).abs() < 1e-6);
        let p =
            Shape::polygon(alloc::vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]]).unwrap();
        assert!((cheeger_radius(&p).unwrap() - exact).abs() < 1e-12);
        let side = 0.5;
        let inset = cheeger_radius(&Shape::centered_square(side)).unwrap();
        assert!((inset - SQ_RADIUS * side).abs() < 1e-9);
        // rounded square with rho beyond the Cheeger radius is its own Cheeger set
        let rr = Shape::rounded_rectangle(0.0, 0.0, 1.0, 1.0, 0.3);
        let (p, a) = rr.opening_measures(0.3).unwrap();
        assert!((cheeger_radius(&rr).unwrap() - a / p).abs() < 1e-12);
    }

    #[test]
    fn openings() {
        let d = Shape::disc(0.5, 0.5, 0.25);
        let full = opening(&d, 0.25, 64).unwrap();
        assert_eq!(
            full,
            BinaryRegion::from_fn(64, |x, y| d.signed_distance([x, y]) <= 0.0)
        );
        assert_eq!(
            opening(&Shape::rectangle(0.0, 0.0, 1.0, 1.0), 0.6, 32),
            Err(Error::EmptyOpening { rho: 0.6 })
        );
        // scaled copy of the unit square at rho = 0.25
        let sq = Shape::centered_square(0.5);
        let o = opening(&sq, 0.125, 1024).unwrap();
        let expected = 0.25 * (1.0 - (4.0 - PI) * 0.0625);
        assert!((o.area() / expected - 1.0).abs() < 0.002);
        let mut prev = BinaryRegion::full(128);
        for k in 1..12 {
            let o = opening(&sq, 0.02 * k as f64, 128).unwrap();
            assert!(o.is_subset_of(&prev));
            prev = o;
        }
    }

    #[test]
    fn disc_certificate_is_flat() {
        let d = Shape::disc(0.5, 0.5, 0.25);
        let v = convex_certificate_v0(&d, 128).unwrap();
        let inside = BinaryRegion::from_fn(128, |x, y| d.contains([x, y]));
        for (k, &b) in inside.mask().iter().enumerate() {
            let expected = if b { 8.0 } else { 0.0 };
            assert!((v.values()[k] - expected).abs() < 1e-9);
        }
        for lambda in [0.01, 0.05, 0.1] {
            assert_eq!(
                convex_certificate_vlambda(&d, lambda, 64).unwrap(),
                convex_certificate_v0(&d, 64).unwrap()
            );
        }
        assert!(matches!(
            convex_certificate_vlambda(&d, 0.125, 64),
            Err(Error::LambdaTooLarge { .. })
        ));
    }

    #[test]
    fn layer_cake() {
        for s in [
            Shape::centered_square(0.5),
            Shape::disc(0.5, 0.5, 0.3),
            Shape::rectangle(0.2, 0.3, 0.6, 0.3),
        ] {
            let v = convex_certificate_v0(&s, 512).unwrap();
            assert!(
                (v.integral() / s.perimeter() - 1.0).abs() < 0.01,
                "{s}: {}",
                v.integral()
            );
        }
    }

    #[test]
    fn square_vlambda_fillet() {
        let sq = Shape::rectangle(0.0, 0.0, 1.0, 1.0);
        let v = convex_certificate_vlambda(&sq, 0.05, 256).unwrap();
        // corner pixel sits outside C_0.05
        assert!((v.get(0, 0) - 20.0).abs() < 1e-12);
        let r = cheeger_radius(&sq).unwrap();
        assert!((v.get(128, 128) - 1.0 / r).abs() < 1e-12);
        assert!(v.max_value() <= 20.0);
    }

    #[test]
    fn calibrability() {
        let d = calibrable_check(&Shape::disc(0.5, 0.5, 0.2)).unwrap();
        assert!(d.is_calibrable && (d.kappa_max - 5.0).abs() < 1e-12 && (d.h - 10.0).abs() < 1e-12);
        assert!(
            !calibrable_check(&Shape::rectangle(0.0, 0.0, 1.0, 1.0))
                .unwrap()
                .is_calibrable
        );
        let h = |rho: f64| (4.0 - (8.0 - 2.0 * PI) * rho) / (1.0 - (4.0 - PI) * rho * rho);
        for rho in [0.2, 0.26, 0.27, 0.3, 0.45] {
            let c = calibrable_check(&Shape::rounded_rectangle(0.0, 0.0, 1.0, 1.0, rho)).unwrap();
            assert!((c.h - h(rho)).abs() < 1e-12);
            assert_eq!(c.is_calibrable, 1.0 / rho <= h(rho));
            assert_eq!(c.is_calibrable, rho >= SQ_RADIUS);
        }
    }

    #[test]
    fn rasterization() {
        let d = Shape::disc(0.5, 0.5, 0.25);
        let img = rasterize(&d, 512);
        let count = img.values().iter().filter(|&&v| v > 0.5).count() as f64 / (512.0 * 512.0);
        assert!((count / (PI / 16.0) - 1.0).abs() < 0.005);
        assert!((img.integral() - PI / 16.0).abs() <= 2.0 / 512.0 * d.perimeter());
        let full = rasterize(&Shape::rectangle(0.0, 0.0, 1.0, 1.0), 16);
        assert!(full.values().iter().all(|&v| v == 1.0));
    }
}
