//! Level sets, contours, Jordan decomposition, distances and tubes.
//!
//! Contours are extracted by marching squares at level 1/2 after a 3x3 box
//! smoothing of the binary mask, which removes most of the staircase bias of
//! counting pixel edges. The smoothed field only takes values `k/9`, so the
//! level is never hit exactly. Sets of one or two pixels vanish under the
//! smoothing and have no contour.

mod contour;
mod distance;
mod region;

pub use contour::{
    area, contours, convex_hull, hausdorff, isoperimetric_margin, jordan_decompose, perimeter,
    rasterize_components, smoothed_mask, Contour, ContourSet, JordanComponent, Point,
};
pub use distance::{open_region, tube_contains, DistanceMap, TubeCheck, TubeSource};
pub use region::{density_ratio, level_set, BinaryRegion, LevelSet};

use crate::grid::GridImage;

/// `P(E) - sign * integral_E v`. For `v` a certificate of `f` this is
/// nonnegative for every `E` and vanishes on the level sets of `f`.
pub fn set_energy(region: &BinaryRegion, v: &GridImage, sign: f64) -> f64 {
    assert_eq!(region.n(), v.n());
    let inner: f64 = region
        .mask()
        .iter()
        .zip(v.values())
        .filter(|(&b, _)| b)
        .map(|(_, &x)| x)
        .sum();
    perimeter(region) - sign * inner * v.cell_area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn set_energy_of_calibrable_disc() {
        let n = 512;
        let b = BinaryRegion::from_fn(n, |x, y| {
            (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5) < 0.0625
        });
        let v = b.to_image().map(|x| 8.0 * x);
        let e = set_energy(&b, &v, 1.0);
        assert!(e.abs() <= 0.02 * PI / 2.0, "{e}");
        let half = BinaryRegion::from_fn(n, |x, y| {
            (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5) < 0.015625
        });
        // pi R - 8 pi R^2 / 4 = pi/4 - pi/8 for R = 1/4
        let e = set_energy(&half, &v, 1.0);
        assert!(e > 0.0 && (e - PI / 8.0).abs() < 0.02, "{e}");
        assert_eq!(set_energy(&BinaryRegion::empty(n), &v, 1.0), 0.0);
    }

    #[test]
    fn isoperimetric_on_shapes() {
        let b = BinaryRegion::from_fn(128, |x, y| (x - 0.4).abs() < 0.2 && (y - 0.5).abs() < 0.1);
        assert!(isoperimetric_margin(&b) > 0.0);
    }
}
