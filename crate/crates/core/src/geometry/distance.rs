use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::contour::{ContourSet, Point};
use super::region::BinaryRegion;

/// Euclidean distance from every pixel center to a source set, in domain
/// units, with the periodic metric.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMap {
    n: usize,
    dist: Vec<f64>,
}

const FAR: f64 = 1e20;

/// Lower envelope of parabolas (Felzenszwalb-Huttenlocher), in place on `f`
/// holding squared distances. `v`, `z` are scratch buffers.
fn edt_1d(f: &mut [f64], v: &mut [usize], z: &mut [f64], out: &mut [f64]) {
    let len = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..len {
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64))
                / (2.0 * q as f64 - 2.0 * p as f64);
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0 and z[0] = -inf cannot be reached, kept for clarity
                break;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    k = 0;
    #[allow(clippy::needless_range_loop)]
    for q in 0..len {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        out[q] = d * d + f[v[k]];
    }
}

/// Exact squared periodic EDT in pixel units. Each line is tripled so that
/// the envelope sees the wrapped neighbours.
fn squared_edt(n: usize, source: &[bool]) -> Vec<f64> {
    let len = 3 * n;
    let mut g = vec![FAR; n * n];
    let mut f = vec![0.0; len];
    let mut out = vec![0.0; len];
    let mut v = vec![0usize; len];
    let mut z = vec![0.0; len + 1];
    // along j (columns) for each row i
    for i in 0..n {
        for q in 0..len {
            f[q] = if source[i * n + q % n] { 0.0 } else { FAR };
        }
        edt_1d(&mut f, &mut v, &mut z, &mut out);
        for j in 0..n {
            g[i * n + j] = out[n + j];
        }
    }
    let mut d = vec![0.0; n * n];
    for j in 0..n {
        for q in 0..len {
            f[q] = g[(q % n) * n + j];
        }
        edt_1d(&mut f, &mut v, &mut z, &mut out);
        for i in 0..n {
            d[i * n + j] = out[n + i];
        }
    }
    d
}

impl DistanceMap {
    /// Distance to the pixel centers of `source`; infinite everywhere when
    /// the source is empty.
    pub fn from_region(source: &BinaryRegion) -> Self {
        let n = source.n();
        if source.is_empty() {
            return Self {
                n,
                dist: vec![f64::INFINITY; n * n],
            };
        }
        let h = 1.0 / n as f64;
        let dist = squared_edt(n, source.mask())
            .into_iter()
            .map(|d| d.sqrt() * h)
            .collect();
        Self { n, dist }
    }

    /// Distance from pixel centers to the segments of `curves` (planar
    /// metric, brute force).
    pub fn from_contours(curves: &ContourSet, n: usize) -> Self {
        let h = 1.0 / n as f64;
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = curves.distance_to([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
            }
        }
        Self { n, dist }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.dist
    }

    pub fn get(&self, i: isize, j: isize) -> f64 {
        let n = self.n as isize;
        self.dist[(i.rem_euclid(n) * n + j.rem_euclid(n)) as usize]
    }

    /// Bilinear interpolation between pixel centers, periodic.
    pub fn at(&self, p: Point) -> f64 {
        let n = self.n as f64;
        let x = p[0] * n - 0.5;
        let y = p[1] * n - 0.5;
        let (i0, j0) = (x.floor(), y.floor());
        let (tx, ty) = (x - i0, y - j0);
        let (i, j) = (i0 as isize, j0 as isize);
        let a = self.get(i, j);
        let b = self.get(i + 1, j);
        let c = self.get(i, j + 1);
        let d = self.get(i + 1, j + 1);
        (1.0 - tx) * ((1.0 - ty) * a + ty * c) + tx * ((1.0 - ty) * b + ty * d)
    }

    /// `{dist <= r}`.
    pub fn sublevel(&self, r: f64) -> BinaryRegion {
        BinaryRegion::from_vec(self.n, self.dist.iter().map(|&d| d <= r).collect())
            .expect("consistent size")
    }
}

/// What a tube is built around.
#[derive(Clone, Copy, Debug)]
pub enum TubeSource<'a> {
    Region(&'a BinaryRegion),
    Curves(&'a ContourSet),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TubeCheck {
    pub contained: bool,
    /// `max(0, max_vertex dist - r)`.
    pub worst_violation: f64,
    pub max_distance: f64,
}

/// Whether every vertex of `curves` lies within distance `r` of the source.
/// Region sources use a [`DistanceMap`] interpolated at the vertices; curve
/// sources are measured exactly against their segments.
pub fn tube_contains(curves: &ContourSet, source: TubeSource<'_>, r: f64) -> TubeCheck {
    let max_distance = match source {
        TubeSource::Region(region) => {
            let map = DistanceMap::from_region(region);
            curves.vertices().map(|p| map.at(p)).fold(0.0, f64::max)
        }
        TubeSource::Curves(src) => curves
            .vertices()
            .map(|p| src.distance_to(p))
            .fold(0.0, f64::max),
    };
    let worst_violation = (max_distance - r).max(0.0);
    TubeCheck {
        contained: worst_violation == 0.0,
        worst_violation,
        max_distance,
    }
}

/// Morphological opening of a rasterized region by a disc of radius `rho`,
/// through two distance transforms. The erosion keeps pixels whose center
/// is at least `rho` from the region's edge (half a pixel beyond the nearest
/// outside center); the dilation allows one extra pixel for the gap between
/// the eroded pixel centers and the continuum erosion. The result matches
/// the exact opening up to one pixel.
pub fn open_region(region: &BinaryRegion, rho: f64) -> BinaryRegion {
    let n = region.n();
    let h = 1.0 / n as f64;
    let to_outside = DistanceMap::from_region(&region.complement());
    let eroded = BinaryRegion::from_vec(
        n,
        to_outside
            .values()
            .iter()
            .map(|&d| d - 0.5 * h >= rho)
            .collect(),
    )
    .expect("consistent size");
    if eroded.is_empty() {
        return eroded;
    }
    let to_core = DistanceMap::from_region(&eroded);
    to_core.sublevel(rho + h).intersection(region)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::contours;

    fn brute(n: usize, src: &BinaryRegion) -> Vec<f64> {
        let mut out = vec![f64::INFINITY; n * n];
        for i in 0..n {
            for j in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        if src.contains(a as isize, b as isize) {
                            let di = (i as isize - a as isize)
                                .rem_euclid(n as isize)
                                .min((a as isize - i as isize).rem_euclid(n as isize));
                            let dj = (j as isize - b as isize)
                                .rem_euclid(n as isize)
                                .min((b as isize - j as isize).rem_euclid(n as isize));
                            let d = (((di * di + dj * dj) as f64).sqrt()) / n as f64;
                            out[i * n + j] = out[i * n + j].min(d);
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn edt_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for n in [7, 16, 23] {
            let src =
                BinaryRegion::from_vec(n, (0..n * n).map(|_| rng.random_bool(0.05)).collect())
                    .unwrap();
            if src.is_empty() {
                continue;
            }
            let map = DistanceMap::from_region(&src);
            for (a, b) in map.values().iter().zip(brute(n, &src)) {
                assert!((a - b).abs() < 1e-12, "{a} {b}");
            }
        }
    }

    #[test]
    fn zero_on_source_and_lipschitz() {
        let n = 64;
        let src = BinaryRegion::from_fn(n, |x, y| (x - 0.3).abs() + (y - 0.6).abs() < 0.1);
        let map = DistanceMap::from_region(&src);
        let h = 1.0 / n as f64;
        for i in 0..n as isize {
            for j in 0..n as isize {
                if src.contains(i, j) {
                    assert_eq!(map.get(i, j), 0.0);
                }
                assert!((map.get(i, j) - map.get(i + 1, j)).abs() <= h + 1e-12);
                assert!((map.get(i, j) - map.get(i, j + 1)).abs() <= h + 1e-12);
            }
        }
    }

    #[test]
    fn self_tube() {
        let n = 128;
        let disc = BinaryRegion::from_fn(n, |x, y| (x - 0.5).powi(2) + (y - 0.5).powi(2) < 0.0625);
        let c = contours(&disc);
        let t = tube_contains(&c, TubeSource::Curves(&c), 0.0);
        assert!(t.contained);
        let t = tube_contains(
            &c,
            TubeSource::Region(
                &BinaryRegion::from_vec(
                    n,
                    disc.boundary_pixels()
                        .iter()
                        .fold(vec![false; n * n], |mut m, &(i, j)| {
                            m[i * n + j] = true;
                            m
                        }),
                )
                .unwrap(),
            ),
            2.0 / n as f64,
        );
        assert!(t.contained, "{t:?}");
        let small = BinaryRegion::from_fn(n, |x, y| (x - 0.5).powi(2) + (y - 0.5).powi(2) < 0.04);
        let t = tube_contains(&c, TubeSource::Curves(&contours(&small)), 0.01);
        assert!(!t.contained && (t.worst_violation - 0.04).abs() < 2.0 / n as f64);
    }

    #[test]
    fn opening_rounds_square_corners() {
        let n = 256;
        let sq = BinaryRegion::from_fn(n, |x, y| {
            (0.25..0.75).contains(&x) && (0.25..0.75).contains(&y)
        });
        let rho = 0.1;
        let opened = open_region(&sq, rho);
        let h = 1.0 / n as f64;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                let dx = (x - 0.5).abs() - (0.25 - rho);
                let dy = (y - 0.5).abs() - (0.25 - rho);
                let outside =
                    (dx.max(0.0).powi(2) + dy.max(0.0).powi(2)).sqrt() + dx.max(dy).min(0.0);
                let exact = if (x - 0.5).abs() < 0.25 && (y - 0.5).abs() < 0.25 {
                    outside - rho
                } else {
                    1.0
                };
                if exact.abs() > h {
                    assert_eq!(
                        opened.contains(i as isize, j as isize),
                        exact < 0.0,
                        "pixel {i} {j}"
                    );
                }
            }
        }
        let expected = 0.25 - (4.0 - core::f64::consts::PI) * rho * rho;
        assert!(
            (opened.area() - expected).abs() < 2.0 * h,
            "{} {expected}",
            opened.area()
        );
        assert!(opened.is_subset_of(&sq));
        // corner pixel removed, edge midpoints kept
        assert!(!opened.contains(64, 64));
        assert!(opened.contains(64, 128));
        assert!(open_region(&sq, 0.3).is_empty());
    }
}
