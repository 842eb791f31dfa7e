use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::GridImage;

/// A subset of the periodic grid, one flag per pixel (row-major, same index
/// convention as [`GridImage`]).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryRegion {
    n: usize,
    mask: Vec<bool>,
}

impl BinaryRegion {
    pub fn empty(n: usize) -> Self {
        assert!(n > 0, "grid side must be positive");
        Self {
            n,
            mask: vec![false; n * n],
        }
    }

    pub fn full(n: usize) -> Self {
        Self {
            n,
            mask: vec![true; n * n],
        }
    }

    pub fn from_vec(n: usize, mask: Vec<bool>) -> Result<Self> {
        if n == 0 || mask.len() != n * n {
            return Err(Error::SizeMismatch {
                expected: n * n,
                found: mask.len(),
            });
        }
        Ok(Self { n, mask })
    }

    /// Pixels whose center satisfies `pred`.
    pub fn from_fn(n: usize, mut pred: impl FnMut(f64, f64) -> bool) -> Self {
        let h = 1.0 / n as f64;
        let mut mask = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                mask[i * n + j] = pred((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            }
        }
        Self { n, mask }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn contains(&self, i: isize, j: isize) -> bool {
        let n = self.n as isize;
        self.mask[(i.rem_euclid(n) * n + j.rem_euclid(n)) as usize]
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.mask[i * self.n + j] = value;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    /// Pixel count times the cell area.
    pub fn area(&self) -> f64 {
        self.count() as f64 / (self.n * self.n) as f64
    }

    pub fn complement(&self) -> Self {
        Self {
            n: self.n,
            mask: self.mask.iter().map(|b| !b).collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a && !b)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        assert_eq!(self.n, other.n);
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    fn zip(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Self {
        assert_eq!(self.n, other.n, "region sizes differ");
        Self {
            n: self.n,
            mask: self
                .mask
                .iter()
                .zip(&other.mask)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// 1.0 on the region, 0.0 elsewhere.
    pub fn to_image(&self) -> GridImage {
        GridImage::from_vec(
            self.n,
            self.mask
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        )
        .expect("consistent size")
    }

    /// Pixels of the region with a 4-neighbour outside it.
    pub fn boundary_pixels(&self) -> Vec<(usize, usize)> {
        let n = self.n as isize;
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.contains(i, j)
                    && (!self.contains(i + 1, j)
                        || !self.contains(i - 1, j)
                        || !self.contains(i, j + 1)
                        || !self.contains(i, j - 1))
                {
                    out.push((i as usize, j as usize));
                }
            }
        }
        out
    }

    /// 4-connected components on the torus, labelled `1..=count` in
    /// row-major order of first appearance; 0 marks the complement.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.n;
        let mut labels = vec![0usize; n * n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n * n {
            if !self.mask[start] || labels[start] != 0 {
                continue;
            }
            count += 1;
            labels[start] = count;
            stack.push(start);
            while let Some(k) = stack.pop() {
                let (i, j) = (k / n, k % n);
                let neighbours = [
                    ((i + 1) % n) * n + j,
                    ((i + n - 1) % n) * n + j,
                    i * n + (j + 1) % n,
                    i * n + (j + n - 1) % n,
                ];
                for nb in neighbours {
                    if self.mask[nb] && labels[nb] == 0 {
                        labels[nb] = count;
                        stack.push(nb);
                    }
                }
            }
        }
        (labels, count)
    }
}

/// A thresholded image together with the threshold convention used.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSet {
    pub t: f64,
    pub region: BinaryRegion,
    /// Set for `t == 0`, where the region is the complement of
    /// `{u < 0}` rather than a plain threshold.
    pub zero_convention: bool,
}

/// `{u >= t}` for `t > 0` and `{u <= t}` for `t < 0`. For `t = 0` the region
/// is the complement of the union of all negative level sets, i.e.
/// `{u >= 0}`, and the result is flagged.
pub fn level_set(u: &GridImage, t: f64) -> LevelSet {
    let n = u.n();
    let mask: Vec<bool> = if t < 0.0 {
        u.values().iter().map(|&v| v <= t).collect()
    } else {
        u.values().iter().map(|&v| v >= t).collect()
    };
    LevelSet {
        t,
        region: BinaryRegion::from_vec(n, mask).expect("consistent size"),
        zero_convention: t == 0.0,
    }
}

/// Fractions of the disc `B(x, r)` (pixel centers within `r` of the center
/// of pixel `x`, periodic) lying inside and outside `E`.
pub fn density_ratio(region: &BinaryRegion, x: (usize, usize), r: f64) -> Result<(f64, f64)> {
    let n = region.n();
    if !(r * n as f64 >= 3.0) {
        return Err(Error::RadiusTooSmall { r });
    }
    let rp = r * n as f64;
    let reach = rp.floor() as isize;
    let (mut inside, mut total) = (0usize, 0usize);
    for di in -reach..=reach {
        for dj in -reach..=reach {
            if ((di * di + dj * dj) as f64) <= rp * rp {
                total += 1;
                if region.contains(x.0 as isize + di, x.1 as isize + dj) {
                    inside += 1;
                }
            }
        }
    }
    let fin = inside as f64 / total as f64;
    Ok((fin, 1.0 - fin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn thresholding_two_valued_image() {
        let disc = BinaryRegion::from_fn(32, |x, y| {
            (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5) < 0.0625
        });
        let u = disc.to_image().map(|v| 0.6 * v);
        assert_eq!(level_set(&u, 0.3).region, disc);
        assert!(level_set(&u, 0.7).region.is_empty());
        let neg = level_set(&u.map(|v| -v), -0.3);
        assert_eq!(neg.region, disc);
        assert!(level_set(&u, 0.0).zero_convention);
        assert_eq!(level_set(&u, 0.0).region.count(), 32 * 32);
    }

    #[test]
    fn level_sets_are_nested() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let u =
                GridImage::from_vec(32, (0..1024).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .unwrap();
            let t1 = rng.random_range(0.01..0.9);
            let t2 = rng.random_range(t1..1.0);
            assert!(level_set(&u, t2)
                .region
                .is_subset_of(&level_set(&u, t1).region));
        }
    }

    #[test]
    fn components_wrap_around() {
        let mut r = BinaryRegion::empty(8);
        r.set(0, 3, true);
        r.set(7, 3, true);
        r.set(4, 4, true);
        let (labels, count) = r.components();
        assert_eq!(count, 2);
        assert_eq!(labels[3], labels[7 * 8 + 3]);
    }

    #[test]
    fn density_ratio_cases() {
        let n = 128;
        let half = BinaryRegion::from_fn(n, |x, _| x < 0.5);
        let (a, b) = density_ratio(&half, (32, 64), 8.0 / n as f64).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && b.abs() < 1e-12);
        // last row inside the half plane: the disc straddles the edge
        let (a, b) = density_ratio(&half, (63, 64), 8.0 / n as f64).unwrap();
        assert!((a - 0.5).abs() <= 2.0 / 8.0, "{a} {b}");
        assert!(matches!(
            density_ratio(&half, (0, 0), 2.0 / n as f64),
            Err(Error::RadiusTooSmall { .. })
        ));
    }

    #[test]
    fn boundary_pixels_of_block() {
        let mut r = BinaryRegion::empty(10);
        for i in 2..6 {
            for j in 2..6 {
                r.set(i, j, true);
            }
        }
        assert_eq!(r.boundary_pixels().len(), 12);
    }
}
