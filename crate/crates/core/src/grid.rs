//! Periodic uniform grid on the unit torus and the 4-fold discrete gradient.
//!
//! Index convention (used everywhere in the crate): a [`GridImage`] of side
//! `n` stores sample `(i, j)` at `data[i * n + j]`. Row index `i` runs along
//! the x-axis and column index `j` along the y-axis. Sample `(i, j)` owns the
//! cell `[i/n, (i+1)/n) x [j/n, (j+1)/n)`, and geometric positions refer to
//! the cell center `((i + 1/2)/n, (j + 1/2)/n)`. Indices are taken modulo the
//! side in both axes.
//!
//! Fields also carry a `scale` (the inverse grid spacing). It equals the side
//! for ordinary images; the free-boundary solver works on a padded torus
//! whose side is one larger than its scale.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Slack allowed on the unit-ball constraint when testing feasibility.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

/// A scalar field on the periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridImage {
    n: usize,
    scale: f64,
    data: Vec<f64>,
}

/// A field of 4-vectors on the periodic grid, the range of [`gradient4`].
#[derive(Clone, Debug, PartialEq)]
pub struct DualField {
    n: usize,
    scale: f64,
    data: Vec<[f64; 4]>,
}

impl GridImage {
    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn constant(n: usize, c: f64) -> Self {
        assert!(n > 0, "grid side must be positive");
        Self {
            n,
            scale: n as f64,
            data: vec![c; n * n],
        }
    }

    /// Builds an image of side `n` from row-major values.
    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        Self::with_scale(n, n as f64, data)
    }

    pub(crate) fn with_scale(n: usize, scale: f64, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::SizeMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        Ok(Self { n, scale, data })
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(n: usize, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let h = 1.0 / n as f64;
        let mut img = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                img.data[i * n + j] = f((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            }
        }
        img
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Inverse grid spacing.
    #[inline]
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Grid spacing `1/scale`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        1.0 / self.scale
    }

    /// Area of one cell.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    /// Value at `(i, j)` with periodic wrap-around.
    #[inline]
    pub fn get(&self, i: isize, j: isize) -> f64 {
        let n = self.n as isize;
        self.data[(i.rem_euclid(n) * n + j.rem_euclid(n)) as usize]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Unweighted Euclidean inner product.
    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Unweighted sum of all samples.
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Physical integral: sum times cell area.
    pub fn integral(&self) -> f64 {
        self.sum() * self.cell_area()
    }

    /// Physical L2 norm, `sqrt(h^2 * sum u^2)`.
    pub fn l2_norm(&self) -> f64 {
        (self.dot(self) * self.cell_area()).sqrt()
    }

    /// Physical L1 norm.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum::<f64>() * self.cell_area()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Elementwise `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Self {
            n: self.n,
            scale: self.scale,
            data,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n: self.n,
            scale: self.scale,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Periodic translation: `out[i, j] = self[i - di, j - dj]`.
    pub fn shift(&self, di: isize, dj: isize) -> Self {
        let n = self.n;
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = self.get(i as isize - di, j as isize - dj);
            }
        }
        out
    }
}

impl DualField {
    pub fn zeros(n: usize) -> Self {
        Self::zeros_with_scale(n, n as f64)
    }

    pub(crate) fn zeros_with_scale(n: usize, scale: f64) -> Self {
        assert!(n > 0, "grid side must be positive");
        Self {
            n,
            scale,
            data: vec![[0.0; 4]; n * n],
        }
    }

    pub fn from_vec(n: usize, data: Vec<[f64; 4]>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::SizeMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        Ok(Self {
            n,
            scale: n as f64,
            data,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    pub fn vectors(&self) -> &[[f64; 4]] {
        &self.data
    }

    #[inline]
    pub fn vectors_mut(&mut self) -> &mut [[f64; 4]] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> [f64; 4] {
        self.data[i * self.n + j]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3])
            .sum()
    }

    /// Largest per-pixel Euclidean norm.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(norm4(z)))
    }

    /// Every 4-vector lies in the closed unit ball (up to [`FEASIBILITY_SLACK`]).
    pub fn is_feasible(&self) -> bool {
        self.data
            .iter()
            .all(|z| norm4(z) <= 1.0 + FEASIBILITY_SLACK)
    }

    /// Per-pixel norms as an image with the same side and scale.
    pub fn norms(&self) -> GridImage {
        GridImage {
            n: self.n,
            scale: self.scale,
            data: self.data.iter().map(norm4).collect(),
        }
    }
}

#[inline]
pub(crate) fn norm4(z: &[f64; 4]) -> f64 {
    (z[0] * z[0] + z[1] * z[1] + z[2] * z[2] + z[3] * z[3]).sqrt()
}

/// Gradient stencil on a periodic `m x m` array with factor `scale`.
pub(crate) fn gradient_kernel(u: &[f64], m: usize, scale: f64, out: &mut [[f64; 4]]) {
    debug_assert_eq!(u.len(), m * m);
    debug_assert_eq!(out.len(), m * m);
    for i in 0..m {
        let ip = if i + 1 == m { 0 } else { i + 1 };
        let row = &u[i * m..(i + 1) * m];
        let next = &u[ip * m..(ip + 1) * m];
        for j in 0..m {
            let jp = if j + 1 == m { 0 } else { j + 1 };
            let a = row[j];
            let b = next[j];
            let c = next[jp];
            let d = row[jp];
            out[i * m + j] = [
                scale * (b - a),
                scale * (d - a),
                scale * (c - b),
                scale * (c - d),
            ];
        }
    }
}

/// Divergence stencil (negative adjoint of [`gradient_kernel`]).
pub(crate) fn divergence_kernel(z: &[[f64; 4]], m: usize, scale: f64, out: &mut [f64]) {
    debug_assert_eq!(z.len(), m * m);
    debug_assert_eq!(out.len(), m * m);
    for i in 0..m {
        let im = if i == 0 { m - 1 } else { i - 1 };
        let row = &z[i * m..(i + 1) * m];
        let prev = &z[im * m..(im + 1) * m];
        for j in 0..m {
            let jm = if j == 0 { m - 1 } else { j - 1 };
            let here = row[j];
            let left = row[jm];
            let up = prev[j];
            let diag = prev[jm];
            out[i * m + j] = scale
                * ((here[0] - up[0])
                    + (here[1] - left[1])
                    + (up[2] - diag[2])
                    + (left[3] - diag[3]));
        }
    }
}

/// The 4-fold gradient:
/// `n * (u[i+1,j]-u[i,j], u[i,j+1]-u[i,j], u[i+1,j+1]-u[i+1,j], u[i+1,j+1]-u[i,j+1])`.
pub fn gradient4(u: &GridImage) -> DualField {
    let mut out = DualField::zeros_with_scale(u.n, u.scale);
    gradient_kernel(&u.data, u.n, u.scale, &mut out.data);
    out
}

/// The discrete divergence, `-gradient4^T` under unweighted inner products.
pub fn divergence4(z: &DualField) -> GridImage {
    let mut out = GridImage {
        n: z.n,
        scale: z.scale,
        data: vec![0.0; z.n * z.n],
    };
    divergence_kernel(&z.data, z.n, z.scale, &mut out.data);
    out
}

/// Power-iteration estimate of the squared operator norm of [`gradient4`]
/// on the `n x n` torus. Never exceeds the bound `16 n^2`.
pub fn operator_norm_sq(n: usize, iters: usize) -> f64 {
    assert!(n > 0);
    assert!(iters >= 10, "power iteration needs at least 10 steps");
    let scale = n as f64;
    // Deterministic, non-symmetric start so no eigenmode is missing.
    let mut x: Vec<f64> = (0..n * n)
        .map(|k| {
            let t = (k as f64 + 1.0) * 0.618_033_988_749_894_9;
            (t - t.floor()) - 0.5 + 1e-3 * ((k % 7) as f64)
        })
        .collect();
    let mut g = vec![[0.0; 4]; n * n];
    let mut estimate = 0.0;
    for _ in 0..iters {
        let xx: f64 = x.iter().map(|v| v * v).sum();
        gradient_kernel(&x, n, scale, &mut g);
        let gg: f64 = g
            .iter()
            .map(|z| z[0] * z[0] + z[1] * z[1] + z[2] * z[2] + z[3] * z[3])
            .sum();
        estimate = gg / xx;
        // x <- grad^T grad x = -div(grad x), normalized.
        divergence_kernel(&g, n, scale, &mut x);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for v in x.iter_mut() {
            *v = -*v / norm;
        }
    }
    let bound = 16.0 * scale * scale;
    assert!(
        estimate <= bound * (1.0 + 1e-12),
        "power iteration exceeded 16 n^2"
    );
    estimate.min(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(n: usize, rng: &mut ChaCha8Rng) -> GridImage {
        GridImage::from_vec(n, (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn random_field(n: usize, rng: &mut ChaCha8Rng) -> DualField {
        DualField::from_vec(
            n,
            (0..n * n)
                .map(|_| core::array::from_fn(|_| rng.random_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_has_zero_gradient() {
        let z = gradient4(&GridImage::constant(8, 3.25));
        assert!(z.vectors().iter().all(|v| *v == [0.0; 4]));
    }

    #[test]
    fn separable_two_by_two() {
        // u = [[0, 1], [0, 1]]: constant along i, alternating along j.
        let u = GridImage::from_vec(2, alloc::vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let z = gradient4(&u);
        for i in 0..2 {
            for j in 0..2 {
                let g = z.get(i, j);
                assert_eq!(g[0], 0.0);
                assert_eq!(g[3], 0.0);
                assert_eq!(g[1].abs(), 2.0);
                assert_eq!(g[2].abs(), 2.0);
            }
        }
        assert_eq!(z.get(0, 0)[1], 2.0);
        assert_eq!(z.get(0, 1)[1], -2.0);
    }

    #[test]
    fn adjoint_random_n16() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let u = random_image(16, &mut rng);
        let z = random_field(16, &mut rng);
        let lhs = gradient4(&u).dot(&z);
        let rhs = -u.dot(&divergence4(&z));
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn adjoint_on_bump() {
        let n = 32;
        let u = GridImage::from_fn(n, |x, y| {
            let r2 = (x - 0.5).powi(2) + (y - 0.5).powi(2);
            (-r2 / 0.01).exp()
        });
        let z = gradient4(&u);
        let lhs = u.dot(&divergence4(&z));
        let rhs = -z.dot(&z);
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs());
    }

    #[test]
    fn divergence_of_zero_and_constant() {
        assert!(divergence4(&DualField::zeros(6))
            .values()
            .iter()
            .all(|v| *v == 0.0));
        let z = DualField::from_vec(6, alloc::vec![[0.3, -1.2, 0.7, 2.0]; 36]).unwrap();
        assert!(divergence4(&z).values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn gauge_invariance_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_image(12, &mut rng);
        let shifted = u.map(|v| v + 0.5);
        // Differences of values offset by an exactly representable constant.
        assert_eq!(gradient4(&u), gradient4(&shifted));
    }

    #[test]
    fn shift_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_image(10, &mut rng);
        let (di, dj) = (3isize, -2isize);
        let lhs = gradient4(&u.shift(di, dj));
        let g = gradient4(&u);
        for i in 0..10usize {
            for j in 0..10usize {
                let src_i = (i as isize - di).rem_euclid(10) as usize;
                let src_j = (j as isize - dj).rem_euclid(10) as usize;
                assert_eq!(lhs.get(i, j), g.get(src_i, src_j));
            }
        }
    }

    #[test]
    fn x_axis_is_the_row_index() {
        // u = x varies with i only: the first and last components carry it.
        let u = GridImage::from_fn(8, |x, _| x);
        let g = gradient4(&u).get(2, 5);
        assert!((g[0] - 1.0).abs() < 1e-12 && (g[3] - 1.0).abs() < 1e-12);
        assert!(g[1].abs() < 1e-12 && g[2].abs() < 1e-12);
    }

    #[test]
    fn operator_norm_bound_n64() {
        let est = operator_norm_sq(64, 200);
        assert!(est <= 16.0 * 64.0 * 64.0);
        assert!(est > 0.98 * 16.0 * 64.0 * 64.0);
    }

    #[test]
    fn operator_norm_scales_with_n_squared() {
        let a = operator_norm_sq(16, 300);
        let b = operator_norm_sq(32, 300);
        assert!((b / a - 4.0).abs() < 0.04, "ratio {}", b / a);
    }

    #[test]
    fn feasibility_and_norms() {
        let z = DualField::from_vec(1, alloc::vec![[0.6, 0.8, 0.0, 0.0]]).unwrap();
        assert!(z.is_feasible());
        assert!((z.max_norm() - 1.0).abs() < 1e-15);
        let z = DualField::from_vec(1, alloc::vec![[0.6, 0.8, 1e-3, 0.0]]).unwrap();
        assert!(!z.is_feasible());
    }

    #[test]
    fn size_mismatch_rejected() {
        assert!(matches!(
            GridImage::from_vec(3, alloc::vec![0.0; 8]),
            Err(Error::SizeMismatch {
                expected: 9,
                found: 8
            })
        ));
    }
}
