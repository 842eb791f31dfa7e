//! Discrete ROF denoising by projected gradient descent on the dual.
//!
//! The primal problem is
//!
//! ```text
//!     min_u  1/2 ||u - y||^2 + lambda * TV_d(u),
//!     TV_d(u) = h^2 * sum_ij ||grad4(u)_ij|| / sqrt(2)
//! ```
//!
//! with all norms weighted by the cell area `h^2`. The `1/sqrt(2)` factor
//! ([`TV_NORMALIZATION`]) compensates for the 4-fold stencil seeing every
//! partial derivative twice, so that `TV_d` approximates the continuum total
//! variation. With `lambda' = lambda / sqrt(2)` the dual is
//!
//! ```text
//!     max_{|z_ij| <= 1}  1/2 ||y||^2 - 1/2 ||y - lambda' div4(z)||^2
//! ```
//!
//! and the primal solution and certificate are recovered as
//! `v = div4(z) / sqrt(2)` and `u = y - lambda v`, so `v = (y - u) / lambda`
//! is the discrete counterpart of the continuum dual certificate.
//!
//! Two boundary treatments are available. [`Boundary::Periodic`] is the
//! plain torus. [`Boundary::Free`] extends `u` by zero outside the unit
//! square, which reproduces the free-space problem for data supported inside
//! the box: the image is embedded in an `(n+1) x (n+1)` torus whose extra row
//! and column are clamped to zero.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::grid::{divergence_kernel, gradient_kernel, norm4, DualField, GridImage};

/// Factor turning `||grad4 u||` into a continuum-consistent gradient norm.
pub const TV_NORMALIZATION: f64 = FRAC_1_SQRT_2;

/// Slack on the dual constraint accepted by the energy functions.
pub const DUAL_CHECK_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// `u` is extended by zero outside `[0,1)^2`.
    #[default]
    Free,
    /// Periodic in both axes.
    Periodic,
}

impl Boundary {
    /// Side of the torus the solver works on for an `n x n` image.
    pub fn working_side(self, n: usize) -> usize {
        match self {
            Boundary::Free => n + 1,
            Boundary::Periodic => n,
        }
    }

    /// Embeds an `n x n` image into the working torus.
    pub fn embed(self, y: &GridImage) -> GridImage {
        let n = y.n();
        match self {
            Boundary::Periodic => y.clone(),
            Boundary::Free => {
                let m = n + 1;
                let mut data = vec![0.0; m * m];
                for i in 0..n {
                    data[i * m..i * m + n].copy_from_slice(&y.values()[i * n..(i + 1) * n]);
                }
                GridImage::with_scale(m, y.scale(), data).expect("consistent size")
            }
        }
    }

    /// Restricts a working-torus image to its `n x n` real part.
    pub fn crop(self, w: &GridImage, n: usize) -> GridImage {
        let m = w.n();
        if m == n {
            return w.clone();
        }
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n..(i + 1) * n].copy_from_slice(&w.values()[i * m..i * m + n]);
        }
        GridImage::from_vec(n, data).expect("consistent size")
    }
}

/// Parameters of one ROF solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    /// Step size on the dual; `None` selects `0.99 * 2 / (16 n^2)`.
    pub tau: Option<f64>,
    pub max_iters: usize,
    /// Threshold on `(primal - dual) / (|primal| + 1)`.
    pub gap_tol: f64,
    pub record_every: usize,
    pub boundary: Boundary,
}

impl SolverConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            tau: None,
            max_iters: 50_000,
            gap_tol: 1e-6,
            record_every: 50,
            boundary: Boundary::Free,
        }
    }

    pub fn with_gap_tol(mut self, gap_tol: f64) -> Self {
        self.gap_tol = gap_tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = Some(tau);
        self
    }

    /// Upper limit `2 / (16 n^2)` on the step, from `||grad4||^2 <= 16 n^2`.
    pub fn step_limit(n: usize) -> f64 {
        2.0 / (16.0 * (n * n) as f64)
    }

    pub fn default_tau(n: usize) -> f64 {
        0.99 * Self::step_limit(n)
    }

    fn validate(&self, n: usize) -> Result<f64> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.max_iters == 0 || self.record_every == 0 {
            return Err(Error::InvalidParameter(
                "max_iters and record_every must be positive".into(),
            ));
        }
        if !(self.gap_tol >= 0.0) {
            return Err(Error::InvalidParameter(
                "gap_tol must be nonnegative".into(),
            ));
        }
        let limit = Self::step_limit(n);
        let tau = self.tau.unwrap_or_else(|| Self::default_tau(n));
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau must be positive, got {tau}"
            )));
        }
        if tau >= limit {
            return Err(Error::StepTooLarge { tau, limit });
        }
        Ok(tau)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapRecord {
    pub iter: usize,
    pub primal: f64,
    pub dual: f64,
    pub rel_gap: f64,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    /// Primal solution on the `n x n` grid.
    pub u: GridImage,
    /// Dual solution on the working torus (side `n + 1` for [`Boundary::Free`]).
    pub z: DualField,
    /// Certificate `v = (y - u) / lambda`, equal to [`certificate_from_dual`].
    pub v: GridImage,
    pub iters: usize,
    pub gap_history: Vec<GapRecord>,
    pub converged: bool,
    pub boundary: Boundary,
}

impl SolveResult {
    pub fn final_gap(&self) -> Option<GapRecord> {
        self.gap_history.last().copied()
    }

    /// Per-pixel dual saturation `|z_ij|` restricted to the `n x n` image.
    pub fn saturation(&self) -> GridImage {
        self.boundary.crop(&self.z.norms(), self.u.n())
    }
}

#[inline]
fn project(z: [f64; 4]) -> [f64; 4] {
    let norm = norm4(&z);
    // Points within the feasibility slack are fixed points, which makes the
    // projection exactly idempotent in floating point.
    if norm <= 1.0 + crate::grid::FEASIBILITY_SLACK {
        z
    } else {
        [z[0] / norm, z[1] / norm, z[2] / norm, z[3] / norm]
    }
}

/// Orthogonal projection of every 4-vector onto the closed unit ball.
pub fn project_unit_balls(z: &DualField) -> DualField {
    let mut out = z.clone();
    for v in out.vectors_mut() {
        *v = project(*v);
    }
    out
}

/// `div4(z) / sqrt(2)` restricted to the `n x n` image.
pub fn certificate_from_dual(z: &DualField, n: usize, boundary: Boundary) -> Result<GridImage> {
    check_dual_side(z, n, boundary)?;
    let div = crate::grid::divergence4(z);
    Ok(boundary.crop(&div, n).map(|d| d * TV_NORMALIZATION))
}

fn check_dual_side(z: &DualField, n: usize, boundary: Boundary) -> Result<()> {
    let m = boundary.working_side(n);
    if z.n() != m {
        return Err(Error::SizeMismatch {
            expected: m * m,
            found: z.n() * z.n(),
        });
    }
    Ok(())
}

fn tv_sum(u_work: &GridImage) -> f64 {
    tv_kernel(u_work.values(), u_work.n(), u_work.scale())
}

/// Discrete total variation `h^2 * sum ||grad4 u|| / sqrt(2)`.
pub fn tv_d(u: &GridImage, boundary: Boundary) -> f64 {
    let w = boundary.embed(u);
    tv_sum(&w) * TV_NORMALIZATION * u.cell_area()
}

/// Per-pixel contribution to [`tv_d`]. Stencil cells on the free-boundary
/// padding are credited to the nearest image pixel.
pub fn tv_density(u: &GridImage, boundary: Boundary) -> GridImage {
    let n = u.n();
    let w = boundary.embed(u);
    let m = w.n();
    let mut g = vec![[0.0; 4]; m * m];
    gradient_kernel(w.values(), m, w.scale(), &mut g);
    let weight = TV_NORMALIZATION * u.cell_area();
    let mut out = GridImage::zeros(n);
    for i in 0..m {
        for j in 0..m {
            let (ti, tj) = (i.min(n - 1), j.min(n - 1));
            let k = ti * n + tj;
            out.values_mut()[k] += weight * norm4(&g[i * m + j]);
        }
    }
    out
}

/// `1/2 ||u - y||^2 + lambda TV_d(u)`, cell-area weighted.
pub fn primal_energy(u: &GridImage, y: &GridImage, lambda: f64, boundary: Boundary) -> f64 {
    assert_eq!(u.n(), y.n());
    let fid: f64 = u
        .values()
        .iter()
        .zip(y.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    0.5 * fid * u.cell_area() + lambda * tv_d(u, boundary)
}

/// Dual value `1/2 ||y||^2 - 1/2 ||y - lambda v(z)||^2`, cell-area weighted.
pub fn dual_objective(
    z: &DualField,
    y: &GridImage,
    lambda: f64,
    boundary: Boundary,
) -> Result<f64> {
    let max_norm = z.max_norm();
    if max_norm > 1.0 + DUAL_CHECK_SLACK {
        return Err(Error::InfeasibleDual { max_norm });
    }
    let v = certificate_from_dual(z, y.n(), boundary)?;
    let u = y.axpy(-lambda, &v);
    Ok(0.5 * (y.dot(y) - u.dot(&u)) * y.cell_area())
}

/// `primal_energy(u) - dual_objective(z)`; nonnegative by weak duality.
pub fn duality_gap(
    u: &GridImage,
    z: &DualField,
    y: &GridImage,
    lambda: f64,
    boundary: Boundary,
) -> Result<f64> {
    Ok(primal_energy(u, y, lambda, boundary) - dual_objective(z, y, lambda, boundary)?)
}

/// Solves the ROF problem starting from `z = 0`.
pub fn solve(y: &GridImage, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_warm(y, cfg, None)
}

/// Solves the ROF problem from an optional initial dual field, which must
/// live on the working torus of `cfg.boundary`.
pub fn solve_warm(
    y: &GridImage,
    cfg: &SolverConfig,
    z0: Option<&DualField>,
) -> Result<SolveResult> {
    if !y.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let n = y.n();
    let tau = cfg.validate(n)?;
    let boundary = cfg.boundary;
    let m = boundary.working_side(n);
    let scale = y.scale();
    let lam = cfg.lambda * TV_NORMALIZATION;
    let step = tau / lam;
    let cell = y.cell_area();

    let mut z = match z0 {
        Some(z0) => {
            check_dual_side(z0, n, boundary)?;
            project_unit_balls(z0)
        }
        None => DualField::zeros_with_scale(m, scale),
    };
    let y_work = boundary.embed(y);
    let yw = y_work.values();
    // Only the n x n image part of u is written; on the free boundary the
    // padding row and column stay zero.
    let y_sq: f64 = y.dot(y);

    let mut div = vec![0.0; m * m];
    let mut u = vec![0.0; m * m];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iters = 0;

    for iter in 0..=cfg.max_iters {
        iters = iter;
        divergence_kernel(z.vectors(), m, scale, &mut div);
        let mut fid = 0.0;
        let mut u_sq = 0.0;
        for i in 0..n {
            let row = i * m..i * m + n;
            for ((uk, &yk), &dk) in u[row.clone()]
                .iter_mut()
                .zip(&yw[row.clone()])
                .zip(&div[row])
            {
                let d = lam * dk;
                *uk = yk - d;
                fid += d * d;
                u_sq += *uk * *uk;
            }
        }
        if iter % cfg.record_every == 0 || iter == cfg.max_iters {
            let tv = tv_kernel(&u, m, scale);
            let primal = cell * (0.5 * fid + lam * tv);
            let dual = cell * 0.5 * (y_sq - u_sq);
            let rel_gap = (primal - dual) / (primal.abs() + 1.0);
            history.push(GapRecord {
                iter,
                primal,
                dual,
                rel_gap,
            });
            if rel_gap <= cfg.gap_tol {
                converged = true;
                break;
            }
        }
        if iter == cfg.max_iters {
            break;
        }
        step_and_project(&u, m, scale, step, z.vectors_mut());
    }

    let v = certificate_from_dual(&z, n, boundary)?;
    let u = y.axpy(-cfg.lambda, &v);
    Ok(SolveResult {
        u,
        z,
        v,
        iters,
        gap_history: history,
        converged,
        boundary,
    })
}

fn tv_kernel(u: &[f64], m: usize, scale: f64) -> f64 {
    let mut tv = 0.0;
    for i in 0..m {
        let ip = if i + 1 == m { 0 } else { i + 1 };
        let row = &u[i * m..(i + 1) * m];
        let next = &u[ip * m..(ip + 1) * m];
        for j in 0..m {
            let jp = if j + 1 == m { 0 } else { j + 1 };
            let (a, b, c, d) = (row[j], next[j], next[jp], row[jp]);
            tv += norm4(&[b - a, d - a, c - b, c - d]);
        }
    }
    scale * tv
}

/// One projected gradient step `z <- P(z - step * grad4 u)`.
fn step_and_project(u: &[f64], m: usize, scale: f64, step: f64, z: &mut [[f64; 4]]) {
    let s = step * scale;
    for i in 0..m {
        let ip = if i + 1 == m { 0 } else { i + 1 };
        let row = &u[i * m..(i + 1) * m];
        let next = &u[ip * m..(ip + 1) * m];
        let zrow = &mut z[i * m..(i + 1) * m];
        for j in 0..m {
            let jp = if j + 1 == m { 0 } else { j + 1 };
            let (a, b, c, d) = (row[j], next[j], next[jp], row[jp]);
            let zz = &mut zrow[j];
            *zz = project([
                zz[0] - s * (b - a),
                zz[1] - s * (d - a),
                zz[2] - s * (c - b),
                zz[3] - s * (c - d),
            ]);
        }
    }
}
