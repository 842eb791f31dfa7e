//! Numerical certificates and stability experiments.
//!
//! `mnc_estimate` approximates the minimal-norm certificate by a noiseless
//! sweep in `lambda`. `extended_support` thresholds the dual saturation
//! `|z|`. The stability experiment solves noisy problems and checks that the
//! level lines of the solution stay in the tube `T_r` around the analytic
//! extended support whenever the measured data satisfy
//!
//! ```text
//!     ||v_{lambda,w} - v_0|| <= delta_{r/2} * min(r / (2C), sqrt(4 pi)),
//! ```
//!
//! `C^2` bounding the level-set areas.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::analytic::{
    calibrable_check, cheeger_radius, convex_certificate_v0, convex_certificate_vlambda, rasterize,
    Shape,
};
use crate::error::{Error, Result};
use crate::geometry::{
    contours, hausdorff, isoperimetric_margin, level_set, BinaryRegion, ContourSet, DistanceMap,
    Point,
};
use crate::grid::{DualField, GridImage};
use crate::noise::add_noise;
use crate::solver::{solve_warm, tv_density, Boundary, SolveResult, SolverConfig};

/// Levels `t` at which level lines are sampled.
pub const DEFAULT_LEVELS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Default saturation threshold for [`extended_support`].
pub const DEFAULT_EPSILON: f64 = 0.02;

/// Boundary samples used for analytic support curves.
const BOUNDARY_SAMPLES: usize = 2048;

/// Relative slack of the Burger-Osher check.
pub const BURGER_OSHER_SLACK: f64 = 0.01;

#[derive(Clone, Debug)]
pub struct CertificateEstimate {
    pub lambda: f64,
    pub v: GridImage,
    pub z: DualField,
    /// Final relative duality gap.
    pub gap: f64,
    pub l2_norm: f64,
    pub iters: usize,
    pub converged: bool,
}

impl CertificateEstimate {
    fn from_result(lambda: f64, r: SolveResult) -> Self {
        let gap = r.final_gap().map_or(f64::NAN, |g| g.rel_gap);
        Self {
            lambda,
            l2_norm: r.v.l2_norm(),
            v: r.v,
            z: r.z,
            gap,
            iters: r.iters,
            converged: r.converged,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MncSweep {
    pub estimates: Vec<CertificateEstimate>,
    /// `||v_k - v_{k-1}|| / ||v_k||` for consecutive sweep entries (zero
    /// when both vanish).
    pub pairwise: Vec<f64>,
}

impl MncSweep {
    pub fn max_pairwise(&self) -> f64 {
        self.pairwise.iter().copied().fold(0.0, f64::max)
    }

    /// Least-squares slope of `log ||v||` against `log lambda`. A plateau
    /// gives about 0; the square's diverging certificates give about -1/2.
    pub fn norm_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .estimates
            .iter()
            .filter(|e| e.l2_norm > 0.0)
            .map(|e| (e.lambda.ln(), e.l2_norm.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (sx / m, sy / m);
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        Some(sxy / sxx)
    }
}

fn check_decreasing(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("empty lambda list".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidParameter(
            "lambdas must be positive and finite".into(),
        ));
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "lambdas must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// Noiseless sweep `lambda -> v_{lambda,0}`, each solve warm-started from
/// the previous dual solution. `cfg.lambda` is ignored.
pub fn mnc_estimate(f: &GridImage, lambdas: &[f64], cfg: &SolverConfig) -> Result<MncSweep> {
    check_decreasing(lambdas)?;
    let mut estimates: Vec<CertificateEstimate> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let c = SolverConfig {
            lambda,
            ..cfg.clone()
        };
        let warm = estimates.last().map(|e| &e.z);
        let r = solve_warm(f, &c, warm)?;
        estimates.push(CertificateEstimate::from_result(lambda, r));
    }
    let pairwise = estimates
        .windows(2)
        .map(|w| {
            let d = w[1].v.axpy(-1.0, &w[0].v).l2_norm();
            if w[1].l2_norm > 0.0 {
                d / w[1].l2_norm
            } else {
                d
            }
        })
        .collect();
    Ok(MncSweep {
        estimates,
        pairwise,
    })
}

/// Pixels where a converged dual field is (nearly) saturated.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedSupportMap {
    pub saturation: GridImage,
    pub epsilon: f64,
    /// `{saturation >= 1 - epsilon}`.
    pub region: BinaryRegion,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.001 && epsilon < 0.2) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0.001, 0.2), got {epsilon}"
        )));
    }
    Ok(())
}

impl ExtendedSupportMap {
    pub fn from_saturation(saturation: GridImage, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        let mask = saturation
            .values()
            .iter()
            .map(|&s| s >= 1.0 - epsilon)
            .collect();
        let region = BinaryRegion::from_vec(saturation.n(), mask)?;
        Ok(Self {
            saturation,
            epsilon,
            region,
        })
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::from_saturation(self.saturation.clone(), epsilon)
    }
}

/// Solves at `lambda` from `z = 0` and thresholds the saturation map.
pub fn extended_support(
    f: &GridImage,
    lambda: f64,
    epsilon: f64,
    cfg: &SolverConfig,
) -> Result<ExtendedSupportMap> {
    check_epsilon(epsilon)?;
    let r = solve_warm(
        f,
        &SolverConfig {
            lambda,
            ..cfg.clone()
        },
        None,
    )?;
    ExtendedSupportMap::from_saturation(r.saturation(), epsilon)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BurgerOsher {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// Checks `(1 - e) TV(u; outside T) <= ||w||^2/(2 lambda) + lambda ||v||^2/2
/// + ||w|| ||v||` where `e` bounds `|z_0|` outside `T` (`e = 1 - delta_r`
/// for a tube of radius `r`). The variation outside `T` is the sum of the
/// per-pixel [`tv_density`].
pub fn burger_osher_bound(
    u: &GridImage,
    v0: &GridImage,
    tube: &BinaryRegion,
    sup_outside: f64,
    lambda: f64,
    noise_norm: f64,
    boundary: Boundary,
) -> BurgerOsher {
    assert_eq!(u.n(), tube.n());
    let density = tv_density(u, boundary);
    let outside: f64 = density
        .values()
        .iter()
        .zip(tube.mask())
        .filter(|(_, &inside)| !inside)
        .map(|(d, _)| d)
        .sum();
    let lhs = (1.0 - sup_outside) * outside;
    let v = v0.l2_norm();
    let rhs = noise_norm * noise_norm / (2.0 * lambda) + 0.5 * lambda * v * v + noise_norm * v;
    BurgerOsher {
        lhs,
        rhs,
        satisfied: lhs <= rhs * (1.0 + BURGER_OSHER_SLACK),
    }
}

/// Analytic data of a shape used by the stability experiment.
#[derive(Clone, Debug)]
pub struct StabilityOracle {
    pub shape: Shape,
    pub n: usize,
    /// Rasterized indicator, the clean data `f`.
    pub f: GridImage,
    /// Analytic minimal-norm certificate `v_0`, sampled at pixel centers.
    pub v0: GridImage,
    /// Boundary of the shape, for Hausdorff distances.
    pub boundary: ContourSet,
    support: Support,
}

#[derive(Clone, Debug)]
enum Support {
    Curves(ContourSet),
    Region(DistanceMap),
    Both(ContourSet, DistanceMap),
}

impl Support {
    fn distance(&self, p: Point) -> f64 {
        match self {
            Support::Curves(c) => c.distance_to(p),
            Support::Region(m) => m.at(p),
            Support::Both(c, m) => c.distance_to(p).min(m.at(p)),
        }
    }
}

impl StabilityOracle {
    /// Extended support: the boundary of each calibrable component and
    /// `C \ int C_R` for the others.
    pub fn new(shape: &Shape, n: usize) -> Result<Self> {
        let v0 = convex_certificate_v0(shape, n).map_err(|e| match e {
            Error::NotConvex => Error::NoOracle,
            other => other,
        })?;
        let h = 1.0 / n as f64;
        let mut curves = Vec::new();
        let mut region = BinaryRegion::empty(n);
        for part in shape.components() {
            let r = cheeger_radius(part)?;
            if calibrable_check(part)?.is_calibrable {
                curves.extend(part.boundary_contours(BOUNDARY_SAMPLES).curves);
            } else {
                let band = BinaryRegion::from_fn(n, |x, y| {
                    part.contains([x, y]) && !part.opening_contains([x, y], r)
                        || part.signed_distance([x, y]).abs() < 0.5 * h
                });
                region = region.union(&band);
            }
        }
        let support = match (curves.is_empty(), region.is_empty()) {
            (false, true) => Support::Curves(ContourSet::new(curves)),
            (true, false) => Support::Region(DistanceMap::from_region(&region)),
            (false, false) => {
                Support::Both(ContourSet::new(curves), DistanceMap::from_region(&region))
            }
            (true, true) => return Err(Error::NoOracle),
        };
        Ok(Self {
            shape: shape.clone(),
            n,
            f: rasterize(shape, n),
            v0,
            boundary: shape.boundary_contours(BOUNDARY_SAMPLES),
            support,
        })
    }

    /// `delta_rho = 1 - sup |z_0|` outside `T_rho`, known in closed form for
    /// the disc (`rho / (R + rho)`).
    pub fn decay(&self, rho: f64) -> Option<f64> {
        match self.shape {
            Shape::Disc { radius, .. } => Some(rho / (radius + rho)),
            _ => None,
        }
    }

    pub fn support_distance(&self, p: Point) -> f64 {
        self.support.distance(p)
    }

    /// Pixels whose center lies within `r` of the extended support.
    pub fn tube(&self, r: f64) -> BinaryRegion {
        BinaryRegion::from_fn(self.n, |x, y| self.support.distance([x, y]) <= r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HypothesisStatus {
    Satisfied,
    Violated,
    /// No closed-form decay is available for the shape.
    Unverifiable,
}

impl HypothesisStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            HypothesisStatus::Satisfied => "satisfied",
            HypothesisStatus::Violated => "violated",
            HypothesisStatus::Unverifiable => "unverifiable",
        }
    }
}

/// One `(lambda, sigma, seed, r)` cell of the experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityRecord {
    pub lambda: f64,
    pub sigma: f64,
    pub seed: u64,
    pub n: usize,
    /// Measured `||w||`.
    pub noise_norm: f64,
    pub tube_radius: f64,
    /// Every sampled level line lies in `T_r`.
    pub contained: bool,
    /// `max(0, max distance - r)`.
    pub worst_violation: f64,
    pub max_distance: f64,
    /// Hausdorff distance from the level line at each sampled `t` to the
    /// shape boundary (infinite when the level set is empty).
    pub hausdorff: Vec<(f64, f64)>,
    /// `||v_{lambda,w} - v_0||` against the analytic `v_0`.
    pub certificate_distance: f64,
    /// `||v_{lambda,0} - v_0||` between the analytic certificates.
    pub analytic_bias: f64,
    pub delta_half_r: Option<f64>,
    /// `C` with `C^2` the largest level-set area (at least `|shape|`).
    pub area_bound: f64,
    /// Right-hand side of the hypothesis, when known.
    pub threshold: Option<f64>,
    pub hypothesis: HypothesisStatus,
    /// Smallest isoperimetric margin over the sampled level sets.
    pub isoperimetric_margin: f64,
    pub burger_osher: Option<BurgerOsher>,
    pub iters: usize,
    pub converged: bool,
    pub gap: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StabilityReport {
    pub records: Vec<StabilityRecord>,
}

impl StabilityReport {
    /// Sorts by `(lambda desc, sigma, seed, r)`, making the report
    /// independent of the order in which cells finished.
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| {
            b.lambda
                .total_cmp(&a.lambda)
                .then(a.sigma.total_cmp(&b.sigma))
                .then(a.seed.cmp(&b.seed))
                .then(a.tube_radius.total_cmp(&b.tube_radius))
        });
    }

    pub fn satisfied(&self) -> impl Iterator<Item = &StabilityRecord> {
        self.records
            .iter()
            .filter(|r| r.hypothesis == HypothesisStatus::Satisfied)
    }

    /// Fraction of hypothesis-satisfied records with containment, `None`
    /// when no record satisfies the hypothesis.
    pub fn containment_rate(&self) -> Option<f64> {
        let (mut hit, mut total) = (0usize, 0usize);
        for r in self.satisfied() {
            total += 1;
            hit += usize::from(r.contained);
        }
        (total > 0).then(|| hit as f64 / total as f64)
    }
}

/// Noiseless solutions per `lambda`, shared by all noisy cells.
#[derive(Clone, Debug)]
pub struct StabilityPlan {
    pub oracle: StabilityOracle,
    pub tube_radii: Vec<f64>,
    pub levels: Vec<f64>,
    pub solver: SolverConfig,
    clean: Vec<(f64, SolveResult, f64)>,
}

impl StabilityPlan {
    /// Solves the noiseless problems down the (decreasing) `lambdas`, each
    /// warm-started from the previous one.
    pub fn prepare(
        oracle: StabilityOracle,
        lambdas: &[f64],
        tube_radii: &[f64],
        levels: &[f64],
        solver: &SolverConfig,
    ) -> Result<Self> {
        check_decreasing(lambdas)?;
        if tube_radii.is_empty() || tube_radii.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::InvalidParameter(
                "tube radii must be positive and nonempty".into(),
            ));
        }
        let mut clean: Vec<(f64, SolveResult, f64)> = Vec::with_capacity(lambdas.len());
        for &lambda in lambdas {
            let cfg = SolverConfig {
                lambda,
                ..solver.clone()
            };
            let warm = clean.last().map(|c| &c.1.z);
            let r = solve_warm(&oracle.f, &cfg, warm)?;
            let bias = match convex_certificate_vlambda(&oracle.shape, lambda, oracle.n) {
                Ok(vl) => vl.axpy(-1.0, &oracle.v0).l2_norm(),
                Err(Error::LambdaTooLarge { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            clean.push((lambda, r, bias));
        }
        Ok(Self {
            oracle,
            tube_radii: tube_radii.to_vec(),
            levels: levels.to_vec(),
            solver: solver.clone(),
            clean,
        })
    }

    pub fn lambdas(&self) -> impl Iterator<Item = f64> + '_ {
        self.clean.iter().map(|c| c.0)
    }

    pub fn clean_solution(&self, lambda: f64) -> Option<&SolveResult> {
        self.clean.iter().find(|c| c.0 == lambda).map(|c| &c.1)
    }

    /// Runs one noisy solve and evaluates every tube radius. `sigma = 0`
    /// reuses the noiseless solution.
    pub fn run_cell(&self, lambda: f64, sigma: f64, seed: u64) -> Result<Vec<StabilityRecord>> {
        let (_, clean, bias) =
            self.clean.iter().find(|c| c.0 == lambda).ok_or_else(|| {
                Error::InvalidParameter(format!("lambda {lambda} was not prepared"))
            })?;
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be nonnegative, got {sigma}"
            )));
        }
        let (y, noise_norm) = add_noise(&self.oracle.f, sigma, seed);
        let noisy;
        let result = if sigma == 0.0 {
            clean
        } else {
            let cfg = SolverConfig {
                lambda,
                ..self.solver.clone()
            };
            noisy = solve_warm(&y, &cfg, Some(&clean.z))?;
            &noisy
        };
        Ok(self.evaluate(lambda, sigma, seed, noise_norm, *bias, result))
    }

    fn evaluate(
        &self,
        lambda: f64,
        sigma: f64,
        seed: u64,
        noise_norm: f64,
        bias: f64,
        result: &SolveResult,
    ) -> Vec<StabilityRecord> {
        let oracle = &self.oracle;
        let mut max_distance: f64 = 0.0;
        let mut max_area = oracle.shape.area();
        let mut iso = f64::INFINITY;
        let mut hd = Vec::with_capacity(self.levels.len());
        for &t in &self.levels {
            let set = level_set(&result.u, t).region;
            max_area = max_area.max(set.area());
            iso = iso.min(isoperimetric_margin(&set));
            let lines = contours(&set);
            for p in lines.vertices() {
                max_distance = max_distance.max(oracle.support_distance(p));
            }
            hd.push((
                t,
                hausdorff(&lines, &oracle.boundary).unwrap_or(f64::INFINITY),
            ));
        }
        let certificate_distance = result.v.axpy(-1.0, &oracle.v0).l2_norm();
        let area_bound = max_area.sqrt();
        let gap = result.final_gap().map_or(f64::NAN, |g| g.rel_gap);
        self.tube_radii
            .iter()
            .map(|&r| {
                let delta_half_r = oracle.decay(0.5 * r);
                let threshold =
                    delta_half_r.map(|d| d * (r / (2.0 * area_bound)).min((4.0 * PI).sqrt()));
                // ||v_{lambda,w} - v_0|| <= ||w||/lambda + ||v_{lambda,0} - v_0||
                let hypothesis = match threshold {
                    None => HypothesisStatus::Unverifiable,
                    Some(th) if noise_norm / lambda + bias <= th => HypothesisStatus::Satisfied,
                    Some(_) => HypothesisStatus::Violated,
                };
                let burger_osher = oracle.decay(r).map(|d| {
                    burger_osher_bound(
                        &result.u,
                        &oracle.v0,
                        &oracle.tube(r),
                        1.0 - d,
                        lambda,
                        noise_norm,
                        result.boundary,
                    )
                });
                let worst_violation = (max_distance - r).max(0.0);
                StabilityRecord {
                    lambda,
                    sigma,
                    seed,
                    n: oracle.n,
                    noise_norm,
                    tube_radius: r,
                    contained: worst_violation == 0.0,
                    worst_violation,
                    max_distance,
                    hausdorff: hd.clone(),
                    certificate_distance,
                    analytic_bias: bias,
                    delta_half_r,
                    area_bound,
                    threshold,
                    hypothesis,
                    isoperimetric_margin: iso,
                    burger_osher,
                    iters: result.iters,
                    converged: result.converged,
                    gap,
                }
            })
            .collect()
    }
}

/// Sequential stability experiment over all `(lambda, sigma, seed)` cells.
pub fn stability_experiment(
    shape: &Shape,
    n: usize,
    lambdas: &[f64],
    sigmas: &[f64],
    seeds: &[u64],
    tube_radii: &[f64],
    solver: &SolverConfig,
) -> Result<StabilityReport> {
    let oracle = StabilityOracle::new(shape, n)?;
    let plan = StabilityPlan::prepare(oracle, lambdas, tube_radii, &DEFAULT_LEVELS, solver)?;
    let mut report = StabilityReport::default();
    for &lambda in lambdas {
        for &sigma in sigmas {
            for &seed in seeds {
                report.records.extend(plan.run_cell(lambda, sigma, seed)?);
            }
        }
    }
    report.sort();
    Ok(report)
}
