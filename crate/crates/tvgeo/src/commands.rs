//! The four subcommands. Each writes its outputs and the resolved config
//! into the output directory and reports whether its asserted properties
//! held.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tvgeo_core::analytic::{
    calibrable_check, cheeger_radius, convex_certificate_vlambda, rasterize, Shape,
};
use tvgeo_core::certify::{
    mnc_estimate, ExtendedSupportMap, StabilityOracle, StabilityPlan, StabilityRecord,
    DEFAULT_LEVELS,
};
use tvgeo_core::geometry::{contours, level_set, ContourSet};
use tvgeo_core::noise::add_noise;
use tvgeo_core::solver::{
    duality_gap, primal_energy, solve, tv_d, tv_density, SolveResult, SolverConfig,
};
use tvgeo_core::GridImage;

use crate::error::{CliError, IoContext, Result};
use crate::io::{num, opt, render_svg, unix_time, write_config, write_pgm, Csv, SvgLayer};
use crate::runner::{cells, run_cells, thread_pool};

/// Shape spec text, or a path to a file holding one.
pub fn load_shape(arg: &str) -> Result<Shape> {
    let path = Path::new(arg);
    let text = if path.is_file() {
        fs::read_to_string(path).at(path)?
    } else {
        arg.to_owned()
    };
    Ok(Shape::parse(&text)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveOpts {
    pub tau: Option<f64>,
    pub max_iters: usize,
    pub gap_tol: f64,
}

impl Default for SolveOpts {
    fn default() -> Self {
        let d = SolverConfig::new(1.0);
        Self {
            tau: None,
            max_iters: d.max_iters,
            gap_tol: d.gap_tol,
        }
    }
}

impl SolveOpts {
    pub fn config(&self, lambda: f64) -> SolverConfig {
        let mut c = SolverConfig::new(lambda)
            .with_max_iters(self.max_iters)
            .with_gap_tol(self.gap_tol);
        if let Some(t) = self.tau {
            c = c.with_tau(t);
        }
        c
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Output {
    pub dir: PathBuf,
    /// Adds a timestamp comment to SVG files.
    pub timestamp: bool,
    /// Plain `P2` instead of binary `P5`.
    pub plain_pgm: bool,
}

impl Output {
    fn prepare(&self) -> Result<()> {
        fs::create_dir_all(&self.dir).at(&self.dir)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn pgm(&self, name: &str, img: &GridImage) -> Result<()> {
        write_pgm(&self.path(name), img, !self.plain_pgm).map(|_| ())
    }

    fn svg(&self, path: &Path, layers: &[SvgLayer<'_>]) -> Result<()> {
        let text = render_svg(layers, self.timestamp.then(unix_time));
        fs::write(path, text).at(path)
    }
}

fn check_lambdas(lambdas: &[f64]) -> Result<Vec<f64>> {
    if lambdas.is_empty() {
        return Err(CliError::Usage("at least one --lambda is required".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(CliError::Usage("lambdas must be positive".into()));
    }
    let mut l = lambdas.to_vec();
    l.sort_by(|a, b| b.total_cmp(a));
    l.dedup();
    Ok(l)
}

fn level_lines(u: &GridImage) -> Vec<(f64, ContourSet)> {
    DEFAULT_LEVELS
        .iter()
        .map(|&t| (t, contours(&level_set(u, t).region)))
        .collect()
}

fn level_layers<'a>(lines: &'a [(f64, ContourSet)]) -> Vec<SvgLayer<'a>> {
    lines
        .iter()
        .map(|(t, c)| SvgLayer {
            curves: c,
            stroke: "#1f4e9c",
            width: 1.0,
            label: format!("u = {t}"),
        })
        .collect()
}

/// Means of `img` over pixels at least two pixels inside / outside `shape`.
pub fn interior_exterior_means(img: &GridImage, shape: &Shape) -> (f64, f64) {
    let n = img.n();
    let h = 1.0 / n as f64;
    let (mut si, mut ci, mut se, mut ce) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..n {
        for j in 0..n {
            let p = [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h];
            let d = shape.signed_distance(p);
            let v = img.get(i as isize, j as isize);
            if d < -2.0 * h {
                si += v;
                ci += 1;
            } else if d > 2.0 * h {
                se += v;
                ce += 1;
            }
        }
    }
    (si / ci.max(1) as f64, se / ce.max(1) as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct DenoiseOpts {
    pub shape: Option<String>,
    pub input: Option<PathBuf>,
    pub n: usize,
    pub lambda: f64,
    pub sigma: f64,
    pub seed: u64,
    pub solve: SolveOpts,
    pub tube_r: Vec<f64>,
    pub out: Output,
}

#[derive(Clone, Debug)]
pub struct DenoiseSummary {
    pub noise_norm: f64,
    pub result: Option<SolveResult>,
    pub interior_mean: Option<f64>,
    pub exterior_mean: Option<f64>,
    pub notice: Option<String>,
}

pub fn denoise(opts: &DenoiseOpts) -> Result<DenoiseSummary> {
    let (f, shape) = match (&opts.shape, &opts.input) {
        (Some(s), None) => {
            let shape = load_shape(s)?;
            (rasterize(&shape, opts.n), Some(shape))
        }
        (None, Some(p)) => (crate::io::read_pgm(p)?, None),
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --shape and --input".into(),
            ))
        }
    };
    if !(opts.lambda >= 0.0 && opts.lambda.is_finite()) {
        return Err(CliError::Usage("lambda must be nonnegative".into()));
    }
    if !(opts.sigma >= 0.0 && opts.sigma.is_finite()) {
        return Err(CliError::Usage("sigma must be nonnegative".into()));
    }
    opts.out.prepare()?;
    write_config(&opts.out.dir, "denoise", opts)?;
    let (y, noise_norm) = add_noise(&f, opts.sigma, opts.seed);
    opts.out.pgm("y.pgm", &y)?;

    let (u, result, notice) = if opts.lambda == 0.0 {
        let msg = "lambda = 0: u = y, certificate skipped".to_owned();
        (y.clone(), None, Some(msg))
    } else {
        let r = solve(&y, &opts.solve.config(opts.lambda))?;
        opts.out.pgm("v.pgm", &r.v)?;
        (r.u.clone(), Some(r), None)
    };
    opts.out.pgm("u.pgm", &u)?;

    let lines = level_lines(&u);
    let boundary = shape.as_ref().map(|s| s.boundary_contours(1024));
    let mut layers = level_layers(&lines);
    if let Some(b) = &boundary {
        layers.push(SvgLayer {
            curves: b,
            stroke: "#c0392b",
            width: 0.75,
            label: "shape boundary".into(),
        });
    }
    opts.out.svg(&opts.out.path("levels.svg"), &layers)?;

    let (interior_mean, exterior_mean) = match &shape {
        Some(s) => {
            let (a, b) = interior_exterior_means(&u, s);
            (Some(a), Some(b))
        }
        None => (None, None),
    };
    let mut csv = Csv::new(&[
        "n",
        "lambda",
        "sigma",
        "seed",
        "noise_norm",
        "iters",
        "converged",
        "rel_gap",
        "primal",
        "dual_gap",
        "tv",
        "interior_mean",
        "exterior_mean",
        "tube_radius",
        "tv_inside_tube",
        "tv_outside_tube",
    ]);
    let boundary_kind = result.as_ref().map(|r| r.boundary).unwrap_or_default();
    let tv = tv_d(&u, boundary_kind);
    let primal = primal_energy(&u, &y, opts.lambda, boundary_kind);
    let gap = match &result {
        Some(r) => Some(duality_gap(&r.u, &r.z, &y, opts.lambda, r.boundary)?),
        None => None,
    };
    let base = vec![
        y.n().to_string(),
        num(opts.lambda),
        num(opts.sigma),
        opts.seed.to_string(),
        num(noise_norm),
        result.as_ref().map_or(0, |r| r.iters).to_string(),
        result.as_ref().is_none_or(|r| r.converged).to_string(),
        opt(result
            .as_ref()
            .and_then(|r| r.final_gap())
            .map(|g| g.rel_gap)),
        num(primal),
        opt(gap),
        num(tv),
        opt(interior_mean),
        opt(exterior_mean),
    ];
    let oracle = match &shape {
        Some(s) if !opts.tube_r.is_empty() => Some(StabilityOracle::new(s, opts.n)?),
        _ => None,
    };
    if let Some(oracle) = &oracle {
        let density = tv_density(&u, boundary_kind);
        for &r in &opts.tube_r {
            let tube = oracle.tube(r);
            let inside: f64 = density
                .values()
                .iter()
                .zip(tube.mask())
                .filter(|p| *p.1)
                .map(|p| p.0)
                .sum();
            let mut row = base.clone();
            row.extend([num(r), num(inside), num(tv - inside)]);
            csv.push(row);
        }
    } else {
        let mut row = base;
        row.extend([String::new(), String::new(), String::new()]);
        csv.push(row);
    }
    csv.write(&opts.out.path("metrics.csv"))?;
    Ok(DenoiseSummary {
        noise_norm,
        result,
        interior_mean,
        exterior_mean,
        notice,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepOpts {
    pub shape: String,
    pub n: usize,
    pub lambdas: Vec<f64>,
    pub solve: SolveOpts,
    pub eps_sat: f64,
    pub out: Output,
}

pub fn sweep(opts: &SweepOpts) -> Result<tvgeo_core::certify::MncSweep> {
    let lambdas = check_lambdas(&opts.lambdas)?;
    let shape = load_shape(&opts.shape)?;
    opts.out.prepare()?;
    write_config(&opts.out.dir, "sweep", opts)?;
    let f = rasterize(&shape, opts.n);
    let s = mnc_estimate(&f, &lambdas, &opts.solve.config(lambdas[0]))?;
    let mut csv = Csv::new(&[
        "lambda",
        "l2_norm",
        "rel_gap",
        "iters",
        "converged",
        "rel_diff_to_previous",
    ]);
    for (k, e) in s.estimates.iter().enumerate() {
        csv.push(vec![
            num(e.lambda),
            num(e.l2_norm),
            num(e.gap),
            e.iters.to_string(),
            e.converged.to_string(),
            if k == 0 {
                String::new()
            } else {
                num(s.pairwise[k - 1])
            },
        ]);
    }
    csv.write(&opts.out.path("sweep.csv"))?;
    let cal = calibrable_check(&shape).ok();
    let mut summary = Csv::new(&["key", "value"]);
    summary.push(vec!["norm_slope".into(), opt(s.norm_slope())]);
    summary.push(vec!["max_rel_diff".into(), num(s.max_pairwise())]);
    summary.push(vec![
        "calibrable".into(),
        cal.map_or(String::new(), |c| c.is_calibrable.to_string()),
    ]);
    summary.push(vec![
        "perimeter_over_sqrt_area".into(),
        num(shape.perimeter() / shape.area().sqrt()),
    ]);
    summary.write(&opts.out.path("summary.csv"))?;
    let last = s.estimates.last().expect("nonempty sweep");
    let sat = opts
        .solve
        .config(last.lambda)
        .boundary
        .crop(&last.z.norms(), opts.n);
    let map = ExtendedSupportMap::from_saturation(sat, opts.eps_sat)?;
    opts.out.pgm("v_last.pgm", &last.v)?;
    opts.out.pgm("saturation.pgm", &map.saturation)?;
    opts.out.pgm("support.pgm", &map.region.to_image())?;
    Ok(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifyOpts {
    pub shape: String,
    pub n: usize,
    pub lambda: f64,
    pub solve: SolveOpts,
    /// Asserted bound on the relative L1 error.
    pub max_rel_l1: Option<f64>,
    pub out: Output,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertifySummary {
    pub rel_l1: f64,
    pub cheeger_radius: f64,
    pub passed: bool,
}

pub fn certify(opts: &CertifyOpts) -> Result<CertifySummary> {
    let shape = load_shape(&opts.shape)?;
    let lambda = check_lambdas(&[opts.lambda])?[0];
    opts.out.prepare()?;
    write_config(&opts.out.dir, "certify", opts)?;
    let f = rasterize(&shape, opts.n);
    let r = solve(&f, &opts.solve.config(lambda))?;
    let analytic = convex_certificate_vlambda(&shape, lambda, opts.n)?;
    let rel_l1 = r.v.axpy(-1.0, &analytic).l1_norm() / analytic.l1_norm();
    let radius = shape
        .components()
        .iter()
        .map(cheeger_radius)
        .collect::<std::result::Result<Vec<_>, _>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let passed = opts.max_rel_l1.is_none_or(|m| rel_l1 <= m);
    opts.out.pgm("v_numeric.pgm", &r.v)?;
    opts.out.pgm("v_analytic.pgm", &analytic)?;
    let mut csv = Csv::new(&[
        "n",
        "lambda",
        "cheeger_radius",
        "rel_l1_error",
        "v_l2_numeric",
        "v_l2_analytic",
        "rel_gap",
        "iters",
        "converged",
        "asserted_max_rel_l1",
        "passed",
    ]);
    csv.push(vec![
        opts.n.to_string(),
        num(lambda),
        num(radius),
        num(rel_l1),
        num(r.v.l2_norm()),
        num(analytic.l2_norm()),
        opt(r.final_gap().map(|g| g.rel_gap)),
        r.iters.to_string(),
        r.converged.to_string(),
        opt(opts.max_rel_l1),
        passed.to_string(),
    ]);
    csv.write(&opts.out.path("certify.csv"))?;
    Ok(CertifySummary {
        rel_l1,
        cheeger_radius: radius,
        passed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityOpts {
    pub shape: String,
    pub n: usize,
    pub lambdas: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub tube_r: Vec<f64>,
    pub solve: SolveOpts,
    pub svg: bool,
    /// Assert 100% containment among hypothesis-satisfied runs.
    pub require_containment: bool,
    pub out: Output,
}

pub const STABILITY_HEADER: [&str; 26] = [
    "lambda",
    "sigma",
    "seed",
    "n",
    "noise_norm",
    "noise_over_lambda",
    "tube_radius",
    "contained",
    "worst_violation",
    "max_distance",
    "hausdorff_max",
    "hausdorff_by_level",
    "certificate_distance",
    "analytic_bias",
    "delta_half_r",
    "area_bound",
    "threshold",
    "hypothesis",
    "isoperimetric_margin",
    "bo_lhs",
    "bo_rhs",
    "bo_satisfied",
    "iters",
    "converged",
    "rel_gap",
    "levels",
];

pub fn stability_row(r: &StabilityRecord) -> Vec<String> {
    let hd_max = r.hausdorff.iter().map(|p| p.1).fold(0.0, f64::max);
    let by_level: Vec<String> = r
        .hausdorff
        .iter()
        .map(|(t, d)| format!("{t}:{}", num(*d)))
        .collect();
    vec![
        num(r.lambda),
        num(r.sigma),
        r.seed.to_string(),
        r.n.to_string(),
        num(r.noise_norm),
        num(r.noise_norm / r.lambda),
        num(r.tube_radius),
        r.contained.to_string(),
        num(r.worst_violation),
        num(r.max_distance),
        num(hd_max),
        by_level.join(";"),
        num(r.certificate_distance),
        num(r.analytic_bias),
        opt(r.delta_half_r),
        num(r.area_bound),
        opt(r.threshold),
        r.hypothesis.as_str().into(),
        num(r.isoperimetric_margin),
        opt(r.burger_osher.map(|b| b.lhs)),
        opt(r.burger_osher.map(|b| b.rhs)),
        r.burger_osher
            .map_or(String::new(), |b| b.satisfied.to_string()),
        r.iters.to_string(),
        r.converged.to_string(),
        num(r.gap),
        r.hausdorff.len().to_string(),
    ]
}

#[derive(Clone, Debug)]
pub struct StabilitySummary {
    pub report: tvgeo_core::certify::StabilityReport,
    pub failures: usize,
    pub passed: bool,
}

pub fn stability(opts: &StabilityOpts) -> Result<StabilitySummary> {
    let lambdas = check_lambdas(&opts.lambdas)?;
    if opts.sigmas.is_empty() || opts.seeds.is_empty() || opts.tube_r.is_empty() {
        return Err(CliError::Usage(
            "--sigma, --seed and --tube-r need at least one value each".into(),
        ));
    }
    let shape = load_shape(&opts.shape)?;
    opts.out.prepare()?;
    write_config(&opts.out.dir, "stability", opts)?;
    let oracle = StabilityOracle::new(&shape, opts.n)?;
    let plan = StabilityPlan::prepare(
        oracle,
        &lambdas,
        &opts.tube_r,
        &DEFAULT_LEVELS,
        &opts.solve.config(lambdas[0]),
    )?;
    let pool = thread_pool()?;
    let (report, failures) = run_cells(&plan, &cells(&lambdas, &opts.sigmas, &opts.seeds), &pool);
    let mut csv = Csv::new(&STABILITY_HEADER);
    for r in &report.records {
        csv.push(stability_row(r));
    }
    // partial results are flushed before any failure is reported
    csv.write(&opts.out.path("stability.csv"))?;
    if opts.svg {
        write_stability_svgs(opts, &plan, &lambdas)?;
    }
    if let Some((cell, err)) = failures.first() {
        return Err(CliError::Usage(format!(
            "{} cell(s) failed, first at lambda={} sigma={} seed={}: {err}",
            failures.len(),
            cell.lambda,
            cell.sigma,
            cell.seed
        )));
    }
    let passed = !opts.require_containment || report.containment_rate().is_some_and(|r| r == 1.0);
    Ok(StabilitySummary {
        report,
        failures: failures.len(),
        passed,
    })
}

fn write_stability_svgs(opts: &StabilityOpts, plan: &StabilityPlan, lambdas: &[f64]) -> Result<()> {
    let dir = opts.out.path("runs");
    fs::create_dir_all(&dir).at(&dir)?;
    let tubes: Vec<(f64, ContourSet)> = opts
        .tube_r
        .iter()
        .map(|&r| (r, contours(&plan.oracle.tube(r))))
        .collect();
    for &lambda in lambdas {
        for &sigma in &opts.sigmas {
            for &seed in &opts.seeds {
                let (y, _) = add_noise(&plan.oracle.f, sigma, seed);
                let clean = plan.clean_solution(lambda).expect("prepared");
                let u = if sigma == 0.0 {
                    clean.u.clone()
                } else {
                    tvgeo_core::solver::solve_warm(&y, &opts.solve.config(lambda), Some(&clean.z))?
                        .u
                };
                let lines = level_lines(&u);
                let mut layers: Vec<SvgLayer<'_>> = tubes
                    .iter()
                    .map(|(r, c)| SvgLayer {
                        curves: c,
                        stroke: "#e67e22",
                        width: 0.75,
                        label: format!("tube r = {r}"),
                    })
                    .collect();
                layers.extend(level_layers(&lines));
                let path = dir.join(format!("lambda{lambda}_sigma{sigma}_seed{seed}.svg"));
                opts.out.svg(&path, &layers)?;
            }
        }
    }
    Ok(())
}
