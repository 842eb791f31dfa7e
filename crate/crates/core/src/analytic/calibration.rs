use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// The calibration of a disc of radius `R`: `x/R` inside and `R x/|x|^2`
/// outside (coordinates relative to the center). Its divergence is
/// `(2/R) 1_B` and it equals the outer normal on the circle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscCalibration {
    pub center: Point,
    pub radius: f64,
}

pub fn disc_calibration(center: Point, radius: f64) -> Result<DiscCalibration> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "radius must be positive, got {radius}"
        )));
    }
    Ok(DiscCalibration { center, radius })
}

impl DiscCalibration {
    pub fn eval(&self, p: Point) -> [f64; 2] {
        let x = [p[0] - self.center[0], p[1] - self.center[1]];
        let r2 = x[0] * x[0] + x[1] * x[1];
        let r = self.radius;
        if r2 <= r * r {
            [x[0] / r, x[1] / r]
        } else {
            [r * x[0] / r2, r * x[1] / r2]
        }
    }

    /// `1 - sup |z|` at distance `rho` outside the circle: `rho / (R + rho)`.
    pub fn exterior_margin(&self, rho: f64) -> f64 {
        rho / (self.radius + rho)
    }
}

/// One sample of an arclength-parametrized closed curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveSample {
    pub s: f64,
    pub point: Point,
    pub tangent: Point,
    /// Outer unit normal, the tangent rotated by `-pi/2`.
    pub normal: Point,
    pub kappa: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum CurveModel {
    Circle { center: Point, radius: f64 },
    Ellipse { center: Point, a: f64, b: f64 },
}

/// A convex closed curve sampled uniformly in arclength. Samples run
/// counterclockwise; the last sample repeats the first at `s = P`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCurve {
    samples: Vec<CurveSample>,
    total_length: f64,
    model: CurveModel,
    /// Gauss-Legendre arclength table of the ellipse parameter.
    table: Vec<f64>,
}

const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];
const TABLE_PANELS: usize = 2048;

/// `s mod period` in `[0, period)`.
fn wrap(s: f64, period: f64) -> f64 {
    let r = s - period * (s / period).floor();
    if r >= period {
        0.0
    } else {
        r
    }
}

fn ellipse_speed(a: f64, b: f64, t: f64) -> f64 {
    (a * a * t.sin() * t.sin() + b * b * t.cos() * t.cos()).sqrt()
}

fn gauss_legendre(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let mut s = 0.0;
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
        s += w * (f(m + r * x) + f(m - r * x));
    }
    s * r
}

impl BoundaryCurve {
    pub fn circle(center: Point, radius: f64, samples: usize) -> Result<Self> {
        if !(radius > 0.0) || samples < 8 {
            return Err(Error::InvalidParameter(
                "circle needs a positive radius and at least 8 samples".into(),
            ));
        }
        let model = CurveModel::Circle { center, radius };
        let mut c = Self {
            samples: Vec::new(),
            total_length: 2.0 * PI * radius,
            model,
            table: Vec::new(),
        };
        c.fill(samples);
        Ok(c)
    }

    /// Ellipse with semi-axes `a` (along x) and `b` (along y).
    pub fn ellipse(center: Point, a: f64, b: f64, samples: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || samples < 8 {
            return Err(Error::InvalidParameter(
                "ellipse needs positive axes and at least 8 samples".into(),
            ));
        }
        let dt = 2.0 * PI / TABLE_PANELS as f64;
        let mut table = Vec::with_capacity(TABLE_PANELS + 1);
        table.push(0.0);
        for k in 0..TABLE_PANELS {
            let lo = k as f64 * dt;
            let last = *table.last().expect("nonempty");
            table.push(last + gauss_legendre(|t| ellipse_speed(a, b, t), lo, lo + dt));
        }
        let mut c = Self {
            samples: Vec::new(),
            total_length: table[TABLE_PANELS],
            model: CurveModel::Ellipse { center, a, b },
            table,
        };
        c.fill(samples);
        Ok(c)
    }

    fn fill(&mut self, m: usize) {
        let p = self.total_length;
        self.samples = (0..=m)
            .map(|k| self.exact_sample(p * k as f64 / m as f64))
            .collect();
        // close exactly
        let first = self.samples[0];
        let last = self.samples.last_mut().expect("nonempty");
        *last = CurveSample { s: p, ..first };
    }

    /// Ellipse parameter at arclength `s` (Newton on the arclength table).
    fn ellipse_param(&self, s: f64, a: f64, b: f64) -> f64 {
        let dt = 2.0 * PI / TABLE_PANELS as f64;
        let s = wrap(s, self.total_length);
        let k = self
            .table
            .partition_point(|&x| x <= s)
            .clamp(1, TABLE_PANELS)
            - 1;
        let lo = k as f64 * dt;
        let mut t = lo + dt * (s - self.table[k]) / (self.table[k + 1] - self.table[k]);
        for _ in 0..8 {
            let f = self.table[k] + gauss_legendre(|u| ellipse_speed(a, b, u), lo, t) - s;
            t -= f / ellipse_speed(a, b, t);
        }
        t
    }

    /// Exact geometry at arclength `s`.
    pub fn exact_sample(&self, s: f64) -> CurveSample {
        match self.model {
            CurveModel::Circle { center, radius } => {
                let t = s / radius;
                let (sn, cs) = t.sin_cos();
                CurveSample {
                    s,
                    point: [center[0] + radius * cs, center[1] + radius * sn],
                    tangent: [-sn, cs],
                    normal: [cs, sn],
                    kappa: 1.0 / radius,
                }
            }
            CurveModel::Ellipse { center, a, b } => {
                let t = self.ellipse_param(s, a, b);
                let (sn, cs) = t.sin_cos();
                let speed = ellipse_speed(a, b, t);
                let tangent = [-a * sn / speed, b * cs / speed];
                CurveSample {
                    s,
                    point: [center[0] + a * cs, center[1] + b * sn],
                    tangent,
                    normal: [tangent[1], -tangent[0]],
                    kappa: a * b / (speed * speed * speed),
                }
            }
        }
    }

    pub fn exact_curvature(&self, s: f64) -> f64 {
        self.exact_sample(s).kappa
    }

    pub fn samples(&self) -> &[CurveSample] {
        &self.samples
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn spacing(&self) -> f64 {
        self.total_length / (self.samples.len() - 1) as f64
    }

    /// Trapezoidal integral of the sampled curvature.
    pub fn total_curvature(&self) -> f64 {
        let ds = self.spacing();
        self.samples
            .windows(2)
            .map(|w| 0.5 * (w[0].kappa + w[1].kappa) * ds)
            .sum()
    }

    pub fn max_curvature(&self) -> f64 {
        self.samples.iter().map(|s| s.kappa).fold(0.0, f64::max)
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let ds = self.spacing();
        let m = self.samples.len() - 1;
        let s = wrap(s, self.total_length);
        let k = ((s / ds).floor() as usize).min(m - 1);
        (k, s - k as f64 * ds)
    }

    /// Piecewise-linear interpolation of the sampled curvature.
    pub fn curvature(&self, s: f64) -> f64 {
        let (k, r) = self.locate(s);
        let ds = self.spacing();
        let (k0, k1) = (self.samples[k].kappa, self.samples[k + 1].kappa);
        k0 + (k1 - k0) * r / ds
    }
}

/// `eta(t) = min(t, 2 - t)` on `[0, 2]`, extended by zero.
fn eta(t: f64) -> f64 {
    t.min(2.0 - t).max(0.0)
}

/// `int_0^d eta`.
fn eta_integral(d: f64) -> f64 {
    if d <= 1.0 {
        0.5 * d * d
    } else if d <= 2.0 {
        1.0 - 0.5 * (2.0 - d) * (2.0 - d)
    } else {
        1.0
    }
}

/// Divergence-free field outside a convex curve, in boundary coordinates
/// `(s, d)` (arclength and distance), with components in the `(tau, nu)`
/// frame:
///
/// ```text
/// z1 = -alpha K(s) eta(d),        K(s) = int_0^s (kappa - c),
/// z2 = (1 + alpha I(d) (kappa(s) - c)) / (1 + kappa(s) d),   I(d) = int_0^d eta,
/// ```
///
/// with `c = 2 pi / P` taken as the mean of the sampled curvature, so that
/// `K` is periodic. `kappa` is interpolated linearly between samples and `K`
/// is its exact integral.
#[derive(Clone, Debug)]
pub struct OuterCalibration {
    curve: BoundaryCurve,
    alpha: f64,
    c: f64,
    /// Integral of the interpolated curvature up to each sample.
    cumulative: Vec<f64>,
}

/// Validation grid used to certify `|z| < 1`.
pub const VALIDATION_S: usize = 512;
pub const VALIDATION_D: usize = 64;
pub const VALIDATION_D_MIN: f64 = 1e-4;
pub const VALIDATION_D_MAX: f64 = 3.0;

pub fn validation_distances() -> Vec<f64> {
    let ratio = (VALIDATION_D_MAX / VALIDATION_D_MIN).ln();
    (0..VALIDATION_D)
        .map(|j| VALIDATION_D_MIN * (ratio * j as f64 / (VALIDATION_D - 1) as f64).exp())
        .collect()
}

impl OuterCalibration {
    /// Builds the field for `alpha` and checks `|z|^2 < 1` on the validation
    /// grid.
    pub fn new(curve: BoundaryCurve, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        let field = Self::unchecked(curve, alpha);
        if field.validation_max() >= 0.0 {
            return Err(Error::AlphaTooLarge { alpha });
        }
        Ok(field)
    }

    fn unchecked(curve: BoundaryCurve, alpha: f64) -> Self {
        let ds = curve.spacing();
        let mut cumulative = Vec::with_capacity(curve.samples().len());
        cumulative.push(0.0);
        for w in curve.samples().windows(2) {
            let last = *cumulative.last().expect("nonempty");
            cumulative.push(last + 0.5 * (w[0].kappa + w[1].kappa) * ds);
        }
        let c = cumulative.last().copied().expect("nonempty") / curve.total_length();
        Self {
            curve,
            alpha,
            c,
            cumulative,
        }
    }

    /// `P / (4 pi M)` with `M` bounding both `K(s)^2` and `(kappa - c)^2`.
    pub fn initial_alpha(curve: &BoundaryCurve) -> f64 {
        let probe = Self::unchecked(curve.clone(), 1.0);
        let m = curve
            .samples()
            .iter()
            .map(|smp| {
                let k = probe.k_integral(smp.s);
                (k * k).max((smp.kappa - probe.c).powi(2))
            })
            .fold(0.0, f64::max);
        if m == 0.0 {
            // constant curvature: the field does not depend on alpha
            return 1.0;
        }
        curve.total_length() / (4.0 * PI * m)
    }

    /// Halves alpha from [`OuterCalibration::initial_alpha`] until the
    /// validation grid certifies `|z| < 1`.
    pub fn with_validated_alpha(curve: BoundaryCurve) -> Result<Self> {
        let mut alpha = Self::initial_alpha(&curve);
        for _ in 0..40 {
            let field = Self::unchecked(curve.clone(), alpha);
            if field.validation_max() < 0.0 {
                return Ok(field);
            }
            alpha *= 0.5;
        }
        Err(Error::AlphaTooLarge { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mean_curvature(&self) -> f64 {
        self.c
    }

    pub fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }

    /// `K(s) = int_0^s (kappa - c)`.
    pub fn k_integral(&self, s: f64) -> f64 {
        let (k, r) = self.curve.locate(s);
        let ds = self.curve.spacing();
        let smp = self.curve.samples();
        let (k0, k1) = (smp[k].kappa, smp[k + 1].kappa);
        let s_wrapped = k as f64 * ds + r;
        self.cumulative[k] + r * k0 + 0.5 * r * r * (k1 - k0) / ds - self.c * s_wrapped
    }

    /// `(z1, z2)` in the `(tau(s), nu(s))` frame.
    pub fn eval(&self, s: f64, d: f64) -> [f64; 2] {
        let kappa = self.curve.curvature(s);
        let z1 = -self.alpha * self.k_integral(s) * eta(d);
        let z2 = (1.0 + self.alpha * eta_integral(d) * (kappa - self.c)) / (1.0 + kappa * d);
        [z1, z2]
    }

    pub fn norm_sq(&self, s: f64, d: f64) -> f64 {
        let z = self.eval(s, d);
        z[0] * z[0] + z[1] * z[1]
    }

    /// Curvilinear divergence
    /// `(d_s z1 + kappa z2) / (1 + kappa d) + d_d z2`
    /// of the sampled field, with the metric terms taken from the exact
    /// curvature. Vanishes identically in the continuum; here it measures
    /// the curvature interpolation error.
    pub fn divergence_residual(&self, s: f64, d: f64) -> f64 {
        let ki = self.curve.curvature(s);
        let kt = self.curve.exact_curvature(s);
        let a = self.alpha;
        let (e, i) = (eta(d), eta_integral(d));
        let num = 1.0 + a * i * (ki - self.c);
        let z2 = num / (1.0 + ki * d);
        let ds_z1 = -a * (ki - self.c) * e;
        let dd_z2 =
            a * e * (ki - self.c) / (1.0 + ki * d) - ki * num / ((1.0 + ki * d) * (1.0 + ki * d));
        (ds_z1 + kt * z2) / (1.0 + kt * d) + dd_z2
    }

    /// `max |z|^2 - 1` over the validation grid (`d > 0`).
    pub fn validation_max(&self) -> f64 {
        let p = self.curve.total_length();
        let ds: Vec<f64> = validation_distances();
        let mut worst = f64::NEG_INFINITY;
        for k in 0..VALIDATION_S {
            let s = p * (k as f64 + 0.5) / VALIDATION_S as f64;
            for &d in &ds {
                worst = worst.max(self.norm_sq(s, d) - 1.0);
            }
        }
        worst
    }

    /// `max_s |z(s,d)|^2 - (1 - kappa(s) d / (1 + K))` with `K = sup kappa`;
    /// nonpositive when the small-distance decay bound holds at `d`.
    pub fn decay_band_excess(&self, d: f64) -> f64 {
        let k_sup = self.curve.max_curvature();
        let p = self.curve.total_length();
        (0..VALIDATION_S)
            .map(|k| {
                let s = p * (k as f64 + 0.5) / VALIDATION_S as f64;
                self.norm_sq(s, d) - (1.0 - self.curve.curvature(s) * d / (1.0 + k_sup))
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Field at a point outside the curve, via the nearest boundary point;
    /// `None` inside.
    pub fn eval_point(&self, x: Point) -> Option<[f64; 2]> {
        let smp = self.curve.samples();
        let m = smp.len() - 1;
        let dist2 = |p: Point| (x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2);
        let k = (0..m).min_by(|&a, &b| dist2(smp[a].point).total_cmp(&dist2(smp[b].point)))?;
        // refine on the two neighbouring chords
        let mut best = (dist2(smp[k].point), smp[k].s);
        for (a, b) in [((k + m - 1) % m, k), (k, k + 1)] {
            let (pa, pb) = (smp[a].point, smp[b].point);
            let d = [pb[0] - pa[0], pb[1] - pa[1]];
            let t = (((x[0] - pa[0]) * d[0] + (x[1] - pa[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1]))
                .clamp(0.0, 1.0);
            let q = [pa[0] + t * d[0], pa[1] + t * d[1]];
            let s = smp[a].s + t * self.curve.spacing();
            if dist2(q) < best.0 {
                best = (dist2(q), s);
            }
        }
        let foot = self.curve.exact_sample(best.1);
        let off = [x[0] - foot.point[0], x[1] - foot.point[1]];
        let d = off[0] * foot.normal[0] + off[1] * foot.normal[1];
        if d < 0.0 {
            return None;
        }
        let z = self.eval(best.1, d);
        Some([
            z[0] * foot.tangent[0] + z[1] * foot.normal[0],
            z[0] * foot.tangent[1] + z[1] * foot.normal[1],
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_calibration_values() {
        let z = disc_calibration([0.5, 0.5], 0.25).unwrap();
        assert_eq!(z.eval([0.5, 0.5]), [0.0, 0.0]);
        let on = z.eval([0.75, 0.5]);
        assert!((on[0] - 1.0).abs() < 1e-15 && on[1] == 0.0);
        let r = 0.1;
        let out = z.eval([0.5, 0.5 + 0.25 + r]);
        assert!((out[1] - 0.25 / 0.35).abs() < 1e-15);
        assert!((1.0 - out[1] - z.exterior_margin(r)).abs() < 1e-15);
        assert!(z.exterior_margin(r) <= r / 0.25);
    }

    #[test]
    fn disc_calibration_gauss_green() {
        // central differences of z summed over B approximate P(B) = 2 pi R
        let n = 512;
        let h = 1.0 / n as f64;
        let r = 0.25;
        let z = disc_calibration([0.5, 0.5], r).unwrap();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                if (x - 0.5).powi(2) + (y - 0.5).powi(2) < r * r {
                    let dx = (z.eval([x + h / 2.0, y])[0] - z.eval([x - h / 2.0, y])[0]) / h;
                    let dy = (z.eval([x, y + h / 2.0])[1] - z.eval([x, y - h / 2.0])[1]) / h;
                    total += (dx + dy) * h * h;
                }
            }
        }
        assert!((total / (2.0 * PI * r) - 1.0).abs() < 0.01, "{total}");
        let norm_ok = (0..1000).all(|k| {
            let t = k as f64 * 0.001;
            let v = z.eval([t, 1.0 - t * t]);
            v[0] * v[0] + v[1] * v[1] <= 1.0 + 1e-15
        });
        assert!(norm_ok);
    }

    #[test]
    fn ellipse_geometry() {
        let c = BoundaryCurve::ellipse([0.0, 0.0], 0.3, 0.2, 2048).unwrap();
        // Ramanujan's second approximation is accurate to ~1e-10 here
        let (a, b) = (0.3f64, 0.2f64);
        let hh = ((a - b) / (a + b)).powi(2);
        let ram = PI * (a + b) * (1.0 + 3.0 * hh / (10.0 + (4.0 - 3.0 * hh).sqrt()));
        assert!((c.total_length() - ram).abs() < 1e-9);
        assert!((c.total_curvature() / (2.0 * PI) - 1.0).abs() < 1e-6);
        let s0 = c.samples()[0];
        let sl = *c.samples().last().unwrap();
        assert_eq!(s0.point, sl.point);
        // uniform arclength spacing
        for w in c.samples().windows(2).take(50) {
            let d = ((w[1].point[0] - w[0].point[0]).powi(2)
                + (w[1].point[1] - w[0].point[1]).powi(2))
            .sqrt();
            assert!((d / c.spacing() - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn circle_reduces_to_disc_decay() {
        let r = 0.25;
        let curve = BoundaryCurve::circle([0.5, 0.5], r, 1024).unwrap();
        let f = OuterCalibration::new(curve, 0.05).unwrap();
        for k in 0..37 {
            let s = k as f64 * 0.0431;
            for d in [0.0, 0.01, 0.3, 1.5, 2.5] {
                let z = f.eval(s, d);
                assert!(z[0].abs() < 1e-10);
                assert!((z[1] - r / (r + d)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn boundary_value_is_the_normal() {
        let curve = BoundaryCurve::ellipse([0.5, 0.5], 0.3, 0.2, 1024).unwrap();
        let f = OuterCalibration::with_validated_alpha(curve).unwrap();
        for k in 0..50 {
            let z = f.eval(k as f64 * 0.03, 0.0);
            assert_eq!(z[0], 0.0);
            assert!((z[1] - 1.0).abs() < 1e-15);
        }
        let x = f.eval_point([0.5 + 0.3 + 0.1, 0.5]).unwrap();
        assert!(x[0] > 0.0 && x[0] < 1.0 && x[1].abs() < 1e-9);
        assert!(f.eval_point([0.5, 0.5]).is_none());
    }

    #[test]
    fn large_alpha_is_rejected() {
        let curve = BoundaryCurve::ellipse([0.0, 0.0], 0.3, 0.2, 512).unwrap();
        assert!(matches!(
            OuterCalibration::new(curve, 5.0),
            Err(Error::AlphaTooLarge { .. })
        ));
    }
}
