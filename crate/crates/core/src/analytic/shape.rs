use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{Contour, ContourSet, Point};

/// A planar region with closed-form measures.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Disc {
        center: Point,
        radius: f64,
    },
    /// Axis-aligned, lower-left corner at `corner`.
    Rectangle {
        corner: Point,
        width: f64,
        height: f64,
    },
    /// Rectangle whose corners are replaced by quarter circles of radius `rho`.
    RoundedRectangle {
        corner: Point,
        width: f64,
        height: f64,
        rho: f64,
    },
    /// Counterclockwise vertices of a convex polygon.
    ConvexPolygon {
        vertices: Vec<Point>,
    },
    /// Pairwise disjoint convex components.
    Union(Vec<Shape>),
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn norm(v: Point) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

/// Signed distance to an axis-aligned box given by its center and half sizes
/// (either may be zero).
fn box_sdf(p: Point, c: Point, half: Point) -> f64 {
    let dx = (p[0] - c[0]).abs() - half[0];
    let dy = (p[1] - c[1]).abs() - half[1];
    norm([dx.max(0.0), dy.max(0.0)]) + dx.max(dy).min(0.0)
}

fn polygon_area(v: &[Point]) -> f64 {
    let m = v.len();
    (0..m)
        .map(|k| v[k][0] * v[(k + 1) % m][1] - v[(k + 1) % m][0] * v[k][1])
        .sum::<f64>()
        * 0.5
}

fn polygon_perimeter(v: &[Point]) -> f64 {
    let m = v.len();
    (0..m)
        .map(|k| norm([v[(k + 1) % m][0] - v[k][0], v[(k + 1) % m][1] - v[k][1]]))
        .sum()
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm([p[0] - a[0] - t * d[0], p[1] - a[1] - t * d[1]])
}

/// Signed distance to a convex counterclockwise polygon.
fn polygon_sdf(p: Point, v: &[Point]) -> f64 {
    let m = v.len();
    let d = (0..m)
        .map(|k| segment_distance(p, v[k], v[(k + 1) % m]))
        .fold(f64::INFINITY, f64::min);
    let inside = (0..m).all(|k| cross(v[k], v[(k + 1) % m], p) >= 0.0);
    if inside && m >= 3 {
        -d
    } else {
        d
    }
}

/// Inner parallel body `{x : dist(x, complement) >= rho}` of a convex
/// counterclockwise polygon, by clipping against the offset edge lines.
/// Returns `None` when it is empty; degenerate results (a segment or a
/// point) are kept.
pub(crate) fn inner_parallel_polygon(v: &[Point], rho: f64) -> Option<Vec<Point>> {
    let m = v.len();
    let mut poly: Vec<Point> = v.to_vec();
    let eps = 1e-12;
    for k in 0..m {
        let a = v[k];
        let b = v[(k + 1) % m];
        let len = norm([b[0] - a[0], b[1] - a[1]]);
        let nrm = [-(b[1] - a[1]) / len, (b[0] - a[0]) / len];
        let off = nrm[0] * a[0] + nrm[1] * a[1] + rho;
        let side = |p: Point| nrm[0] * p[0] + nrm[1] * p[1] - off;
        let mut out = Vec::with_capacity(poly.len() + 1);
        for q in 0..poly.len() {
            let p = poly[q];
            let r = poly[(q + 1) % poly.len()];
            let (sp, sr) = (side(p), side(r));
            if sp >= -eps {
                out.push(p);
            }
            if (sp >= -eps) != (sr >= -eps) {
                let t = sp / (sp - sr);
                out.push([p[0] + t * (r[0] - p[0]), p[1] + t * (r[1] - p[1])]);
            }
        }
        if out.is_empty() {
            return None;
        }
        poly = out;
    }
    Some(poly)
}

/// Distance from `p` to a (possibly degenerate) convex polygon, zero inside.
fn polygon_distance(p: Point, v: &[Point]) -> f64 {
    if v.len() == 1 {
        return norm([p[0] - v[0][0], p[1] - v[0][1]]);
    }
    polygon_sdf(p, v).max(0.0)
}

/// The erosion `E_rho` of a convex shape, which generates the opening
/// `C_rho = E_rho + B(0, rho)`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Eroded {
    Disc {
        center: Point,
        radius: f64,
    },
    Box {
        center: Point,
        half: Point,
    },
    RoundBox {
        center: Point,
        half: Point,
        radius: f64,
    },
    Polygon(Vec<Point>),
}

impl Eroded {
    /// Distance to the eroded set (zero inside).
    pub(crate) fn distance(&self, p: Point) -> f64 {
        match self {
            Eroded::Disc { center, radius } => {
                (norm([p[0] - center[0], p[1] - center[1]]) - radius).max(0.0)
            }
            Eroded::Box { center, half } => box_sdf(p, *center, *half).max(0.0),
            Eroded::RoundBox {
                center,
                half,
                radius,
            } => (box_sdf(p, *center, *half) - radius).max(0.0),
            Eroded::Polygon(v) => polygon_distance(p, v),
        }
    }
}

impl Shape {
    pub fn disc(cx: f64, cy: f64, radius: f64) -> Self {
        Shape::Disc {
            center: [cx, cy],
            radius,
        }
    }

    pub fn rectangle(x0: f64, y0: f64, width: f64, height: f64) -> Self {
        Shape::Rectangle {
            corner: [x0, y0],
            width,
            height,
        }
    }

    pub fn rounded_rectangle(x0: f64, y0: f64, width: f64, height: f64, rho: f64) -> Self {
        Shape::RoundedRectangle {
            corner: [x0, y0],
            width,
            height,
            rho,
        }
    }

    /// Square of the given side centered in the unit square.
    pub fn centered_square(side: f64) -> Self {
        Shape::rectangle(0.5 - side / 2.0, 0.5 - side / 2.0, side, side)
    }

    /// Convex polygon; clockwise input is reversed.
    pub fn polygon(mut vertices: Vec<Point>) -> Result<Self> {
        if polygon_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let s = Shape::ConvexPolygon { vertices };
        s.validate()?;
        Ok(s)
    }

    /// Union of components; nested unions are flattened and a single
    /// component is returned as is.
    pub fn union(parts: Vec<Shape>) -> Result<Self> {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                Shape::Union(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        let s = if flat.len() == 1 {
            flat.pop().expect("one component")
        } else {
            Shape::Union(flat)
        };
        s.validate()?;
        Ok(s)
    }

    /// Checks positivity of the parameters, convexity of polygons and
    /// disjointness of union components.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidShape(m));
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            Shape::Disc { center, radius } => {
                if !finite(&[center[0], center[1], *radius]) || *radius <= 0.0 {
                    return bad(format!("disc radius must be positive, got {radius}"));
                }
            }
            Shape::Rectangle {
                corner,
                width,
                height,
            } => {
                if !finite(&[corner[0], corner[1], *width, *height])
                    || *width <= 0.0
                    || *height <= 0.0
                {
                    return bad(format!(
                        "rectangle sides must be positive, got {width} x {height}"
                    ));
                }
            }
            Shape::RoundedRectangle {
                corner,
                width,
                height,
                rho,
            } => {
                if !finite(&[corner[0], corner[1], *width, *height, *rho])
                    || *width <= 0.0
                    || *height <= 0.0
                {
                    return bad(format!(
                        "rectangle sides must be positive, got {width} x {height}"
                    ));
                }
                if *rho <= 0.0 || 2.0 * rho > width.min(*height) {
                    return bad(format!("corner radius {rho} must lie in (0, min side / 2]"));
                }
            }
            Shape::ConvexPolygon { vertices } => {
                let m = vertices.len();
                if m < 3 || !vertices.iter().all(|p| finite(p)) {
                    return bad("a polygon needs at least 3 finite vertices".into());
                }
                if polygon_area(vertices) <= 0.0 {
                    return bad(
                        "polygon vertices must be counterclockwise with positive area".into(),
                    );
                }
                for k in 0..m {
                    if cross(vertices[k], vertices[(k + 1) % m], vertices[(k + 2) % m]) < 0.0 {
                        return bad(format!("polygon is not convex at vertex {}", (k + 1) % m));
                    }
                }
            }
            Shape::Union(parts) => {
                if parts.is_empty() {
                    return bad("empty union".into());
                }
                for p in parts {
                    if matches!(p, Shape::Union(_)) {
                        return bad("nested union".into());
                    }
                    p.validate()?;
                }
                for a in 0..parts.len() {
                    for b in a + 1..parts.len() {
                        if parts[a].separation(&parts[b]) <= 0.0 {
                            return bad(format!("union components {a} and {b} are not separated"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Lower estimate of the gap between two convex shapes, from dense
    /// boundary samples; nonpositive when they touch or overlap.
    fn separation(&self, other: &Shape) -> f64 {
        let pts_a = self.boundary_points(2048);
        let pts_b = other.boundary_points(2048);
        let spacing = (self.perimeter() / 2048.0).max(other.perimeter() / 2048.0);
        let d = pts_a
            .iter()
            .map(|&p| other.signed_distance(p))
            .chain(pts_b.iter().map(|&p| self.signed_distance(p)))
            .fold(f64::INFINITY, f64::min);
        d - spacing
    }

    pub fn components(&self) -> &[Shape] {
        match self {
            Shape::Union(parts) => parts,
            other => core::slice::from_ref(other),
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, Shape::Union(parts) if parts.len() > 1)
    }

    pub fn area(&self) -> f64 {
        match self {
            Shape::Disc { radius, .. } => PI * radius * radius,
            Shape::Rectangle { width, height, .. } => width * height,
            Shape::RoundedRectangle {
                width, height, rho, ..
            } => width * height - (4.0 - PI) * rho * rho,
            Shape::ConvexPolygon { vertices } => polygon_area(vertices),
            Shape::Union(parts) => parts.iter().map(Shape::area).sum(),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            Shape::Disc { radius, .. } => 2.0 * PI * radius,
            Shape::Rectangle { width, height, .. } => 2.0 * (width + height),
            Shape::RoundedRectangle {
                width, height, rho, ..
            } => 2.0 * (width + height) - (8.0 - 2.0 * PI) * rho,
            Shape::ConvexPolygon { vertices } => polygon_perimeter(vertices),
            Shape::Union(parts) => parts.iter().map(Shape::perimeter).sum(),
        }
    }

    /// Negative inside, positive outside.
    pub fn signed_distance(&self, p: Point) -> f64 {
        match self {
            Shape::Disc { center, radius } => norm([p[0] - center[0], p[1] - center[1]]) - radius,
            Shape::Rectangle {
                corner,
                width,
                height,
            } => box_sdf(
                p,
                [corner[0] + width / 2.0, corner[1] + height / 2.0],
                [width / 2.0, height / 2.0],
            ),
            Shape::RoundedRectangle {
                corner,
                width,
                height,
                rho,
            } => {
                box_sdf(
                    p,
                    [corner[0] + width / 2.0, corner[1] + height / 2.0],
                    [width / 2.0 - rho, height / 2.0 - rho],
                ) - rho
            }
            Shape::ConvexPolygon { vertices } => polygon_sdf(p, vertices),
            Shape::Union(parts) => parts
                .iter()
                .map(|s| s.signed_distance(p))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.signed_distance(p) < 0.0
    }

    /// Largest radius of a disc inside the shape (largest over components).
    pub fn inradius(&self) -> f64 {
        match self {
            Shape::Disc { radius, .. } => *radius,
            Shape::Rectangle { width, height, .. }
            | Shape::RoundedRectangle { width, height, .. } => width.min(*height) / 2.0,
            Shape::ConvexPolygon { vertices } => {
                let (mut lo, mut hi) = (0.0, polygon_perimeter(vertices));
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if inner_parallel_polygon(vertices, mid).is_some() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 {
                        break;
                    }
                }
                lo
            }
            Shape::Union(parts) => parts.iter().map(Shape::inradius).fold(0.0, f64::max),
        }
    }

    /// Essential supremum of the boundary curvature (infinite at corners).
    pub fn max_curvature(&self) -> f64 {
        match self {
            Shape::Disc { radius, .. } => 1.0 / radius,
            Shape::RoundedRectangle { rho, .. } => 1.0 / rho,
            Shape::Rectangle { .. } | Shape::ConvexPolygon { .. } => f64::INFINITY,
            Shape::Union(parts) => parts.iter().map(Shape::max_curvature).fold(0.0, f64::max),
        }
    }

    /// Erosion by `rho` of a convex shape; `None` when empty.
    pub(crate) fn erosion(&self, rho: f64) -> Option<Eroded> {
        if rho < 0.0 {
            return None;
        }
        match self {
            Shape::Disc { center, radius } => (rho <= *radius).then(|| Eroded::Disc {
                center: *center,
                radius: radius - rho,
            }),
            Shape::Rectangle {
                corner,
                width,
                height,
            } => {
                let half = [width / 2.0 - rho, height / 2.0 - rho];
                (half[0] >= 0.0 && half[1] >= 0.0).then(|| Eroded::Box {
                    center: [corner[0] + width / 2.0, corner[1] + height / 2.0],
                    half,
                })
            }
            Shape::RoundedRectangle {
                corner,
                width,
                height,
                rho: r0,
            } => {
                let center = [corner[0] + width / 2.0, corner[1] + height / 2.0];
                if rho <= *r0 {
                    Some(Eroded::RoundBox {
                        center,
                        half: [width / 2.0 - r0, height / 2.0 - r0],
                        radius: r0 - rho,
                    })
                } else {
                    Shape::Rectangle {
                        corner: *corner,
                        width: *width,
                        height: *height,
                    }
                    .erosion(rho)
                }
            }
            Shape::ConvexPolygon { vertices } => {
                inner_parallel_polygon(vertices, rho).map(Eroded::Polygon)
            }
            Shape::Union(_) => None,
        }
    }

    /// Perimeter and area of the opening `C_rho` of a convex shape, from
    /// closed forms (Steiner's formula for polygons).
    pub fn opening_measures(&self, rho: f64) -> Result<(f64, f64)> {
        if !self.is_convex() {
            return Err(Error::NotConvex);
        }
        let shape = &self.components()[0];
        let eroded = shape.erosion(rho).ok_or(Error::EmptyOpening { rho })?;
        Ok(match (shape, eroded) {
            (Shape::Disc { .. }, _) => (shape.perimeter(), shape.area()),
            (Shape::RoundedRectangle { rho: r0, .. }, _) if rho <= *r0 => {
                (shape.perimeter(), shape.area())
            }
            (_, Eroded::Box { half, .. }) => {
                let pe = 4.0 * (half[0] + half[1]);
                let ae = 4.0 * half[0] * half[1];
                (pe + 2.0 * PI * rho, ae + rho * pe + PI * rho * rho)
            }
            (_, Eroded::Polygon(v)) => {
                let (pe, ae) = if v.len() >= 3 {
                    (polygon_perimeter(&v), polygon_area(&v).max(0.0))
                } else if v.len() == 2 {
                    (2.0 * norm([v[1][0] - v[0][0], v[1][1] - v[0][1]]), 0.0)
                } else {
                    (0.0, 0.0)
                };
                (pe + 2.0 * PI * rho, ae + rho * pe + PI * rho * rho)
            }
            _ => unreachable!("erosion kind matches shape kind"),
        })
    }

    /// Whether `p` lies in the closed opening `C_rho` (any component).
    pub fn opening_contains(&self, p: Point, rho: f64) -> bool {
        self.components()
            .iter()
            .any(|c| c.erosion(rho).is_some_and(|e| e.distance(p) <= rho))
    }

    /// `k` points along the boundary, counterclockwise, evenly spaced in
    /// arclength (all components for a union, `k` each).
    pub fn boundary_points(&self, k: usize) -> Vec<Point> {
        match self {
            Shape::Disc { center, radius } => (0..k)
                .map(|q| {
                    let t = 2.0 * PI * q as f64 / k as f64;
                    [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
                })
                .collect(),
            Shape::Union(parts) => parts.iter().flat_map(|p| p.boundary_points(k)).collect(),
            _ => {
                let pieces = self.boundary_pieces();
                let total: f64 = pieces.iter().map(Piece::length).sum();
                let mut out = Vec::with_capacity(k);
                let mut acc = 0.0;
                let mut it = pieces.iter();
                let mut cur = it.next().expect("boundary has pieces");
                for q in 0..k {
                    let s = total * q as f64 / k as f64;
                    while s > acc + cur.length() {
                        acc += cur.length();
                        match it.next() {
                            Some(next) => cur = next,
                            None => break,
                        }
                    }
                    out.push(cur.at(((s - acc) / cur.length()).clamp(0.0, 1.0)));
                }
                out
            }
        }
    }

    /// The boundary as closed counterclockwise polylines with `k` vertices
    /// per component.
    pub fn boundary_contours(&self, k: usize) -> ContourSet {
        ContourSet::new(
            self.components()
                .iter()
                .map(|c| Contour::closed(c.boundary_points(k)))
                .collect(),
        )
    }

    fn boundary_pieces(&self) -> Vec<Piece> {
        let lines = |v: &[Point]| -> Vec<Piece> {
            let m = v.len();
            (0..m).map(|k| Piece::Line(v[k], v[(k + 1) % m])).collect()
        };
        match self {
            Shape::Rectangle {
                corner: c,
                width: w,
                height: h,
            } => lines(&[*c, [c[0] + w, c[1]], [c[0] + w, c[1] + h], [c[0], c[1] + h]]),
            Shape::RoundedRectangle {
                corner: c,
                width: w,
                height: h,
                rho: r,
            } => {
                let (x0, y0, x1, y1) = (c[0], c[1], c[0] + w, c[1] + h);
                let r = *r;
                alloc::vec![
                    Piece::Line([x0 + r, y0], [x1 - r, y0]),
                    Piece::Arc([x1 - r, y0 + r], r, -PI / 2.0),
                    Piece::Line([x1, y0 + r], [x1, y1 - r]),
                    Piece::Arc([x1 - r, y1 - r], r, 0.0),
                    Piece::Line([x1 - r, y1], [x0 + r, y1]),
                    Piece::Arc([x0 + r, y1 - r], r, PI / 2.0),
                    Piece::Line([x0, y1 - r], [x0, y0 + r]),
                    Piece::Arc([x0 + r, y0 + r], r, PI),
                ]
            }
            Shape::ConvexPolygon { vertices } => lines(vertices),
            Shape::Disc { .. } | Shape::Union(_) => unreachable!("handled by boundary_points"),
        }
    }

    /// Parses the plain-text description, see [`Shape::to_spec`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut parts = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for item in line.split(';') {
                let mut words = item.split_whitespace();
                let Some(kind) = words.next() else { continue };
                let nums: Vec<f64> = words
                    .map(|w| {
                        w.parse::<f64>().map_err(|_| Error::Parse {
                            line: lineno + 1,
                            message: format!("not a number: {w}"),
                        })
                    })
                    .collect::<Result<_>>()?;
                let arity = |k: usize| -> Result<()> {
                    if nums.len() == k {
                        Ok(())
                    } else {
                        Err(Error::Parse {
                            line: lineno + 1,
                            message: format!("{kind} takes {k} numbers, got {}", nums.len()),
                        })
                    }
                };
                let shape = match kind {
                    "disc" => {
                        arity(3)?;
                        Shape::disc(nums[0], nums[1], nums[2])
                    }
                    "rectangle" => {
                        arity(4)?;
                        Shape::rectangle(nums[0], nums[1], nums[2], nums[3])
                    }
                    "rounded_rectangle" => {
                        arity(5)?;
                        Shape::rounded_rectangle(nums[0], nums[1], nums[2], nums[3], nums[4])
                    }
                    "polygon" => {
                        if nums.len() < 6 || !nums.len().is_multiple_of(2) {
                            return Err(Error::Parse {
                                line: lineno + 1,
                                message: "polygon takes an even number (>= 6) of coordinates"
                                    .into(),
                            });
                        }
                        Shape::polygon(nums.chunks(2).map(|c| [c[0], c[1]]).collect())?
                    }
                    other => {
                        return Err(Error::Parse {
                            line: lineno + 1,
                            message: format!("unknown shape kind {other}"),
                        })
                    }
                };
                shape.validate()?;
                parts.push(shape);
            }
        }
        if parts.is_empty() {
            return Err(Error::Parse {
                line: 0,
                message: "no shape given".into(),
            });
        }
        Shape::union(parts)
    }

    /// One line per component:
    ///
    /// ```text
    /// disc cx cy R
    /// rectangle x0 y0 w h
    /// rounded_rectangle x0 y0 w h rho
    /// polygon x1 y1 x2 y2 ...
    /// ```
    ///
    /// Several lines describe a union. `#` starts a comment and `;` separates
    /// shapes on one line.
    pub fn to_spec(&self) -> String {
        let mut out = String::new();
        for c in self.components() {
            out.push_str(&format!("{c}\n"));
        }
        out
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Disc { center, radius } => {
                write!(f, "disc {} {} {}", center[0], center[1], radius)
            }
            Shape::Rectangle {
                corner,
                width,
                height,
            } => {
                write!(
                    f,
                    "rectangle {} {} {} {}",
                    corner[0], corner[1], width, height
                )
            }
            Shape::RoundedRectangle {
                corner,
                width,
                height,
                rho,
            } => {
                write!(
                    f,
                    "rounded_rectangle {} {} {} {} {}",
                    corner[0], corner[1], width, height, rho
                )
            }
            Shape::ConvexPolygon { vertices } => {
                write!(f, "polygon")?;
                for v in vertices {
                    write!(f, " {} {}", v[0], v[1])?;
                }
                Ok(())
            }
            Shape::Union(parts) => {
                for (k, p) in parts.iter().enumerate() {
                    if k > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
        }
    }
}

enum Piece {
    Line(Point, Point),
    /// Quarter circle starting at angle `start`, counterclockwise.
    Arc(Point, f64, f64),
}

impl Piece {
    fn length(&self) -> f64 {
        match self {
            Piece::Line(a, b) => norm([b[0] - a[0], b[1] - a[1]]),
            Piece::Arc(_, r, _) => PI / 2.0 * r,
        }
    }

    fn at(&self, t: f64) -> Point {
        match self {
            Piece::Line(a, b) => [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
            Piece::Arc(c, r, start) => {
                let th = start + t * PI / 2.0;
                [c[0] + r * th.cos(), c[1] + r * th.sin()]
            }
        }
    }
}
