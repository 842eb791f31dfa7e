use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

use super::region::BinaryRegion;

pub type Point = [f64; 2];

/// One polyline of a [`ContourSet`].
///
/// Vertices of closed curves are listed once; the closing segment from the
/// last vertex back to the first is implicit. Curves that wind around the
/// torus cannot close in the plane; they are kept open (`closed == false`)
/// and flagged with `wraps`.
#[derive(Clone, Debug, PartialEq)]
pub struct Contour {
    pub vertices: Vec<Point>,
    pub closed: bool,
    pub wraps: bool,
}

impl Contour {
    pub fn closed(vertices: Vec<Point>) -> Self {
        Self {
            vertices,
            closed: true,
            wraps: false,
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let m = self.vertices.len();
        let count = if self.closed { m } else { m.saturating_sub(1) };
        (0..count).map(move |k| (self.vertices[k], self.vertices[(k + 1) % m]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| dist(a, b)).sum()
    }

    /// Shoelace area; positive for counterclockwise curves.
    pub fn signed_area(&self) -> f64 {
        if !self.closed {
            return 0.0;
        }
        let m = self.vertices.len();
        let mut s = 0.0;
        for k in 0..m {
            let a = self.vertices[k];
            let b = self.vertices[(k + 1) % m];
            s += a[0] * b[1] - b[0] * a[1];
        }
        0.5 * s
    }

    pub fn is_outer(&self) -> bool {
        self.signed_area() > 0.0
    }

    /// Even-odd point-in-polygon test (closed curves only).
    pub fn encloses(&self, p: Point) -> bool {
        if !self.closed {
            return false;
        }
        let mut inside = false;
        for (a, b) in self.segments() {
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn distance_to(&self, p: Point) -> f64 {
        if self.vertices.len() == 1 {
            return dist(p, self.vertices[0]);
        }
        self.segments()
            .map(|(a, b)| segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Oriented closed polylines: outer boundaries counterclockwise, holes
/// clockwise, in the unit-square coordinates of pixel centers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContourSet {
    pub curves: Vec<Contour>,
}

impl ContourSet {
    pub fn new(curves: Vec<Contour>) -> Self {
        Self { curves }
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.curves.iter().map(Contour::length).collect()
    }

    pub fn total_length(&self) -> f64 {
        self.curves.iter().map(Contour::length).sum()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Point> + '_ {
        self.curves.iter().flat_map(|c| c.vertices.iter().copied())
    }

    pub fn vertex_count(&self) -> usize {
        self.curves.iter().map(|c| c.vertices.len()).sum()
    }

    pub fn has_wrapping(&self) -> bool {
        self.curves.iter().any(|c| c.wraps)
    }

    /// Euclidean distance from `p` to the nearest segment.
    pub fn distance_to(&self, p: Point) -> f64 {
        self.curves
            .iter()
            .map(|c| c.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }
}

#[inline]
pub(crate) fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])).sqrt()
}

pub(crate) fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + t * dx, a[1] + t * dy])
}

/// 3x3 periodic box average of the mask.
pub fn smoothed_mask(region: &BinaryRegion) -> Vec<f64> {
    let n = region.n() as isize;
    let mut out = vec![0.0; (n * n) as usize];
    for i in 0..n {
        for j in 0..n {
            let mut c = 0;
            for di in -1..=1 {
                for dj in -1..=1 {
                    if region.contains(i + di, j + dj) {
                        c += 1;
                    }
                }
            }
            out[(i * n + j) as usize] = c as f64 / 9.0;
        }
    }
    out
}

/// Edge of the sample lattice: `(i, j, 0)` joins samples `(i,j)`-`(i+1,j)`,
/// `(i, j, 1)` joins `(i,j)`-`(i,j+1)`, indices modulo the side.
type EdgeId = (usize, usize, u8);

struct Segment {
    start: Point,
    end: Point,
    start_edge: EdgeId,
    end_edge: EdgeId,
}

/// Iso-contours at level 1/2 of the box-smoothed mask, by marching squares
/// on the lattice of pixel centers. Ambiguous saddle cells are resolved by
/// the cell average.
pub fn contours(region: &BinaryRegion) -> ContourSet {
    let n = region.n();
    let f = smoothed_mask(region);
    let h = 1.0 / n as f64;
    let level = 0.5;
    let val = |i: usize, j: usize| f[(i % n) * n + (j % n)];

    let mut segments: Vec<Segment> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            // corners counterclockwise, in (x, y) = (i, j) orientation
            let idx = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let vals = idx.map(|(a, b)| val(a, b));
            let inside = vals.map(|v| v >= level);
            if inside.iter().all(|&b| b) || inside.iter().all(|&b| !b) {
                continue;
            }
            // crossing on cell edge k, from corner k to corner k+1
            let mut cross: [Option<(Point, EdgeId, bool)>; 4] = [None; 4];
            for k in 0..4 {
                let k2 = (k + 1) % 4;
                if inside[k] == inside[k2] {
                    continue;
                }
                let t = (level - vals[k]) / (vals[k2] - vals[k]);
                let (a, b) = (idx[k], idx[k2]);
                let p = [
                    (a.0 as f64 + 0.5 + t * (b.0 as f64 - a.0 as f64)) * h,
                    (a.1 as f64 + 0.5 + t * (b.1 as f64 - a.1 as f64)) * h,
                ];
                let (lo, axis) = match k {
                    0 => ((i, j), 0),
                    1 => ((i + 1, j), 1),
                    2 => ((i, j + 1), 0),
                    _ => ((i, j), 1),
                };
                let id = (lo.0 % n, lo.1 % n, axis);
                // true for an inside-to-outside crossing in ccw order
                cross[k] = Some((p, id, inside[k]));
            }
            let exits: Vec<usize> = (0..4)
                .filter(|&k| matches!(cross[k], Some((_, _, true))))
                .collect();
            let center_inside = vals.iter().sum::<f64>() / 4.0 >= level;
            let saddle = exits.len() == 2;
            for &k in &exits {
                // pair with the previous out->in crossing, or the next one in
                // a saddle whose center is inside
                let step = if saddle && center_inside { 1 } else { 3 };
                let mut m = (k + step) % 4;
                while !matches!(cross[m], Some((_, _, false))) {
                    m = (m + step) % 4;
                }
                let (ps, es, _) = cross[k].expect("crossing");
                let (pe, ee, _) = cross[m].expect("crossing");
                segments.push(Segment {
                    start: ps,
                    end: pe,
                    start_edge: es,
                    end_edge: ee,
                });
            }
        }
    }
    link(segments)
}

fn link(segments: Vec<Segment>) -> ContourSet {
    let mut by_start: BTreeMap<EdgeId, usize> = BTreeMap::new();
    for (k, s) in segments.iter().enumerate() {
        by_start.insert(s.start_edge, k);
    }
    let mut used = vec![false; segments.len()];
    let mut curves = Vec::new();
    for first in 0..segments.len() {
        if used[first] {
            continue;
        }
        let mut vertices = Vec::new();
        let mut offset = [0.0, 0.0];
        let mut k = first;
        let mut closed_offset = [0.0, 0.0];
        loop {
            used[k] = true;
            let s = &segments[k];
            vertices.push([s.start[0] + offset[0], s.start[1] + offset[1]]);
            let end = [s.end[0] + offset[0], s.end[1] + offset[1]];
            let Some(&next) = by_start.get(&s.end_edge) else {
                break;
            };
            // shift the next segment by a lattice vector so it continues
            // from `end` in the plane
            let ns = segments[next].start;
            offset = [(end[0] - ns[0]).round(), (end[1] - ns[1]).round()];
            if next == first {
                closed_offset = offset;
                if offset != [0.0, 0.0] {
                    // a wrapping curve ends on the translate of its start
                    vertices.push(end);
                }
                break;
            }
            if used[next] {
                break;
            }
            k = next;
        }
        let wraps = closed_offset != [0.0, 0.0];
        curves.push(Contour {
            vertices,
            closed: !wraps,
            wraps,
        });
    }
    ContourSet { curves }
}

/// An outer curve together with the holes it encloses.
#[derive(Clone, Debug, PartialEq)]
pub struct JordanComponent {
    pub outer: Contour,
    pub holes: Vec<Contour>,
}

impl JordanComponent {
    pub fn perimeter(&self) -> f64 {
        self.outer.length() + self.holes.iter().map(Contour::length).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.outer.signed_area() + self.holes.iter().map(Contour::signed_area).sum::<f64>()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.outer.encloses(p) && !self.holes.iter().any(|h| h.encloses(p))
    }
}

/// Groups the contours of `region` into outer curves and their holes; each
/// hole goes to the smallest outer curve enclosing it. Wrapping curves have
/// no planar interior and are skipped.
pub fn jordan_decompose(region: &BinaryRegion) -> Vec<JordanComponent> {
    let set = contours(region);
    let (outers, holes): (Vec<Contour>, Vec<Contour>) = set
        .curves
        .into_iter()
        .filter(|c| c.closed)
        .partition(Contour::is_outer);
    let mut comps: Vec<JordanComponent> = outers
        .into_iter()
        .map(|outer| JordanComponent {
            outer,
            holes: Vec::new(),
        })
        .collect();
    for hole in holes {
        let p = hole.vertices[0];
        let owner = comps
            .iter()
            .enumerate()
            .filter(|(_, c)| c.outer.encloses(p))
            .min_by(|a, b| a.1.outer.signed_area().total_cmp(&b.1.outer.signed_area()))
            .map(|(k, _)| k);
        if let Some(k) = owner {
            comps[k].holes.push(hole);
        }
    }
    comps
}

/// Pixels whose center lies in some component of the decomposition.
pub fn rasterize_components(components: &[JordanComponent], n: usize) -> BinaryRegion {
    BinaryRegion::from_fn(n, |x, y| components.iter().any(|c| c.contains([x, y])))
}

/// Perimeter: total length of the marching-squares contours.
pub fn perimeter(region: &BinaryRegion) -> f64 {
    contours(region).total_length()
}

/// Area by pixel counting.
pub fn area(region: &BinaryRegion) -> f64 {
    region.area()
}

/// `perimeter^2 - 4 pi min(area, 1 - area)`; nonnegative when the
/// isoperimetric inequality holds on the torus. Both measures come from the
/// same contours (signed polygon areas) unless a curve wraps around the
/// torus, in which case the pixel area is used.
pub fn isoperimetric_margin(region: &BinaryRegion) -> f64 {
    let set = contours(region);
    let p = set.total_length();
    let a = if set.has_wrapping() || set.is_empty() {
        region.area()
    } else {
        let signed: f64 = set.curves.iter().map(Contour::signed_area).sum();
        // a complement-like set is bounded by clockwise curves only
        if signed < 0.0 {
            1.0 + signed
        } else {
            signed
        }
    };
    p * p - 4.0 * core::f64::consts::PI * a.min(1.0 - a)
}

fn directed_hausdorff(a: &ContourSet, b: &ContourSet) -> f64 {
    a.vertices().map(|p| b.distance_to(p)).fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance: vertices of each set against the segments
/// of the other.
pub fn hausdorff(a: &ContourSet, b: &ContourSet) -> Result<f64> {
    if a.vertex_count() == 0 || b.vertex_count() == 0 {
        return Err(Error::EmptyContour);
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

/// Convex hull (counterclockwise, monotone chain).
pub fn convex_hull(points: impl IntoIterator<Item = Point>) -> Contour {
    let mut pts: Vec<Point> = points.into_iter().collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return Contour::closed(pts);
    }
    fn cross(o: Point, a: Point, b: Point) -> f64 {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    }
    fn chain(hull: &mut Vec<Point>, pts: impl Iterator<Item = Point>) {
        let start = hull.len();
        for p in pts {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let mut hull = Vec::with_capacity(2 * pts.len());
    chain(&mut hull, pts.iter().copied());
    chain(&mut hull, pts.iter().rev().copied());
    Contour::closed(hull)
}
