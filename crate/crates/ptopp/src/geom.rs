//! Low-level geometric predicates and constructions shared by passage
//! detection, cell decomposition, and planning.
//!
//! All predicates use a caller-supplied tolerance `eps` (conventionally
//! 1e-9 times the map diagonal). Touching counts as intersecting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("obstacle interiors overlap")]
    OverlappingObstacles,
    #[error("passage region construction collapsed below tolerance")]
    DegenerateRegion,
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("polygon is degenerate: {0}")]
    DegeneratePolygon(String),
}

/// Relative tolerance factor; multiply by the map diagonal to get `eps`.
pub const EPS_FACTOR: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Points and segments
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn sub(&self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(&self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(&self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }

    pub fn dot(&self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product, treating both as vectors.
    pub fn cross(&self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(&self, o: Point2) -> f64 {
        self.sub(o).norm()
    }

    /// Unit vector perpendicular to self, rotated +90 degrees.
    pub fn perp(&self) -> Point2 {
        Point2::new(-self.y, self.x)
    }
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn xy(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn sub(&self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn add(&self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn scale(&self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn dot(&self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(*self).sqrt()
    }

    pub fn dist(&self, o: Point3) -> f64 {
        self.sub(o).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment2 {
    pub a: Point2,
    pub b: Point2,
}

impl Segment2 {
    pub fn new(a: Point2, b: Point2) -> Self {
        Self { a, b }
    }

    pub fn len(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn midpoint(&self) -> Point2 {
        Point2::new((self.a.x + self.b.x) / 2.0, (self.a.y + self.b.y) / 2.0)
    }

    pub fn eval(&self, t: f64) -> Point2 {
        self.a.add(self.b.sub(self.a).scale(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment3 {
    pub a: Point3,
    pub b: Point3,
}

impl Segment3 {
    pub fn new(a: Point3, b: Point3) -> Self {
        Self { a, b }
    }

    pub fn len(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn eval(&self, t: f64) -> Point3 {
        self.a.add(self.b.sub(self.a).scale(t))
    }
}

/// Vertical rectangle gate spanned by a 2D passage segment and a height
/// interval; the 3D analogue of a passage segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassagePlane3 {
    pub seg: Segment2,
    pub h_lo: f64,
    pub h_hi: f64,
}

// ---------------------------------------------------------------------------
// Convex polygons
// ---------------------------------------------------------------------------

/// Convex polygon with counter-clockwise vertex order and nonzero area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    /// Validating constructor for obstacle input: at least 3 vertices,
    /// strictly convex, CCW, nonzero area, finite coordinates.
    pub fn new(vertices: Vec<Point2>) -> Result<Self, GeomError> {
        if vertices.len() < 3 {
            return Err(GeomError::DegeneratePolygon("fewer than 3 vertices".into()));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::DegeneratePolygon("non-finite coordinate".into()));
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let cr = b.sub(a).cross(c.sub(b));
            if cr <= 0.0 {
                return Err(GeomError::DegeneratePolygon(
                    "not strictly convex and counter-clockwise".into(),
                ));
            }
        }
        Ok(Self { vertices })
    }

    /// Lenient constructor for derived regions: dedupes near-coincident and
    /// collinear vertices, requires the cleaned polygon to keep positive area.
    pub fn clean_from(points: Vec<Point2>, eps: f64) -> Option<Self> {
        let mut pts: Vec<Point2> = Vec::with_capacity(points.len());
        for p in points {
            if pts.last().map_or(true, |q: &Point2| q.dist(p) > eps) {
                pts.push(p);
            }
        }
        while pts.len() >= 2 && pts[0].dist(pts[pts.len() - 1]) <= eps {
            pts.pop();
        }
        // drop collinear vertices
        loop {
            let n = pts.len();
            if n < 3 {
                return None;
            }
            let mut removed = false;
            for i in 0..n {
                let a = pts[(i + n - 1) % n];
                let b = pts[i];
                let c = pts[(i + 1) % n];
                let cr = b.sub(a).cross(c.sub(b));
                if cr.abs() <= eps * (a.dist(b) + b.dist(c)).max(eps) {
                    pts.remove(i);
                    removed = true;
                    break;
                }
            }
            if !removed {
                break;
            }
        }
        let poly = Self { vertices: pts };
        if poly.area() > eps * eps {
            Some(poly)
        } else {
            None
        }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment2> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment2::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    pub fn centroid(&self) -> Point2 {
        polygon_centroid(&self.vertices)
    }

    /// Closed-set membership: boundary points within `eps` count as inside.
    pub fn contains(&self, p: Point2, eps: f64) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let e = b.sub(a);
            if e.cross(p.sub(a)) < -eps * e.norm().max(1.0) {
                return false;
            }
        }
        true
    }

    pub fn aabb(&self) -> (Point2, Point2) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }
}

/// Passage region between an obstacle pair: the intersection of the two
/// projection shadow volumes clipped to the slab between the obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageRegion {
    pub polygon: ConvexPolygon,
}

// ---------------------------------------------------------------------------
// Basic constructions
// ---------------------------------------------------------------------------

pub fn signed_area(pts: &[Point2]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        s += a.cross(b);
    }
    s / 2.0
}

pub fn polygon_centroid(pts: &[Point2]) -> Point2 {
    let n = pts.len();
    let a = signed_area(pts);
    if a.abs() < f64::MIN_POSITIVE {
        // fall back to vertex average for degenerate chains
        let mut c = Point2::new(0.0, 0.0);
        for p in pts {
            c = c.add(*p);
        }
        return c.scale(1.0 / n as f64);
    }
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        let w = p.cross(q);
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    Point2::new(cx / (6.0 * a), cy / (6.0 * a))
}

pub fn point_segment_closest(p: Point2, s: Segment2) -> Point2 {
    let d = s.b.sub(s.a);
    let len2 = d.dot(d);
    if len2 <= 0.0 {
        return s.a;
    }
    let t = (p.sub(s.a).dot(d) / len2).clamp(0.0, 1.0);
    s.eval(t)
}

pub fn point_segment_distance(p: Point2, s: Segment2) -> f64 {
    p.dist(point_segment_closest(p, s))
}

/// Distance from a point to a convex polygon; 0 when inside (closed set).
pub fn point_polygon_distance(p: Point2, poly: &ConvexPolygon) -> f64 {
    if poly.contains(p, 0.0) {
        return 0.0;
    }
    poly.edges()
        .map(|e| point_segment_distance(p, e))
        .fold(f64::INFINITY, f64::min)
}

/// Distance from a 3D point to a vertical prism (footprint extruded on
/// z in [0, height]). 0 when inside.
pub fn point_prism_distance(p: Point3, footprint: &ConvexPolygon, height: f64) -> f64 {
    let planar = point_polygon_distance(p.xy(), footprint);
    let dz = if p.z < 0.0 {
        -p.z
    } else if p.z > height {
        p.z - height
    } else {
        0.0
    };
    if planar == 0.0 {
        dz
    } else if dz == 0.0 {
        planar
    } else {
        planar.hypot(dz)
    }
}

// ---------------------------------------------------------------------------
// Segment intersection
// ---------------------------------------------------------------------------

/// Closed-segment intersection with tolerance; touching within `eps`
/// counts as intersecting, including collinear overlap.
pub fn segments_intersect(s1: Segment2, s2: Segment2, eps: f64) -> bool {
    let d1 = s1.b.sub(s1.a);
    let d2 = s2.b.sub(s2.a);
    let denom = d1.cross(d2);
    let r = s2.a.sub(s1.a);
    let scale = d1.norm().max(d2.norm()).max(1.0);
    if denom.abs() > eps * scale * scale {
        let t = r.cross(d2) / denom;
        let u = r.cross(d1) / denom;
        let tol_t = eps / d1.norm().max(eps);
        let tol_u = eps / d2.norm().max(eps);
        return t >= -tol_t && t <= 1.0 + tol_t && u >= -tol_u && u <= 1.0 + tol_u;
    }
    // near-parallel: intersect only if nearly collinear and overlapping
    if point_segment_distance(s2.a, s1) <= eps
        || point_segment_distance(s2.b, s1) <= eps
        || point_segment_distance(s1.a, s2) <= eps
        || point_segment_distance(s1.b, s2) <= eps
    {
        return true;
    }
    false
}

/// Intersection parameter of `s1` with `s2`, measured along `s1`,
/// or None when the segments do not intersect. For near-parallel overlap
/// returns the smallest touching parameter among the four endpoints.
pub fn segment_intersection_param(s1: Segment2, s2: Segment2, eps: f64) -> Option<f64> {
    let d1 = s1.b.sub(s1.a);
    let d2 = s2.b.sub(s2.a);
    let denom = d1.cross(d2);
    let r = s2.a.sub(s1.a);
    let scale = d1.norm().max(d2.norm()).max(1.0);
    if denom.abs() > eps * scale * scale {
        let t = r.cross(d2) / denom;
        let u = r.cross(d1) / denom;
        let tol_t = eps / d1.norm().max(eps);
        let tol_u = eps / d2.norm().max(eps);
        if t >= -tol_t && t <= 1.0 + tol_t && u >= -tol_u && u <= 1.0 + tol_u {
            return Some(t.clamp(0.0, 1.0));
        }
        return None;
    }
    let mut best: Option<f64> = None;
    let len1 = d1.norm();
    if len1 > 0.0 {
        for (p, t) in [
            (s2.a, p_param(s1, s2.a)),
            (s2.b, p_param(s1, s2.b)),
            (s1.a, 0.0),
            (s1.b, 1.0),
        ] {
            let on_other = point_segment_distance(p, s2) <= eps;
            let on_this = point_segment_distance(p, s1) <= eps;
            if on_other && on_this {
                let t = t.clamp(0.0, 1.0);
                best = Some(best.map_or(t, |b: f64| b.min(t)));
            }
        }
    }
    best
}

fn p_param(s: Segment2, p: Point2) -> f64 {
    let d = s.b.sub(s.a);
    let len2 = d.dot(d);
    if len2 <= 0.0 {
        0.0
    } else {
        p.sub(s.a).dot(d) / len2
    }
}

/// True when a 3D segment crosses the bounded vertical rectangle gate.
pub fn segment_gate_intersect(s: Segment3, gate: &PassagePlane3, eps: f64) -> bool {
    let ga = gate.seg.a;
    let dir = gate.seg.b.sub(ga);
    let len = dir.norm();
    if len <= eps {
        return false;
    }
    let n = dir.perp();
    let f0 = s.a.xy().sub(ga).dot(n);
    let f1 = s.b.xy().sub(ga).dot(n);
    let tol = eps * len;
    let in_rect = |q: Point3| -> bool {
        let t = q.xy().sub(ga).dot(dir) / (len * len);
        t >= -eps / len && t <= 1.0 + eps / len && q.z >= gate.h_lo - eps && q.z <= gate.h_hi + eps
    };
    if f0.abs() <= tol && f1.abs() <= tol {
        // segment lies in the gate plane: touching counts
        return in_rect(s.a) || in_rect(s.b) || {
            // sample a few interior points to catch crossings of the bounds
            (1..8).any(|k| in_rect(s.eval(k as f64 / 8.0)))
        };
    }
    if (f0 > tol && f1 > tol) || (f0 < -tol && f1 < -tol) {
        return false;
    }
    let t = f0 / (f0 - f1);
    if !t.is_finite() {
        return false;
    }
    in_rect(s.eval(t.clamp(0.0, 1.0)))
}

// ---------------------------------------------------------------------------
// Convex-convex operations
// ---------------------------------------------------------------------------

/// Minimum distance between two convex polygons together with the realizing
/// boundary points. Errors when interiors overlap (penetration deeper
/// than `eps`). When the minimum is realized along parallel faces the
/// witness pair is the midpoint of the overlap interval.
pub fn obstacle_distance(
    oi: &ConvexPolygon,
    oj: &ConvexPolygon,
    eps: f64,
) -> Result<(Point2, Point2, f64), GeomError> {
    if polygons_overlap_strict(oi, oj, eps) {
        return Err(GeomError::OverlappingObstacles);
    }
    let mut d = f64::INFINITY;
    let mut pairs: Vec<(Point2, Point2)> = Vec::new();
    let consider = |pa: Point2, pb: Point2, d2: &mut f64, pairs: &mut Vec<(Point2, Point2)>| {
        let dist = pa.dist(pb);
        if dist < *d2 - eps {
            *d2 = dist;
            pairs.clear();
            pairs.push((pa, pb));
        } else if dist <= *d2 + eps {
            *d2 = (*d2).min(dist);
            pairs.push((pa, pb));
        }
    };
    for v in oi.vertices() {
        for e in oj.edges() {
            let q = point_segment_closest(*v, e);
            consider(*v, q, &mut d, &mut pairs);
        }
    }
    for v in oj.vertices() {
        for e in oi.edges() {
            let q = point_segment_closest(*v, e);
            consider(q, *v, &mut d, &mut pairs);
        }
    }
    // deduplicate witnesses, then average: for parallel-face minima this
    // yields the midpoint of the overlap interval
    let mut uniq: Vec<(Point2, Point2)> = Vec::new();
    for (pa, pb) in pairs {
        if !uniq
            .iter()
            .any(|(qa, qb)| qa.dist(pa) <= eps && qb.dist(pb) <= eps)
        {
            uniq.push((pa, pb));
        }
    }
    let inv = 1.0 / uniq.len() as f64;
    let mut pa = Point2::new(0.0, 0.0);
    let mut pb = Point2::new(0.0, 0.0);
    for (qa, qb) in &uniq {
        pa = pa.add(*qa);
        pb = pb.add(*qb);
    }
    pa = pa.scale(inv);
    pb = pb.scale(inv);
    Ok((pa, pb, d))
}

/// Strict interior overlap via separating axes. Touching boundaries do not
/// count as overlap.
pub fn polygons_overlap_strict(a: &ConvexPolygon, b: &ConvexPolygon, eps: f64) -> bool {
    min_separation(a, b) > eps
}

/// Closed-set intersection: separated by less than `eps` counts as touching.
pub fn polygons_intersect(a: &ConvexPolygon, b: &ConvexPolygon, eps: f64) -> bool {
    min_separation(a, b) >= -eps
}

/// Largest lower bound on overlap over all candidate separating axes:
/// positive = overlapping on every axis, negative = separated by that gap.
fn min_separation(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    let mut sep = f64::INFINITY;
    for (poly, other) in [(a, b), (b, a)] {
        let n = poly.vertices().len();
        for i in 0..n {
            let p = poly.vertices()[i];
            let q = poly.vertices()[(i + 1) % n];
            let axis = q.sub(p).perp();
            let alen = axis.norm();
            if alen <= 0.0 {
                continue;
            }
            let axis = axis.scale(1.0 / alen);
            let (a_lo, a_hi) = project(poly, axis);
            let (b_lo, b_hi) = project(other, axis);
            let overlap = a_hi.min(b_hi) - a_lo.max(b_lo);
            sep = sep.min(overlap);
            if sep < -1e12 {
                return sep;
            }
        }
    }
    sep
}

fn project(poly: &ConvexPolygon, axis: Point2) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in poly.vertices() {
        let s = v.dot(axis);
        lo = lo.min(s);
        hi = hi.max(s);
    }
    (lo, hi)
}

/// Closed disc vs convex polygon intersection; touching counts.
pub fn disc_polygon_intersect(center: Point2, radius: f64, poly: &ConvexPolygon, eps: f64) -> bool {
    point_polygon_distance(center, poly) <= radius + eps
}

/// Segment vs convex polygon intersection (closed sets; touching counts).
pub fn segment_polygon_intersect(s: Segment2, poly: &ConvexPolygon, eps: f64) -> bool {
    if poly.contains(s.a, eps) || poly.contains(s.b, eps) {
        return true;
    }
    poly.edges().any(|e| segments_intersect(s, e, eps))
}

/// Clip a convex polygon by the half-plane `n . x <= c`, Sutherland-Hodgman
/// style. Returns the raw vertex chain (possibly needing cleanup).
fn clip_halfplane(pts: &[Point2], n: Point2, c: f64, eps: f64) -> Vec<Point2> {
    let mut out = Vec::with_capacity(pts.len() + 2);
    let m = pts.len();
    for i in 0..m {
        let p = pts[i];
        let q = pts[(i + 1) % m];
        let fp = p.dot(n) - c;
        let fq = q.dot(n) - c;
        let inside_p = fp <= eps;
        let inside_q = fq <= eps;
        if inside_p {
            out.push(p);
        }
        if inside_p != inside_q {
            let t = fp / (fp - fq);
            if t.is_finite() {
                out.push(p.add(q.sub(p).scale(t)));
            }
        }
    }
    out
}

/// Intersection of two convex polygons as a cleaned convex polygon,
/// or None when the intersection has no area.
pub fn convex_intersection(
    a: &ConvexPolygon,
    b: &ConvexPolygon,
    eps: f64,
) -> Option<ConvexPolygon> {
    let mut pts: Vec<Point2> = a.vertices().to_vec();
    let n = b.vertices().len();
    for i in 0..n {
        let p = b.vertices()[i];
        let q = b.vertices()[(i + 1) % n];
        // interior of CCW polygon is left of each edge: perp(q-p) . (x-p) >= 0
        // rewrite as n . x <= c with n = -perp
        let nrm = q.sub(p).perp().scale(-1.0);
        let c = nrm.dot(p);
        pts = clip_halfplane(&pts, nrm, c, eps);
        if pts.len() < 3 {
            return None;
        }
    }
    ConvexPolygon::clean_from(pts, eps)
}

/// Convex hull by Andrew's monotone chain; ties resolved lexicographically.
pub fn convex_hull(mut pts: Vec<Point2>) -> Vec<Point2> {
    pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * n);
    for &p in pts.iter().chain(pts.iter().rev().skip(1)) {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            if b.sub(a).cross(p.sub(b)) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
        if hull.len() > n && p == pts[0] {
            break;
        }
    }
    hull.pop();
    hull
}

/// Shadow volume of a polygon along unit direction `e`, truncated at
/// extrusion length `len`: the convex hull of the polygon and its translate.
pub fn shadow_volume(poly: &ConvexPolygon, e: Point2, len: f64, eps: f64) -> Option<ConvexPolygon> {
    let mut pts: Vec<Point2> = poly.vertices().to_vec();
    let offset = e.scale(len);
    pts.extend(poly.vertices().iter().map(|v| v.add(offset)));
    ConvexPolygon::clean_from(convex_hull(pts), eps)
}

/// Passage region between two disjoint obstacles: intersection of both
/// shadow volumes along the distance direction, clipped to the slab
/// between the supporting lines at the closest points.
pub fn passage_region(
    oi: &ConvexPolygon,
    oj: &ConvexPolygon,
    pi: Point2,
    pj: Point2,
    extrusion: f64,
    eps: f64,
) -> Result<PassageRegion, GeomError> {
    let d = pj.sub(pi);
    let dist = d.norm();
    if dist <= eps {
        return Err(GeomError::DegenerateRegion);
    }
    let e = d.scale(1.0 / dist);
    let sv_i = shadow_volume(oi, e, extrusion, eps).ok_or(GeomError::DegenerateRegion)?;
    let sv_j =
        shadow_volume(oj, e.scale(-1.0), extrusion, eps).ok_or(GeomError::DegenerateRegion)?;
    let common = convex_intersection(&sv_i, &sv_j, eps).ok_or(GeomError::DegenerateRegion)?;
    // slab between the obstacles: e.x >= e.pi and e.x <= e.pj
    let lo = e.dot(pi);
    let hi = e.dot(pj);
    let mut pts = clip_halfplane(common.vertices(), e.scale(-1.0), -lo, eps);
    pts = clip_halfplane(&pts, e, hi, eps);
    let polygon = ConvexPolygon::clean_from(pts, eps).ok_or(GeomError::DegenerateRegion)?;
    Ok(PassageRegion { polygon })
}

// ---------------------------------------------------------------------------
// Angular order
// ---------------------------------------------------------------------------

/// Transitivity-preserving angular comparer: true when `v1` strictly
/// precedes `v2` counter-clockwise starting from the positive x-axis.
/// Half-plane index first, cross-product sign within the same half-plane.
pub fn oriented(v1: Point2, v2: Point2) -> Result<bool, GeomError> {
    if v1.norm() == 0.0 || v2.norm() == 0.0 {
        return Err(GeomError::ZeroVector);
    }
    let h1 = half_plane(v1);
    let h2 = half_plane(v2);
    if h1 != h2 {
        return Ok(h1 < h2);
    }
    Ok(v1.cross(v2) > 0.0)
}

/// 0 for the upper half-plane including the positive x-axis,
/// 1 for the lower half including the negative x-axis.
fn half_plane(v: Point2) -> u8 {
    if v.y > 0.0 || (v.y == 0.0 && v.x > 0.0) {
        0
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    const EPS: f64 = 1e-9 * 1166.0; // 1000x600 map diagonal

    fn square(cx: f64, cy: f64, side: f64, angle: f64) -> ConvexPolygon {
        let h = side / 2.0;
        let (s, c) = angle.sin_cos();
        let rot = |x: f64, y: f64| Point2::new(cx + x * c - y * s, cy + x * s + y * c);
        ConvexPolygon::new(vec![rot(-h, -h), rot(h, -h), rot(h, h), rot(-h, h)]).unwrap()
    }

    fn unit_square(x0: f64, y0: f64, x1: f64, y1: f64) -> ConvexPolygon {
        ConvexPolygon::new(vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ])
        .unwrap()
    }

    #[test]
    fn polygon_validation_rejects_bad_input() {
        assert!(ConvexPolygon::new(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)]).is_err());
        // clockwise
        assert!(ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 0.0),
        ])
        .is_err());
        // collinear
        assert!(ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.0),
        ])
        .is_err());
        // non-convex
        assert!(ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(1.0, 0.5),
            Point2::new(2.0, 2.0),
        ])
        .is_err());
    }

    #[test]
    fn obstacle_distance_axis_aligned_gap() {
        let a = unit_square(0.0, 0.0, 1.0, 1.0);
        let b = unit_square(2.0, 0.0, 3.0, 1.0);
        let (pi, pj, d) = obstacle_distance(&a, &b, EPS).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        assert!((pi.x - 1.0).abs() < 1e-12);
        assert!((pj.x - 2.0).abs() < 1e-12);
        // parallel faces: witness pair at the overlap midpoint
        assert!((pi.y - 0.5).abs() < 1e-9);
        assert!((pj.y - 0.5).abs() < 1e-9);
    }

    #[test]
    fn obstacle_distance_touching_edge_is_zero() {
        let a = unit_square(0.0, 0.0, 1.0, 1.0);
        let b = unit_square(1.0, 0.0, 2.0, 1.0);
        let (_, _, d) = obstacle_distance(&a, &b, EPS).unwrap();
        assert!(d.abs() <= EPS);
    }

    #[test]
    fn obstacle_distance_rejects_overlap() {
        let a = unit_square(0.0, 0.0, 1.0, 1.0);
        let b = unit_square(0.5, 0.5, 1.5, 1.5);
        assert_eq!(
            obstacle_distance(&a, &b, EPS).unwrap_err(),
            GeomError::OverlappingObstacles
        );
    }

    #[test]
    fn obstacle_distance_matches_boundary_sampling() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..40 {
            let a = square(
                rng.gen_range(0.0..100.0),
                rng.gen_range(0.0..100.0),
                rng.gen_range(5.0..20.0),
                rng.gen_range(0.0..std::f64::consts::FRAC_PI_2),
            );
            let b = square(
                rng.gen_range(200.0..300.0),
                rng.gen_range(0.0..100.0),
                rng.gen_range(5.0..20.0),
                rng.gen_range(0.0..std::f64::consts::FRAC_PI_2),
            );
            let (_, _, d) = obstacle_distance(&a, &b, EPS).unwrap();
            let mut oracle = f64::INFINITY;
            let samples = 10_000;
            for e in a.edges() {
                for k in 0..=samples {
                    let p = e.eval(k as f64 / samples as f64);
                    for eb in b.edges() {
                        oracle = oracle.min(point_segment_distance(p, eb));
                    }
                }
            }
            assert!(
                (d - oracle).abs() < 1e-6,
                "distance {d} vs sampled {oracle}"
            );
            // symmetry is exact
            let (_, _, d2) = obstacle_distance(&b, &a, EPS).unwrap();
            assert_eq!(d, d2);
        }
    }

    #[test]
    fn passage_region_symmetric_squares() {
        let a = unit_square(0.0, 0.0, 10.0, 10.0);
        let b = unit_square(14.0, 0.0, 24.0, 10.0);
        let (pi, pj, d) = obstacle_distance(&a, &b, EPS).unwrap();
        let region = passage_region(&a, &b, pi, pj, 1e4, EPS).unwrap();
        // gap rectangle between facing edges
        let (lo, hi) = region.polygon.aabb();
        assert!((lo.x - 10.0).abs() < 1e-6);
        assert!((hi.x - 14.0).abs() < 1e-6);
        assert!((lo.y - 0.0).abs() < 1e-6);
        assert!((hi.y - 10.0).abs() < 1e-6);
        assert!((d - 4.0).abs() < 1e-12);
        // contains closest points and the segment midpoint
        assert!(region.polygon.contains(pi, EPS));
        assert!(region.polygon.contains(pj, EPS));
        assert!(region
            .polygon
            .contains(Segment2::new(pi, pj).midpoint(), EPS));
    }

    #[test]
    fn passage_region_bounded_by_smaller_shadow_overlap() {
        // large square facing a small square: the lateral extent of the
        // region equals the smaller shadow overlap, not the convex hull
        let a = unit_square(0.0, -50.0, 10.0, 50.0);
        let b = unit_square(20.0, -5.0, 30.0, 5.0);
        let (pi, pj, _) = obstacle_distance(&a, &b, EPS).unwrap();
        let region = passage_region(&a, &b, pi, pj, 1e4, EPS).unwrap();
        let (lo, hi) = region.polygon.aabb();
        assert!((lo.y + 5.0).abs() < 1e-6);
        assert!((hi.y - 5.0).abs() < 1e-6);
        assert!((lo.x - 10.0).abs() < 1e-6);
        assert!((hi.x - 20.0).abs() < 1e-6);
    }

    #[test]
    fn passage_region_membership_oracle() {
        let mut rng = StdRng::seed_from_u64(11);
        let mut tested = 0;
        while tested < 20 {
            let a = square(
                rng.gen_range(100.0..300.0),
                rng.gen_range(100.0..300.0),
                rng.gen_range(20.0..60.0),
                rng.gen_range(0.0..std::f64::consts::FRAC_PI_2),
            );
            let b = square(
                rng.gen_range(400.0..600.0),
                rng.gen_range(100.0..300.0),
                rng.gen_range(20.0..60.0),
                rng.gen_range(0.0..std::f64::consts::FRAC_PI_2),
            );
            let Ok((pi, pj, d)) = obstacle_distance(&a, &b, EPS) else {
                continue;
            };
            if d <= 1.0 {
                continue;
            }
            tested += 1;
            let region = passage_region(&a, &b, pi, pj, 4000.0, EPS).unwrap();
            let e = pj.sub(pi).scale(1.0 / d);
            let sv_a = shadow_volume(&a, e, 4000.0, EPS).unwrap();
            let sv_b = shadow_volume(&b, e.scale(-1.0), 4000.0, EPS).unwrap();
            let (lo, hi) = region.polygon.aabb();
            for _ in 0..1000 {
                let p = Point2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
                if region.polygon.contains(p, -EPS) {
                    assert!(sv_a.contains(p, EPS), "point in region outside shadow of a");
                    assert!(sv_b.contains(p, EPS), "point in region outside shadow of b");
                }
            }
            // width along the distance direction equals d
            let (plo, phi) = {
                let mut plo = f64::INFINITY;
                let mut phi = f64::NEG_INFINITY;
                for v in region.polygon.vertices() {
                    let s = v.dot(e);
                    plo = plo.min(s);
                    phi = phi.max(s);
                }
                (plo, phi)
            };
            assert!((phi - plo - d).abs() < 1e-6);
        }
    }

    #[test]
    fn segments_intersect_basics() {
        let diag1 = Segment2::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0));
        let diag2 = Segment2::new(Point2::new(1.0, 0.0), Point2::new(0.0, 1.0));
        assert!(segments_intersect(diag1, diag2, EPS));
        assert!(segments_intersect(diag2, diag1, EPS));
        let h1 = Segment2::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0));
        let h2 = Segment2::new(Point2::new(0.0, 1.0), Point2::new(1.0, 1.0));
        assert!(!segments_intersect(h1, h2, EPS));
    }

    #[test]
    fn segments_intersect_endpoint_tolerance_sweep() {
        let s1 = Segment2::new(Point2::new(0.0, 0.0), Point2::new(10.0, 0.0));
        for k in 0..20 {
            let off = EPS * 0.5 * (k as f64 + 1.0) / 10.0;
            let s2 = Segment2::new(Point2::new(5.0, off), Point2::new(5.0, 10.0));
            let expect = off <= EPS;
            if (off - EPS).abs() > EPS * 0.1 {
                assert_eq!(segments_intersect(s1, s2, EPS), expect, "offset {off}");
            }
        }
        let far = Segment2::new(Point2::new(5.0, EPS * 100.0), Point2::new(5.0, 10.0));
        assert!(!segments_intersect(s1, far, EPS));
    }

    #[test]
    fn gate_intersection_basics() {
        let gate = PassagePlane3 {
            seg: Segment2::new(Point2::new(5.0, 0.0), Point2::new(5.0, 1.0)),
            h_lo: 0.0,
            h_hi: 10.0,
        };
        let through = Segment3::new(Point3::new(4.0, 0.5, 5.0), Point3::new(6.0, 0.5, 5.0));
        assert!(segment_gate_intersect(through, &gate, EPS));
        let above = Segment3::new(Point3::new(4.0, 0.5, 11.0), Point3::new(6.0, 0.5, 11.0));
        assert!(!segment_gate_intersect(above, &gate, EPS));
        let beside = Segment3::new(Point3::new(4.0, 5.0, 5.0), Point3::new(6.0, 5.0, 5.0));
        assert!(!segment_gate_intersect(beside, &gate, EPS));
    }

    #[test]
    fn gate_intersection_matches_clip_oracle() {
        let gate = PassagePlane3 {
            seg: Segment2::new(Point2::new(30.0, 10.0), Point2::new(50.0, 40.0)),
            h_lo: 5.0,
            h_hi: 25.0,
        };
        let mut rng = StdRng::seed_from_u64(3);
        let mut checked = 0;
        for _ in 0..5000 {
            let s = Segment3::new(
                Point3::new(
                    rng.gen_range(0.0..80.0),
                    rng.gen_range(0.0..60.0),
                    rng.gen_range(0.0..40.0),
                ),
                Point3::new(
                    rng.gen_range(0.0..80.0),
                    rng.gen_range(0.0..60.0),
                    rng.gen_range(0.0..40.0),
                ),
            );
            // oracle: dense sampling of distance to the rectangle
            let mut min_d = f64::INFINITY;
            for k in 0..=2000 {
                let p = s.eval(k as f64 / 2000.0);
                let c2 = point_segment_closest(p.xy(), gate.seg);
                let dz = if p.z < gate.h_lo {
                    gate.h_lo - p.z
                } else if p.z > gate.h_hi {
                    p.z - gate.h_hi
                } else {
                    0.0
                };
                min_d = min_d.min(p.xy().dist(c2).hypot(dz));
            }
            // skip the ambiguous band around the tolerance
            if min_d > 1e-4 && min_d < 0.5 {
                continue;
            }
            checked += 1;
            let expect = min_d <= 1e-4;
            assert_eq!(
                segment_gate_intersect(s, &gate, EPS),
                expect,
                "segment {s:?} min_d {min_d}"
            );
        }
        assert!(checked > 1000);
    }

    #[test]
    fn oriented_basics_and_antisymmetry() {
        assert!(oriented(Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)).unwrap());
        assert!(!oriented(Point2::new(0.0, 1.0), Point2::new(1.0, 0.0)).unwrap());
        assert_eq!(
            oriented(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)),
            Err(GeomError::ZeroVector)
        );
    }

    #[test]
    fn oriented_sort_matches_atan2() {
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..20 {
            let mut vecs: Vec<Point2> = (0..100)
                .map(|_| {
                    let a = rng.gen_range(0.0..std::f64::consts::TAU);
                    let r = rng.gen_range(0.1..10.0);
                    Point2::new(r * a.cos(), r * a.sin())
                })
                .collect();
            let mut by_cmp = vecs.clone();
            by_cmp.sort_by(|a, b| {
                if oriented(*a, *b).unwrap() {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Greater
                }
            });
            vecs.sort_by(|a, b| {
                let ta = a.y.atan2(a.x).rem_euclid(std::f64::consts::TAU);
                let tb = b.y.atan2(b.x).rem_euclid(std::f64::consts::TAU);
                ta.partial_cmp(&tb).unwrap()
            });
            let angles: Vec<f64> = by_cmp.iter().map(|v| v.y.atan2(v.x)).collect();
            let expect: Vec<f64> = vecs.iter().map(|v| v.y.atan2(v.x)).collect();
            assert_eq!(angles, expect);
        }
    }

    #[test]
    fn oriented_sort_is_cyclic_under_rotation() {
        let dirs: Vec<Point2> = (0..12)
            .map(|k| {
                let a = 0.37 + k as f64 * 0.51;
                Point2::new(a.cos(), a.sin())
            })
            .collect();
        let mut sorted = dirs.clone();
        sorted.sort_by(|a, b| {
            if oriented(*a, *b).unwrap() {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            }
        });
        // rotating every vector by a common angle permutes the order cyclically
        let rot = 2.1_f64;
        let (s, c) = rot.sin_cos();
        let rotated: Vec<Point2> = sorted
            .iter()
            .map(|v| Point2::new(v.x * c - v.y * s, v.x * s + v.y * c))
            .collect();
        let mut rsorted = rotated.clone();
        rsorted.sort_by(|a, b| {
            if oriented(*a, *b).unwrap() {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            }
        });
        let idx = rotated
            .iter()
            .position(|v| v.dist(rsorted[0]) < 1e-12)
            .unwrap();
        for (k, v) in rsorted.iter().enumerate() {
            assert!(v.dist(rotated[(idx + k) % rotated.len()]) < 1e-12);
        }
    }

    #[test]
    fn point_distance_inside_and_outside() {
        let sq = unit_square(0.0, 0.0, 10.0, 10.0);
        assert_eq!(point_polygon_distance(Point2::new(5.0, 5.0), &sq), 0.0);
        assert!((point_polygon_distance(Point2::new(-3.0, 5.0), &sq) - 3.0).abs() < 1e-12);
        // membership equivalence on the closed set
        assert!(sq.contains(Point2::new(0.0, 5.0), 0.0));
    }

    #[test]
    fn point_prism_distance_matches_sampling() {
        let sq = unit_square(0.0, 0.0, 10.0, 10.0);
        let h = 8.0;
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..50 {
            let p = Point3::new(
                rng.gen_range(-10.0..20.0),
                rng.gen_range(-10.0..20.0),
                rng.gen_range(0.0..20.0),
            );
            let d = point_prism_distance(p, &sq, h);
            // oracle: sample the prism surface densely
            let mut oracle = f64::INFINITY;
            let n = 60;
            for i in 0..=n {
                for j in 0..=n {
                    let q = Point2::new(10.0 * i as f64 / n as f64, 10.0 * j as f64 / n as f64);
                    // top face
                    oracle = oracle.min(Point3::new(q.x, q.y, h).dist(p));
                }
            }
            for e in sq.edges() {
                for i in 0..=n {
                    let q = e.eval(i as f64 / n as f64);
                    for k in 0..=n {
                        let z = h * k as f64 / n as f64;
                        oracle = oracle.min(Point3::new(q.x, q.y, z).dist(p));
                    }
                }
            }
            let inside = sq.contains(p.xy(), 0.0) && p.z <= h;
            if inside {
                assert_eq!(d, 0.0);
            } else {
                assert!((d - oracle).abs() < 0.25, "{d} vs {oracle}");
            }
        }
    }

    #[test]
    fn convex_intersection_of_overlapping_squares() {
        let a = unit_square(0.0, 0.0, 10.0, 10.0);
        let b = unit_square(5.0, 5.0, 15.0, 15.0);
        let c = convex_intersection(&a, &b, EPS).unwrap();
        assert!((c.area() - 25.0).abs() < 1e-9);
    }

    #[test]
    fn disc_polygon_touching_counts() {
        let sq = unit_square(0.0, 0.0, 10.0, 10.0);
        assert!(disc_polygon_intersect(Point2::new(15.0, 5.0), 5.0, &sq, EPS));
        assert!(!disc_polygon_intersect(
            Point2::new(15.0, 5.0),
            4.9,
            &sq,
            EPS
        ));
    }
}
