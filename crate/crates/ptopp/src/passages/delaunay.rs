//! Incremental Delaunay triangulation (Bowyer-Watson) over a known
//! bounding box, exposing the adjacency graph after each insertion.
//!
//! Inputs are expected in general position; callers apply a deterministic
//! jitter to degenerate point sets before triangulating.

use crate::geom::Point2;

#[derive(Debug, Clone, Copy)]
struct Tri {
    v: [usize; 3],
    alive: bool,
}

/// Incremental triangulation builder. The first three vertices are a
/// synthetic super-triangle enclosing the bounding box; they are hidden
/// from the reported graph.
#[derive(Debug, Clone)]
pub struct DelaunayBuilder {
    points: Vec<Point2>,
    triangles: Vec<Tri>,
}

impl DelaunayBuilder {
    pub fn new(lo: Point2, hi: Point2) -> Self {
        let w = (hi.x - lo.x).max(1.0);
        let h = (hi.y - lo.y).max(1.0);
        let cx = (lo.x + hi.x) / 2.0;
        let cy = (lo.y + hi.y) / 2.0;
        let r = 10.0 * (w + h);
        let points = vec![
            Point2::new(cx - 2.0 * r, cy - r),
            Point2::new(cx + 2.0 * r, cy - r),
            Point2::new(cx, cy + 2.0 * r),
        ];
        let triangles = vec![Tri {
            v: [0, 1, 2],
            alive: true,
        }];
        Self { points, triangles }
    }

    /// Number of real (non-super) vertices inserted so far.
    pub fn len(&self) -> usize {
        self.points.len() - 3
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Inserts a point and restores the Delaunay property. Returns the
    /// real-vertex index of the inserted point.
    pub fn insert(&mut self, p: Point2) -> usize {
        let idx = self.points.len();
        self.points.push(p);
        // collect triangles whose circumcircle contains p
        let mut bad: Vec<usize> = Vec::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.alive && self.in_circumcircle(tri.v, p) {
                bad.push(t);
            }
        }
        // boundary of the cavity: edges used by exactly one bad triangle
        let mut edges: Vec<(usize, usize, i32)> = Vec::new();
        for &t in &bad {
            let v = self.triangles[t].v;
            for k in 0..3 {
                let a = v[k];
                let b = v[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                if let Some(e) = edges.iter_mut().find(|e| (e.0, e.1) == key) {
                    e.2 += 1;
                } else {
                    edges.push((key.0, key.1, 1));
                }
            }
        }
        for &t in &bad {
            self.triangles[t].alive = false;
        }
        for (a, b, count) in edges {
            if count != 1 {
                continue;
            }
            // orient the new triangle counter-clockwise
            let (a, b) = if orient(self.points[a], self.points[b], p) > 0.0 {
                (a, b)
            } else {
                (b, a)
            };
            self.triangles.push(Tri {
                v: [a, b, idx],
                alive: true,
            });
        }
        idx - 3
    }

    fn in_circumcircle(&self, v: [usize; 3], p: Point2) -> bool {
        let (a, b, c) = (self.points[v[0]], self.points[v[1]], self.points[v[2]]);
        // assumes CCW orientation of (a, b, c)
        let (ax, ay) = (a.x - p.x, a.y - p.y);
        let (bx, by) = (b.x - p.x, b.y - p.y);
        let (cx, cy) = (c.x - p.x, c.y - p.y);
        let det = (ax * ax + ay * ay) * (bx * cy - cx * by)
            - (bx * bx + by * by) * (ax * cy - cx * ay)
            + (cx * cx + cy * cy) * (ax * by - bx * ay);
        det > 0.0
    }

    /// Adjacency lists over real vertices, sorted ascending. Vertices seen
    /// only in super-triangle faces get empty lists.
    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let n = self.len();
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for tri in &self.triangles {
            if !tri.alive {
                continue;
            }
            for k in 0..3 {
                let a = tri.v[k];
                let b = tri.v[(k + 1) % 3];
                if a >= 3 && b >= 3 {
                    let (ra, rb) = (a - 3, b - 3);
                    if !adj[ra].contains(&(rb as u32)) {
                        adj[ra].push(rb as u32);
                    }
                    if !adj[rb].contains(&(ra as u32)) {
                        adj[rb].push(ra as u32);
                    }
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Triangles over real vertices only.
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        self.triangles
            .iter()
            .filter(|t| t.alive && t.v.iter().all(|&v| v >= 3))
            .map(|t| [t.v[0] - 3, t.v[1] - 3, t.v[2] - 3])
            .collect()
    }

    pub fn point(&self, real_idx: usize) -> Point2 {
        self.points[real_idx + 3]
    }
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    b.sub(a).cross(c.sub(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn three_points_single_triangle() {
        let mut b = DelaunayBuilder::new(Point2::new(0.0, 0.0), Point2::new(10.0, 10.0));
        b.insert(Point2::new(0.0, 0.0));
        b.insert(Point2::new(10.0, 0.0));
        b.insert(Point2::new(5.0, 8.0));
        assert_eq!(b.triangles().len(), 1);
        let adj = b.adjacency();
        assert_eq!(adj[0], vec![1, 2]);
        assert_eq!(adj[1], vec![0, 2]);
        assert_eq!(adj[2], vec![0, 1]);
    }

    #[test]
    fn square_gets_one_diagonal() {
        // cocircular with a deterministic tiny perturbation: exactly one
        // diagonal appears
        let mut b = DelaunayBuilder::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0));
        b.insert(Point2::new(0.0, 0.0));
        b.insert(Point2::new(1.0, 1e-9));
        b.insert(Point2::new(1.0, 1.0));
        b.insert(Point2::new(0.0, 1.0));
        let adj = b.adjacency();
        let d1 = adj[0].contains(&2);
        let d2 = adj[1].contains(&3);
        assert!(d1 ^ d2, "exactly one diagonal: {adj:?}");
        assert_eq!(b.triangles().len(), 2);
    }

    #[test]
    fn random_points_satisfy_empty_circumcircle() {
        let mut rng = StdRng::seed_from_u64(13);
        let mut b = DelaunayBuilder::new(Point2::new(0.0, 0.0), Point2::new(1000.0, 600.0));
        let pts: Vec<Point2> = (0..100)
            .map(|_| Point2::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..600.0)))
            .collect();
        for p in &pts {
            b.insert(*p);
        }
        let eps = 1e-9 * 1166.0;
        for tri in b.triangles() {
            let (a, bb, c) = (b.point(tri[0]), b.point(tri[1]), b.point(tri[2]));
            let (cc, r) = circumcircle(a, bb, c);
            for (k, p) in pts.iter().enumerate() {
                if tri.contains(&k) {
                    continue;
                }
                assert!(
                    cc.dist(*p) >= r - eps,
                    "point {k} inside circumcircle of {tri:?}"
                );
            }
        }
        // every vertex participates
        let adj = b.adjacency();
        assert!(adj.iter().all(|l| !l.is_empty()));
    }

    fn circumcircle(a: Point2, b: Point2, c: Point2) -> (Point2, f64) {
        let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
        let ux = ((a.x * a.x + a.y * a.y) * (b.y - c.y)
            + (b.x * b.x + b.y * b.y) * (c.y - a.y)
            + (c.x * c.x + c.y * c.y) * (a.y - b.y))
            / d;
        let uy = ((a.x * a.x + a.y * a.y) * (c.x - b.x)
            + (b.x * b.x + b.y * b.y) * (a.x - c.x)
            + (c.x * c.x + c.y * c.y) * (b.x - a.x))
            / d;
        let center = Point2::new(ux, uy);
        (center, center.dist(a))
    }
}
