//! Exact nearest-neighbor index over node positions: a kd-tree rebuilt at
//! power-of-two sizes with a linearly scanned overflow buffer in between.

use crate::geom::Point3;

#[derive(Debug, Clone)]
struct KdNode {
    point: Point3,
    id: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct NodeIndex {
    dims: usize,
    nodes: Vec<KdNode>,
    root: Option<usize>,
    overflow: Vec<(Point3, usize)>,
    all: Vec<(Point3, usize)>,
}

fn coord(p: Point3, axis: usize) -> f64 {
    match axis {
        0 => p.x,
        1 => p.y,
        _ => p.z,
    }
}

impl NodeIndex {
    pub fn new(dims: usize) -> Self {
        Self {
            dims,
            nodes: Vec::new(),
            root: None,
            overflow: Vec::new(),
            all: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.all.len()
    }

    pub fn is_empty(&self) -> bool {
        self.all.is_empty()
    }

    pub fn insert(&mut self, p: Point3, id: usize) {
        self.all.push((p, id));
        self.overflow.push((p, id));
        if self.all.len().is_power_of_two() {
            self.rebuild();
        }
    }

    fn rebuild(&mut self) {
        self.nodes.clear();
        self.overflow.clear();
        let mut items = self.all.clone();
        let dims = self.dims;
        self.root = self.build(&mut items, 0, dims);
    }

    fn build(&mut self, items: &mut [(Point3, usize)], depth: usize, dims: usize) -> Option<usize> {
        if items.is_empty() {
            return None;
        }
        let axis = depth % dims;
        items.sort_by(|a, b| {
            coord(a.0, axis)
                .total_cmp(&coord(b.0, axis))
                .then(a.1.cmp(&b.1))
        });
        let mid = items.len() / 2;
        let (point, id) = items[mid];
        let slot = self.nodes.len();
        self.nodes.push(KdNode {
            point,
            id,
            axis,
            left: None,
            right: None,
        });
        let (lo, rest) = items.split_at_mut(mid);
        let hi = &mut rest[1..];
        let left = self.build(lo, depth + 1, dims);
        let right = self.build(hi, depth + 1, dims);
        self.nodes[slot].left = left;
        self.nodes[slot].right = right;
        Some(slot)
    }

    /// Exact Euclidean nearest node; ties resolve to the smallest id.
    pub fn nearest(&self, q: Point3) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let consider = |best: &mut Option<(usize, f64)>, id: usize, d: f64| {
            let better = match *best {
                None => true,
                Some((bid, bd)) => d < bd || (d == bd && id < bid),
            };
            if better {
                *best = Some((id, d));
            }
        };
        if let Some(root) = self.root {
            self.nearest_rec(root, q, &mut best, &consider);
        }
        for &(p, id) in &self.overflow {
            consider(&mut best, id, p.dist(q));
        }
        best
    }

    fn nearest_rec<F: Fn(&mut Option<(usize, f64)>, usize, f64)>(
        &self,
        slot: usize,
        q: Point3,
        best: &mut Option<(usize, f64)>,
        consider: &F,
    ) {
        let node = &self.nodes[slot];
        consider(best, node.id, node.point.dist(q));
        let delta = coord(q, node.axis) - coord(node.point, node.axis);
        let (near, far) = if delta < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        if let Some(n) = near {
            self.nearest_rec(n, q, best, consider);
        }
        if let Some(f) = far {
            if best.map_or(true, |(_, bd)| delta.abs() <= bd) {
                self.nearest_rec(f, q, best, consider);
            }
        }
    }

    /// All node ids within radius `r` (inclusive), sorted ascending.
    pub fn within(&self, q: Point3, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if let Some(root) = self.root {
            self.within_rec(root, q, r, &mut out);
        }
        for &(p, id) in &self.overflow {
            if p.dist(q) <= r {
                out.push(id);
            }
        }
        out.sort_unstable();
        out
    }

    fn within_rec(&self, slot: usize, q: Point3, r: f64, out: &mut Vec<usize>) {
        let node = &self.nodes[slot];
        if node.point.dist(q) <= r {
            out.push(node.id);
        }
        let delta = coord(q, node.axis) - coord(node.point, node.axis);
        if delta <= r {
            if let Some(l) = node.left {
                self.within_rec(l, q, r, out);
            }
        }
        if delta >= -r {
            if let Some(rt) = node.right {
                self.within_rec(rt, q, r, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_points(n: usize, seed: u64) -> Vec<Point3> {
        let mut rng = StdRng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Point3::new(
                    rng.gen_range(0.0..1000.0),
                    rng.gen_range(0.0..600.0),
                    0.0,
                )
            })
            .collect()
    }

    #[test]
    fn singleton_nearest() {
        let mut idx = NodeIndex::new(2);
        idx.insert(Point3::new(3.0, 4.0, 0.0), 7);
        assert_eq!(idx.nearest(Point3::new(0.0, 0.0, 0.0)), Some((7, 5.0)));
        assert!(idx.within(Point3::new(3.0, 4.0, 0.0), 0.0) == vec![7]);
        assert!(idx.within(Point3::new(0.0, 0.0, 0.0), 0.0).is_empty());
    }

    #[test]
    fn matches_linear_scan_oracle() {
        let pts = random_points(800, 5);
        let mut idx = NodeIndex::new(2);
        for (i, p) in pts.iter().enumerate() {
            idx.insert(*p, i);
        }
        let mut rng = StdRng::seed_from_u64(6);
        for _ in 0..10_000 {
            let q = Point3::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..600.0), 0.0);
            let (id, d) = idx.nearest(q).unwrap();
            let (oid, od) = pts
                .iter()
                .enumerate()
                .map(|(i, p)| (i, p.dist(q)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .unwrap();
            assert_eq!((id, d), (oid, od));
            let r = rng.gen_range(0.0..120.0);
            let got = idx.within(q, r);
            let expect: Vec<usize> = pts
                .iter()
                .enumerate()
                .filter(|(_, p)| p.dist(q) <= r)
                .map(|(i, _)| i)
                .collect();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn incremental_inserts_stay_exact() {
        let pts = random_points(300, 9);
        let mut idx = NodeIndex::new(3);
        let mut rng = StdRng::seed_from_u64(10);
        for (i, p) in pts.iter().enumerate() {
            idx.insert(*p, i);
            if i % 37 == 0 {
                let q = Point3::new(
                    rng.gen_range(0.0..1000.0),
                    rng.gen_range(0.0..600.0),
                    rng.gen_range(0.0..400.0),
                );
                let (id, d) = idx.nearest(q).unwrap();
                let (oid, od) = pts[..=i]
                    .iter()
                    .enumerate()
                    .map(|(k, p)| (k, p.dist(q)))
                    .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                    .unwrap();
                assert_eq!((id, d), (oid, od));
            }
        }
    }
}
