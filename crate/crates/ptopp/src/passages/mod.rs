//! Passage detection among obstacles via Delaunay proximity graphs with
//! the amended Gabriel validity condition, in 2D and 3D.

pub mod delaunay;

use crate::env::Scenario;
use crate::geom::{
    disc_polygon_intersect, obstacle_distance, passage_region, polygons_intersect, PassagePlane3,
    PassageRegion, Point2, Segment2,
};
use delaunay::DelaunayBuilder;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default geodesic tester radius in the Delaunay graph.
pub const DEFAULT_KGD: usize = 2;

#[derive(Debug, Error)]
pub enum PassageError {
    #[error("obstacles {0} and {1} overlap")]
    Overlap(u32, u32),
}

/// A valid passage between obstacles `i < j`: the closest-point segment,
/// its width, the region polygon, and the valid height interval (3D).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Passage {
    pub i: u32,
    pub j: u32,
    /// Closest-point segment; `seg.a` lies on obstacle `i`, `seg.b` on `j`.
    pub seg: Segment2,
    pub width: f64,
    pub region: PassageRegion,
    pub h_lo: f64,
    pub h_hi: f64,
}

impl Passage {
    pub fn pair(&self) -> (u32, u32) {
        (self.i, self.j)
    }

    /// The vertical gate rectangle used for 3D traversal checks.
    pub fn gate(&self) -> PassagePlane3 {
        PassagePlane3 {
            seg: self.seg,
            h_lo: self.h_lo,
            h_hi: self.h_hi,
        }
    }
}

/// Candidate geometry for an obstacle pair before validity filtering.
struct Candidate {
    seg: Segment2,
    width: f64,
    region: PassageRegion,
    disc_center: Point2,
    disc_radius: f64,
}

fn candidate(scenario: &Scenario, i: u32, j: u32) -> Result<Option<Candidate>, PassageError> {
    let eps = scenario.eps();
    let oi = &scenario.obstacle(i).footprint;
    let oj = &scenario.obstacle(j).footprint;
    let (pi, pj, d) = obstacle_distance(oi, oj, eps).map_err(|_| PassageError::Overlap(i, j))?;
    if d <= eps {
        // touching pair: treated as merged, no passage
        return Ok(None);
    }
    let extrusion = 2.0 * scenario.extent.diagonal();
    let Ok(region) = passage_region(oi, oj, pi, pj, extrusion, eps) else {
        return Ok(None);
    };
    let seg = Segment2::new(pi, pj);
    Ok(Some(Candidate {
        seg,
        width: d,
        region,
        disc_center: seg.midpoint(),
        disc_radius: d / 2.0,
    }))
}

/// Amended Gabriel test against one tester obstacle: true when the tester
/// intersects the union of the closed disc over the passage segment and
/// the passage region.
fn tester_blocks(cand: &Candidate, scenario: &Scenario, k: u32) -> bool {
    let eps = scenario.eps();
    let ok = &scenario.obstacle(k).footprint;
    // cheap AABB pre-reject against disc and region
    let (lo, hi) = ok.aabb();
    let (rlo, rhi) = cand.region.polygon.aabb();
    let c = cand.disc_center;
    let r = cand.disc_radius;
    let min_x = rlo.x.min(c.x - r) - eps;
    let max_x = rhi.x.max(c.x + r) + eps;
    let min_y = rlo.y.min(c.y - r) - eps;
    let max_y = rhi.y.max(c.y + r) + eps;
    if hi.x < min_x || lo.x > max_x || hi.y < min_y || lo.y > max_y {
        return false;
    }
    disc_polygon_intersect(cand.disc_center, cand.disc_radius, ok, eps)
        || polygons_intersect(&cand.region.polygon, ok, eps)
}

/// The Gabriel validity check for a candidate pair against a tester set.
/// In 3D only testers at least as tall as the candidate's upper height
/// bound invalidate (shorter blockers raise the lower bound instead).
pub fn gabriel_valid(
    scenario: &Scenario,
    i: u32,
    j: u32,
    testers: &[u32],
) -> Result<bool, PassageError> {
    let Some(cand) = candidate(scenario, i, j)? else {
        return Ok(false);
    };
    if scenario.is_3d() {
        let h_hi = scenario.obstacle(i).height.min(scenario.obstacle(j).height);
        Ok(!testers.iter().any(|&k| {
            k != i
                && k != j
                && scenario.obstacle(k).height >= h_hi
                && tester_blocks(&cand, scenario, k)
        }))
    } else {
        Ok(!testers
            .iter()
            .any(|&k| k != i && k != j && tester_blocks(&cand, scenario, k)))
    }
}

// ---------------------------------------------------------------------------
// Proximity graph
// ---------------------------------------------------------------------------

/// Delaunay graph over obstacle centroids with geodesic neighbor queries.
#[derive(Debug, Clone)]
pub struct ProximityGraph {
    pub adjacency: Vec<Vec<u32>>,
}

impl ProximityGraph {
    /// BFS ball of graph radius `k_gd` around `i`, excluding `i` itself.
    pub fn neighbors_within(&self, i: u32, k_gd: usize) -> Vec<u32> {
        let n = self.adjacency.len();
        let mut dist = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        dist[i as usize] = 0;
        queue.push_back(i as usize);
        let mut out = Vec::new();
        while let Some(u) = queue.pop_front() {
            if dist[u] >= k_gd {
                continue;
            }
            for &v in &self.adjacency[u] {
                let v = v as usize;
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    out.push(v as u32);
                    queue.push_back(v);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Deterministic jitter applied to centroids before triangulation so that
/// collinear/cocircular inputs resolve reproducibly. Magnitude is
/// 1e-7 of the map diagonal; direction is a hash of the obstacle id.
pub fn jittered_centroids(scenario: &Scenario) -> Vec<Point2> {
    let mag = 1e-7 * scenario.extent.diagonal();
    scenario
        .obstacles
        .iter()
        .map(|o| {
            let h = splitmix64(o.id as u64 + 1);
            let angle = (h as f64 / u64::MAX as f64) * std::f64::consts::TAU;
            Point2::new(o.centroid.x + mag * angle.cos(), o.centroid.y + mag * angle.sin())
        })
        .collect()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Delaunay graph of the given centroids. Fewer than 3 points fall back
/// to the complete graph.
pub fn delaunay(centroids: &[Point2], extent_lo: Point2, extent_hi: Point2) -> ProximityGraph {
    let n = centroids.len();
    if n < 3 {
        let adjacency = (0..n)
            .map(|i| (0..n as u32).filter(|&j| j != i as u32).collect())
            .collect();
        return ProximityGraph { adjacency };
    }
    let mut builder = DelaunayBuilder::new(extent_lo, extent_hi);
    for c in centroids {
        builder.insert(*c);
    }
    ProximityGraph {
        adjacency: builder.adjacency(),
    }
}

fn graph_bounds(scenario: &Scenario) -> (Point2, Point2) {
    (
        Point2::new(-10.0, -10.0),
        Point2::new(scenario.extent.width + 10.0, scenario.extent.height + 10.0),
    )
}

/// Delaunay proximity graph over the scenario's obstacle centroids.
pub fn proximity_graph(scenario: &Scenario) -> ProximityGraph {
    let pts = jittered_centroids(scenario);
    let (lo, hi) = graph_bounds(scenario);
    delaunay(&pts, lo, hi)
}

// ---------------------------------------------------------------------------
// Detection
// ---------------------------------------------------------------------------

/// Planar passage detection over the Delaunay graph: candidate pairs are
/// those within geodesic distance `k_gd`, validated against the union of
/// both endpoints' geodesic neighborhoods.
pub fn detect_2d(scenario: &Scenario, k_gd: usize) -> Result<Vec<Passage>, PassageError> {
    let m = scenario.obstacles.len();
    let graph = proximity_graph(scenario);
    let hoods: Vec<Vec<u32>> = (0..m as u32)
        .map(|i| graph.neighbors_within(i, k_gd))
        .collect();
    let mut passages = Vec::new();
    for i in 0..m as u32 {
        for &j in &hoods[i as usize] {
            if j <= i {
                continue;
            }
            let Some(cand) = candidate(scenario, i, j)? else {
                continue;
            };
            let mut testers: Vec<u32> = hoods[i as usize]
                .iter()
                .chain(hoods[j as usize].iter())
                .copied()
                .filter(|&k| k != i && k != j)
                .collect();
            testers.sort_unstable();
            testers.dedup();
            if testers.iter().any(|&k| tester_blocks(&cand, scenario, k)) {
                continue;
            }
            passages.push(Passage {
                i,
                j,
                seg: cand.seg,
                width: cand.width,
                region: cand.region,
                h_lo: 0.0,
                h_hi: full_height(scenario),
            });
        }
    }
    passages.sort_by_key(|p| (p.i, p.j));
    Ok(passages)
}

fn full_height(scenario: &Scenario) -> f64 {
    if scenario.is_3d() {
        scenario.extent.depth
    } else {
        f64::INFINITY
    }
}

struct PendingPassage {
    passage: Passage,
    height_processed: bool,
}

/// Spatial passage detection: obstacles are inserted in descending height
/// into an incremental Delaunay construction. Each insertion first lowers
/// the height interval of existing passages it blocks, then adds new
/// passages between the inserted obstacle and its geodesic neighborhood.
pub fn detect_3d(scenario: &Scenario, k_gd: usize) -> Result<Vec<Passage>, PassageError> {
    let eps = scenario.eps();
    let m = scenario.obstacles.len();
    let mut order: Vec<u32> = (0..m as u32).collect();
    order.sort_by(|&a, &b| {
        let ha = scenario.obstacle(a).height;
        let hb = scenario.obstacle(b).height;
        hb.partial_cmp(&ha).unwrap().then(a.cmp(&b))
    });
    let centroids = jittered_centroids(scenario);
    let (lo, hi) = graph_bounds(scenario);
    let mut builder = DelaunayBuilder::new(lo, hi);
    // builder vertex index -> obstacle id
    let mut vertex_obstacle: Vec<u32> = Vec::with_capacity(m);
    let mut pending: Vec<PendingPassage> = Vec::new();
    for (step, &oi) in order.iter().enumerate() {
        builder.insert(centroids[oi as usize]);
        vertex_obstacle.push(oi);
        if step == 0 {
            continue;
        }
        let graph = ProximityGraph {
            adjacency: builder.adjacency(),
        };
        let vi = step as u32;
        let hood_i: Vec<u32> = graph
            .neighbors_within(vi, k_gd)
            .into_iter()
            .map(|v| vertex_obstacle[v as usize])
            .collect();
        let h_i = scenario.obstacle(oi).height;
        // (a) existing passages touching the neighborhood with unprocessed
        // height intervals get their lower bound raised if blocked
        for entry in pending.iter_mut() {
            if entry.height_processed {
                continue;
            }
            let p = &entry.passage;
            if !(hood_i.contains(&p.i) || hood_i.contains(&p.j)) {
                continue;
            }
            let cand = Candidate {
                seg: p.seg,
                width: p.width,
                region: p.region.clone(),
                disc_center: p.seg.midpoint(),
                disc_radius: p.width / 2.0,
            };
            if tester_blocks(&cand, scenario, oi) {
                entry.passage.h_lo = h_i;
                entry.height_processed = true;
            }
        }
        // (b) new passages between the inserted obstacle and its neighbors;
        // every already-inserted tester is at least as tall as h_i
        for &oj in &hood_i {
            let (a, b) = (oi.min(oj), oi.max(oj));
            if pending.iter().any(|e| e.passage.pair() == (a, b)) {
                continue;
            }
            let Some(cand) = candidate(scenario, a, b)? else {
                continue;
            };
            let vj = vertex_obstacle.iter().position(|&o| o == oj).unwrap() as u32;
            let mut testers: Vec<u32> = graph
                .neighbors_within(vi, k_gd)
                .into_iter()
                .chain(graph.neighbors_within(vj, k_gd))
                .map(|v| vertex_obstacle[v as usize])
                .filter(|&k| k != a && k != b)
                .collect();
            testers.sort_unstable();
            testers.dedup();
            if testers.iter().any(|&k| tester_blocks(&cand, scenario, k)) {
                continue;
            }
            pending.push(PendingPassage {
                passage: Passage {
                    i: a,
                    j: b,
                    seg: cand.seg,
                    width: cand.width,
                    region: cand.region,
                    h_lo: 0.0,
                    h_hi: h_i,
                },
                height_processed: false,
            });
        }
    }
    let mut passages: Vec<Passage> = pending
        .into_iter()
        .map(|e| e.passage)
        .filter(|p| p.h_lo + eps < p.h_hi)
        .collect();
    passages.sort_by_key(|p| (p.i, p.j));
    Ok(passages)
}

/// Reference O(m^3) detector: every pair tested against every other
/// obstacle. The oracle for `detect_2d` and `detect_3d`.
pub fn brute_force_detect(scenario: &Scenario) -> Result<Vec<Passage>, PassageError> {
    let eps = scenario.eps();
    let m = scenario.obstacles.len() as u32;
    let mut passages = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let Some(cand) = candidate(scenario, i, j)? else {
                continue;
            };
            if scenario.is_3d() {
                let h_hi = scenario.obstacle(i).height.min(scenario.obstacle(j).height);
                let mut h_lo = 0.0_f64;
                let mut blocked = false;
                for k in 0..m {
                    if k == i || k == j {
                        continue;
                    }
                    let hk = scenario.obstacle(k).height;
                    if tester_blocks(&cand, scenario, k) {
                        if hk >= h_hi {
                            blocked = true;
                            break;
                        }
                        h_lo = h_lo.max(hk);
                    }
                }
                if !blocked && h_lo + eps < h_hi {
                    passages.push(Passage {
                        i,
                        j,
                        seg: cand.seg,
                        width: cand.width,
                        region: cand.region,
                        h_lo,
                        h_hi,
                    });
                }
            } else {
                let blocked =
                    (0..m).any(|k| k != i && k != j && tester_blocks(&cand, scenario, k));
                if !blocked {
                    passages.push(Passage {
                        i,
                        j,
                        seg: cand.seg,
                        width: cand.width,
                        region: cand.region,
                        h_lo: 0.0,
                        h_hi: full_height(scenario),
                    });
                }
            }
        }
    }
    passages.sort_by_key(|p| (p.i, p.j));
    Ok(passages)
}

/// Pair sets for oracle comparisons.
pub fn pair_set(passages: &[Passage]) -> Vec<(u32, u32)> {
    passages.iter().map(Passage::pair).collect()
}
