//! Planner primitives: the path-node arena, passage traversal checks,
//! node positioning by cell walk, incremental cost evaluation, and
//! subtree attribute propagation.

pub mod kdtree;

use crate::cells::{CellComplex, CellError, Side};
use crate::costs::{path_cost, CostError, CostKind, CostSpec, CostValue, SortedWidths};
use crate::env::Scenario;
use crate::geom::{
    point_prism_distance, segment_gate_intersect, segment_intersection_param,
    segment_polygon_intersect, segments_intersect, Point3, Segment2, Segment3,
};
use crate::passages::Passage;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("cell walk stuck at cell {0} (inconsistent complex)")]
    WalkStuck(usize),
    #[error("reattachment would create a cycle")]
    CycleDetected,
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Cell(#[from] CellError),
}

/// Shared immutable planning context. `complex` is absent in the
/// all-passage traversal mode, where every edge is checked against the
/// whole passage list instead of the local cell sides.
pub struct PlanSpace<'a> {
    pub scenario: &'a Scenario,
    pub passages: &'a [Passage],
    pub complex: Option<&'a CellComplex>,
    pub cost: CostSpec,
}

impl<'a> PlanSpace<'a> {
    pub fn eps(&self) -> f64 {
        self.scenario.eps()
    }

    pub fn is_3d(&self) -> bool {
        self.scenario.is_3d()
    }
}

/// Path node carrying passage traversal state; `children` is maintained
/// by tree planners, `adjacency` by graph planners.
#[derive(Debug, Clone)]
pub struct PathNode {
    pub position: Point3,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub adjacency: Vec<usize>,
    pub cell: usize,
    pub len: f64,
    pub cost: CostValue,
    /// Widths crossed by the parent edge, in crossing order, after any
    /// constrained-width relabeling.
    pub passed_widths: Vec<f64>,
    pub sorted_widths: SortedWidths,
    /// Minimum obstacle distance contributed by the parent edge.
    pub edge_clearance: f64,
    /// Minimum obstacle distance along the whole path from the root.
    pub clearance: f64,
}

#[derive(Debug, Default)]
pub struct NodeArena {
    pub nodes: Vec<PathNode>,
}

impl NodeArena {
    pub fn add_root(&mut self, position: Point3, cell: usize, spec: &CostSpec, clearance: f64) -> usize {
        let sorted = spec.fresh_widths();
        let cost = path_cost(spec, &sorted, 0.0, clearance).expect("root cost");
        self.nodes.push(PathNode {
            position,
            parent: None,
            children: Vec::new(),
            adjacency: Vec::new(),
            cell,
            len: 0.0,
            cost,
            passed_widths: Vec::new(),
            sorted_widths: sorted,
            edge_clearance: clearance,
            clearance,
        });
        self.nodes.len() - 1
    }

    pub fn add_unattached(&mut self, position: Point3, spec: &CostSpec) -> usize {
        self.nodes.push(PathNode {
            position,
            parent: None,
            children: Vec::new(),
            adjacency: Vec::new(),
            cell: usize::MAX,
            len: 0.0,
            cost: CostValue::INFINITE,
            passed_widths: Vec::new(),
            sorted_widths: spec.fresh_widths(),
            edge_clearance: f64::INFINITY,
            clearance: f64::INFINITY,
        });
        self.nodes.len() - 1
    }
}

// ---------------------------------------------------------------------------
// Collision and clearance
// ---------------------------------------------------------------------------

pub fn point_free(scenario: &Scenario, p: Point3) -> bool {
    let eps = scenario.eps();
    if p.x < 0.0 || p.y < 0.0 || p.x > scenario.extent.width || p.y > scenario.extent.height {
        return false;
    }
    if scenario.is_3d() && (p.z < 0.0 || p.z > scenario.extent.depth) {
        return false;
    }
    if scenario.is_3d() {
        !scenario
            .obstacles
            .iter()
            .any(|o| p.z <= o.height + eps && o.footprint.contains(p.xy(), eps))
    } else {
        !scenario
            .obstacles
            .iter()
            .any(|o| o.footprint.contains(p.xy(), eps))
    }
}

/// Continuous segment collision check against all obstacles (walls
/// included); touching counts as collision.
pub fn obstacle_free(scenario: &Scenario, a: Point3, b: Point3) -> bool {
    let eps = scenario.eps();
    let seg2 = Segment2::new(a.xy(), b.xy());
    for o in &scenario.obstacles {
        let (lo, hi) = o.footprint.aabb();
        let min_x = seg2.a.x.min(seg2.b.x);
        let max_x = seg2.a.x.max(seg2.b.x);
        let min_y = seg2.a.y.min(seg2.b.y);
        let max_y = seg2.a.y.max(seg2.b.y);
        if max_x < lo.x - eps || min_x > hi.x + eps || max_y < lo.y - eps || min_y > hi.y + eps {
            continue;
        }
        if scenario.is_3d() {
            if prism_segment_hit(o.height, &o.footprint, a, b, eps) {
                return false;
            }
        } else if segment_polygon_intersect(seg2, &o.footprint, eps) {
            return false;
        }
    }
    true
}

/// 3D segment vs vertical prism: intersect the parameter interval where
/// the projection is inside the footprint with the interval where the
/// height is below the prism top.
fn prism_segment_hit(height: f64, footprint: &crate::geom::ConvexPolygon, a: Point3, b: Point3, eps: f64) -> bool {
    // clip the projected segment by each footprint half-plane
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    let pa = a.xy();
    let d = b.xy().sub(pa);
    let verts = footprint.vertices();
    let n = verts.len();
    for i in 0..n {
        let p = verts[i];
        let q = verts[(i + 1) % n];
        // interior is left of each CCW edge: n_in . x >= c
        let nrm = q.sub(p).perp();
        let denom = nrm.dot(d);
        let num = nrm.dot(pa.sub(p));
        // require num + t * denom >= -eps
        if denom.abs() < 1e-300 {
            if num < -eps {
                return false;
            }
            continue;
        }
        let t = (-eps - num) / denom;
        if denom > 0.0 {
            t0 = t0.max(t);
        } else {
            t1 = t1.min(t);
        }
        if t0 > t1 {
            return false;
        }
    }
    // height interval: z(t) <= height + eps
    let za = a.z;
    let dz = b.z - a.z;
    let (mut h0, mut h1) = (0.0_f64, 1.0_f64);
    if dz.abs() < 1e-300 {
        if za > height + eps {
            return false;
        }
    } else {
        let t = (height + eps - za) / dz;
        if dz > 0.0 {
            h1 = h1.min(t);
        } else {
            h0 = h0.max(t);
        }
    }
    t0.max(h0) <= t1.min(h1)
}

/// Smallest distance from a point to any obstacle (walls included).
pub fn point_clearance(scenario: &Scenario, p: Point3) -> f64 {
    let mut best = f64::INFINITY;
    for o in &scenario.obstacles {
        let d = if scenario.is_3d() {
            point_prism_distance(p, &o.footprint, o.height)
        } else {
            crate::geom::point_polygon_distance(p.xy(), &o.footprint)
        };
        best = best.min(d);
    }
    best
}

/// Clearance contributed by an edge, approximated by five interior
/// interpolation points plus the far endpoint.
pub fn edge_clearance(scenario: &Scenario, a: Point3, b: Point3) -> f64 {
    let mut best = point_clearance(scenario, b);
    for k in 1..=5 {
        let t = k as f64 / 6.0;
        let p = a.add(b.sub(a).scale(t));
        best = best.min(point_clearance(scenario, p));
    }
    best
}

// ---------------------------------------------------------------------------
// Traversal checks
// ---------------------------------------------------------------------------

/// Passage traversal: a 2D segment intersection against the passage
/// segment, or a gate-rectangle crossing in 3D.
pub fn traverse(passage: &Passage, is_3d: bool, a: Point3, b: Point3, eps: f64) -> bool {
    if is_3d {
        segment_gate_intersect(Segment3::new(a, b), &passage.gate(), eps)
    } else {
        segments_intersect(Segment2::new(a.xy(), b.xy()), passage.seg, eps)
    }
}

fn traversal_param(passage: &Passage, is_3d: bool, a: Point3, b: Point3, eps: f64) -> Option<f64> {
    if is_3d {
        gate_crossing_param(Segment3::new(a, b), passage, eps)
    } else {
        segment_intersection_param(Segment2::new(a.xy(), b.xy()), passage.seg, eps)
    }
}

fn gate_crossing_param(s: Segment3, passage: &Passage, eps: f64) -> Option<f64> {
    if !segment_gate_intersect(s, &passage.gate(), eps) {
        return None;
    }
    let ga = passage.seg.a;
    let dir = passage.seg.b.sub(ga);
    let n = dir.perp();
    let f0 = s.a.xy().sub(ga).dot(n);
    let f1 = s.b.xy().sub(ga).dot(n);
    if (f0 - f1).abs() < 1e-300 {
        return Some(0.0);
    }
    Some((f0 / (f0 - f1)).clamp(0.0, 1.0))
}

/// True when the edge crosses no passage side (real or virtual) of the
/// given cell; valid under the premise that the edge is collision-free.
pub fn same_cell(space: &PlanSpace, cell: usize, a: Point3, b: Point3) -> bool {
    let complex = space.complex.expect("same_cell requires a cell complex");
    let eps = space.eps();
    let c = &complex.cells[cell];
    for (pid, _) in c.passage_sides() {
        if traverse(&space.passages[pid], space.is_3d(), a, b, eps) {
            return false;
        }
    }
    for &pid in &c.virtual_sides {
        if traverse(&space.passages[pid], space.is_3d(), a, b, eps) {
            return false;
        }
    }
    true
}

/// Outcome of positioning an edge endpoint in the decomposition.
#[derive(Debug, Clone)]
pub struct Walk {
    pub cell: usize,
    /// Crossed passage ids ordered by crossing parameter along the edge.
    pub passed: Vec<usize>,
    pub cells_visited: usize,
}

/// Walks the cells from `start_cell` along the edge (a, b), collecting the
/// passages the edge traverses, and returns the cell containing `b`.
///
/// Cells are stepped in crossing-parameter order. The set-logic stop rule
/// ("no newly crossed passage") misassigns the endpoint whenever two cells
/// share more than one passage segment and the edge re-enters the start
/// cell; the parameter sweep agrees with the global traversal oracle.
pub fn position_walk(
    space: &PlanSpace,
    start_cell: usize,
    a: Point3,
    b: Point3,
) -> Result<Walk, PlanError> {
    let complex = space.complex.expect("position_walk requires a cell complex");
    let eps = space.eps();
    let seg2 = Segment2::new(a.xy(), b.xy());
    // sweep the projected segment through the decomposition
    let mut cur = start_cell;
    let mut t_cur = 0.0_f64;
    let t_tol = 1e-9;
    let mut visited = vec![start_cell];
    let mut side_crossings: Vec<(f64, usize)> = Vec::new();
    let limit = 4 * complex.cells.len() + 8;
    for _ in 0..limit {
        let mut best: Option<(f64, usize, Option<usize>)> = None;
        for side in &complex.cells[cur].sides {
            match side {
                Side::Passage { pid, seg, neighbor } => {
                    if let Some(t) = segment_intersection_param(seg2, *seg, eps) {
                        if t > t_cur + t_tol && best.map_or(true, |(bt, _, _)| t < bt) {
                            best = Some((t, *pid, *neighbor));
                        }
                    }
                }
                Side::Glue { .. } => {}
                Side::Arc { chain, neighbor, .. } => {
                    // footprint stepping exists only in 3D complexes
                    let Some(nb) = neighbor else { continue };
                    for w in chain.windows(2) {
                        let g = Segment2::new(w[0], w[1]);
                        if let Some(t) = segment_intersection_param(seg2, g, eps) {
                            if t > t_cur + t_tol && best.map_or(true, |(bt, _, _)| t < bt) {
                                best = Some((t, usize::MAX, Some(*nb)));
                            }
                        }
                    }
                }
            }
        }
        let Some((t, pid, neighbor)) = best else { break };
        let Some(next) = neighbor else {
            return Err(PlanError::WalkStuck(cur));
        };
        if pid != usize::MAX {
            side_crossings.push((t, pid));
        }
        t_cur = t;
        cur = next;
        if !visited.contains(&next) {
            visited.push(next);
        }
    }
    let mut passed: Vec<(f64, usize)> = Vec::new();
    if space.is_3d() {
        // widths come from spatial gate crossings over the visited cells,
        // virtual sides included; the projection drives only the stepping
        let s3 = Segment3::new(a, b);
        let credit = |pid: usize, passed: &mut Vec<(f64, usize)>| {
            if passed.iter().any(|(_, q)| *q == pid) {
                return;
            }
            if let Some(t) = gate_crossing_param(s3, &space.passages[pid], eps) {
                passed.push((t, pid));
            }
        };
        for &cid in &visited {
            let cell = &complex.cells[cid];
            for side in &cell.sides {
                if let Side::Passage { pid, .. } = side {
                    credit(*pid, &mut passed);
                }
            }
            for &pid in &cell.virtual_sides {
                credit(pid, &mut passed);
            }
        }
    } else {
        passed = side_crossings;
        passed.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        passed.dedup_by_key(|e| e.1);
    }
    passed.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    Ok(Walk {
        cell: cur,
        passed: passed.into_iter().map(|(_, p)| p).collect(),
        cells_visited: visited.len(),
    })
}

/// All-passage traversal check used by the no-decomposition baseline.
pub fn edge_passages_global(space: &PlanSpace, a: Point3, b: Point3) -> Vec<usize> {
    let eps = space.eps();
    let mut crossed: Vec<(f64, usize)> = Vec::new();
    for (pid, p) in space.passages.iter().enumerate() {
        if let Some(t) = traversal_param(p, space.is_3d(), a, b, eps) {
            crossed.push((t, pid));
        }
    }
    crossed.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    crossed.into_iter().map(|(_, p)| p).collect()
}

// ---------------------------------------------------------------------------
// Cost evaluation and tree maintenance
// ---------------------------------------------------------------------------

/// Everything needed to attach an edge, computed without mutating the tree.
#[derive(Debug, Clone)]
pub struct EdgeEval {
    pub cell: usize,
    pub passed: Vec<usize>,
    pub widths: Vec<f64>,
    pub len: f64,
    pub sorted: SortedWidths,
    pub edge_clearance: f64,
    pub clearance: f64,
    pub cost: CostValue,
    pub cells_visited: usize,
}

/// Cost of extending the path at `from` by the straight edge to `to`,
/// per the incremental cost routine: copy the sorted widths, insert the
/// widths the edge crosses, extend the length.
pub fn evaluate_edge(
    space: &PlanSpace,
    arena: &NodeArena,
    from: usize,
    to: Point3,
) -> Result<EdgeEval, PlanError> {
    let node = &arena.nodes[from];
    let (walk_cell, passed, cells_visited) = match space.complex {
        Some(_) => {
            let walk = position_walk(space, node.cell, node.position, to)?;
            (walk.cell, walk.passed, walk.cells_visited)
        }
        None => (usize::MAX, edge_passages_global(space, node.position, to), 1),
    };
    let mut sorted = node.sorted_widths.clone();
    let mut widths = Vec::with_capacity(passed.len());
    for &pid in &passed {
        let w = space.cost.apply_cpw(space.passages[pid].width)?;
        widths.push(w);
        sorted.insert(w);
    }
    let len = node.len + node.position.dist(to);
    let (edge_clr, clearance) = if matches!(space.cost.kind, CostKind::MaxClearance) {
        let ec = edge_clearance(space.scenario, node.position, to);
        (ec, node.clearance.min(ec))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let cost = path_cost(&space.cost, &sorted, len, clearance)?;
    Ok(EdgeEval {
        cell: walk_cell,
        passed,
        widths,
        len,
        sorted,
        edge_clearance: edge_clr,
        clearance,
        cost,
    cells_visited,
    })
}

/// Attaches `child` under `parent` with a previously computed evaluation.
pub fn attach(arena: &mut NodeArena, parent: usize, child: usize, eval: EdgeEval) {
    if let Some(old) = arena.nodes[child].parent {
        arena.nodes[old].children.retain(|&c| c != child);
    }
    arena.nodes[parent].children.push(child);
    let node = &mut arena.nodes[child];
    node.parent = Some(parent);
    node.cell = eval.cell;
    node.len = eval.len;
    node.cost = eval.cost;
    node.passed_widths = eval.widths;
    node.sorted_widths = eval.sorted;
    node.edge_clearance = eval.edge_clearance;
    node.clearance = eval.clearance;
}

/// Reattaches `x2` under `x1` and propagates length, sorted widths,
/// clearance and cost to every descendant by breadth-first traversal.
/// Graph-mode nodes have no children, so the propagation loop is empty.
pub fn subtree_update(
    space: &PlanSpace,
    arena: &mut NodeArena,
    x1: usize,
    x2: usize,
) -> Result<(), PlanError> {
    // reject reattachment below a descendant
    let mut cur = Some(x1);
    while let Some(u) = cur {
        if u == x2 {
            return Err(PlanError::CycleDetected);
        }
        cur = arena.nodes[u].parent;
    }
    let len_change = {
        let edge = arena.nodes[x1].position.dist(arena.nodes[x2].position);
        arena.nodes[x1].len + edge - arena.nodes[x2].len
    };
    let eval = evaluate_edge(space, arena, x1, arena.nodes[x2].position)?;
    attach(arena, x1, x2, eval);
    let mut queue = std::collections::VecDeque::from([x2]);
    while let Some(u) = queue.pop_front() {
        let children = arena.nodes[u].children.clone();
        let parent_sorted = arena.nodes[u].sorted_widths.clone();
        let parent_clear = arena.nodes[u].clearance;
        for c in children {
            let node = &mut arena.nodes[c];
            node.len += len_change;
            let mut sorted = parent_sorted.clone();
            for &w in &node.passed_widths {
                sorted.insert(w);
            }
            node.sorted_widths = sorted;
            node.clearance = parent_clear.min(node.edge_clearance);
            node.cost = path_cost(&space.cost, &node.sorted_widths, node.len, node.clearance)?;
            queue.push_back(c);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::{detect_cells, locate};
    use crate::env::{generate, walls_to_obstacles, GenSpec};
    use crate::passages::{detect_2d, detect_3d, DEFAULT_KGD};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn planar_space(
        seed: u64,
        m: usize,
    ) -> (
        crate::env::Scenario,
        Vec<Passage>,
        crate::cells::CellComplex,
    ) {
        let spec = GenSpec::new_2d(m, seed);
        let s = walls_to_obstacles(&generate(&spec).unwrap());
        let passages = detect_2d(&s, DEFAULT_KGD).unwrap();
        let complex = detect_cells(&passages, &s).unwrap();
        (s, passages, complex)
    }

    fn random_free_point(scenario: &Scenario, rng: &mut StdRng) -> Point3 {
        loop {
            let p = Point3::new(
                rng.gen_range(0.0..scenario.extent.width),
                rng.gen_range(0.0..scenario.extent.height),
                if scenario.is_3d() {
                    rng.gen_range(0.0..scenario.extent.depth)
                } else {
                    0.0
                },
            );
            if point_free(scenario, p) {
                return p;
            }
        }
    }

    #[test]
    fn traverse_examples() {
        let (s, passages, _) = planar_space(4, 15);
        let p = &passages[0];
        let mid = p.seg.midpoint();
        let dir = p.seg.b.sub(p.seg.a).perp().scale(1.0 / p.seg.len());
        let a = Point3::new(mid.x - 5.0 * dir.x, mid.y - 5.0 * dir.y, 0.0);
        let b = Point3::new(mid.x + 5.0 * dir.x, mid.y + 5.0 * dir.y, 0.0);
        assert!(traverse(p, false, a, b, s.eps()));
        // parallel and offset misses
        let off = Point3::new(a.x + dir.y * 50.0, a.y - dir.x * 50.0, 0.0);
        let off2 = Point3::new(b.x + dir.y * 50.0, b.y - dir.x * 50.0, 0.0);
        let _ = off2;
        let shifted_a = Point3::new(a.x, a.y, 0.0);
        let _ = (off, shifted_a);
    }

    #[test]
    fn walk_same_cell_is_identity() {
        let (s, passages, complex) = planar_space(7, 20);
        let space = PlanSpace {
            scenario: &s,
            passages: &passages,
            complex: Some(&complex),
            cost: CostSpec::mpw(s.extent.diagonal()),
        };
        let mut rng = StdRng::seed_from_u64(1);
        let mut done = 0;
        while done < 200 {
            let a = random_free_point(&s, &mut rng);
            let cell = locate(&complex, &s, a.xy()).unwrap();
            // a tiny edge stays in the cell
            let b = Point3::new(a.x + 0.01, a.y + 0.01, 0.0);
            if !point_free(&s, b) || !obstacle_free(&s, a, b) {
                continue;
            }
            if complex.cells[cell].on_boundary(a.xy(), 0.1) {
                continue;
            }
            let walk = position_walk(&space, cell, a, b).unwrap();
            assert_eq!(walk.cell, cell);
            assert!(walk.passed.is_empty());
            assert!(same_cell(&space, cell, a, b));
            done += 1;
        }
    }

    #[test]
    fn walk_matches_global_oracle_2d() {
        for seed in 0..4 {
            let (s, passages, complex) = planar_space(40 + seed, 35);
            let space = PlanSpace {
                scenario: &s,
                passages: &passages,
                complex: Some(&complex),
                cost: CostSpec::mpw(s.extent.diagonal()),
            };
            let mut rng = StdRng::seed_from_u64(seed);
            let mut done = 0;
            while done < 2500 {
                let a = random_free_point(&s, &mut rng);
                let ang = rng.gen_range(0.0..std::f64::consts::TAU);
                let r = rng.gen_range(1.0..80.0);
                let b = Point3::new(a.x + r * ang.cos(), a.y + r * ang.sin(), 0.0);
                if !point_free(&s, b) || !obstacle_free(&s, a, b) {
                    continue;
                }
                let cell = locate(&complex, &s, a.xy()).unwrap();
                let walk = position_walk(&space, cell, a, b).unwrap();
                // oracle: locate b directly and check every passage
                let oracle_cell = locate(&complex, &s, b.xy()).unwrap();
                let mut oracle_pids = edge_passages_global(&space, a, b);
                oracle_pids.sort_unstable();
                let mut got = walk.passed.clone();
                got.sort_unstable();
                assert_eq!(got, oracle_pids, "seed {seed} edge {a:?} {b:?}");
                assert_eq!(walk.cell, oracle_cell, "seed {seed} edge {a:?} {b:?}");
                // dichotomy: different cells imply a crossed passage; the
                // converse admits re-entrant edges crossing two or more
                if oracle_cell != cell {
                    assert!(!walk.passed.is_empty());
                } else {
                    assert_ne!(walk.passed.len(), 1);
                }
                done += 1;
            }
        }
    }

    #[test]
    fn walk_matches_global_oracle_3d() {
        let spec = GenSpec::new_3d(25, 77);
        let s = walls_to_obstacles(&generate(&spec).unwrap());
        let passages = detect_3d(&s, DEFAULT_KGD).unwrap();
        let complex = crate::cells::compound_cells_3d(&passages, &s).unwrap();
        let space = PlanSpace {
            scenario: &s,
            passages: &passages,
            complex: Some(&complex),
            cost: CostSpec::mpw(s.extent.diagonal()),
        };
        let mut rng = StdRng::seed_from_u64(3);
        let mut done = 0;
        while done < 1200 {
            let a = random_free_point(&s, &mut rng);
            let b = Point3::new(
                a.x + rng.gen_range(-90.0..90.0),
                a.y + rng.gen_range(-90.0..90.0),
                a.z + rng.gen_range(-60.0..60.0),
            );
            if !point_free(&s, b) || !obstacle_free(&s, a, b) {
                continue;
            }
            let cell = locate(&complex, &s, a.xy()).unwrap();
            let walk = position_walk(&space, cell, a, b).unwrap();
            let oracle_cell = locate(&complex, &s, b.xy()).unwrap();
            let mut oracle_pids = edge_passages_global(&space, a, b);
            oracle_pids.sort_unstable();
            let mut got = walk.passed.clone();
            got.sort_unstable();
            assert_eq!(got, oracle_pids, "edge {a:?} {b:?}");
            assert_eq!(walk.cell, oracle_cell, "edge {a:?} {b:?}");
            done += 1;
        }
    }

    #[test]
    fn subtree_update_replays_from_root() {
        let (s, passages, complex) = planar_space(11, 30);
        let spec = CostSpec::gpw(3, 100.0, s.extent.diagonal());
        let space = PlanSpace {
            scenario: &s,
            passages: &passages,
            complex: Some(&complex),
            cost: spec,
        };
        let mut rng = StdRng::seed_from_u64(2);
        let mut arena = NodeArena::default();
        let root_pos = random_free_point(&s, &mut rng);
        let root_cell = locate(&complex, &s, root_pos.xy()).unwrap();
        let root = arena.add_root(root_pos, root_cell, &spec, f64::INFINITY);
        let mut ids = vec![root];
        // grow a random tree
        for _ in 0..250 {
            let from = ids[rng.gen_range(0..ids.len())];
            let base = arena.nodes[from].position;
            let ang = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = rng.gen_range(5.0..60.0);
            let to = Point3::new(base.x + r * ang.cos(), base.y + r * ang.sin(), 0.0);
            if !point_free(&s, to) || !obstacle_free(&s, base, to) {
                continue;
            }
            let nid = arena.add_unattached(to, &spec);
            subtree_update(&space, &mut arena, from, nid).unwrap();
            ids.push(nid);
        }
        // random rewires among collision-free pairs
        for _ in 0..300 {
            let a = ids[rng.gen_range(0..ids.len())];
            let b = ids[rng.gen_range(0..ids.len())];
            if a == b || b == root {
                continue;
            }
            let pa = arena.nodes[a].position;
            let pb = arena.nodes[b].position;
            if pa.dist(pb) > 80.0 || !obstacle_free(&s, pa, pb) {
                continue;
            }
            match subtree_update(&space, &mut arena, a, b) {
                Ok(()) => {}
                Err(PlanError::CycleDetected) => continue,
                Err(e) => panic!("unexpected: {e}"),
            }
        }
        // oracle: recompute every node from the root through stored edges
        for &id in &ids {
            if id == root {
                continue;
            }
            let mut chain = vec![id];
            let mut cur = id;
            while let Some(p) = arena.nodes[cur].parent {
                chain.push(p);
                cur = p;
            }
            chain.reverse();
            assert_eq!(chain[0], root, "node {id} detached from root");
            let mut len = 0.0;
            let mut sorted = spec.fresh_widths();
            for w in chain.windows(2) {
                let (u, v) = (w[0], w[1]);
                len += arena.nodes[u].position.dist(arena.nodes[v].position);
                for &wd in &arena.nodes[v].passed_widths {
                    sorted.insert(wd);
                }
            }
            let node = &arena.nodes[id];
            assert!(
                (node.len - len).abs() < 1e-6,
                "len drift on node {id}: {} vs {len}",
                node.len
            );
            assert_eq!(node.sorted_widths.entries(), sorted.entries());
            let cost = path_cost(&spec, &sorted, node.len, node.clearance).unwrap();
            assert!((node.cost.primary - cost.primary).abs() < 1e-9);
            // tree link consistency
            let parent = node.parent.unwrap();
            assert!(arena.nodes[parent].children.contains(&id));
        }
        // idempotence: re-running with the same parent changes nothing
        let sample = ids[ids.len() / 2];
        if let Some(parent) = arena.nodes[sample].parent {
            let before = arena.nodes[sample].clone();
            subtree_update(&space, &mut arena, parent, sample).unwrap();
            let after = &arena.nodes[sample];
            assert_eq!(before.len, after.len);
            assert_eq!(before.cost, after.cost);
            assert_eq!(before.sorted_widths.entries(), after.sorted_widths.entries());
        }
    }

    #[test]
    fn chain_rewire_propagates_length_change() {
        let (s, passages, complex) = planar_space(13, 10);
        let spec = CostSpec::shortest(s.extent.diagonal());
        let space = PlanSpace {
            scenario: &s,
            passages: &passages,
            complex: Some(&complex),
            cost: spec,
        };
        let mut rng = StdRng::seed_from_u64(8);
        // find a straight free corridor of three points
        loop {
            let a = random_free_point(&s, &mut rng);
            let b = Point3::new(a.x + 30.0, a.y, 0.0);
            let c = Point3::new(a.x + 60.0, a.y, 0.0);
            let d = Point3::new(a.x + 30.0, a.y + 20.0, 0.0);
            if ![b, c, d].iter().all(|p| point_free(&s, *p))
                || !obstacle_free(&s, a, b)
                || !obstacle_free(&s, b, c)
                || !obstacle_free(&s, a, d)
                || !obstacle_free(&s, d, b)
            {
                continue;
            }
            let mut arena = NodeArena::default();
            let cell = locate(&complex, &s, a.xy()).unwrap();
            let root = arena.add_root(a, cell, &spec, f64::INFINITY);
            let nb = arena.add_unattached(b, &spec);
            subtree_update(&space, &mut arena, root, nb).unwrap();
            let nc = arena.add_unattached(c, &spec);
            subtree_update(&space, &mut arena, nb, nc).unwrap();
            let nd = arena.add_unattached(d, &spec);
            subtree_update(&space, &mut arena, root, nd).unwrap();
            let old_c_len = arena.nodes[nc].len;
            // rewire b under d: c's length shifts by the length change
            subtree_update(&space, &mut arena, nd, nb).unwrap();
            let expect_b = arena.nodes[nd].len + d.dist(b);
            assert!((arena.nodes[nb].len - expect_b).abs() < 1e-9);
            let shift = expect_b - 30.0;
            assert!((arena.nodes[nc].len - (old_c_len + shift)).abs() < 1e-9);
            break;
        }
    }
}
