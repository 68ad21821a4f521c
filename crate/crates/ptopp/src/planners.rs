//! Sampling-based optimal planners over the passage decomposition:
//! RRT* and PRM* with passage-aware costs, the comparison baselines, and
//! path replay reporting.

use crate::cells::{compound_cells_3d, detect_cells, locate, CellComplex};
use crate::costs::{CostSpec, CostValue, SortedWidths};
use crate::env::Scenario;
use crate::geom::Point3;
use crate::passages::{detect_2d, detect_3d, Passage, PassageError, DEFAULT_KGD};
use crate::plancore::{
    attach, edge_passages_global, evaluate_edge, kdtree::NodeIndex, obstacle_free, point_clearance,
    point_free, subtree_update, NodeArena, PlanError, PlanSpace,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sampling retry cap before reporting starvation.
const MAX_SAMPLE_RETRIES: usize = 100_000;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("start position is not in free space")]
    InvalidStart,
    #[error("goal position is not in free space")]
    InvalidGoal,
    #[error("sampling starved after {MAX_SAMPLE_RETRIES} rejections (constraint too tight)")]
    SamplingStarved,
    #[error("roadmap is disconnected around the query points")]
    DisconnectedRoadmap,
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Passages(#[from] PassageError),
    #[error(transparent)]
    Cells(#[from] crate::cells::CellError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    RrtStar,
    PrmStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraversalMode {
    /// Position nodes in Gabriel cells; check only local passage sides.
    CellWalk,
    /// Check every passage for every edge (no decomposition).
    AllPassages,
}

#[derive(Debug, Clone)]
pub struct PlanConfig {
    pub planner: PlannerKind,
    pub cost: CostSpec,
    pub start: Point3,
    pub goal: Point3,
    pub max_valid_samples: usize,
    /// Steer length; also the goal-link radius cap.
    pub eta: f64,
    pub seed: u64,
    pub clearance_constraint: Option<f64>,
    pub sample_height_range: Option<(f64, f64)>,
    pub traversal: TraversalMode,
}

impl PlanConfig {
    pub fn new(planner: PlannerKind, cost: CostSpec, start: Point3, goal: Point3) -> Self {
        Self {
            planner,
            cost,
            start,
            goal,
            max_valid_samples: 2000,
            eta: 50.0,
            seed: 0,
            clearance_constraint: None,
            sample_height_range: None,
            traversal: TraversalMode::CellWalk,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Found,
    NoPath,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanResult {
    pub status: PlanStatus,
    pub path: Vec<Point3>,
    pub cost: CostValue,
    /// Final sorted width vector of the returned path.
    pub p_sigma: Vec<f64>,
    /// Traversed passage ids in path order.
    pub passages: Vec<usize>,
    pub samples: usize,
    pub time_ms: f64,
    /// Best goal cost after each valid sample (tree planners).
    pub trace: Vec<(usize, f64, f64)>,
    /// Final neighbor-search radius.
    pub r_last: f64,
    /// Whether the weight-ratio bound held for this scenario's widths.
    pub weights_ok: bool,
}

impl PlanResult {
    fn no_path(samples: usize, time_ms: f64, r_last: f64, weights_ok: bool) -> Self {
        Self {
            status: PlanStatus::NoPath,
            path: Vec::new(),
            cost: CostValue::INFINITE,
            p_sigma: Vec::new(),
            passages: Vec::new(),
            samples,
            time_ms,
            trace: Vec::new(),
            r_last,
            weights_ok,
        }
    }
}

/// Detection and decomposition results shared by all plans on a scenario.
pub struct Preprocessed {
    pub scenario: Scenario,
    pub passages: Vec<Passage>,
    pub complex: CellComplex,
}

/// Runs passage detection and cell decomposition for planning. The
/// scenario should already include boundary walls.
pub fn preprocess(scenario: Scenario, k_gd: usize) -> Result<Preprocessed, PlannerError> {
    let (passages, complex) = if scenario.is_3d() {
        let passages = detect_3d(&scenario, k_gd)?;
        let complex = compound_cells_3d(&passages, &scenario)?;
        (passages, complex)
    } else {
        let passages = detect_2d(&scenario, k_gd)?;
        let complex = detect_cells(&passages, &scenario)?;
        (passages, complex)
    };
    Ok(Preprocessed {
        scenario,
        passages,
        complex,
    })
}

pub fn preprocess_default(scenario: Scenario) -> Result<Preprocessed, PlannerError> {
    preprocess(scenario, DEFAULT_KGD)
}

/// The RRT*/PRM* connection-radius constant: gamma = 2 (1 + 1/d)^(1/d)
/// (mu(X_free) / zeta_d)^(1/d).
pub fn gamma(scenario: &Scenario) -> f64 {
    let d: f64 = if scenario.is_3d() { 3.0 } else { 2.0 };
    let mu = scenario.free_measure();
    let zeta = if scenario.is_3d() {
        4.0 * std::f64::consts::PI / 3.0
    } else {
        std::f64::consts::PI
    };
    2.0 * (1.0 + 1.0 / d).powf(1.0 / d) * (mu / zeta).powf(1.0 / d)
}

fn sample_free(
    scenario: &Scenario,
    cfg: &PlanConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Point3, PlannerError> {
    let (z_lo, z_hi) = cfg
        .sample_height_range
        .unwrap_or((0.0, scenario.extent.depth));
    for _ in 0..MAX_SAMPLE_RETRIES {
        let p = Point3::new(
            rng.gen_range(0.0..scenario.extent.width),
            rng.gen_range(0.0..scenario.extent.height),
            if scenario.is_3d() {
                if z_hi > z_lo {
                    rng.gen_range(z_lo..z_hi)
                } else {
                    z_lo
                }
            } else {
                0.0
            },
        );
        if !point_free(scenario, p) {
            continue;
        }
        if let Some(c) = cfg.clearance_constraint {
            if point_clearance(scenario, p) < c {
                continue;
            }
        }
        return Ok(p);
    }
    Err(PlannerError::SamplingStarved)
}

fn make_space<'a>(pre: &'a Preprocessed, cfg: &PlanConfig) -> PlanSpace<'a> {
    PlanSpace {
        scenario: &pre.scenario,
        passages: &pre.passages,
        complex: match cfg.traversal {
            TraversalMode::CellWalk => Some(&pre.complex),
            TraversalMode::AllPassages => None,
        },
        cost: cfg.cost,
    }
}

fn scenario_widths(pre: &Preprocessed) -> Vec<f64> {
    pre.passages.iter().map(|p| p.width).collect()
}

/// Dispatches on the configured planner.
pub fn plan(pre: &Preprocessed, cfg: &PlanConfig) -> Result<PlanResult, PlannerError> {
    match cfg.planner {
        PlannerKind::RrtStar => rrt_star(pre, cfg),
        PlannerKind::PrmStar => prm_star(pre, cfg),
    }
}

fn start_cell(pre: &Preprocessed, cfg: &PlanConfig, p: Point3) -> Result<usize, PlannerError> {
    match cfg.traversal {
        TraversalMode::CellWalk => Ok(locate(&pre.complex, &pre.scenario, p.xy())?),
        TraversalMode::AllPassages => Ok(usize::MAX),
    }
}

fn weights_ok(pre: &Preprocessed, cfg: &PlanConfig) -> bool {
    if let crate::costs::CostKind::Gpw { q, ratio } = cfg.cost.kind {
        let mut widths = scenario_widths(pre);
        widths.push(cfg.cost.eps_bar);
        crate::costs::validate_weights(q, ratio, &widths).unwrap_or(false)
    } else {
        true
    }
}

/// RRT* for passage-traversing planning: steered sampling, lexicographic
/// parent choice, rewiring with subtree propagation, and an explicit
/// goal-link step within the shrinking connection radius.
pub fn rrt_star(pre: &Preprocessed, cfg: &PlanConfig) -> Result<PlanResult, PlannerError> {
    let scenario = &pre.scenario;
    if !point_free(scenario, cfg.start) {
        return Err(PlannerError::InvalidStart);
    }
    if !point_free(scenario, cfg.goal) {
        return Err(PlannerError::InvalidGoal);
    }
    let space = make_space(pre, cfg);
    let weights_ok = weights_ok(pre, cfg);
    let dims = if scenario.is_3d() { 3.0 } else { 2.0 };
    let g = gamma(scenario);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let started = std::time::Instant::now();

    let mut arena = NodeArena::default();
    let root_clear = if matches!(cfg.cost.kind, crate::costs::CostKind::MaxClearance) {
        point_clearance(scenario, cfg.start)
    } else {
        f64::INFINITY
    };
    let root = arena.add_root(
        cfg.start,
        start_cell(pre, cfg, cfg.start)?,
        &cfg.cost,
        root_clear,
    );
    let mut index = NodeIndex::new(dims as usize);
    index.insert(cfg.start, root);

    let mut goal_parent: Option<usize> = None;
    let mut best_goal = CostValue::INFINITE;
    let mut trace: Vec<(usize, f64, f64)> = Vec::new();
    let mut r = cfg.eta;
    let mut valid = 1usize;

    while valid < cfg.max_valid_samples {
        let x_rand = sample_free(scenario, cfg, &mut rng)?;
        let (nearest_id, d_near) = index.nearest(x_rand).expect("index nonempty");
        if d_near <= f64::MIN_POSITIVE {
            continue;
        }
        // steer: clip the step to eta
        let from = arena.nodes[nearest_id].position;
        let x_new = if d_near <= cfg.eta {
            x_rand
        } else {
            from.add(x_rand.sub(from).scale(cfg.eta / d_near))
        };
        if !point_free(scenario, x_new) || !obstacle_free(scenario, from, x_new) {
            continue;
        }
        let n = valid as f64;
        r = if valid >= 2 {
            (g * ((n.ln()) / n).powf(1.0 / dims)).min(cfg.eta)
        } else {
            cfg.eta
        };
        let mut near = index.within(x_new, r);
        if !near.contains(&nearest_id) {
            near.push(nearest_id);
        }
        // filter by edge collision once; reused for parent choice and rewire
        let near_free: Vec<usize> = near
            .into_iter()
            .filter(|&c| obstacle_free(scenario, arena.nodes[c].position, x_new))
            .collect();
        if near_free.is_empty() {
            continue;
        }
        // parent minimizing the lexicographic (cost, len), id as tiebreak
        let mut x_min = None;
        let mut best = CostValue::INFINITE;
        for &c in &near_free {
            let eval = evaluate_edge(&space, &arena, c, x_new)?;
            if x_min.is_none() || eval.cost.improves(&best) {
                best = eval.cost;
                x_min = Some(c);
            }
        }
        let x_min = x_min.expect("nonempty candidates");
        let nid = arena.add_unattached(x_new, &cfg.cost);
        subtree_update(&space, &mut arena, x_min, nid)?;
        index.insert(x_new, nid);
        valid += 1;
        // rewire with length regulation
        for &c in &near_free {
            if c == x_min {
                continue;
            }
            let eval = evaluate_edge(&space, &arena, nid, arena.nodes[c].position)?;
            if eval.cost.improves(&arena.nodes[c].cost) {
                match subtree_update(&space, &mut arena, nid, c) {
                    Ok(()) | Err(PlanError::CycleDetected) => {}
                    Err(e) => return Err(e.into()),
                }
            }
        }
        // goal linking within the connection radius
        if x_new.dist(cfg.goal) < r && obstacle_free(scenario, x_new, cfg.goal) {
            let eval = evaluate_edge(&space, &arena, nid, cfg.goal)?;
            if eval.cost.improves(&best_goal) {
                best_goal = eval.cost;
                goal_parent = Some(nid);
            }
        }
        // refresh the goal cost: rewiring may have improved the linked branch
        if let Some(gp) = goal_parent {
            let eval = evaluate_edge(&space, &arena, gp, cfg.goal)?;
            best_goal = eval.cost;
            trace.push((valid, best_goal.primary, best_goal.len));
        }
    }
    let elapsed = started.elapsed().as_secs_f64() * 1000.0;

    let Some(gp) = goal_parent else {
        return Ok(PlanResult::no_path(valid, elapsed, r, weights_ok));
    };
    let final_eval = evaluate_edge(&space, &arena, gp, cfg.goal)?;
    let mut chain = vec![gp];
    let mut cur = gp;
    while let Some(p) = arena.nodes[cur].parent {
        chain.push(p);
        cur = p;
    }
    chain.reverse();
    let mut path: Vec<Point3> = chain.iter().map(|&id| arena.nodes[id].position).collect();
    path.push(cfg.goal);
    let mut passages_seq: Vec<usize> = Vec::new();
    for &id in chain.iter().skip(1) {
        // passed widths are stored per node; recover ids by replaying the edge
        let parent = arena.nodes[id].parent.unwrap();
        let walk = edge_passage_ids(&space, arena.nodes[parent].position, arena.nodes[id].position);
        passages_seq.extend(walk);
    }
    passages_seq.extend(final_eval.passed.iter().copied());
    Ok(PlanResult {
        status: PlanStatus::Found,
        path,
        cost: final_eval.cost,
        p_sigma: final_eval.sorted.entries().to_vec(),
        passages: passages_seq,
        samples: valid,
        time_ms: elapsed,
        trace,
        r_last: r,
        weights_ok,
    })
}

fn edge_passage_ids(space: &PlanSpace, a: Point3, b: Point3) -> Vec<usize> {
    edge_passages_global(space, a, b)
}

/// PRM* for passage-traversing planning: unchanged roadmap construction,
/// then a lexicographic Dijkstra query with incremental cost relaxation.
pub fn prm_star(pre: &Preprocessed, cfg: &PlanConfig) -> Result<PlanResult, PlannerError> {
    let scenario = &pre.scenario;
    if !point_free(scenario, cfg.start) {
        return Err(PlannerError::InvalidStart);
    }
    if !point_free(scenario, cfg.goal) {
        return Err(PlannerError::InvalidGoal);
    }
    let space = make_space(pre, cfg);
    let weights_ok = weights_ok(pre, cfg);
    let dims = if scenario.is_3d() { 3.0 } else { 2.0 };
    let g = gamma(scenario);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let started = std::time::Instant::now();

    // phase 1: roadmap over valid samples
    let n = cfg.max_valid_samples.max(2);
    let mut arena = NodeArena::default();
    let mut index = NodeIndex::new(dims as usize);
    for i in 0..n {
        let p = sample_free(scenario, cfg, &mut rng)?;
        let id = arena.add_unattached(p, &cfg.cost);
        debug_assert_eq!(id, i);
        index.insert(p, id);
    }
    let r = g * ((n as f64).ln() / n as f64).powf(1.0 / dims);
    for i in 0..n {
        let pi = arena.nodes[i].position;
        for j in index.within(pi, r) {
            if j <= i {
                continue;
            }
            let pj = arena.nodes[j].position;
            if obstacle_free(scenario, pi, pj) {
                arena.nodes[i].adjacency.push(j);
                arena.nodes[j].adjacency.push(i);
            }
        }
    }

    // query phase: virtual start node linked to the cheapest visible
    // roadmap node within r, located in cells once
    let root_clear = if matches!(cfg.cost.kind, crate::costs::CostKind::MaxClearance) {
        point_clearance(scenario, cfg.start)
    } else {
        f64::INFINITY
    };
    let root = arena.add_root(
        cfg.start,
        start_cell(pre, cfg, cfg.start)?,
        &cfg.cost,
        root_clear,
    );
    // Dijkstra with lexicographic (cost, len) priority, seeded by every
    // visible roadmap node within radius of the start
    #[derive(PartialEq)]
    struct Key(CostValue, usize);
    impl Eq for Key {}
    impl Ord for Key {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.lex_cmp(&other.0).then(self.1.cmp(&other.1)).reverse()
        }
    }
    impl PartialOrd for Key {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    let mut settled = vec![false; arena.nodes.len()];
    let mut heap = std::collections::BinaryHeap::new();
    for cand in visible_candidates(scenario, &index, &arena, cfg.start, r, root) {
        let eval = evaluate_edge(&space, &arena, root, arena.nodes[cand].position)?;
        if eval.cost.improves(&arena.nodes[cand].cost) {
            attach(&mut arena, root, cand, eval);
            heap.push(Key(arena.nodes[cand].cost, cand));
        }
    }
    let elapsed_no_path = |started: std::time::Instant| started.elapsed().as_secs_f64() * 1000.0;
    if heap.is_empty() {
        return Ok(PlanResult::no_path(n, elapsed_no_path(started), r, weights_ok));
    }
    while let Some(Key(cost, u)) = heap.pop() {
        if settled[u] || arena.nodes[u].cost.lex_cmp(&cost) == std::cmp::Ordering::Less {
            continue;
        }
        settled[u] = true;
        let neighbors = arena.nodes[u].adjacency.clone();
        for v in neighbors {
            if settled[v] {
                continue;
            }
            let eval = evaluate_edge(&space, &arena, u, arena.nodes[v].position)?;
            if eval.cost.improves(&arena.nodes[v].cost) {
                attach(&mut arena, u, v, eval);
                heap.push(Key(arena.nodes[v].cost, v));
            }
        }
    }

    // goal attachment by lexicographic cost among visible settled nodes
    let mut exit: Option<(usize, crate::plancore::EdgeEval)> = None;
    for cand in visible_candidates(scenario, &index, &arena, cfg.goal, r, root) {
        if !settled[cand] {
            continue;
        }
        let eval = evaluate_edge(&space, &arena, cand, cfg.goal)?;
        let better = match &exit {
            None => true,
            Some((_, e)) => eval.cost.improves(&e.cost),
        };
        if better {
            exit = Some((cand, eval));
        }
    }
    let elapsed = started.elapsed().as_secs_f64() * 1000.0;
    let Some((x_gg, exit_eval)) = exit else {
        return Ok(PlanResult::no_path(n, elapsed, r, weights_ok));
    };

    let mut chain = vec![x_gg];
    let mut cur = x_gg;
    while let Some(p) = arena.nodes[cur].parent {
        chain.push(p);
        cur = p;
    }
    chain.reverse();
    let mut path: Vec<Point3> = chain.iter().map(|&id| arena.nodes[id].position).collect();
    path.push(cfg.goal);
    let mut passages_seq: Vec<usize> = Vec::new();
    for w in chain.windows(2) {
        passages_seq.extend(edge_passage_ids(
            &space,
            arena.nodes[w[0]].position,
            arena.nodes[w[1]].position,
        ));
    }
    passages_seq.extend(exit_eval.passed.iter().copied());
    let samples = n;
    Ok(PlanResult {
        status: PlanStatus::Found,
        path,
        cost: exit_eval.cost,
        p_sigma: exit_eval.sorted.entries().to_vec(),
        passages: passages_seq,
        samples,
        time_ms: elapsed,
        trace: vec![(samples, exit_eval.cost.primary, exit_eval.cost.len)],
        r_last: r,
        weights_ok,
    })
}

/// Roadmap nodes within radius visible from `p`; falls back to the nearest
/// visible node when none is within radius.
fn visible_candidates(
    scenario: &Scenario,
    index: &NodeIndex,
    arena: &NodeArena,
    p: Point3,
    r: f64,
    exclude: usize,
) -> Vec<usize> {
    let mut within: Vec<usize> = index
        .within(p, r)
        .into_iter()
        .filter(|&c| c != exclude && obstacle_free(scenario, p, arena.nodes[c].position))
        .collect();
    if !within.is_empty() {
        within.sort_unstable();
        return within;
    }
    // nearest visible fallback
    let mut by_dist: Vec<(f64, usize)> = (0..arena.nodes.len())
        .filter(|&c| c != exclude)
        .map(|c| (arena.nodes[c].position.dist(p), c))
        .collect();
    by_dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (_, c) in by_dist {
        if obstacle_free(scenario, p, arena.nodes[c].position) {
            return vec![c];
        }
    }
    Vec::new()
}

// ---------------------------------------------------------------------------
// Baselines and replay
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Shortest,
    ClearanceConstraint,
    MaxClearance,
}

/// Comparison baselines: shortest length, shortest length under a sample
/// clearance constraint, and maximum clearance as a compatible cost.
pub fn run_baseline(
    pre: &Preprocessed,
    kind: BaselineKind,
    base_cfg: &PlanConfig,
    threshold: Option<f64>,
) -> Result<PlanResult, PlannerError> {
    let eps_bar = base_cfg.cost.eps_bar;
    let mut cfg = base_cfg.clone();
    match kind {
        BaselineKind::Shortest => {
            cfg.cost = CostSpec::shortest(eps_bar);
            cfg.clearance_constraint = None;
        }
        BaselineKind::ClearanceConstraint => {
            cfg.cost = CostSpec::shortest(eps_bar);
            cfg.clearance_constraint = Some(threshold.unwrap_or(10.0));
        }
        BaselineKind::MaxClearance => {
            cfg.cost = CostSpec::max_clearance(eps_bar);
            cfg.clearance_constraint = None;
        }
    }
    plan(pre, &cfg)
}

#[derive(Debug, Clone)]
pub struct Replay {
    /// Traversed passages in path order.
    pub passages: Vec<usize>,
    pub sorted: SortedWidths,
    /// Minimum traversed width, or the padding bound when none.
    pub f_p: f64,
    /// The sorted vector after each path vertex, for prefix queries.
    pub prefix: Vec<SortedWidths>,
}

/// Replays a path through the all-passage traversal check, independent of
/// the cell walk, yielding the ordered passage list and width vector.
pub fn replay_path(pre: &Preprocessed, spec: &CostSpec, path: &[Point3]) -> Replay {
    let space = PlanSpace {
        scenario: &pre.scenario,
        passages: &pre.passages,
        complex: None,
        cost: *spec,
    };
    let mut sorted = spec.fresh_widths();
    let mut passages = Vec::new();
    let mut prefix = vec![sorted.clone()];
    for w in path.windows(2) {
        for pid in edge_passages_global(&space, w[0], w[1]) {
            let width = spec
                .apply_cpw(pre.passages[pid].width)
                .expect("positive widths");
            sorted.insert(width);
            passages.push(pid);
        }
        prefix.push(sorted.clone());
    }
    Replay {
        passages,
        f_p: sorted.min_width(),
        prefix,
        sorted,
    }
}

/// Collision check of a polyline at fixed interpolation resolution.
pub fn path_collision_free(scenario: &Scenario, path: &[Point3], resolution: f64) -> bool {
    for w in path.windows(2) {
        let len = w[0].dist(w[1]);
        let steps = (len / resolution).ceil().max(1.0) as usize;
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            let p = w[0].add(w[1].sub(w[0]).scale(t));
            if !point_free(scenario, p) {
                return false;
            }
        }
    }
    true
}
