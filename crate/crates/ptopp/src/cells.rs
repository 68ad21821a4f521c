//! Gabriel cell decomposition: faces of the passage graph bounded by
//! passage segments and obstacle boundary arcs, with point location and
//! compound cells for 3D planning.

use crate::env::Scenario;
use crate::geom::{
    point_segment_distance, segment_intersection_param, signed_area, ConvexPolygon, Point2,
    Segment2,
};
use crate::passages::Passage;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CellError {
    #[error("inconsistent passage graph: {0}")]
    InconsistentGraph(String),
    #[error("point lies inside an obstacle")]
    InObstacle,
    #[error("point lies outside the map extent")]
    OutOfBounds,
}

/// One boundary side of a cell, in walk order.
#[derive(Debug, Clone)]
pub enum Side {
    /// A passage segment shared with the neighbor cell.
    Passage {
        pid: usize,
        seg: Segment2,
        neighbor: Option<usize>,
    },
    /// Zero-width link where two obstacles touch (wall corners).
    Glue { at: Point2, neighbor: Option<usize> },
    /// Obstacle boundary arc; `chain` runs clockwise along the obstacle.
    /// In 3D the neighbor is the obstacle's footprint cell.
    Arc {
        obstacle: u32,
        chain: Vec<Point2>,
        neighbor: Option<usize>,
    },
}

#[derive(Debug, Clone)]
pub struct GabrielCell {
    pub id: usize,
    pub sides: Vec<Side>,
    /// Midair passages whose base projection crosses this cell (3D).
    pub virtual_sides: Vec<usize>,
    pub is_obstacle_cell: bool,
    /// Boundary walk polygon (counter-clockwise; may carry slits for
    /// bridge edges, resolved by even-odd containment).
    pub polygon: Vec<Point2>,
    pub area: f64,
}

impl GabrielCell {
    pub fn passage_sides(&self) -> impl Iterator<Item = (usize, Option<usize>)> + '_ {
        self.sides.iter().filter_map(|s| match s {
            Side::Passage { pid, neighbor, .. } => Some((*pid, *neighbor)),
            _ => None,
        })
    }

    /// Even-odd containment with boundary tolerance.
    pub fn contains(&self, p: Point2, eps: f64) -> bool {
        if self.on_boundary(p, eps) {
            return true;
        }
        ray_cast(&self.polygon, p)
    }

    pub fn on_boundary(&self, p: Point2, eps: f64) -> bool {
        let n = self.polygon.len();
        (0..n).any(|i| {
            let s = Segment2::new(self.polygon[i], self.polygon[(i + 1) % n]);
            point_segment_distance(p, s) <= eps
        })
    }
}

fn ray_cast(poly: &[Point2], p: Point2) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if x > p.x {
                inside = !inside;
            }
        }
    }
    inside
}

#[derive(Debug, Clone)]
pub struct CellComplex {
    pub cells: Vec<GabrielCell>,
    /// Passage id -> the two incident cell ids.
    pub passage_cells: Vec<(usize, usize)>,
    pub eps: f64,
    pub is_3d: bool,
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum EdgeKind {
    Passage(usize),
    Glue,
}

#[derive(Debug, Clone)]
struct Edge {
    a: u32,
    b: u32,
    /// Attachment on `a` and on `b`.
    pa: Point2,
    pb: Point2,
    kind: EdgeKind,
}

impl Edge {
    fn other(&self, node: u32) -> u32 {
        if node == self.a {
            self.b
        } else {
            self.a
        }
    }

    fn attach(&self, node: u32) -> Point2 {
        if node == self.a {
            self.pa
        } else {
            self.pb
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    edge: usize,
    attach: Point2,
    /// Boundary parameter of the attachment (edge index + fraction, CCW).
    s: f64,
    /// Departure angle measured clockwise from the CCW boundary tangent;
    /// orders stubs sharing one attachment point.
    phi: f64,
}

/// CCW boundary parameter of a point on (or near) the polygon boundary.
fn boundary_param(poly: &ConvexPolygon, p: Point2) -> f64 {
    let verts = poly.vertices();
    let n = verts.len();
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..n {
        let s = Segment2::new(verts[k], verts[(k + 1) % n]);
        let d = point_segment_distance(p, s);
        if d < best.0 {
            let len2 = s.len() * s.len();
            let t = if len2 > 0.0 {
                (p.sub(s.a).dot(s.b.sub(s.a)) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            best = (d, k as f64 + t);
        }
    }
    best.1 % n as f64
}

/// Direction of CCW boundary travel at parameter `s`.
fn ccw_tangent(poly: &ConvexPolygon, s: f64) -> Point2 {
    let verts = poly.vertices();
    let n = verts.len();
    let k = (s.floor() as usize).min(n - 1);
    verts[(k + 1) % n].sub(verts[k])
}

/// Gabriel cell detection: faces of the passage graph enumerated by the
/// rotational sweep with directed-edge visit marks. Adjacency lists are
/// ordered by the angular comparer applied to segment attachment points,
/// which stays correct for elongated wall slabs where centroid directions
/// would misorder the sweep.
pub fn detect_cells(passages: &[Passage], scenario: &Scenario) -> Result<CellComplex, CellError> {
    build_complex(passages, scenario, false)
}

fn build_complex(
    passages: &[Passage],
    scenario: &Scenario,
    with_footprint_cells: bool,
) -> Result<CellComplex, CellError> {
    let eps = scenario.eps();
    let m = scenario.obstacles.len();
    let mut edges: Vec<Edge> = Vec::new();
    for (pid, p) in passages.iter().enumerate() {
        edges.push(Edge {
            a: p.i,
            b: p.j,
            pa: p.seg.a,
            pb: p.seg.b,
            kind: EdgeKind::Passage(pid),
        });
    }
    // zero-width glue links between touching obstacles keep corner faces
    // closed; in practice these are the wall corners
    for i in 0..m as u32 {
        for j in (i + 1)..m as u32 {
            let oi = &scenario.obstacles[i as usize];
            let oj = &scenario.obstacles[j as usize];
            let (ilo, ihi) = oi.footprint.aabb();
            let (jlo, jhi) = oj.footprint.aabb();
            if ihi.x < jlo.x - eps
                || jhi.x < ilo.x - eps
                || ihi.y < jlo.y - eps
                || jhi.y < ilo.y - eps
            {
                continue;
            }
            if let Ok((pa, pb, d)) =
                crate::geom::obstacle_distance(&oi.footprint, &oj.footprint, eps)
            {
                if d <= eps {
                    edges.push(Edge {
                        a: i,
                        b: j,
                        pa,
                        pb,
                        kind: EdgeKind::Glue,
                    });
                }
            }
        }
    }

    // stub lists per obstacle in clockwise boundary order: the face sweep
    // walks each obstacle clockwise, so consecutive stubs bound an
    // attachment-free boundary arc
    let mut adj: Vec<Vec<Entry>> = vec![Vec::new(); m];
    for (eid, e) in edges.iter().enumerate() {
        for node in [e.a, e.b] {
            let attach = e.attach(node);
            let other_attach = e.attach(e.other(node));
            let out_dir = if other_attach.dist(attach) > eps {
                other_attach.sub(attach)
            } else {
                // glue point: aim at the other obstacle's centroid
                scenario.obstacle(e.other(node)).centroid.sub(attach)
            };
            let footprint = &scenario.obstacles[node as usize].footprint;
            let s = boundary_param(footprint, attach);
            let phi = rel_angle_cw(out_dir, ccw_tangent(footprint, s));
            adj[node as usize].push(Entry {
                edge: eid,
                attach,
                s,
                phi,
            });
        }
    }
    for list in adj.iter_mut() {
        list.sort_by(|x, y| {
            if x.attach == y.attach {
                return x
                    .phi
                    .partial_cmp(&y.phi)
                    .unwrap_or(std::cmp::Ordering::Equal);
            }
            y.s.partial_cmp(&x.s).unwrap_or(std::cmp::Ordering::Equal)
        });
    }

    // rotational face sweep over directed edges
    let mut visited: Vec<[bool; 2]> = vec![[false; 2]; edges.len()];
    let dir_of = |eid: usize, from: u32| -> usize {
        if edges[eid].a == from {
            0
        } else {
            1
        }
    };
    struct Step {
        node: u32,
        entry: usize,
    }
    let mut faces: Vec<Vec<Step>> = Vec::new();
    for start_node in 0..m as u32 {
        for start_entry in 0..adj[start_node as usize].len() {
            let eid = adj[start_node as usize][start_entry].edge;
            if visited[eid][dir_of(eid, start_node)] {
                continue;
            }
            let mut steps: Vec<Step> = Vec::new();
            let mut u = start_node;
            let mut entry = start_entry;
            loop {
                let eid = adj[u as usize][entry].edge;
                let d = dir_of(eid, u);
                if visited[eid][d] {
                    break;
                }
                visited[eid][d] = true;
                steps.push(Step { node: u, entry });
                let v = edges[eid].other(u);
                let back = adj[v as usize]
                    .iter()
                    .position(|en| en.edge == eid)
                    .ok_or_else(|| {
                        CellError::InconsistentGraph("edge missing from adjacency".into())
                    })?;
                entry = (back + 1) % adj[v as usize].len();
                u = v;
            }
            if !steps.is_empty() {
                faces.push(steps);
            }
        }
    }
    if let Some((eid, _)) = visited
        .iter()
        .enumerate()
        .find(|(_, v)| !(v[0] && v[1]))
    {
        return Err(CellError::InconsistentGraph(format!(
            "directed edge {eid} never closed into a face"
        )));
    }

    // materialize face boundary polygons
    struct RawCell {
        sides: Vec<Side>,
        polygon: Vec<Point2>,
        area: f64,
        edge_slots: Vec<(usize, usize)>, // (edge id, side index)
    }
    let mut raw: Vec<RawCell> = Vec::new();
    for steps in &faces {
        let k = steps.len();
        let mut sides: Vec<Side> = Vec::new();
        let mut polygon: Vec<Point2> = Vec::new();
        let mut edge_slots = Vec::new();
        for t in 0..k {
            let s = &steps[t];
            let eid = adj[s.node as usize][s.entry].edge;
            let e = &edges[eid];
            let from = e.attach(s.node);
            let to = e.attach(e.other(s.node));
            edge_slots.push((eid, sides.len()));
            match e.kind {
                EdgeKind::Passage(pid) => sides.push(Side::Passage {
                    pid,
                    seg: Segment2::new(from, to),
                    neighbor: None,
                }),
                EdgeKind::Glue => sides.push(Side::Glue {
                    at: from,
                    neighbor: None,
                }),
            }
            push_point(&mut polygon, from, eps);
            push_point(&mut polygon, to, eps);
            // arc along the next step's obstacle boundary; entry 0 means
            // the walk crossed the stub-list seam, so coincident
            // attachments wrap the full boundary loop instead of pinching
            let next = &steps[(t + 1) % k];
            let arc_from = to;
            let arc_to = adj[next.node as usize][next.entry].attach;
            let wrapped = next.entry == 0;
            let footprint = &scenario.obstacles[next.node as usize].footprint;
            if !wrapped && arc_from.dist(arc_to) <= eps {
                continue; // shared attachment point, face pinches here
            }
            let chain = arc_cw(footprint, arc_from, arc_to, wrapped, eps);
            for q in chain.iter().skip(1) {
                push_point(&mut polygon, *q, eps);
            }
            sides.push(Side::Arc {
                obstacle: next.node,
                chain,
                neighbor: None,
            });
        }
        while polygon.len() > 1 && polygon[0].dist(polygon[polygon.len() - 1]) <= eps {
            polygon.pop();
        }
        let area = signed_area(&polygon);
        raw.push(RawCell {
            sides,
            polygon,
            area,
            edge_slots,
        });
    }

    // the outer face is the largest-magnitude one, oriented opposite to
    // every interior face; drop it and reindex survivors
    let outer = (0..raw.len())
        .max_by(|&a, &b| {
            raw[a]
                .area
                .abs()
                .partial_cmp(&raw[b].area.abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .ok_or_else(|| CellError::InconsistentGraph("no faces".into()))?;
    let outer_sign = raw[outer].area.signum();
    if raw
        .iter()
        .enumerate()
        .any(|(f, r)| f != outer && r.area.signum() == outer_sign)
    {
        return Err(CellError::InconsistentGraph(
            "multiple faces share the outer orientation".into(),
        ));
    }
    // store interior polygons counter-clockwise
    for (f, r) in raw.iter_mut().enumerate() {
        if f != outer && r.area < 0.0 {
            r.polygon.reverse();
            r.area = -r.area;
        }
    }
    let keep: Vec<usize> = (0..raw.len()).filter(|&f| f != outer).collect();
    let mut remap: Vec<Option<usize>> = vec![None; raw.len()];
    for (new_id, &old) in keep.iter().enumerate() {
        remap[old] = Some(new_id);
    }

    // resolve neighbors across edges
    let mut edge_faces: Vec<Vec<(usize, usize)>> = vec![Vec::new(); edges.len()];
    for (f, cell) in raw.iter().enumerate() {
        for &(eid, slot) in &cell.edge_slots {
            edge_faces[eid].push((f, slot));
        }
    }
    let mut passage_cells: Vec<(usize, usize)> = vec![(usize::MAX, usize::MAX); passages.len()];
    for (eid, uses) in edge_faces.iter().enumerate() {
        if uses.len() != 2 {
            return Err(CellError::InconsistentGraph(format!(
                "edge {eid} used by {} face sides",
                uses.len()
            )));
        }
        let (f0, s0) = uses[0];
        let (f1, s1) = uses[1];
        let n0 = remap[f1];
        let n1 = remap[f0];
        set_neighbor(&mut raw[f0].sides[s0], n0);
        set_neighbor(&mut raw[f1].sides[s1], n1);
        if let EdgeKind::Passage(pid) = edges[eid].kind {
            if let (Some(c0), Some(c1)) = (remap[f0], remap[f1]) {
                passage_cells[pid] = (c0, c1);
            }
        }
    }

    let mut cells: Vec<GabrielCell> = keep
        .iter()
        .enumerate()
        .map(|(new_id, &old)| {
            let r = &raw[old];
            GabrielCell {
                id: new_id,
                sides: r.sides.clone(),
                virtual_sides: Vec::new(),
                is_obstacle_cell: false,
                polygon: r.polygon.clone(),
                area: r.area,
            }
        })
        .collect();

    // obstacles without any incident edge sit as holes inside some cell;
    // account their area so the partition bookkeeping stays consistent
    let mut involved = vec![false; m];
    for e in &edges {
        involved[e.a as usize] = true;
        involved[e.b as usize] = true;
    }
    for (idx, o) in scenario.obstacles.iter().enumerate() {
        if involved[idx] || o.is_wall {
            continue;
        }
        if let Some(cell) = cells.iter_mut().find(|c| ray_cast(&c.polygon, o.centroid)) {
            cell.area -= o.footprint.area();
        }
    }

    let mut complex = CellComplex {
        cells,
        passage_cells,
        eps,
        is_3d: false,
    };

    if with_footprint_cells {
        attach_footprint_cells(&mut complex, scenario, &involved);
        complex.is_3d = true;
    }
    Ok(complex)
}

/// Angle of `v` measured clockwise from `anchor`.
fn rel_angle_cw(v: Point2, anchor: Point2) -> f64 {
    let base = anchor.y.atan2(anchor.x);
    (base - v.y.atan2(v.x)).rem_euclid(std::f64::consts::TAU)
}

fn set_neighbor(side: &mut Side, n: Option<usize>) {
    match side {
        Side::Passage { neighbor, .. } => *neighbor = n,
        Side::Glue { neighbor, .. } => *neighbor = n,
        Side::Arc { neighbor, .. } => *neighbor = n,
    }
}

fn push_point(polygon: &mut Vec<Point2>, p: Point2, eps: f64) {
    if polygon.last().map_or(true, |q| q.dist(p) > eps) {
        polygon.push(p);
    }
}

/// Clockwise boundary walk from `from` to `to` on a CCW convex polygon,
/// returning the full chain including both endpoints. `wrapped` marks arcs
/// crossing the stub-list seam: for coincident endpoints it forces the
/// full boundary loop instead of a zero-length arc.
fn arc_cw(poly: &ConvexPolygon, from: Point2, to: Point2, wrapped: bool, eps: f64) -> Vec<Point2> {
    let verts = poly.vertices();
    let n = verts.len();
    let sf = boundary_param(poly, from);
    let st = boundary_param(poly, to);
    let mut chain = vec![from];
    // clockwise means decreasing boundary parameter (mod n)
    let mut span = (sf - st).rem_euclid(n as f64);
    if span <= 1e-12 {
        if wrapped {
            span = n as f64;
        } else {
            chain.push(to);
            return chain;
        }
    }
    let mut k = sf.floor();
    if (sf - k).abs() <= 1e-9 {
        k -= 1.0;
    }
    let mut travelled = (sf - k).rem_euclid(n as f64);
    while travelled < span - 1e-9 {
        let idx = k.rem_euclid(n as f64) as usize;
        push_point(&mut chain, verts[idx], eps);
        k -= 1.0;
        travelled += 1.0;
    }
    push_point(&mut chain, to, eps);
    if chain.len() == 1 {
        chain.push(to);
    }
    chain
}

/// Adds obstacle footprints as cells and mirrors the neighboring arcs so
/// the projection walk can step through footprints (3D compound cells).
fn attach_footprint_cells(complex: &mut CellComplex, scenario: &Scenario, involved: &[bool]) {
    let m = scenario.obstacles.len();
    let mut footprint_cell: Vec<Option<usize>> = vec![None; m];
    let base_count = complex.cells.len();
    let mut next_id = base_count;
    for (idx, o) in scenario.obstacles.iter().enumerate() {
        if o.is_wall || !involved[idx] {
            continue;
        }
        footprint_cell[idx] = Some(next_id);
        complex.cells.push(GabrielCell {
            id: next_id,
            sides: Vec::new(),
            virtual_sides: Vec::new(),
            is_obstacle_cell: true,
            polygon: o.footprint.vertices().to_vec(),
            area: o.footprint.area(),
        });
        next_id += 1;
    }
    // mirror arcs: base cell <-> footprint cell
    for cid in 0..base_count {
        let mut mirrored: Vec<(usize, Side)> = Vec::new();
        for side in &mut complex.cells[cid].sides {
            if let Side::Arc {
                obstacle,
                chain,
                neighbor,
            } = side
            {
                if let Some(fc) = footprint_cell[*obstacle as usize] {
                    *neighbor = Some(fc);
                    let mut rev = chain.clone();
                    rev.reverse();
                    mirrored.push((
                        fc,
                        Side::Arc {
                            obstacle: *obstacle,
                            chain: rev,
                            neighbor: Some(cid),
                        },
                    ));
                }
            }
        }
        for (fc, side) in mirrored {
            complex.cells[fc].sides.push(side);
        }
    }
}

/// Compound cell decomposition for 3D: base cells from ground passages,
/// obstacle footprints as cells, and midair passages attached as virtual
/// sides of every cell their projection crosses.
pub fn compound_cells_3d(
    passages: &[Passage],
    scenario: &Scenario,
) -> Result<CellComplex, CellError> {
    let eps = scenario.eps();
    let base: Vec<Passage> = passages.iter().filter(|p| p.h_lo <= eps).cloned().collect();
    let base_ids: Vec<usize> = passages
        .iter()
        .enumerate()
        .filter(|(_, p)| p.h_lo <= eps)
        .map(|(i, _)| i)
        .collect();
    let mut complex = build_complex(&base, scenario, true)?;
    // reindex base passage ids to the caller's full passage list
    let mut passage_cells = vec![(usize::MAX, usize::MAX); passages.len()];
    for (local, &global) in base_ids.iter().enumerate() {
        passage_cells[global] = complex.passage_cells[local];
    }
    complex.passage_cells = passage_cells;
    for cell in &mut complex.cells {
        for side in &mut cell.sides {
            if let Side::Passage { pid, .. } = side {
                *pid = base_ids[*pid];
            }
        }
    }
    // attach midair passages as virtual sides of crossed cells
    for (pid, p) in passages.iter().enumerate() {
        if p.h_lo <= eps {
            continue;
        }
        let start = match locate(&complex, scenario, p.seg.midpoint()) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let mut crossed = cells_crossed(&complex, start, Segment2::new(p.seg.midpoint(), p.seg.a));
        crossed.extend(cells_crossed(
            &complex,
            start,
            Segment2::new(p.seg.midpoint(), p.seg.b),
        ));
        for cid in crossed {
            if !complex.cells[cid].virtual_sides.contains(&pid) {
                complex.cells[cid].virtual_sides.push(pid);
            }
        }
    }
    for cell in &mut complex.cells {
        cell.virtual_sides.sort_unstable();
    }
    Ok(complex)
}

/// Ordered cells crossed by a planar segment starting from `start`,
/// including the start cell, stepping across passage and arc sides.
pub fn cells_crossed(complex: &CellComplex, start: usize, seg: Segment2) -> Vec<usize> {
    let mut out = vec![start];
    let mut cur = start;
    let mut t_cur = 0.0_f64;
    let t_tol = 1e-9;
    let limit = 4 * complex.cells.len() + 8;
    for _ in 0..limit {
        let mut best: Option<(f64, usize)> = None;
        for side in &complex.cells[cur].sides {
            let (geoms, neighbor): (Vec<Segment2>, Option<usize>) = match side {
                Side::Passage { seg: pseg, neighbor, .. } => (vec![*pseg], *neighbor),
                Side::Glue { .. } => continue,
                Side::Arc { chain, neighbor, .. } => (
                    chain.windows(2).map(|w| Segment2::new(w[0], w[1])).collect(),
                    *neighbor,
                ),
            };
            let Some(nb) = neighbor else { continue };
            for g in geoms {
                if let Some(t) = segment_intersection_param(seg, g, complex.eps) {
                    if t > t_cur + t_tol && best.map_or(true, |(bt, _)| t < bt) {
                        best = Some((t, nb));
                    }
                }
            }
        }
        match best {
            Some((t, nb)) => {
                t_cur = t;
                cur = nb;
                if !out.contains(&cur) {
                    out.push(cur);
                }
            }
            None => break,
        }
    }
    out
}

/// Point location: linear scan with even-odd containment; boundary points
/// resolve to the lowest cell id.
pub fn locate(complex: &CellComplex, scenario: &Scenario, p: Point2) -> Result<usize, CellError> {
    let eps = complex.eps;
    if p.x < -eps
        || p.y < -eps
        || p.x > scenario.extent.width + eps
        || p.y > scenario.extent.height + eps
    {
        return Err(CellError::OutOfBounds);
    }
    if !complex.is_3d {
        for o in &scenario.obstacles {
            if !o.is_wall && o.footprint.contains(p, -eps) {
                return Err(CellError::InObstacle);
            }
        }
    }
    for cell in &complex.cells {
        if complex.is_3d && cell.is_obstacle_cell {
            continue;
        }
        if cell.contains(p, eps) {
            return Ok(cell.id);
        }
    }
    if complex.is_3d {
        // projections over obstacles locate on the footprint cell
        for cell in &complex.cells {
            if cell.is_obstacle_cell && cell.contains(p, eps) {
                return Ok(cell.id);
            }
        }
    }
    Err(CellError::OutOfBounds)
}
