//! Scenario model: obstacle maps, random generation matching the
//! experimental setups, wall processing, and JSON serialization.

use crate::geom::{obstacle_distance, ConvexPolygon, Point2, EPS_FACTOR};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// Thickness of the boundary wall slabs, in map units.
pub const WALL_THICKNESS: f64 = 1.0;

/// Rejection cap for placement sampling.
const MAX_REJECTIONS: usize = 100_000;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("could not place obstacle {index} after {MAX_REJECTIONS} rejections (map too dense)")]
    PlacementFailure { index: usize },
    #[error("scenario parse error: {0}")]
    ParseError(String),
    #[error("scenario invariant violated (obstacle {id}): {reason}")]
    InvariantViolation { id: u32, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Map extent; `depth` is used only for 3D scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub width: f64,
    pub height: f64,
    pub depth: f64,
}

impl Extent {
    pub fn planar(width: f64, height: f64) -> Self {
        Self {
            width,
            height,
            depth: 0.0,
        }
    }

    pub fn spatial(width: f64, height: f64, depth: f64) -> Self {
        Self {
            width,
            height,
            depth,
        }
    }

    /// Default experimental map: 1000 x 600 (x 400 in 3D).
    pub fn default_for(dims: u8) -> Self {
        if dims == 3 {
            Self::spatial(1000.0, 600.0, 400.0)
        } else {
            Self::planar(1000.0, 600.0)
        }
    }

    pub fn diagonal(&self) -> f64 {
        (self.width * self.width + self.height * self.height + self.depth * self.depth).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub id: u32,
    pub footprint: ConvexPolygon,
    /// Prism height in 3D scenarios; `f64::INFINITY` semantically in 2D
    /// (stored as the map depth when serialized).
    pub height: f64,
    pub centroid: Point2,
    pub is_wall: bool,
}

impl Obstacle {
    pub fn new(id: u32, footprint: ConvexPolygon, height: f64) -> Self {
        let centroid = footprint.centroid();
        Self {
            id,
            footprint,
            height,
            centroid,
            is_wall: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Uniform,
    Gaussian,
}

/// Generation spec for random square-obstacle scenarios.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenSpec {
    pub m: usize,
    pub side_range: (f64, f64),
    pub placement: Placement,
    pub dims: u8,
    pub height_range: (f64, f64),
    pub seed: u64,
    pub extent: Extent,
}

impl GenSpec {
    pub fn new_2d(m: usize, seed: u64) -> Self {
        Self {
            m,
            side_range: (20.0, 60.0),
            placement: Placement::Uniform,
            dims: 2,
            height_range: (0.0, 0.0),
            seed,
            extent: Extent::default_for(2),
        }
    }

    pub fn new_3d(m: usize, seed: u64) -> Self {
        Self {
            m,
            side_range: (20.0, 60.0),
            placement: Placement::Uniform,
            dims: 3,
            height_range: (0.0, 400.0),
            seed,
            extent: Extent::default_for(3),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub dims: u8,
    pub extent: Extent,
    pub seed: u64,
    pub obstacles: Vec<Obstacle>,
    pub walls_as_obstacles: bool,
}

impl Scenario {
    /// Geometric tolerance for this map.
    pub fn eps(&self) -> f64 {
        EPS_FACTOR * self.extent.diagonal()
    }

    pub fn is_3d(&self) -> bool {
        self.dims == 3
    }

    pub fn obstacle(&self, id: u32) -> &Obstacle {
        &self.obstacles[id as usize]
    }

    /// Free-space measure: map area (2D) or volume (3D) minus obstacles.
    pub fn free_measure(&self) -> f64 {
        if self.is_3d() {
            let total = self.extent.width * self.extent.height * self.extent.depth;
            let occupied: f64 = self
                .obstacles
                .iter()
                .filter(|o| !o.is_wall)
                .map(|o| o.footprint.area() * o.height.min(self.extent.depth))
                .sum();
            (total - occupied).max(0.0)
        } else {
            let total = self.extent.width * self.extent.height;
            let occupied: f64 = self
                .obstacles
                .iter()
                .filter(|o| !o.is_wall)
                .map(|o| o.footprint.area())
                .sum();
            (total - occupied).max(0.0)
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let eps = self.eps();
        for (idx, o) in self.obstacles.iter().enumerate() {
            if o.id as usize != idx {
                return Err(EnvError::InvariantViolation {
                    id: o.id,
                    reason: format!("id does not match position {idx}"),
                });
            }
            if o.centroid.dist(o.footprint.centroid()) > eps {
                return Err(EnvError::InvariantViolation {
                    id: o.id,
                    reason: "cached centroid mismatch".into(),
                });
            }
            let slack = if o.is_wall { WALL_THICKNESS + eps } else { eps };
            let (lo, hi) = o.footprint.aabb();
            if lo.x < -slack
                || lo.y < -slack
                || hi.x > self.extent.width + slack
                || hi.y > self.extent.height + slack
            {
                return Err(EnvError::InvariantViolation {
                    id: o.id,
                    reason: "outside map extent".into(),
                });
            }
            if self.is_3d() && !o.is_wall && (o.height < 0.0 || o.height > self.extent.depth + eps)
            {
                return Err(EnvError::InvariantViolation {
                    id: o.id,
                    reason: "height outside [0, depth]".into(),
                });
            }
        }
        for i in 0..self.obstacles.len() {
            for j in (i + 1)..self.obstacles.len() {
                if obstacle_distance(
                    &self.obstacles[i].footprint,
                    &self.obstacles[j].footprint,
                    eps,
                )
                .is_err()
                {
                    return Err(EnvError::InvariantViolation {
                        id: self.obstacles[j].id,
                        reason: format!("overlaps obstacle {}", self.obstacles[i].id),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Random scenario generation: m non-overlapping squares with uniform
/// rotation in [0, pi/2), placed by rejection sampling. Deterministic
/// under the spec seed.
pub fn generate(spec: &GenSpec) -> Result<Scenario, EnvError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let extent = spec.extent;
    let mut obstacles: Vec<Obstacle> = Vec::with_capacity(spec.m);
    let eps = EPS_FACTOR * extent.diagonal();
    for index in 0..spec.m {
        let mut rejections = 0;
        loop {
            if rejections >= MAX_REJECTIONS {
                return Err(EnvError::PlacementFailure { index });
            }
            let side = if spec.side_range.0 == spec.side_range.1 {
                spec.side_range.0
            } else {
                rng.gen_range(spec.side_range.0..spec.side_range.1)
            };
            let angle = rng.gen_range(0.0..std::f64::consts::FRAC_PI_2);
            // circumradius keeps the rotated square inside the extent
            let r = side / std::f64::consts::SQRT_2;
            let (cx, cy) = match spec.placement {
                Placement::Uniform => (
                    rng.gen_range(r..extent.width - r),
                    rng.gen_range(r..extent.height - r),
                ),
                Placement::Gaussian => {
                    let sx = extent.width / 4.0;
                    let sy = extent.height / 4.0;
                    (
                        gaussian(&mut rng, extent.width / 2.0, sx),
                        gaussian(&mut rng, extent.height / 2.0, sy),
                    )
                }
            };
            let height = if spec.dims == 3 {
                if spec.height_range.0 == spec.height_range.1 {
                    spec.height_range.0
                } else {
                    rng.gen_range(spec.height_range.0..spec.height_range.1)
                }
            } else {
                extent.depth
            };
            let poly = rotated_square(cx, cy, side, angle);
            let (lo, hi) = poly.aabb();
            let fits = lo.x >= 0.0 && lo.y >= 0.0 && hi.x <= extent.width && hi.y <= extent.height;
            let clear = fits
                && obstacles
                    .iter()
                    .all(|o| match obstacle_distance(&o.footprint, &poly, eps) {
                        Ok((_, _, d)) => d > eps,
                        Err(_) => false,
                    });
            if clear {
                obstacles.push(Obstacle::new(index as u32, poly, height));
                break;
            }
            rejections += 1;
        }
    }
    Ok(Scenario {
        dims: spec.dims,
        extent,
        seed: spec.seed,
        obstacles,
        walls_as_obstacles: false,
    })
}

fn gaussian(rng: &mut ChaCha8Rng, mean: f64, sigma: f64) -> f64 {
    // Box-Muller; one draw per call keeps the stream layout simple
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    mean + sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn rotated_square(cx: f64, cy: f64, side: f64, angle: f64) -> ConvexPolygon {
    let h = side / 2.0;
    let (s, c) = angle.sin_cos();
    let rot = |x: f64, y: f64| Point2::new(cx + x * c - y * s, cy + x * s + y * c);
    ConvexPolygon::new(vec![rot(-h, -h), rot(h, -h), rot(h, h), rot(-h, h)])
        .expect("rotated square is convex")
}

/// Appends four thin boundary slabs as obstacles with inward faces on the
/// map borders. In 3D the walls span the full depth. Adjacent slabs touch
/// corner-to-corner without overlapping.
pub fn walls_to_obstacles(s: &Scenario) -> Scenario {
    let mut out = s.clone();
    let t = WALL_THICKNESS;
    let w = s.extent.width;
    let h = s.extent.height;
    let height = if s.is_3d() { s.extent.depth } else { s.extent.depth };
    let rect = |x0: f64, y0: f64, x1: f64, y1: f64| {
        ConvexPolygon::new(vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ])
        .expect("wall slab is convex")
    };
    let base = s.obstacles.len() as u32;
    let slabs = [
        rect(-t, -t, w + t, 0.0),    // bottom, inward face y = 0
        rect(-t, h, w + t, h + t),   // top, inward face y = h
        rect(-t, 0.0, 0.0, h),       // left, inward face x = 0
        rect(w, 0.0, w + t, h),      // right, inward face x = w
    ];
    for (k, slab) in slabs.into_iter().enumerate() {
        let mut o = Obstacle::new(base + k as u32, slab, height);
        o.is_wall = true;
        out.obstacles.push(o);
    }
    out.walls_as_obstacles = true;
    out
}

// ---------------------------------------------------------------------------
// Serialization (field order fixed for golden-file stability)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ObstacleFile {
    id: u32,
    vertices: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    height: Option<f64>,
    #[serde(default, skip_serializing_if = "is_false")]
    wall: bool,
}

fn is_false(b: &bool) -> bool {
    !b
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    version: u32,
    dims: u8,
    extent: Vec<f64>,
    seed: u64,
    obstacles: Vec<ObstacleFile>,
    walls: bool,
}

pub fn to_json(s: &Scenario) -> String {
    let file = ScenarioFile {
        version: 1,
        dims: s.dims,
        extent: if s.is_3d() {
            vec![s.extent.width, s.extent.height, s.extent.depth]
        } else {
            vec![s.extent.width, s.extent.height]
        },
        seed: s.seed,
        obstacles: s
            .obstacles
            .iter()
            .map(|o| ObstacleFile {
                id: o.id,
                vertices: o.footprint.vertices().iter().map(|v| [v.x, v.y]).collect(),
                height: if s.is_3d() { Some(o.height) } else { None },
                wall: o.is_wall,
            })
            .collect(),
        walls: s.walls_as_obstacles,
    };
    serde_json::to_string_pretty(&file).expect("scenario serializes")
}

pub fn from_json(text: &str) -> Result<Scenario, EnvError> {
    let file: ScenarioFile =
        serde_json::from_str(text).map_err(|e| EnvError::ParseError(e.to_string()))?;
    if file.dims != 2 && file.dims != 3 {
        return Err(EnvError::ParseError(format!("bad dims {}", file.dims)));
    }
    let extent = match (file.dims, file.extent.as_slice()) {
        (2, [w, h]) => Extent::planar(*w, *h),
        (3, [w, h, d]) => Extent::spatial(*w, *h, *d),
        _ => {
            return Err(EnvError::ParseError(
                "extent length does not match dims".into(),
            ))
        }
    };
    let mut obstacles = Vec::with_capacity(file.obstacles.len());
    for ob in file.obstacles {
        let verts = ob
            .vertices
            .iter()
            .map(|v| Point2::new(v[0], v[1]))
            .collect();
        let poly = ConvexPolygon::new(verts).map_err(|e| EnvError::InvariantViolation {
            id: ob.id,
            reason: e.to_string(),
        })?;
        let height = ob.height.unwrap_or(extent.depth);
        let mut o = Obstacle::new(ob.id, poly, height);
        o.is_wall = ob.wall;
        obstacles.push(o);
    }
    let scenario = Scenario {
        dims: file.dims,
        extent,
        seed: file.seed,
        obstacles,
        walls_as_obstacles: file.walls,
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn save(s: &Scenario, path: &Path) -> Result<(), EnvError> {
    std::fs::write(path, to_json(s))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Scenario, EnvError> {
    let text = std::fs::read_to_string(path)?;
    from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_fixed_square() {
        let mut spec = GenSpec::new_2d(1, 42);
        spec.side_range = (40.0, 40.0);
        let s = generate(&spec).unwrap();
        assert_eq!(s.obstacles.len(), 1);
        let area = s.obstacles[0].footprint.area();
        assert!((area - 1600.0).abs() < 1e-6);
        let (lo, hi) = s.obstacles[0].footprint.aabb();
        assert!(lo.x >= 0.0 && lo.y >= 0.0);
        assert!(hi.x <= 1000.0 && hi.y <= 600.0);
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let spec = GenSpec::new_2d(25, 9);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(to_json(&a), to_json(&b));
    }

    #[test]
    fn generation_audit_disjoint_and_inside() {
        for seed in 0..50 {
            let spec = GenSpec::new_2d(40, seed);
            let s = generate(&spec).unwrap();
            s.validate().unwrap();
            let eps = s.eps();
            let mut min_d = f64::INFINITY;
            for i in 0..s.obstacles.len() {
                for j in (i + 1)..s.obstacles.len() {
                    let (_, _, d) = obstacle_distance(
                        &s.obstacles[i].footprint,
                        &s.obstacles[j].footprint,
                        eps,
                    )
                    .unwrap();
                    min_d = min_d.min(d);
                }
            }
            assert!(min_d > 0.0, "seed {seed} produced touching obstacles");
        }
    }

    #[test]
    fn walls_have_inward_faces_on_borders() {
        let spec = GenSpec::new_2d(3, 1);
        let s = walls_to_obstacles(&generate(&spec).unwrap());
        assert_eq!(s.obstacles.len(), 7);
        assert!(s.walls_as_obstacles);
        let walls: Vec<&Obstacle> = s.obstacles.iter().filter(|o| o.is_wall).collect();
        assert_eq!(walls.len(), 4);
        let mut faces: Vec<f64> = Vec::new();
        for w in &walls {
            let (lo, hi) = w.footprint.aabb();
            // one AABB side must lie exactly on a map border
            if (hi.y - 0.0).abs() < 1e-12 {
                faces.push(0.0);
            } else if (lo.y - 600.0).abs() < 1e-12 {
                faces.push(600.0);
            } else if (hi.x - 0.0).abs() < 1e-12 {
                faces.push(-1.0);
            } else if (lo.x - 1000.0).abs() < 1e-12 {
                faces.push(1000.0);
            }
        }
        assert_eq!(faces.len(), 4);
        s.validate().unwrap();
    }

    #[test]
    fn save_load_round_trip() {
        let spec = GenSpec::new_3d(12, 77);
        let s = walls_to_obstacles(&generate(&spec).unwrap());
        let text = to_json(&s);
        let back = from_json(&text).unwrap();
        assert_eq!(s, back);
        assert!(back.walls_as_obstacles);
    }

    #[test]
    fn load_rejects_injected_overlap() {
        let spec = GenSpec::new_2d(2, 5);
        let mut s = generate(&spec).unwrap();
        // move the second obstacle onto the first
        let c = s.obstacles[0].centroid;
        let side = 30.0;
        s.obstacles[1] = Obstacle::new(1, rotated_square(c.x, c.y, side, 0.1), s.extent.depth);
        let text = to_json(&s);
        match from_json(&text) {
            Err(EnvError::InvariantViolation { id, .. }) => assert_eq!(id, 1),
            other => panic!("expected invariant violation, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_fuzz_many_seeds() {
        for seed in 0..50 {
            let spec = GenSpec::new_2d(10, seed);
            let s = generate(&spec).unwrap();
            let back = from_json(&to_json(&s)).unwrap();
            assert_eq!(s, back, "seed {seed}");
        }
    }

    #[test]
    fn gaussian_placement_generates() {
        let mut spec = GenSpec::new_2d(20, 3);
        spec.placement = Placement::Gaussian;
        let s = generate(&spec).unwrap();
        s.validate().unwrap();
        assert_eq!(s.obstacles.len(), 20);
    }
}
