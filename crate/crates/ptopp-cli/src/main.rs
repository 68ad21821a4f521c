//! Command-line interface: passage/cell detection, planning, the
//! benchmark harness, and the brute-force oracle runner.
//!
//! Exit codes: 0 ok, 1 oracle mismatch, 2 usage or parse error,
//! 3 input invariant violation, 4 internal error.

mod bench;
mod oracle;
mod svg;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ptopp::cells::{compound_cells_3d, detect_cells, CellComplex, Side};
use ptopp::costs::{CostKind, CostSpec, CpwMode};
use ptopp::env::{self, GenSpec, Placement, Scenario};
use ptopp::geom::Point3;
use ptopp::passages::{brute_force_detect, detect_2d, detect_3d, Passage, DEFAULT_KGD};
use ptopp::planners::{
    plan, preprocess, PlanConfig, PlanResult, PlanStatus, PlannerKind, Preprocessed, TraversalMode,
};
use serde::Deserialize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

const EXIT_ORACLE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INVARIANT: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(name = "ptopp", version, about = "Passage-traversing optimal path planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect passages and Gabriel cells; emit JSON and SVG renderings.
    Detect(DetectArgs),
    /// Run one plan and report the path, costs and traversal data.
    Plan(PlanArgs),
    /// Benchmark suites over scenario/seed sweeps, written as CSV.
    Bench(bench::BenchArgs),
    /// Brute-force oracle comparisons; exit 1 on any mismatch.
    Oracle(oracle::OracleArgs),
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Load a scenario from a JSON file instead of generating one.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Number of random square obstacles to generate.
    #[arg(long, default_value_t = 40)]
    m: usize,
    /// Scenario generation seed.
    #[arg(long, env = "PTOPP_SEED", default_value_t = 0)]
    seed: u64,
    /// Obstacle side-length range.
    #[arg(long, default_value_t = 20.0)]
    side_min: f64,
    #[arg(long, default_value_t = 60.0)]
    side_max: f64,
    /// Gaussian placement instead of uniform.
    #[arg(long)]
    gaussian: bool,
    /// 3D scenario with prism obstacles.
    #[arg(long = "3d")]
    three_d: bool,
    /// Skip boundary walls (figure parity; planning always uses walls).
    #[arg(long)]
    no_walls: bool,
}

impl ScenarioArgs {
    fn build(&self) -> anyhow::Result<Scenario> {
        let mut s = if let Some(path) = &self.scenario {
            env::load(path).with_context(|| format!("loading {}", path.display()))?
        } else {
            let dims = if self.three_d { 3 } else { 2 };
            let mut spec = GenSpec {
                m: self.m,
                side_range: (self.side_min, self.side_max),
                placement: if self.gaussian {
                    Placement::Gaussian
                } else {
                    Placement::Uniform
                },
                dims,
                height_range: (0.0, 400.0),
                seed: self.seed,
                extent: env::Extent::default_for(dims),
            };
            if dims == 2 {
                spec.height_range = (0.0, 0.0);
            }
            env::generate(&spec)?
        };
        if !self.no_walls && !s.walls_as_obstacles {
            s = env::walls_to_obstacles(&s);
        }
        Ok(s)
    }
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Geodesic tester radius in the Delaunay graph.
    #[arg(long, default_value_t = DEFAULT_KGD)]
    kgd: usize,
    /// Write an SVG rendering here.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Write the passage/cell JSON dump here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Save the (possibly generated) scenario JSON here.
    #[arg(long)]
    save_scenario: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// TOML config file; explicit flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["rrt", "prm"])]
    planner: Option<String>,
    /// Cost family: shortest | mpw | gpw | maxclr.
    #[arg(long)]
    cost: Option<String>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    ratio: Option<f64>,
    /// Constrained passage width threshold.
    #[arg(long)]
    cpw_eps: Option<f64>,
    /// CPW mode: relabel | penalty.
    #[arg(long)]
    cpw_mode: Option<String>,
    /// Penalty added per sub-threshold crossing in penalty mode.
    #[arg(long)]
    kp: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Planner seed (distinct from the scenario seed).
    #[arg(long)]
    plan_seed: Option<u64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Reject samples below this clearance.
    #[arg(long)]
    clearance: Option<f64>,
    /// Start position "x,y" or "x,y,z".
    #[arg(long)]
    x0: Option<String>,
    /// Goal position "x,y" or "x,y,z".
    #[arg(long)]
    xg: Option<String>,
    /// Sample height range "lo,hi" (3D).
    #[arg(long)]
    sample_height: Option<String>,
    /// Traversal check: cell (walk) | all (every passage).
    #[arg(long, default_value = "cell", value_parser = ["cell", "all"])]
    traversal: String,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
struct FileConfig {
    cost: Option<FileCost>,
    plan: Option<FilePlan>,
}

#[derive(Deserialize, Default)]
struct FileCost {
    kind: Option<String>,
    q: Option<usize>,
    ratio: Option<f64>,
    cpw_eps: Option<f64>,
    cpw_mode: Option<String>,
    k_p: Option<f64>,
}

#[derive(Deserialize, Default)]
struct FilePlan {
    planner: Option<String>,
    samples: Option<usize>,
    eta: Option<f64>,
    seed: Option<u64>,
    clearance: Option<f64>,
    x0: Option<Vec<f64>>,
    xg: Option<Vec<f64>>,
    sample_height: Option<Vec<f64>>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Detect(args) => cmd_detect(args),
        Command::Plan(args) => cmd_plan(args),
        Command::Bench(args) => bench::run(args),
        Command::Oracle(args) => oracle::run(args),
    };
    match code {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify_error(&e))
        }
    }
}

fn classify_error(e: &anyhow::Error) -> u8 {
    let msg = format!("{e:#}");
    if msg.contains("invariant") || msg.contains("free space") || msg.contains("overlap") {
        EXIT_INVARIANT
    } else if msg.contains("parse") || msg.contains("expected") || msg.contains("loading") {
        EXIT_USAGE
    } else {
        EXIT_INTERNAL
    }
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

fn cmd_detect(args: DetectArgs) -> anyhow::Result<u8> {
    let scenario = args.scenario.build()?;
    if scenario.obstacles.iter().filter(|o| !o.is_wall).count() == 0
        && args.scenario.scenario.is_some()
    {
        anyhow::bail!("scenario invariant: empty obstacle list");
    }
    if let Some(path) = &args.save_scenario {
        env::save(&scenario, path)?;
    }
    let t0 = Instant::now();
    let passages = if scenario.is_3d() {
        detect_3d(&scenario, args.kgd)?
    } else {
        detect_2d(&scenario, args.kgd)?
    };
    let detect_ms = t0.elapsed().as_secs_f64() * 1000.0;
    let t1 = Instant::now();
    let complex = if scenario.is_3d() {
        compound_cells_3d(&passages, &scenario)?
    } else {
        detect_cells(&passages, &scenario)?
    };
    let cells_ms = t1.elapsed().as_secs_f64() * 1000.0;
    let base_cells = complex.cells.iter().filter(|c| !c.is_obstacle_cell).count();
    println!(
        "obstacles: {} (walls {})",
        scenario.obstacles.iter().filter(|o| !o.is_wall).count(),
        scenario.obstacles.iter().filter(|o| o.is_wall).count()
    );
    println!("passages: {}  cells: {base_cells}", passages.len());
    if scenario.is_3d() {
        let base = passages.iter().filter(|p| p.h_lo <= scenario.eps()).count();
        let ratio = passages.len() as f64 / base.max(1) as f64;
        println!("base passages: {base}  spatial/base ratio: {ratio:.3}");
    }
    println!("detection: {detect_ms:.2} ms  decomposition: {cells_ms:.2} ms");
    if let Some(path) = &args.json {
        let dump = serde_json::json!({
            "passages": passages_json(&passages, scenario.is_3d()),
            "cells": cells_json(&complex),
        });
        std::fs::write(path, serde_json::to_string_pretty(&dump)?)?;
    }
    if let Some(path) = &args.svg {
        let doc = svg::render(&scenario, &passages, Some(&complex), &[]);
        std::fs::write(path, doc)?;
    }
    Ok(0)
}

fn passages_json(passages: &[Passage], is_3d: bool) -> serde_json::Value {
    serde_json::Value::Array(
        passages
            .iter()
            .map(|p| {
                let mut obj = serde_json::json!({
                    "i": p.i,
                    "j": p.j,
                    "seg": [[p.seg.a.x, p.seg.a.y], [p.seg.b.x, p.seg.b.y]],
                    "width": p.width,
                    "region": p.region.polygon.vertices().iter().map(|v| [v.x, v.y]).collect::<Vec<_>>(),
                });
                if is_3d {
                    obj["h_interval"] = serde_json::json!([p.h_lo, p.h_hi]);
                }
                obj
            })
            .collect(),
    )
}

fn cells_json(complex: &CellComplex) -> serde_json::Value {
    serde_json::Value::Array(
        complex
            .cells
            .iter()
            .map(|c| {
                serde_json::json!({
                    "id": c.id,
                    "passage_sides": c
                        .passage_sides()
                        .map(|(pid, nb)| serde_json::json!({"pid": pid, "neighbor": nb}))
                        .collect::<Vec<_>>(),
                    "virtual_sides": c.virtual_sides,
                    "obstacle_cell": c.is_obstacle_cell,
                    "vertices": c.polygon.iter().map(|v| [v.x, v.y]).collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// plan
// ---------------------------------------------------------------------------

fn parse_point(text: &str, is_3d: bool) -> anyhow::Result<Point3> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .context("parse point")?;
    match (parts.as_slice(), is_3d) {
        ([x, y], false) => Ok(Point3::new(*x, *y, 0.0)),
        ([x, y], true) => Ok(Point3::new(*x, *y, 0.0)),
        ([x, y, z], _) => Ok(Point3::new(*x, *y, *z)),
        _ => anyhow::bail!("parse point: expected x,y or x,y,z"),
    }
}

fn build_cost(
    kind: &str,
    q: usize,
    ratio: f64,
    cpw_eps: Option<f64>,
    cpw_mode: &str,
    k_p: f64,
    eps_bar: f64,
) -> anyhow::Result<CostSpec> {
    let mut spec = match kind {
        "shortest" => CostSpec::shortest(eps_bar),
        "mpw" => CostSpec::mpw(eps_bar),
        "gpw" => CostSpec::gpw(q, ratio, eps_bar),
        "maxclr" => CostSpec::max_clearance(eps_bar),
        "lensum" => CostSpec {
            kind: CostKind::LenMinusWidthSum { q },
            cpw: None,
            eps_bar,
        },
        other => anyhow::bail!("parse cost kind {other:?} (expected shortest|mpw|gpw|maxclr)"),
    };
    if let Some(eps_p) = cpw_eps {
        let mode = match cpw_mode {
            "relabel" => CpwMode::WidthRelabel,
            "penalty" => CpwMode::LengthPenalty { k_p },
            other => anyhow::bail!("parse cpw mode {other:?} (expected relabel|penalty)"),
        };
        spec = spec.with_cpw(eps_p, mode);
    }
    Ok(spec)
}

struct ResolvedPlan {
    cfg: PlanConfig,
}

fn resolve_plan(args: &PlanArgs, pre: &Preprocessed) -> anyhow::Result<ResolvedPlan> {
    let file: FileConfig = match &args.config {
        Some(path) => toml::from_str(&std::fs::read_to_string(path)?)
            .context("parse TOML config")?,
        None => FileConfig::default(),
    };
    let fc = file.cost.unwrap_or_default();
    let fp = file.plan.unwrap_or_default();
    let scenario = &pre.scenario;
    let is_3d = scenario.is_3d();
    let eps_bar = scenario.extent.diagonal();

    let kind = args
        .cost
        .clone()
        .or(fc.kind)
        .unwrap_or_else(|| "gpw".into());
    let q = args.q.or(fc.q).unwrap_or(3);
    let ratio = args.ratio.or(fc.ratio).unwrap_or(100.0);
    let cpw_eps = args.cpw_eps.or(fc.cpw_eps);
    let cpw_mode = args
        .cpw_mode
        .clone()
        .or(fc.cpw_mode)
        .unwrap_or_else(|| "relabel".into());
    let k_p = args.kp.or(fc.k_p).unwrap_or(1e6);
    let cost = build_cost(&kind, q, ratio, cpw_eps, &cpw_mode, k_p, eps_bar)?;

    let planner = match args
        .planner
        .clone()
        .or(fp.planner)
        .unwrap_or_else(|| "rrt".into())
        .as_str()
    {
        "prm" => PlannerKind::PrmStar,
        _ => PlannerKind::RrtStar,
    };
    let default_x0 = if is_3d {
        Point3::new(25.0, 575.0, 100.0)
    } else {
        Point3::new(25.0, 575.0, 0.0)
    };
    let default_xg = if is_3d {
        Point3::new(975.0, 25.0, 200.0)
    } else {
        Point3::new(975.0, 25.0, 0.0)
    };
    let from_vec = |v: &Vec<f64>| match v.as_slice() {
        [x, y] => Point3::new(*x, *y, 0.0),
        [x, y, z] => Point3::new(*x, *y, *z),
        _ => default_x0,
    };
    let x0 = match &args.x0 {
        Some(t) => parse_point(t, is_3d)?,
        None => fp.x0.as_ref().map(from_vec).unwrap_or(default_x0),
    };
    let xg = match &args.xg {
        Some(t) => parse_point(t, is_3d)?,
        None => fp.xg.as_ref().map(from_vec).unwrap_or(default_xg),
    };
    let mut cfg = PlanConfig::new(planner, cost, x0, xg);
    cfg.max_valid_samples = args.samples.or(fp.samples).unwrap_or(2000);
    cfg.eta = args
        .eta
        .or(fp.eta)
        .unwrap_or(if is_3d { 100.0 } else { 50.0 });
    cfg.seed = args.plan_seed.or(fp.seed).unwrap_or(0);
    cfg.clearance_constraint = args.clearance.or(fp.clearance);
    cfg.traversal = if args.traversal == "all" {
        TraversalMode::AllPassages
    } else {
        TraversalMode::CellWalk
    };
    if let Some(text) = &args.sample_height {
        let parts: Vec<f64> = text
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .context("parse sample height range")?;
        if let [lo, hi] = parts.as_slice() {
            cfg.sample_height_range = Some((*lo, *hi));
        }
    } else if let Some(v) = &fp.sample_height {
        if let [lo, hi] = v.as_slice() {
            cfg.sample_height_range = Some((*lo, *hi));
        }
    }
    Ok(ResolvedPlan { cfg })
}

/// Deterministic plan-result document: identical flags and seed produce
/// byte-identical output, so wall-clock timing is reported on stderr only.
pub fn plan_result_json(res: &PlanResult, is_3d: bool) -> serde_json::Value {
    let path: Vec<serde_json::Value> = res
        .path
        .iter()
        .map(|p| {
            if is_3d {
                serde_json::json!([p.x, p.y, p.z])
            } else {
                serde_json::json!([p.x, p.y])
            }
        })
        .collect();
    serde_json::json!({
        "status": match res.status {
            PlanStatus::Found => "found",
            PlanStatus::NoPath => "no_path",
        },
        "path": path,
        "cost": if res.cost.primary.is_finite() { serde_json::json!(res.cost.primary) } else { serde_json::Value::Null },
        "len": if res.cost.len.is_finite() { serde_json::json!(res.cost.len) } else { serde_json::Value::Null },
        "p_sigma": res.p_sigma,
        "passages": res.passages,
        "samples": res.samples,
        "time_ms": serde_json::Value::Null,
        "trace": res.trace.iter().map(|(n, c, l)| serde_json::json!([n, c, l])).collect::<Vec<_>>(),
    })
}

fn cmd_plan(args: PlanArgs) -> anyhow::Result<u8> {
    let scenario = args.scenario.build()?;
    let pre = preprocess(scenario, DEFAULT_KGD)?;
    let resolved = resolve_plan(&args, &pre)?;
    let res = match plan(&pre, &resolved.cfg) {
        Ok(res) => res,
        Err(e @ ptopp::planners::PlannerError::InvalidStart)
        | Err(e @ ptopp::planners::PlannerError::InvalidGoal) => {
            anyhow::bail!("scenario invariant: {e}")
        }
        Err(e) => return Err(e.into()),
    };
    if !res.weights_ok {
        eprintln!(
            "warning: weight ratio misses the sufficient order-preservation bound for this width set"
        );
    }
    match res.status {
        PlanStatus::Found => {
            println!(
                "found: len {:.2}, primary {:.4}, samples {}, passages {:?}",
                res.cost.len, res.cost.primary, res.samples, res.passages
            );
            println!("p_sigma: {:?}", res.p_sigma);
        }
        PlanStatus::NoPath => println!("no_path after {} samples", res.samples),
    }
    eprintln!("planning time: {:.1} ms", res.time_ms);
    if let Some(path) = &args.json {
        let doc = if pre.scenario.is_3d() {
            // full scene alongside the result
            serde_json::json!({
                "result": plan_result_json(&res, true),
                "scene": {
                    "extent": [pre.scenario.extent.width, pre.scenario.extent.height, pre.scenario.extent.depth],
                    "obstacles": pre.scenario.obstacles.iter().map(|o| serde_json::json!({
                        "id": o.id,
                        "vertices": o.footprint.vertices().iter().map(|v| [v.x, v.y]).collect::<Vec<_>>(),
                        "height": o.height,
                        "wall": o.is_wall,
                    })).collect::<Vec<_>>(),
                    "passages": passages_json(&pre.passages, true),
                }
            })
        } else {
            plan_result_json(&res, false)
        };
        std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    }
    if let Some(path) = &args.svg {
        let overlay = svg::PathOverlay {
            points: &res.path,
            color: "#1d8348",
            label: "",
        };
        let overlays = if res.status == PlanStatus::Found {
            vec![overlay]
        } else {
            Vec::new()
        };
        let doc = svg::render(&pre.scenario, &pre.passages, Some(&pre.complex), &overlays);
        std::fs::write(path, doc)?;
    }
    Ok(0)
}

// shared helpers for bench/oracle

pub(crate) fn wall_scenario_2d(m: usize, seed: u64) -> anyhow::Result<Scenario> {
    let spec = GenSpec::new_2d(m, seed);
    Ok(env::walls_to_obstacles(&env::generate(&spec)?))
}

pub(crate) fn open_scenario_2d(m: usize, seed: u64) -> anyhow::Result<Scenario> {
    Ok(env::generate(&GenSpec::new_2d(m, seed))?)
}

pub(crate) fn brute_pairs(s: &Scenario) -> anyhow::Result<Vec<(u32, u32)>> {
    Ok(brute_force_detect(s)?.iter().map(|p| p.pair()).collect())
}
