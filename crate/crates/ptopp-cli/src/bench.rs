//! Benchmark harness: detection sweeps, planner comparisons including the
//! all-passage traversal variant, and best-cost evolution traces. Rows
//! carry the scenario and plan seeds plus the crate version so any line
//! can be reproduced exactly.

use anyhow::Context;
use clap::Args;
use ptopp::cells::detect_cells;
use ptopp::costs::CostSpec;
use ptopp::env;
use ptopp::geom::Point3;
use ptopp::passages::{brute_force_detect, detect_2d, detect_3d, DEFAULT_KGD};
use ptopp::planners::{
    plan, preprocess_default, PlanConfig, PlanStatus, PlannerKind, Preprocessed, TraversalMode,
};
use rayon::prelude::*;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Args)]
pub struct BenchArgs {
    /// Suite: detect | plan | evolution.
    #[arg(long, value_parser = ["detect", "plan", "evolution"])]
    suite: String,
    /// Obstacle counts to sweep (detect suite).
    #[arg(long, value_delimiter = ',', default_values_t = vec![40, 80, 120, 160, 200])]
    m_list: Vec<usize>,
    /// Obstacle count for plan/evolution suites.
    #[arg(long, default_value_t = 40)]
    m: usize,
    /// Trials per configuration.
    #[arg(long, default_value_t = 30)]
    trials: u64,
    /// Valid samples per plan.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    /// Planner for the plan/evolution suites: rrt | prm.
    #[arg(long, default_value = "rrt", value_parser = ["rrt", "prm"])]
    planner: String,
    /// 3D scenarios (detect suite).
    #[arg(long = "3d")]
    three_d: bool,
    /// Base seed; trial k uses seed base + k.
    #[arg(long, env = "PTOPP_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads for independent trials.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: BenchArgs) -> anyhow::Result<u8> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .context("build worker pool")?;
    let rows = pool.install(|| match args.suite.as_str() {
        "detect" => bench_detect(&args),
        "plan" => bench_plan(&args),
        _ => bench_evolution(&args),
    })?;
    let mut file = std::fs::File::create(&args.out)?;
    for line in &rows {
        writeln!(file, "{line}")?;
    }
    println!("wrote {} rows to {}", rows.len().saturating_sub(1), args.out.display());
    Ok(0)
}

fn bench_detect(args: &BenchArgs) -> anyhow::Result<Vec<String>> {
    let mut rows = vec![
        "suite,m,trial,scenario_seed,version,detect_ms,brute_ms,passages,cells,base_passages"
            .to_string(),
    ];
    let mut jobs: Vec<(usize, u64)> = Vec::new();
    for &m in &args.m_list {
        for t in 0..args.trials {
            jobs.push((m, args.seed + t));
        }
    }
    let results: Vec<anyhow::Result<String>> = jobs
        .par_iter()
        .map(|&(m, seed)| -> anyhow::Result<String> {
            if args.three_d {
                let spec = env::GenSpec::new_3d(m, seed);
                let s = env::walls_to_obstacles(&env::generate(&spec)?);
                let t0 = Instant::now();
                let passages = detect_3d(&s, DEFAULT_KGD)?;
                let detect_ms = t0.elapsed().as_secs_f64() * 1000.0;
                let t1 = Instant::now();
                let brute = brute_force_detect(&s)?;
                let brute_ms = t1.elapsed().as_secs_f64() * 1000.0;
                let base = passages.iter().filter(|p| p.h_lo <= s.eps()).count();
                let _ = brute;
                Ok(format!(
                    "detect3d,{m},{},{seed},{VERSION},{detect_ms:.3},{brute_ms:.3},{},0,{base}",
                    seed - args.seed,
                    passages.len(),
                ))
            } else {
                let spec = env::GenSpec::new_2d(m, seed);
                let s = env::walls_to_obstacles(&env::generate(&spec)?);
                let t0 = Instant::now();
                let passages = detect_2d(&s, DEFAULT_KGD)?;
                let detect_ms = t0.elapsed().as_secs_f64() * 1000.0;
                let t1 = Instant::now();
                let brute = brute_force_detect(&s)?;
                let brute_ms = t1.elapsed().as_secs_f64() * 1000.0;
                let complex = detect_cells(&passages, &s)?;
                let _ = brute;
                Ok(format!(
                    "detect,{m},{},{seed},{VERSION},{detect_ms:.3},{brute_ms:.3},{},{},0",
                    seed - args.seed,
                    passages.len(),
                    complex.cells.len(),
                ))
            }
        })
        .collect();
    for r in results {
        rows.push(r?);
    }
    // summary: linear fit of passage count vs m, and the median speedup
    let mut by_m: std::collections::BTreeMap<usize, (Vec<f64>, Vec<f64>, Vec<f64>)> =
        Default::default();
    for row in rows.iter().skip(1) {
        let f: Vec<&str> = row.split(',').collect();
        let m: usize = f[1].parse()?;
        let e = by_m.entry(m).or_default();
        e.0.push(f[7].parse()?);
        e.1.push(f[5].parse()?);
        e.2.push(f[6].parse()?);
    }
    let xs: Vec<f64> = by_m.keys().map(|&m| m as f64).collect();
    let ys: Vec<f64> = by_m
        .values()
        .map(|(p, _, _)| p.iter().sum::<f64>() / p.len() as f64)
        .collect();
    if xs.len() >= 2 {
        let r2 = linear_fit_r2(&xs, &ys);
        println!("passage count vs m linear fit: R^2 = {r2:.4}");
    }
    for (m, (p, d, b)) in &by_m {
        let speedup = median(b) / median(d).max(1e-9);
        println!(
            "m={m}: mean passages {:.1}, median detect {:.2} ms, median brute {:.2} ms, speedup {speedup:.1}x",
            p.iter().sum::<f64>() / p.len() as f64,
            median(d),
            median(b)
        );
    }
    Ok(rows)
}

pub fn linear_fit_r2(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx <= 0.0 || syy <= 0.0 {
        return 1.0;
    }
    (sxy * sxy) / (sxx * syy)
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    if s.is_empty() {
        return f64::NAN;
    }
    let k = s.len() / 2;
    if s.len() % 2 == 1 {
        s[k]
    } else {
        (s[k - 1] + s[k]) / 2.0
    }
}

fn corners(pre: &Preprocessed) -> (Point3, Point3) {
    let mut x0 = Point3::new(25.0, pre.scenario.extent.height - 25.0, 0.0);
    let mut xg = Point3::new(pre.scenario.extent.width - 25.0, 25.0, 0.0);
    if pre.scenario.is_3d() {
        x0.z = 100.0;
        xg.z = 200.0;
    }
    let mut k = 0.0;
    while !ptopp::plancore::point_free(&pre.scenario, x0) {
        k += 7.0;
        x0 = Point3::new(25.0 + k, pre.scenario.extent.height - 25.0 - k, x0.z);
    }
    k = 0.0;
    while !ptopp::plancore::point_free(&pre.scenario, xg) {
        k += 7.0;
        xg = Point3::new(
            pre.scenario.extent.width - 25.0 - k,
            25.0 + k,
            xg.z,
        );
    }
    (x0, xg)
}

fn planner_kind(name: &str) -> PlannerKind {
    if name == "prm" {
        PlannerKind::PrmStar
    } else {
        PlannerKind::RrtStar
    }
}

/// Planner comparison rows in the usual table layout: shortest length,
/// clearance constraint, maximum clearance, GPW with all-passage traversal,
/// and GPW with the cell walk.
fn bench_plan(args: &BenchArgs) -> anyhow::Result<Vec<String>> {
    let mut rows = vec![
        "suite,variant,m,trial,scenario_seed,plan_seed,version,time_ms,len,primary,f_p,samples"
            .to_string(),
    ];
    let scenario_seed = args.seed;
    let s = env::walls_to_obstacles(&env::generate(&env::GenSpec::new_2d(args.m, scenario_seed))?);
    let pre = preprocess_default(s)?;
    let (x0, xg) = corners(&pre);
    let diag = pre.scenario.extent.diagonal();
    let kind = planner_kind(&args.planner);

    let variants: Vec<(&str, CostSpec, Option<f64>, TraversalMode)> = vec![
        ("shortest", CostSpec::shortest(diag), None, TraversalMode::CellWalk),
        (
            "clearance_constraint",
            CostSpec::shortest(diag),
            Some(10.0),
            TraversalMode::CellWalk,
        ),
        (
            "max_clearance",
            CostSpec::max_clearance(diag),
            None,
            TraversalMode::CellWalk,
        ),
        (
            "gpw_traversal",
            CostSpec::gpw(3, 100.0, diag),
            None,
            TraversalMode::AllPassages,
        ),
        ("gpw_cell", CostSpec::gpw(3, 100.0, diag), None, TraversalMode::CellWalk),
    ];
    let trials: Vec<u64> = (0..args.trials).collect();
    let results: Vec<anyhow::Result<Vec<String>>> = trials
        .par_iter()
        .map(|&t| -> anyhow::Result<Vec<String>> {
            let plan_seed = 1000 + t;
            let mut out = Vec::new();
            for (name, cost, clearance, traversal) in &variants {
                let mut cfg = PlanConfig::new(kind, *cost, x0, xg);
                cfg.max_valid_samples = args.samples;
                cfg.seed = plan_seed;
                cfg.clearance_constraint = *clearance;
                cfg.traversal = *traversal;
                let res = plan(&pre, &cfg)?;
                let f_p = res.p_sigma.first().copied().unwrap_or(f64::NAN);
                out.push(format!(
                    "plan,{name},{},{t},{scenario_seed},{plan_seed},{VERSION},{:.3},{:.3},{:.6},{:.3},{}",
                    args.m, res.time_ms, res.cost.len, res.cost.primary, f_p, res.samples
                ));
            }
            Ok(out)
        })
        .collect();
    for r in results {
        rows.extend(r?);
    }
    // summary medians per variant
    for (name, _, _, _) in &variants {
        let times: Vec<f64> = rows
            .iter()
            .skip(1)
            .filter(|r| r.split(',').nth(1) == Some(name))
            .map(|r| r.split(',').nth(7).unwrap().parse().unwrap())
            .collect();
        println!("{name}: median {:.1} ms over {} trials", median(&times), times.len());
    }
    Ok(rows)
}

/// Best-cost evolution traces for the passage-width cost against the
/// maximum-clearance baseline.
fn bench_evolution(args: &BenchArgs) -> anyhow::Result<Vec<String>> {
    let mut rows =
        vec!["suite,variant,m,trial,scenario_seed,plan_seed,version,n,primary,len".to_string()];
    let scenario_seed = args.seed;
    let s = env::walls_to_obstacles(&env::generate(&env::GenSpec::new_2d(args.m, scenario_seed))?);
    let pre = preprocess_default(s)?;
    let (x0, xg) = corners(&pre);
    let diag = pre.scenario.extent.diagonal();
    let kind = planner_kind(&args.planner);
    let variants: Vec<(&str, CostSpec)> = vec![
        ("mpw", CostSpec::mpw(diag)),
        ("max_clearance", CostSpec::max_clearance(diag)),
        ("shortest", CostSpec::shortest(diag)),
    ];
    let trials: Vec<u64> = (0..args.trials).collect();
    let results: Vec<anyhow::Result<Vec<String>>> = trials
        .par_iter()
        .map(|&t| -> anyhow::Result<Vec<String>> {
            let plan_seed = 2000 + t;
            let mut out = Vec::new();
            for (name, cost) in &variants {
                let mut cfg = PlanConfig::new(kind, *cost, x0, xg);
                cfg.max_valid_samples = args.samples;
                cfg.seed = plan_seed;
                let res = plan(&pre, &cfg)?;
                if res.status != PlanStatus::Found {
                    continue;
                }
                for (n, primary, len) in &res.trace {
                    out.push(format!(
                        "evolution,{name},{},{t},{scenario_seed},{plan_seed},{VERSION},{n},{primary:.6},{len:.3}",
                        args.m
                    ));
                }
            }
            Ok(out)
        })
        .collect();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}
