use std::f64::consts::TAU;
use std::fs::File;
use std::path::{Path, PathBuf};

use plds_core::bifurcation::{
    alpha_star, alpha_star_printed, analyze_cell, scan_diagram, verify_bound, BifurcationDiagram, ScanOptions,
};
use plds_core::io::{read_scan_csv, trajectory_rows, verify_json, write_map_csv, write_scan_csv, write_trajectory_csv};
use plds_core::model::find_singular_points_with;
use plds_core::return_map::{build_return_map, cycle_census, default_range, log_grid, LimitCycle, Stability};
use plds_core::sewing::{section_point, Section, Sewer, SewnTrajectory};
use plds_core::{discriminant_curve, DiscriminantLine, Point, PwlSystem, SingularPoint, SystemSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::svg::{render, Scene};
use crate::{emit, Failure};

/// Discriminant-line membership tolerance, relative.
const ON_LINE: f64 = 1e-9;
/// Largest share of portrait trajectories allowed to fail.
const FAILURE_BUDGET: f64 = 0.1;
/// Cap on drawn samples per trajectory.
const MAX_DRAWN: f64 = 20_000.0;

fn scan_options(cfg: &RunConfig) -> ScanOptions {
    ScanOptions { samples: cfg.scan.samples, tol: cfg.tol, loop_tol: cfg.scan.loop_tol }
}

#[derive(Serialize)]
struct AlphaStarReport {
    root: Option<f64>,
    printed: f64,
    discrepancy: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct DiscriminantReport {
    lines: Vec<DiscriminantLine>,
    alpha_max: f64,
    on_lines: Vec<usize>,
    predicted_count: Option<usize>,
}

#[derive(Serialize)]
struct AnalyzeReport {
    system: SystemSpec,
    singular_points: Vec<SingularPoint>,
    alpha_star: AlphaStarReport,
    discriminant: DiscriminantReport,
    flags: Vec<String>,
    n_small: usize,
    n_big: usize,
    limit_cycles: Vec<LimitCycle>,
}

pub fn analyze(cfg: &RunConfig, out: Option<&Path>) -> Result<(), Failure> {
    let sys = cfg.system()?;
    let points = find_singular_points_with(&sys.curve, &sys.params, &cfg.tol)?;
    let (k1, k2) = (cfg.k1, cfg.k2);
    let printed = alpha_star_printed(k1, k2);
    let alpha_star = match alpha_star(k1, k2) {
        Ok(root) => AlphaStarReport { root: Some(root), printed, discrepancy: Some(printed - root), error: None },
        Err(e) => AlphaStarReport { root: None, printed, discrepancy: None, error: Some(e.to_string()) },
    };
    let disc = discriminant_curve(&sys.curve);
    let (a, b) = (cfg.alpha, cfg.beta);
    let discriminant = DiscriminantReport {
        on_lines: disc.lines_through(a, b, ON_LINE),
        predicted_count: disc.predicted_count(a, b),
        lines: disc.lines,
        alpha_max: disc.alpha_max,
    };
    let (cell, census) = analyze_cell(&sys.curve, a, b, &scan_options(cfg));
    let report = AnalyzeReport {
        system: cfg.spec(),
        singular_points: points,
        alpha_star,
        discriminant,
        flags: cell.flags.iter().map(|f| f.to_string()).collect(),
        n_small: cell.n_small,
        n_big: cell.n_big,
        limit_cycles: census.map(|c| c.cycles).unwrap_or_default(),
    };
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Numerics(e.to_string()))?;
    json.push('\n');
    emit(out, json.as_bytes())
}

pub fn map(cfg: &RunConfig, out: Option<&Path>) -> Result<(), Failure> {
    let sys = cfg.system()?;
    let section = Section { corner: cfg.map.corner, side: cfg.map.side };
    let range = cfg.map.range.unwrap_or_else(|| default_range(&sys, &cfg.tol));
    let rm = build_return_map(&sys, section, range, cfg.map.samples, cfg.tol)?;
    let mut buf = Vec::new();
    write_map_csv(&rm.samples, &mut buf)?;
    emit(out, &buf)
}

/// Seeds on a ring around every singular point and along the section below
/// the first corner.
fn auto_seeds(sys: &PwlSystem, points: &[SingularPoint], density: usize) -> Vec<Point> {
    let scale = sys.curve.scale();
    let r = 0.15 * scale;
    let mut seeds = Vec::new();
    for p in points {
        for i in 0..density {
            let th = TAU * (i as f64 + 0.5) / density as f64;
            seeds.push(Point::new(p.location.x + r * th.cos(), p.location.y + r * th.sin()));
        }
    }
    if density > 0 {
        for s in log_grid(0.05 * scale, 3.0 * scale, density) {
            seeds.push(section_point(sys, Section::below(1), s));
        }
    }
    seeds
}

fn drawn(sewer: &Sewer, traj: &SewnTrajectory, dt: f64) -> Vec<Point> {
    let dt = dt.max(traj.total_time() / MAX_DRAWN);
    sewer.sample(traj, dt).into_iter().map(|s| s.point).collect()
}

pub fn portrait(cfg: &RunConfig, density: usize, out: Option<&Path>, csv: Option<&Path>) -> Result<(), Failure> {
    let sys = cfg.system()?;
    let points = find_singular_points_with(&sys.curve, &sys.params, &cfg.tol)?;
    let seeds = if cfg.portrait.seeds.is_empty() {
        auto_seeds(&sys, &points, density)
    } else {
        cfg.portrait.seeds.clone()
    };
    let sewer = Sewer::new(&sys, cfg.tol);
    let results: Vec<_> = seeds.par_iter().map(|&s| sewer.sew(s, cfg.portrait.max_crossings, None)).collect();
    let failed = results.iter().filter(|r| r.is_err()).count();
    if failed as f64 > FAILURE_BUDGET * seeds.len() as f64 {
        let first = results.iter().find_map(|r| r.as_ref().err()).map(|e| e.to_string()).unwrap_or_default();
        return Err(Failure::Numerics(format!("{failed} of {} trajectories failed; first: {first}", seeds.len())));
    }
    let trajs: Vec<SewnTrajectory> = results.into_iter().flatten().collect();
    let census = cycle_census(&sys, plds_core::return_map::DEFAULT_SAMPLES, cfg.tol);
    let cycles: Vec<(Vec<Point>, Stability)> = census
        .cycles
        .iter()
        .filter_map(|c| {
            let circuit = sewer.circuit(c.section, c.s_fixed).ok()?;
            Some((drawn(&sewer, &circuit.traj, cfg.portrait.dt), c.stability))
        })
        .collect();
    let lines: Vec<Vec<Point>> = trajs.iter().map(|t| drawn(&sewer, t, cfg.portrait.dt)).collect();
    let svg = render(&Scene {
        sys: &sys,
        width: cfg.portrait.width,
        height: cfg.portrait.height,
        singular: &points,
        trajectories: &lines,
        cycles: &cycles,
    });
    if let Some(p) = csv {
        let rows: Vec<_> = trajs.iter().flat_map(|t| trajectory_rows(&sewer.sample(t, cfg.portrait.dt))).collect();
        let mut buf = Vec::new();
        write_trajectory_csv(&rows, &mut buf)?;
        emit(Some(p), &buf)?;
    }
    emit(out, svg.as_bytes())
}

fn finish_verify(
    diagram: &BifurcationDiagram,
    k: usize,
    write: impl FnOnce(&[u8]) -> Result<(), Failure>,
) -> Result<(), Failure> {
    let r = verify_bound(diagram, k);
    let mut json = verify_json(&r);
    json.push('\n');
    write(json.as_bytes())?;
    if r.pass {
        Ok(())
    } else {
        Err(Failure::Bound(format!(
            "{} cell(s) violate the bound {} (max total {})",
            r.violations.len(),
            r.bound,
            r.max_total
        )))
    }
}

/// The report goes to `report`, else next to `out` as `*.verify.json`, else
/// to standard error.
pub fn scan(cfg: &RunConfig, out: Option<&Path>, report: Option<&Path>) -> Result<(), Failure> {
    let curve = cfg.system()?.curve;
    let s = &cfg.scan;
    let d = scan_diagram(&curve, s.alpha_range, s.beta_range, s.na, s.nb, &scan_options(cfg))?;
    let mut buf = Vec::new();
    write_scan_csv(&d, &mut buf)?;
    emit(out, &buf)?;
    let target: Option<PathBuf> = report.map(Path::to_path_buf).or_else(|| out.map(|o| o.with_extension("verify.json")));
    finish_verify(&d, curve.k(), |bytes| match &target {
        Some(p) => emit(Some(p), bytes),
        None => {
            eprint!("{}", String::from_utf8_lossy(bytes));
            Ok(())
        }
    })
}

pub fn verify(cfg: Option<&RunConfig>, diagram: Option<&Path>, k: Option<usize>, out: Option<&Path>) -> Result<(), Failure> {
    let k = match (k, cfg) {
        (Some(k), _) => k,
        (None, Some(c)) => c.corners.len() / 2,
        (None, None) => return Err(Failure::Config("verify needs --k or --config".into())),
    };
    let d = match (diagram, cfg) {
        (Some(p), _) => {
            let f = File::open(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            read_scan_csv(f)?
        }
        (None, Some(c)) => {
            let curve = c.system()?.curve;
            scan_diagram(&curve, c.scan.alpha_range, c.scan.beta_range, c.scan.na, c.scan.nb, &scan_options(c))?
        }
        (None, None) => return Err(Failure::Config("verify needs a diagram file or --config".into())),
    };
    finish_verify(&d, k, |bytes| emit(out, bytes))
}
