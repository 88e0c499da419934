//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{integrate, random_curve, ref_k1, ref_k2, sys};
use plds_core::bifurcation::{
    alpha_star, analyze_cell, beta_invariance_check, scan_diagram, separatrix_slopes, verify_bound, CellFlag,
    ScanOptions,
};
use plds_core::flow::region_system;
use plds_core::return_map::{
    cycle_census, equilibrium_segment_fixed_point, equilibrium_segment_map, half_map_region, log_grid, zeta_chi,
    Branch, CycleSize, Stability, DEFAULT_SAMPLES,
};
use plds_core::sewing::{Section, Sewer};
use plds_core::{eval_phi, find_singular_points, Point, SingularKind, SystemParams, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALPHA_STAR_TOL: f64 = 1e-9;
const CENTER_TOL: f64 = 1e-6;
const SEGMENT_TOL: f64 = 1e-6;
const DERIV_TOL: f64 = 1e-6;
const DERIV_QUORUM: f64 = 0.95;
const FD_STEP: f64 = 1e-6;
const RATIO_LIMIT_TOL: f64 = 1e-5;
const HALF_TURN_TOL: f64 = 1e-8;
const ORDER_WINDOW: (f64, f64) = (80.0, 120.0);
const BETA_RATIO_TOL: f64 = 1e-8;
const FLOW_TOL: f64 = 1e-8;

struct Outcome {
    pass: bool,
    detail: String,
    budget: Option<Duration>,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail, budget: None }
}

fn timed(budget: Duration, o: Outcome) -> Outcome {
    Outcome { budget: Some(budget), ..o }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn c1_sewed_center() -> Outcome {
    let a = alpha_star(1.0, 2.0).unwrap();
    let s = sys(&ref_k1(), 3.0, 5.0);
    let sewer = Sewer::new(&s, Tolerances::default());
    let rm = sewer.return_map(Section::below(1), &log_grid(1e-4, 0.5, 50));
    let mut worst: f64 = 0.0;
    let mut missing = 0;
    for m in &rm.samples {
        match m.image {
            Some(i) => worst = worst.max((i.s0_bar - m.s0).abs() / (1.0 + m.s0)),
            None => missing += 1,
        }
    }
    let pass = (a - 3.0).abs() <= ALPHA_STAR_TOL && worst <= CENTER_TOL && missing == 0;
    timed(
        Duration::from_secs(5),
        outcome(pass, format!("alpha* = {a:.12}, max |f(S)-S|/(1+S) = {worst:.2e} on 50 samples, {missing} non-returning")),
    )
}

fn c2_segment_fixed_point() -> Outcome {
    let s = sys(&ref_k1(), 2.0, 4.0);
    let rf = region_system(&s.curve, &s.params, s.curve.region(1));
    let (sigma, omega) = (rf.eigen.sigma(), rf.eigen.omega().unwrap());
    let closed = equilibrium_segment_fixed_point(sigma, omega, 1.0, 2.0);
    let mut iterated = 0.5;
    for _ in 0..500 {
        iterated = equilibrium_segment_map(iterated, sigma, omega, 1.0, 2.0);
    }
    let census = cycle_census(&s, DEFAULT_SAMPLES, Tolerances::default());
    let sim = census
        .cycles
        .iter()
        .find(|c| c.section == Section::below(1) && c.stability == Stability::Stable)
        .map(|c| c.s_fixed);
    let pass = census.cycles.len() == 1
        && sim.is_some_and(|v| rel(v, closed) <= SEGMENT_TOL)
        && rel(iterated, closed) <= 1e-12;
    timed(
        Duration::from_secs(5),
        outcome(
            pass,
            format!(
                "sigma1 = {sigma}, omega1 = {omega:.12}, closed form {closed:.12}, iterated {iterated:.12}, simulated {}",
                sim.map_or("none".into(), |v| format!("{v:.12}"))
            ),
        ),
    )
}

fn c3_derivatives() -> Outcome {
    let k1 = ref_k1();
    let k2 = ref_k2();
    let points = [
        (sys(&k1, 2.5, 4.5), (0.05, 5.0)),
        (sys(&k1, 2.0, 4.0), (0.05, 5.0)),
        (sys(&k1, 3.5, 5.5), (0.01, 8.0)),
        (sys(&k1, 1.97, 3.955), (0.3, 8.0)),
        (sys(&k2, 2.5, 5.0), (0.05, 30.0)),
    ];
    let (mut ok, mut total, mut xi, mut psi) = (0, 0, 0, 0);
    for (s, range) in &points {
        let sewer = Sewer::new(s, Tolerances::default());
        let sec = Section::below(1);
        for s0 in log_grid(range.0, range.1, 20) {
            total += 1;
            let h = FD_STEP * s0;
            let (Ok(c), Ok(p), Ok(m)) = (sewer.circuit(sec, s0), sewer.circuit(sec, s0 + h), sewer.circuit(sec, s0 - h))
            else {
                continue;
            };
            match c.branch {
                Branch::Xi => xi += 1,
                Branch::Psi => psi += 1,
            }
            let fd = (p.s0_bar - m.s0_bar) / (2.0 * h);
            if rel(c.deriv, fd) <= DERIV_TOL {
                ok += 1;
            }
        }
    }
    let frac = ok as f64 / total as f64;
    outcome(
        frac >= DERIV_QUORUM && xi > 0 && psi > 0,
        format!("{ok}/{total} within {DERIV_TOL:e} ({xi} xi, {psi} psi circuits)"),
    )
}

fn c4_half_turn() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..20 {
        let sigma = -rng.gen_range(0.01..3.0);
        let omega = rng.gen_range(0.1..5.0);
        let (z, c) = zeta_chi(sigma, omega, PI / omega - 1e-6);
        worst_ratio = worst_ratio.max(rel(c / z, (PI * sigma / omega).exp()));
    }
    let mut worst_turn: f64 = 0.0;
    let mut cases = 0;
    while cases < 50 {
        let k1 = rng.gen_range(0.2..3.0);
        let curve = plds_core::build_curve(vec![Point::new(1.0, 2.0), Point::new(2.0, 0.0)], k1, 2.0).unwrap();
        let alpha = rng.gen_range(0.5..6.0);
        let beta = alpha + 2.0 + rng.gen_range(0.01..2.0);
        let params = SystemParams::new(alpha, beta).unwrap();
        let rf = region_system(&curve, &params, curve.region(1));
        let (Some(omega), Some(e)) = (rf.eigen.omega(), rf.equilibrium) else { continue };
        let s0 = rng.gen_range(0.01..5.0);
        let ev = rf.boundary_crossing(Point::new(1.0, 2.0 - s0)).unwrap();
        let (s1, tau) = half_map_region(s0, rf.eigen.sigma(), omega, e.x - 1.0).unwrap();
        let exact = ev.exit_point.y - 2.0;
        worst_turn = worst_turn.max((s1 - exact).abs() / (1.0 + exact.abs())).max((tau - ev.tau).abs() / (1.0 + tau));
        cases += 1;
    }
    outcome(
        worst_ratio <= RATIO_LIMIT_TOL && worst_turn <= HALF_TURN_TOL,
        format!("ratio limit worst {worst_ratio:.2e} (20 pairs), half turn worst {worst_turn:.2e} (50 cases)"),
    )
}

fn c5_slope_order() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for k2 in [2.0, 3.0] {
        let err = |eps: f64| {
            let s = separatrix_slopes(k2, k2 - eps).unwrap();
            ((s.alpha_sep - s.alpha_sep_first_order).abs(), (s.omega_sep - s.omega_sep_first_order).abs())
        };
        let (a1, w1) = err(1e-2);
        let (a2, w2) = err(1e-3);
        let (ra, rw) = (a1 / a2, w1 / w2);
        let inside = |r: f64| r >= ORDER_WINDOW.0 && r <= ORDER_WINDOW.1;
        pass &= inside(ra) && inside(rw);
        parts.push(format!("k2 = {k2}: {ra:.2}, {rw:.2}"));
    }
    outcome(pass, format!("error ratios {}", parts.join("; ")))
}

fn c6_beta_invariance() -> Outcome {
    let samples = beta_invariance_check(&ref_k1(), 2.5, &[0.1, 0.05, 0.01], Tolerances::default()).unwrap();
    let r0 = samples[0].ratio;
    let spread = samples.iter().map(|s| rel(s.ratio, r0)).fold(0.0, f64::max);
    outcome(
        spread <= BETA_RATIO_TOL,
        format!(
            "ratios {:?}, spread {spread:.2e}",
            samples.iter().map(|s| format!("{:.12}", s.ratio)).collect::<Vec<_>>()
        ),
    )
}

fn c7_cycle_bound() -> Outcome {
    let opts = ScanOptions::default();
    let mut parts = Vec::new();
    let mut pass = true;
    for (curve, k, beta_hi) in [(ref_k1(), 1, 6.0), (ref_k2(), 2, 5.0)] {
        let d = scan_diagram(&curve, (0.2, 4.0), (0.5, beta_hi), 50, 50, &opts).unwrap();
        let r = verify_bound(&d, k);
        let pair_ok = d.iter().all(|c| !c.flags.contains(&CellFlag::PairExcess));
        pass &= r.pass && pair_ok && r.max_total <= k + 2;
        parts.push(format!(
            "k = {k}: max total {} (bound {}), {} violations, one small cycle per pair: {pair_ok}",
            r.max_total,
            r.bound,
            r.violations.len()
        ));
    }
    timed(Duration::from_secs(300), outcome(pass, parts.join("; ")))
}

fn c8_sequence() -> Outcome {
    let curve = ref_k1();
    let tol = Tolerances::default();
    let mut states = Vec::new();
    let mut pass = true;
    let kinds = |a: f64, b: f64| -> Vec<SingularKind> {
        find_singular_points(&curve, &SystemParams::new(a, b).unwrap()).unwrap().iter().map(|p| p.kind).collect()
    };
    let cycles = |a: f64, b: f64| cycle_census(&sys(&curve, a, b), DEFAULT_SAMPLES, tol);
    let count = |c: &plds_core::return_map::CycleCensus, size: CycleSize, st: Stability| {
        c.cycles.iter().filter(|l| l.size == size && l.stability == st).count()
    };

    let c = cycles(3.5, 5.5);
    let ok = kinds(3.5, 5.5) == [SingularKind::SewedFocusStable] && c.cycles.is_empty();
    pass &= ok;
    states.push(format!("(3.5, 5.5) stable sewed focus, no cycles: {ok}"));

    let c = cycles(2.5, 4.5);
    let ok = c.cycles.len() == 1 && count(&c, CycleSize::Big, Stability::Stable) == 1;
    pass &= ok;
    states.push(format!("(2.5, 4.5) one big stable cycle: {ok}"));

    let (report, census) = analyze_cell(&curve, 2.0, 4.0, &ScanOptions::default());
    let census = census.unwrap_or_default();
    let big = census.cycles.iter().find(|l| l.size == CycleSize::Big && l.stability == Stability::Stable);
    let ok = report.flags.contains(&CellFlag::EquilibriumSegment)
        && census.cycles.len() == 1
        && big.is_some_and(|l| l.regions_spanned == [1, 2, 3]);
    pass &= ok;
    states.push(format!("(2, 4) equilibrium segment inside a big stable cycle: {ok}"));

    let a = 1.97;
    let b = 1.0 + 1.5 * a;
    let c = cycles(a, b);
    let pairs = c.small_per_pair(curve.region_count());
    let k = kinds(a, b);
    let ok = k == [SingularKind::StableFocus, SingularKind::Saddle, SingularKind::StableFocus]
        && count(&c, CycleSize::Small, Stability::Unstable) == 2
        && pairs == [1, 1]
        && count(&c, CycleSize::Big, Stability::Stable) == 1
        && c.cycles.len() == 3;
    pass &= ok;
    states.push(format!("({a}, {b}) rotated line: two small unstable cycles, two stable foci, big stable cycle: {ok}"));
    outcome(pass, states.join("; "))
}

fn c9_flow_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let curve = random_curve(&mut rng);
        let params = SystemParams::new(rng.gen_range(0.1..5.0), rng.gen_range(0.1..8.0)).unwrap();
        let region = curve.region(rng.gen_range(1..=curve.region_count()));
        let rf = region_system(&curve, &params, region);
        let lo = if region.x_lo.is_finite() { region.x_lo } else { region.x_hi - 2.0 };
        let hi = if region.x_hi.is_finite() { region.x_hi } else { region.x_lo + 2.0 };
        let x = rng.gen_range(lo..hi);
        let p0 = Point::new(x, eval_phi(&curve, x).0 + rng.gen_range(-3.0..3.0));
        for (t, z) in integrate(&rf, p0, 5.0, 0.05) {
            let e = rf.flow_state(p0, t).dist(z) / (1.0 + z.norm());
            worst = worst.max(e);
        }
    }
    outcome(worst <= FLOW_TOL, format!("worst |closed form - integrator|/(1+|z|) = {worst:.2e} over 200 strips"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("C1 sewed center identity", c1_sewed_center),
        ("C2 equilibrium-segment fixed point", c2_segment_fixed_point),
        ("C3 return-map derivative", c3_derivatives),
        ("C4 half-turn map", c4_half_turn),
        ("C5 separatrix slope order", c5_slope_order),
        ("C6 beta invariance", c6_beta_invariance),
        ("C7 cycle-count bound", c7_cycle_bound),
        ("C8 bifurcation sequence", c8_sequence),
        ("C9 flow vs integrator", c9_flow_oracle),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let o = run();
        let dt = t.elapsed();
        let in_time = o.budget.is_none_or(|b| dt <= b);
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = o.budget.map_or(String::new(), |b| format!(" (budget {:?})", b));
        println!("{} {name}: {} [{:.2?}{budget}]", if pass { "PASS" } else { "FAIL" }, o.detail, dt);
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
