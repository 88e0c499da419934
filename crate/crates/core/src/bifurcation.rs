//! Parameter-plane quantities: the sewed-center value of `alpha`, saddle
//! separatrices and loops, homogeneity in `beta` near a corner, and scans of
//! the `(alpha, beta)` plane with the cycle-count bound check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::flow::{boundary_crossing, CrossTerminal};
use crate::model::{discriminant_curve, find_singular_points_with, PwlCurve, PwlSystem, SingularKind};
use crate::return_map::{cycle_census, CycleCensus, DEFAULT_SAMPLES};
use crate::sewing::{section_coordinate, section_point, Section, Sewer, Terminal};
use crate::{Error, Point, Result, SystemParams, Tolerances};

/// `sigma/omega` of both pieces meeting at a corner, as functions of `alpha`.
fn focus_ratios(k1: f64, k2: f64, alpha: f64) -> Option<(f64, f64)> {
    let w1 = 4.0 * alpha - (k1 - 1.0).powi(2);
    let w2 = 4.0 * alpha - (k2 + 1.0).powi(2);
    (w1 > 0.0 && w2 > 0.0).then(|| (-(1.0 + k1) / w1.sqrt(), (k2 - 1.0) / w2.sqrt()))
}

/// `alpha` at which a corner singular point is a sewed center: the root of
/// `sigma1/omega1 + sigma2/omega2 = 0`, bisected on
/// `((k2+1)^2/4, 1000 k2]`.
pub fn alpha_star(k1: f64, k2: f64) -> Result<f64> {
    let no_root = Error::NoRoot { k1, k2 };
    if !(k1 > 0.0 && k2 > 1.0) {
        return Err(no_root);
    }
    let f = |a: f64| focus_ratios(k1, k2, a).map(|(l, r)| l + r);
    let mut lo = 0.25 * (k2 + 1.0).powi(2).max((k1 - 1.0).powi(2));
    let mut hi = 1e3 * k2;
    // The ratio sum is +inf at the lower end.
    match f(hi) {
        Some(v) if v < 0.0 => {}
        _ => return Err(no_root),
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
            break;
        }
        match f(mid) {
            Some(v) if v < 0.0 => hi = mid,
            Some(0.0) => return Ok(mid),
            _ => lo = mid,
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The closed form `(1 - k1/k2) / (k2 - k1 + 2)`, kept for comparison with
/// [`alpha_star`].
pub fn alpha_star_printed(k1: f64, k2: f64) -> f64 {
    (1.0 - k1 / k2) / (k2 - k1 + 2.0)
}

/// Separatrix directions of a dropping-strip saddle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparatrixSlopes {
    pub eps: f64,
    /// Unstable (outgoing) separatrix slope.
    pub alpha_sep: f64,
    /// Stable (incoming) separatrix slope.
    pub omega_sep: f64,
    pub alpha_sep_first_order: f64,
    pub omega_sep_first_order: f64,
    pub eigvec_unstable: Point,
    pub eigvec_stable: Point,
    pub lambda_unstable: f64,
    pub lambda_stable: f64,
}

/// Exact slopes `lambda - k2` of the eigenlines of `[[k2, 1], [-alpha, -1]]`
/// together with their first-order expansions in `eps = k2 - alpha`.
pub fn separatrix_slopes(k2: f64, alpha: f64) -> Result<SeparatrixSlopes> {
    let eps = k2 - alpha;
    if !(eps >= 0.0 && k2 > 1.0 && alpha > 0.0) {
        return Err(Error::NotSaddle { alpha, k2 });
    }
    // lambda^2 - (k2 - 1) lambda - eps = 0
    let b = k2 - 1.0;
    let lp = 0.5 * (b + (b * b + 4.0 * eps).sqrt());
    let lm = -eps / lp;
    let (su, ss) = (lp - k2, lm - k2);
    let unit = |s: f64| {
        let n = (1.0 + s * s).sqrt();
        Point::new(1.0 / n, s / n)
    };
    Ok(SeparatrixSlopes {
        eps,
        alpha_sep: su,
        omega_sep: ss,
        alpha_sep_first_order: -1.0 + eps / b,
        omega_sep_first_order: -k2 - eps / b,
        eigvec_unstable: unit(su),
        eigvec_stable: unit(ss),
        lambda_unstable: lp,
        lambda_stable: lm,
    })
}

/// One sample of the homogeneity check near corner 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaSample {
    pub kappa: f64,
    pub beta: f64,
    /// Zero-isocline intercept above the corner.
    pub s1_prime: f64,
    /// Its image through the dropping strip, below the corner.
    pub s0_prime: f64,
    /// Image of `s0_prime` through the ascending strip, above the corner.
    pub s1: f64,
    pub ratio: f64,
}

/// For `beta = alpha x1 + y1 + kappa` the two-piece system formed by the
/// pieces meeting at corner 1 is homogeneous in `kappa`, so `S1 / S'1` does
/// not depend on `kappa`. The dropping piece is followed as an affine field
/// past its far corner, so that the local picture is measured at any `kappa`.
pub fn beta_invariance_check(
    curve: &PwlCurve,
    alpha: f64,
    kappas: &[f64],
    tol: Tolerances,
) -> Result<Vec<BetaSample>> {
    let c = curve.corner(1);
    let beta0 = alpha * c.x + c.y;
    kappas
        .iter()
        .map(|&kappa| {
            if !(kappa > 0.0) {
                return Err(Error::Geometry(format!("kappa must be positive, got {kappa}")));
            }
            let sys = PwlSystem::new(curve.clone(), SystemParams::new(alpha, beta0 + kappa)?);
            let sewer = Sewer::new(&sys, tol);
            let leg = |start: Point, region: usize| -> Result<f64> {
                let (lo, hi) = if region == 1 { (f64::NEG_INFINITY, c.x) } else { (c.x, f64::INFINITY) };
                let ev = boundary_crossing(sewer.flow(region), start, lo, hi, &tol)?;
                if ev.terminal != CrossTerminal::Crossed {
                    return Err(Error::Geometry(format!("orbit from {start:?} does not return to the corner line")));
                }
                Ok((ev.exit_point.y - c.y).abs())
            };
            let s1_prime = sys.beta() - alpha * c.x - c.y;
            let s0_prime = leg(section_point(&sys, Section::above(1), s1_prime), 2)?;
            let s1 = leg(section_point(&sys, Section::below(1), s0_prime), 1)?;
            Ok(BetaSample {
                kappa,
                beta: sys.beta(),
                s1_prime,
                s0_prime,
                s1,
                ratio: s1 / s1_prime,
            })
        })
        .collect()
}

/// How `beta` follows `alpha` along a one-parameter path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaRule {
    Fixed(f64),
    /// The zero isocline passes through a fixed point: `beta = y0 + alpha x0`.
    ThroughPoint(Point),
}

impl BetaRule {
    pub fn beta(&self, alpha: f64) -> f64 {
        match *self {
            BetaRule::Fixed(b) => b,
            BetaRule::ThroughPoint(p) => p.y + alpha * p.x,
        }
    }
}

/// Which neighbouring ascending strip the loop encircles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopSide {
    Left,
    Right,
}

/// Saddle of dropping strip `region` with its separatrix hits on the corner
/// line bounding the strip on `side`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleShot {
    pub saddle: Point,
    pub slopes: SeparatrixSlopes,
    /// Where the unstable separatrix meets the corner line.
    pub unstable_start: f64,
    /// Where the stable separatrix meets it (on the other ray).
    pub stable_target: f64,
    /// Return of the unstable separatrix through the ascending strip, `0`
    /// if it never comes back.
    pub unstable_return: f64,
}

impl SaddleShot {
    /// Signed gap between the returning unstable and the stable separatrix.
    pub fn gap(&self) -> f64 {
        self.unstable_return - self.stable_target
    }
}

/// Shoots both separatrices of the saddle in dropping strip `region`
/// (even) to the corner line on `side`.
pub fn separatrix_shot(sys: &PwlSystem, region: usize, side: LoopSide, tol: Tolerances) -> Result<SaddleShot> {
    let curve = &sys.curve;
    let (alpha, k2) = (sys.alpha(), curve.k2());
    if !region.is_multiple_of(2) || region == 0 || region >= curve.region_count() {
        return Err(Error::Geometry(format!("region {region} is not a dropping strip")));
    }
    if alpha >= k2 {
        return Err(Error::NotSaddle { alpha, k2 });
    }
    let slopes = separatrix_slopes(k2, alpha)?;
    let sewer = Sewer::new(sys, tol);
    let rf = sewer.flow(region);
    let saddle = rf
        .equilibrium
        .filter(|e| e.x > rf.region.x_lo && e.x < rf.region.x_hi)
        .ok_or_else(|| Error::Geometry(format!("no saddle inside region {region}")))?;
    let (lu, ls) = (slopes.lambda_unstable, slopes.lambda_stable);
    // The eigenlines are straight inside the strip; their hits on a corner
    // line at horizontal distance d from the saddle are at
    // y_c -+ lambda d relative to the corner.
    let (corner, d, out, back) = match side {
        LoopSide::Left => {
            let j = region - 1;
            (j, saddle.x - curve.corner(j).x, Section::below(j), Section::above(j))
        }
        LoopSide::Right => {
            let j = region;
            (j, curve.corner(j).x - saddle.x, Section::above(j), Section::below(j))
        }
    };
    let _ = corner;
    let unstable_start = lu * d;
    let stable_target = -ls * d;
    let tr = sewer.sew(section_point(sys, out, unstable_start), 4, Some(back))?;
    let unstable_return = match tr.terminal {
        Terminal::Crossed(s) if s == back && tr.arcs.iter().all(|a| a.region != region) => {
            section_coordinate(sys, back, tr.end())?
        }
        _ => 0.0,
    };
    Ok(SaddleShot {
        saddle,
        slopes,
        unstable_start,
        stable_target,
        unstable_return,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparatrixLoop {
    pub alpha: f64,
    pub beta: f64,
    pub region: usize,
    pub side: LoopSide,
    /// Trace of the saddle Jacobian; positive, so the loop repels.
    pub saddle_quantity: f64,
}

/// Bisects the separatrix gap in `alpha` to `|d alpha| <= 1e-9`.
pub fn find_separatrix_loop(
    curve: &PwlCurve,
    rule: BetaRule,
    region: usize,
    side: LoopSide,
    alpha_bracket: (f64, f64),
    tol: Tolerances,
) -> Result<SeparatrixLoop> {
    let (mut lo, mut hi) = alpha_bracket;
    if !(lo < hi) {
        return Err(Error::BadRange(format!("alpha bracket [{lo}, {hi}]")));
    }
    let gap = |a: f64| -> Result<f64> {
        let sys = PwlSystem::new(curve.clone(), SystemParams::new(a, rule.beta(a))?);
        Ok(separatrix_shot(&sys, region, side, tol)?.gap())
    };
    let (glo, ghi) = (gap(lo)?, gap(hi)?);
    if glo.signum() == ghi.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if (gap(mid)? < 0.0) == (glo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    Ok(SeparatrixLoop {
        alpha,
        beta: rule.beta(alpha),
        region,
        side,
        saddle_quantity: curve.k2() - 1.0,
    })
}

/// Evaluates the separatrix gap on `n` points of a bracket.
pub fn gap_profile(
    curve: &PwlCurve,
    rule: BetaRule,
    region: usize,
    side: LoopSide,
    alpha_bracket: (f64, f64),
    n: usize,
    tol: Tolerances,
) -> Result<Vec<(f64, f64)>> {
    grid(alpha_bracket, n)?
        .into_iter()
        .map(|a| {
            let sys = PwlSystem::new(curve.clone(), SystemParams::new(a, rule.beta(a))?);
            Ok((a, separatrix_shot(&sys, region, side, tol)?.gap()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CellFlag {
    SewedCenter,
    EquilibriumSegment,
    SeparatrixLoopNear,
    DoubleCycleNear,
    NonReturning,
    /// More than one small cycle around one pair of strips.
    PairExcess,
    /// The singular-point problem was ambiguous.
    Degenerate,
}

impl CellFlag {
    pub const ALL: [CellFlag; 7] = [
        CellFlag::SewedCenter,
        CellFlag::EquilibriumSegment,
        CellFlag::SeparatrixLoopNear,
        CellFlag::DoubleCycleNear,
        CellFlag::NonReturning,
        CellFlag::PairExcess,
        CellFlag::Degenerate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CellFlag::SewedCenter => "SewedCenter",
            CellFlag::EquilibriumSegment => "EquilibriumSegment",
            CellFlag::SeparatrixLoopNear => "SeparatrixLoopNear",
            CellFlag::DoubleCycleNear => "DoubleCycleNear",
            CellFlag::NonReturning => "NonReturning",
            CellFlag::PairExcess => "PairExcess",
            CellFlag::Degenerate => "Degenerate",
        }
    }
}

impl fmt::Display for CellFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CellFlag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CellFlag::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown flag {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub alpha: f64,
    pub beta: f64,
    pub n_singular: usize,
    pub n_small: usize,
    pub n_big: usize,
    pub flags: BTreeSet<CellFlag>,
}

impl CellReport {
    pub fn total(&self) -> usize {
        self.n_small + self.n_big
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Overlay {
    /// Half-line `beta = slope alpha + intercept` for `alpha <= alpha_max`.
    DiscriminantLine { corner: usize, slope: f64, intercept: f64, alpha_max: f64 },
    /// Sewed center at a corner.
    AlphaStar { corner: usize, alpha: f64, beta: f64 },
    FoldPoint { alpha: f64, beta: f64 },
    LoopPoint { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDiagram {
    pub alpha_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    /// `cells[i][j]` at `(alpha_grid[i], beta_grid[j])`.
    pub cells: Vec<Vec<CellReport>>,
    pub curves: Vec<Overlay>,
}

impl BifurcationDiagram {
    /// Cells in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = &CellReport> {
        self.cells.iter().flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanOptions {
    /// Samples per section map.
    pub samples: usize,
    pub tol: Tolerances,
    /// `|G|` below `loop_tol * scale` raises `SeparatrixLoopNear`.
    pub loop_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            tol: Tolerances::default(),
            loop_tol: 1e-3,
        }
    }
}

/// `n` evenly spaced values; `n = 1` gives `[lo]`.
pub fn grid((lo, hi): (f64, f64), n: usize) -> Result<Vec<f64>> {
    if n == 0 || !lo.is_finite() || !hi.is_finite() || lo > hi || (n > 1 && lo == hi) {
        return Err(Error::BadRange(format!("[{lo}, {hi}] with {n} points")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect())
}

/// Qualitative report of one parameter point.
pub fn analyze_cell(curve: &PwlCurve, alpha: f64, beta: f64, opts: &ScanOptions) -> (CellReport, Option<CycleCensus>) {
    let mut flags = BTreeSet::new();
    let mut report = CellReport { alpha, beta, n_singular: 0, n_small: 0, n_big: 0, flags: BTreeSet::new() };
    let Ok(params) = SystemParams::new(alpha, beta) else {
        report.flags.insert(CellFlag::Degenerate);
        return (report, None);
    };
    match find_singular_points_with(curve, &params, &opts.tol) {
        Ok(points) => {
            report.n_singular = points.len();
            for p in &points {
                match p.kind {
                    SingularKind::SewedCenter => {
                        flags.insert(CellFlag::SewedCenter);
                    }
                    SingularKind::EquilibriumSegment => {
                        flags.insert(CellFlag::EquilibriumSegment);
                    }
                    _ => {}
                }
            }
        }
        Err(_) => {
            flags.insert(CellFlag::Degenerate);
        }
    }
    let sys = PwlSystem::new(curve.clone(), params);
    let census = cycle_census(&sys, opts.samples, opts.tol);
    if census.continuum {
        flags.insert(CellFlag::SewedCenter);
    }
    if census.double_near {
        flags.insert(CellFlag::DoubleCycleNear);
    }
    if !census.silent_sections.is_empty() {
        flags.insert(CellFlag::NonReturning);
    }
    if census.small_per_pair(curve.region_count()).iter().any(|&n| n > 1) {
        flags.insert(CellFlag::PairExcess);
    }
    if alpha < curve.k2() {
        let scale = curve.scale();
        'outer: for region in (2..curve.region_count()).step_by(2) {
            for side in [LoopSide::Left, LoopSide::Right] {
                if let Ok(shot) = separatrix_shot(&sys, region, side, opts.tol) {
                    if shot.unstable_return > 0.0 && shot.gap().abs() <= opts.loop_tol * scale {
                        flags.insert(CellFlag::SeparatrixLoopNear);
                        break 'outer;
                    }
                }
            }
        }
    }
    report.n_small = census.small();
    report.n_big = census.big();
    report.flags = flags;
    (report, Some(census))
}

/// Scans an `na x nb` grid; cells run concurrently, output is row-major.
pub fn scan_diagram(
    curve: &PwlCurve,
    alpha_range: (f64, f64),
    beta_range: (f64, f64),
    na: usize,
    nb: usize,
    opts: &ScanOptions,
) -> Result<BifurcationDiagram> {
    let alpha_grid = grid(alpha_range, na)?;
    let beta_grid = grid(beta_range, nb)?;
    if alpha_grid[0] <= 0.0 || beta_grid[0] <= 0.0 {
        return Err(Error::BadRange("alpha and beta must be positive".into()));
    }
    opts.tol.validate()?;
    let flat: Vec<CellReport> = alpha_grid
        .iter()
        .flat_map(|&a| beta_grid.iter().map(move |&b| (a, b)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(a, b)| analyze_cell(curve, a, b, opts).0)
        .collect();
    let cells: Vec<Vec<CellReport>> = flat.chunks(nb).map(|c| c.to_vec()).collect();
    let curves = overlays(curve, &alpha_grid, &beta_grid, &cells);
    Ok(BifurcationDiagram { alpha_grid, beta_grid, cells, curves })
}

fn overlays(curve: &PwlCurve, ag: &[f64], bg: &[f64], cells: &[Vec<CellReport>]) -> Vec<Overlay> {
    let disc = discriminant_curve(curve);
    let mut out: Vec<Overlay> = disc
        .lines
        .iter()
        .map(|l| Overlay::DiscriminantLine {
            corner: l.corner,
            slope: l.slope,
            intercept: l.intercept,
            alpha_max: disc.alpha_max,
        })
        .collect();
    let (alo, ahi) = (ag[0], *ag.last().unwrap());
    let (blo, bhi) = (bg[0], *bg.last().unwrap());
    if let Ok(a) = alpha_star(curve.k1(), curve.k2()) {
        if a >= alo && a <= ahi {
            for (i, c) in curve.corners().iter().enumerate() {
                let b = a * c.x + c.y;
                if b >= blo && b <= bhi {
                    out.push(Overlay::AlphaStar { corner: i + 1, alpha: a, beta: b });
                }
            }
        }
    }
    for c in cells.iter().flatten() {
        if c.flags.contains(&CellFlag::DoubleCycleNear) {
            out.push(Overlay::FoldPoint { alpha: c.alpha, beta: c.beta });
        }
        if c.flags.contains(&CellFlag::SeparatrixLoopNear) {
            out.push(Overlay::LoopPoint { alpha: c.alpha, beta: c.beta });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub alpha: f64,
    pub beta: f64,
    pub n_small: usize,
    pub n_big: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub max_total: usize,
    pub bound: usize,
    pub violations: Vec<Violation>,
}

/// Checks `total <= k + 2`, `small <= k + 1` and `big <= 2` in every cell,
/// and at most one small cycle per strip pair.
pub fn verify_bound(diagram: &BifurcationDiagram, k: usize) -> VerifyReport {
    let bound = k + 2;
    let mut violations = Vec::new();
    let mut max_total = 0;
    for c in diagram.iter() {
        max_total = max_total.max(c.total());
        let mut reasons = Vec::new();
        if c.total() > bound {
            reasons.push(format!("total {} > {bound}", c.total()));
        }
        if c.n_small > k + 1 {
            reasons.push(format!("small {} > {}", c.n_small, k + 1));
        }
        if c.n_big > 2 {
            reasons.push(format!("big {} > 2", c.n_big));
        }
        if c.flags.contains(&CellFlag::PairExcess) {
            reasons.push("two small cycles around one strip pair".into());
        }
        if !reasons.is_empty() {
            violations.push(Violation {
                alpha: c.alpha,
                beta: c.beta,
                n_small: c.n_small,
                n_big: c.n_big,
                reason: reasons.join("; "),
            });
        }
    }
    VerifyReport { pass: violations.is_empty(), max_total, bound, violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_curve;
    use approx::assert_relative_eq;

    fn k1_curve() -> PwlCurve {
        build_curve(vec![Point::new(1.0, 2.0), Point::new(2.0, 0.0)], 1.0, 2.0).unwrap()
    }

    /// Center condition solved by hand: squaring gives a linear equation.
    fn alpha_star_oracle(k1: f64, k2: f64) -> f64 {
        let (a, b) = ((1.0 + k1).powi(2), (k2 - 1.0).powi(2));
        (k2 * a + k1 * b) / (a - b)
    }

    #[test]
    fn alpha_star_reference() {
        assert_relative_eq!(alpha_star(1.0, 2.0).unwrap(), 3.0, epsilon = 1e-12);
        for (k1, k2) in [(0.5, 1.5), (2.0, 3.0), (1.0, 2.5)] {
            assert_relative_eq!(alpha_star(k1, k2).unwrap(), alpha_star_oracle(k1, k2), max_relative = 1e-12);
        }
        assert!(alpha_star(1.0, 0.5).is_err());
        assert!(alpha_star(1.0, 3.5).is_err());
        assert_relative_eq!(alpha_star_printed(1.0, 2.0), 1.0 / 6.0);
    }

    #[test]
    fn alpha_star_grows_as_k1_shrinks() {
        let vals: Vec<f64> = (1..=10).map(|i| alpha_star(0.2 * i as f64, 2.0).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn slopes_limit_and_order() {
        let s = separatrix_slopes(2.0, 2.0).unwrap();
        assert_eq!((s.alpha_sep, s.omega_sep), (-1.0, -2.0));
        let s = separatrix_slopes(2.0, 1.99).unwrap();
        assert_relative_eq!(s.alpha_sep, -0.99, epsilon = 2e-4);
        assert!(separatrix_slopes(2.0, 2.1).is_err());
        // Eigenvector check against the matrix.
        let v = s.eigvec_unstable;
        let av = Point::new(2.0 * v.x + v.y, -1.99 * v.x - v.y);
        assert_relative_eq!(av.x, s.lambda_unstable * v.x, epsilon = 1e-14);
        assert_relative_eq!(av.y, s.lambda_unstable * v.y, epsilon = 1e-14);
    }

    #[test]
    fn beta_samples_scale() {
        let out = beta_invariance_check(&k1_curve(), 2.5, &[0.1, 0.05, 0.01], Tolerances::default()).unwrap();
        for s in &out {
            assert_relative_eq!(s.ratio, out[0].ratio, max_relative = 1e-8);
            assert_relative_eq!(s.s0_prime / s.kappa, out[0].s0_prime / out[0].kappa, max_relative = 1e-8);
        }
        assert!(beta_invariance_check(&k1_curve(), 2.5, &[-0.1], Tolerances::default()).is_err());
        assert_eq!(beta_invariance_check(&k1_curve(), 2.5, &[0.2], Tolerances::default()).unwrap().len(), 1);
    }

    #[test]
    fn grids() {
        assert_eq!(grid((1.0, 2.0), 1).unwrap(), vec![1.0]);
        assert_eq!(grid((1.0, 2.0), 3).unwrap(), vec![1.0, 1.5, 2.0]);
        assert!(grid((2.0, 1.0), 3).is_err());
        assert!(grid((1.0, 2.0), 0).is_err());
    }

    #[test]
    fn forged_cell_is_reported() {
        let mut d = scan_diagram(&k1_curve(), (3.0, 3.0), (5.0, 5.0), 1, 1, &ScanOptions::default()).unwrap();
        assert!(d.cells[0][0].flags.contains(&CellFlag::SewedCenter));
        assert!(verify_bound(&d, 1).pass);
        d.cells[0][0].n_small = 99;
        let r = verify_bound(&d, 1);
        assert!(!r.pass);
        assert_eq!(r.max_total, 99);
        assert_eq!(r.violations.len(), 1);
    }

    #[test]
    fn flags_round_trip() {
        for f in CellFlag::ALL {
            assert_eq!(f.as_str().parse::<CellFlag>().unwrap(), f);
        }
        assert!("Bogus".parse::<CellFlag>().is_err());
    }
}
