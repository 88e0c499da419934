//! Return maps on corner-line sections and limit-cycle extraction.
//!
//! A map on `Section::below(j)` follows the orbit from `(x_j, y_j - S0)`
//! until it next crosses the same ray. Its derivative along a circuit is
//!
//! ```text
//! dS'/dS = (S / S') * exp(2 * sum_i sigma_i * tau_i)
//! ```
//!
//! (flux ratio through the section times the integrated divergence), summed
//! over the arcs of the circuit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::model::{find_singular_points_with, PwlSystem};
use crate::sewing::{section_coordinate, section_point, Section, Sewer, SewnTrajectory, Terminal};
use crate::{Error, Result, Tolerances};

/// Default number of log-spaced samples per map.
pub const DEFAULT_SAMPLES: usize = 200;
/// `|f' - 1|` below this at a fixed point marks a double-cycle candidate.
pub const DOUBLE_CYCLE: f64 = 1e-4;

/// Which circuit a sample followed: `Xi` stays left of the last strip,
/// `Psi` enters it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Xi,
    Psi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapImage {
    pub s0_bar: f64,
    pub deriv: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapSample {
    pub s0: f64,
    /// `None` when the orbit does not come back (converges, escapes, or the
    /// crossing budget runs out).
    pub image: Option<MapImage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnMap {
    pub section: Section,
    pub samples: Vec<MapSample>,
    /// First `Xi`/`Psi` switch point.
    pub s_star: Option<f64>,
}

impl ReturnMap {
    pub fn returning(&self) -> impl Iterator<Item = (f64, MapImage)> + '_ {
        self.samples.iter().filter_map(|s| s.image.map(|i| (s.s0, i)))
    }
}

/// One closed circuit from a section back to itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub s0: f64,
    pub s0_bar: f64,
    pub deriv: f64,
    pub branch: Branch,
    pub traj: SewnTrajectory,
}

/// `zeta(tau)` and `chi(tau)` of the half-turn parametrisation.
pub fn zeta_chi(sigma: f64, omega: f64, tau: f64) -> (f64, f64) {
    let s = (omega * tau).sin();
    let vers = 2.0 * (0.5 * omega * tau).sin().powi(2); // 1 - cos
    // w cos - w e^{-+ sigma tau} = w (-(1 - cos) - expm1(-+ sigma tau))
    let zeta = (omega * (-vers - (-sigma * tau).exp_m1()) - sigma * s) / s;
    let chi = (omega * (-vers - (sigma * tau).exp_m1()) + sigma * s) / s;
    (zeta, chi)
}

/// Passage through a strip whose focus lies a distance `delta0` beyond the
/// boundary (on the far side, so the arc is less than a half turn).
///
/// Solves `S0 = -delta0 zeta(tau)` for `tau` in `(0, pi/omega)` and returns
/// `(S1, tau)` with `S1 = -delta0 chi(tau)`. For `delta0 = 0` the focus sits
/// on the boundary and the map is `S1 = S0 exp(pi sigma / omega)`.
pub fn half_map_region(s0: f64, sigma: f64, omega: f64, delta0: f64) -> Result<(f64, f64)> {
    if !(s0 > 0.0 && s0.is_finite() && omega > 0.0 && delta0 >= 0.0) {
        return Err(Error::NoSolution { s0 });
    }
    let half = PI / omega;
    if delta0 == 0.0 {
        return Ok((s0 * (PI * sigma / omega).exp(), half));
    }
    let target = s0 / delta0;
    // -zeta increases from 0 to +inf on (0, pi/omega).
    let g = |t: f64| -zeta_chi(sigma, omega, t).0 - target;
    let (mut a, mut b) = (0.0, half);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let v = g(mid);
        if !v.is_finite() {
            return Err(Error::NoSolution { s0 });
        }
        if v < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let tau = 0.5 * (a + b);
    if tau <= 0.0 || tau >= half {
        return Err(Error::NoSolution { s0 });
    }
    Ok((-delta0 * zeta_chi(sigma, omega, tau).1, tau))
}

/// Return map of a dropping section that is a whole segment of equilibria
/// (`alpha = k2`), with strip width `delta` and the focus data of the
/// neighbouring ascending strips.
pub fn equilibrium_segment_map(s0: f64, sigma1: f64, omega1: f64, delta: f64, k2: f64) -> f64 {
    let e = (PI * sigma1 / omega1).exp();
    s0 * e * e + delta * (k2 - 1.0) * (1.0 + e)
}

/// The unique fixed point of [`equilibrium_segment_map`] (`sigma1 < 0`).
pub fn equilibrium_segment_fixed_point(sigma1: f64, omega1: f64, delta: f64, k2: f64) -> f64 {
    let e = (PI * sigma1 / omega1).exp();
    delta * (k2 - 1.0) * (1.0 + e) / (1.0 - e * e)
}

/// Derivative of the return map along a closed circuit.
pub fn map_derivative(traj: &SewnTrajectory, s0: f64, s0_bar: f64) -> Result<f64> {
    if !matches!(traj.terminal, Terminal::Crossed(_)) || s0_bar <= 0.0 {
        return Err(Error::OpenTrajectory);
    }
    let exponent: f64 = traj.arcs.iter().map(|a| a.sigma * a.tau).sum();
    Ok(s0 / s0_bar * (2.0 * exponent).exp())
}

impl Sewer<'_> {
    fn circuit_budget(&self) -> usize {
        4 * self.sys.curve.k() + 4
    }

    /// Follows the orbit from `S0` on `section` to its first return.
    pub fn circuit(&self, section: Section, s0: f64) -> Result<Circuit> {
        let start = section_point(self.sys, section, s0);
        let traj = self.sew(start, self.circuit_budget(), Some(section))?;
        if !matches!(traj.terminal, Terminal::Crossed(_)) {
            return Err(Error::NonReturning);
        }
        let s0_bar = section_coordinate(self.sys, section, traj.end())?;
        if s0_bar <= 0.0 {
            return Err(Error::NonReturning);
        }
        let deriv = map_derivative(&traj, s0, s0_bar)?;
        let last = self.sys.curve.region_count();
        let branch = if traj.arcs.iter().any(|a| a.region == last) {
            Branch::Psi
        } else {
            Branch::Xi
        };
        Ok(Circuit { s0, s0_bar, deriv, branch, traj })
    }

    fn image(&self, section: Section, s0: f64) -> Option<MapImage> {
        self.circuit(section, s0).ok().map(|c| MapImage {
            s0_bar: c.s0_bar,
            deriv: c.deriv,
            branch: c.branch,
        })
    }
}

/// `n` log-spaced points covering `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let r = (hi / lo).ln();
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo * (r * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Samples the return map of `section` on `n` log-spaced points of `s_range`.
pub fn build_return_map(
    sys: &PwlSystem,
    section: Section,
    s_range: (f64, f64),
    n: usize,
    tol: Tolerances,
) -> Result<ReturnMap> {
    let (lo, hi) = s_range;
    if n < 2 || !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::BadRange(format!("need n >= 2 and 0 < lo < hi, got {n} on [{lo}, {hi}]")));
    }
    if section.corner == 0 || section.corner > sys.curve.corners().len() {
        return Err(Error::BadRange(format!("no corner {}", section.corner)));
    }
    let sewer = Sewer::new(sys, tol);
    Ok(sewer.return_map(section, &log_grid(lo, hi, n)))
}

impl Sewer<'_> {
    pub fn return_map(&self, section: Section, grid: &[f64]) -> ReturnMap {
        let samples: Vec<MapSample> = grid
            .par_iter()
            .map(|&s0| MapSample { s0, image: self.image(section, s0) })
            .collect();
        let s_star = self.locate_branch_switch(section, &samples);
        ReturnMap { section, samples, s_star }
    }

    fn locate_branch_switch(&self, section: Section, samples: &[MapSample]) -> Option<f64> {
        let (mut a, mut b, ba) = samples.windows(2).find_map(|w| match (w[0].image, w[1].image) {
            (Some(x), Some(y)) if x.branch != y.branch => Some((w[0].s0, w[1].s0, x.branch)),
            _ => None,
        })?;
        while b - a > 1e-10 * a.max(1.0) {
            let mid = 0.5 * (a + b);
            match self.image(section, mid) {
                Some(img) if img.branch == ba => a = mid,
                Some(_) => b = mid,
                // Caught on a separatrix: that is the switch point.
                None => return Some(mid),
            }
        }
        Some(0.5 * (a + b))
    }
}

/// Extra samples per side of a branch switch.
const LADDER: usize = 13;

/// Points from `from` toward `to` at geometrically shrinking distances.
fn ladder(out: &mut Vec<f64>, from: f64, to: f64) {
    for j in 1..=LADDER {
        out.push(to + (from - to) * 10f64.powi(-(j as i32)));
    }
    out.push(to);
}

#[derive(Debug, Clone, Copy)]
struct Pt {
    s: f64,
    g: f64,
    d: f64,
    branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
    SemiStable,
}

/// `Small` cycles lie in at most two adjoining strips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CycleSize {
    Small,
    Big,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCycle {
    pub section: Section,
    pub s_fixed: f64,
    pub stability: Stability,
    pub multiplicity_hint: u8,
    pub size: CycleSize,
    pub regions_spanned: Vec<usize>,
    /// `f'(s_fixed)`.
    pub derivative: f64,
    pub period: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CycleSearch {
    pub cycles: Vec<LimitCycle>,
    /// A run of samples lies on the diagonal: a band of closed orbits.
    pub continuum: bool,
    /// Some sample neighbourhood nearly touches the diagonal with `f' ~ 1`.
    pub double_near: bool,
}

/// Isolates the fixed points of a sampled map.
pub fn find_limit_cycles(sys: &PwlSystem, rm: &ReturnMap, tol: Tolerances) -> CycleSearch {
    Sewer::new(sys, tol).limit_cycles(rm)
}

impl Sewer<'_> {
    fn g(&self, section: Section, s: f64) -> Option<f64> {
        self.image(section, s).map(|i| i.s0_bar - s)
    }

    fn cycle_at(&self, section: Section, s: f64, forced: Option<Stability>) -> Option<LimitCycle> {
        let c = self.circuit(section, s).ok()?;
        let regions = c.traj.regions();
        let deriv = if self.reversed { 1.0 / c.deriv } else { c.deriv };
        let stability = forced.unwrap_or(if deriv < 1.0 {
            Stability::Stable
        } else {
            Stability::Unstable
        });
        let double = forced.is_some() || (deriv - 1.0).abs() <= DOUBLE_CYCLE;
        Some(LimitCycle {
            section,
            s_fixed: s,
            stability,
            multiplicity_hint: if double { 2 } else { 1 },
            size: if regions.len() <= 2 { CycleSize::Small } else { CycleSize::Big },
            regions_spanned: regions,
            derivative: deriv,
            period: c.traj.total_time(),
        })
    }

    /// Root of `g` in `[a, b]` with `ga * gb < 0`: Illinois false position.
    fn refine_root(&self, section: Section, mut a: f64, mut ga: f64, mut b: f64, mut gb: f64) -> Option<f64> {
        let ftol = self.tol.fixedpoint;
        let mut side = 0i8;
        for _ in 0..200 {
            let mut s = (a * gb - b * ga) / (gb - ga);
            if !(s > a && s < b) {
                s = 0.5 * (a + b);
            }
            let gs = self.g(section, s)?;
            if gs.abs() <= ftol * (1.0 + s) || b - a <= 4.0 * f64::EPSILON * b {
                return Some(s);
            }
            if (gs < 0.0) == (ga < 0.0) {
                a = s;
                ga = gs;
                if side == -1 {
                    gb *= 0.5;
                }
                side = -1;
            } else {
                b = s;
                gb = gs;
                if side == 1 {
                    ga *= 0.5;
                }
                side = 1;
            }
        }
        Some(0.5 * (a + b))
    }

    /// Grid samples plus geometric ladders converging on each branch switch
    /// from both sides; the map is steepest there when a saddle sits on the
    /// switching orbit.
    fn augmented(&self, rm: &ReturnMap) -> Vec<Option<Pt>> {
        let section = rm.section;
        let pt = |s: f64, i: MapImage| Pt { s, g: i.s0_bar - s, d: i.deriv, branch: i.branch };
        let mut pts: Vec<Option<Pt>> = rm.samples.iter().map(|m| m.image.map(|i| pt(m.s0, i))).collect();
        let mut extra = Vec::new();
        for w in rm.samples.windows(2) {
            let (a, b) = (w[0].s0, w[1].s0);
            match (w[0].image, w[1].image) {
                (Some(ia), Some(ib)) if ia.branch != ib.branch => {
                    let (lo, hi) = self.switch_bracket(section, a, b, |i| i.is_some_and(|i| i.branch == ia.branch));
                    ladder(&mut extra, a, lo);
                    ladder(&mut extra, b, hi);
                }
                (Some(_), None) => {
                    let (lo, _) = self.switch_bracket(section, a, b, |i| i.is_some());
                    ladder(&mut extra, a, lo);
                }
                (None, Some(_)) => {
                    let (_, hi) = self.switch_bracket(section, a, b, |i| i.is_none());
                    ladder(&mut extra, b, hi);
                }
                _ => {}
            }
        }
        let evaluated: Vec<Option<Pt>> = extra
            .par_iter()
            .map(|&s| self.image(section, s).map(|i| pt(s, i)))
            .collect();
        pts.extend(evaluated.into_iter().filter(Option::is_some));
        pts.sort_by(|a, b| match (a, b) {
            (Some(a), Some(b)) => a.s.total_cmp(&b.s),
            _ => std::cmp::Ordering::Equal,
        });
        // Keep the non-returning gaps of the grid in place: rebuild by s.
        let mut merged: Vec<Option<Pt>> = Vec::with_capacity(pts.len());
        let mut grid_gaps: Vec<f64> = rm.samples.iter().filter(|m| m.image.is_none()).map(|m| m.s0).collect();
        grid_gaps.sort_by(f64::total_cmp);
        let mut returning: Vec<Pt> = pts.into_iter().flatten().collect();
        returning.dedup_by(|a, b| a.s == b.s);
        let (mut i, mut j) = (0, 0);
        while i < returning.len() || j < grid_gaps.len() {
            if j == grid_gaps.len() || (i < returning.len() && returning[i].s < grid_gaps[j]) {
                merged.push(Some(returning[i]));
                i += 1;
            } else {
                merged.push(None);
                j += 1;
            }
        }
        merged
    }

    /// Shrinks `[a, b]` to a few ulps around the point where `left` stops
    /// holding.
    fn switch_bracket(&self, section: Section, mut a: f64, mut b: f64, left: impl Fn(Option<MapImage>) -> bool) -> (f64, f64) {
        while b - a > 4.0 * f64::EPSILON * b {
            let mid = 0.5 * (a + b);
            let img = self.image(section, mid);
            if left(img) {
                a = mid;
            } else {
                b = mid;
            }
        }
        (a, b)
    }

    pub fn limit_cycles(&self, rm: &ReturnMap) -> CycleSearch {
        let section = rm.section;
        let center_tol = self.tol.center;
        let accept = 10.0 * self.tol.fixedpoint;
        let pts = self.augmented(rm);
        let flat: Vec<bool> = pts
            .iter()
            .map(|p| p.is_some_and(|p| p.g.abs() <= center_tol * (1.0 + p.s)))
            .collect();
        // Runs of at least three samples on the diagonal.
        let mut in_run = vec![false; pts.len()];
        let mut continuum = false;
        let mut i = 0;
        while i < flat.len() {
            let mut j = i;
            while j < flat.len() && flat[j] {
                j += 1;
            }
            if j - i >= 3 {
                continuum = true;
                in_run[i..j].iter_mut().for_each(|b| *b = true);
            }
            i = j.max(i + 1);
        }

        let mut out = CycleSearch { continuum, ..Default::default() };
        for w in 0..pts.len().saturating_sub(1) {
            let (Some(a), Some(b)) = (pts[w], pts[w + 1]) else {
                continue;
            };
            if in_run[w] || in_run[w + 1] || a.branch != b.branch {
                continue;
            }
            let root = if a.g == 0.0 {
                Some(a.s)
            } else if a.g * b.g < 0.0 {
                self.refine_root(section, a.s, a.g, b.s, b.g)
            } else {
                None
            };
            let cycle = root
                .filter(|&s| self.g(section, s).is_some_and(|g| g.abs() <= accept * (1.0 + s)))
                .and_then(|s| self.cycle_at(section, s, None));
            if let Some(c) = cycle {
                if !out.cycles.iter().any(|o: &LimitCycle| (o.s_fixed - c.s_fixed).abs() <= 1e-9 * (1.0 + c.s_fixed)) {
                    out.cycles.push(c);
                }
            }
        }

        // Tangencies: local minima of |g| without a sign change.
        for w in 1..pts.len().saturating_sub(1) {
            let (Some(pa), Some(pm), Some(pb)) = (pts[w - 1], pts[w], pts[w + 1]) else {
                continue;
            };
            if pa.branch != pm.branch || pm.branch != pb.branch {
                continue;
            }
            let (sa, ga, sb, gb, gm, dm) = (pa.s, pa.g, pb.s, pb.g, pm.g, pm.d);
            if in_run[w] || ga * gm <= 0.0 || gm * gb <= 0.0 || gm.abs() >= ga.abs() || gm.abs() >= gb.abs() {
                continue;
            }
            if let Some((s, g, d)) = self.tangency(section, sa, sb) {
                if (d - 1.0).abs() <= DOUBLE_CYCLE && g.abs() <= 1e-3 * (1.0 + s) {
                    out.double_near = true;
                }
                if (d - 1.0).abs() <= DOUBLE_CYCLE && g.abs() <= self.tol.fixedpoint * (1.0 + s) {
                    if let Some(c) = self.cycle_at(section, s, Some(Stability::SemiStable)) {
                        out.cycles.push(c);
                    }
                }
            } else if (dm - 1.0).abs() <= DOUBLE_CYCLE && gm.abs() <= 1e-3 * (1.0 + pm.s) {
                out.double_near = true;
            }
        }
        if out.cycles.iter().any(|c| c.multiplicity_hint == 2) {
            out.double_near = true;
        }
        out.cycles.sort_by(|a, b| a.s_fixed.total_cmp(&b.s_fixed));
        out
    }

    /// Point of `[a, b]` where `f' = 1`, if `f' - 1` changes sign there.
    fn tangency(&self, section: Section, mut a: f64, mut b: f64) -> Option<(f64, f64, f64)> {
        let d = |s: f64| self.image(section, s).map(|i| (i.s0_bar - s, i.deriv - 1.0));
        let (_, da) = d(a)?;
        let (_, db) = d(b)?;
        if da * db > 0.0 {
            return None;
        }
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            let (_, dm) = d(m)?;
            if (dm < 0.0) == (da < 0.0) {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 1e-13 * b {
                break;
            }
        }
        let s = 0.5 * (a + b);
        let (g, dm) = d(s)?;
        Some((s, g, dm + 1.0))
    }
}

/// Sample range used for automatic searches on a section.
pub fn default_range(sys: &PwlSystem, tol: &Tolerances) -> (f64, f64) {
    let mut scale = sys.curve.scale();
    if let Ok(points) = find_singular_points_with(&sys.curve, &sys.params, tol) {
        for p in points {
            scale = scale.max(p.location.x.abs()).max(p.location.y.abs());
        }
    }
    (1e-6 * scale, 100.0 * scale)
}

/// All limit cycles of a system, searched on every `Below` section and
/// deduplicated: a cycle is kept on the leftmost corner line it crosses.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CycleCensus {
    pub cycles: Vec<LimitCycle>,
    pub continuum: bool,
    pub double_near: bool,
    /// Sections whose samples all failed to return.
    pub silent_sections: Vec<usize>,
}

impl CycleCensus {
    pub fn small(&self) -> usize {
        self.cycles.iter().filter(|c| c.size == CycleSize::Small).count()
    }

    pub fn big(&self) -> usize {
        self.cycles.iter().filter(|c| c.size == CycleSize::Big).count()
    }

    /// Small cycles per adjoining strip pair `(j, j + 1)`, indexed by `j - 1`.
    pub fn small_per_pair(&self, regions: usize) -> Vec<usize> {
        let mut v = vec![0; regions.saturating_sub(1)];
        for c in self.cycles.iter().filter(|c| c.size == CycleSize::Small) {
            if let Some(&j) = c.regions_spanned.first() {
                if j >= 1 && j <= v.len() {
                    v[j - 1] += 1;
                }
            }
        }
        v
    }
}

/// Repelling cycles are ill-conditioned forward in time (their multiplier
/// can be astronomically large near a saddle loop), so they are taken from
/// the time-reversed maps, where they attract; attracting and semi-stable
/// cycles come from the forward maps.
pub fn cycle_census(sys: &PwlSystem, n: usize, tol: Tolerances) -> CycleCensus {
    let forward = Sewer::new(sys, tol);
    let backward = Sewer::reversed(sys, tol);
    let (lo, hi) = default_range(sys, &tol);
    let grid = log_grid(lo, hi, n.max(2));
    let mut census = CycleCensus::default();
    for j in 1..=sys.curve.corners().len() {
        let rm = forward.return_map(Section::below(j), &grid);
        let own = |c: &LimitCycle| c.regions_spanned.first() == Some(&j);
        if rm.samples.iter().all(|s| s.image.is_none()) {
            census.silent_sections.push(j);
        } else {
            let found = forward.limit_cycles(&rm);
            census.continuum |= found.continuum;
            census.double_near |= found.double_near;
            census
                .cycles
                .extend(found.cycles.into_iter().filter(|c| own(c) && c.stability != Stability::Unstable));
        }
        let rm = backward.return_map(Section::below(j), &grid);
        if rm.samples.iter().any(|s| s.image.is_some()) {
            let found = backward.limit_cycles(&rm);
            census.double_near |= found.double_near;
            census
                .cycles
                .extend(found.cycles.into_iter().filter(|c| own(c) && c.stability == Stability::Unstable));
        }
    }
    census
}
