//! Sewing strip flows into global trajectories, and the sections on the
//! corner lines that carry the return-map coordinates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::flow::{boundary_crossing, region_system, CrossTerminal, RegionFlow};
use crate::model::PwlSystem;
use crate::{Error, Point, Result, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Below,
    Above,
}

/// Vertical ray on the corner line `x = x_j`, starting at corner `j` and
/// running down (`Below`) or up (`Above`). The coordinate `S` is the distance
/// from the corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Section {
    pub corner: usize,
    pub side: Side,
}

impl Section {
    pub const fn below(corner: usize) -> Self {
        Self { corner, side: Side::Below }
    }

    pub const fn above(corner: usize) -> Self {
        Self { corner, side: Side::Above }
    }
}

pub fn section_point(sys: &PwlSystem, section: Section, s: f64) -> Point {
    let c = sys.curve.corner(section.corner);
    match section.side {
        Side::Below => Point::new(c.x, c.y - s),
        Side::Above => Point::new(c.x, c.y + s),
    }
}

pub fn section_coordinate(sys: &PwlSystem, section: Section, p: Point) -> Result<f64> {
    let c = sys.curve.corner(section.corner);
    let off = Error::OffSection { corner: section.corner, x: p.x, y: p.y };
    if (p.x - c.x).abs() > 1e-9 * (1.0 + c.x.abs()) {
        return Err(off);
    }
    match section.side {
        Side::Below if p.y <= c.y => Ok(c.y - p.y),
        Side::Above if p.y >= c.y => Ok(p.y - c.y),
        _ => Err(off),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Arc {
    pub region: usize,
    pub entry: Point,
    pub exit: Point,
    pub tau: f64,
    /// Half the trace of the strip Jacobian.
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Terminal {
    Crossed(Section),
    ConvergedToEquilibrium,
    Unbounded,
    MaxCrossings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SewnTrajectory {
    pub arcs: Vec<Arc>,
    pub terminal: Terminal,
}

impl SewnTrajectory {
    pub fn total_time(&self) -> f64 {
        self.arcs.iter().map(|a| a.tau).sum()
    }

    pub fn end(&self) -> Point {
        self.arcs.last().map(|a| a.exit).unwrap_or_default()
    }

    /// Distinct regions visited, sorted.
    pub fn regions(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.arcs.iter().map(|a| a.region).collect();
        r.sort_unstable();
        r.dedup();
        r
    }
}

/// Precomputed strip flows of one system.
#[derive(Debug, Clone)]
pub struct Sewer<'a> {
    pub sys: &'a PwlSystem,
    pub tol: Tolerances,
    /// Time runs backward.
    pub reversed: bool,
    flows: Vec<RegionFlow>,
}

impl<'a> Sewer<'a> {
    pub fn new(sys: &'a PwlSystem, tol: Tolerances) -> Self {
        let flows = sys
            .curve
            .regions()
            .map(|r| region_system(&sys.curve, &sys.params, r))
            .collect();
        Self { sys, tol, reversed: false, flows }
    }

    /// A sewer following orbits backward in time. Arc `sigma`s are those of
    /// the reversed field, so circuit derivatives are those of the inverse map.
    pub fn reversed(sys: &'a PwlSystem, tol: Tolerances) -> Self {
        let mut s = Self::new(sys, tol);
        s.flows = s.flows.iter().map(RegionFlow::reversed).collect();
        s.reversed = true;
        s
    }

    pub fn flow(&self, region: usize) -> &RegionFlow {
        &self.flows[region - 1]
    }

    /// Sews from `start` until `stop` is crossed (if given), a terminal
    /// state is reached, or `max_crossings` strip changes have happened.
    pub fn sew(&self, start: Point, max_crossings: usize, stop: Option<Section>) -> Result<SewnTrajectory> {
        let mut region = self.sys.locate_dir(start, self.reversed).index;
        let mut p = start;
        let mut arcs = Vec::new();
        let mut crossings = 0;
        loop {
            let rf = self.flow(region);
            let ev = boundary_crossing(rf, p, rf.region.x_lo, rf.region.x_hi, &self.tol)
                .map_err(|e| Error::Arc { arc: arcs.len(), source: Box::new(e) })?;
            arcs.push(Arc {
                region,
                entry: p,
                exit: ev.exit_point,
                tau: ev.tau,
                sigma: rf.eigen.sigma(),
            });
            let terminal = match ev.terminal {
                CrossTerminal::ConvergedToEquilibrium => Some(Terminal::ConvergedToEquilibrium),
                CrossTerminal::Unbounded => Some(Terminal::Unbounded),
                CrossTerminal::Crossed => {
                    crossings += 1;
                    // Forward in time leftward crossings pass below the corner.
                    let crossed = match (ev.next_region < region, self.reversed) {
                        (true, false) => Section::below(ev.next_region),
                        (true, true) => Section::above(ev.next_region),
                        (false, false) => Section::above(region),
                        (false, true) => Section::below(region),
                    };
                    if stop == Some(crossed) {
                        Some(Terminal::Crossed(crossed))
                    } else if crossings >= max_crossings {
                        Some(Terminal::MaxCrossings)
                    } else {
                        None
                    }
                }
            };
            if let Some(terminal) = terminal {
                return Ok(SewnTrajectory { arcs, terminal });
            }
            region = ev.next_region;
            p = ev.exit_point;
        }
    }

    /// Samples every arc at steps of at most `dt`, endpoints included.
    pub fn sample(&self, traj: &SewnTrajectory, dt: f64) -> Vec<TrajectorySample> {
        let mut out = Vec::new();
        let mut t0 = 0.0;
        for (i, arc) in traj.arcs.iter().enumerate() {
            let rf = self.flow(arc.region);
            let n = ((arc.tau / dt).ceil() as usize).max(1);
            for s in 0..=n {
                let t = arc.tau * s as f64 / n as f64;
                let p = if s == n { arc.exit } else { rf.flow_state(arc.entry, t) };
                out.push(TrajectorySample { arc_index: i, region: arc.region, t: t0 + t, point: p });
            }
            t0 += arc.tau;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub arc_index: usize,
    pub region: usize,
    pub t: f64,
    pub point: Point,
}

pub fn sew_trajectory(sys: &PwlSystem, start: Point, max_crossings: usize) -> Result<SewnTrajectory> {
    Sewer::new(sys, Tolerances::default()).sew(start, max_crossings.max(1), None)
}

/// One trajectory per seed, in seed order; failures are kept per seed.
pub fn phase_portrait(
    sys: &PwlSystem,
    seeds: &[Point],
    max_crossings: usize,
    tol: Tolerances,
) -> Vec<Result<SewnTrajectory>> {
    let sewer = Sewer::new(sys, tol);
    seeds
        .par_iter()
        .map(|&s| sewer.sew(s, max_crossings.max(1), None))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_curve, SystemParams};
    use approx::assert_relative_eq;

    fn sys(alpha: f64, beta: f64) -> PwlSystem {
        let c = build_curve(vec![Point::new(1.0, 2.0), Point::new(2.0, 0.0)], 1.0, 2.0).unwrap();
        PwlSystem::new(c, SystemParams::new(alpha, beta).unwrap())
    }

    #[test]
    fn section_coordinates() {
        let s = sys(3.0, 5.0);
        assert_eq!(section_coordinate(&s, Section::below(1), Point::new(1.0, 1.5)).unwrap(), 0.5);
        assert_eq!(section_point(&s, Section::above(1), 0.25), Point::new(1.0, 2.25));
        assert!(section_coordinate(&s, Section::above(1), Point::new(1.0, 1.5)).is_err());
        assert!(section_coordinate(&s, Section::below(1), Point::new(1.1, 1.5)).is_err());
    }

    #[test]
    fn sewed_center_alternates_regions() {
        let s = sys(3.0, 5.0);
        let tr = sew_trajectory(&s, Point::new(1.0, 1.5), 6).unwrap();
        assert_eq!(tr.terminal, Terminal::MaxCrossings);
        let regions: Vec<_> = tr.arcs.iter().map(|a| a.region).collect();
        assert_eq!(regions, [1, 2, 1, 2, 1, 2]);
        // Sewed center: the orbit closes after one I-II circuit.
        assert_relative_eq!(tr.arcs[1].exit.y, 1.5, max_relative = 1e-12);
        for w in tr.arcs.windows(2) {
            assert!(w[0].exit.dist(w[1].entry) <= 1e-10);
        }
    }

    #[test]
    fn start_at_singular_point() {
        let s = sys(1.0, 2.5);
        let tr = sew_trajectory(&s, Point::new(0.75, 1.75), 5).unwrap();
        assert_eq!(tr.arcs.len(), 1);
        assert_eq!(tr.arcs[0].tau, 0.0);
        assert_eq!(tr.terminal, Terminal::ConvergedToEquilibrium);
    }

    #[test]
    fn far_start_is_pulled_in() {
        let s = sys(3.0, 5.0);
        let tr = sew_trajectory(&s, Point::new(0.0, 1e6), 2).unwrap();
        assert!(matches!(tr.terminal, Terminal::MaxCrossings));
        assert!(tr.end().norm() < 1e6);
    }

    #[test]
    fn stops_on_requested_section() {
        let s = sys(2.5, 4.5);
        let sewer = Sewer::new(&s, Tolerances::default());
        let tr = sewer.sew(Point::new(1.0, 1.5), 50, Some(Section::below(1))).unwrap();
        assert_eq!(tr.terminal, Terminal::Crossed(Section::below(1)));
        assert_eq!(tr.end().x, 1.0);
        assert!(tr.end().y < 2.0);
    }

    #[test]
    fn reversed_sewing_retraces() {
        let s = sys(2.5, 4.5);
        let fwd = Sewer::new(&s, Tolerances::default());
        let tr = fwd.sew(Point::new(1.0, 1.2), 5, None).unwrap();
        let back = Sewer::reversed(&s, Tolerances::default()).sew(tr.end(), 5, None).unwrap();
        assert!(back.end().dist(Point::new(1.0, 1.2)) < 1e-9);
        let fr: Vec<_> = tr.arcs.iter().map(|a| a.region).collect();
        let mut br: Vec<_> = back.arcs.iter().map(|a| a.region).collect();
        br.reverse();
        assert_eq!(fr, br);
        assert_relative_eq!(back.total_time(), tr.total_time(), max_relative = 1e-10);
    }

    #[test]
    fn portrait_keeps_order() {
        let s = sys(1.0, 2.5);
        assert!(phase_portrait(&s, &[], 4, Tolerances::default()).is_empty());
        let seeds = [Point::new(0.0, 0.0), Point::new(3.0, 3.0), Point::new(1.5, 1.2)];
        let out = phase_portrait(&s, &seeds, 4, Tolerances::default());
        assert_eq!(out.len(), 3);
        for (seed, tr) in seeds.iter().zip(&out) {
            assert_eq!(tr.as_ref().unwrap().arcs[0].entry, *seed);
        }
    }

    #[test]
    fn samples_respect_step() {
        let s = sys(2.5, 4.5);
        let sewer = Sewer::new(&s, Tolerances::default());
        let tr = sewer.sew(Point::new(1.0, 1.5), 4, None).unwrap();
        let samples = sewer.sample(&tr, 0.01);
        for w in samples.windows(2) {
            assert!(w[1].t - w[0].t <= 0.01 + 1e-12);
        }
        assert_relative_eq!(samples.last().unwrap().t, tr.total_time(), max_relative = 1e-12);
    }
}
