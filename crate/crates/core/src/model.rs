//! The characteristic `phi`, system parameters, singular points and the
//! discriminant curve.

use serde::{Deserialize, Serialize};

use crate::flow::Eigen;
use crate::{Error, Point, Result, Tolerances};

/// Relative tolerance used when checking corner slopes against `k1`/`k2`.
const SLOPE_RTOL: f64 = 1e-9;

/// Continuous piecewise linear characteristic with `k` dropping sections.
///
/// Corners alternate upper/lower: `(x1, y1)` is the top of the first
/// dropping section, `(x2, y2)` its bottom, `(x3, y3)` the top of the second,
/// and so on. Outside `[x1, x_{2k}]` the curve continues with slope `k1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PwlCurve {
    corners: Vec<Point>,
    k1: f64,
    k2: f64,
}

/// Validates the corner geometry and builds the characteristic.
pub fn build_curve(corners: Vec<Point>, k1: f64, k2: f64) -> Result<PwlCurve> {
    if corners.is_empty() || !corners.len().is_multiple_of(2) {
        return Err(Error::CornerCount(corners.len()));
    }
    if !(k1 > 0.0 && k2 > 0.0) || !k1.is_finite() || !k2.is_finite() {
        return Err(Error::BadSign { k1, k2 });
    }
    for (i, w) in corners.windows(2).enumerate() {
        if !(w[1].x > w[0].x) {
            return Err(Error::NonMonotone { index: i + 2 });
        }
    }
    if corners.iter().any(|p| !p.is_finite()) {
        return Err(Error::Parse("corner coordinates must be finite".into()));
    }
    for (i, w) in corners.windows(2).enumerate() {
        // 1-based index of the left corner of this section.
        let from = i + 1;
        let slope = (w[1].y - w[0].y) / (w[1].x - w[0].x);
        let expected = if from % 2 == 1 { -k2 } else { k1 };
        if from % 2 == 1 && !(w[0].y > w[1].y) {
            return Err(Error::CornerOrder { index: from });
        }
        if (slope - expected).abs() > SLOPE_RTOL * (1.0 + expected.abs()) {
            return Err(Error::SlopeMismatch {
                from,
                to: from + 1,
                found: slope,
                expected,
            });
        }
    }
    Ok(PwlCurve { corners, k1, k2 })
}

impl PwlCurve {
    pub fn corners(&self) -> &[Point] {
        &self.corners
    }

    /// Corner `j`, 1-based.
    pub fn corner(&self, j: usize) -> Point {
        self.corners[j - 1]
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }

    /// Number of dropping sections.
    pub fn k(&self) -> usize {
        self.corners.len() / 2
    }

    pub fn region_count(&self) -> usize {
        self.corners.len() + 1
    }

    /// "Interesting case" of the theory: `k2 > 1` and `(k1 - 1)^2 < 4 k2`.
    pub fn is_interesting(&self) -> bool {
        self.k2 > 1.0 && (self.k1 - 1.0).powi(2) < 4.0 * self.k2
    }

    /// Strip `j` (1-based). Region `j` lies between corner lines `j - 1` and `j`.
    pub fn region(&self, j: usize) -> Region {
        assert!(j >= 1 && j <= self.region_count(), "region {j} out of range");
        let x_lo = if j == 1 { f64::NEG_INFINITY } else { self.corners[j - 2].x };
        let x_hi = if j == self.region_count() {
            f64::INFINITY
        } else {
            self.corners[j - 1].x
        };
        Region { index: j, x_lo, x_hi }
    }

    pub fn regions(&self) -> impl Iterator<Item = Region> + '_ {
        (1..=self.region_count()).map(|j| self.region(j))
    }

    /// Slope and intercept of `phi` on region `j`.
    pub fn piece(&self, j: usize) -> (f64, f64) {
        let slope = if j % 2 == 1 { self.k1 } else { -self.k2 };
        let anchor = if j <= self.corners.len() {
            self.corners[j - 1]
        } else {
            self.corners[j - 2]
        };
        (slope, anchor.y - slope * anchor.x)
    }

    /// Strip containing `x`; a corner abscissa belongs to the strip on its left.
    pub fn region_of(&self, x: f64) -> Region {
        let j = self.corners.iter().position(|c| x <= c.x).map_or(self.region_count(), |i| i + 1);
        self.region(j)
    }

    /// Extent of the geometry, used to scale sample ranges.
    pub fn scale(&self) -> f64 {
        self.corners
            .iter()
            .fold(1.0f64, |m, c| m.max(c.x.abs()).max(c.y.abs()))
    }

    /// Point reflection `(x, y) -> (-x, -y)` of the characteristic.
    pub fn mirrored(&self) -> PwlCurve {
        let corners = self.corners.iter().rev().map(|c| Point::new(-c.x, -c.y)).collect();
        PwlCurve {
            corners,
            k1: self.k1,
            k2: self.k2,
        }
    }

    /// The same characteristic translated by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> PwlCurve {
        PwlCurve {
            corners: self.corners.iter().map(|c| Point::new(c.x + dx, c.y + dy)).collect(),
            k1: self.k1,
            k2: self.k2,
        }
    }
}

/// Evaluates `phi(x)` and reports the strip containing `x`.
pub fn eval_phi(curve: &PwlCurve, x: f64) -> (f64, Region) {
    let region = curve.region_of(x);
    let (s, c) = curve.piece(region.index);
    (s * x + c, region)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub alpha: f64,
    pub beta: f64,
}

impl SystemParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
            Ok(Self { alpha, beta })
        } else {
            Err(Error::BadParams { alpha, beta })
        }
    }

    /// Value of `beta - alpha x - y` at `p`; zero on the zero isocline.
    pub fn isocline_gap(&self, p: Point) -> f64 {
        self.beta - self.alpha * p.x - p.y
    }
}

/// One vertical strip of the phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub index: usize,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl Region {
    pub fn is_ascending(&self) -> bool {
        self.index % 2 == 1
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_lo && x <= self.x_hi
    }
}

/// The characteristic together with a parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlSystem {
    pub curve: PwlCurve,
    pub params: SystemParams,
}

impl PwlSystem {
    pub fn new(curve: PwlCurve, params: SystemParams) -> Self {
        Self { curve, params }
    }

    pub fn with_params(&self, alpha: f64, beta: f64) -> Result<Self> {
        Ok(Self {
            curve: self.curve.clone(),
            params: SystemParams::new(alpha, beta)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }

    pub fn beta(&self) -> f64 {
        self.params.beta
    }

    /// Vector field of the sewn system.
    pub fn field(&self, p: Point) -> Point {
        let (phi, _) = eval_phi(&self.curve, p.x);
        Point::new(p.y - phi, self.params.isocline_gap(p))
    }

    /// Strip a trajectory starting at `p` moves into.
    ///
    /// Interior points own their strip. On a corner line the sign of `x'`
    /// decides, and the corner itself (where `x' = 0`) goes to the dropping
    /// strip next to it.
    pub fn locate(&self, p: Point) -> Region {
        self.locate_dir(p, false)
    }

    /// [`PwlSystem::locate`] for the flow run forward or backward in time.
    pub fn locate_dir(&self, p: Point, reversed: bool) -> Region {
        let r = self.curve.region_of(p.x);
        if p.x < r.x_hi {
            return r;
        }
        // p.x == x_hi: on corner line `r.index`.
        let j = r.index;
        let mut xdot = p.y - self.curve.corner(j).y;
        if reversed {
            xdot = -xdot;
        }
        if xdot > 0.0 {
            self.curve.region(j + 1)
        } else if xdot < 0.0 {
            r
        } else if j % 2 == 1 {
            self.curve.region(j + 1)
        } else {
            r
        }
    }
}

/// JSON system definition: `{"k1", "k2", "corners", "alpha", "beta"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub k1: f64,
    pub k2: f64,
    pub corners: Vec<Point>,
    pub alpha: f64,
    pub beta: f64,
}

impl SystemSpec {
    pub fn build(&self) -> Result<PwlSystem> {
        let curve = build_curve(self.corners.clone(), self.k1, self.k2)?;
        Ok(PwlSystem::new(curve, SystemParams::new(self.alpha, self.beta)?))
    }

    pub fn from_system(sys: &PwlSystem) -> Self {
        Self {
            k1: sys.curve.k1,
            k2: sys.curve.k2,
            corners: sys.curve.corners.clone(),
            alpha: sys.params.alpha,
            beta: sys.params.beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SingularKind {
    StableFocus,
    StableNode,
    UnstableFocus,
    UnstableNode,
    Saddle,
    SewedFocusStable,
    SewedFocusUnstable,
    SewedCenter,
    SewedSaddleNode,
    EquilibriumSegment,
}

impl SingularKind {
    pub fn is_antisaddle(self) -> bool {
        !matches!(
            self,
            SingularKind::Saddle | SingularKind::SewedSaddleNode | SingularKind::EquilibriumSegment
        )
    }

    pub fn is_sewed(self) -> bool {
        matches!(
            self,
            SingularKind::SewedFocusStable
                | SingularKind::SewedFocusUnstable
                | SingularKind::SewedCenter
                | SingularKind::SewedSaddleNode
        )
    }
}

/// Where a singular point sits: inside a strip, on a corner, or spanning a
/// whole dropping section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "index", rename_all = "snake_case")]
pub enum SingularSite {
    Region(usize),
    Corner(usize),
    Segment(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularPoint {
    pub location: Point,
    pub site: SingularSite,
    pub kind: SingularKind,
    /// Eigen-data of the owning piece(s), tagged by region index.
    pub eigen: Vec<(usize, Eigen)>,
    /// `[x_lo, x_hi]` of an equilibrium segment.
    pub segment_extent: Option<(f64, f64)>,
}

/// Trace and determinant of the Jacobian on region `j`.
pub(crate) fn jacobian_invariants(curve: &PwlCurve, alpha: f64, j: usize) -> (f64, f64) {
    let (s, _) = curve.piece(j);
    (-s - 1.0, s + alpha)
}

fn classify_region(eig: Eigen, det: f64) -> SingularKind {
    if det < 0.0 {
        return SingularKind::Saddle;
    }
    let stable = eig.trace() < 0.0;
    match (eig, stable) {
        (Eigen::ComplexPair { .. }, true) => SingularKind::StableFocus,
        (Eigen::ComplexPair { .. }, false) => SingularKind::UnstableFocus,
        (_, true) => SingularKind::StableNode,
        (_, false) => SingularKind::UnstableNode,
    }
}

fn classify_corner(left: (Eigen, f64), right: (Eigen, f64), tol: &Tolerances) -> SingularKind {
    if left.1 < 0.0 || right.1 < 0.0 {
        return SingularKind::SewedSaddleNode;
    }
    match (left.0, right.0) {
        (
            Eigen::ComplexPair { sigma: s1, omega: w1 },
            Eigen::ComplexPair { sigma: s2, omega: w2 },
        ) => {
            let (a, b) = (s1 / w1, s2 / w2);
            let v = a + b;
            if v.abs() <= tol.center * (1.0 + a.abs() + b.abs()) {
                SingularKind::SewedCenter
            } else if v < 0.0 {
                SingularKind::SewedFocusStable
            } else {
                SingularKind::SewedFocusUnstable
            }
        }
        // A node on either side: the repelling side decides.
        (l, r) => {
            if l.trace() < 0.0 && r.trace() < 0.0 {
                SingularKind::SewedFocusStable
            } else {
                SingularKind::SewedFocusUnstable
            }
        }
    }
}

/// Singular points with the default tolerances.
pub fn find_singular_points(curve: &PwlCurve, params: &SystemParams) -> Result<Vec<SingularPoint>> {
    find_singular_points_with(curve, params, &Tolerances::default())
}

/// Solves `beta - alpha x = phi(x)` piece by piece and classifies each root.
pub fn find_singular_points_with(
    curve: &PwlCurve,
    params: &SystemParams,
    tol: &Tolerances,
) -> Result<Vec<SingularPoint>> {
    let SystemParams { alpha, beta } = *params;
    let k2 = curve.k2();
    let corner_tol = tol.center * (1.0 + beta.abs());
    let on_corner: Vec<bool> = curve
        .corners()
        .iter()
        .map(|c| params.isocline_gap(*c).abs() <= corner_tol)
        .collect();

    let exact_k2 = alpha == k2;
    if !exact_k2 && (alpha - k2).abs() <= 1e-9 * (1.0 + k2) {
        // Nearly parallel to the dropping sections: a corner hit would make
        // the segment/saddle distinction depend on rounding.
        if on_corner.iter().any(|&b| b) {
            return Err(Error::DegenerateLine { alpha });
        }
    }

    let eig = |j: usize| {
        let (tr, det) = jacobian_invariants(curve, alpha, j);
        (Eigen::from_trace_det(tr, det), det)
    };

    let mut out = Vec::new();
    // Corners consumed by an equilibrium segment.
    let mut consumed = vec![false; curve.corners().len()];
    if exact_k2 {
        for i in 1..=curve.k() {
            let (a, b) = (2 * i - 1, 2 * i);
            if on_corner[a - 1] && on_corner[b - 1] {
                consumed[a - 1] = true;
                consumed[b - 1] = true;
                let (ca, cb) = (curve.corner(a), curve.corner(b));
                let (e, _) = eig(b);
                out.push(SingularPoint {
                    location: Point::new(0.5 * (ca.x + cb.x), 0.5 * (ca.y + cb.y)),
                    site: SingularSite::Segment(b),
                    kind: SingularKind::EquilibriumSegment,
                    eigen: vec![(b, e)],
                    segment_extent: Some((ca.x, cb.x)),
                });
            }
        }
    }

    for j in 1..=curve.corners().len() {
        if on_corner[j - 1] && !consumed[j - 1] {
            let (l, r) = (eig(j), eig(j + 1));
            out.push(SingularPoint {
                location: curve.corner(j),
                site: SingularSite::Corner(j),
                kind: classify_corner(l, r, tol),
                eigen: vec![(j, l.0), (j + 1, r.0)],
                segment_extent: None,
            });
        }
    }

    for region in curve.regions() {
        let j = region.index;
        let (s, c) = curve.piece(j);
        let denom = alpha + s;
        if denom == 0.0 {
            continue;
        }
        let x = (beta - c) / denom;
        if !(x > region.x_lo && x < region.x_hi) {
            continue;
        }
        let near_flagged = |cj: usize| {
            cj >= 1
                && cj <= on_corner.len()
                && on_corner[cj - 1]
                && (x - curve.corner(cj).x).abs() <= 1e-6 * (1.0 + curve.corner(cj).x.abs())
        };
        if near_flagged(j) || near_flagged(j.wrapping_sub(1)) {
            continue;
        }
        let (e, det) = eig(j);
        out.push(SingularPoint {
            location: Point::new(x, s * x + c),
            site: SingularSite::Region(j),
            kind: classify_region(e, det),
            eigen: vec![(j, e)],
            segment_extent: None,
        });
    }
    out.sort_by(|a, b| a.location.x.total_cmp(&b.location.x));
    Ok(out)
}

/// Half-line `beta = x_j alpha + y_j`, `alpha <= k2`, through corner `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantLine {
    pub corner: usize,
    pub slope: f64,
    pub intercept: f64,
}

impl DiscriminantLine {
    pub fn beta_at(&self, alpha: f64) -> f64 {
        self.slope * alpha + self.intercept
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantCurve {
    pub lines: Vec<DiscriminantLine>,
    pub alpha_max: f64,
}

pub fn discriminant_curve(curve: &PwlCurve) -> DiscriminantCurve {
    DiscriminantCurve {
        lines: curve
            .corners()
            .iter()
            .enumerate()
            .map(|(i, c)| DiscriminantLine {
                corner: i + 1,
                slope: c.x,
                intercept: c.y,
            })
            .collect(),
        alpha_max: curve.k2(),
    }
}

impl DiscriminantCurve {
    /// Corners whose half-line contains `(alpha, beta)`.
    pub fn lines_through(&self, alpha: f64, beta: f64, rtol: f64) -> Vec<usize> {
        if alpha > self.alpha_max {
            return Vec::new();
        }
        self.lines
            .iter()
            .filter(|l| (beta - l.beta_at(alpha)).abs() <= rtol * (1.0 + beta.abs()))
            .map(|l| l.corner)
            .collect()
    }

    /// Number of singular points off the curve: `1 + 2 m` below `k2`, where
    /// `m` counts the dropping sections whose two half-lines bracket `beta`.
    /// `None` on the line `alpha = k2` or on one of the half-lines.
    pub fn predicted_count(&self, alpha: f64, beta: f64) -> Option<usize> {
        if alpha > self.alpha_max {
            return Some(1);
        }
        if alpha == self.alpha_max || !self.lines_through(alpha, beta, 1e-12).is_empty() {
            return None;
        }
        let crossed = self
            .lines
            .chunks(2)
            .filter(|p| p[0].beta_at(alpha) > beta && beta > p[1].beta_at(alpha))
            .count();
        Some(1 + 2 * crossed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn ref_k1() -> PwlCurve {
        build_curve(vec![Point::new(1.0, 2.0), Point::new(2.0, 0.0)], 1.0, 2.0).unwrap()
    }

    fn ref_k2() -> PwlCurve {
        build_curve(
            vec![
                Point::new(1.0, 2.0),
                Point::new(2.0, 0.0),
                Point::new(3.0, 1.0),
                Point::new(4.0, -1.0),
            ],
            1.0,
            2.0,
        )
        .unwrap()
    }

    fn kinds(points: &[SingularPoint]) -> Vec<SingularKind> {
        points.iter().map(|p| p.kind).collect()
    }

    #[test]
    fn builds_reference_curves() {
        assert_eq!(ref_k1().k(), 1);
        assert_eq!(ref_k2().k(), 2);
        assert!(ref_k1().is_interesting());
    }

    #[test]
    fn rejects_bad_curves() {
        let c = |v: Vec<(f64, f64)>, k1, k2| {
            build_curve(v.into_iter().map(|(x, y)| Point::new(x, y)).collect(), k1, k2)
        };
        assert!(matches!(
            c(vec![(2.0, 0.0), (1.0, 2.0)], 1.0, 2.0),
            Err(Error::NonMonotone { .. })
        ));
        assert!(matches!(
            c(vec![(1.0, 2.0), (2.0, 0.5)], 1.0, 2.0),
            Err(Error::SlopeMismatch { .. })
        ));
        assert!(matches!(
            c(vec![(1.0, 2.0), (2.0, 0.0), (3.0, 2.0), (4.0, 0.0)], 1.0, 2.0),
            Err(Error::SlopeMismatch { from: 2, .. })
        ));
        assert!(matches!(c(vec![(1.0, 2.0), (2.0, 0.0)], 0.0, 2.0), Err(Error::BadSign { .. })));
        assert!(matches!(c(vec![(1.0, 2.0)], 1.0, 2.0), Err(Error::CornerCount(1))));
        assert!(matches!(c(vec![], 1.0, 2.0), Err(Error::CornerCount(0))));
    }

    #[test]
    fn phi_values_and_regions() {
        let c = ref_k1();
        assert_eq!(eval_phi(&c, 0.0), (1.0, c.region(1)));
        assert_eq!(eval_phi(&c, 1.0), (2.0, c.region(1)));
        assert_eq!(eval_phi(&c, 1.5), (1.0, c.region(2)));
        assert_eq!(eval_phi(&c, 3.0), (1.0, c.region(3)));
        assert_eq!(c.region(3).x_hi, f64::INFINITY);
    }

    #[test]
    fn three_points_for_k1_reference() {
        let pts = find_singular_points(&ref_k1(), &SystemParams::new(1.0, 2.5).unwrap()).unwrap();
        assert_eq!(
            kinds(&pts),
            [SingularKind::StableFocus, SingularKind::Saddle, SingularKind::StableFocus]
        );
        let locs: Vec<_> = pts.iter().map(|p| (p.location.x, p.location.y)).collect();
        assert_eq!(locs, [(0.75, 1.75), (1.5, 1.0), (2.25, 0.25)]);
        assert_eq!(pts[1].site, SingularSite::Region(2));
    }

    #[test]
    fn five_points_for_k2_reference() {
        let pts = find_singular_points(&ref_k2(), &SystemParams::new(0.5, 2.0).unwrap()).unwrap();
        let xs: Vec<f64> = pts.iter().map(|p| p.location.x).collect();
        for (x, e) in xs.iter().zip([2.0 / 3.0, 4.0 / 3.0, 8.0 / 3.0, 10.0 / 3.0, 14.0 / 3.0]) {
            assert_relative_eq!(*x, e, epsilon = 1e-12);
        }
        let sites: Vec<_> = pts.iter().map(|p| p.site).collect();
        assert_eq!(sites, (1..=5).map(SingularSite::Region).collect::<Vec<_>>());
        assert_eq!(pts.iter().filter(|p| p.kind == SingularKind::Saddle).count(), 2);
        assert!(pts.iter().step_by(2).all(|p| p.kind == SingularKind::StableFocus));
    }

    #[test]
    fn corner_crossing_is_sewed() {
        let pts = find_singular_points(&ref_k1(), &SystemParams::new(3.0, 5.0).unwrap()).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].site, SingularSite::Corner(1));
        assert_eq!(pts[0].location, Point::new(1.0, 2.0));
        assert_eq!(pts[0].kind, SingularKind::SewedCenter);

        let stable = find_singular_points(&ref_k1(), &SystemParams::new(3.5, 5.5).unwrap()).unwrap();
        assert_eq!(kinds(&stable), [SingularKind::SewedFocusStable]);
        let unstable = find_singular_points(&ref_k1(), &SystemParams::new(2.5, 4.5).unwrap()).unwrap();
        assert_eq!(kinds(&unstable), [SingularKind::SewedFocusUnstable]);
        // Below k2 a corner crossing pairs a saddle piece with a focus.
        let sn = find_singular_points(&ref_k1(), &SystemParams::new(1.0, 3.0).unwrap()).unwrap();
        assert!(sn.iter().any(|p| p.kind == SingularKind::SewedSaddleNode));
    }

    #[test]
    fn equilibrium_segment_at_alpha_k2() {
        let pts = find_singular_points(&ref_k1(), &SystemParams::new(2.0, 4.0).unwrap()).unwrap();
        assert_eq!(kinds(&pts), [SingularKind::EquilibriumSegment]);
        assert_eq!(pts[0].segment_extent, Some((1.0, 2.0)));
        // Parallel but not coincident: no segment, a single point elsewhere.
        let off = find_singular_points(&ref_k1(), &SystemParams::new(2.0, 4.5).unwrap()).unwrap();
        assert_eq!(off.len(), 1);
        assert!(matches!(
            find_singular_points(&ref_k1(), &SystemParams::new(2.0 + 1e-11, 4.0 + 1e-11).unwrap()),
            Err(Error::DegenerateLine { .. })
        ));
    }

    #[test]
    fn discriminant_lines() {
        let d = discriminant_curve(&ref_k1());
        assert_eq!(d.lines.len(), 2);
        assert_eq!(d.lines[0].beta_at(1.0), 3.0);
        assert_eq!(d.lines[1].beta_at(1.0), 2.0);
        assert_eq!(d.predicted_count(1.0, 2.5), Some(3));
        assert_eq!(d.lines_through(1.0, 3.0, 1e-12), vec![1]);
        assert_eq!(d.predicted_count(1.0, 3.0), None);
        assert_eq!(d.predicted_count(3.0, 5.0), Some(1));
    }

    #[test]
    fn locate_on_lines() {
        let sys = PwlSystem::new(ref_k1(), SystemParams::new(3.0, 5.0).unwrap());
        assert_eq!(sys.locate(Point::new(1.0, 1.5)).index, 1);
        assert_eq!(sys.locate(Point::new(1.0, 2.5)).index, 2);
        assert_eq!(sys.locate(Point::new(1.0, 2.0)).index, 2);
        assert_eq!(sys.locate(Point::new(2.0, 0.0)).index, 2);
        assert_eq!(sys.locate(Point::new(2.0, 0.5)).index, 3);
    }

    #[test]
    fn spec_json_round_trip() {
        let json = r#"{"k1":1,"k2":2,"corners":[[1,2],[2,0]],"alpha":1,"beta":2.5}"#;
        let spec: SystemSpec = serde_json::from_str(json).unwrap();
        let sys = spec.build().unwrap();
        assert_eq!(sys.curve, ref_k1());
        assert_eq!(SystemSpec::from_system(&sys), spec);
        let bad: SystemSpec = serde_json::from_str(
            r#"{"k1":1,"k2":2,"corners":[[1,2],[2,0]],"alpha":-1,"beta":2.5}"#,
        )
        .unwrap();
        assert!(matches!(bad.build(), Err(Error::BadParams { .. })));
    }

    #[test]
    fn mirrored_curve_is_valid() {
        let m = ref_k2().mirrored();
        let rebuilt = build_curve(m.corners().to_vec(), 1.0, 2.0).unwrap();
        assert_eq!(rebuilt, m);
    }
}
