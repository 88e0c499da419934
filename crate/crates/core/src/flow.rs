//! Closed-form flow of the affine system inside one strip, and detection of
//! the first exit through a strip boundary.
//!
//! With `A` the strip Jacobian, `m = tr A / 2` and `q = m^2 - det A`, the
//! matrix `N = A - m I` satisfies `N^2 = q I`, so
//!
//! ```text
//! exp(A t) = e^{m t} (C(t) I + S(t) N)
//! ```
//!
//! with `(C, S) = (cos wt, sin(wt)/w)` for `q = -w^2 < 0`,
//! `(cosh ht, sinh(ht)/h)` for `q = h^2 > 0` and `(1, t)` for `q = 0`.
//! The state is advanced as `z(t) = z0 + Phi(t) v0`, where `v0` is the
//! initial velocity and `Phi(t) = int_0^t exp(A s) ds`; this form stays valid
//! when `A` is singular (equilibrium segments, parallel isoclines).

use serde::Serialize;
use std::f64::consts::PI;

use crate::model::{PwlCurve, Region, SystemParams};
use crate::{Error, Point, Result, Tolerances};

/// States farther than this from the origin are reported as unbounded.
pub const UNBOUNDED: f64 = 1e9;
/// Distance to an attracting equilibrium treated as arrival.
pub const ARRIVAL: f64 = 1e-13;
/// `|x'|` below this at an exit marks a tangential (corner) crossing.
pub const TANGENCY: f64 = 1e-10;

const MAX_INTERVALS: usize = 1_000_000;
const MAX_TIME: f64 = 1e7;

/// Eigenvalues of a strip Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Eigen {
    ComplexPair { sigma: f64, omega: f64 },
    /// `l1 > l2`.
    RealDistinct { l1: f64, l2: f64 },
    RealRepeated { l: f64 },
}

impl Eigen {
    pub fn from_trace_det(tr: f64, det: f64) -> Self {
        let m = 0.5 * tr;
        let q = m * m - det;
        if q < 0.0 {
            Eigen::ComplexPair { sigma: m, omega: (-q).sqrt() }
        } else if q == 0.0 {
            Eigen::RealRepeated { l: m }
        } else {
            let h = q.sqrt();
            // Avoid cancellation in the smaller-magnitude root.
            let big = if m >= 0.0 { m + h } else { m - h };
            let small = if big != 0.0 { det / big } else { 0.0 };
            let (l1, l2) = if big > small { (big, small) } else { (small, big) };
            Eigen::RealDistinct { l1, l2 }
        }
    }

    pub fn trace(&self) -> f64 {
        match *self {
            Eigen::ComplexPair { sigma, .. } => 2.0 * sigma,
            Eigen::RealDistinct { l1, l2 } => l1 + l2,
            Eigen::RealRepeated { l } => 2.0 * l,
        }
    }

    pub fn det(&self) -> f64 {
        match *self {
            Eigen::ComplexPair { sigma, omega } => sigma * sigma + omega * omega,
            Eigen::RealDistinct { l1, l2 } => l1 * l2,
            Eigen::RealRepeated { l } => l * l,
        }
    }

    /// Half the trace: the real part for a focus, the mean for real roots.
    pub fn sigma(&self) -> f64 {
        0.5 * self.trace()
    }

    pub fn omega(&self) -> Option<f64> {
        match *self {
            Eigen::ComplexPair { omega, .. } => Some(omega),
            _ => None,
        }
    }
}

/// The linear system of one strip.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionFlow {
    pub region: Region,
    /// `phi(x) = slope * x + intercept` on the strip.
    pub slope: f64,
    pub intercept: f64,
    /// `[[-slope, 1], [-alpha, -1]]`.
    pub matrix: [[f64; 2]; 2],
    /// Constant term `b` of `z' = A z + b`.
    pub forcing: Point,
    /// Equilibrium of the affine system; may lie outside the strip.
    pub equilibrium: Option<Point>,
    pub eigen: Eigen,
    m: f64,
    q: f64,
}

pub fn region_system(curve: &PwlCurve, params: &SystemParams, region: Region) -> RegionFlow {
    let (slope, intercept) = curve.piece(region.index);
    let alpha = params.alpha;
    let det = slope + alpha;
    let tr = -slope - 1.0;
    let equilibrium = (det != 0.0).then(|| {
        let x = (params.beta - intercept) / det;
        Point::new(x, slope * x + intercept)
    });
    let m = 0.5 * tr;
    RegionFlow {
        region,
        slope,
        intercept,
        matrix: [[-slope, 1.0], [-alpha, -1.0]],
        forcing: Point::new(-intercept, params.beta),
        equilibrium,
        eigen: Eigen::from_trace_det(tr, det),
        m,
        q: m * m - det,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CrossTerminal {
    Crossed,
    ConvergedToEquilibrium,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossEvent {
    pub tau: f64,
    pub exit_point: Point,
    /// Index of the strip entered; the current strip unless `Crossed`.
    pub next_region: usize,
    pub terminal: CrossTerminal,
    /// The exit happened with `|x'| < TANGENCY`.
    pub tangent: bool,
}

/// `(C(t), S(t))` for the given `q`.
fn cs(q: f64, t: f64) -> (f64, f64) {
    if q < 0.0 {
        let w = (-q).sqrt();
        let (s, c) = (w * t).sin_cos();
        (c, s / w)
    } else if q > 0.0 {
        let h = q.sqrt();
        let ht = h * t;
        let s = if ht.abs() < 1e-8 { t } else { ht.sinh() / h };
        (ht.cosh(), s)
    } else {
        (1.0, t)
    }
}

impl RegionFlow {
    /// The same strip with time reversed: `z' = -(A z + b)`.
    pub fn reversed(&self) -> RegionFlow {
        let a = &self.matrix;
        RegionFlow {
            matrix: [[-a[0][0], -a[0][1]], [-a[1][0], -a[1][1]]],
            forcing: Point::new(-self.forcing.x, -self.forcing.y),
            eigen: Eigen::from_trace_det(-self.trace(), self.det()),
            m: -self.m,
            ..self.clone()
        }
    }

    pub fn trace(&self) -> f64 {
        2.0 * self.m
    }

    pub fn det(&self) -> f64 {
        self.m * self.m - self.q
    }

    /// `A p + b`.
    pub fn velocity_at(&self, p: Point) -> Point {
        let a = &self.matrix;
        Point::new(
            a[0][0] * p.x + a[0][1] * p.y + self.forcing.x,
            a[1][0] * p.x + a[1][1] * p.y + self.forcing.y,
        )
    }

    /// `N v = (A - m I) v`.
    fn apply_n(&self, v: Point) -> Point {
        let a = &self.matrix;
        Point::new(
            (a[0][0] - self.m) * v.x + a[0][1] * v.y,
            a[1][0] * v.x + (a[1][1] - self.m) * v.y,
        )
    }

    /// `(e0, e1)` with `exp(A t) = e0 I + e1 N`.
    fn exp_coeffs(&self, t: f64) -> (f64, f64) {
        let (c, s) = cs(self.q, t);
        let g = (self.m * t).exp();
        (g * c, g * s)
    }

    /// `(c0, c1)` with `int_0^t exp(A s) ds = c0 I + c1 N`.
    fn int_coeffs(&self, t: f64) -> (f64, f64) {
        let (m, q) = (self.m, self.q);
        let det = m * m - q;
        if det.abs() > 1e-3 * (m * m + q.abs()) {
            // A Phi = exp(At) - I, solved in the {I, N} basis.
            let (c, s) = cs(q, t);
            let g = (m * t).exp();
            let c1 = (1.0 - g * (c - m * s)) / det;
            (g * s - m * c1, c1)
        } else if q > 0.0 {
            // Nearly singular with well separated real roots m +- h.
            let h = q.sqrt();
            let phi = |l: f64| if l == 0.0 { t } else { (l * t).exp_m1() / l };
            let (g1, g2) = (phi(m + h), phi(m - h));
            (0.5 * (g1 + g2), (g1 - g2) / (2.0 * h))
        } else {
            // tr = det = 0: A^2 = 0.
            (t, 0.5 * t * t)
        }
    }

    /// Exact state at time `t` (any sign) from `p0`.
    pub fn flow_state(&self, p0: Point, t: f64) -> Point {
        let v0 = self.velocity_at(p0);
        let nv = self.apply_n(v0);
        let (c0, c1) = self.int_coeffs(t);
        Point::new(p0.x + c0 * v0.x + c1 * nv.x, p0.y + c0 * v0.y + c1 * nv.y)
    }

    /// Exact velocity at time `t` from `p0`.
    pub fn velocity(&self, p0: Point, t: f64) -> Point {
        let v0 = self.velocity_at(p0);
        let nv = self.apply_n(v0);
        let (e0, e1) = self.exp_coeffs(t);
        Point::new(e0 * v0.x + e1 * nv.x, e0 * v0.y + e1 * nv.y)
    }

    /// First exit from the strip starting at `p0`, with the default
    /// crossing tolerance.
    pub fn boundary_crossing(&self, p0: Point) -> Result<CrossEvent> {
        boundary_crossing(self, p0, self.region.x_lo, self.region.x_hi, &Tolerances::default())
    }
}

/// Evaluator of `x(t)` along one trajectory.
struct XTrack<'a> {
    rf: &'a RegionFlow,
    p0: Point,
    v0: Point,
    nv: Point,
}

impl XTrack<'_> {
    fn x(&self, t: f64) -> f64 {
        let (c0, c1) = self.rf.int_coeffs(t);
        self.p0.x + c0 * self.v0.x + c1 * self.nv.x
    }

    /// Rounding floor of `x(t)`: the size of the terms summed.
    fn x_noise(&self, t: f64) -> f64 {
        let (c0, c1) = self.rf.int_coeffs(t);
        8.0 * f64::EPSILON * (self.p0.x.abs() + (c0 * self.v0.x).abs() + (c1 * self.nv.x).abs())
    }

    fn xdot(&self, t: f64) -> f64 {
        let (e0, e1) = self.rf.exp_coeffs(t);
        e0 * self.v0.x + e1 * self.nv.x
    }

    fn state(&self, t: f64) -> Point {
        let (c0, c1) = self.rf.int_coeffs(t);
        Point::new(
            self.p0.x + c0 * self.v0.x + c1 * self.nv.x,
            self.p0.y + c0 * self.v0.y + c1 * self.nv.y,
        )
    }

    /// A few extra Newton steps once inside the tolerance.
    fn polish(&self, bound: f64, mut t: f64) -> f64 {
        let mut last = f64::INFINITY;
        for _ in 0..4 {
            let d = self.xdot(t);
            if d == 0.0 {
                break;
            }
            let step = (self.x(t) - bound) / d;
            if !step.is_finite() || step.abs() >= last {
                break;
            }
            t -= step;
            last = step.abs();
            if last <= 1e-16 * t.abs() {
                break;
            }
        }
        t
    }

    /// Root of `x(t) = bound` on `[a, b]` where `x` is monotone and the sign
    /// of `x - bound` differs at the ends. Safeguarded Newton.
    fn refine(&self, bound: f64, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
        let fa = self.x(a) - bound;
        let rising = fa < 0.0;
        let tol = tol.max(self.x_noise(b));
        let mut t = 0.5 * (a + b);
        for _ in 0..300 {
            let f = self.x(t) - bound;
            if f.abs() <= tol {
                return Ok(self.polish(bound, t));
            }
            if (f < 0.0) == rising {
                a = t;
            } else {
                b = t;
            }
            let d = self.xdot(t);
            let newton = t - f / d;
            t = if d != 0.0 && newton > a && newton < b && newton.is_finite() {
                newton
            } else {
                0.5 * (a + b)
            };
            if b - a <= 4.0 * f64::EPSILON * b.abs().max(f64::MIN_POSITIVE) {
                let f = self.x(t) - bound;
                return if f.abs() <= tol {
                    Ok(t)
                } else {
                    Err(Error::ToleranceExhausted { tau: t })
                };
            }
        }
        Err(Error::ToleranceExhausted { tau: t })
    }
}

/// First `t > 0` at which `x(t)` leaves `[x_lo, x_hi]`.
///
/// `x(t)` is split into monotone pieces at the zeros of `x'(t)`, which are
/// known in closed form (spaced exactly `pi / omega` for a focus, at most one
/// for real roots), so every exit is bracketed before it is refined.
pub fn boundary_crossing(
    rf: &RegionFlow,
    p0: Point,
    x_lo: f64,
    x_hi: f64,
    tol: &Tolerances,
) -> Result<CrossEvent> {
    let v0 = rf.velocity_at(p0);
    let tr = XTrack { rf, p0, v0, nv: rf.apply_n(v0) };
    let here = rf.region.index;
    let converged = |tau: f64| CrossEvent {
        tau,
        exit_point: if tau == 0.0 { p0 } else { rf.equilibrium.unwrap_or(p0) },
        next_region: here,
        terminal: CrossTerminal::ConvergedToEquilibrium,
        tangent: false,
    };
    if v0.x == 0.0 && v0.y == 0.0 {
        return Ok(converged(0.0));
    }

    // Checks one monotone piece [a, b]; Some(event) if the strip is left.
    let check = |a: f64, b: f64| -> Result<Option<CrossEvent>> {
        let xb = tr.x(b);
        let (bound, next) = if xb > x_hi {
            (x_hi, here + 1)
        } else if xb < x_lo {
            (x_lo, here - 1)
        } else {
            return Ok(None);
        };
        let t = tr.refine(bound, a, b, tol.crossing)?;
        let mut exit = tr.state(t);
        exit.x = bound;
        Ok(Some(CrossEvent {
            tau: t,
            exit_point: exit,
            next_region: next,
            terminal: CrossTerminal::Crossed,
            tangent: tr.xdot(t).abs() < TANGENCY,
        }))
    };
    let unbounded = |t: f64| CrossEvent {
        tau: t,
        exit_point: tr.state(t),
        next_region: here,
        terminal: CrossTerminal::Unbounded,
        tangent: false,
    };

    let (p, r) = (tr.v0.x, tr.nv.x);
    let eq_inside = rf.equilibrium.filter(|e| e.x > x_lo && e.x < x_hi);

    if rf.q < 0.0 {
        let w = (-rf.q).sqrt();
        let half = PI / w;
        // p cos(wt) + (r/w) sin(wt) = R cos(wt - phase)
        let phase = (r / w).atan2(p);
        let mut first = (phase - 0.5 * PI) / w;
        while first <= 1e-15 * half {
            first += half;
        }
        // Envelope of x(t) - e_x for the convergence certificate.
        let env = eq_inside.map(|e| {
            let d = p0 - e;
            let nd = rf.apply_n(d);
            (e, d.x.hypot(nd.x / w), d.norm() + nd.norm() / w)
        });
        let mut a = 0.0;
        let mut b = first;
        for _ in 0..MAX_INTERVALS {
            if let Some(ev) = check(a, b)? {
                return Ok(ev);
            }
            if let Some((e, rx, full)) = env {
                let amp = rx * (rf.m * b).exp();
                let gap = (e.x - x_lo).min(x_hi - e.x);
                if rf.m < 0.0 && amp < gap {
                    let tau = if full > ARRIVAL { (full / ARRIVAL).ln() / -rf.m } else { 0.0 };
                    return Ok(converged(tau.max(0.0)));
                }
                if rf.m == 0.0 && amp < gap {
                    return Err(Error::Trapped { region: here });
                }
            }
            if tr.state(b).norm() > UNBOUNDED {
                return Ok(unbounded(b));
            }
            a = b;
            b += half;
        }
        return Err(Error::Trapped { region: here });
    }

    // Real roots: at most one interior extremum of x(t).
    let crit = if rf.q > 0.0 {
        let h = rf.q.sqrt();
        (r != 0.0)
            .then(|| -p * h / r)
            .filter(|u| *u > 0.0 && *u < 1.0)
            .map(|u| u.atanh() / h)
    } else {
        (r != 0.0).then(|| -p / r).filter(|t| *t > 0.0)
    };
    let mut a = 0.0;
    if let Some(tc) = crit {
        if let Some(ev) = check(0.0, tc)? {
            return Ok(ev);
        }
        a = tc;
    }

    // Last monotone piece [a, inf).
    let (l_hi, l_lo) = match rf.eigen {
        Eigen::RealDistinct { l1, l2 } => (l1, l2),
        Eigen::RealRepeated { l } => (l, l),
        Eigen::ComplexPair { .. } => unreachable!(),
    };
    if let Some(e) = eq_inside {
        let d = p0 - e;
        if l_hi < 0.0 {
            // x(t) heads monotonically to e_x inside the strip.
            return Ok(converged(arrival_time(rf, d, l_hi)));
        }
        if l_lo < 0.0 && l_hi > 0.0 {
            // Saddle: converge only along the stable eigenline.
            let unstable = project(rf, d, l_hi, l_lo);
            if unstable.norm() <= 1e-10 * d.norm() {
                let stable = d - unstable;
                let tau = if stable.norm() > ARRIVAL {
                    (stable.norm() / ARRIVAL).ln() / -l_lo
                } else {
                    0.0
                };
                return Ok(converged(tau));
            }
        }
    }
    let rate = l_hi.abs().max(l_lo.abs()).max(1e-3);
    let mut step = 1.0 / rate;
    loop {
        let b = a + step;
        if let Some(ev) = check(a, b)? {
            return Ok(ev);
        }
        if tr.state(b).norm() > UNBOUNDED {
            return Ok(unbounded(b));
        }
        if b > MAX_TIME {
            return Err(Error::Trapped { region: here });
        }
        a = b;
        step *= 2.0;
    }
}

/// Component of `d` along the eigenvector of `l` (real distinct roots).
fn project(rf: &RegionFlow, d: Point, l: f64, other: f64) -> Point {
    // (A - other I) d / (l - other)
    let a = &rf.matrix;
    let s = 1.0 / (l - other);
    Point::new(
        s * ((a[0][0] - other) * d.x + a[0][1] * d.y),
        s * (a[1][0] * d.x + (a[1][1] - other) * d.y),
    )
}

/// Time for a decaying real-root state offset `d` to fall below `ARRIVAL`.
fn arrival_time(rf: &RegionFlow, d: Point, slowest: f64) -> f64 {
    let bound = match rf.eigen {
        Eigen::RealDistinct { l1, l2 } => project(rf, d, l1, l2).norm() + project(rf, d, l2, l1).norm(),
        _ => d.norm() + rf.apply_n(d).norm() / slowest.abs().max(1e-300),
    };
    if bound <= ARRIVAL {
        return 0.0;
    }
    // For a repeated root the envelope is e^{lt}(|d| + t|Nd|); the extra
    // factor is absorbed by doubling the pure exponential estimate.
    let base = (bound / ARRIVAL).ln() / -slowest;
    match rf.eigen {
        Eigen::RealRepeated { .. } => 2.0 * base,
        _ => base,
    }
}
