#![allow(dead_code)]

use ode_solvers::{Dop853, System, Vector2};
use plds_core::flow::RegionFlow;
use plds_core::{build_curve, Point, PwlCurve, PwlSystem, SystemParams};
use rand::Rng;

pub fn ref_k1() -> PwlCurve {
    build_curve(vec![Point::new(1.0, 2.0), Point::new(2.0, 0.0)], 1.0, 2.0).unwrap()
}

pub fn ref_k2() -> PwlCurve {
    let c = [(1.0, 2.0), (2.0, 0.0), (3.0, 1.0), (4.0, -1.0)];
    build_curve(c.iter().map(|&(x, y)| Point::new(x, y)).collect(), 1.0, 2.0).unwrap()
}

pub fn sys(curve: &PwlCurve, alpha: f64, beta: f64) -> PwlSystem {
    PwlSystem::new(curve.clone(), SystemParams::new(alpha, beta).unwrap())
}

/// Random curve with `k` in {1, 2} and slopes in `[0.2, 3]`.
pub fn random_curve<R: Rng>(rng: &mut R) -> PwlCurve {
    let k = rng.gen_range(1..=2);
    let (k1, k2) = (rng.gen_range(0.2..3.0), rng.gen_range(0.2..3.0));
    let mut p = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..2.0));
    let mut corners = vec![p];
    for i in 0..2 * k - 1 {
        let w = rng.gen_range(0.3..2.0);
        p = if i % 2 == 0 {
            Point::new(p.x + w, p.y - k2 * w)
        } else {
            Point::new(p.x + w, p.y + k1 * w)
        };
        corners.push(p);
    }
    build_curve(corners, k1, k2).unwrap()
}

struct Affine {
    a: [[f64; 2]; 2],
    b: Point,
}

impl System<f64, Vector2<f64>> for Affine {
    fn system(&self, _t: f64, z: &Vector2<f64>, dz: &mut Vector2<f64>) {
        dz[0] = self.a[0][0] * z[0] + self.a[0][1] * z[1] + self.b.x;
        dz[1] = self.a[1][0] * z[0] + self.a[1][1] * z[1] + self.b.y;
    }
}

/// Eighth-order adaptive integration of the strip's affine field, sampled
/// every `dt` on `[0, t_end]`.
pub fn integrate(rf: &RegionFlow, p0: Point, t_end: f64, dt: f64) -> Vec<(f64, Point)> {
    let f = Affine { a: rf.matrix, b: rf.forcing };
    // Runs past `t_end`; the closing sample is dropped.
    let mut s = Dop853::new(f, 0.0, t_end + 2.0 * dt, dt, Vector2::new(p0.x, p0.y), 1e-14, 1e-14);
    s.integrate().expect("integration succeeds");
    s.x_out()
        .iter()
        .zip(s.y_out())
        .filter(|(&t, _)| t <= t_end + 1e-12)
        .map(|(&t, z)| (t, Point::new(z[0], z[1])))
        .collect()
}
