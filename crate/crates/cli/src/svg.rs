//! Phase portrait rendering. Output depends only on the inputs.

use std::fmt::Write;

use plds_core::return_map::Stability;
use plds_core::{eval_phi, Point, PwlCurve, PwlSystem, SingularKind, SingularPoint};

pub struct Scene<'a> {
    pub sys: &'a PwlSystem,
    pub width: u32,
    pub height: u32,
    pub singular: &'a [SingularPoint],
    pub trajectories: &'a [Vec<Point>],
    pub cycles: &'a [(Vec<Point>, Stability)],
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = Point>, w: u32, h: u32) -> Self {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in points.filter(|p| p.is_finite()) {
            x0 = x0.min(p.x);
            x1 = x1.max(p.x);
            y0 = y0.min(p.y);
            y1 = y1.max(p.y);
        }
        let pad = |lo: f64, hi: f64| {
            let span = (hi - lo).max(1.0);
            (lo - 0.2 * span, hi + 0.2 * span)
        };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        Self { x0, x1, y0, y1, w: w as f64, h: h as f64 }
    }

    fn map(&self, p: Point) -> (f64, f64) {
        (
            (p.x - self.x0) / (self.x1 - self.x0) * self.w,
            self.h - (p.y - self.y0) / (self.y1 - self.y0) * self.h,
        )
    }

    /// Loosely inside: polylines are cut where they run far off the frame.
    fn near(&self, p: Point) -> bool {
        let (dx, dy) = (self.x1 - self.x0, self.y1 - self.y0);
        p.is_finite() && p.x > self.x0 - dx && p.x < self.x1 + dx && p.y > self.y0 - dy && p.y < self.y1 + dy
    }
}

fn polylines(out: &mut String, f: &Frame, pts: &[Point], style: &str) {
    let mut run: Vec<(f64, f64)> = Vec::new();
    let mut flush = |run: &mut Vec<(f64, f64)>| {
        if run.len() >= 2 {
            out.push_str("<polyline points=\"");
            for (i, (x, y)) in run.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{x:.2},{y:.2}");
            }
            let _ = writeln!(out, "\" {style}/>");
        }
        run.clear();
    };
    for &p in pts {
        if f.near(p) {
            let q = f.map(p);
            if run.last().is_none_or(|l| (l.0 - q.0).hypot(l.1 - q.1) >= 0.5) {
                run.push(q);
            }
        } else {
            flush(&mut run);
        }
    }
    flush(&mut run);
}

pub fn render(s: &Scene) -> String {
    let curve = &s.sys.curve;
    let anchors = curve
        .corners()
        .iter()
        .copied()
        .chain(s.singular.iter().map(|p| p.location))
        .chain(s.cycles.iter().flat_map(|(c, _)| c.iter().copied()))
        .chain(s.trajectories.iter().filter_map(|t| t.first().copied()));
    let f = Frame::fit(anchors, s.width, s.height);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = s.width,
        h = s.height
    );
    let _ = writeln!(
        out,
        "<defs><clipPath id=\"frame\"><rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\"/></clipPath></defs>",
        s.width, s.height
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g clip-path=\"url(#frame)\">\n");

    out.push_str("<g id=\"sewing-lines\">\n");
    for c in curve.corners() {
        let (x, _) = f.map(*c);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"0\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 4\"/>",
            s.height
        );
    }
    out.push_str("</g>\n<g id=\"isoclines\">\n");
    let phi: Vec<Point> = std::iter::once(f.x0)
        .chain(curve.corners().iter().map(|c| c.x))
        .chain(std::iter::once(f.x1))
        .map(|x| Point::new(x, eval_phi(curve, x).0))
        .collect();
    polylines(&mut out, &f, &phi, "fill=\"none\" stroke=\"#2b8a3e\" stroke-width=\"1.5\"");
    let (a, b) = (s.sys.alpha(), s.sys.beta());
    let line: Vec<Point> = (0..=64)
        .map(|i| {
            let x = f.x0 + (f.x1 - f.x0) * i as f64 / 64.0;
            Point::new(x, b - a * x)
        })
        .collect();
    polylines(&mut out, &f, &line, "fill=\"none\" stroke=\"#e67700\" stroke-width=\"1\" stroke-dasharray=\"6 3\"");

    out.push_str("</g>\n<g id=\"trajectories\">\n");
    for t in s.trajectories {
        polylines(&mut out, &f, t, "fill=\"none\" stroke=\"#4263eb\" stroke-width=\"0.8\"");
    }
    out.push_str("</g>\n<g id=\"cycles\">\n");
    for (c, st) in s.cycles {
        let style = match st {
            Stability::Stable => "class=\"cycle stable\" fill=\"none\" stroke=\"#c92a2a\" stroke-width=\"2.5\"",
            Stability::Unstable => {
                "class=\"cycle unstable\" fill=\"none\" stroke=\"#c92a2a\" stroke-width=\"2\" stroke-dasharray=\"5 3\""
            }
            Stability::SemiStable => {
                "class=\"cycle semistable\" fill=\"none\" stroke=\"#862e9c\" stroke-width=\"2\" stroke-dasharray=\"2 2\""
            }
        };
        polylines(&mut out, &f, c, style);
    }
    out.push_str("</g>\n<g id=\"singular-points\">\n");
    for p in s.singular {
        singular(&mut out, &f, p, curve);
    }
    out.push_str("</g>\n</g>\n</svg>\n");
    out
}

fn singular(out: &mut String, f: &Frame, p: &SingularPoint, curve: &PwlCurve) {
    use SingularKind::*;
    let (x, y) = f.map(p.location);
    let kind = format!("{:?}", p.kind);
    match p.kind {
        EquilibriumSegment => {
            let (lo, hi) = p.segment_extent.unwrap_or((p.location.x, p.location.x));
            let (x1, y1) = f.map(Point::new(lo, eval_phi(curve, lo).0));
            let (x2, y2) = f.map(Point::new(hi, eval_phi(curve, hi).0));
            let _ = writeln!(
                out,
                "<line class=\"{kind}\" x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"black\" stroke-width=\"4\"/>"
            );
        }
        Saddle | SewedSaddleNode => {
            let _ = writeln!(
                out,
                "<path class=\"{kind}\" d=\"M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}\" stroke=\"black\" stroke-width=\"2\"/>",
                x - 5.0,
                y - 5.0,
                x + 5.0,
                y + 5.0,
                x - 5.0,
                y + 5.0,
                x + 5.0,
                y - 5.0
            );
        }
        _ => {
            let fill = match p.kind {
                StableFocus | StableNode | SewedFocusStable => "black",
                _ => "white",
            };
            let _ = writeln!(
                out,
                "<circle class=\"{kind}\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"{fill}\" stroke=\"black\" stroke-width=\"1.5\"/>"
            );
        }
    }
}
