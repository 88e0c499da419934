//! Qualitative analysis of planar piecewise linear Liénard systems
//!
//! ```text
//! x' = y - phi(x)
//! y' = beta - alpha * x - y,      alpha > 0, beta > 0
//! ```
//!
//! where `phi` is a continuous piecewise linear characteristic with `k`
//! dropping sections of slope `-k2` separated by ascending sections of slope
//! `k1`. The vertical lines through the corners of `phi` split the plane into
//! `2k + 1` strips, and inside each strip the system is linear and is solved
//! in closed form. Global trajectories are obtained by sewing the strip flows
//! together on the corner lines.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: the characteristic, parameters, singular points and the
//!   discriminant curve of the `(alpha, beta)` plane.
//! * [`flow`]: exact strip flows and first-exit detection.
//! * [`sewing`]: sewn trajectories and sewing-line sections.
//! * [`return_map`]: return maps on the sections, their derivatives, and
//!   limit-cycle extraction.
//! * [`bifurcation`]: center condition, separatrix data, parameter-plane
//!   scans and the cycle-count bound.
//! * [`io`]: CSV/JSON formats shared by the command line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifurcation;
pub mod error;
pub mod flow;
pub mod geom;
pub mod io;
pub mod model;
pub mod return_map;
pub mod sewing;
pub mod tol;

pub use error::{Error, Result};
pub use geom::Point;
pub use model::{
    build_curve, discriminant_curve, eval_phi, find_singular_points, DiscriminantCurve,
    DiscriminantLine, PwlCurve, PwlSystem, Region, SingularKind, SingularPoint, SingularSite,
    SystemParams, SystemSpec,
};
pub use tol::Tolerances;
