use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Absolute residual `|x - bound|` accepted for a strip exit.
    pub crossing: f64,
    /// Residual of a refined fixed point, relative to `1 + S`.
    pub fixedpoint: f64,
    /// Corner coincidence and sewed-center detection, relative.
    pub center: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            crossing: 1e-12,
            fixedpoint: 1e-10,
            center: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = [self.crossing, self.fixedpoint, self.center]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(crate::Error::Parse("tolerances must be positive".into()))
        }
    }
}
