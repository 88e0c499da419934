use std::fs;
use std::path::Path;

use plds_core::sewing::Side;
use plds_core::{Point, PwlSystem, SystemSpec, Tolerances};
use serde::Deserialize;

use crate::Failure;

/// Run configuration: the system definition plus optional per-command
/// sections.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub k1: f64,
    pub k2: f64,
    pub corners: Vec<Point>,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub tol: Tolerances,
    #[serde(default)]
    pub map: MapConfig,
    #[serde(default)]
    pub portrait: PortraitConfig,
    #[serde(default)]
    pub scan: ScanConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    pub corner: usize,
    pub side: Side,
    /// `[S_min, S_max]`; defaults to a range scaled to the system.
    pub range: Option<(f64, f64)>,
    pub samples: usize,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self { corner: 1, side: Side::Below, range: None, samples: 200 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PortraitConfig {
    pub seeds: Vec<Point>,
    pub max_crossings: usize,
    pub dt: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for PortraitConfig {
    fn default() -> Self {
        Self { seeds: Vec::new(), max_crossings: 24, dt: 0.01, width: 800, height: 600 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
    pub na: usize,
    pub nb: usize,
    pub samples: usize,
    pub loop_tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { alpha_range: (0.2, 4.0), beta_range: (0.5, 6.0), na: 50, nb: 50, samples: 200, loop_tol: 1e-3 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Failure::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), Failure> {
        self.system()?;
        self.tol.validate().map_err(|e| Failure::Config(e.to_string()))?;
        let ordered = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if let Some(r) = self.map.range {
            if !(r.0 > 0.0 && r.0 < r.1 && ordered(r)) {
                return Err(Failure::Config(format!("map.range must satisfy 0 < lo < hi, got {r:?}")));
            }
        }
        if self.map.samples < 2 {
            return Err(Failure::Config("map.samples must be at least 2".into()));
        }
        if !(ordered(self.scan.alpha_range) && ordered(self.scan.beta_range)) {
            return Err(Failure::Config("scan ranges must be finite and ordered".into()));
        }
        if self.scan.na == 0 || self.scan.nb == 0 || self.scan.samples < 2 {
            return Err(Failure::Config("scan grid sizes must be positive".into()));
        }
        if !(self.portrait.dt > 0.0 && self.portrait.max_crossings > 0 && self.portrait.width > 0 && self.portrait.height > 0) {
            return Err(Failure::Config("portrait settings must be positive".into()));
        }
        if !(self.scan.loop_tol > 0.0) {
            return Err(Failure::Config("scan.loop_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn spec(&self) -> SystemSpec {
        SystemSpec {
            k1: self.k1,
            k2: self.k2,
            corners: self.corners.clone(),
            alpha: self.alpha,
            beta: self.beta,
        }
    }

    pub fn system(&self) -> Result<PwlSystem, Failure> {
        self.spec().build().map_err(|e| Failure::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#""k1": 1, "k2": 2, "corners": [[1, 2], [2, 0]], "alpha": 1, "beta": 2.5"#;

    #[test]
    fn defaults_and_overrides() {
        let c = RunConfig::parse(&format!("{{{BASE}}}")).unwrap();
        assert_eq!(c.tol, Tolerances::default());
        assert_eq!(c.map.corner, 1);
        let c = RunConfig::parse(&format!(r#"{{{BASE}, "tol": {{"crossing": 1e-11}}, "map": {{"side": "above"}}}}"#)).unwrap();
        assert_eq!(c.tol.crossing, 1e-11);
        assert_eq!(c.tol.fixedpoint, Tolerances::default().fixedpoint);
        assert_eq!(c.map.side, Side::Above);
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            "{".to_string(),
            format!(r#"{{{BASE}, "extra": 1}}"#),
            format!(r#"{{{BASE}, "tol": {{"center": -1}}}}"#),
            format!(r#"{{{BASE}, "scan": {{"alpha_range": [2, 1]}}}}"#),
            format!(r#"{{{BASE}, "map": {{"range": [0, 1]}}}}"#),
            r#"{"k1": 1, "k2": 2, "corners": [[2, 0], [1, 2]], "alpha": 1, "beta": 2.5}"#.to_string(),
            r#"{"k1": 1, "k2": 2, "corners": [[1, 2], [2, 0]], "alpha": -1, "beta": 2.5}"#.to_string(),
        ] {
            assert!(matches!(RunConfig::parse(&bad), Err(Failure::Config(_))), "{bad}");
        }
    }
}
