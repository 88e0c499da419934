//! Text formats: return-map, scan and trajectory CSV, verify JSON.
//!
//! Floats are written in shortest round-trip form, so `parse(emit(x)) == x`.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::bifurcation::{BifurcationDiagram, CellFlag, CellReport, VerifyReport};
use crate::return_map::{Branch, MapImage, MapSample};
use crate::sewing::TrajectorySample;
use crate::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn io_err(e: std::io::Error) -> Error {
    Error::Parse(e.to_string())
}

#[derive(Serialize, Deserialize)]
#[allow(non_snake_case)]
struct MapRow {
    S0: f64,
    S0_bar: Option<f64>,
    deriv: Option<f64>,
    branch: Option<Branch>,
}

/// Columns `S0,S0_bar,deriv,branch`; non-returning samples leave the last
/// three empty.
pub fn write_map_csv<W: Write>(samples: &[MapSample], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for s in samples {
        let i = s.image;
        out.serialize(MapRow {
            S0: s.s0,
            S0_bar: i.map(|i| i.s0_bar),
            deriv: i.map(|i| i.deriv),
            branch: i.map(|i| i.branch),
        })
        .map_err(csv_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_map_csv<R: Read>(r: R) -> Result<Vec<MapSample>> {
    let mut rd = csv::Reader::from_reader(r);
    check_header(&mut rd, &["S0", "S0_bar", "deriv", "branch"])?;
    rd.deserialize::<MapRow>()
        .map(|row| {
            let row = row.map_err(csv_err)?;
            let image = match (row.S0_bar, row.deriv, row.branch) {
                (Some(s0_bar), Some(deriv), Some(branch)) => Some(MapImage { s0_bar, deriv, branch }),
                (None, None, None) => None,
                _ => return Err(Error::Parse(format!("partial map row at S0 = {}", row.S0))),
            };
            Ok(MapSample { s0: row.S0, image })
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct ScanRow {
    alpha: f64,
    beta: f64,
    n_singular: usize,
    n_small: usize,
    n_big: usize,
    flags: String,
}

/// One row per cell, row-major; flags joined by `;`. Overlays are not
/// written.
pub fn write_scan_csv<W: Write>(diagram: &BifurcationDiagram, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for c in diagram.iter() {
        out.serialize(ScanRow {
            alpha: c.alpha,
            beta: c.beta,
            n_singular: c.n_singular,
            n_small: c.n_small,
            n_big: c.n_big,
            flags: c.flags.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(";"),
        })
        .map_err(csv_err)?;
    }
    out.flush().map_err(io_err)
}

/// Rebuilds the grids from the distinct `alpha`/`beta` values in row order.
/// The row count must fill the grid.
pub fn read_scan_csv<R: Read>(r: R) -> Result<BifurcationDiagram> {
    let mut rd = csv::Reader::from_reader(r);
    check_header(&mut rd, &["alpha", "beta", "n_singular", "n_small", "n_big", "flags"])?;
    let mut rows = Vec::new();
    for row in rd.deserialize::<ScanRow>() {
        let row = row.map_err(csv_err)?;
        let flags = row
            .flags
            .split(';')
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<BTreeSet<CellFlag>>>()?;
        rows.push(CellReport {
            alpha: row.alpha,
            beta: row.beta,
            n_singular: row.n_singular,
            n_small: row.n_small,
            n_big: row.n_big,
            flags,
        });
    }
    if rows.is_empty() {
        return Err(Error::Parse("scan has no rows".into()));
    }
    let nb = rows.iter().take_while(|c| c.alpha == rows[0].alpha).count();
    if rows.len() % nb != 0 {
        return Err(Error::Parse(format!("{} rows do not fill a grid of width {nb}", rows.len())));
    }
    let beta_grid: Vec<f64> = rows[..nb].iter().map(|c| c.beta).collect();
    let cells: Vec<Vec<CellReport>> = rows.chunks(nb).map(<[CellReport]>::to_vec).collect();
    let alpha_grid: Vec<f64> = cells.iter().map(|r| r[0].alpha).collect();
    for (i, row) in cells.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            if c.alpha != alpha_grid[i] || c.beta != beta_grid[j] {
                return Err(Error::Parse(format!("row {} is off the grid", i * nb + j + 1)));
            }
        }
    }
    Ok(BifurcationDiagram { alpha_grid, beta_grid, cells, curves: Vec::new() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub arc_index: usize,
    pub region: usize,
    /// Time since the arc was entered.
    pub t_entry: f64,
    pub x: f64,
    pub y: f64,
}

pub fn trajectory_rows(samples: &[TrajectorySample]) -> Vec<TrajectoryRow> {
    let mut start = 0.0;
    let mut arc = usize::MAX;
    samples
        .iter()
        .map(|s| {
            if s.arc_index != arc {
                arc = s.arc_index;
                start = s.t;
            }
            TrajectoryRow { arc_index: s.arc_index, region: s.region, t_entry: s.t - start, x: s.point.x, y: s.point.y }
        })
        .collect()
}

/// Columns `arc_index,region,t_entry,x,y`.
pub fn write_trajectory_csv<W: Write>(rows: &[TrajectoryRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(csv_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_trajectory_csv<R: Read>(r: R) -> Result<Vec<TrajectoryRow>> {
    let mut rd = csv::Reader::from_reader(r);
    check_header(&mut rd, &["arc_index", "region", "t_entry", "x", "y"])?;
    rd.deserialize().map(|r| r.map_err(csv_err)).collect()
}

pub fn verify_json(report: &VerifyReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

pub fn read_verify_json(s: &str) -> Result<VerifyReport> {
    serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
}

fn check_header<R: Read>(rd: &mut csv::Reader<R>, want: &[&str]) -> Result<()> {
    let h = rd.headers().map_err(csv_err)?;
    if h.iter().eq(want.iter().copied()) {
        Ok(())
    } else {
        Err(Error::Parse(format!("expected header {}, got {}", want.join(","), h.iter().collect::<Vec<_>>().join(","))))
    }
}
