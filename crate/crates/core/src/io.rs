//! Snapshot and diagnostics files.
//!
//! A snapshot pairs a CSV body with a JSON sidecar. The CSV carries
//! the grid coordinate and the real and imaginary parts of every field
//! component, all at 17 significant digits so the round trip is exact;
//! the sidecar records the field kind, the algebra rank, and the grid
//! needed to rebuild the typed state. Diagnostics are plain CSV, one
//! labeled header, one row per sample time. Output bytes are a pure
//! function of the state: no timestamps, no environment.
//!
//! Readers check shape, not content: a snapshot that parses is not
//! thereby on the manifold its kind names.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraDescriptor, MVector, C64};
use crate::calculus::{Grid, PeriodicField};
use crate::error::Error;
use crate::geometry::{CurveState, SpinState};
use crate::hierarchy::HasimotoState;
use crate::linalg::CMat;
use crate::map::{MapCoords, MapState};
use crate::Result;

/// Typed contents of a snapshot file.
#[derive(Debug, Clone)]
pub enum Snapshot {
    Hasimoto(HasimotoState),
    Spin(SpinState),
    Curve(CurveState),
    Map(MapState),
    Coords { coords: MapCoords, time: f64 },
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    kind: String,
    n: usize,
    m: usize,
    length: f64,
    time: f64,
}

impl Snapshot {
    pub fn kind(&self) -> &'static str {
        match self {
            Snapshot::Hasimoto(_) => "hasimoto",
            Snapshot::Spin(_) => "spin",
            Snapshot::Curve(_) => "curve",
            Snapshot::Map(_) => "map",
            Snapshot::Coords { .. } => "coords",
        }
    }

    pub fn time(&self) -> f64 {
        match self {
            Snapshot::Hasimoto(s) => s.time,
            Snapshot::Spin(s) => s.time,
            Snapshot::Curve(s) => s.time,
            Snapshot::Map(s) => s.time,
            Snapshot::Coords { time, .. } => *time,
        }
    }

    pub fn grid(&self) -> Grid {
        match self {
            Snapshot::Hasimoto(s) => s.q.grid,
            Snapshot::Spin(s) => s.t_field.grid,
            Snapshot::Curve(s) => s.gamma.grid,
            Snapshot::Map(s) => s.gamma_map.grid,
            Snapshot::Coords { coords, .. } => coords.theta.grid,
        }
    }

    /// Algebra rank N of the stored field.
    pub fn rank(&self) -> usize {
        match self {
            Snapshot::Hasimoto(s) => s.desc.n,
            Snapshot::Spin(s) => s.desc.n,
            Snapshot::Curve(s) => s.desc.n,
            Snapshot::Map(s) => s.desc.n,
            Snapshot::Coords { coords, .. } => coords.big_theta.values[0].dim(),
        }
    }
}

/// Formats one number at 17 significant digits, round-trip exact.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn header(kind: &str, n: usize) -> String {
    let mut cols = vec!["x".to_string()];
    match kind {
        "hasimoto" => {
            for j in 0..n {
                cols.push(format!("q{j}_re"));
                cols.push(format!("q{j}_im"));
            }
        }
        "spin" | "curve" | "map" => {
            let letter = if kind == "spin" { 't' } else { 'g' };
            for r in 0..=n {
                for c in 0..=n {
                    cols.push(format!("{letter}{r}_{c}_re"));
                    cols.push(format!("{letter}{r}_{c}_im"));
                }
            }
        }
        "coords" => {
            cols.push("theta".to_string());
            for j in 0..n {
                cols.push(format!("d{j}_re"));
                cols.push(format!("d{j}_im"));
            }
        }
        _ => unreachable!("snapshot kind"),
    }
    cols.join(",")
}

fn push_complex(row: &mut Vec<f64>, z: C64) {
    row.push(z.re);
    row.push(z.im);
}

fn push_matrix(row: &mut Vec<f64>, mat: &CMat) {
    for r in 0..mat.nrows() {
        for c in 0..mat.ncols() {
            push_complex(row, mat[(r, c)]);
        }
    }
}

fn row_values(snap: &Snapshot, j: usize) -> Vec<f64> {
    let mut row = Vec::new();
    match snap {
        Snapshot::Hasimoto(s) => {
            for &z in &s.q.values[j].0 {
                push_complex(&mut row, z);
            }
        }
        Snapshot::Spin(s) => push_matrix(&mut row, &s.t_field.values[j]),
        Snapshot::Curve(s) => push_matrix(&mut row, &s.gamma.values[j]),
        Snapshot::Map(s) => push_matrix(&mut row, &s.gamma_map.values[j]),
        Snapshot::Coords { coords, .. } => {
            row.push(coords.theta.values[j]);
            for &z in &coords.big_theta.values[j].0 {
                push_complex(&mut row, z);
            }
        }
    }
    row
}

/// Writes `snap` as `path` (CSV) plus a JSON sidecar at the same stem.
pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let grid = snap.grid();
    let mut body = String::new();
    body.push_str(&header(snap.kind(), snap.rank()));
    body.push('\n');
    for j in 0..grid.m {
        body.push_str(&fmt_float(grid.point(j)));
        for v in row_values(snap, j) {
            body.push(',');
            body.push_str(&fmt_float(v));
        }
        body.push('\n');
    }
    fs::write(path, body)?;
    let sidecar = Sidecar {
        kind: snap.kind().to_string(),
        n: snap.rank(),
        m: grid.m,
        length: grid.length,
        time: snap.time(),
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::BadSnapshot(e.to_string()))?;
    fs::write(path.with_extension("json"), json + "\n")?;
    Ok(())
}

fn bad(path: &Path, detail: impl std::fmt::Display) -> Error {
    Error::BadSnapshot(format!("{}: {detail}", path.display()))
}

/// Reads a snapshot written by [`write_snapshot`], rebuilding the
/// typed state from the CSV body and the JSON sidecar.
pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let sidecar_path = path.with_extension("json");
    let sidecar_text = fs::read_to_string(&sidecar_path)
        .map_err(|e| bad(&sidecar_path, format!("missing sidecar ({e})")))?;
    let sc: Sidecar = serde_json::from_str(&sidecar_text)
        .map_err(|e| bad(&sidecar_path, format!("sidecar parse: {e}")))?;
    if sc.n == 0 {
        return Err(bad(&sidecar_path, "rank must be at least 1"));
    }
    let grid = Grid::new(sc.m, sc.length)?;
    let body = fs::read_to_string(path)?;
    let mut lines = body.lines();
    let head = lines.next().ok_or_else(|| bad(path, "empty file"))?;
    if !matches!(sc.kind.as_str(), "hasimoto" | "spin" | "curve" | "map" | "coords") {
        return Err(bad(&sidecar_path, format!("unknown kind {:?}", sc.kind)));
    }
    let want_head = header(&sc.kind, sc.n);
    if head != want_head {
        return Err(bad(path, format!("header {head:?} does not match kind {:?}", sc.kind)));
    }
    let width = want_head.split(',').count();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(sc.m);
    for (idx, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(bad(
                path,
                format!("row {}: {} fields, expected {width}", idx + 2, fields.len()),
            ));
        }
        let mut row = Vec::with_capacity(width - 1);
        // the leading x column is redundant with the grid; skip it
        for f in &fields[1..] {
            row.push(
                f.parse::<f64>()
                    .map_err(|_| bad(path, format!("row {}: bad number {f:?}", idx + 2)))?,
            );
        }
        rows.push(row);
    }
    if rows.len() != sc.m {
        return Err(bad(path, format!("{} rows, expected {}", rows.len(), sc.m)));
    }
    let desc = AlgebraDescriptor::new(sc.n);
    let np = sc.n + 1;
    let matrix_field = |rows: &[Vec<f64>]| {
        PeriodicField::new(
            grid,
            rows.iter()
                .map(|row| {
                    CMat::from_row_iterator(
                        np,
                        np,
                        row.chunks(2).map(|p| C64::new(p[0], p[1])),
                    )
                })
                .collect(),
        )
    };
    let snap = match sc.kind.as_str() {
        "hasimoto" => {
            let q = PeriodicField::new(
                grid,
                rows.iter()
                    .map(|row| MVector(row.chunks(2).map(|p| C64::new(p[0], p[1])).collect()))
                    .collect(),
            );
            Snapshot::Hasimoto(HasimotoState::new(desc, q, sc.time))
        }
        "spin" => Snapshot::Spin(SpinState::new(desc, matrix_field(&rows), sc.time)),
        "curve" => Snapshot::Curve(CurveState::new(desc, matrix_field(&rows), sc.time)),
        "map" => Snapshot::Map(MapState::new(desc, matrix_field(&rows), sc.time)),
        "coords" => {
            let theta = PeriodicField::new(grid, rows.iter().map(|row| row[0]).collect());
            let dirs = PeriodicField::new(
                grid,
                rows.iter()
                    .map(|row| {
                        MVector(row[1..].chunks(2).map(|p| C64::new(p[0], p[1])).collect())
                    })
                    .collect(),
            );
            Snapshot::Coords { coords: MapCoords::new(theta, dirs)?, time: sc.time }
        }
        _ => unreachable!(),
    };
    Ok(snap)
}

/// Incremental CSV writer for per-step scalar diagnostics.
pub struct DiagnosticsWriter {
    file: BufWriter<fs::File>,
    width: usize,
}

impl DiagnosticsWriter {
    /// Creates the file (and its directory) and writes the header row.
    pub fn create(path: &Path, columns: &[&str]) -> Result<Self> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        let mut file = BufWriter::new(fs::File::create(path)?);
        writeln!(file, "{}", columns.join(","))?;
        Ok(DiagnosticsWriter { file, width: columns.len() })
    }

    /// Appends one row; the width must match the header.
    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        assert_eq!(values.len(), self.width, "diagnostics row width");
        let mut line = String::new();
        for (k, &v) in values.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&fmt_float(v));
        }
        writeln!(self.file, "{line}")?;
        Ok(())
    }

    /// Flushes and closes, surfacing any deferred write error.
    pub fn finish(mut self) -> Result<()> {
        self.file.flush()?;
        Ok(())
    }
}
