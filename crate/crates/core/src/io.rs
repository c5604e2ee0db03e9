//! File formats.
//!
//! * value fields: CSV `x1,…,xn,T` in row-major node order, plus a JSON
//!   sidecar with the grid, target, solver options and convergence data;
//! * extremals: a `# {json}` header line followed by CSV
//!   `t,y1…,p1…,u1…,H`;
//! * Lipschitz fields: CSV `x1,…,xn,L` with an empty `L` on omitted nodes;
//! * reports: pretty-printed JSON; masks: run-length encoded JSON.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::LipschitzField;
use crate::eikonal::{Scheme, SolveOptions, ValueField};
use crate::error::{invalid, Error, Result};
use crate::extremals::{Extremal, ExtremalKind, Status};
use crate::grid::{mask_to_runs, runs_to_mask, TargetSet, UniformGrid};

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Sidecar accompanying a value-field CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueFieldMeta {
    pub grid: UniformGrid,
    pub target: TargetSet,
    pub opts: SolveOptions,
    pub scheme: Scheme,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub warnings: Vec<String>,
    pub target_runs: Vec<[usize; 2]>,
}

fn coordinate_header(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

/// Writes `<stem>.csv` and `<stem>.json`, returning both paths.
pub fn write_value_field(
    stem: &Path,
    vf: &ValueField,
    target: &TargetSet,
    opts: &SolveOptions,
) -> Result<(PathBuf, PathBuf)> {
    let csv_path = stem.with_extension("csv");
    let json_path = stem.with_extension("json");
    let n = vf.grid.dim();
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_err)?;
    w.write_record(coordinate_header("x", n).chain(["T".to_string()]))
        .map_err(csv_err)?;
    for (i, v) in vf.values.iter().enumerate() {
        let row = vf.grid.point(i).into_iter().chain([*v]).map(|x| x.to_string());
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    let meta = ValueFieldMeta {
        grid: vf.grid.clone(),
        target: target.clone(),
        opts: opts.clone(),
        scheme: vf.scheme,
        converged: vf.converged,
        iterations: vf.iterations,
        residual: vf.residual,
        warnings: vf.warnings.clone(),
        target_runs: mask_to_runs(&vf.target),
    };
    write_json(&json_path, &meta)?;
    Ok((csv_path, json_path))
}

/// Reads a value field written by [`write_value_field`].
pub fn read_value_field(stem: &Path) -> Result<(ValueField, ValueFieldMeta)> {
    let meta: ValueFieldMeta = read_json(&stem.with_extension("json"))?;
    let n = meta.grid.dim();
    let mut r = csv::Reader::from_path(stem.with_extension("csv")).map_err(csv_err)?;
    let mut values = Vec::with_capacity(meta.grid.len());
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let t = rec.get(n).ok_or_else(|| Error::Parse("short value-field row".into()))?;
        values.push(t.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?);
    }
    if values.len() != meta.grid.len() {
        return Err(invalid!(
            "value field has {} rows, grid has {} nodes",
            values.len(),
            meta.grid.len()
        ));
    }
    let vf = ValueField {
        grid: meta.grid.clone(),
        values,
        target: runs_to_mask(&meta.target_runs, meta.grid.len())?,
        converged: meta.converged,
        iterations: meta.iterations,
        residual: meta.residual,
        scheme: meta.scheme,
        warnings: meta.warnings.clone(),
    };
    Ok((vf, meta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalHeader {
    pub kind: ExtremalKind,
    pub h0: f64,
    pub max_h_drift: f64,
    pub status: Status,
    pub samples: usize,
    pub n: usize,
    pub m: usize,
}

pub fn write_extremal(path: &Path, ext: &Extremal) -> Result<()> {
    let first = ext.samples.first().ok_or_else(|| invalid!("extremal has no samples"))?;
    let (n, m) = (first.y.len(), first.u.len());
    let header = ExtremalHeader {
        kind: ext.kind,
        h0: ext.h0,
        max_h_drift: ext.max_h_drift,
        status: ext.status.clone(),
        samples: ext.samples.len(),
        n,
        m,
    };
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "# {}", serde_json::to_string(&header)?)?;
    let mut w = csv::Writer::from_writer(file);
    let names = std::iter::once("t".to_string())
        .chain(coordinate_header("y", n))
        .chain(coordinate_header("p", n))
        .chain(coordinate_header("u", m))
        .chain(["H".to_string()]);
    w.write_record(names).map_err(csv_err)?;
    for s in &ext.samples {
        let row = std::iter::once(s.t)
            .chain(s.y.iter().copied())
            .chain(s.p.iter().copied())
            .chain(s.u.iter().copied())
            .chain([s.h])
            .map(|x| x.to_string());
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the JSON header line of an extremal CSV.
pub fn read_extremal_header(path: &Path) -> Result<ExtremalHeader> {
    let mut line = String::new();
    BufReader::new(File::open(path)?).read_line(&mut line)?;
    let json = line
        .strip_prefix("# ")
        .ok_or_else(|| Error::Parse("missing extremal header".into()))?;
    Ok(serde_json::from_str(json)?)
}

pub fn write_lipschitz_field(path: &Path, field: &LipschitzField) -> Result<()> {
    let n = field.grid.dim();
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(coordinate_header("x", n).chain(["L".to_string()]))
        .map_err(csv_err)?;
    for (i, q) in field.quotients.iter().enumerate() {
        let row = field
            .grid
            .point(i)
            .into_iter()
            .map(|x| x.to_string())
            .chain([q.map(|v| v.to_string()).unwrap_or_default()]);
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Run-length encoded boolean mask over a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskFile {
    pub grid: UniformGrid,
    pub runs: Vec<[usize; 2]>,
}

impl MaskFile {
    pub fn new(grid: &UniformGrid, mask: &[bool]) -> Self {
        Self {
            grid: grid.clone(),
            runs: mask_to_runs(mask),
        }
    }

    pub fn mask(&self) -> Result<Vec<bool>> {
        runs_to_mask(&self.runs, self.grid.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eikonal::solve_min_time;
    use crate::extremals::integrate_normal_extremal;
    use crate::systems;

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().expect("temporary directory")
    }

    #[test]
    fn value_field_round_trip() {
        let dir = tmpdir();
        let sys = systems::grushin();
        let grid = UniformGrid::cube(2, -1.0, 1.0, 21).unwrap();
        let target = TargetSet::ball(&[0.5, 0.0], 0.1);
        let opts = SolveOptions::default();
        let vf = solve_min_time(&sys, &target, &grid, &opts).unwrap();
        let stem = dir.path().join("field");
        write_value_field(&stem, &vf, &target, &opts).unwrap();
        let (back, meta) = read_value_field(&stem).unwrap();
        assert_eq!(back.values, vf.values);
        assert_eq!(back.target, vf.target);
        assert_eq!(meta.target, target);
        let header = std::fs::read_to_string(stem.with_extension("csv")).unwrap();
        assert!(header.starts_with("x1,x2,T\n"));
    }

    #[test]
    fn extremal_header_round_trip() {
        let dir = tmpdir();
        let sys = systems::heisenberg();
        let ext = integrate_normal_extremal(&sys, &[0.0; 3], &[1.0, 0.0, 1.0], 0.1, 1e-2).unwrap();
        let path = dir.path().join("ext.csv");
        write_extremal(&path, &ext).unwrap();
        let header = read_extremal_header(&path).unwrap();
        assert_eq!(header.samples, ext.samples.len());
        assert_eq!(header.status, Status::Completed);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().nth(1), Some("t,y1,y2,y3,p1,p2,p3,u1,u2,H"));
    }

    #[test]
    fn mask_file_round_trip() {
        let grid = UniformGrid::cube(2, 0.0, 1.0, 5).unwrap();
        let mask: Vec<bool> = (0..grid.len()).map(|i| i % 3 == 0).collect();
        let f = MaskFile::new(&grid, &mask);
        assert_eq!(f.mask().unwrap(), mask);
    }
}
