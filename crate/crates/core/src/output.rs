//! CSV and JSON artifacts.
//!
//! Floats are written as `{:.16e}`, 17 significant digits, which parses back
//! to the identical `f64`.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::eigensolver::SweepEntry;
use crate::error::{Error, Result};
use crate::lattice::{GridFunction, Trajectory};

pub const TRAJECTORY_HEADER: [&str; 3] = ["t", "x", "value"];
pub const SUMMARY_HEADER: [&str; 5] = ["rho", "lambda", "residual_rel", "iterations", "converged"];
pub const ORACLE_HEADER: [&str; 4] = ["comparison", "parameter", "delta", "tolerance"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Rows `t,x,value` ordered by time node, then space node.
pub fn write_trajectory_csv(w: impl Write, y: &Trajectory) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRAJECTORY_HEADER)?;
    for (j, node) in y.nodes().iter().enumerate() {
        let t = fmt_f64(y.t(j));
        for (i, v) in node.values().iter().enumerate() {
            out.write_record([t.as_str(), &fmt_f64(node.x(i)), &fmt_f64(*v)])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Inverse of [`write_trajectory_csv`]. The domain length is not recoverable
/// bit-for-bit from the `x` column and must be supplied.
pub fn read_trajectory_csv(r: impl Read, length: f64) -> Result<Trajectory> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers()?.clone();
    if header.iter().ne(TRAJECTORY_HEADER) {
        return Err(Error::Validation(format!("unexpected trajectory header {header:?}")));
    }
    let mut times: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |k: usize| -> Result<f64> {
            record[k]
                .parse::<f64>()
                .map_err(|e| Error::Validation(format!("bad number `{}`: {e}", &record[k])))
        };
        let t = parse(0)?;
        if times.last() != Some(&t) {
            times.push(t);
            rows.push(Vec::new());
        }
        rows.last_mut().expect("pushed above").push(parse(2)?);
    }
    let nodes = rows
        .into_iter()
        .map(|values| GridFunction::new(length, values))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(nodes)
}

pub fn write_summary_csv(w: impl Write, entries: &[SweepEntry]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for e in entries {
        let (lambda, residual, iterations, converged) = match &e.certificate {
            Some(c) => (c.lambda, c.residual_rel, c.iterations, c.converged),
            None => (f64::NAN, f64::NAN, 0, false),
        };
        out.write_record([
            fmt_f64(e.rho),
            fmt_f64(lambda),
            fmt_f64(residual),
            iterations.to_string(),
            converged.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub comparison: String,
    pub parameter: String,
    pub delta: f64,
    /// `None` for informational rows.
    pub tolerance: Option<f64>,
}

impl OracleRow {
    pub fn passed(&self) -> bool {
        self.tolerance.is_none_or(|tol| self.delta <= tol)
    }
}

pub fn write_oracle_csv(w: impl Write, rows: &[OracleRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(ORACLE_HEADER)?;
    for r in rows {
        out.write_record([
            r.comparison.clone(),
            r.parameter.clone(),
            fmt_f64(r.delta),
            r.tolerance.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}

pub fn create_file(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}
