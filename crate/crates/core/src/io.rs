//! CSV and JSON serialization.
//!
//! Envelopes are written as `coordinate,re,im` rows under a one-line header
//! (`t,re,im` or `omega,re,im`). Values use 17 significant digits, which
//! round-trips every finite `f64` exactly.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grids::{ComplexEnvelope, Domain, Grid};

/// Format used for every float written to CSV.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn coordinate_header(domain: Domain) -> &'static str {
    match domain {
        Domain::Time => "t",
        Domain::Frequency => "omega",
    }
}

pub fn write_envelope<W: Write>(writer: W, envelope: &ComplexEnvelope) -> Result<()> {
    let grid = envelope.grid();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([coordinate_header(grid.domain()), "re", "im"])?;
    for (i, z) in envelope.samples().iter().enumerate() {
        w.write_record([
            format_float(grid.coord(i)),
            format_float(z.re),
            format_float(z.im),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read an envelope written by [`write_envelope`]. The grid is rebuilt from
/// the first and last coordinates; interior coordinates must lie on it.
pub fn read_envelope<R: Read>(reader: R) -> Result<ComplexEnvelope> {
    let mut r = csv::Reader::from_reader(reader);
    let domain = match r.headers()?.iter().collect::<Vec<_>>().as_slice() {
        ["t", "re", "im"] => Domain::Time,
        ["omega", "re", "im"] => Domain::Frequency,
        other => {
            return Err(Error::invalid(format!(
                "unexpected envelope header {other:?}"
            )))
        }
    };
    let mut coords = Vec::new();
    let mut samples = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record?;
        let field = |k: usize| -> Result<f64> {
            record
                .get(k)
                .ok_or_else(|| Error::invalid(format!("row {row}: missing column {k}")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::invalid(format!("row {row}: {e}")))
        };
        coords.push(field(0)?);
        samples.push(Complex64::new(field(1)?, field(2)?));
    }
    if coords.len() < 2 {
        return Err(Error::invalid("envelope needs at least two rows"));
    }
    let grid = Grid::new(domain, coords[0], coords[coords.len() - 1], coords.len())?;
    let tol = 1e-9 * grid.spacing();
    if let Some(i) = coords
        .iter()
        .enumerate()
        .position(|(i, &x)| (x - grid.coord(i)).abs() > tol)
    {
        return Err(Error::invalid(format!(
            "row {i}: coordinate is not on a uniform grid"
        )));
    }
    ComplexEnvelope::new(grid, samples)
}

pub fn write_envelope_file(path: impl AsRef<Path>, envelope: &ComplexEnvelope) -> Result<()> {
    write_envelope(BufWriter::new(File::create(path)?), envelope)
}

pub fn read_envelope_file(path: impl AsRef<Path>) -> Result<ComplexEnvelope> {
    read_envelope(File::open(path)?)
}

/// Write real columns sharing one header row.
pub fn write_columns<W: Write>(writer: W, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    if header.len() != columns.len() {
        return Err(Error::invalid("one header per column"));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::invalid("columns differ in length"));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for i in 0..rows {
        w.write_record(columns.iter().map(|c| format_float(c[i])))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_columns_file(
    path: impl AsRef<Path>,
    header: &[&str],
    columns: &[&[f64]],
) -> Result<()> {
    write_columns(BufWriter::new(File::create(path)?), header, columns)
}

/// Serialize records (one struct per row) with a header from the field names.
pub fn write_records<W: Write, T: Serialize>(writer: W, records: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read, T: DeserializeOwned>(reader: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn write_json_file<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json_file<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(
        File::open(path)?,
    ))?)
}
