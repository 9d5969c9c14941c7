//! Text formats for measures, plans, embeddings and direction sets.
//!
//! Measures are CSV with header `w,x1,...,xd` (weight first, one row per
//! atom) or JSON `{"weights": [...], "atoms": [[...], ...]}`. Plans are CSV
//! with header `i,j,mass` or JSON `{"source_size", "target_size",
//! "entries": [[i, j, mass], ...]}`. Floats are written with 17 significant
//! digits, so reading back reproduces every value exactly.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::Deserialize;

use crate::applications::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, PlanEntry, TransportPlan};

/// Serialization format of a measure or plan file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `Json` for a `.json` extension, `Csv` otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Formats `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(field: &str, what: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("{what}: {field:?}: {e}")))
}

fn parse_usize(field: &str, what: &str) -> Result<usize> {
    field
        .trim()
        .parse::<usize>()
        .map_err(|e| Error::Parse(format!("{what}: {field:?}: {e}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Measure file contents before validation.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RawMeasure {
    pub weights: Vec<f64>,
    pub atoms: Vec<Vec<f64>>,
}

impl RawMeasure {
    pub fn into_measure(self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(&self.atoms, &self.weights)
    }
}

pub fn read_raw_measure<R: Read>(reader: R, format: Format) -> Result<RawMeasure> {
    match format {
        Format::Json => serde_json::from_reader(reader).map_err(|e| Error::Parse(e.to_string())),
        Format::Csv => {
            let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
            let header = rdr.headers().map_err(csv_err)?.clone();
            if header.get(0) != Some("w") || header.len() < 2 {
                return Err(Error::Parse(format!(
                    "measure header must be w,x1,...,xd; found {:?}",
                    header.iter().collect::<Vec<_>>()
                )));
            }
            let dim = header.len() - 1;
            let mut raw = RawMeasure {
                weights: Vec::new(),
                atoms: Vec::new(),
            };
            for (row, record) in rdr.records().enumerate() {
                let record = record.map_err(csv_err)?;
                if record.len() != dim + 1 {
                    return Err(Error::Parse(format!("row {}: expected {} fields", row + 1, dim + 1)));
                }
                raw.weights.push(parse_f64(&record[0], "weight")?);
                raw.atoms.push(
                    record
                        .iter()
                        .skip(1)
                        .map(|f| parse_f64(f, "coordinate"))
                        .collect::<Result<_>>()?,
                );
            }
            Ok(raw)
        }
    }
}

pub fn read_measure<R: Read>(reader: R, format: Format) -> Result<DiscreteMeasure> {
    read_raw_measure(reader, format)?.into_measure()
}

pub fn write_measure<W: Write>(mut writer: W, measure: &DiscreteMeasure, format: Format) -> Result<()> {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push('w');
            for k in 1..=measure.dim() {
                let _ = write!(out, ",x{k}");
            }
            out.push('\n');
            for (atom, &w) in measure.atoms().zip(measure.weights()) {
                out.push_str(&fmt_f64(w));
                for &c in atom {
                    out.push(',');
                    out.push_str(&fmt_f64(c));
                }
                out.push('\n');
            }
        }
        Format::Json => {
            out.push_str("{\"weights\":[");
            out.push_str(&join(measure.weights().iter().copied()));
            out.push_str("],\"atoms\":[");
            let atoms: Vec<String> = measure
                .atoms()
                .map(|a| format!("[{}]", join(a.iter().copied())))
                .collect();
            out.push_str(&atoms.join(","));
            out.push_str("]}\n");
        }
    }
    writer.write_all(out.as_bytes())?;
    Ok(())
}

fn join(values: impl Iterator<Item = f64>) -> String {
    values.map(fmt_f64).collect::<Vec<_>>().join(",")
}

pub fn read_measure_file(path: &Path) -> Result<DiscreteMeasure> {
    let file = std::fs::File::open(path)?;
    read_measure(std::io::BufReader::new(file), Format::from_path(path))
}

pub fn write_measure_file(path: &Path, measure: &DiscreteMeasure, format: Format) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_measure(std::io::BufWriter::new(file), measure, format)
}

#[derive(Deserialize)]
struct JsonPlan {
    source_size: usize,
    target_size: usize,
    entries: Vec<(usize, usize, f64)>,
}

/// Reads a plan. CSV files carry no sizes, so they are passed in.
pub fn read_plan<R: Read>(reader: R, format: Format, source_size: usize, target_size: usize) -> Result<TransportPlan> {
    match format {
        Format::Json => {
            let plan: JsonPlan = serde_json::from_reader(reader).map_err(|e| Error::Parse(e.to_string()))?;
            if plan.source_size != source_size || plan.target_size != target_size {
                return Err(Error::Parse(format!(
                    "plan is {}x{}, expected {source_size}x{target_size}",
                    plan.source_size, plan.target_size
                )));
            }
            let entries = plan.entries.into_iter().map(|(i, j, m)| PlanEntry::new(i, j, m)).collect();
            TransportPlan::new(source_size, target_size, entries)
        }
        Format::Csv => {
            let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
            let header = rdr.headers().map_err(csv_err)?.clone();
            if header.iter().collect::<Vec<_>>() != ["i", "j", "mass"] {
                return Err(Error::Parse("plan header must be i,j,mass".into()));
            }
            let mut entries = Vec::new();
            for record in rdr.records() {
                let record = record.map_err(csv_err)?;
                if record.len() != 3 {
                    return Err(Error::Parse("plan rows must have 3 fields".into()));
                }
                entries.push(PlanEntry::new(
                    parse_usize(&record[0], "i")?,
                    parse_usize(&record[1], "j")?,
                    parse_f64(&record[2], "mass")?,
                ));
            }
            TransportPlan::new(source_size, target_size, entries)
        }
    }
}

pub fn write_plan<W: Write>(mut writer: W, plan: &TransportPlan, format: Format) -> Result<()> {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str("i,j,mass\n");
            for e in plan.entries() {
                let _ = writeln!(out, "{},{},{}", e.source, e.target, fmt_f64(e.mass));
            }
        }
        Format::Json => {
            let _ = write!(
                out,
                "{{\"source_size\":{},\"target_size\":{},\"entries\":[",
                plan.source_size(),
                plan.target_size()
            );
            let entries: Vec<String> = plan
                .entries()
                .iter()
                .map(|e| format!("[{},{},{}]", e.source, e.target, fmt_f64(e.mass)))
                .collect();
            out.push_str(&entries.join(","));
            out.push_str("]}\n");
        }
    }
    writer.write_all(out.as_bytes())?;
    Ok(())
}

/// Writes `N` rows of `d` columns with header `phi1,...,phid`.
pub fn write_embedding_csv<W: Write>(mut writer: W, embedding: &EmbeddingMatrix) -> Result<()> {
    let mut out = (1..=embedding.dim()).map(|k| format!("phi{k}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for row in embedding.rows() {
        out.push_str(&join(row.iter().copied()));
        out.push('\n');
    }
    writer.write_all(out.as_bytes())?;
    Ok(())
}

pub fn read_embedding_csv<R: Read>(reader: R) -> Result<EmbeddingMatrix> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let dim = rdr.headers().map_err(csv_err)?.len();
    let rows = rdr
        .records()
        .map(|r| {
            r.map_err(csv_err)?
                .iter()
                .map(|f| parse_f64(f, "embedding"))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    EmbeddingMatrix::new(dim, rows)
}

/// One direction per row, header `theta1,...,thetad`.
pub fn write_directions_csv<W: Write>(mut writer: W, directions: &[Vec<f64>]) -> Result<()> {
    let dim = directions.first().map_or(0, Vec::len);
    let mut out = (1..=dim).map(|k| format!("theta{k}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for d in directions {
        out.push_str(&join(d.iter().copied()));
        out.push('\n');
    }
    writer.write_all(out.as_bytes())?;
    Ok(())
}
