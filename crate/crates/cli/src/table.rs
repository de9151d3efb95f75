//! Output rows and writers. CSV headers come from the row structs' field
//! names, so `--format csv` and `--format json` carry identical fields in
//! identical order, and both encoders print floats in shortest
//! round-trip form.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use serde::{Serialize, Serializer};

use crate::args::OutputFormat;

/// One rate's planning outcome.
#[derive(Debug, Serialize)]
pub struct PlanRow {
    pub p: f64,
    pub n_required: u64,
    pub coverage: f64,
    pub stable: bool,
}

/// One ROC operating point.
#[derive(Debug, Serialize)]
pub struct CurveRow {
    #[serde(serialize_with = "infinity_as_string")]
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// One profile's recombined rates.
#[derive(Debug, Serialize)]
pub struct AggregateRow {
    pub profile: String,
    pub tpr: f64,
    pub fpr: f64,
    pub effective_n_pos: f64,
    pub effective_n_neg: f64,
}

/// The curve's sentinel point carries threshold +inf, which JSON cannot
/// represent as a number; both encoders emit the text `inf` instead.
fn infinity_as_string<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

/// Opens the data stream: stdout unless a path was given.
pub fn open_sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>, String> {
    match path {
        None => Ok(Box::new(io::stdout().lock())),
        Some(p) => File::create(p)
            .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| format!("{}: {e}", p.display())),
    }
}

/// Writes a table of rows in the requested encoding.
pub fn write_rows<T: Serialize>(
    rows: &[T],
    format: OutputFormat,
    sink: &mut dyn Write,
) -> Result<(), String> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            for row in rows {
                w.serialize(row).map_err(|e| e.to_string())?;
            }
            w.flush().map_err(|e| e.to_string())
        }
        OutputFormat::Json => {
            serde_json::to_writer(&mut *sink, rows).map_err(|e| e.to_string())?;
            sink.write_all(b"\n").map_err(|e| e.to_string())
        }
    }
}

/// Writes a single report object as pretty-printed JSON.
pub fn write_report<T: Serialize>(report: &T, sink: &mut dyn Write) -> Result<(), String> {
    serde_json::to_writer_pretty(&mut *sink, report).map_err(|e| e.to_string())?;
    sink.write_all(b"\n").map_err(|e| e.to_string())
}
