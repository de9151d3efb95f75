//! On-disk formats shared by every module: delimited text for sample data,
//! a key-value document for weight profiles.
//!
//! All delimited formats are comma-separated UTF-8 with a mandatory exact
//! header and `\n` or `\r\n` line endings. Optional fields are left empty,
//! not omitted. Every diagnostic carries the 1-based line number of the
//! offending row. Parsing streams row by row, so million-row score files
//! cost O(1) memory beyond the duplicate-id set.
//!
//! Canonical headers:
//!
//! - scores: `sample_id,label,score[,category][,first_seen]`
//! - manifests: `sample_id,label,first_seen,label_date,category,score`
//! - category stats: `category,class,n,detected[,rate]`
//!
//! Labels are `0` (benign) or `1` (malware); classes are `benign` or
//! `malware`; dates are `YYYY-MM-DD`. Writers always emit the full header
//! for their format, print floats in the shortest form that parses back to
//! the same value, and end every row with `\n`, so emitted files are
//! bit-reproducible and survive a parse round-trip unchanged.

use std::collections::HashSet;
use std::io;

use chrono::NaiveDate;
use serde::Deserialize;
use thiserror::Error;

use crate::binom::SampleSize;
use crate::category::{CategoryError, CategoryStats, WeightProfile};
use crate::roc::{Label, ScoredSample};
use crate::timedelay::{ManifestEntry, TimedelayError};

/// A malformed input file.
#[derive(Debug, Error)]
pub enum IngestError {
    /// The underlying reader failed or the delimited structure is broken.
    #[error(transparent)]
    Csv(#[from] csv::Error),
    /// The input had no header row at all.
    #[error("missing header row")]
    MissingHeader,
    /// The header row is not one of the accepted forms.
    #[error("bad header {found:?}; expected {expected}")]
    BadHeader {
        /// Header found in the input.
        found: String,
        /// Description of the accepted header(s).
        expected: &'static str,
    },
    /// A row with the wrong number of fields.
    #[error("line {line}: {found} fields, header has {expected}")]
    BadFieldCount {
        /// Line of the offending row.
        line: u64,
        /// Fields found.
        found: usize,
        /// Fields the header promised.
        expected: usize,
    },
    /// An empty required field.
    #[error("line {line}: {field} is empty")]
    EmptyField {
        /// Line of the offending row.
        line: u64,
        /// Field name.
        field: &'static str,
    },
    /// A label other than 0 or 1.
    #[error("line {line}: label {found:?} is not 0 or 1")]
    BadLabel {
        /// Line of the offending row.
        line: u64,
        /// Value found.
        found: String,
    },
    /// A class other than benign or malware.
    #[error("line {line}: class {found:?} is not benign or malware")]
    BadClass {
        /// Line of the offending row.
        line: u64,
        /// Value found.
        found: String,
    },
    /// A score that does not parse as a finite number.
    #[error("line {line}: score {found:?} is not a finite number")]
    BadScore {
        /// Line of the offending row.
        line: u64,
        /// Value found.
        found: String,
    },
    /// A count field that does not parse as the required integer.
    #[error("line {line}: {field} {found:?} is not a valid count")]
    BadCount {
        /// Line of the offending row.
        line: u64,
        /// Field name.
        field: &'static str,
        /// Value found.
        found: String,
    },
    /// A date not in YYYY-MM-DD form.
    #[error("line {line}: {field} {found:?} is not a YYYY-MM-DD date")]
    BadDate {
        /// Line of the offending row.
        line: u64,
        /// Field name.
        field: &'static str,
        /// Value found.
        found: String,
    },
    /// The same sample id appeared twice.
    #[error("line {line}: duplicate sample_id {sample_id:?}")]
    DuplicateId {
        /// Line of the second occurrence.
        line: u64,
        /// The repeated id.
        sample_id: String,
    },
    /// A row that parsed but violates a manifest invariant.
    #[error("line {line}: {source}")]
    Manifest {
        /// Line of the offending row.
        line: u64,
        /// The violated invariant.
        source: TimedelayError,
    },
    /// A row that parsed but violates a category-stats invariant.
    #[error("line {line}: {source}")]
    Stats {
        /// Line of the offending row.
        line: u64,
        /// The violated invariant.
        source: CategoryError,
    },
    /// The profile document does not parse.
    #[error("profile: {source}")]
    Profile {
        /// Parser diagnostic, with its own position info.
        #[source]
        source: toml::de::Error,
    },
    /// The profile parsed but its weights are invalid.
    #[error("profile: {source}")]
    ProfileWeights {
        /// The violated invariant, naming the offending sum or weight.
        source: CategoryError,
    },
    /// Writing failed.
    #[error(transparent)]
    Io(#[from] io::Error),
}

const MANIFEST_HEADER: [&str; 6] = [
    "sample_id",
    "label",
    "first_seen",
    "label_date",
    "category",
    "score",
];

fn reader<R: io::Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input)
}

/// Line number of a record, for diagnostics.
fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn check_width(record: &csv::StringRecord, expected: usize) -> Result<(), IngestError> {
    if record.len() != expected {
        return Err(IngestError::BadFieldCount {
            line: line_of(record),
            found: record.len(),
            expected,
        });
    }
    Ok(())
}

fn field_label(record: &csv::StringRecord, idx: usize) -> Result<Label, IngestError> {
    let raw = &record[idx];
    raw.parse::<u8>()
        .ok()
        .and_then(Label::from_bit)
        .ok_or_else(|| IngestError::BadLabel {
            line: line_of(record),
            found: raw.to_owned(),
        })
}

fn field_score(record: &csv::StringRecord, idx: usize) -> Result<f64, IngestError> {
    let raw = &record[idx];
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(IngestError::BadScore {
            line: line_of(record),
            found: raw.to_owned(),
        }),
    }
}

fn field_date(
    record: &csv::StringRecord,
    idx: usize,
    field: &'static str,
) -> Result<NaiveDate, IngestError> {
    let raw = &record[idx];
    NaiveDate::parse_from_str(raw, "%Y-%m-%d").map_err(|_| IngestError::BadDate {
        line: line_of(record),
        field,
        found: raw.to_owned(),
    })
}

fn field_id(
    record: &csv::StringRecord,
    idx: usize,
    seen: &mut HashSet<String>,
) -> Result<String, IngestError> {
    let raw = &record[idx];
    if raw.is_empty() {
        return Err(IngestError::EmptyField {
            line: line_of(record),
            field: "sample_id",
        });
    }
    if !seen.insert(raw.to_owned()) {
        return Err(IngestError::DuplicateId {
            line: line_of(record),
            sample_id: raw.to_owned(),
        });
    }
    Ok(raw.to_owned())
}

/// Reads the header row, failing distinctly on empty input.
fn header(reader: &mut csv::Reader<impl io::Read>) -> Result<Vec<String>, IngestError> {
    let record = reader.headers()?.clone();
    if record.len() == 0 || (record.len() == 1 && record[0].is_empty()) {
        return Err(IngestError::MissingHeader);
    }
    Ok(record.iter().map(str::to_owned).collect())
}

/// Parses a scores file: header `sample_id,label,score[,category][,first_seen]`.
///
/// Labels must be 0 or 1, scores finite, dates YYYY-MM-DD, and sample ids
/// unique; each violation is reported with its line number.
pub fn parse_scores<R: io::Read>(input: R) -> Result<Vec<ScoredSample>, IngestError> {
    let mut rdr = reader(input);
    let head = header(&mut rdr)?;
    let head_strs: Vec<&str> = head.iter().map(String::as_str).collect();
    let (has_category, has_first_seen) = match &head_strs[..] {
        ["sample_id", "label", "score"] => (false, false),
        ["sample_id", "label", "score", "category"] => (true, false),
        ["sample_id", "label", "score", "first_seen"] => (false, true),
        ["sample_id", "label", "score", "category", "first_seen"] => (true, true),
        _ => {
            return Err(IngestError::BadHeader {
                found: head.join(","),
                expected: "sample_id,label,score[,category][,first_seen]",
            })
        }
    };
    let width = head.len();

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        check_width(&record, width)?;
        let sample_id = field_id(&record, 0, &mut seen)?;
        let label = field_label(&record, 1)?;
        let score = field_score(&record, 2)?;
        let mut sample = ScoredSample::new(sample_id, label, score)
            .unwrap_or_else(|_| unreachable!("score checked finite"));
        let mut idx = 3;
        if has_category {
            if !record[idx].is_empty() {
                sample = sample.with_category(&record[idx]);
            }
            idx += 1;
        }
        if has_first_seen && !record[idx].is_empty() {
            sample = sample.with_first_seen(field_date(&record, idx, "first_seen")?);
        }
        out.push(sample);
    }
    Ok(out)
}

/// Writes samples in the full canonical scores format
/// (`sample_id,label,score,category,first_seen`), empty fields for absent
/// optionals.
pub fn write_scores<W: io::Write>(samples: &[ScoredSample], out: W) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["sample_id", "label", "score", "category", "first_seen"])?;
    for s in samples {
        let label = s.label().as_bit().to_string();
        let score = s.score().to_string();
        let first_seen = s.first_seen().map(|d| d.to_string()).unwrap_or_default();
        wtr.write_record([
            s.sample_id(),
            label.as_str(),
            score.as_str(),
            s.category().unwrap_or(""),
            first_seen.as_str(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Parses a manifest file: header
/// `sample_id,label,first_seen,label_date,category,score`, with the last
/// three columns optional per row (left empty when absent).
pub fn parse_manifest<R: io::Read>(input: R) -> Result<Vec<ManifestEntry>, IngestError> {
    let mut rdr = reader(input);
    let head = header(&mut rdr)?;
    if head != MANIFEST_HEADER {
        return Err(IngestError::BadHeader {
            found: head.join(","),
            expected: "sample_id,label,first_seen,label_date,category,score",
        });
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        check_width(&record, MANIFEST_HEADER.len())?;
        let line = line_of(&record);
        let sample_id = field_id(&record, 0, &mut seen)?;
        let label = field_label(&record, 1)?;
        let first_seen = field_date(&record, 2, "first_seen")?;
        let mut entry = ManifestEntry::new(sample_id, first_seen, label);
        if !record[3].is_empty() {
            let label_date = field_date(&record, 3, "label_date")?;
            entry = entry
                .with_label_date(label_date)
                .map_err(|source| IngestError::Manifest { line, source })?;
        }
        if !record[4].is_empty() {
            entry = entry.with_category(&record[4]);
        }
        if !record[5].is_empty() {
            let score = field_score(&record, 5)?;
            entry = entry
                .with_score(score)
                .unwrap_or_else(|_| unreachable!("score checked finite"));
        }
        out.push(entry);
    }
    Ok(out)
}

/// Writes manifest entries in the canonical manifest format.
pub fn write_manifest<W: io::Write>(entries: &[ManifestEntry], out: W) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(MANIFEST_HEADER)?;
    for e in entries {
        let label = e.label().as_bit().to_string();
        let first_seen = e.first_seen().to_string();
        let label_date = e.label_date().map(|d| d.to_string()).unwrap_or_default();
        let score = e.score().map(|s| s.to_string()).unwrap_or_default();
        wtr.write_record([
            e.sample_id(),
            label.as_str(),
            first_seen.as_str(),
            label_date.as_str(),
            e.category().unwrap_or(""),
            score.as_str(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Parses a category-stats file: header `category,class,n,detected[,rate]`.
///
/// When the rate column is present it must equal detected/n within 1e-12;
/// carrying the redundant column catches transcription slips in files
/// assembled by hand.
pub fn parse_category_stats<R: io::Read>(input: R) -> Result<Vec<CategoryStats>, IngestError> {
    let mut rdr = reader(input);
    let head = header(&mut rdr)?;
    let head_strs: Vec<&str> = head.iter().map(String::as_str).collect();
    let has_rate = match &head_strs[..] {
        ["category", "class", "n", "detected"] => false,
        ["category", "class", "n", "detected", "rate"] => true,
        _ => {
            return Err(IngestError::BadHeader {
                found: head.join(","),
                expected: "category,class,n,detected[,rate]",
            })
        }
    };
    let width = head.len();

    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        check_width(&record, width)?;
        let line = line_of(&record);
        if record[0].is_empty() {
            return Err(IngestError::EmptyField {
                line,
                field: "category",
            });
        }
        let class = match &record[1] {
            "benign" => Label::Benign,
            "malware" => Label::Malware,
            other => {
                return Err(IngestError::BadClass {
                    line,
                    found: other.to_owned(),
                })
            }
        };
        let n = record[2]
            .parse::<u64>()
            .ok()
            .and_then(|v| SampleSize::new(v).ok())
            .ok_or_else(|| IngestError::BadCount {
                line,
                field: "n",
                found: record[2].to_owned(),
            })?;
        let detected = record[3]
            .parse::<u64>()
            .map_err(|_| IngestError::BadCount {
                line,
                field: "detected",
                found: record[3].to_owned(),
            })?;
        let stats = if has_rate {
            let rate = record[4].parse::<f64>().map_err(|_| IngestError::BadCount {
                line,
                field: "rate",
                found: record[4].to_owned(),
            })?;
            CategoryStats::with_reported_rate(&record[0], class, n, detected, rate)
        } else {
            CategoryStats::new(&record[0], class, n, detected)
        }
        .map_err(|source| IngestError::Stats { line, source })?;
        out.push(stats);
    }
    Ok(out)
}

/// Writes category stats in the full canonical format, rate included.
pub fn write_category_stats<W: io::Write>(
    stats: &[CategoryStats],
    out: W,
) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["category", "class", "n", "detected", "rate"])?;
    for s in stats {
        let class = match s.class() {
            Label::Benign => "benign",
            Label::Malware => "malware",
        };
        let n = s.n().to_string();
        let detected = s.detected().to_string();
        let rate = s.rate().value().to_string();
        wtr.write_record([s.category(), class, n.as_str(), detected.as_str(), rate.as_str()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// What to do with weight maps that do not sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightHandling {
    /// Reject them, reporting the sum found. The default everywhere:
    /// an unnormalized profile is usually a transcription error.
    RequireNormalized,
    /// Rescale each map to sum to 1 (the explicit opt-in behind a
    /// `--normalize` flag).
    Normalize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    name: String,
    #[serde(default)]
    benign_weights: std::collections::BTreeMap<String, f64>,
    #[serde(default)]
    malware_weights: std::collections::BTreeMap<String, f64>,
}

/// Parses a weight profile document:
///
/// ```toml
/// name = "enterprise"
///
/// [benign_weights]
/// common = 0.9
/// shareware = 0.1
///
/// [malware_weights]
/// commodity = 1.0
/// ```
///
/// Unknown keys are rejected. Weight maps must sum to 1 unless
/// [`WeightHandling::Normalize`] is chosen, in which case they are
/// rescaled; a map summing to 0 is invalid either way.
pub fn parse_profile<R: io::Read>(
    mut input: R,
    weights: WeightHandling,
) -> Result<WeightProfile, IngestError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let doc: ProfileDoc =
        toml::from_str(&text).map_err(|source| IngestError::Profile { source })?;
    let profile = WeightProfile {
        name: doc.name,
        benign_weights: doc.benign_weights,
        malware_weights: doc.malware_weights,
    };
    match weights {
        WeightHandling::RequireNormalized => {
            profile
                .validate()
                .map_err(|source| IngestError::ProfileWeights { source })?;
            Ok(profile)
        }
        WeightHandling::Normalize => profile
            .normalized()
            .map_err(|source| IngestError::ProfileWeights { source }),
    }
}

/// Serializes a profile to the document format [`parse_profile`] reads.
pub fn write_profile(profile: &WeightProfile) -> String {
    toml::to_string(profile).expect("profiles are plain maps of floats")
}
