//! Site-window CSV loading.
//!
//! The file has a header row and the columns `sequence,label`. `sequence` is
//! an odd-length window centered on the site; `label` is `0` or `1`. Windows
//! wider than the requested half-width are center-cropped, narrower ones are
//! padded with `-` on both sides.

use std::fmt;
use std::path::Path;

use focalmcc_core::data::{is_site_residue, SiteRecord, PAD};
use serde::Serialize;

use crate::error::{IoError, Result};

/// Record counts after loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Census {
    pub records: usize,
    pub positives: usize,
    pub negatives: usize,
    /// Rows dropped because the central residue is not S or T.
    pub rejected: usize,
}

impl Census {
    pub fn of(records: &[SiteRecord], rejected: usize) -> Self {
        let positives = records.iter().filter(|r| r.label).count();
        Self {
            records: records.len(),
            positives,
            negatives: records.len() - positives,
            rejected,
        }
    }

    /// Positive fraction in `[0, 1]`.
    pub fn base_rate(&self) -> f64 {
        if self.records == 0 {
            0.0
        } else {
            self.positives as f64 / self.records as f64
        }
    }
}

impl fmt::Display for Census {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} records, {} positive ({:.2}%), {} negative, {} rejected",
            self.records,
            self.positives,
            100.0 * self.base_rate(),
            self.negatives,
            self.rejected
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub records: Vec<SiteRecord>,
    /// File line numbers of rejected rows.
    pub rejected_lines: Vec<usize>,
    pub census: Census,
}

/// Crops or pads an odd-length window to `2w+1` residues.
pub fn fit_window(sequence: &str, w: usize) -> Option<String> {
    let len = sequence.len();
    if len.is_multiple_of(2) || !sequence.is_ascii() {
        return None;
    }
    let want = 2 * w + 1;
    let upper = sequence.to_ascii_uppercase();
    if len >= want {
        let start = len / 2 - w;
        Some(upper[start..start + want].to_string())
    } else {
        let pad = (want - len) / 2;
        let p = (PAD as char).to_string().repeat(pad);
        Some(format!("{p}{upper}{p}"))
    }
}

fn parse_label(s: &str) -> Option<bool> {
    match s.trim() {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    }
}

/// Loads `path` at half-width `w`.
pub fn load_dataset(path: &Path, w: usize) -> Result<Loaded> {
    let file = std::fs::File::open(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    load_from_reader(file, path, w)
}

/// As [`load_dataset`], reading from any source; `path` is used in errors.
pub fn load_from_reader<R: std::io::Read>(reader: R, path: &Path, w: usize) -> Result<Loaded> {
    let row_err = |row: usize, message: String| IoError::Row {
        path: path.to_path_buf(),
        row,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| row_err(1, format!("unreadable header: {e}")))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(seq_col), Some(label_col)) = (col("sequence"), col("label")) else {
        return Err(IoError::Format {
            path: path.to_path_buf(),
            message: format!("header must contain `sequence` and `label`, found {headers:?}"),
        });
    };

    let mut records = Vec::new();
    let mut rejected_lines = Vec::new();
    for (data_row, rec) in rdr.records().enumerate() {
        let line = data_row + 2;
        let rec = rec.map_err(|e| row_err(line, e.to_string()))?;
        let seq = rec
            .get(seq_col)
            .ok_or_else(|| row_err(line, "missing `sequence` field".into()))?;
        let label = rec
            .get(label_col)
            .and_then(parse_label)
            .ok_or_else(|| row_err(line, "label must be 0 or 1".into()))?;
        if seq.is_empty() {
            return Err(row_err(line, "empty sequence".into()));
        }
        let window = fit_window(seq, w).ok_or_else(|| {
            row_err(
                line,
                format!(
                    "sequence of length {} is not an odd-length ASCII window",
                    seq.len()
                ),
            )
        })?;
        if !is_site_residue(window.as_bytes()[w]) {
            rejected_lines.push(line);
            continue;
        }
        records.push(SiteRecord::new(window, label, data_row)?);
    }
    let census = Census::of(&records, rejected_lines.len());
    Ok(Loaded {
        records,
        rejected_lines,
        census,
    })
}

/// Writes records as a `sequence,label` CSV.
pub fn write_dataset(path: &Path, records: &[SiteRecord]) -> Result<()> {
    let mut out = String::from("sequence,label\n");
    for r in records {
        out.push_str(&r.sequence);
        out.push_str(if r.label { ",1\n" } else { ",0\n" });
    }
    crate::write_file(path, out.as_bytes())
}
