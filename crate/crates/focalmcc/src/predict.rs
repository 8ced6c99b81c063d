//! Per-site prediction for raw sequences and CSV batches.
//!
//! A sequence of exactly `2w+1` residues with S/T at its center is taken as a
//! pre-cut window. Any other sequence is scanned and one window is cut around
//! every S/T, padded with `-` past the termini.

use std::path::Path;

use focalmcc_core::data::{encode_sequence, is_site_residue, site_positions, window_around};

use crate::error::{IoError, Result};
use crate::model_file::StoredModel;

pub const OUTPUT_HEADER: [&str; 6] = [
    "sequence",
    "position",
    "window",
    "probability",
    "label",
    "error",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SitePrediction {
    /// 1-based position of the site in the input sequence.
    pub position: usize,
    pub window: String,
    pub probability: f64,
    pub label: bool,
}

/// Windows to score for `sequence`, with 1-based positions. Empty when the
/// sequence has no S/T.
pub fn site_windows(sequence: &str, w: usize) -> Vec<(usize, String)> {
    let seq = sequence.trim().to_ascii_uppercase();
    let bytes = seq.as_bytes();
    if bytes.len() == 2 * w + 1 && is_site_residue(bytes[w]) {
        return vec![(w + 1, seq)];
    }
    site_positions(bytes)
        .into_iter()
        .map(|p| (p + 1, window_around(bytes, p, w)))
        .collect()
}

/// Scores every site of `sequence`.
pub fn predict_sequence(
    model: &StoredModel,
    sequence: &str,
    threshold: f64,
    batch_size: usize,
) -> Result<Vec<SitePrediction>> {
    let sites = site_windows(sequence, model.window());
    let encoded: Vec<_> = sites
        .iter()
        .map(|(_, s)| encode_sequence(s, false))
        .collect();
    let probs = model.params.predict(&encoded, batch_size)?;
    Ok(sites
        .into_iter()
        .zip(probs)
        .map(|((position, window), probability)| SitePrediction {
            position,
            window,
            probability,
            label: probability >= threshold,
        })
        .collect())
}

/// Reads a header-plus-one-column CSV of sequences and writes one output
/// row per site. Rows without a site get an error entry and processing
/// continues. Returns `(input rows, output rows, error rows)`.
pub fn predict_csv(
    model: &StoredModel,
    input: &Path,
    output: &Path,
    threshold: f64,
    batch_size: usize,
) -> Result<(usize, usize, usize)> {
    let file = std::fs::File::open(input).map_err(|source| IoError::Read {
        path: input.to_path_buf(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let mut sequences = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| IoError::Row {
            path: input.to_path_buf(),
            row: i + 2,
            message: e.to_string(),
        })?;
        sequences.push(rec.get(0).unwrap_or("").to_string());
    }

    let mut buf = Vec::new();
    let mut written = 0;
    let mut errors = 0;
    {
        let mut wtr = csv::Writer::from_writer(&mut buf);
        let werr = |e: csv::Error| IoError::Format {
            path: output.to_path_buf(),
            message: e.to_string(),
        };
        wtr.write_record(OUTPUT_HEADER).map_err(werr)?;
        for seq in &sequences {
            let preds = predict_sequence(model, seq, threshold, batch_size)?;
            if preds.is_empty() {
                wtr.write_record([seq.as_str(), "", "", "", "", "no S/T site in sequence"])
                    .map_err(werr)?;
                written += 1;
                errors += 1;
                continue;
            }
            for p in preds {
                wtr.write_record([
                    seq.as_str(),
                    &p.position.to_string(),
                    &p.window,
                    &p.probability.to_string(),
                    if p.label { "1" } else { "0" },
                    "",
                ])
                .map_err(werr)?;
                written += 1;
            }
        }
        wtr.flush().map_err(|source| IoError::Write {
            path: output.to_path_buf(),
            source,
        })?;
    }
    crate::write_file(output, &buf)?;
    Ok((sequences.len(), written, errors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pre_cut_window_is_a_single_site() {
        let s = site_windows("aastaaa", 3);
        assert_eq!(s, vec![(4, "AASTAAA".to_string())]);
    }

    #[test]
    fn full_sequence_yields_every_site_padded() {
        let s = site_windows("MSKT", 2);
        assert_eq!(s, vec![(2, "-MSKT".to_string()), (4, "SKT--".to_string())]);
        assert!(site_windows("MKLV", 2).is_empty());
    }
}
