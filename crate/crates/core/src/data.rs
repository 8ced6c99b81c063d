//! S/T site windows, one-hot encoding and stratified splitting.
//!
//! Windows are `2w+1` residues centered on a serine or threonine. Residues
//! beyond a protein terminus are written as `-`. The encoding alphabet is
//! fixed at 22 symbols: the 20 standard amino acids in alphabetical
//! one-letter order, then `X` (unknown) and `-` (terminus padding).

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, seeded};
use crate::{diagnostics, Error, Result};

/// Column order of the one-hot encoding.
pub const ALPHABET: &[u8; 22] = b"ACDEFGHIKLMNPQRSTVWYX-";
pub const ALPHABET_SIZE: usize = ALPHABET.len();
pub const UNKNOWN: u8 = b'X';
pub const PAD: u8 = b'-';

/// Window half-widths accepted by the model.
pub const WINDOW_SIZES: [usize; 4] = [5, 10, 15, 20];
/// Half-width of the windows stored in the dataset CSV.
pub const STORED_WINDOW: usize = 20;

const UNKNOWN_COLUMN: u8 = 20;

/// Alphabet column of a residue, or `None` when it is not in the alphabet.
/// Lowercase letters are accepted.
pub fn column_of(residue: u8) -> Option<u8> {
    let r = residue.to_ascii_uppercase();
    ALPHABET.iter().position(|&a| a == r).map(|c| c as u8)
}

pub fn is_site_residue(residue: u8) -> bool {
    matches!(residue.to_ascii_uppercase(), b'S' | b'T')
}

/// A labelled site window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteRecord {
    pub sequence: String,
    pub label: bool,
    pub source_row: usize,
}

impl SiteRecord {
    /// Validates odd length and an S/T center.
    pub fn new(sequence: String, label: bool, source_row: usize) -> Result<Self> {
        let bytes = sequence.as_bytes();
        if bytes.len().is_multiple_of(2) {
            return Err(Error::Sequence(alloc::format!(
                "window length {} is not odd",
                bytes.len()
            )));
        }
        if !is_site_residue(bytes[bytes.len() / 2]) {
            return Err(Error::Sequence(alloc::format!(
                "central residue `{}` is not S or T",
                bytes[bytes.len() / 2] as char
            )));
        }
        Ok(Self {
            sequence,
            label,
            source_row,
        })
    }

    /// Half-width `w` of this window.
    pub fn window(&self) -> usize {
        self.sequence.len() / 2
    }

    /// Center-crops to half-width `w`.
    pub fn cropped(&self, w: usize) -> Result<Self> {
        Ok(Self {
            sequence: center_crop(&self.sequence, w)?,
            label: self.label,
            source_row: self.source_row,
        })
    }
}

/// Center-crops an odd-length window to `2w+1` residues.
pub fn center_crop(sequence: &str, w: usize) -> Result<String> {
    let len = sequence.len();
    if len.is_multiple_of(2) || len < 2 * w + 1 {
        return Err(Error::Sequence(alloc::format!(
            "cannot crop a window of length {len} to half-width {w}"
        )));
    }
    let start = len / 2 - w;
    Ok(sequence[start..start + 2 * w + 1].into())
}

/// Window of half-width `w` around `protein[pos]`, padded with `-` past
/// either terminus.
pub fn window_around(protein: &[u8], pos: usize, w: usize) -> String {
    let mut out = String::with_capacity(2 * w + 1);
    for offset in 0..=2 * w {
        let idx = pos as isize + offset as isize - w as isize;
        let c = if idx < 0 || idx as usize >= protein.len() {
            PAD
        } else {
            protein[idx as usize].to_ascii_uppercase()
        };
        out.push(c as char);
    }
    out
}

/// Zero-based positions of every S/T residue.
pub fn site_positions(protein: &[u8]) -> Vec<usize> {
    protein
        .iter()
        .enumerate()
        .filter(|(_, &c)| is_site_residue(c))
        .map(|(i, _)| i)
        .collect()
}

/// One-hot window, stored compactly as one alphabet column per position.
/// Every row of [`EncodedWindow::matrix`] has exactly one `1.0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedWindow {
    columns: Vec<u8>,
    pub label: bool,
}

impl EncodedWindow {
    /// Builds from alphabet column indices. Panics on an index outside the
    /// alphabet.
    pub fn from_columns(columns: Vec<u8>, label: bool) -> Self {
        assert!(columns.iter().all(|&c| (c as usize) < ALPHABET_SIZE));
        Self { columns, label }
    }

    /// Number of rows (`2w+1`).
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn columns(&self) -> &[u8] {
        &self.columns
    }

    /// Dense `(2w+1) × 22` row-major one-hot matrix.
    pub fn matrix(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.columns.len() * ALPHABET_SIZE];
        for (row, &c) in self.columns.iter().enumerate() {
            m[row * ALPHABET_SIZE + c as usize] = 1.0;
        }
        m
    }

    /// Inverse of [`EncodedWindow::matrix`]; `None` unless every row is a
    /// valid one-hot vector.
    pub fn from_matrix(matrix: &[f64], label: bool) -> Option<Self> {
        if !matrix.len().is_multiple_of(ALPHABET_SIZE) {
            return None;
        }
        let mut columns = Vec::with_capacity(matrix.len() / ALPHABET_SIZE);
        for row in matrix.chunks(ALPHABET_SIZE) {
            let hot: Vec<usize> = row
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, _)| i)
                .collect();
            if hot.len() != 1 || row[hot[0]] != 1.0 {
                return None;
            }
            columns.push(hot[0] as u8);
        }
        Some(Self { columns, label })
    }
}

/// One-hot encodes a window string. Characters outside the alphabet map to
/// the `X` column and bump [`diagnostics::unknown_residues`].
pub fn encode_sequence(sequence: &str, label: bool) -> EncodedWindow {
    let mut unknown = 0u64;
    let columns = sequence
        .bytes()
        .map(|b| {
            column_of(b).unwrap_or_else(|| {
                unknown += 1;
                UNKNOWN_COLUMN
            })
        })
        .collect();
    diagnostics::note_unknown_residues(unknown);
    EncodedWindow { columns, label }
}

pub fn encode(record: &SiteRecord) -> EncodedWindow {
    encode_sequence(&record.sequence, record.label)
}

pub fn decode(window: &EncodedWindow) -> String {
    window
        .columns
        .iter()
        .map(|&c| ALPHABET[c as usize] as char)
        .collect()
}

/// Train/test partition with five cross-validation folds over the training
/// indices. Index lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl DatasetSplit {
    /// Training indices of CV fold `k` (all folds except `k`).
    pub fn fold_train(&self, k: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }
}

pub const FOLDS: usize = 5;
pub const TEST_FRACTION: f64 = 0.2;
const MIN_RECORDS: usize = 10;

fn check_splittable(labels: &[bool]) -> Result<()> {
    if labels.len() < MIN_RECORDS {
        return Err(Error::TooSmall {
            needed: MIN_RECORDS,
            got: labels.len(),
        });
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass {
            positives,
            negatives,
        });
    }
    Ok(())
}

/// Shuffled index lists per class, positives first.
fn shuffled_by_class(labels: &[bool], seed: u64) -> [Vec<usize>; 2] {
    let mut rng = seeded(seed);
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    [pos, neg]
}

/// Deals `classes` round-robin into `k` parts, continuing the dealer position
/// across classes so part sizes differ by at most one.
fn deal(classes: &[Vec<usize>], k: usize) -> Vec<Vec<usize>> {
    let mut parts = vec![Vec::new(); k];
    let mut next = 0;
    for class in classes {
        for &idx in class {
            parts[next].push(idx);
            next = (next + 1) % k;
        }
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    parts
}

fn round_half_up(x: f64) -> usize {
    libm::floor(x + 0.5) as usize
}

/// Stratified 80/20 split plus five stratified folds over the 80%.
pub fn make_split(labels: &[bool], seed: u64) -> Result<DatasetSplit> {
    check_splittable(labels)?;
    let classes = shuffled_by_class(labels, seed);
    let mut test = Vec::new();
    let mut rest = Vec::with_capacity(2);
    for class in &classes {
        let n_test = round_half_up(class.len() as f64 * TEST_FRACTION);
        test.extend_from_slice(&class[..n_test]);
        rest.push(class[n_test..].to_vec());
    }
    test.sort_unstable();
    let folds = deal(&rest, FOLDS);
    let mut train: Vec<usize> = rest.concat();
    train.sort_unstable();
    Ok(DatasetSplit {
        train,
        test,
        folds,
        seed,
    })
}

/// Five outer splits whose test sets partition the data; each carries a
/// fresh stratified 5-fold partition of its own training set.
pub fn make_nested_splits(labels: &[bool], seed: u64) -> Result<Vec<DatasetSplit>> {
    check_splittable(labels)?;
    let outer = deal(&shuffled_by_class(labels, seed), FOLDS);
    let mut splits = Vec::with_capacity(FOLDS);
    for k in 0..FOLDS {
        let test = outer[k].clone();
        let mut train: Vec<usize> = outer
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .flat_map(|(_, p)| p.iter().copied())
            .collect();
        train.sort_unstable();
        let inner_seed = derive_seed(seed, k as u64 + 1);
        let sub_labels: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
        let local = shuffled_by_class(&sub_labels, inner_seed);
        let mapped: Vec<Vec<usize>> = local
            .iter()
            .map(|c| c.iter().map(|&j| train[j]).collect())
            .collect();
        let folds = deal(&mapped, FOLDS);
        splits.push(DatasetSplit {
            train,
            test,
            folds,
            seed: inner_seed,
        });
    }
    Ok(splits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn labels(n: usize, positives: usize) -> Vec<bool> {
        (0..n).map(|i| i < positives).collect()
    }

    #[test]
    fn alphabet_is_22_distinct_symbols() {
        let mut seen = ALPHABET.to_vec();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 22);
        assert_eq!(column_of(b'X'), Some(UNKNOWN_COLUMN));
        assert_eq!(column_of(b'-'), Some(21));
        assert_eq!(column_of(b's'), column_of(b'S'));
    }

    #[test]
    fn record_validation() {
        assert!(SiteRecord::new("AASAA".into(), true, 0).is_ok());
        assert!(SiteRecord::new("AAAA".into(), true, 0).is_err());
        assert!(SiteRecord::new("AAKAA".into(), false, 0).is_err());
    }

    #[test]
    fn all_alanine_window_with_central_serine() {
        let e = encode_sequence("AAAAASAAAAA", false);
        let m = e.matrix();
        let a = column_of(b'A').unwrap() as usize;
        let s = column_of(b'S').unwrap() as usize;
        for row in 0..11 {
            let r = &m[row * ALPHABET_SIZE..(row + 1) * ALPHABET_SIZE];
            assert_eq!(r.iter().sum::<f64>(), 1.0);
            let hot = if row == 5 { s } else { a };
            assert_eq!(r[hot], 1.0);
        }
    }

    #[test]
    fn padding_row_is_one_hot_in_padding_column() {
        let e = encode_sequence("-", false);
        let m = e.matrix();
        assert_eq!(m[21], 1.0);
        assert_eq!(m.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn unknown_residue_maps_to_x() {
        let before = diagnostics::unknown_residues();
        let e = encode_sequence("ABS", true);
        assert_eq!(decode(&e), "AXS");
        assert!(diagnostics::unknown_residues() > before);
    }

    #[test]
    fn decode_encode_round_trip_1000_sequences() {
        let mut rng = seeded(11);
        for _ in 0..1000 {
            let s: String = (0..11)
                .map(|_| ALPHABET[rng.gen_range(0..ALPHABET_SIZE)] as char)
                .collect();
            let e = encode_sequence(&s, false);
            assert_eq!(decode(&e), s);
            let back = EncodedWindow::from_matrix(&e.matrix(), false).unwrap();
            assert_eq!(back, e);
        }
    }

    #[test]
    fn from_matrix_rejects_invalid_rows() {
        let mut m = vec![0.0; ALPHABET_SIZE];
        assert!(EncodedWindow::from_matrix(&m, false).is_none());
        m[0] = 1.0;
        m[1] = 1.0;
        assert!(EncodedWindow::from_matrix(&m, false).is_none());
        m[1] = 0.0;
        assert!(EncodedWindow::from_matrix(&m, false).is_some());
    }

    #[test]
    fn n_terminal_site_is_left_padded() {
        let protein = b"MKSAAAAAAAAA";
        let w = window_around(protein, 2, 5);
        assert_eq!(w, "---MKSAAAAA");
        assert_eq!(w.len(), 11);
        let c_term = window_around(b"AAT", 2, 2);
        assert_eq!(c_term, "AAT--");
    }

    #[test]
    fn site_positions_finds_s_and_t() {
        assert_eq!(site_positions(b"MSKTAs"), vec![1, 3, 5]);
        assert!(site_positions(b"MKA").is_empty());
    }

    #[test]
    fn center_crop_keeps_the_middle() {
        assert_eq!(center_crop("ABCDSEFGH", 1).unwrap(), "DSE");
        assert!(center_crop("ABS", 2).is_err());
        assert!(center_crop("ABSD", 1).is_err());
    }

    #[test]
    fn split_stratification_arithmetic() {
        let split = make_split(&labels(100, 10), 0).unwrap();
        let pos_in_test = split.test.iter().filter(|&&i| i < 10).count();
        assert_eq!(split.test.len(), 20);
        assert_eq!(pos_in_test, 2);
        assert_eq!(split.folds.len(), 5);
    }

    #[test]
    fn split_is_deterministic() {
        let l = labels(200, 17);
        assert_eq!(make_split(&l, 3).unwrap(), make_split(&l, 3).unwrap());
        assert_ne!(make_split(&l, 3).unwrap(), make_split(&l, 4).unwrap());
    }

    #[test]
    fn split_errors() {
        assert!(matches!(
            make_split(&labels(9, 3), 0),
            Err(Error::TooSmall { .. })
        ));
        assert!(matches!(
            make_split(&labels(50, 0), 0),
            Err(Error::SingleClass { .. })
        ));
    }

    #[test]
    fn nested_outer_tests_partition_everything() {
        let l = labels(103, 12);
        let splits = make_nested_splits(&l, 1).unwrap();
        assert_eq!(splits.len(), 5);
        let mut all: Vec<usize> = splits.iter().flat_map(|s| s.test.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..103).collect::<Vec<_>>());
        for s in &splits {
            let expected = 0.8 * 103.0;
            assert!((s.train.len() as f64 - expected).abs() <= 1.0);
        }
        assert_eq!(splits, make_nested_splits(&l, 1).unwrap());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn splits_are_disjoint_and_folds_partition_train(
                n in 10usize..400,
                frac in 0.02f64..0.5,
                seed in 0u64..1000,
            ) {
                let positives = ((n as f64 * frac) as usize).max(1).min(n - 1);
                let l = labels(n, positives);
                let s = make_split(&l, seed).unwrap();
                prop_assert!(s.train.iter().all(|i| s.test.binary_search(i).is_err()));
                prop_assert_eq!(s.train.len() + s.test.len(), n);
                let expected = n as f64 * TEST_FRACTION;
                prop_assert!((s.test.len() as f64 - expected).abs() <= 1.0 + 1e-9);
                let mut folded: Vec<usize> = s.folds.concat();
                folded.sort_unstable();
                prop_assert_eq!(&folded, &s.train);

                for outer in make_nested_splits(&l, seed).unwrap() {
                    prop_assert!(outer.train.iter().all(|i| outer.test.binary_search(i).is_err()));
                    let mut f: Vec<usize> = outer.folds.concat();
                    f.sort_unstable();
                    prop_assert_eq!(&f, &outer.train);
                }
            }
        }
    }
}
