//! Seeded synthetic site windows with a planted motif.
//!
//! Carriers have the motif right after the central S/T. Background residues
//! are drawn uniformly from the 20 standard amino acids and never spell the
//! motif at that offset by chance. Label noise swaps `round(noise·P)`
//! carriers to negative and the same number of non-carriers to positive, so
//! the positive count stays at `positives`.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::SiteRecord;
use crate::rng::seeded;
use crate::{Error, Result};

const STANDARD: &[u8; 20] = b"ACDEFGHIKLMNPQRSTVWY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub records: usize,
    pub positives: usize,
    /// Stored half-width; windows are `2w+1` long.
    pub window: usize,
    pub motif: [u8; 3],
    /// Fraction of carriers whose label is flipped, in `[0, 1)`.
    pub noise: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// 5,000 windows, 2.5% positive, 20% label noise.
    pub fn benchmark(seed: u64) -> Self {
        Self {
            records: 5000,
            positives: 125,
            window: 5,
            motif: *b"WHY",
            noise: 0.2,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.positives == 0 || self.positives >= self.records {
            return Err(Error::Config(alloc::format!(
                "need 0 < positives < records, got {} of {}",
                self.positives,
                self.records
            )));
        }
        if self.window < 2 {
            return Err(Error::Config(
                "window must be >= 2 to hold the motif".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(Error::Config("noise must lie in [0, 1)".into()));
        }
        if !self.motif.iter().all(|c| STANDARD.contains(c)) {
            return Err(Error::Config("motif must use standard residues".into()));
        }
        Ok(())
    }

    /// Flipped labels per class.
    pub fn flips(&self) -> usize {
        let f = libm::floor(self.noise * self.positives as f64 + 0.5) as usize;
        f.min(self.records - self.positives)
    }
}

/// Generates `spec.records` records in random order. `source_row` is the
/// record index.
pub fn generate(spec: &SynthSpec) -> Result<Vec<SiteRecord>> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let len = 2 * spec.window + 1;
    let c = spec.window;

    let mut carrier: Vec<bool> = (0..spec.records).map(|i| i < spec.positives).collect();
    carrier.shuffle(&mut rng);
    let mut carriers: Vec<usize> = (0..spec.records).filter(|&i| carrier[i]).collect();
    let mut others: Vec<usize> = (0..spec.records).filter(|&i| !carrier[i]).collect();
    carriers.shuffle(&mut rng);
    others.shuffle(&mut rng);
    let flips = spec.flips();
    let mut label = carrier.clone();
    for &i in &carriers[..flips] {
        label[i] = false;
    }
    for &i in &others[..flips] {
        label[i] = true;
    }

    let mut out = Vec::with_capacity(spec.records);
    for i in 0..spec.records {
        let mut seq: Vec<u8> = (0..len)
            .map(|_| STANDARD[rng.gen_range(0..STANDARD.len())])
            .collect();
        seq[c] = if rng.gen_bool(0.5) { b'S' } else { b'T' };
        if carrier[i] {
            seq[c + 1..c + 4].copy_from_slice(&spec.motif);
        } else {
            while seq[c + 1..c + 4] == spec.motif {
                seq[c + 1] = STANDARD[rng.gen_range(0..STANDARD.len())];
            }
        }
        let s = String::from_utf8(seq).expect("ASCII residues");
        out.push(SiteRecord::new(s, label[i], i)?);
    }
    Ok(out)
}
