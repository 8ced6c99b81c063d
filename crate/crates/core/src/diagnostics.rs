//! Process-wide warning counters.

use core::sync::atomic::{AtomicU64, Ordering};

static SINGLE_CLASS_BATCHES: AtomicU64 = AtomicU64::new(0);
static UNKNOWN_RESIDUES: AtomicU64 = AtomicU64::new(0);

/// Batches handed to a differentiable F1/MCC loss whose targets were all one
/// class. The loss stays finite through the epsilon guard but carries no
/// useful signal.
pub fn single_class_batches() -> u64 {
    SINGLE_CLASS_BATCHES.load(Ordering::Relaxed)
}

/// Residues outside the alphabet that were encoded as `X`.
pub fn unknown_residues() -> u64 {
    UNKNOWN_RESIDUES.load(Ordering::Relaxed)
}

pub(crate) fn note_single_class_batch() {
    SINGLE_CLASS_BATCHES.fetch_add(1, Ordering::Relaxed);
}

pub(crate) fn note_unknown_residues(n: u64) {
    if n > 0 {
        UNKNOWN_RESIDUES.fetch_add(n, Ordering::Relaxed);
    }
}
