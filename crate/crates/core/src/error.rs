use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{op}: dimension mismatch between {left:?} and {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("{op}: value {value} outside the operator domain")]
    Domain { op: &'static str, value: f64 },

    #[error("{op}: range {start}..{end} out of bounds for axis of length {len}")]
    Bounds {
        op: &'static str,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("backward root must be a scalar, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),

    #[error("backward already ran on this tape; reset it first")]
    BackwardTwice,

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "dataset has {positives} positives and {negatives} negatives; both classes are required"
    )]
    SingleClass { positives: usize, negatives: usize },

    #[error("need at least {needed} records to split, got {got}")]
    TooSmall { needed: usize, got: usize },

    #[error("non-finite gradient in parameter `{param}` at epoch {epoch}")]
    NonFinite { param: String, epoch: usize },

    #[error("invalid sequence: {0}")]
    Sequence(String),

    #[error("every grid combination was pruned")]
    EmptyGrid,
}
