//! Datasets: feature matrices, parsers, synthetic generators and splits.

mod csv_format;
mod dataset;
mod libsvm;
mod matrix;
mod split;
mod synth;

pub use csv_format::{parse_csv, standardize, Standardization, VARIANCE_FLOOR};
pub use dataset::Dataset;
pub use libsvm::{parse_libsvm, write_libsvm};
pub use matrix::{CsrMatrix, DenseMatrix, Features};
pub use split::{split_three, ThreeWaySplit};
pub use synth::{regression_weights, synth_classification, synth_multiclass, synth_regression};

use thiserror::Error;

/// Malformed input. `line` and `column` are 1-based; `column` is 0 when the
/// problem concerns the whole line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub reason: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, column: usize, reason: impl Into<String>) -> Self {
        Self {
            line,
            column,
            reason: reason.into(),
        }
    }
}
