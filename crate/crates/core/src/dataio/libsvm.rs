//! The libsvm / svmlight text format: `label idx:val idx:val ...` with
//! 1-based, strictly increasing feature indices.

use std::io::{BufRead, Write};

use crate::dataio::matrix::{CsrMatrix, Features};
use crate::dataio::{Dataset, ParseError};
use crate::error::{Error, Result};

/// Whitespace-separated tokens with their 1-based character column.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = line;
    let mut offset = 0;
    std::iter::from_fn(move || {
        let start = rest.find(|c: char| !c.is_whitespace())?;
        let tail = &rest[start..];
        let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
        let token = &tail[..len];
        let column = line[..offset + start].chars().count() + 1;
        offset += start + len;
        rest = &tail[len..];
        Some((column, token))
    })
}

/// Parses a libsvm stream into a sparse [`Dataset`]. The feature count is the
/// largest index seen unless `n_features` is given, which lets train and test
/// files with different largest indices share one column space.
pub fn parse_libsvm<R: BufRead>(reader: R, n_features: Option<usize>) -> Result<Dataset> {
    let mut targets = Vec::new();
    let mut indptr = vec![0];
    let mut indices = Vec::new();
    let mut values = Vec::new();
    let mut max_index = 0;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let mut toks = tokens(content);
        let Some((col, label)) = toks.next() else {
            continue;
        };
        let label: f64 = label
            .parse()
            .map_err(|_| ParseError::new(lineno, col, format!("invalid label {label:?}")))?;
        if !label.is_finite() {
            return Err(ParseError::new(lineno, col, "label must be finite").into());
        }
        targets.push(label);

        let mut prev: Option<usize> = None;
        for (col, tok) in toks {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| ParseError::new(lineno, col, format!("expected idx:val, found {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| ParseError::new(lineno, col, format!("invalid feature index {idx:?}")))?;
            if idx < 1 {
                return Err(ParseError::new(lineno, col, "feature indices are 1-based").into());
            }
            if prev.is_some_and(|p| idx <= p) {
                return Err(ParseError::new(lineno, col, format!("feature index {idx} is not ascending")).into());
            }
            let val: f64 = val
                .parse()
                .map_err(|_| ParseError::new(lineno, col, format!("invalid feature value {val:?}")))?;
            if !val.is_finite() {
                return Err(ParseError::new(lineno, col, "feature value must be finite").into());
            }
            prev = Some(idx);
            max_index = max_index.max(idx);
            indices.push(idx - 1);
            values.push(val);
        }
        indptr.push(indices.len());
    }

    let cols = match n_features {
        Some(p) if p < max_index => {
            return Err(Error::InvalidConfig(format!(
                "feature count {p} is below the largest index {max_index} in the file"
            )))
        }
        Some(p) => p,
        None => max_index,
    };
    let features = Features::Sparse(CsrMatrix::new(cols, indptr, indices, values)?);
    Dataset::new(features, targets)
}

/// Writes `dataset` in canonical libsvm form. Dense rows emit their non-zero
/// entries only; sparse rows emit every stored entry.
pub fn write_libsvm<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    for (i, label) in dataset.targets.iter().enumerate() {
        write!(out, "{label}")?;
        let sparse = dataset.features.is_sparse();
        let mut err = Ok(());
        dataset.features.for_each_in_row(i, |j, v| {
            if err.is_ok() && (sparse || v != 0.0) {
                err = write!(out, " {}:{v}", j + 1);
            }
        });
        err?;
        writeln!(out)?;
    }
    Ok(())
}
