use std::io::Read;

use crate::dataio::matrix::{DenseMatrix, Features};
use crate::dataio::{Dataset, ParseError};
use crate::error::{Error, Result};

/// Columns whose train variance falls below this are mapped to zero.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Reads a rectangular numeric CSV into a dense [`Dataset`], taking
/// `target_column` (0-based) as the targets. A first row containing any
/// non-numeric cell is treated as a header.
pub fn parse_csv<R: Read>(reader: R, target_column: usize) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, record) in rdr.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| ParseError::new(line, 0, e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, usize>> = record
            .iter()
            .enumerate()
            .map(|(j, cell)| cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or(j + 1))
            .collect();
        if i == 0 && parsed.iter().any(|c| c.is_err()) {
            width = Some(record.len());
            continue;
        }
        match width {
            Some(w) if w != record.len() => {
                return Err(ParseError::new(line, 0, format!("expected {w} fields, found {}", record.len())).into())
            }
            _ => width = Some(record.len()),
        }
        let row = parsed
            .into_iter()
            .map(|c| c.map_err(|col| ParseError::new(line, col, "non-numeric cell")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        rows.push(row);
    }

    let width = width.unwrap_or(0);
    if target_column >= width {
        return Err(Error::InvalidConfig(format!(
            "target column {target_column} out of range for {width} columns"
        )));
    }
    let mut targets = Vec::with_capacity(rows.len());
    let features: Vec<Vec<f64>> = rows
        .into_iter()
        .map(|mut row| {
            targets.push(row.remove(target_column));
            row
        })
        .collect();
    let features = Features::Dense(DenseMatrix::from_rows(&features, width - 1)?);
    Dataset::new(features, targets)
}

/// Per-column affine map fitted on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub mean: Vec<f64>,
    /// Standard deviation; `None` marks a degenerate column mapped to zero.
    pub std: Vec<Option<f64>>,
}

impl Standardization {
    /// Fits on the rows `train_rows` of a dense dataset.
    pub fn fit(dataset: &Dataset, train_rows: &[usize]) -> Result<Self> {
        let Features::Dense(m) = &dataset.features else {
            return Err(Error::InvalidConfig("standardization applies to dense features only".into()));
        };
        if train_rows.is_empty() {
            return Err(Error::InvalidConfig("standardization needs at least one training row".into()));
        }
        let p = dataset.feature_count();
        let n = train_rows.len() as f64;
        let mut mean = vec![0.0; p];
        for &i in train_rows {
            crate::linalg::axpy(1.0 / n, m.row(i), &mut mean);
        }
        let mut var = vec![0.0; p];
        for &i in train_rows {
            for ((v, x), mu) in var.iter_mut().zip(m.row(i)).zip(&mean) {
                *v += (x - mu) * (x - mu) / n;
            }
        }
        let std = var
            .into_iter()
            .map(|v| (v >= VARIANCE_FLOOR).then(|| v.sqrt()))
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        let Features::Dense(m) = &dataset.features else {
            return Err(Error::InvalidConfig("standardization applies to dense features only".into()));
        };
        Error::check_dim("standardization columns", self.mean.len(), dataset.feature_count())?;
        let mut out = m.clone();
        for i in 0..dataset.n_samples() {
            for ((x, mu), sd) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.std) {
                *x = match sd {
                    Some(sd) => (*x - mu) / sd,
                    None => 0.0,
                };
            }
        }
        Dataset::new(Features::Dense(out), dataset.targets.clone())
    }
}

/// Standardizes every row with statistics from `train_rows` only.
pub fn standardize(dataset: &Dataset, train_rows: &[usize]) -> Result<(Dataset, Standardization)> {
    let stats = Standardization::fit(dataset, train_rows)?;
    Ok((stats.apply(dataset)?, stats))
}
