use crate::dataio::matrix::Features;
use crate::error::{Error, Result};

/// Features with one target per row: ±1 for binary classification, a class
/// index in `1..=K` for multiclass, a real value for regression.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Features,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn new(features: Features, targets: Vec<f64>) -> Result<Self> {
        Error::check_dim("dataset targets", features.n_rows(), targets.len())?;
        Ok(Self { features, targets })
    }

    pub fn n_samples(&self) -> usize {
        self.targets.len()
    }

    pub fn feature_count(&self) -> usize {
        self.features.n_cols()
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(rows),
            targets: rows.iter().map(|&i| self.targets[i]).collect(),
        }
    }

    pub fn with_feature_count(self, p: usize) -> Result<Dataset> {
        Ok(Dataset {
            features: self.features.with_cols(p)?,
            targets: self.targets,
        })
    }

    pub fn check_binary_labels(&self) -> Result<()> {
        match self.targets.iter().find(|&&t| t != 1.0 && t != -1.0) {
            Some(t) => Err(Error::InvalidConfig(format!("binary labels must be +1 or -1, found {t}"))),
            None => Ok(()),
        }
    }

    /// Class labels `1..=K` mapped to `0..K`.
    pub fn class_indices(&self, n_classes: usize) -> Result<Vec<usize>> {
        self.targets
            .iter()
            .map(|&t| {
                if t.fract() == 0.0 && t >= 1.0 && t <= n_classes as f64 {
                    Ok(t as usize - 1)
                } else {
                    Err(Error::InvalidConfig(format!(
                        "class labels must be integers in 1..={n_classes}, found {t}"
                    )))
                }
            })
            .collect()
    }
}
