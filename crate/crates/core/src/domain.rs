use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default half-width of the hyperparameter box, in log-space.
pub const DEFAULT_BOUND: f64 = 12.0;

/// Axis-aligned box `[lower_1, upper_1] × … × [lower_s, upper_s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Error::check_dim("box bounds", lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidConfig("box domain must have dimension >= 1".into()));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::NonFinite("box bounds"));
            }
            if lo > hi {
                return Err(Error::InvalidConfig(format!(
                    "box coordinate {i} has lower bound {lo} above upper bound {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval `[lo, hi]` in each of `dim` coordinates.
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    /// `[-12, 12]^dim`.
    pub fn symmetric(dim: usize) -> Self {
        Self::uniform(dim, -DEFAULT_BOUND, DEFAULT_BOUND).expect("valid default box")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Whether every coordinate is at distance more than `margin` from both bounds.
    pub fn is_interior(&self, point: &[f64], margin: f64) -> bool {
        point
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *v > lo + margin && *v < hi - margin)
    }

    /// Euclidean projection onto the box.
    ///
    /// Panics if `point` does not have the dimension of the box.
    pub fn project(&self, point: &[f64]) -> Vec<f64> {
        assert_eq!(
            point.len(),
            self.dim(),
            "projection point has dimension {} but the box has {}",
            point.len(),
            self.dim()
        );
        point
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
            .collect()
    }
}

/// Free-function form of [`BoxDomain::project`].
pub fn project_box(domain: &BoxDomain, point: &[f64]) -> Vec<f64> {
    domain.project(point)
}
