use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in hyperparameter space. Regularization and kernel-width
/// coordinates live in log-space, so the model sees `e^λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperParams(Vec<f64>);

/// The inner (model) variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelParams(Vec<f64>);

macro_rules! vector_newtype {
    ($name:ident, $what:literal) => {
        impl $name {
            pub fn new(values: Vec<f64>) -> Result<Self> {
                if values.is_empty() {
                    return Err(Error::InvalidConfig(concat!($what, " must be non-empty").into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite($what));
                }
                Ok(Self(values))
            }

            pub fn zeros(len: usize) -> Self {
                Self(vec![0.0; len])
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }
        }

        impl Deref for $name {
            type Target = [f64];

            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl AsRef<[f64]> for $name {
            fn as_ref(&self) -> &[f64] {
                &self.0
            }
        }
    };
}

vector_newtype!(HyperParams, "hyperparameters");
vector_newtype!(ModelParams, "model parameters");

impl ModelParams {
    /// Wraps solver output without re-validating; solvers check finiteness
    /// themselves and report [`Error::NonFinite`].
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl HyperParams {
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Self(values)
    }
}
