//! Item-separation objectives on query features, with analytic gradients.
//!
//! Memory items are constants here; only the queries receive gradients.

mod contrastive;
mod fdcheck;
mod triplet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{cosine_unchecked, Matrix};

pub use contrastive::contrastive_loss;
pub use fdcheck::{fd_check, FdReport};
pub use triplet::triplet_loss;

/// Temperature and weights of the key and value contrastive terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveConfig {
    pub temperature: f64,
    pub lambda_key: f64,
    pub lambda_value: f64,
}

impl Default for ContrastiveConfig {
    fn default() -> Self {
        ContrastiveConfig {
            temperature: 0.1,
            lambda_key: 1.0,
            lambda_value: 0.5,
        }
    }
}

impl ContrastiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if !(self.lambda_key >= 0.0 && self.lambda_value >= 0.0) {
            return Err(Error::Config("contrastive weights must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossVariant {
    Contrastive,
    Triplet,
}

/// Loss value of one objective call, the selected positive per query and the
/// gradient with respect to the queries.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemLoss {
    pub loss: f64,
    pub positives: Vec<usize>,
    pub grad: Matrix,
}

/// Loss totals of a training step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossReport {
    pub key_loss: f64,
    pub value_loss: f64,
    pub rec_loss: f64,
}

/// Index of the cosine-nearest item within `pool`; ties go to the earliest pool entry.
pub fn nearest_in_pool(query: &[f64], items: &Matrix, pool: &[usize]) -> usize {
    let mut best = pool[0];
    let mut best_sim = f64::NEG_INFINITY;
    for &n in pool {
        let s = cosine_unchecked(query, items.row(n));
        if s > best_sim {
            best_sim = s;
            best = n;
        }
    }
    best
}

pub(crate) fn check_inputs(queries: &Matrix, items: &Matrix, pool: &[usize]) -> Result<()> {
    if items.rows() == 0 {
        return Err(Error::Pool("no items".into()));
    }
    if queries.cols() != items.cols() {
        return Err(Error::shape(format!(
            "queries have {} channels, items {}",
            queries.cols(),
            items.cols()
        )));
    }
    if pool.is_empty() {
        return Err(Error::Pool("positive pool is empty".into()));
    }
    if let Some(&bad) = pool.iter().find(|&&n| n >= items.rows()) {
        return Err(Error::Pool(format!(
            "pool index {bad} out of range for {} items",
            items.rows()
        )));
    }
    Ok(())
}
