use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Schema;
use crate::error::DataError;

/// Agent observation: one row per feature, one column per category slot.
///
/// A row is all zeros while the feature is unanswered and one-hot at the
/// answered code otherwise. Rows are padded to the schema-wide maximum
/// category count so the grid is rectangular.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateTensor {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl StateTensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        StateTensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Sets `row` to one-hot at `col`.
    pub(crate) fn set_one_hot(&mut self, row: usize, col: usize) {
        let r = &mut self.data[row * self.cols..(row + 1) * self.cols];
        r.fill(0.0);
        r[col] = 1.0;
    }

    /// Indices of rows holding an answer.
    pub fn answered_rows(&self) -> Vec<usize> {
        (0..self.rows)
            .filter(|&r| self.row(r).iter().any(|&v| v != 0.0))
            .collect()
    }
}

/// Flattened one-answer states for every listed feature and category, used
/// as probe inputs when initialising networks.
pub fn one_answer_states(schema: &Schema, features: &[usize]) -> Vec<Vec<f32>> {
    let mut out = Vec::new();
    for &f in features {
        for code in 0..schema.features()[f].num_categories {
            let mut t = StateTensor::zeros(schema.len(), schema.max_categories());
            t.set_one_hot(f, code);
            out.push(t.data);
        }
    }
    out
}

pub fn encode_state(
    schema: &Schema,
    answered: &BTreeMap<usize, usize>,
) -> Result<StateTensor, DataError> {
    let mut t = StateTensor::zeros(schema.len(), schema.max_categories());
    for (&feature, &code) in answered {
        let f = schema
            .features()
            .get(feature)
            .ok_or_else(|| DataError::InvalidArgument(format!("no feature {feature}")))?;
        if code >= f.num_categories {
            return Err(DataError::Encoding {
                feature,
                code,
                num_categories: f.num_categories,
            });
        }
        t.set_one_hot(feature, code);
    }
    Ok(t)
}
