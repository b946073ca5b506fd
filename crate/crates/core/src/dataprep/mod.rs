//! Tabular categorical data: schema, CSV ingestion, χ² feature ranking,
//! one-hot state encoding, splitting, class-balanced resampling and a
//! synthetic generator with known class-conditional distributions.

mod chisq;
mod csvio;
mod encode;
mod prepared;
mod rank;
mod sample;
mod synth;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::DataError;

pub use chisq::{chi_square, regularized_gamma_p, regularized_gamma_q, ChiSquare};
pub use csvio::{load_csv, write_csv, LoadReport, LABEL_COLUMN};
pub use encode::{encode_state, one_answer_states, StateTensor};
pub use prepared::{Prepared, PreparedMeta, META_FILE, RANKING_FILE, SCHEMA_FILE, SPEC_FILE, TEST_FILE, TRAIN_FILE};
pub use rank::{rank_features, FeatureRank, RankReport};
pub use sample::{balanced_sample, split, BalancedSampler};
pub use synth::{synth_generate, FeatureDistribution, SynthSpec};
#[cfg(test)]
pub(crate) use synth::binary_feature;

/// Upper bound on category count per feature.
pub const MAX_CATEGORIES: usize = 10;

/// Number of outcome classes.
pub const NUM_CLASSES: usize = 2;

/// One categorical question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub name: String,
    pub num_categories: usize,
    pub prompt: String,
    pub choice_labels: Vec<String>,
}

impl FeatureSchema {
    pub fn validate(&self) -> Result<(), DataError> {
        if !(2..=MAX_CATEGORIES).contains(&self.num_categories) {
            return Err(DataError::InvalidSchema(format!(
                "feature '{}' has {} categories, expected 2..={}",
                self.name, self.num_categories, MAX_CATEGORIES
            )));
        }
        if self.choice_labels.len() != self.num_categories {
            return Err(DataError::InvalidSchema(format!(
                "feature '{}' has {} choice labels for {} categories",
                self.name,
                self.choice_labels.len(),
                self.num_categories
            )));
        }
        if self.name == LABEL_COLUMN {
            return Err(DataError::InvalidSchema(format!(
                "feature name '{LABEL_COLUMN}' is reserved"
            )));
        }
        Ok(())
    }
}

/// An ordered list of questions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema(pub Vec<FeatureSchema>);

impl Schema {
    pub fn new(features: Vec<FeatureSchema>) -> Result<Self, DataError> {
        let schema = Schema(features);
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.0.is_empty() {
            return Err(DataError::InvalidSchema("schema has no features".into()));
        }
        for (i, f) in self.0.iter().enumerate() {
            f.validate()?;
            if self.0[..i].iter().any(|g| g.name == f.name) {
                return Err(DataError::InvalidSchema(format!(
                    "duplicate feature name '{}'",
                    f.name
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn features(&self) -> &[FeatureSchema] {
        &self.0
    }

    /// Widest category count; the column count of every [`StateTensor`].
    pub fn max_categories(&self) -> usize {
        self.0.iter().map(|f| f.num_categories).max().unwrap_or(0)
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let schema: Schema = serde_json::from_str(&text).map_err(|source| DataError::Json {
            context: path.display().to_string(),
            source,
        })?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        let text = serde_json::to_string_pretty(self).map_err(|source| DataError::Json {
            context: path.display().to_string(),
            source,
        })?;
        fs::write(path, text + "\n").map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// A fully observed respondent: one code per feature plus the binary label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Record {
    pub features: Vec<usize>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: Schema,
    pub records: Vec<Record>,
    /// Feature indices, most associated with the label first.
    pub feature_order: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset with identity feature order, checking every record.
    pub fn new(schema: Schema, records: Vec<Record>) -> Result<Self, DataError> {
        schema.validate()?;
        for r in &records {
            check_record(&schema, r)?;
        }
        let feature_order = (0..schema.len()).collect();
        Ok(Dataset {
            schema,
            records,
            feature_order,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.schema.len()
    }

    /// Records grouped per class, as indices into `records`.
    pub fn class_indices(&self) -> [Vec<usize>; NUM_CLASSES] {
        let mut by_class: [Vec<usize>; NUM_CLASSES] = Default::default();
        for (i, r) in self.records.iter().enumerate() {
            by_class[r.label].push(i);
        }
        by_class
    }

    pub fn with_feature_order(mut self, order: Vec<usize>) -> Result<Self, DataError> {
        if !is_permutation(&order, self.schema.len()) {
            return Err(DataError::InvalidArgument(format!(
                "feature order {order:?} is not a permutation of 0..{}",
                self.schema.len()
            )));
        }
        self.feature_order = order;
        Ok(self)
    }
}

pub(crate) fn check_record(schema: &Schema, r: &Record) -> Result<(), DataError> {
    if r.features.len() != schema.len() {
        return Err(DataError::InvalidArgument(format!(
            "record has {} features, schema has {}",
            r.features.len(),
            schema.len()
        )));
    }
    if r.label >= NUM_CLASSES {
        return Err(DataError::InvalidArgument(format!("label {} out of range", r.label)));
    }
    for (i, (&code, f)) in r.features.iter().zip(schema.features()).enumerate() {
        if code >= f.num_categories {
            return Err(DataError::Encoding {
                feature: i,
                code,
                num_categories: f.num_categories,
            });
        }
    }
    Ok(())
}

pub fn is_permutation(order: &[usize], n: usize) -> bool {
    if order.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

#[cfg(test)]
pub(crate) fn binary_schema(m: usize) -> Schema {
    Schema::new(
        (0..m)
            .map(|i| FeatureSchema {
                name: format!("f{i}"),
                num_categories: 2,
                prompt: format!("Question {i}?"),
                choice_labels: vec!["no".into(), "yes".into()],
            })
            .collect(),
    )
    .unwrap()
}
