use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rank::compare_ranks;
use super::{chi_square, Dataset, FeatureRank, FeatureSchema, Record, Schema, NUM_CLASSES};
use crate::error::DataError;

const PROB_TOL: f64 = 1e-9;

/// One question together with its class-conditional answer distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDistribution {
    #[serde(flatten)]
    pub feature: FeatureSchema,
    /// `class_conditional[class][code]` = P(code | class).
    pub class_conditional: Vec<Vec<f64>>,
}

/// A generative model for synthetic respondents: a class prior and
/// class-conditionally independent categorical features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub class_prior: Vec<f64>,
    pub features: Vec<FeatureDistribution>,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        check_probs("class_prior", &self.class_prior, NUM_CLASSES)?;
        self.schema()?;
        for f in &self.features {
            if f.class_conditional.len() != NUM_CLASSES {
                return Err(DataError::InvalidProbability(format!(
                    "feature '{}': expected {NUM_CLASSES} class rows",
                    f.feature.name
                )));
            }
            for (c, row) in f.class_conditional.iter().enumerate() {
                check_probs(
                    &format!("feature '{}' class {c}", f.feature.name),
                    row,
                    f.feature.num_categories,
                )?;
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> Result<Schema, DataError> {
        Schema::new(self.features.iter().map(|f| f.feature.clone()).collect())
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    /// P(feature = code | class).
    pub fn likelihood(&self, feature: usize, code: usize, class: usize) -> f64 {
        self.features[feature].class_conditional[class][code]
    }

    /// Features ranked by χ² on the expected contingency tables of `n`
    /// draws, with the same ordering rule as [`rank_features`](super::rank_features).
    pub fn expected_order(&self, n: f64) -> Vec<usize> {
        let mut ranks: Vec<FeatureRank> = self
            .features
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let table: Vec<Vec<f64>> = (0..f.feature.num_categories)
                    .map(|v| (0..NUM_CLASSES).map(|c| n * self.class_prior[c] * f.class_conditional[c][v]).collect())
                    .filter(|r: &Vec<f64>| r.iter().any(|&x| x > 0.0))
                    .collect();
                let (statistic, dof, p_value) = match chi_square(&table) {
                    Ok(r) => (r.statistic, r.dof, r.p_value),
                    Err(_) => (0.0, 0, 1.0),
                };
                FeatureRank {
                    feature: i,
                    name: f.feature.name.clone(),
                    num_categories: f.feature.num_categories,
                    statistic,
                    dof,
                    p_value,
                }
            })
            .collect();
        ranks.sort_by(compare_ranks);
        ranks.into_iter().map(|r| r.feature).collect()
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let spec: SynthSpec = serde_json::from_str(&text).map_err(|source| DataError::Json {
            context: path.display().to_string(),
            source,
        })?;
        spec.validate()?;
        Ok(spec)
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

fn check_probs(what: &str, p: &[f64], len: usize) -> Result<(), DataError> {
    if p.len() != len {
        return Err(DataError::InvalidProbability(format!(
            "{what}: length {} != {len}",
            p.len()
        )));
    }
    if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(DataError::InvalidProbability(format!("{what}: negative or non-finite entry")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(DataError::InvalidProbability(format!("{what}: sums to {sum}")));
    }
    Ok(())
}

fn draw_categorical<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap above the cumulative sum
    p.iter().rposition(|&x| x > 0.0).unwrap_or(0)
}

/// Samples `n` i.i.d. records: class from the prior, then each feature
/// independently from its class-conditional distribution.
pub fn synth_generate(spec: &SynthSpec, n: usize, seed: u64) -> Result<Dataset, DataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..n)
        .map(|_| {
            let label = draw_categorical(&spec.class_prior, &mut rng);
            let features = spec
                .features
                .iter()
                .map(|f| draw_categorical(&f.class_conditional[label], &mut rng))
                .collect();
            Record { features, label }
        })
        .collect();
    Dataset::new(spec.schema()?, records)
}

#[cfg(test)]
pub(crate) fn binary_feature(name: &str, p_yes_given_class: [f64; 2]) -> FeatureDistribution {
    FeatureDistribution {
        feature: FeatureSchema {
            name: name.into(),
            num_categories: 2,
            prompt: format!("{name}?"),
            choice_labels: vec!["no".into(), "yes".into()],
        },
        class_conditional: p_yes_given_class
            .iter()
            .map(|&p| vec![1.0 - p, p])
            .collect(),
    }
}
