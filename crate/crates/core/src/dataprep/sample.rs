use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Record, NUM_CLASSES};
use crate::error::DataError;

/// Uniform random record-level split. Each side keeps the source's schema,
/// feature order and relative record order.
pub fn split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::InvalidArgument(format!(
            "test fraction {test_fraction} must lie in (0, 1)"
        )));
    }
    let n = dataset.len();
    let n_test = ((n as f64) * test_fraction).round() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (test_idx, train_idx) = idx.split_at(n_test);

    let pick = |ids: &[usize]| {
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        Dataset {
            schema: dataset.schema.clone(),
            records: ids.iter().map(|&i| dataset.records[i].clone()).collect(),
            feature_order: dataset.feature_order.clone(),
        }
    };
    Ok((pick(train_idx), pick(test_idx)))
}

/// Draws records with equal probability per class, regardless of base rates.
#[derive(Debug, Clone)]
pub struct BalancedSampler<'a> {
    records: &'a [Record],
    by_class: [Vec<usize>; NUM_CLASSES],
}

impl<'a> BalancedSampler<'a> {
    pub fn new(dataset: &'a Dataset) -> Result<Self, DataError> {
        let by_class = dataset.class_indices();
        if let Some(c) = by_class.iter().position(Vec::is_empty) {
            return Err(DataError::UnbalancedSource(c));
        }
        Ok(BalancedSampler {
            records: &dataset.records,
            by_class,
        })
    }

    /// Class uniformly, then a record uniformly within it.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> &'a Record {
        &self.records[self.draw_index(rng)]
    }

    /// Like [`draw`](Self::draw) but returns the record's index.
    pub fn draw_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let class = rng.gen_range(0..NUM_CLASSES);
        let pool = &self.by_class[class];
        pool[rng.gen_range(0..pool.len())]
    }
}

/// `n` class-balanced draws with replacement.
pub fn balanced_sample<R: Rng + ?Sized>(
    dataset: &Dataset,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Record>, DataError> {
    let sampler = BalancedSampler::new(dataset)?;
    Ok((0..n).map(|_| sampler.draw(rng).clone()).collect())
}
