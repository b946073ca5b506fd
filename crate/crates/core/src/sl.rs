//! Fixed-question supervised baseline: the top-k ranked answers are revealed
//! up front and a classifier is trained on them with cross-entropy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataprep::{one_answer_states, BalancedSampler, Dataset, Record, Schema, StateTensor, NUM_CLASSES};
use crate::error::{DataError, TrainError};
use crate::log::{LogRow, TrainingLog};
use crate::neuralnet::{cross_entropy_loss, linear_anneal, Adam, AdamConfig, Arch, Network};
use crate::policy::FixedQueries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlConfig {
    /// Number of fixed questions (top-k by rank).
    pub k: usize,
    pub epochs: usize,
    pub minibatch: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub seed: u64,
}

impl SlConfig {
    pub fn new(k: usize) -> Self {
        SlConfig {
            k,
            epochs: 20,
            minibatch: 32,
            lr_start: 0.0025,
            lr_end: 0.0005,
            seed: 0,
        }
    }

    pub fn validate(&self, num_features: usize) -> Result<(), TrainError> {
        if !(1..=num_features).contains(&self.k) {
            return Err(TrainError::InvalidConfig(format!(
                "k = {} outside 1..={num_features}",
                self.k
            )));
        }
        if self.epochs == 0 || self.minibatch == 0 {
            return Err(TrainError::InvalidConfig("epochs and minibatch must be positive".into()));
        }
        if !(self.lr_start > 0.0 && self.lr_end > 0.0) {
            return Err(TrainError::InvalidConfig("learning rates must be positive".into()));
        }
        Ok(())
    }

    /// Learning rate at a (fractional) epoch position.
    pub fn learning_rate(&self, epoch: f64) -> f64 {
        linear_anneal(self.lr_start, self.lr_end, epoch, self.epochs as f64)
    }
}

/// The classifier input: rows of the first `k` features of `feature_order`
/// one-hot, everything else zero.
pub fn make_fixed_input(
    schema: &Schema,
    record: &Record,
    k: usize,
    feature_order: &[usize],
) -> Result<StateTensor, DataError> {
    if k > feature_order.len() {
        return Err(DataError::InvalidArgument(format!(
            "k = {k} exceeds {} ranked features",
            feature_order.len()
        )));
    }
    let answered = feature_order[..k]
        .iter()
        .map(|&f| (f, record.features[f]))
        .collect();
    crate::dataprep::encode_state(schema, &answered)
}

pub fn sl_arch(train: &Dataset, k: usize) -> Arch {
    Arch::classifier(train.schema.len(), train.schema.max_categories(), k, NUM_CLASSES)
}

/// Trains the classifier. One epoch is `train.len()` balanced draws.
pub fn train_sl(config: &SlConfig, train: &Dataset) -> Result<(Network<f32>, TrainingLog), TrainError> {
    config.validate(train.num_features())?;
    let k = config.k;
    let inputs = train
        .records
        .iter()
        .map(|r| make_fixed_input(&train.schema, r, k, &train.feature_order).map(|t| t.as_slice().to_vec()))
        .collect::<Result<Vec<_>, _>>()?;
    let sampler = BalancedSampler::new(train)?;
    let probes = one_answer_states(&train.schema, &train.feature_order[..k]);
    let mut net = Network::init_alive(sl_arch(train, k), config.seed, &probes)?;
    let mut adam = Adam::new(&net, AdamConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let n = config.minibatch;
    let steps_per_epoch = train.len().div_ceil(n).max(1);
    let mut grads = Network::zeros(*net.arch());
    let mut log = TrainingLog::default();
    let mut step = 0u64;
    for epoch in 0..config.epochs {
        let mut epoch_loss = 0.0;
        let mut lr = config.lr_start;
        for b in 0..steps_per_epoch {
            lr = config.learning_rate(epoch as f64 + b as f64 / steps_per_epoch as f64);
            grads.fill_zero();
            let mut loss = 0.0;
            for _ in 0..n {
                let i = sampler.draw_index(&mut rng);
                let (logits, cache) = net.forward(&inputs[i])?;
                let (l, mut g) = cross_entropy_loss(&logits, train.records[i].label);
                loss += l as f64;
                g.iter_mut().for_each(|x| *x /= n as f32);
                net.backward_into(&cache, &g, &mut grads);
            }
            let loss = loss / n as f64;
            if !loss.is_finite() {
                return Err(TrainError::Divergence {
                    step,
                    detail: format!("cross-entropy {loss}"),
                });
            }
            adam.step(&mut net, &grads, lr).map_err(|e| TrainError::Divergence {
                step,
                detail: e.to_string(),
            })?;
            epoch_loss += loss;
            step += 1;
        }
        log.push(LogRow {
            step,
            lr: Some(lr),
            loss: Some(epoch_loss / steps_per_epoch as f64),
            ..Default::default()
        });
    }
    Ok((net, log))
}

/// Wraps a trained classifier as an episode policy that asks the `k` fixed
/// questions in rank order and then predicts.
pub fn sl_as_policy(net: &Network<f32>, k: usize) -> FixedQueries<'_> {
    FixedQueries { net, k }
}
