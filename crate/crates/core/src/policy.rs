//! Deterministic episode policies, scored identically by evaluation, the
//! exact oracle and the live service.

use std::collections::BTreeMap;

use crate::dataprep::StateTensor;
use crate::environment::EnvConfig;
use crate::neuralnet::Network;

/// What a policy may see: the observation plus its own query count.
#[derive(Debug, Clone, Copy)]
pub struct PolicyView<'a> {
    pub observation: &'a StateTensor,
    pub answered: &'a BTreeMap<usize, usize>,
    pub queries_made: usize,
}

pub trait Policy: Send + Sync {
    /// Action index in `0..config.num_actions()`.
    fn act(&self, view: &PolicyView<'_>, config: &EnvConfig) -> usize;
}

/// Index of the largest value among allowed entries; ties go to the lowest index.
pub fn argmax_masked(values: &[f32], mask: Option<&[bool]>) -> usize {
    let mut best: Option<(usize, f32)> = None;
    for (i, &v) in values.iter().enumerate() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i).expect("at least one allowed action")
}

/// Acts greedily on a Q-network's outputs.
///
/// Unmasked, it may pick actions the environment penalises; masked, it
/// only considers [`EnvConfig::valid_mask`].
#[derive(Debug, Clone, Copy)]
pub struct GreedyQ<'a> {
    pub net: &'a Network<f32>,
    pub masked: bool,
}

impl GreedyQ<'_> {
    pub fn q_values(&self, observation: &StateTensor) -> Vec<f32> {
        self.net
            .predict(observation.as_slice())
            .expect("observation shape matches network")
    }
}

impl Policy for GreedyQ<'_> {
    fn act(&self, view: &PolicyView<'_>, config: &EnvConfig) -> usize {
        let q = self.q_values(view.observation);
        if self.masked {
            argmax_masked(&q, Some(&config.valid_mask(view.queries_made)))
        } else {
            argmax_masked(&q, None)
        }
    }
}

/// The supervised baseline as a policy: ask the first `k` ranked questions,
/// then predict the classifier's argmax.
#[derive(Debug, Clone, Copy)]
pub struct FixedQueries<'a> {
    pub net: &'a Network<f32>,
    pub k: usize,
}

impl Policy for FixedQueries<'_> {
    fn act(&self, view: &PolicyView<'_>, config: &EnvConfig) -> usize {
        if view.queries_made < self.k {
            return view.queries_made;
        }
        let logits = self
            .net
            .predict(view.observation.as_slice())
            .expect("observation shape matches network");
        config.kmax + argmax_masked(&logits, None)
    }
}
