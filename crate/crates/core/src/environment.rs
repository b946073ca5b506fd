//! The survey decision process.
//!
//! Action indices `0..kmax` query the allowed features in rank order;
//! `kmax..kmax + classes` predict a class. Queries cost `cost_query`; a
//! prediction ends the episode with `r_correct` or `r_wrong`. Predicting
//! before `min_queries` queries, or querying once the budget of `kmax` is
//! spent, ends the episode with `r_wrong` and nothing else.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataprep::{encode_state, Record, Schema, StateTensor, NUM_CLASSES};
use crate::error::EnvError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub kmax: usize,
    pub classes: usize,
    pub cost_query: f64,
    pub r_correct: f64,
    pub r_wrong: f64,
    pub min_queries: usize,
    pub gamma: f64,
    /// Features reachable by query actions, in action order.
    pub allowed_features: Vec<usize>,
}

impl EnvConfig {
    /// Default rewards and timing with the first `kmax` ranked features.
    pub fn new(kmax: usize, feature_order: &[usize]) -> Result<Self, EnvError> {
        if kmax > feature_order.len() {
            return Err(EnvError::InvalidConfig(format!(
                "kmax {kmax} exceeds the {} available features",
                feature_order.len()
            )));
        }
        let cfg = EnvConfig {
            kmax,
            classes: NUM_CLASSES,
            cost_query: -0.05,
            r_correct: 1.0,
            r_wrong: -1.0,
            min_queries: 2,
            gamma: 1.0,
            allowed_features: feature_order[..kmax].to_vec(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.kmax < self.min_queries {
            return Err(EnvError::InvalidConfig(format!(
                "kmax {} is below min_queries {}",
                self.kmax, self.min_queries
            )));
        }
        if self.kmax == 0 {
            return Err(EnvError::InvalidConfig("kmax must be positive".into()));
        }
        if self.allowed_features.len() != self.kmax {
            return Err(EnvError::InvalidConfig(format!(
                "{} allowed features for kmax {}",
                self.allowed_features.len(),
                self.kmax
            )));
        }
        if self.classes < 2 {
            return Err(EnvError::InvalidConfig("need at least two classes".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(EnvError::InvalidConfig(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        Ok(())
    }

    pub fn num_actions(&self) -> usize {
        self.kmax + self.classes
    }

    pub fn action(&self, index: usize) -> Result<Action, EnvError> {
        if index < self.kmax {
            Ok(Action::Query(index))
        } else if index < self.num_actions() {
            Ok(Action::Predict(index - self.kmax))
        } else {
            Err(EnvError::InvalidAction {
                index,
                size: self.num_actions(),
            })
        }
    }

    pub fn index(&self, action: Action) -> usize {
        match action {
            Action::Query(slot) => slot,
            Action::Predict(class) => self.kmax + class,
        }
    }

    /// Validity of each action index after `queries_made` charged queries.
    pub fn valid_mask(&self, queries_made: usize) -> Vec<bool> {
        let can_query = queries_made < self.kmax;
        let can_predict = queries_made >= self.min_queries;
        (0..self.num_actions())
            .map(|i| if i < self.kmax { can_query } else { can_predict })
            .collect()
    }

    /// Query actions while budget remains; predictions once `min_queries` is met.
    pub fn valid_actions(&self, queries_made: usize) -> Vec<Action> {
        self.valid_mask(queries_made)
            .iter()
            .enumerate()
            .filter(|(_, &ok)| ok)
            .map(|(i, _)| self.action(i).expect("index in range"))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    /// Ask the allowed feature at this slot.
    Query(usize),
    Predict(usize),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Query(slot) => write!(f, "query:{slot}"),
            Action::Predict(class) => write!(f, "predict:{class}"),
        }
    }
}

/// How an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Correct,
    Wrong,
    /// Predicted before `min_queries` queries.
    EarlyPrediction,
    /// Queried with the budget already spent.
    BudgetExhausted,
}

impl Outcome {
    pub fn is_correct(self) -> bool {
        self == Outcome::Correct
    }

    pub fn is_violation(self) -> bool {
        matches!(self, Outcome::EarlyPrediction | Outcome::BudgetExhausted)
    }
}

/// One episode in progress. The record is hidden from agents, which only
/// see [`observation`](Self::observation).
#[derive(Debug, Clone)]
pub struct SurveyState {
    record: Record,
    answered: BTreeMap<usize, usize>,
    observation: StateTensor,
    queries_made: usize,
    steps: usize,
    outcome: Option<Outcome>,
    last_reward: f64,
}

impl SurveyState {
    pub fn answered(&self) -> &BTreeMap<usize, usize> {
        &self.answered
    }

    pub fn observation(&self) -> &StateTensor {
        &self.observation
    }

    pub fn queries_made(&self) -> usize {
        self.queries_made
    }

    /// Actions taken so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_terminal(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn last_reward(&self) -> f64 {
        self.last_reward
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub reward: f64,
    pub terminal: bool,
}

/// Environment for one schema and reward configuration.
#[derive(Debug, Clone)]
pub struct SurveyEnv {
    config: EnvConfig,
    schema: Schema,
}

impl SurveyEnv {
    pub fn new(schema: Schema, config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        if let Some(&f) = config.allowed_features.iter().find(|&&f| f >= schema.len()) {
            return Err(EnvError::InvalidConfig(format!(
                "allowed feature {f} not in a schema of {} features",
                schema.len()
            )));
        }
        Ok(SurveyEnv { config, schema })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn reset(&self, record: Record) -> SurveyState {
        debug_assert_eq!(record.features.len(), self.schema.len());
        SurveyState {
            record,
            answered: BTreeMap::new(),
            observation: StateTensor::zeros(self.schema.len(), self.schema.max_categories()),
            queries_made: 0,
            steps: 0,
            outcome: None,
            last_reward: 0.0,
        }
    }

    pub fn step(&self, state: &mut SurveyState, action: Action) -> Result<StepResult, EnvError> {
        if state.is_terminal() {
            return Err(EnvError::Terminal);
        }
        let cfg = &self.config;
        let index = cfg.index(action);
        let in_range = match action {
            Action::Query(slot) => slot < cfg.kmax,
            Action::Predict(class) => class < cfg.classes,
        };
        if !in_range {
            return Err(EnvError::InvalidAction {
                index,
                size: cfg.num_actions(),
            });
        }
        state.steps += 1;
        let (reward, outcome) = match action {
            Action::Query(_) if state.queries_made >= cfg.kmax => {
                (cfg.r_wrong, Some(Outcome::BudgetExhausted))
            }
            Action::Query(slot) => {
                let feature = cfg.allowed_features[slot];
                let code = state.record.features[feature];
                state.answered.insert(feature, code);
                state.observation.set_one_hot(feature, code);
                state.queries_made += 1;
                (cfg.cost_query, None)
            }
            Action::Predict(_) if state.queries_made < cfg.min_queries => {
                (cfg.r_wrong, Some(Outcome::EarlyPrediction))
            }
            Action::Predict(class) if class == state.record.label => {
                (cfg.r_correct, Some(Outcome::Correct))
            }
            Action::Predict(_) => (cfg.r_wrong, Some(Outcome::Wrong)),
        };
        state.outcome = outcome;
        state.last_reward = reward;
        Ok(StepResult {
            reward,
            terminal: outcome.is_some(),
        })
    }

    /// Observation for an explicit answer map (as the live service holds it).
    pub fn observe(&self, answered: &BTreeMap<usize, usize>) -> Result<StateTensor, EnvError> {
        encode_state(&self.schema, answered).map_err(|e| EnvError::InvalidConfig(e.to_string()))
    }
}

/// Undiscounted sum of rewards.
pub fn episode_return(rewards: &[f64]) -> f64 {
    rewards.iter().sum()
}

/// One line of the per-step episode trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLine {
    pub episode: u64,
    pub t: usize,
    pub action: Action,
    pub reward: f64,
    pub terminal: bool,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}",
            self.episode, self.t, self.action, self.reward, self.terminal as u8
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataprep::binary_schema;
    use proptest::prelude::*;

    fn env(kmax: usize) -> SurveyEnv {
        let order: Vec<usize> = (0..4).collect();
        SurveyEnv::new(binary_schema(4), EnvConfig::new(kmax, &order).unwrap()).unwrap()
    }

    fn rec(label: usize) -> Record {
        Record {
            features: vec![label, 1, 0, 1],
            label,
        }
    }

    #[test]
    fn reset_hides_the_record() {
        let e = env(4);
        let a = e.reset(rec(0));
        let b = e.reset(rec(1));
        assert_eq!(a.observation(), b.observation());
        assert!(a.observation().as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(a.queries_made(), 0);
        assert!(!a.is_terminal());
    }

    #[test]
    fn query_costs_and_reveals() {
        let e = env(4);
        let mut s = e.reset(rec(1));
        let r = e.step(&mut s, Action::Query(0)).unwrap();
        assert_eq!(r, StepResult { reward: -0.05, terminal: false });
        assert_eq!(s.answered().get(&0), Some(&1));
        assert_eq!(s.observation().get(0, 1), 1.0);
    }

    #[test]
    fn correct_prediction_after_two_queries() {
        let e = env(4);
        let mut s = e.reset(rec(1));
        e.step(&mut s, Action::Query(0)).unwrap();
        e.step(&mut s, Action::Query(1)).unwrap();
        let r = e.step(&mut s, Action::Predict(1)).unwrap();
        assert_eq!(r, StepResult { reward: 1.0, terminal: true });
        assert_eq!(s.outcome(), Some(Outcome::Correct));
    }

    #[test]
    fn wrong_prediction() {
        let e = env(4);
        let mut s = e.reset(rec(1));
        e.step(&mut s, Action::Query(0)).unwrap();
        e.step(&mut s, Action::Query(1)).unwrap();
        assert_eq!(e.step(&mut s, Action::Predict(0)).unwrap().reward, -1.0);
        assert_eq!(s.outcome(), Some(Outcome::Wrong));
    }

    #[test]
    fn early_prediction_is_penalised() {
        let e = env(4);
        let mut s = e.reset(rec(0));
        e.step(&mut s, Action::Query(0)).unwrap();
        let r = e.step(&mut s, Action::Predict(0)).unwrap();
        assert_eq!(r, StepResult { reward: -1.0, terminal: true });
        assert_eq!(s.outcome(), Some(Outcome::EarlyPrediction));
    }

    #[test]
    fn query_past_budget_is_penalised_without_cost() {
        let e = env(2);
        let mut s = e.reset(rec(0));
        e.step(&mut s, Action::Query(0)).unwrap();
        e.step(&mut s, Action::Query(1)).unwrap();
        let r = e.step(&mut s, Action::Query(1)).unwrap();
        assert_eq!(r, StepResult { reward: -1.0, terminal: true });
        assert_eq!(s.queries_made(), 2);
        assert_eq!(s.outcome(), Some(Outcome::BudgetExhausted));
    }

    #[test]
    fn stepping_terminal_state_fails() {
        let e = env(2);
        let mut s = e.reset(rec(0));
        e.step(&mut s, Action::Predict(0)).unwrap();
        assert_eq!(e.step(&mut s, Action::Query(0)), Err(EnvError::Terminal));
    }

    #[test]
    fn repeated_query_recharges_without_new_information() {
        let e = env(4);
        let mut s = e.reset(rec(1));
        e.step(&mut s, Action::Query(2)).unwrap();
        let obs = s.observation().clone();
        let r = e.step(&mut s, Action::Query(2)).unwrap();
        assert_eq!(r.reward, -0.05);
        assert_eq!(s.queries_made(), 2);
        assert_eq!(s.answered().len(), 1);
        assert_eq!(s.observation(), &obs);
    }

    #[test]
    fn valid_action_sets() {
        let cfg = EnvConfig::new(4, &[0, 1, 2, 3]).unwrap();
        assert_eq!(cfg.valid_actions(0), (0..4).map(Action::Query).collect::<Vec<_>>());
        assert_eq!(cfg.valid_actions(2).len(), 6);
        assert_eq!(cfg.valid_actions(4), vec![Action::Predict(0), Action::Predict(1)]);
        let cfg2 = EnvConfig::new(2, &[0, 1, 2, 3]).unwrap();
        assert_eq!(cfg2.valid_actions(0), vec![Action::Query(0), Action::Query(1)]);
    }

    #[test]
    fn kmax_below_min_queries_is_rejected() {
        assert!(EnvConfig::new(1, &[0, 1]).is_err());
        assert!(EnvConfig::new(3, &[0, 1]).is_err());
    }

    #[test]
    fn action_index_round_trip() {
        let cfg = EnvConfig::new(4, &[3, 2, 1, 0]).unwrap();
        for i in 0..cfg.num_actions() {
            assert_eq!(cfg.index(cfg.action(i).unwrap()), i);
        }
        assert!(cfg.action(6).is_err());
    }

    #[test]
    fn returns() {
        assert!((episode_return(&[-0.05, -0.05, 1.0]) - 0.90).abs() < 1e-12);
        assert_eq!(episode_return(&[]), 0.0);
        assert!((episode_return(&[-0.05, -1.0]) + 1.05).abs() < 1e-12);
    }

    #[test]
    fn trace_line_format() {
        let line = TraceLine { episode: 3, t: 1, action: Action::Query(2), reward: -0.05, terminal: false };
        assert_eq!(line.to_string(), "3\t1\tquery:2\t-0.05\t0");
    }

    proptest! {
        #[test]
        fn episodes_terminate_and_never_leak(actions in prop::collection::vec(0usize..6, 1..20), kmax in 2usize..=4) {
            let e = env(kmax);
            let mut s0 = e.reset(Record { features: vec![0, 1, 0, 1], label: 0 });
            let mut s1 = e.reset(Record { features: vec![0, 1, 0, 1], label: 1 });
            let mut n = 0;
            for &a in &actions {
                let a = e.config().action(a % e.config().num_actions()).unwrap();
                if s0.is_terminal() { break; }
                let r0 = e.step(&mut s0, a).unwrap();
                e.step(&mut s1, a).unwrap();
                n += 1;
                prop_assert!([-0.05, 1.0, -1.0].contains(&r0.reward));
                prop_assert_eq!(s0.observation(), s1.observation());
                prop_assert!(s0.queries_made() <= kmax);
            }
            prop_assert!(n <= kmax + 1);
        }
    }
}
