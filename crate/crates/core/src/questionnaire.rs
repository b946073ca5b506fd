//! Live questionnaire driver: a trained model picks each next question from
//! a respondent's answers until it predicts. Invalid actions are masked, so
//! a respondent never hits a penalty branch. A repeated query is applied
//! automatically (the answer is already known) and charged, exactly as the
//! environment would.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::dataprep::encode_state;
use crate::environment::Action;
use crate::model::ModelBundle;
use crate::policy::PolicyView;

/// Human-readable outcome per class.
pub const CLASS_LABELS: [&str; 2] = ["negative (lower risk)", "positive (higher risk)"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub class: usize,
    pub label: String,
    /// Network outputs for the prediction actions (Q-values for RL, logits for SL).
    pub q_values: Vec<f32>,
    pub queries_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    /// Ask this feature (schema index) next.
    Ask(usize),
    Done(Prediction),
}

#[derive(Debug, Error, PartialEq)]
pub enum AnswerError {
    #[error("the questionnaire has already finished")]
    Finished,
    #[error("choice {choice} out of range for a question with {num_choices} choices")]
    ChoiceOutOfRange { choice: usize, num_choices: usize },
}

#[derive(Debug, Clone)]
pub struct Questionnaire {
    model: Arc<ModelBundle>,
    answered: BTreeMap<usize, usize>,
    queries_made: usize,
    actions: Vec<Action>,
    current: Step,
}

impl Questionnaire {
    /// Starts a questionnaire and picks the first question.
    pub fn start(model: Arc<ModelBundle>) -> Self {
        let mut q = Questionnaire {
            model,
            answered: BTreeMap::new(),
            queries_made: 0,
            actions: Vec::new(),
            current: Step::Ask(0),
        };
        q.current = q.advance();
        q
    }

    pub fn model(&self) -> &ModelBundle {
        &self.model
    }

    pub fn current(&self) -> &Step {
        &self.current
    }

    pub fn answered(&self) -> &BTreeMap<usize, usize> {
        &self.answered
    }

    pub fn queries_made(&self) -> usize {
        self.queries_made
    }

    /// Every action taken so far, including automatic repeats.
    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.current, Step::Done(_))
    }

    /// Records the answer to the pending question and picks the next step.
    /// On error nothing changes.
    pub fn answer(&mut self, choice: usize) -> Result<&Step, AnswerError> {
        let Step::Ask(feature) = self.current else {
            return Err(AnswerError::Finished);
        };
        let num_choices = self.model.meta.schema.features()[feature].num_categories;
        if choice >= num_choices {
            return Err(AnswerError::ChoiceOutOfRange { choice, num_choices });
        }
        self.answered.insert(feature, choice);
        self.queries_made += 1;
        self.current = self.advance();
        Ok(&self.current)
    }

    fn advance(&mut self) -> Step {
        let meta = &self.model.meta;
        let env = &meta.env;
        let policy = self.model.policy(true);
        loop {
            let observation = encode_state(&meta.schema, &self.answered).expect("answers within schema");
            let view = PolicyView {
                observation: &observation,
                answered: &self.answered,
                queries_made: self.queries_made,
            };
            let action = env.action(policy.act(&view, env)).expect("policy action in range");
            self.actions.push(action);
            match action {
                Action::Query(slot) => {
                    let feature = env.allowed_features[slot];
                    if !self.answered.contains_key(&feature) {
                        return Step::Ask(feature);
                    }
                    self.queries_made += 1;
                }
                Action::Predict(class) => {
                    let outputs = self.model.net.predict(observation.as_slice()).expect("observation shape");
                    let q_values = match meta.kind {
                        crate::model::ModelKind::Rl => outputs[env.kmax..].to_vec(),
                        crate::model::ModelKind::Sl => outputs,
                    };
                    return Step::Done(Prediction {
                        class,
                        label: CLASS_LABELS.get(class).map_or_else(|| format!("class {class}"), |s| s.to_string()),
                        q_values,
                        queries_used: self.queries_made,
                    });
                }
            }
        }
    }
}
