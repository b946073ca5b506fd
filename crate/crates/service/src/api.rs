//! Request handlers and wire types.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use surveyq_core::model::{ModelBundle, ModelKind};
use surveyq_core::questionnaire::{AnswerError, Prediction, Step};
use thiserror::Error;

use crate::sessions::Session;
use crate::AppState;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("unknown model '{0}'")]
    UnknownModel(String),
    #[error("unknown session '{0}'")]
    UnknownSession(String),
    #[error(transparent)]
    Answer(#[from] AnswerError),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::UnknownModel(_) | ApiError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ApiError::Answer(AnswerError::Finished) => StatusCode::CONFLICT,
            ApiError::Answer(AnswerError::ChoiceOutOfRange { .. }) => StatusCode::UNPROCESSABLE_ENTITY,
        };
        (status, Json(serde_json::json!({ "error": self.to_string() }))).into_response()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    /// Schema index of the feature.
    pub index: usize,
    pub feature: String,
    pub prompt: String,
    pub choices: Vec<String>,
    /// 1-based position of this question among charged queries.
    pub number: usize,
}

/// Either the next question or the final prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepBody {
    Question(Question),
    Prediction(Prediction),
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub model_id: String,
}

#[derive(Debug, Serialize)]
pub struct Created {
    pub session_id: String,
    #[serde(flatten)]
    pub step: StepBody,
}

#[derive(Debug, Deserialize)]
pub struct AnswerBody {
    pub choice: usize,
}

#[derive(Debug, Serialize)]
pub struct AnswerRecord {
    pub index: usize,
    pub feature: String,
    pub choice: usize,
    pub choice_label: String,
}

#[derive(Debug, Serialize)]
pub struct Snapshot {
    pub session_id: String,
    pub model_id: String,
    pub status: &'static str,
    pub answers: Vec<AnswerRecord>,
    pub queries_made: usize,
    /// Every agent action, e.g. `query:0`, `predict:1`.
    pub actions: Vec<String>,
    pub question: Option<Question>,
    pub result: Option<Prediction>,
}

#[derive(Debug, Serialize)]
pub struct ModelSummary {
    pub model_id: String,
    pub kind: ModelKind,
    pub kmax: usize,
    pub num_features: usize,
    /// Names of the questions the model may ask, in action order.
    pub questions: Vec<String>,
}

fn question(model: &ModelBundle, feature: usize, queries_made: usize) -> Question {
    let f = &model.meta.schema.features()[feature];
    Question {
        index: feature,
        feature: f.name.clone(),
        prompt: f.prompt.clone(),
        choices: f.choice_labels.clone(),
        number: queries_made + 1,
    }
}

fn step_body(s: &Session) -> StepBody {
    let q = &s.questionnaire;
    match q.current() {
        Step::Ask(f) => StepBody::Question(question(q.model(), *f, q.queries_made())),
        Step::Done(p) => StepBody::Prediction(p.clone()),
    }
}

fn snapshot(id: &str, s: &Session) -> Snapshot {
    let q = &s.questionnaire;
    let schema = &q.model().meta.schema;
    let (question, result) = match step_body(s) {
        StepBody::Question(x) => (Some(x), None),
        StepBody::Prediction(p) => (None, Some(p)),
    };
    Snapshot {
        session_id: id.to_string(),
        model_id: s.model_id.clone(),
        status: if q.is_finished() { "finished" } else { "awaiting-answer" },
        answers: q
            .answered()
            .iter()
            .map(|(&f, &c)| AnswerRecord {
                index: f,
                feature: schema.features()[f].name.clone(),
                choice: c,
                choice_label: schema.features()[f].choice_labels[c].clone(),
            })
            .collect(),
        queries_made: q.queries_made(),
        actions: q.actions().iter().map(|a| a.to_string()).collect(),
        question,
        result,
    }
}

pub async fn healthz() -> &'static str {
    "ok"
}

pub async fn list_models(State(state): State<Arc<AppState>>) -> Json<Vec<ModelSummary>> {
    Json(
        state
            .models
            .iter()
            .map(|(id, m)| ModelSummary {
                model_id: id.clone(),
                kind: m.meta.kind,
                kmax: m.meta.queries,
                num_features: m.meta.schema.len(),
                questions: m
                    .meta
                    .env
                    .allowed_features
                    .iter()
                    .map(|&f| m.meta.schema.features()[f].name.clone())
                    .collect(),
            })
            .collect(),
    )
}

pub async fn create_session(
    State(state): State<Arc<AppState>>,
    Json(body): Json<CreateSession>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let model = state
        .models
        .get(&body.model_id)
        .cloned()
        .ok_or_else(|| ApiError::UnknownModel(body.model_id.clone()))?;
    let (session_id, handle) = state.sessions.create(&body.model_id, model);
    let step = step_body(&handle.lock().expect("session lock"));
    Ok((StatusCode::CREATED, Json(Created { session_id, step })))
}

pub async fn answer(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(body): Json<AnswerBody>,
) -> Result<Json<StepBody>, ApiError> {
    let handle = state.sessions.get(&id).ok_or_else(|| ApiError::UnknownSession(id.clone()))?;
    let mut s = handle.lock().expect("session lock");
    s.questionnaire.answer(body.choice)?;
    Ok(Json(step_body(&s)))
}

pub async fn get_session(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Snapshot>, ApiError> {
    let handle = state.sessions.get(&id).ok_or_else(|| ApiError::UnknownSession(id.clone()))?;
    let s = handle.lock().expect("session lock");
    Ok(Json(snapshot(&id, &s)))
}

pub async fn delete_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> StatusCode {
    state.sessions.remove(&id);
    StatusCode::NO_CONTENT
}
