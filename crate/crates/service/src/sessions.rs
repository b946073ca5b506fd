//! In-memory session store. Each session sits behind its own mutex; the map
//! lock is only held to insert, look up or remove entries.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant};

use surveyq_core::model::ModelBundle;
use surveyq_core::questionnaire::Questionnaire;

#[derive(Debug)]
pub struct Session {
    pub model_id: String,
    pub questionnaire: Questionnaire,
    last_access: Instant,
}

pub type SessionHandle = Arc<Mutex<Session>>;

#[derive(Debug)]
pub struct SessionStore {
    ttl: Duration,
    sessions: RwLock<HashMap<String, SessionHandle>>,
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        SessionStore {
            ttl,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    /// Starts a questionnaire on `model` and returns the new session id.
    pub fn create(&self, model_id: &str, model: Arc<ModelBundle>) -> (String, SessionHandle) {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let handle = Arc::new(Mutex::new(Session {
            model_id: model_id.to_string(),
            questionnaire: Questionnaire::start(model),
            last_access: Instant::now(),
        }));
        self.sessions
            .write()
            .expect("session map lock")
            .insert(id.clone(), handle.clone());
        (id, handle)
    }

    /// Live session by id; expired sessions are dropped and reported missing.
    pub fn get(&self, id: &str) -> Option<SessionHandle> {
        let handle = self.sessions.read().expect("session map lock").get(id).cloned()?;
        let expired = {
            let mut s = handle.lock().expect("session lock");
            if s.last_access.elapsed() > self.ttl {
                true
            } else {
                s.last_access = Instant::now();
                false
            }
        };
        if expired {
            self.remove(id);
            return None;
        }
        Some(handle)
    }

    /// Idempotent.
    pub fn remove(&self, id: &str) {
        self.sessions.write().expect("session map lock").remove(id);
    }

    /// Drops every session idle for longer than the TTL; returns how many.
    pub fn sweep(&self) -> usize {
        let mut map = self.sessions.write().expect("session map lock");
        let before = map.len();
        map.retain(|_, h| h.lock().map(|s| s.last_access.elapsed() <= self.ttl).unwrap_or(false));
        before - map.len()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("session map lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
