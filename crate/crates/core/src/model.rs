//! Trained-model bundles: a directory holding `model.json` (kind, query
//! budget, environment, schema, training settings), `weights.bin` and
//! `training_log.tsv`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataprep::{Schema, NUM_CLASSES};
use crate::dqn::DqnConfig;
use crate::environment::{EnvConfig, SurveyEnv};
use crate::error::{DataError, ModelError};
use crate::log::TrainingLog;
use crate::neuralnet::{load_weights, save_weights, Arch, Network};
use crate::policy::{FixedQueries, GreedyQ, Policy};
use crate::sl::SlConfig;

pub const MODEL_FILE: &str = "model.json";
pub const WEIGHTS_FILE: &str = "weights.bin";
pub const LOG_FILE: &str = "training_log.tsv";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Adaptive Q-network.
    Rl,
    /// Fixed-question classifier.
    Sl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub format_version: u32,
    pub kind: ModelKind,
    /// kmax for RL, k for SL.
    pub queries: usize,
    pub env: EnvConfig,
    pub schema: Schema,
    pub feature_order: Vec<usize>,
    pub arch: Arch,
    /// The trainer settings used, for provenance.
    pub training: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub meta: ModelMeta,
    pub net: Network<f32>,
    pub log: TrainingLog,
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("training settings serialize")
}

impl ModelBundle {
    pub fn rl(
        net: Network<f32>,
        log: TrainingLog,
        env: EnvConfig,
        schema: Schema,
        feature_order: Vec<usize>,
        config: &DqnConfig,
    ) -> Self {
        ModelBundle {
            meta: ModelMeta {
                format_version: BUNDLE_VERSION,
                kind: ModelKind::Rl,
                queries: env.kmax,
                arch: *net.arch(),
                env,
                schema,
                feature_order,
                training: to_value(config),
            },
            net,
            log,
        }
    }

    pub fn sl(
        net: Network<f32>,
        log: TrainingLog,
        schema: Schema,
        feature_order: Vec<usize>,
        config: &SlConfig,
    ) -> Result<Self, ModelError> {
        let env = EnvConfig::new(config.k, &feature_order)?;
        Ok(ModelBundle {
            meta: ModelMeta {
                format_version: BUNDLE_VERSION,
                kind: ModelKind::Sl,
                queries: config.k,
                arch: *net.arch(),
                env,
                schema,
                feature_order,
                training: to_value(config),
            },
            net,
            log,
        })
    }

    /// Table label, e.g. `RL network (kmax = 4)`.
    pub fn display_name(&self) -> String {
        match self.meta.kind {
            ModelKind::Rl => format!("RL network (kmax = {})", self.meta.queries),
            ModelKind::Sl => format!("SL network (k = {})", self.meta.queries),
        }
    }

    pub fn env(&self) -> Result<SurveyEnv, ModelError> {
        Ok(SurveyEnv::new(self.meta.schema.clone(), self.meta.env.clone())?)
    }

    /// Greedy policy for RL (optionally restricted to valid actions), the
    /// fixed-question policy for SL.
    pub fn policy(&self, masked: bool) -> Box<dyn Policy + '_> {
        match self.meta.kind {
            ModelKind::Rl => Box::new(GreedyQ { net: &self.net, masked }),
            ModelKind::Sl => Box::new(FixedQueries {
                net: &self.net,
                k: self.meta.queries,
            }),
        }
    }

    fn expected_arch(meta: &ModelMeta) -> Arch {
        let (m, c) = (meta.schema.len(), meta.schema.max_categories());
        match meta.kind {
            ModelKind::Rl => Arch::q_network(m, c, meta.queries, meta.env.classes),
            ModelKind::Sl => Arch::classifier(m, c, meta.queries, NUM_CLASSES),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<(), ModelError> {
        let io = |source| DataError::Io { path: dir.to_path_buf(), source };
        fs::create_dir_all(dir).map_err(io)?;
        let path = dir.join(MODEL_FILE);
        let text = serde_json::to_string_pretty(&self.meta).map_err(|source| DataError::Json {
            context: path.display().to_string(),
            source,
        })?;
        fs::write(&path, text + "\n").map_err(|source| DataError::Io { path, source })?;
        save_weights(&self.net, &dir.join(WEIGHTS_FILE))?;
        self.log.save(&dir.join(LOG_FILE))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, ModelError> {
        let invalid = |detail: String| ModelError::Invalid { path: dir.to_path_buf(), detail };
        let path = dir.join(MODEL_FILE);
        let text = fs::read_to_string(&path).map_err(|source| DataError::Io { path: path.clone(), source })?;
        let meta: ModelMeta = serde_json::from_str(&text).map_err(|source| DataError::Json {
            context: path.display().to_string(),
            source,
        })?;
        if meta.format_version != BUNDLE_VERSION {
            return Err(invalid(format!("unsupported format version {}", meta.format_version)));
        }
        meta.schema.validate()?;
        meta.env.validate()?;
        if meta.env.kmax != meta.queries {
            return Err(invalid(format!(
                "query budget {} but environment kmax {}",
                meta.queries, meta.env.kmax
            )));
        }
        if !crate::dataprep::is_permutation(&meta.feature_order, meta.schema.len()) {
            return Err(invalid("feature order is not a permutation of the schema".into()));
        }
        let expected = Self::expected_arch(&meta);
        if meta.arch != expected {
            return Err(invalid(format!("arch {:?} does not match {:?}", meta.arch, expected)));
        }
        let net = load_weights(&dir.join(WEIGHTS_FILE), Some(&expected))?;
        let log_path = dir.join(LOG_FILE);
        let log = if log_path.exists() {
            TrainingLog::load(&log_path)?
        } else {
            TrainingLog::default()
        };
        Ok(ModelBundle { meta, net, log })
    }
}
