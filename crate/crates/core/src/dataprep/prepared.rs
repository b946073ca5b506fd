//! A prepared dataset directory: `schema.json`, `train.csv`, `test.csv`,
//! `meta.json` (feature ranking and split settings), `ranking.tsv` and, for
//! synthetic data, the generating `spec.json`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{load_csv, rank_features, split, write_csv, Dataset, RankReport, Schema, SynthSpec};
use crate::error::DataError;

pub const SCHEMA_FILE: &str = "schema.json";
pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";
pub const META_FILE: &str = "meta.json";
pub const RANKING_FILE: &str = "ranking.tsv";
pub const SPEC_FILE: &str = "spec.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedMeta {
    /// Feature indices, most associated with the label first.
    pub feature_order: Vec<usize>,
    pub test_fraction: f64,
    pub seed: u64,
    pub train_rows: usize,
    pub test_rows: usize,
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub meta: PreparedMeta,
    pub train: Dataset,
    pub test: Dataset,
    pub ranking: RankReport,
    pub spec: Option<SynthSpec>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io { path: path.to_path_buf(), source }
}

impl Prepared {
    /// Ranks features on the full data, then splits it.
    pub fn build(data: Dataset, test_fraction: f64, seed: u64, spec: Option<SynthSpec>) -> Result<Self, DataError> {
        let (ranked, ranking) = rank_features(data)?;
        let (train, test) = split(&ranked, test_fraction, seed)?;
        Ok(Prepared {
            meta: PreparedMeta {
                feature_order: ranked.feature_order.clone(),
                test_fraction,
                seed,
                train_rows: train.len(),
                test_rows: test.len(),
            },
            train,
            test,
            ranking,
            spec,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.train.schema
    }

    pub fn save(&self, dir: &Path) -> Result<(), DataError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        self.schema().save(&dir.join(SCHEMA_FILE))?;
        write_csv(&dir.join(TRAIN_FILE), self.schema(), &self.train.records)?;
        write_csv(&dir.join(TEST_FILE), self.schema(), &self.test.records)?;
        write_json(&dir.join(META_FILE), &self.meta)?;
        let ranking = dir.join(RANKING_FILE);
        fs::write(&ranking, self.ranking.to_tsv()).map_err(io_err(&ranking))?;
        if let Some(spec) = &self.spec {
            spec.save(&dir.join(SPEC_FILE))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, DataError> {
        let schema = Schema::load(&dir.join(SCHEMA_FILE))?;
        let meta: PreparedMeta = read_json(&dir.join(META_FILE))?;
        let (train, _) = load_csv(&dir.join(TRAIN_FILE), &schema)?;
        let (test, _) = load_csv(&dir.join(TEST_FILE), &schema)?;
        let train = train.with_feature_order(meta.feature_order.clone())?;
        let test = test.with_feature_order(meta.feature_order.clone())?;
        let ranking_path = dir.join(RANKING_FILE);
        let text = fs::read_to_string(&ranking_path).map_err(io_err(&ranking_path))?;
        let ranking = RankReport::parse_tsv(&text)?;
        let spec_path = dir.join(SPEC_FILE);
        let spec = if spec_path.exists() { Some(SynthSpec::load(&spec_path)?) } else { None };
        Ok(Prepared { meta, train, test, ranking, spec })
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DataError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| DataError::Json {
        context: path.display().to_string(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, DataError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| DataError::Json {
        context: path.display().to_string(),
        source,
    })
}
