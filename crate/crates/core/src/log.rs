//! Append-only training log, stored as tab-separated text with columns
//! `step, episode_return, epsilon, lr, loss, eval_return`. Empty cells are
//! blank.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::DataError;

pub const LOG_HEADER: &str = "step\tepisode_return\tepsilon\tlr\tloss\teval_return";

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LogRow {
    pub step: u64,
    pub episode_return: Option<f64>,
    pub epsilon: Option<f64>,
    pub lr: Option<f64>,
    pub loss: Option<f64>,
    pub eval_return: Option<f64>,
}

/// A point on the training/evaluation reward curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub step: u64,
    /// Mean of the most recent training episode returns.
    pub train_return: Option<f64>,
    pub eval_return: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    pub rows: Vec<LogRow>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn parse_cell(s: &str, line: usize) -> Result<Option<f64>, DataError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| DataError::InvalidArgument(format!("log line {line}: bad number '{s}'")))
}

impl TrainingLog {
    pub fn push(&mut self, row: LogRow) {
        self.rows.push(row);
    }

    pub fn episode_returns(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().filter_map(|r| r.episode_return)
    }

    pub fn eval_returns(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.rows.iter().filter_map(|r| r.eval_return.map(|e| (r.step, e)))
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(LOG_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                r.step,
                cell(r.episode_return),
                cell(r.epsilon),
                cell(r.lr),
                cell(r.loss),
                cell(r.eval_return)
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, DataError> {
        let mut lines = text.lines();
        if lines.next().map(str::trim_end) != Some(LOG_HEADER) {
            return Err(DataError::InvalidArgument("training log header mismatch".into()));
        }
        let mut log = TrainingLog::default();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 6 {
                return Err(DataError::InvalidArgument(format!(
                    "log line {}: expected 6 fields, found {}",
                    i + 2,
                    f.len()
                )));
            }
            let step = f[0]
                .parse()
                .map_err(|_| DataError::InvalidArgument(format!("log line {}: bad step", i + 2)))?;
            log.push(LogRow {
                step,
                episode_return: parse_cell(f[1], i + 2)?,
                epsilon: parse_cell(f[2], i + 2)?,
                lr: parse_cell(f[3], i + 2)?,
                loss: parse_cell(f[4], i + 2)?,
                eval_return: parse_cell(f[5], i + 2)?,
            });
        }
        Ok(log)
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        fs::write(path, self.to_tsv()).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Reward curves: at every row carrying an episode or evaluation return,
    /// the moving average of the last `window` training returns and the
    /// evaluation return (if any).
    pub fn curves(&self, window: usize) -> Vec<CurvePoint> {
        let window = window.max(1);
        let mut recent = std::collections::VecDeque::with_capacity(window);
        let mut sum = 0.0;
        let mut out = Vec::new();
        for r in &self.rows {
            if let Some(ret) = r.episode_return {
                if recent.len() == window {
                    sum -= recent.pop_front().unwrap_or(0.0);
                }
                recent.push_back(ret);
                sum += ret;
            }
            if r.episode_return.is_some() || r.eval_return.is_some() {
                out.push(CurvePoint {
                    step: r.step,
                    train_return: (!recent.is_empty()).then(|| sum / recent.len() as f64),
                    eval_return: r.eval_return,
                });
            }
        }
        out
    }
}
