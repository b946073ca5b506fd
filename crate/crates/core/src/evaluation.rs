//! Scoring policies on class-balanced held-out episodes, and Table-style
//! result formatting.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataprep::{BalancedSampler, Dataset, Record};
use crate::environment::{Action, EnvConfig, Outcome, SurveyEnv};
use crate::error::DataError;
use crate::policy::{Policy, PolicyView};

/// Default number of evaluation episodes.
pub const DEFAULT_EPISODES: usize = 2000;

/// Everything that happened in one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeReport {
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
    pub queries: usize,
    pub outcome: Outcome,
}

impl EpisodeReport {
    pub fn episode_return(&self) -> f64 {
        crate::environment::episode_return(&self.rewards)
    }
}

/// Plays `policy` on `record` until the episode ends.
pub fn run_episode(env: &SurveyEnv, policy: &dyn Policy, record: Record) -> EpisodeReport {
    let mut state = env.reset(record);
    let mut actions = Vec::new();
    let mut rewards = Vec::new();
    while !state.is_terminal() {
        let view = PolicyView {
            observation: state.observation(),
            answered: state.answered(),
            queries_made: state.queries_made(),
        };
        let action = env
            .config()
            .action(policy.act(&view, env.config()))
            .expect("policy returned an action index in range");
        let step = env.step(&mut state, action).expect("episode not terminal");
        actions.push(action);
        rewards.push(step.reward);
    }
    EpisodeReport {
        actions,
        rewards,
        queries: state.queries_made(),
        outcome: state.outcome().expect("terminal"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub avg_queries: f64,
    pub avg_return: f64,
    pub n_episodes: usize,
    pub violation_count: usize,
}

impl Metrics {
    pub fn from_episodes(episodes: &[EpisodeReport]) -> Metrics {
        let n = episodes.len();
        if n == 0 {
            return Metrics {
                accuracy: 0.0,
                avg_queries: 0.0,
                avg_return: 0.0,
                n_episodes: 0,
                violation_count: 0,
            };
        }
        let mut correct = 0usize;
        let mut queries = 0usize;
        let mut violations = 0usize;
        let mut total = 0.0;
        for e in episodes {
            correct += e.outcome.is_correct() as usize;
            violations += e.outcome.is_violation() as usize;
            queries += e.queries;
            total += e.episode_return();
        }
        Metrics {
            accuracy: correct as f64 / n as f64,
            avg_queries: queries as f64 / n as f64,
            avg_return: total / n as f64,
            n_episodes: n,
            violation_count: violations,
        }
    }

    /// Mean return implied by accuracy and query count alone:
    /// `r_correct·acc + r_wrong·(1 − acc) + cost_query·avg_queries`.
    pub fn implied_return(&self, config: &EnvConfig) -> f64 {
        config.r_correct * self.accuracy
            + config.r_wrong * (1.0 - self.accuracy)
            + config.cost_query * self.avg_queries
    }

    /// `|avg_return − implied_return|`; zero up to rounding for every batch.
    pub fn identity_residual(&self, config: &EnvConfig) -> f64 {
        (self.avg_return - self.implied_return(config)).abs()
    }
}

/// Runs `n_episodes` episodes on class-balanced draws from `test`.
/// Deterministic for a fixed seed whatever the thread count.
pub fn evaluate(
    policy: &dyn Policy,
    env: &SurveyEnv,
    test: &Dataset,
    n_episodes: usize,
    seed: u64,
) -> Result<Metrics, DataError> {
    Ok(Metrics::from_episodes(&evaluate_episodes(policy, env, test, n_episodes, seed)?))
}

/// Like [`evaluate`] but returns every episode.
pub fn evaluate_episodes(
    policy: &dyn Policy,
    env: &SurveyEnv,
    test: &Dataset,
    n_episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeReport>, DataError> {
    let sampler = BalancedSampler::new(test)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records: Vec<Record> = (0..n_episodes).map(|_| sampler.draw(&mut rng).clone()).collect();
    Ok(records
        .into_par_iter()
        .map(|r| run_episode(env, policy, r))
        .collect())
}

fn fmt_queries(q: f64) -> String {
    if (q - q.round()).abs() < 1e-12 {
        format!("{}", q.round() as i64)
    } else {
        format!("{q:.2}")
    }
}

const TABLE_HEADER: [&str; 4] = ["Model", "Accuracy", "Avg. Queries", "Avg. Episode Reward"];

/// Aligned plain-text comparison table, values rounded to two decimals.
pub fn results_table(rows: &[(String, Metrics)]) -> String {
    let name_w = rows
        .iter()
        .map(|(n, _)| n.chars().count())
        .chain(std::iter::once(TABLE_HEADER[0].len()))
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<name_w$}  {:>8}  {:>12}  {:>19}",
        TABLE_HEADER[0], TABLE_HEADER[1], TABLE_HEADER[2], TABLE_HEADER[3]
    );
    for (name, m) in rows {
        let _ = writeln!(
            out,
            "{:<name_w$}  {:>8.2}  {:>12}  {:>19}",
            name,
            m.accuracy,
            fmt_queries(m.avg_queries),
            format!("{:+.2}", m.avg_return)
        );
    }
    out
}

const TSV_HEADER: &str = "model\taccuracy\tavg_queries\tavg_return\tn_episodes\tviolations";

/// Machine-readable rows at full precision.
pub fn results_tsv(rows: &[(String, Metrics)]) -> String {
    let mut out = String::from(TSV_HEADER);
    out.push('\n');
    for (name, m) in rows {
        let _ = writeln!(
            out,
            "{name}\t{}\t{}\t{}\t{}\t{}",
            m.accuracy, m.avg_queries, m.avg_return, m.n_episodes, m.violation_count
        );
    }
    out
}

pub fn parse_results_tsv(text: &str) -> Result<Vec<(String, Metrics)>, DataError> {
    let bad = |line: usize, what: &str| DataError::InvalidArgument(format!("results line {line}: {what}"));
    let mut lines = text.lines();
    if lines.next() != Some(TSV_HEADER) {
        return Err(bad(1, "header mismatch"));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split('\t').collect();
            if f.len() != 6 {
                return Err(bad(i + 2, "expected 6 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 2, "bad number"));
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad(i + 2, "bad count"));
            Ok((
                f[0].to_string(),
                Metrics {
                    accuracy: num(f[1])?,
                    avg_queries: num(f[2])?,
                    avg_return: num(f[3])?,
                    n_episodes: int(f[4])?,
                    violation_count: int(f[5])?,
                },
            ))
        })
        .collect()
}
