use std::cmp::Ordering;
use std::fmt;

use super::{chi_square, Dataset, NUM_CLASSES};
use crate::error::DataError;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRank {
    pub feature: usize,
    pub name: String,
    pub num_categories: usize,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Per-feature χ² results in rank order (best first).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankReport(pub Vec<FeatureRank>);

impl RankReport {
    pub fn order(&self) -> Vec<usize> {
        self.0.iter().map(|r| r.feature).collect()
    }

    /// Tab-separated form: rank, feature index, name, categories, statistic, dof, p.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("rank\tfeature\tname\tnum_categories\tchi2\tdof\tp_value\n");
        for (i, r) in self.0.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{:.6}\t{}\t{:.6e}\n",
                i + 1,
                r.feature,
                r.name,
                r.num_categories,
                r.statistic,
                r.dof,
                r.p_value
            ));
        }
        out
    }

    /// Inverse of [`to_tsv`](Self::to_tsv) (values at the written precision).
    pub fn parse_tsv(text: &str) -> Result<Self, DataError> {
        let bad = |line: usize, what: &str| DataError::InvalidArgument(format!("ranking line {line}: {what}"));
        let mut lines = text.lines();
        if !lines.next().is_some_and(|h| h.starts_with("rank\tfeature")) {
            return Err(bad(1, "missing header"));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 7 {
                return Err(bad(i + 2, "expected 7 fields"));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad(i + 2, "bad integer"));
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 2, "bad number"));
            rows.push(FeatureRank {
                feature: int(f[1])?,
                name: f[2].to_string(),
                num_categories: int(f[3])?,
                statistic: num(f[4])?,
                dof: int(f[5])?,
                p_value: num(f[6])?,
            });
        }
        Ok(RankReport(rows))
    }
}

impl fmt::Display for RankReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.0.iter().map(|r| r.name.len()).max().unwrap_or(0).max(13);
        writeln!(
            f,
            "{:<8}  {:<width$}  {:>14}  {:>12}  {:>11}",
            "Question", "Variable Name", "Num Categories", "chi2", "p-value"
        )?;
        for (i, r) in self.0.iter().enumerate() {
            writeln!(
                f,
                "{:<8}  {:<width$}  {:>14}  {:>12.3}  {:>11.3e}",
                i + 1,
                r.name,
                r.num_categories,
                r.statistic,
                r.p_value
            )?;
        }
        Ok(())
    }
}

/// Ranks features by χ² association with the label: ascending p-value,
/// then descending statistic, then original index.
///
/// Categories that never occur are left out of a feature's table. A feature
/// (or label) that is constant across the dataset gets statistic 0, p = 1.
pub fn rank_features(dataset: Dataset) -> Result<(Dataset, RankReport), DataError> {
    if dataset.is_empty() {
        return Err(DataError::InvalidArgument("cannot rank an empty dataset".into()));
    }
    let mut ranks = Vec::with_capacity(dataset.num_features());
    for (i, f) in dataset.schema.features().iter().enumerate() {
        let mut table = vec![vec![0.0f64; NUM_CLASSES]; f.num_categories];
        for r in &dataset.records {
            table[r.features[i]][r.label] += 1.0;
        }
        let (statistic, dof, p_value) = match chi_square(&trim_empty(table)) {
            Ok(c) => (c.statistic, c.dof, c.p_value),
            Err(DataError::InvalidTable(_)) => (0.0, 0, 1.0),
            Err(e) => return Err(e),
        };
        ranks.push(FeatureRank {
            feature: i,
            name: f.name.clone(),
            num_categories: f.num_categories,
            statistic,
            dof,
            p_value,
        });
    }
    ranks.sort_by(compare_ranks);
    let report = RankReport(ranks);
    let dataset = dataset.with_feature_order(report.order())?;
    Ok((dataset, report))
}

pub(crate) fn compare_ranks(a: &FeatureRank, b: &FeatureRank) -> Ordering {
    a.p_value
        .total_cmp(&b.p_value)
        .then(b.statistic.total_cmp(&a.statistic))
        .then(a.feature.cmp(&b.feature))
}

fn trim_empty(table: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let cols = table.first().map_or(0, Vec::len);
    let keep_cols: Vec<usize> = (0..cols)
        .filter(|&j| table.iter().any(|r| r[j] > 0.0))
        .collect();
    table
        .into_iter()
        .filter(|r| r.iter().any(|&c| c > 0.0))
        .map(|r| keep_cols.iter().map(|&j| r[j]).collect())
        .collect()
}
