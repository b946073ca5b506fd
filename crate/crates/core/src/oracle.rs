//! Exact optimal play for synthetic specs: dynamic programming over answer
//! histories with the known class-conditional distributions, plus exact
//! evaluation of arbitrary policies by enumerating answer branches.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::dataprep::{encode_state, Schema, SynthSpec};
use crate::environment::{Action, EnvConfig};
use crate::error::OracleError;
use crate::policy::{Policy, PolicyView};

/// Upper bound on the product of category counts over the queryable features.
pub const MAX_HISTORIES: u128 = 1_000_000;

/// An answer history: the class posterior given the answers so far.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefNode {
    pub answered: BTreeMap<usize, usize>,
    pub posterior: Vec<f64>,
}

impl BeliefNode {
    pub fn root(spec: &SynthSpec) -> Self {
        BeliefNode {
            answered: BTreeMap::new(),
            posterior: spec.class_prior.clone(),
        }
    }

    /// P(feature = code | history).
    pub fn answer_prob(&self, spec: &SynthSpec, feature: usize, code: usize) -> f64 {
        self.posterior
            .iter()
            .enumerate()
            .map(|(y, &p)| p * spec.likelihood(feature, code, y))
            .sum()
    }

    /// The node after observing `feature = code`; `None` if that answer has
    /// probability zero here.
    pub fn child(&self, spec: &SynthSpec, feature: usize, code: usize) -> Option<BeliefNode> {
        let joint: Vec<f64> = self
            .posterior
            .iter()
            .enumerate()
            .map(|(y, &p)| p * spec.likelihood(feature, code, y))
            .collect();
        let z: f64 = joint.iter().sum();
        if z <= 0.0 {
            return None;
        }
        let mut answered = self.answered.clone();
        answered.insert(feature, code);
        Some(BeliefNode {
            answered,
            posterior: joint.iter().map(|p| p / z).collect(),
        })
    }

    /// Expected reward of predicting `class` now, ignoring timing rules.
    fn prediction_value(&self, config: &EnvConfig, class: usize) -> f64 {
        let p = self.posterior[class];
        config.r_correct * p + config.r_wrong * (1.0 - p)
    }
}

fn check(spec: &SynthSpec, config: &EnvConfig) -> Result<(), OracleError> {
    spec.validate()?;
    config.validate()?;
    if config.classes != spec.class_prior.len() {
        return Err(OracleError::Mismatch(format!(
            "{} classes in the environment, {} in the generating spec",
            config.classes,
            spec.class_prior.len()
        )));
    }
    if let Some(&f) = config.allowed_features.iter().find(|&&f| f >= spec.num_features()) {
        return Err(OracleError::Mismatch(format!(
            "allowed feature {f} but the generating spec has {} features",
            spec.num_features()
        )));
    }
    Ok(())
}

/// Exact optimal value and the optimal action for every reachable history.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub value: f64,
    config: EnvConfig,
    schema: Schema,
    // history key → (value, action index)
    table: HashMap<Vec<u8>, (f64, usize)>,
}

fn key(config: &EnvConfig, answered: &BTreeMap<usize, usize>) -> Vec<u8> {
    config
        .allowed_features
        .iter()
        .map(|f| answered.get(f).map_or(0, |&c| c as u8 + 1))
        .collect()
}

struct Solver<'a> {
    spec: &'a SynthSpec,
    config: &'a EnvConfig,
    table: HashMap<Vec<u8>, (f64, usize)>,
}

impl Solver<'_> {
    fn solve(&mut self, node: &BeliefNode) -> f64 {
        let k = key(self.config, &node.answered);
        if let Some(&(v, _)) = self.table.get(&k) {
            return v;
        }
        let cfg = self.config;
        let queries = node.answered.len();
        // Candidates in action-index order; strict improvement keeps the lowest index on ties.
        let mut best: Option<(f64, usize)> = None;
        let consider = |v: f64, a: usize, best: &mut Option<(f64, usize)>| {
            if best.map_or(true, |(b, _)| v > b) {
                *best = Some((v, a));
            }
        };
        if queries < cfg.kmax {
            for (slot, &f) in cfg.allowed_features.iter().enumerate() {
                if node.answered.contains_key(&f) {
                    continue;
                }
                let mut v = cfg.cost_query;
                for code in 0..self.spec.features[f].feature.num_categories {
                    if let Some(child) = node.child(self.spec, f, code) {
                        v += cfg.gamma * node.answer_prob(self.spec, f, code) * self.solve(&child);
                    }
                }
                consider(v, slot, &mut best);
            }
        }
        if queries >= cfg.min_queries {
            for class in 0..cfg.classes {
                consider(node.prediction_value(cfg, class), cfg.kmax + class, &mut best);
            }
        }
        // Unreachable with a valid config (kmax ≥ min_queries and every unanswered
        // allowed feature queryable), but keep the violation value as a floor.
        let (v, a) = best.unwrap_or((cfg.r_wrong, cfg.kmax));
        self.table.insert(k, (v, a));
        v
    }
}

/// Solves the Bellman optimality recursion over answer histories.
pub fn optimal_value(spec: &SynthSpec, config: &EnvConfig) -> Result<OracleSolution, OracleError> {
    check(spec, config)?;
    let size: u128 = config
        .allowed_features
        .iter()
        .map(|&f| spec.features[f].feature.num_categories as u128)
        .product();
    if size > MAX_HISTORIES {
        return Err(OracleError::StateSpaceTooLarge {
            size,
            bound: MAX_HISTORIES,
        });
    }
    let mut solver = Solver {
        spec,
        config,
        table: HashMap::new(),
    };
    let value = solver.solve(&BeliefNode::root(spec));
    Ok(OracleSolution {
        value,
        config: config.clone(),
        schema: spec.schema()?,
        table: solver.table,
    })
}

impl OracleSolution {
    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    /// Number of histories solved.
    pub fn num_histories(&self) -> usize {
        self.table.len()
    }

    /// Optimal value and action index at `answered`, if that history was solved.
    pub fn lookup(&self, answered: &BTreeMap<usize, usize>) -> Option<(f64, usize)> {
        self.table.get(&key(&self.config, answered)).copied()
    }

    pub fn policy(&self) -> OraclePolicy<'_> {
        OraclePolicy { solution: self }
    }

    /// The optimal policy as an indented decision tree, following only
    /// answers with nonzero probability.
    pub fn tree(&self, spec: &SynthSpec) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "value {:.6}", self.value);
        self.write_node(spec, &BeliefNode::root(spec), 0, &mut out);
        out
    }

    fn write_node(&self, spec: &SynthSpec, node: &BeliefNode, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        let Some((v, a)) = self.lookup(&node.answered) else {
            return;
        };
        match self.config.action(a).expect("solved action in range") {
            Action::Predict(class) => {
                let _ = writeln!(
                    out,
                    "{pad}predict {class}  (P = {:.4}, V = {v:.4})",
                    node.posterior[class]
                );
            }
            Action::Query(slot) => {
                let f = self.config.allowed_features[slot];
                let feature = &self.schema.features()[f];
                let _ = writeln!(out, "{pad}ask {}  (V = {v:.4})", feature.name);
                for code in 0..feature.num_categories {
                    if let Some(child) = node.child(spec, f, code) {
                        let _ = writeln!(
                            out,
                            "{pad}  {} = {}  (p = {:.4})",
                            feature.name,
                            feature.choice_labels[code],
                            node.answer_prob(spec, f, code)
                        );
                        self.write_node(spec, &child, depth + 2, out);
                    }
                }
            }
        }
    }
}

/// Plays the oracle's optimal action for the current answer history.
#[derive(Debug, Clone, Copy)]
pub struct OraclePolicy<'a> {
    solution: &'a OracleSolution,
}

impl Policy for OraclePolicy<'_> {
    fn act(&self, view: &PolicyView<'_>, config: &EnvConfig) -> usize {
        match self.solution.lookup(view.answered) {
            Some((_, a)) => a,
            // Histories the oracle never reaches (zero-probability answers).
            None if view.queries_made >= config.min_queries || view.queries_made >= config.kmax => config.kmax,
            None => 0,
        }
    }
}

/// Exact expected return of a deterministic policy, enumerating every answer
/// branch weighted by the generating spec.
pub fn policy_value(policy: &dyn Policy, spec: &SynthSpec, config: &EnvConfig) -> Result<f64, OracleError> {
    check(spec, config)?;
    let schema = spec.schema()?;
    Ok(branch_value(policy, spec, config, &schema, &BeliefNode::root(spec), 0))
}

fn branch_value(
    policy: &dyn Policy,
    spec: &SynthSpec,
    config: &EnvConfig,
    schema: &Schema,
    node: &BeliefNode,
    queries_made: usize,
) -> f64 {
    let observation = encode_state(schema, &node.answered).expect("answers within schema");
    let view = PolicyView {
        observation: &observation,
        answered: &node.answered,
        queries_made,
    };
    let action = config
        .action(policy.act(&view, config))
        .expect("policy returned an action index in range");
    match action {
        Action::Predict(_) if queries_made < config.min_queries => config.r_wrong,
        Action::Predict(class) => node.prediction_value(config, class),
        Action::Query(_) if queries_made >= config.kmax => config.r_wrong,
        Action::Query(slot) => {
            let f = config.allowed_features[slot];
            let rest = if node.answered.contains_key(&f) {
                branch_value(policy, spec, config, schema, node, queries_made + 1)
            } else {
                (0..spec.features[f].feature.num_categories)
                    .filter_map(|code| {
                        let child = node.child(spec, f, code)?;
                        let p = node.answer_prob(spec, f, code);
                        Some(p * branch_value(policy, spec, config, schema, &child, queries_made + 1))
                    })
                    .sum()
            };
            config.cost_query + config.gamma * rest
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataprep::binary_feature;
    use std::collections::hash_map::DefaultHasher;
    use std::hash::{Hash, Hasher};

    fn perfect() -> SynthSpec {
        SynthSpec {
            class_prior: vec![0.5, 0.5],
            features: vec![binary_feature("decisive", [0.0, 1.0]), binary_feature("noise", [0.5, 0.5])],
        }
    }

    fn independent() -> SynthSpec {
        SynthSpec {
            class_prior: vec![0.5, 0.5],
            features: vec![binary_feature("a", [0.3, 0.3]), binary_feature("b", [0.8, 0.8])],
        }
    }

    fn noisy3() -> SynthSpec {
        SynthSpec {
            class_prior: vec![0.4, 0.6],
            features: vec![
                binary_feature("a", [0.2, 0.9]),
                binary_feature("b", [0.7, 0.4]),
                binary_feature("c", [0.5, 0.55]),
            ],
        }
    }

    fn cfg(kmax: usize, order: &[usize]) -> EnvConfig {
        EnvConfig::new(kmax, order).unwrap()
    }

    /// Deterministic pseudo-random choice among valid actions per history.
    struct RandomPolicy(u64);
    impl Policy for RandomPolicy {
        fn act(&self, view: &PolicyView<'_>, config: &EnvConfig) -> usize {
            let mut h = DefaultHasher::new();
            (self.0, view.answered, view.queries_made).hash(&mut h);
            let valid: Vec<usize> = (0..config.num_actions())
                .filter(|&i| config.valid_mask(view.queries_made)[i])
                .collect();
            valid[(h.finish() % valid.len() as u64) as usize]
        }
    }

    struct AskThenFollow;
    impl Policy for AskThenFollow {
        fn act(&self, view: &PolicyView<'_>, config: &EnvConfig) -> usize {
            if view.queries_made < 2 {
                view.queries_made
            } else {
                config.kmax + view.answered[&0]
            }
        }
    }

    #[test]
    fn fixture_values() {
        let c = cfg(2, &[0, 1]);
        assert!((optimal_value(&perfect(), &c).unwrap().value - 0.90).abs() < 1e-9);
        assert!((optimal_value(&independent(), &c).unwrap().value + 0.10).abs() < 1e-9);
        let free = EnvConfig { cost_query: 0.0, ..c };
        assert!((optimal_value(&perfect(), &free).unwrap().value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn optimal_policy_value_is_consistent() {
        for (spec, order) in [(perfect(), vec![0, 1]), (noisy3(), vec![0, 1, 2])] {
            for kmax in 2..=order.len() {
                let c = cfg(kmax, &order);
                let sol = optimal_value(&spec, &c).unwrap();
                let v = policy_value(&sol.policy(), &spec, &c).unwrap();
                assert!((v - sol.value).abs() < 1e-12, "{v} vs {}", sol.value);
            }
        }
    }

    #[test]
    fn non_adaptive_policy_on_perfect_spec() {
        let c = cfg(2, &[0, 1]);
        assert!((policy_value(&AskThenFollow, &perfect(), &c).unwrap() - 0.90).abs() < 1e-12);
    }

    #[test]
    fn immediate_prediction_is_a_violation() {
        struct Hasty;
        impl Policy for Hasty {
            fn act(&self, _: &PolicyView<'_>, config: &EnvConfig) -> usize {
                config.kmax
            }
        }
        assert_eq!(policy_value(&Hasty, &perfect(), &cfg(2, &[0, 1])).unwrap(), -1.0);
    }

    #[test]
    fn dominates_random_policies() {
        for (spec, order) in [(perfect(), vec![0, 1]), (independent(), vec![0, 1]), (noisy3(), vec![0, 1, 2])] {
            let c = cfg(2, &order[..2]);
            let best = optimal_value(&spec, &c).unwrap().value;
            for seed in 0..50 {
                let v = policy_value(&RandomPolicy(seed), &spec, &c).unwrap();
                assert!(v <= best + 1e-9, "seed {seed}: {v} > {best}");
            }
        }
    }

    #[test]
    fn monotone_in_query_cost() {
        let base = cfg(3, &[0, 1, 2]);
        let mut last = f64::INFINITY;
        for i in 0..=20 {
            let c = EnvConfig { cost_query: -0.01 * i as f64, ..base.clone() };
            let v = optimal_value(&noisy3(), &c).unwrap().value;
            assert!(v <= last + 1e-12);
            last = v;
        }
    }

    #[test]
    fn certain_label_needs_no_questions() {
        let spec = SynthSpec { class_prior: vec![1.0, 0.0], ..noisy3() };
        let c = EnvConfig { min_queries: 0, ..cfg(2, &[0, 1]) };
        let sol = optimal_value(&spec, &c).unwrap();
        assert_eq!(sol.value, 1.0);
        assert_eq!(sol.lookup(&BTreeMap::new()).unwrap().1, c.kmax);
    }

    #[test]
    fn renormalized_spec_has_same_value() {
        let spec = noisy3();
        let mut scaled = spec.clone();
        for f in &mut scaled.features {
            for row in &mut f.class_conditional {
                let doubled: Vec<f64> = row.iter().map(|p| 2.0 * p).collect();
                let z: f64 = doubled.iter().sum();
                *row = doubled.iter().map(|p| p / z).collect();
            }
        }
        let c = cfg(3, &[0, 1, 2]);
        let a = optimal_value(&spec, &c).unwrap().value;
        let b = optimal_value(&scaled, &c).unwrap().value;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn posteriors_sum_to_one() {
        let spec = noisy3();
        let root = BeliefNode::root(&spec);
        for code in 0..2 {
            let child = root.child(&spec, 0, code).unwrap();
            assert!((child.posterior.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let grand = child.child(&spec, 1, 1 - code).unwrap();
            assert!((grand.posterior.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(root.child(&perfect(), 0, 1).unwrap().posterior == vec![0.0, 1.0]);
    }

    #[test]
    fn state_space_bound_is_enforced() {
        let features = (0..7)
            .map(|i| crate::dataprep::FeatureDistribution {
                feature: crate::dataprep::FeatureSchema {
                    name: format!("f{i}"),
                    num_categories: 10,
                    prompt: "?".into(),
                    choice_labels: (0..10).map(|c| c.to_string()).collect(),
                },
                class_conditional: vec![vec![0.1; 10], vec![0.1; 10]],
            })
            .collect();
        let spec = SynthSpec { class_prior: vec![0.5, 0.5], features };
        let c = cfg(7, &[0, 1, 2, 3, 4, 5, 6]);
        assert!(matches!(
            optimal_value(&spec, &c),
            Err(OracleError::StateSpaceTooLarge { size: 10_000_000, .. })
        ));
    }

    #[test]
    fn mismatched_config_is_rejected() {
        let c = EnvConfig { allowed_features: vec![0, 5], ..cfg(2, &[0, 1]) };
        assert!(matches!(optimal_value(&perfect(), &c), Err(OracleError::Mismatch(_))));
    }

    #[test]
    fn tree_dump_follows_the_policy() {
        let spec = perfect();
        let sol = optimal_value(&spec, &cfg(2, &[0, 1])).unwrap();
        let tree = sol.tree(&spec);
        assert!(tree.starts_with("value 0.900000"));
        assert!(tree.contains("ask decisive"));
        assert!(tree.contains("predict 1  (P = 1.0000"));
        assert_eq!(tree.matches("predict").count(), 4);
    }
}
