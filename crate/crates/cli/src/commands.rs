use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use surveyq_core::dataprep::{load_csv, synth_generate, Prepared, RankReport, Schema, SynthSpec};
use surveyq_core::dqn::{DqnConfig, DqnTrainer};
use surveyq_core::environment::EnvConfig;
use surveyq_core::evaluation::{evaluate, results_table, results_tsv};
use surveyq_core::log::TrainingLog;
use surveyq_core::model::{ModelBundle, LOG_FILE};
use surveyq_core::oracle::{optimal_value, policy_value};
use surveyq_core::questionnaire::{Questionnaire, Step};
use surveyq_core::sl::{self, SlConfig};
use surveyq_service::ServiceConfig;

use crate::config::overlay;
use crate::{usage, CurvesArgs, EvalArgs, OracleArgs, PrepareArgs, ServeArgs, SurveyArgs, SynthArgs, TrainRlArgs, TrainSlArgs};

const MIN_QUERIES: usize = 2;

fn check_fraction(f: f64) -> Result<()> {
    if !(f > 0.0 && f < 1.0) {
        return Err(usage(format!("--test-frac must be strictly between 0 and 1, got {f}")));
    }
    Ok(())
}

fn check_budget(flag: &str, k: usize, num_features: usize) -> Result<()> {
    if k < MIN_QUERIES {
        return Err(usage(format!(
            "{flag} {k} is below the {MIN_QUERIES} queries every episode must make before predicting"
        )));
    }
    if k > num_features {
        return Err(usage(format!("{flag} {k} exceeds the {num_features} features in the data")));
    }
    Ok(())
}

/// Ranking in the layout of a question list: rank, variable, categories,
/// then the test statistics.
fn rank_table(report: &RankReport) -> String {
    let name_w = report.0.iter().map(|r| r.name.len()).chain([8]).max().unwrap_or(8);
    let mut out = format!(
        "{:>8}  {:<name_w$}  {:>14}  {:>12}  {:>3}  {:>10}\n",
        "Question", "Variable", "Num Categories", "chi2", "dof", "p-value"
    );
    for (i, r) in report.0.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>8}  {:<name_w$}  {:>14}  {:>12.4}  {:>3}  {:>10.3e}",
            i + 1,
            r.name,
            r.num_categories,
            r.statistic,
            r.dof,
            r.p_value
        );
    }
    out
}

fn save_prepared(prepared: &Prepared, out: &Path) -> Result<()> {
    prepared.save(out).with_context(|| format!("writing {}", out.display()))?;
    print!("{}", rank_table(&prepared.ranking));
    println!(
        "train {} rows, test {} rows -> {}",
        prepared.meta.train_rows,
        prepared.meta.test_rows,
        out.display()
    );
    Ok(())
}

pub fn prepare(a: PrepareArgs) -> Result<()> {
    check_fraction(a.test_frac)?;
    let schema = Schema::load(&a.schema)?;
    let (data, report) = load_csv(&a.csv, &schema)?;
    eprintln!(
        "read {} rows: kept {}, dropped {}",
        report.rows_read, report.rows_kept, report.rows_dropped
    );
    save_prepared(&Prepared::build(data, a.test_frac, a.seed, None)?, &a.out)
}

pub fn synth(a: SynthArgs) -> Result<()> {
    check_fraction(a.test_frac)?;
    if a.n == 0 {
        return Err(usage("--n must be positive"));
    }
    let spec = SynthSpec::load(&a.spec)?;
    let data = synth_generate(&spec, a.n, a.seed)?;
    save_prepared(&Prepared::build(data, a.test_frac, a.split_seed, Some(spec))?, &a.out)
}

fn load_prepared(dir: &Path) -> Result<Prepared> {
    Prepared::load(dir).with_context(|| format!("loading dataset {}", dir.display()))
}

fn load_model(dir: &Path) -> Result<ModelBundle> {
    ModelBundle::load(dir).with_context(|| format!("loading model {}", dir.display()))
}

pub fn train_rl(a: TrainRlArgs) -> Result<()> {
    let prepared = load_prepared(&a.data)?;
    check_budget("--kmax", a.kmax, prepared.schema().len())?;
    let mut config = overlay(DqnConfig::default(), a.config.as_deref())?;
    if let Some(steps) = a.steps {
        config.total_steps = steps;
        // A shortened run keeps the usual proportion of exploration.
        if a.eps_horizon.is_none() && config.eps_horizon > steps {
            config.eps_horizon = (steps / 2).max(1);
        }
    }
    if let Some(h) = a.eps_horizon {
        config.eps_horizon = h;
    }
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(e) = a.eval_every {
        config.eval_every = e;
    }
    config.mask_actions |= a.mask_actions;
    config.keep_best &= !a.keep_last;
    config.validate().map_err(|e| usage(e.to_string()))?;

    let env = EnvConfig::new(a.kmax, &prepared.meta.feature_order)?;
    let mut trainer = DqnTrainer::new(config.clone(), env.clone(), &prepared.train)?;
    let report_every = (config.total_steps / 10).max(1);
    while !trainer.is_done() {
        trainer.step()?;
        if !a.quiet && trainer.steps() % report_every == 0 {
            let eval = trainer.log().eval_returns().last().map(|(_, r)| r);
            eprintln!(
                "step {:>7}/{}  eps {:.3}  lr {:.2e}  last eval {}",
                trainer.steps(),
                config.total_steps,
                config.epsilon(trainer.steps()),
                config.learning_rate(trainer.steps()),
                eval.map_or("-".into(), |r| format!("{r:+.3}"))
            );
        }
    }
    let best = trainer.best_eval();
    let (net, log) = trainer.finish();
    let bundle = ModelBundle::rl(net, log, env, prepared.schema().clone(), prepared.meta.feature_order.clone(), &config);
    bundle.save(&a.out)?;
    println!(
        "{} trained for {} steps{} -> {}",
        bundle.display_name(),
        config.total_steps,
        best.map_or(String::new(), |b| format!(" (best training eval {b:+.3})")),
        a.out.display()
    );
    Ok(())
}

pub fn train_sl(a: TrainSlArgs) -> Result<()> {
    let prepared = load_prepared(&a.data)?;
    check_budget("--k", a.k, prepared.schema().len())?;
    let mut config = overlay(SlConfig::new(a.k), a.config.as_deref())?;
    config.k = a.k;
    if let Some(e) = a.epochs {
        config.epochs = e;
    }
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    config.validate(prepared.schema().len()).map_err(|e| usage(e.to_string()))?;

    let (net, log) = sl::train_sl(&config, &prepared.train)?;
    if !a.quiet {
        for row in &log.rows {
            eprintln!(
                "epoch {:>3}  lr {:.2e}  loss {:.4}",
                row.step,
                row.lr.unwrap_or(f64::NAN),
                row.loss.unwrap_or(f64::NAN)
            );
        }
    }
    let bundle = ModelBundle::sl(net, log, prepared.schema().clone(), prepared.meta.feature_order.clone(), &config)?;
    bundle.save(&a.out)?;
    println!("{} trained for {} epochs -> {}", bundle.display_name(), config.epochs, a.out.display());
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<()> {
    if a.models.is_empty() {
        return Err(usage("--models needs at least one model directory"));
    }
    if a.episodes == 0 {
        return Err(usage("--episodes must be positive"));
    }
    let prepared = load_prepared(&a.data)?;
    let mut rows = Vec::new();
    for dir in &a.models {
        let model = load_model(dir)?;
        if &model.meta.schema != prepared.schema() {
            bail!("model {} was trained on a different schema than {}", dir.display(), a.data.display());
        }
        let env = model.env()?;
        let metrics = evaluate(model.policy(a.masked).as_ref(), &env, &prepared.test, a.episodes, a.seed)?;
        let residual = metrics.identity_residual(&model.meta.env);
        if residual > 1e-9 {
            bail!("reward accounting mismatch for {} (residual {residual:e})", dir.display());
        }
        rows.push((model.display_name(), metrics));
    }
    print!("{}", results_table(&rows));
    if let Some(path) = &a.tsv {
        fs::write(path, results_tsv(&rows)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

pub fn oracle(a: OracleArgs) -> Result<()> {
    let spec = SynthSpec::load(&a.spec)?;
    let schema = spec.schema()?;
    if let Some(dir) = &a.check {
        let model = load_model(dir)?;
        if model.meta.schema != schema {
            bail!("model {} does not match the features of {}", dir.display(), a.spec.display());
        }
        if a.kmax.is_some_and(|k| k != model.meta.env.kmax) {
            return Err(usage(format!("--kmax disagrees with the model's budget {}", model.meta.env.kmax)));
        }
        let solution = optimal_value(&spec, &model.meta.env)?;
        let achieved = policy_value(model.policy(false).as_ref(), &spec, &model.meta.env)?;
        println!("oracle value  {:+.6}", solution.value);
        println!("model value   {achieved:+.6}  ({})", model.display_name());
        println!("gap           {:.6}", solution.value - achieved);
        if !a.no_tree {
            print!("{}", solution.tree(&spec));
        }
        return Ok(());
    }
    let kmax = a.kmax.ok_or_else(|| usage("--kmax is required unless --check is given"))?;
    let order = match &a.data {
        Some(dir) => {
            let prepared = load_prepared(dir)?;
            if prepared.schema() != &schema {
                bail!("dataset {} does not match the features of {}", dir.display(), a.spec.display());
            }
            prepared.meta.feature_order
        }
        None => spec.expected_order(10_000.0),
    };
    check_budget("--kmax", kmax, order.len())?;
    let solution = optimal_value(&spec, &EnvConfig::new(kmax, &order)?)?;
    let names: Vec<&str> = order[..kmax].iter().map(|&f| schema.features()[f].name.as_str()).collect();
    println!("queryable features: {}", names.join(", "));
    if a.no_tree {
        println!("value {:.6}", solution.value);
    } else {
        print!("{}", solution.tree(&spec));
    }
    Ok(())
}

/// Reads a 1-based choice number or a choice label.
fn parse_choice(input: &str, labels: &[String]) -> Option<usize> {
    let input = input.trim();
    if let Ok(n) = input.parse::<usize>() {
        return (1..=labels.len()).contains(&n).then(|| n - 1);
    }
    labels.iter().position(|l| l.eq_ignore_ascii_case(input))
}

pub fn survey(a: SurveyArgs) -> Result<()> {
    let model = Arc::new(load_model(&a.model)?);
    let mut q = Questionnaire::start(model.clone());
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    let mut out = io::stdout().lock();
    writeln!(out, "{} — answer with a number or a choice; 'q' quits.", model.display_name())?;
    while let Step::Ask(feature) = q.current().clone() {
        let f = &model.meta.schema.features()[feature];
        writeln!(out, "\nQuestion {}: {}", q.queries_made() + 1, if f.prompt.is_empty() { &f.name } else { &f.prompt })?;
        for (i, label) in f.choice_labels.iter().enumerate() {
            writeln!(out, "  {}) {label}", i + 1)?;
        }
        loop {
            write!(out, "> ")?;
            out.flush()?;
            let line = lines.next().ok_or_else(|| anyhow!("input ended before the survey finished"))??;
            if line.trim() == "q" {
                writeln!(out, "survey abandoned")?;
                return Ok(());
            }
            match parse_choice(&line, &f.choice_labels) {
                Some(choice) => {
                    q.answer(choice)?;
                    break;
                }
                None => writeln!(out, "  please enter 1-{} or one of the choices", f.choice_labels.len())?,
            }
        }
    }
    if let Step::Done(p) = q.current() {
        writeln!(out, "\nPrediction: {}, after {} questions", p.label, p.queries_used)?;
    }
    Ok(())
}

pub fn serve(a: ServeArgs) -> Result<()> {
    let mut config = overlay(ServiceConfig::default(), a.config.as_deref())?;
    if let Some(m) = a.models {
        config.models = m;
    }
    if let Some(l) = a.listen {
        config.listen = l;
    }
    if let Some(s) = a.static_dir {
        config.static_dir = Some(s);
    }
    if let Some(t) = a.session_ttl {
        config.session_ttl_secs = t;
    }
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(surveyq_service::serve(config)).map_err(|e| anyhow!(e))
}

pub fn curves(a: CurvesArgs) -> Result<()> {
    let path = if a.log.is_dir() { a.log.join(LOG_FILE) } else { a.log.clone() };
    let log = TrainingLog::load(&path)?;
    let cell = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    let mut out = String::from("step\ttrain_return\teval_return\n");
    for p in log.curves(a.window) {
        let _ = writeln!(out, "{}\t{}\t{}", p.step, cell(p.train_return), cell(p.eval_return));
    }
    match &a.out {
        Some(path) => fs::write(path, out).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{out}"),
    }
    Ok(())
}
