//! End-to-end acceptance run. Prints one PASS / FAIL / SKIP line per
//! criterion and exits nonzero if any criterion fails.
//!
//! Set `SURVEYQ_KMIS_CSV` to a member-recode CSV (columns named as in
//! `configs/kmis_schema.json` plus `label`) to run the survey-data harness.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::fs;
use std::hash::{Hash, Hasher};
use std::net::TcpListener;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Child, Command};
use std::thread;
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use surveyq_core::dataprep::{chi_square, Record, SynthSpec};
use surveyq_core::dqn::DqnConfig;
use surveyq_core::environment::EnvConfig;
use surveyq_core::evaluation::{parse_results_tsv, run_episode, Metrics};
use surveyq_core::model::ModelBundle;
use surveyq_core::neuralnet::{cross_entropy_loss, gradient_check, td_loss, Arch, Network};
use surveyq_core::oracle::{optimal_value, policy_value};
use surveyq_core::policy::{GreedyQ, Policy, PolicyView};
use surveyq_core::sl::SlConfig;

const COST: f64 = -0.05;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

struct Harness {
    work: PathBuf,
    /// Every evaluation batch produced during the run, for the accounting check.
    batches: Vec<(String, Metrics)>,
    failures: usize,
}

impl Harness {
    fn run(&mut self, name: &str, f: impl FnOnce(&mut Harness) -> Result<Outcome>) {
        let start = Instant::now();
        let outcome = match panic::catch_unwind(AssertUnwindSafe(|| f(self))) {
            Ok(Ok(o)) => o,
            Ok(Err(e)) => Outcome::Fail(format!("error: {e:#}")),
            Err(_) => Outcome::Fail("panicked".into()),
        };
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                self.failures += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("{tag}  {name}  [{secs:.1}s]  {detail}");
    }

    fn cli(&self, args: &[&str]) -> Result<String> {
        let out = Command::new(env!("CARGO_BIN_EXE_surveyq"))
            .args(args)
            .output()
            .context("running surveyq")?;
        if !out.status.success() {
            bail!("surveyq {args:?} failed: {}", String::from_utf8_lossy(&out.stderr).trim());
        }
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    }

    fn synth(&self, spec: &str, name: &str) -> Result<PathBuf> {
        let out = self.work.join(name);
        if !out.exists() {
            self.cli(&["synth", "--spec", s(&configs().join(spec)), "--n", "10000", "--seed", "1", "--out", s(&out)])?;
        }
        Ok(out)
    }

    fn train_rl(&self, data: &Path, kmax: usize, seed: u64, name: &str) -> Result<PathBuf> {
        let out = self.work.join(name);
        let (k, seed) = (kmax.to_string(), seed.to_string());
        self.cli(&["train-rl", "--data", s(data), "--kmax", &k, "--seed", &seed, "--out", s(&out), "-q"])?;
        Ok(out)
    }

    fn train_sl(&self, data: &Path, k: usize, seed: u64, name: &str) -> Result<PathBuf> {
        let out = self.work.join(name);
        let (k, seed) = (k.to_string(), seed.to_string());
        self.cli(&["train-sl", "--data", s(data), "--k", &k, "--seed", &seed, "--out", s(&out), "-q"])?;
        Ok(out)
    }

    /// Runs `eval` (2000 episodes) and returns its rows, recording them.
    fn eval(&mut self, data: &Path, models: &[&Path]) -> Result<Vec<(String, Metrics)>> {
        let tsv = self.work.join("last_eval.tsv");
        let list: Vec<&str> = models.iter().map(|m| s(m)).collect();
        let table = self.cli(&["eval", "--data", s(data), "--models", &list.join(","), "--tsv", s(&tsv)])?;
        let rows = parse_results_tsv(&fs::read_to_string(&tsv)?)?;
        ensure!(table.lines().count() == rows.len() + 1, "table and tsv disagree");
        self.batches.extend(rows.iter().cloned());
        Ok(rows)
    }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn fmt_m(m: &Metrics) -> String {
    format!("acc {:.4} queries {:.3} return {:+.4}", m.accuracy, m.avg_queries, m.avg_return)
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

// ---------------------------------------------------------------- numerics

fn gradients(_: &mut Harness) -> Result<Outcome> {
    let start = Instant::now();
    let archs = [
        Arch::q_network(2, 2, 2, 2),
        Arch::q_network(8, 9, 4, 2),
        Arch::q_network(8, 9, 8, 2),
        Arch::classifier(3, 4, 3, 2),
        Arch::classifier(8, 9, 8, 2),
        Arch::uniform(5, 3, 6, 3),
    ];
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for (i, &arch) in archs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7 + i as u64);
        let mut net = Network::<f64>::init(arch, 31 + i as u64)?;
        for l in net.layers_mut() {
            l.bias.iter_mut().for_each(|b| *b = rng.gen_range(0.05..0.2));
        }
        let x: Vec<f64> = (0..arch.input_len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let base = net.predict(&x)?;
        let label = rng.gen_range(0..arch.out_dim);
        let a = rng.gen_range(0..arch.out_dim);
        let near = base[a] + rng.gen_range(-0.5..0.5);
        let far = base[a] - rng.gen_range(2.0..4.0);
        let one_hot = move |o: &[f64], g: f64| {
            let mut v = vec![0.0; o.len()];
            v[a] = g;
            v
        };
        let losses: Vec<Box<dyn Fn(&[f64]) -> (f64, Vec<f64>)>> = vec![
            Box::new(move |o| cross_entropy_loss(o, label)),
            Box::new(move |o| {
                let (l, g) = td_loss(o[a], near);
                (l, one_hot(o, g))
            }),
            // beyond the clip the gradient is that of the Huber loss
            Box::new(move |o| {
                let (_, g) = td_loss(o[a], far);
                ((o[a] - far).abs() - 0.5, one_hot(o, g))
            }),
            Box::new(|o| (o.iter().map(|v| 0.5 * v * v).sum(), o.to_vec())),
        ];
        for loss in &losses {
            worst = worst.max(gradient_check(&net, &x, loss.as_ref(), 1e-6)?);
            cases += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(verdict(
        cases >= 20 && worst <= 1e-4 && secs < 10.0,
        format!("{cases} cases, max relative error {worst:.2e}"),
    ))
}

fn chi_square_reference(_: &mut Harness) -> Result<Outcome> {
    let start = Instant::now();
    let tables: Vec<Vec<Vec<f64>>> = vec![
        vec![vec![10.0, 20.0], vec![20.0, 10.0]],
        vec![vec![25.0, 25.0], vec![25.0, 25.0]],
        vec![vec![90.0, 10.0], vec![15.0, 85.0]],
        vec![vec![3.0, 7.0], vec![6.0, 4.0]],
        vec![vec![12.0, 5.0, 9.0], vec![7.0, 11.0, 4.0]],
        vec![vec![40.0, 60.0], vec![35.0, 65.0], vec![50.0, 50.0], vec![20.0, 80.0]],
        vec![vec![500.0, 480.0], vec![520.0, 500.0]],
        vec![vec![1.0, 30.0], vec![29.0, 2.0]],
        vec![vec![8.0, 3.0, 2.0, 7.0], vec![4.0, 9.0, 6.0, 1.0], vec![5.0, 5.0, 5.0, 5.0]],
        vec![vec![123.5, 80.25], vec![60.0, 140.75]],
        vec![vec![14.0, 6.0], vec![9.0, 11.0], vec![3.0, 17.0], vec![12.0, 8.0], vec![5.0, 15.0], vec![10.0, 10.0], vec![7.0, 13.0], vec![16.0, 4.0], vec![2.0, 18.0]],
    ];
    let (mut d_stat, mut d_p): (f64, f64) = (0.0, 0.0);
    for t in &tables {
        let got = chi_square(t)?;
        let n: f64 = t.iter().flatten().sum();
        let rows: Vec<f64> = t.iter().map(|r| r.iter().sum()).collect();
        let cols: Vec<f64> = (0..t[0].len()).map(|j| t.iter().map(|r| r[j]).sum()).collect();
        let mut stat = 0.0;
        for (i, r) in t.iter().enumerate() {
            for (j, &o) in r.iter().enumerate() {
                let e = rows[i] * cols[j] / n;
                stat += (o - e).powi(2) / e;
            }
        }
        let dof = (t.len() - 1) * (t[0].len() - 1);
        ensure!(got.dof == dof, "dof {} vs {dof} on {t:?}", got.dof);
        let p = ChiSquared::new(dof as f64)?.sf(stat);
        d_stat = d_stat.max((got.statistic - stat).abs());
        d_p = d_p.max((got.p_value - p).abs());
    }
    let fx = chi_square(&[vec![10.0, 20.0], vec![20.0, 10.0]])?;
    let fixture = (fx.statistic - 6.6667).abs() < 5e-5 && fx.dof == 1 && (fx.p_value - 0.00982).abs() < 5e-6;
    let secs = start.elapsed().as_secs_f64();
    Ok(verdict(
        d_stat <= 1e-6 && d_p <= 1e-6 && fixture && secs < 1.0,
        format!(
            "{} tables, max |Δstat| {d_stat:.1e}, max |Δp| {d_p:.1e}; fixture ({:.4}, {}, {:.5})",
            tables.len(),
            fx.statistic,
            fx.dof,
            fx.p_value
        ),
    ))
}

fn schedules(_: &mut Harness) -> Result<Outcome> {
    let rl = DqnConfig::default();
    let sl = SlConfig::new(2);
    let checks = [
        ("eps(0)", rl.epsilon(0), 1.0),
        ("eps(25000)", rl.epsilon(25_000), 0.505),
        ("eps(50000)", rl.epsilon(50_000), 0.01),
        ("eps(99999)", rl.epsilon(99_999), 0.01),
        ("lr_rl(0)", rl.learning_rate(0), 0.000_25),
        ("lr_rl(100000)", rl.learning_rate(100_000), 0.000_05),
        ("lr_sl(start)", sl.learning_rate(0.0), 0.0025),
        ("lr_sl(end)", sl.learning_rate(sl.epochs as f64), 0.0005),
    ];
    let wrong: Vec<String> = checks
        .iter()
        .filter(|(_, got, want)| got != want)
        .map(|(n, got, want)| format!("{n} = {got:e} (want {want:e})"))
        .collect();
    Ok(verdict(
        wrong.is_empty(),
        if wrong.is_empty() { format!("{} values exact", checks.len()) } else { wrong.join("; ") },
    ))
}

fn table_arithmetic() -> Vec<String> {
    // Published rows: (model, accuracy, avg queries, avg reward).
    let rows = [
        ("SL k=2", 0.73, 2.0, 0.36),
        ("SL k=4", 0.77, 4.0, 0.35),
        ("SL k=8", 0.80, 8.0, 0.20),
        ("RL kmax=2", 0.78, 2.0, 0.45),
        ("RL kmax=4", 0.78, 2.30, 0.45),
        ("RL kmax=8", 0.80, 2.35, 0.47),
    ];
    rows.iter()
        .filter(|(_, acc, q, r)| ((2.0 * acc - 1.0) + COST * q - r).abs() > 0.02)
        .map(|(n, ..)| n.to_string())
        .collect()
}

fn accounting(h: &mut Harness) -> Result<Outcome> {
    ensure!(!h.batches.is_empty(), "no evaluation batches were produced");
    let worst = h
        .batches
        .iter()
        .map(|(_, m)| (m.avg_return - ((2.0 * m.accuracy - 1.0) + COST * m.avg_queries)).abs())
        .fold(0.0, f64::max);
    let off = table_arithmetic();
    Ok(verdict(
        worst <= 1e-9 && off.is_empty(),
        format!(
            "{} batches, max residual {worst:.1e}; published rows off by > 0.02: {}",
            h.batches.len(),
            if off.is_empty() { "none".into() } else { off.join(", ") }
        ),
    ))
}

// ---------------------------------------------------------------- oracle

/// A deterministic policy choosing uniformly among valid actions by hashing
/// (seed, history).
struct RandomValid {
    seed: u64,
}

impl Policy for RandomValid {
    fn act(&self, view: &PolicyView<'_>, config: &EnvConfig) -> usize {
        let mut valid: Vec<usize> = Vec::new();
        if view.queries_made < config.kmax {
            valid.extend((0..config.kmax).filter(|&a| !view.answered.contains_key(&config.allowed_features[a])));
        }
        if view.queries_made >= config.min_queries || valid.is_empty() {
            valid.extend(config.kmax..config.kmax + config.classes);
        }
        let mut hasher = DefaultHasher::new();
        (self.seed, view.answered, view.queries_made).hash(&mut hasher);
        valid[(hasher.finish() % valid.len() as u64) as usize]
    }
}

fn oracle(_: &mut Harness) -> Result<Outcome> {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;
    for (file, expected) in [("perfect_feature.json", Some(0.90)), ("independent.json", Some(-0.10)), ("three_noisy.json", None)] {
        let spec = SynthSpec::load(&configs().join(file))?;
        let config = EnvConfig::new(2, &spec.expected_order(10_000.0))?;
        let v = optimal_value(&spec, &config)?.value;
        let mut best_random = f64::NEG_INFINITY;
        for seed in 0..50 {
            best_random = best_random.max(policy_value(&RandomValid { seed }, &spec, &config)?);
        }
        ok &= best_random <= v + 1e-12;
        if let Some(e) = expected {
            ok &= (v - e).abs() <= 1e-9;
        }
        notes.push(format!("{file}: V* {v:+.6}, best of 50 random {best_random:+.6}"));
    }
    ok &= start.elapsed().as_secs_f64() < 10.0;
    Ok(verdict(ok, notes.join("; ")))
}

// ---------------------------------------------------------------- training

fn rl_learning(h: &mut Harness) -> Result<Outcome> {
    let start = Instant::now();
    let data = h.synth("perfect_feature.json", "perfect")?;
    let model = h.train_rl(&data, 2, 0, "perfect_rl2")?;
    let rows = h.eval(&data, &[&model])?;
    let m = &rows[0].1;
    let ok = m.avg_return >= 0.85 && m.accuracy >= 0.95 && m.avg_queries == 2.0 && start.elapsed().as_secs() < 600;
    Ok(verdict(ok, fmt_m(m)))
}

fn adaptivity(h: &mut Harness) -> Result<Outcome> {
    let data = h.synth("adaptive8.json", "adaptive8")?;
    let mut passed = 0;
    let mut notes = Vec::new();
    for seed in 0..3u64 {
        let rl = h.train_rl(&data, 8, seed, &format!("a8_rl8_s{seed}"))?;
        let sl = h.train_sl(&data, 8, seed, &format!("a8_sl8_s{seed}"))?;
        let rows = h.eval(&data, &[&rl, &sl])?;
        let (r, l) = (&rows[0].1, &rows[1].1);
        let ok = r.avg_queries <= 4.0 && l.avg_queries == 8.0 && r.avg_return - l.avg_return >= 0.1;
        passed += ok as usize;
        notes.push(format!(
            "seed {seed}: RL q {:.2} ret {:+.3} vs SL q {:.0} ret {:+.3} [{}]",
            r.avg_queries,
            r.avg_return,
            l.avg_queries,
            l.avg_return,
            if ok { "ok" } else { "miss" }
        ));
    }
    Ok(verdict(passed >= 2, format!("{passed}/3 seeds; {}", notes.join("; "))))
}

fn sl_monotonicity(h: &mut Harness) -> Result<Outcome> {
    let data = h.synth("adaptive8.json", "adaptive8")?;
    let models: Vec<PathBuf> = [2, 4, 8]
        .iter()
        .map(|&k| h.train_sl(&data, k, 0, &format!("a8_sl{k}_mono")))
        .collect::<Result<_>>()?;
    let refs: Vec<&Path> = models.iter().map(PathBuf::as_path).collect();
    let rows = h.eval(&data, &refs)?;
    let acc: Vec<f64> = rows.iter().map(|(_, m)| m.accuracy).collect();
    let ok = acc[2] >= acc[1] && acc[1] >= acc[0] - 0.02;
    Ok(verdict(ok, format!("accuracy k=2 {:.4}, k=4 {:.4}, k=8 {:.4}", acc[0], acc[1], acc[2])))
}

fn same_files(a: &Path, b: &Path) -> Result<bool> {
    let mut names: Vec<_> = fs::read_dir(a)?.map(|e| e.map(|e| e.file_name())).collect::<Result<_, _>>()?;
    names.sort();
    for name in &names {
        if fs::read(a.join(name))? != fs::read(b.join(name))? {
            return Ok(false);
        }
    }
    Ok(!names.is_empty() && fs::read_dir(b)?.count() == names.len())
}

fn determinism(h: &mut Harness) -> Result<Outcome> {
    let data = h.synth("perfect_feature.json", "perfect")?;
    let rl = same_files(&h.train_rl(&data, 2, 7, "det_rl_a")?, &h.train_rl(&data, 2, 7, "det_rl_b")?)?;
    let adaptive = h.synth("adaptive8.json", "adaptive8")?;
    let sl = same_files(&h.train_sl(&adaptive, 4, 7, "det_sl_a")?, &h.train_sl(&adaptive, 4, 7, "det_sl_b")?)?;
    Ok(verdict(rl && sl, format!("train-rl byte-identical: {rl}; train-sl byte-identical: {sl}")))
}

fn kmis(h: &mut Harness) -> Result<Outcome> {
    let Ok(csv) = std::env::var("SURVEYQ_KMIS_CSV") else {
        return Ok(Outcome::Skip("set SURVEYQ_KMIS_CSV to a member-recode CSV to run".into()));
    };
    let data = h.work.join("kmis");
    h.cli(&["prepare", "--csv", &csv, "--schema", s(&configs().join("kmis_schema.json")), "--out", s(&data)])?;
    let mut models = Vec::new();
    for k in [2, 4, 8] {
        models.push(h.train_sl(&data, k, 0, &format!("kmis_sl{k}"))?);
    }
    for k in [2, 4, 8] {
        models.push(h.train_rl(&data, k, 0, &format!("kmis_rl{k}"))?);
    }
    let refs: Vec<&Path> = models.iter().map(PathBuf::as_path).collect();
    let rows = h.eval(&data, &refs)?;
    println!("{}", surveyq_core::evaluation::results_table(&rows));
    Ok(verdict(rows.len() == 6, format!("{} rows", rows.len())))
}

// ---------------------------------------------------------------- service

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn post(client: &reqwest::blocking::Client, url: &str, body: Value) -> Result<Value> {
    let resp = client.post(url).json(&body).send()?;
    ensure!(resp.status().is_success(), "POST {url}: {}", resp.status());
    Ok(resp.json()?)
}

/// Answers `record` to the end; returns (session id, number of questions, prediction).
fn session(client: &reqwest::blocking::Client, base: &str, record: &Record) -> Result<(String, usize, Value)> {
    let created = post(client, &format!("{base}/v1/sessions"), json!({"model_id": "rl2"}))?;
    let id = created["session_id"].as_str().context("session id")?.to_string();
    let mut step = created;
    let mut asked = 0;
    while let Some(q) = step.get("question") {
        let f = q["index"].as_u64().context("index")? as usize;
        asked += 1;
        step = post(client, &format!("{base}/v1/sessions/{id}/answer"), json!({"choice": record.features[f]}))?;
    }
    Ok((id, asked, step["prediction"].clone()))
}

fn service(h: &mut Harness) -> Result<Outcome> {
    let data = h.synth("perfect_feature.json", "perfect")?;
    let models = h.work.join("served");
    fs::create_dir_all(&models)?;
    let model_dir = models.join("rl2");
    if !model_dir.exists() {
        h.train_rl(&data, 2, 0, "served/rl2")?;
    }
    let bundle = ModelBundle::load(&model_dir)?;
    let env = bundle.env()?;
    let offline = |r: &Record| -> Vec<String> {
        run_episode(&env, &GreedyQ { net: &bundle.net, masked: true }, r.clone())
            .actions
            .iter()
            .map(ToString::to_string)
            .collect()
    };

    let port = TcpListener::bind("127.0.0.1:0")?.local_addr()?.port();
    let addr = format!("127.0.0.1:{port}");
    let _server = Server(
        Command::new(env!("CARGO_BIN_EXE_surveyq"))
            .args(["serve", "--models", s(&models), "--listen", &addr])
            .spawn()?,
    );
    let base = format!("http://{addr}");
    let client = reqwest::blocking::Client::new();
    let ready = (0..100).any(|_| {
        thread::sleep(Duration::from_millis(50));
        client.get(format!("{base}/healthz")).send().is_ok_and(|r| r.status().is_success())
    });
    ensure!(ready, "server did not come up");

    let records: Vec<Record> = (0..4).map(|b| Record { features: vec![b & 1, b >> 1], label: b & 1 }).collect();
    let mut problems = Vec::new();
    for r in &records {
        let (id, asked, prediction) = session(&client, &base, r)?;
        let snap: Value = client.get(format!("{base}/v1/sessions/{id}")).send()?.json()?;
        let trace: Vec<String> = serde_json::from_value(snap["actions"].clone())?;
        if asked != 2 || prediction.is_null() {
            problems.push(format!("{:?}: {asked} questions", r.features));
        }
        if trace != offline(r) {
            problems.push(format!("{:?}: trace {trace:?} vs offline {:?}", r.features, offline(r)));
        }
    }

    let results: Vec<Result<(Record, String, usize)>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..50)
            .map(|i| {
                let (client, base, record) = (client.clone(), base.clone(), records[i % 4].clone());
                scope.spawn(move || -> Result<(Record, String, usize)> {
                    let (id, asked, _) = session(&client, &base, &record)?;
                    Ok((record, id, asked))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("session thread")).collect()
    });
    let mut ids = std::collections::HashSet::new();
    for res in results {
        let (record, id, asked) = res?;
        ensure!(ids.insert(id.clone()), "duplicate session id");
        let snap: Value = client.get(format!("{base}/v1/sessions/{id}")).send()?.json()?;
        let answers: BTreeMap<usize, usize> = snap["answers"]
            .as_array()
            .context("answers")?
            .iter()
            .map(|a| (a["index"].as_u64().unwrap_or(0) as usize, a["choice"].as_u64().unwrap_or(0) as usize))
            .collect();
        let trace: Vec<String> = serde_json::from_value(snap["actions"].clone())?;
        if asked != 2 || answers.iter().any(|(&f, &c)| record.features[f] != c) || trace != offline(&record) {
            problems.push(format!("concurrent session {id} leaked or diverged"));
        }
    }
    Ok(verdict(
        problems.is_empty(),
        if problems.is_empty() {
            "4 scripted sessions: 2 questions + prediction, traces match offline greedy; 50 concurrent sessions isolated".into()
        } else {
            problems.join("; ")
        },
    ))
}

fn main() {
    let work = tempfile::tempdir().expect("work dir");
    let mut h = Harness { work: work.path().to_path_buf(), batches: Vec::new(), failures: 0 };
    h.run("gradient correctness", gradients);
    h.run("chi-square correctness", chi_square_reference);
    h.run("schedule fixtures", schedules);
    h.run("oracle optimality", oracle);
    h.run("RL learning (perfect feature, kmax = 2)", rl_learning);
    h.run("adaptivity and early stopping (kmax = 8 vs SL k = 8)", adaptivity);
    h.run("SL monotonicity", sl_monotonicity);
    h.run("determinism", determinism);
    h.run("KMIS harness", kmis);
    h.run("service conformance", service);
    h.run("accounting identity", accounting);
    println!();
    if h.failures > 0 {
        println!("acceptance: {} criterion(s) failed", h.failures);
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
