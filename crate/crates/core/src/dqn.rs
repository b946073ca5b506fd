//! Deep Q-learning with experience replay, a periodically synced target
//! network, linearly annealed ε-greedy exploration and learning rate.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataprep::{one_answer_states, BalancedSampler, Dataset, StateTensor};
use crate::environment::{EnvConfig, SurveyEnv, SurveyState};
use crate::error::TrainError;
use crate::evaluation::evaluate;
use crate::log::{LogRow, TrainingLog};
use crate::neuralnet::{linear_anneal, td_loss, Adam, AdamConfig, Arch, Network};
use crate::policy::{argmax_masked, GreedyQ};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: StateTensor,
    pub a: usize,
    pub r: f32,
    pub s_next: StateTensor,
    pub terminal: bool,
}

/// FIFO replay memory of the most recent `capacity` transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: VecDeque::with_capacity(capacity),
            inserted: 0,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
        self.inserted += 1;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Transitions ever pushed, including evicted ones.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    /// Survivors in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// `n` uniform draws with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<&Transition> {
        assert!(!self.items.is_empty(), "cannot sample an empty replay buffer");
        (0..n)
            .map(|_| &self.items[rng.gen_range(0..self.items.len())])
            .collect()
    }
}

/// With probability `epsilon` a uniform valid action, otherwise the valid
/// argmax (lowest index on ties).
pub fn epsilon_greedy<R: Rng + ?Sized>(q: &[f32], valid: &[bool], epsilon: f64, rng: &mut R) -> usize {
    assert_eq!(q.len(), valid.len());
    let n_valid = valid.iter().filter(|&&v| v).count();
    assert!(n_valid > 0, "no valid action");
    if rng.gen::<f64>() < epsilon {
        let pick = rng.gen_range(0..n_valid);
        valid
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .nth(pick)
            .map(|(i, _)| i)
            .expect("pick < n_valid")
    } else {
        argmax_masked(q, Some(valid))
    }
}

/// TD targets `r + γ·max_a′ Q_target(s′, a′)`, or `r` for terminal transitions.
/// The max runs over the full head.
pub fn compute_targets(batch: &[&Transition], target: &Network<f32>, gamma: f64) -> Vec<f64> {
    batch
        .iter()
        .map(|t| {
            if t.terminal {
                t.r as f64
            } else {
                let q = target.predict(t.s_next.as_slice()).expect("state shape");
                let best = q.iter().copied().fold(f32::NEG_INFINITY, f32::max);
                t.r as f64 + gamma * best as f64
            }
        })
        .collect()
}

/// Frozen copy of the online network.
pub fn sync_target(online: &Network<f32>) -> Network<f32> {
    online.clone()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqnConfig {
    /// Environment steps (= transitions collected).
    pub total_steps: u64,
    pub minibatch: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_horizon: u64,
    pub replay_capacity: usize,
    /// Gradient steps between target syncs.
    pub target_sync_every: u64,
    /// Transitions collected before the first gradient step.
    pub learn_start: usize,
    /// Restrict exploration and greedy choice to valid actions.
    pub mask_actions: bool,
    pub eval_every: u64,
    pub eval_episodes: usize,
    /// Return the online weights from the best periodic greedy evaluation
    /// (latest on ties) instead of the final ones.
    pub keep_best: bool,
    pub seed: u64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            total_steps: 100_000,
            minibatch: 32,
            lr_start: 0.000_25,
            lr_end: 0.000_05,
            eps_start: 1.0,
            eps_end: 0.01,
            eps_horizon: 50_000,
            replay_capacity: 5_000,
            target_sync_every: 500,
            learn_start: 1_000,
            mask_actions: false,
            eval_every: 1_000,
            eval_episodes: 100,
            keep_best: true,
            seed: 0,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::InvalidConfig(m));
        if self.minibatch == 0 {
            return bad("minibatch must be positive".into());
        }
        if self.learn_start < self.minibatch {
            return bad(format!("learn_start {} < minibatch {}", self.learn_start, self.minibatch));
        }
        if self.eps_horizon > self.total_steps {
            return bad(format!("eps_horizon {} > total_steps {}", self.eps_horizon, self.total_steps));
        }
        if self.total_steps == 0 || self.eps_horizon == 0 {
            return bad("step counts must be positive".into());
        }
        if !(self.lr_start > 0.0 && self.lr_end > 0.0) {
            return bad("learning rates must be positive".into());
        }
        if self.target_sync_every == 0 || self.replay_capacity == 0 {
            return bad("sync interval and replay capacity must be positive".into());
        }
        Ok(())
    }

    /// Exploration rate before environment step `step` (0-based).
    pub fn epsilon(&self, step: u64) -> f64 {
        linear_anneal(self.eps_start, self.eps_end, step as f64, self.eps_horizon as f64)
    }

    /// Learning rate at environment step `step`, annealed over the whole run.
    pub fn learning_rate(&self, step: u64) -> f64 {
        linear_anneal(self.lr_start, self.lr_end, step as f64, self.total_steps as f64)
    }
}

/// Q-network architecture for a dataset schema and query budget.
pub fn q_arch(train: &Dataset, env: &EnvConfig) -> Arch {
    Arch::q_network(train.schema.len(), train.schema.max_categories(), env.kmax, env.classes)
}

/// Step-at-a-time DQN training state.
pub struct DqnTrainer<'a> {
    config: DqnConfig,
    env: SurveyEnv,
    train: &'a Dataset,
    sampler: BalancedSampler<'a>,
    online: Network<f32>,
    target: Network<f32>,
    adam: Adam<f32>,
    buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    state: SurveyState,
    step: u64,
    grad_steps: u64,
    syncs: Vec<u64>,
    episode_return: f64,
    loss_sum: f64,
    loss_count: u64,
    log: TrainingLog,
    best: Option<(f64, Network<f32>)>,
}

impl<'a> DqnTrainer<'a> {
    pub fn new(config: DqnConfig, env_config: EnvConfig, train: &'a Dataset) -> Result<Self, TrainError> {
        config.validate()?;
        let env = SurveyEnv::new(train.schema.clone(), env_config)?;
        let sampler = BalancedSampler::new(train)?;
        let probes = one_answer_states(&train.schema, &env.config().allowed_features);
        let online = Network::init_alive(q_arch(train, env.config()), config.seed, &probes)?;
        let target = sync_target(&online);
        let adam = Adam::new(&online, AdamConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let state = env.reset(sampler.draw(&mut rng).clone());
        Ok(DqnTrainer {
            buffer: ReplayBuffer::new(config.replay_capacity),
            config,
            env,
            train,
            sampler,
            online,
            target,
            adam,
            rng,
            state,
            step: 0,
            grad_steps: 0,
            syncs: Vec::new(),
            episode_return: 0.0,
            loss_sum: 0.0,
            loss_count: 0,
            log: TrainingLog::default(),
            best: None,
        })
    }

    pub fn online(&self) -> &Network<f32> {
        &self.online
    }

    pub fn target(&self) -> &Network<f32> {
        &self.target
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn gradient_steps(&self) -> u64 {
        self.grad_steps
    }

    /// Gradient-step counts at which the target was synced.
    pub fn sync_points(&self) -> &[u64] {
        &self.syncs
    }

    pub fn log(&self) -> &TrainingLog {
        &self.log
    }

    pub fn is_done(&self) -> bool {
        self.step >= self.config.total_steps
    }

    /// One environment step, then (after warmup) one gradient step.
    pub fn step(&mut self) -> Result<(), TrainError> {
        let cfg = self.env.config().clone();
        let epsilon = self.config.epsilon(self.step);
        let lr = self.config.learning_rate(self.step);

        let s = self.state.observation().clone();
        let q = self.online.predict(s.as_slice())?;
        let valid = if self.config.mask_actions {
            cfg.valid_mask(self.state.queries_made())
        } else {
            vec![true; cfg.num_actions()]
        };
        let a = epsilon_greedy(&q, &valid, epsilon, &mut self.rng);
        let result = self.env.step(&mut self.state, cfg.action(a)?)?;
        self.episode_return += result.reward;
        self.buffer.push(Transition {
            s,
            a,
            r: result.reward as f32,
            s_next: self.state.observation().clone(),
            terminal: result.terminal,
        });
        self.step += 1;

        if self.buffer.len() >= self.config.learn_start {
            let loss = self.learn(lr, cfg.gamma)?;
            self.loss_sum += loss;
            self.loss_count += 1;
        }

        if result.terminal {
            let mean_loss = (self.loss_count > 0).then(|| self.loss_sum / self.loss_count as f64);
            self.log.push(LogRow {
                step: self.step,
                episode_return: Some(self.episode_return),
                epsilon: Some(epsilon),
                lr: Some(lr),
                loss: mean_loss,
                eval_return: None,
            });
            self.loss_sum = 0.0;
            self.loss_count = 0;
            self.episode_return = 0.0;
            self.state = self.env.reset(self.sampler.draw(&mut self.rng).clone());
        }

        if self.config.eval_every > 0 && self.step % self.config.eval_every == 0 {
            let ret = self.greedy_eval()?;
            if self.config.keep_best && self.best.as_ref().map_or(true, |(b, _)| ret >= *b) {
                self.best = Some((ret, self.online.clone()));
            }
            self.log.push(LogRow {
                step: self.step,
                eval_return: Some(ret),
                ..Default::default()
            });
        }
        Ok(())
    }

    fn learn(&mut self, lr: f64, gamma: f64) -> Result<f64, TrainError> {
        let n = self.config.minibatch;
        let batch = self.buffer.sample(n, &mut self.rng);
        let targets = compute_targets(&batch, &self.target, gamma);
        let mut grads = Network::zeros(*self.online.arch());
        let mut og = vec![0.0f32; self.online.arch().out_dim];
        let mut loss = 0.0;
        for (t, &y) in batch.iter().zip(&targets) {
            let (q, cache) = self.online.forward(t.s.as_slice())?;
            let (l, g) = td_loss(q[t.a] as f64, y);
            loss += l;
            og.fill(0.0);
            og[t.a] = (g / n as f64) as f32;
            self.online.backward_into(&cache, &og, &mut grads);
        }
        let loss = loss / n as f64;
        if !loss.is_finite() {
            return Err(TrainError::Divergence {
                step: self.step,
                detail: format!("TD loss {loss}"),
            });
        }
        self.adam.step(&mut self.online, &grads, lr).map_err(|e| TrainError::Divergence {
            step: self.step,
            detail: e.to_string(),
        })?;
        self.grad_steps += 1;
        if self.grad_steps % self.config.target_sync_every == 0 {
            self.target = sync_target(&self.online);
            self.syncs.push(self.grad_steps);
        }
        Ok(loss)
    }

    // Greedy (ε = 0, unmasked) mean return on fixed balanced training draws.
    fn greedy_eval(&self) -> Result<f64, TrainError> {
        let policy = GreedyQ {
            net: &self.online,
            masked: self.config.mask_actions,
        };
        let seed = self.config.seed ^ 0x5eed_e7a1;
        Ok(evaluate(&policy, &self.env, self.train, self.config.eval_episodes, seed)?.avg_return)
    }

    /// Best periodic greedy evaluation return so far.
    pub fn best_eval(&self) -> Option<f64> {
        self.best.as_ref().map(|(r, _)| *r)
    }

    /// The trained network (see [`DqnConfig::keep_best`]) and the log.
    pub fn finish(self) -> (Network<f32>, TrainingLog) {
        match self.best {
            Some((_, net)) => (net, self.log),
            None => (self.online, self.log),
        }
    }
}

/// Trains a Q-network for `config.total_steps` environment steps.
pub fn train_dqn(
    config: DqnConfig,
    env_config: EnvConfig,
    train: &Dataset,
) -> Result<(Network<f32>, TrainingLog), TrainError> {
    let mut trainer = DqnTrainer::new(config, env_config, train)?;
    while !trainer.is_done() {
        trainer.step()?;
    }
    Ok(trainer.finish())
}
