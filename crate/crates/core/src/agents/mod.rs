//! Value-based learners sharing one act/store/replay loop.
//!
//! | variant        | estimators | bootstrap at `s'`                         | acts on            |
//! |----------------|-----------:|-------------------------------------------|--------------------|
//! | `Q`            | 1          | `max_a Q(s', a)`                          | `Q`                |
//! | `DoubleQ`      | 2          | `Qʲ(s', argmax_a Qⁱ(s', a))`, `j ≠ i`      | `(Q¹ + Q²) / 2`    |
//! | `MaxminQ(N)`   | N          | `max_a min_i Qⁱ(s', a)`                   | `min_i Qⁱ`         |
//! | `EnsembleQ(N)` | N          | `max_a mean_i Qⁱ(s', a)`                  | `mean_i Qⁱ`        |
//! | `AveragedQ(K)` | 1 + K−1 snapshots | `max_a mean_j Q(t−j)(s', a)`       | live table         |
//!
//! Maxmin updates one uniformly chosen estimator per update call, Double Q
//! flips a fair coin, Ensemble moves every estimator toward the shared
//! target. Terminal transitions bootstrap from zero.

mod buffer;
mod episode;
mod policy;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

pub use buffer::ReplayBuffer;
pub use episode::{run_episode, run_episode_with, EpisodeOutcome};
pub use policy::{argmax_random_tie, epsilon_greedy, epsilon_greedy_probability};

use crate::approx::ValueFunction;
use crate::envs::Transition;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Q,
    DoubleQ,
    MaxminQ(usize),
    EnsembleQ(usize),
    AveragedQ(usize),
}

impl Variant {
    /// Number of independently updated tables.
    pub fn estimator_count(&self) -> usize {
        match *self {
            Variant::Q | Variant::AveragedQ(_) => 1,
            Variant::DoubleQ => 2,
            Variant::MaxminQ(n) | Variant::EnsembleQ(n) => n,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Variant::MaxminQ(0) | Variant::EnsembleQ(0) => {
                Err(Error::invalid("variant", "need at least one estimator"))
            }
            Variant::AveragedQ(0) => Err(Error::invalid("variant", "need at least one snapshot")),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Q => write!(f, "Q"),
            Variant::DoubleQ => write!(f, "DoubleQ"),
            Variant::MaxminQ(n) => write!(f, "MaxminQ({n})"),
            Variant::EnsembleQ(n) => write!(f, "EnsembleQ({n})"),
            Variant::AveragedQ(k) => write!(f, "AveragedQ({k})"),
        }
    }
}

/// Accepts the `Display` form (`MaxminQ(8)`) and the short form
/// (`maxmin:8`), case-insensitively.
impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase().replace(['_', '-', ' '], "");
        let (name, arg) = match lower.find([':', '(']) {
            Some(i) => (&lower[..i], Some(lower[i + 1..].trim_end_matches(')'))),
            None => (lower.as_str(), None),
        };
        let count = || -> Result<usize> {
            let raw = arg.ok_or_else(|| Error::Config(format!("variant `{s}` needs a count")))?;
            raw.parse()
                .map_err(|_| Error::Config(format!("bad count `{raw}` in variant `{s}`")))
        };
        let name = name.strip_suffix('q').filter(|n| !n.is_empty()).unwrap_or(name);
        let v = match name {
            "q" | "qlearning" => Variant::Q,
            "double" => Variant::DoubleQ,
            "maxmin" => Variant::MaxminQ(count()?),
            "ensemble" => Variant::EnsembleQ(count()?),
            "averaged" => Variant::AveragedQ(count()?),
            _ => return Err(Error::Config(format!("unknown variant `{s}`"))),
        };
        if matches!(v, Variant::Q | Variant::DoubleQ) && arg.is_some() {
            return Err(Error::Config(format!("variant `{s}` takes no count")));
        }
        v.validate()?;
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentConfig {
    pub variant: Variant,
    pub alpha: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub updates_per_step: usize,
}

impl AgentConfig {
    /// Toy-MDP settings: α = 0.01, ε = 0.1, γ = 1, buffer 100, batch 1.
    pub fn toy(variant: Variant) -> Self {
        AgentConfig {
            variant,
            alpha: 0.01,
            epsilon: 0.1,
            gamma: 1.0,
            buffer_capacity: 100,
            batch_size: 1,
            updates_per_step: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.variant.validate()?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid("alpha", format!("{} not in (0, 1]", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::invalid("epsilon", format!("{} not in [0, 1]", self.epsilon)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid("gamma", format!("{} not in [0, 1]", self.gamma)));
        }
        for (name, v) in [
            ("buffer_capacity", self.buffer_capacity),
            ("batch_size", self.batch_size),
            ("updates_per_step", self.updates_per_step),
        ] {
            if v == 0 {
                return Err(Error::invalid(name, "must be at least 1"));
            }
        }
        Ok(())
    }
}

/// A learner: its estimators, replay buffer and behaviour policy.
#[derive(Debug, Clone)]
pub struct Agent<V: ValueFunction> {
    config: AgentConfig,
    estimators: Vec<V>,
    /// AveragedQ only: previous live tables, most recent first.
    history: VecDeque<V>,
    buffer: ReplayBuffer<V::State>,
    scratch: Vec<f64>,
    batch: Vec<(V::Key, usize, f64)>,
}

impl<V> Agent<V>
where
    V: ValueFunction,
    V::State: Clone,
{
    /// `make` is called once per estimator, in order.
    pub fn new(config: AgentConfig, mut make: impl FnMut() -> Result<V>) -> Result<Self> {
        config.validate()?;
        let estimators = (0..config.variant.estimator_count())
            .map(|_| make())
            .collect::<Result<Vec<_>>>()?;
        Ok(Agent {
            config,
            estimators,
            history: VecDeque::new(),
            buffer: ReplayBuffer::new(config.buffer_capacity),
            scratch: Vec::new(),
            batch: Vec::with_capacity(config.batch_size),
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn estimators(&self) -> &[V] {
        &self.estimators
    }

    pub fn estimators_mut(&mut self) -> &mut [V] {
        &mut self.estimators
    }

    pub fn snapshots(&self) -> impl Iterator<Item = &V> {
        self.history.iter()
    }

    pub fn buffer(&self) -> &ReplayBuffer<V::State> {
        &self.buffer
    }

    pub fn key(&self, state: &V::State) -> Result<V::Key> {
        self.estimators[0].key(state)
    }

    /// Elementwise minimum over the estimators at `key`.
    pub fn q_min(&self, key: &V::Key, out: &mut Vec<f64>) {
        out.clear();
        let m = self.estimators[0].num_actions(key);
        out.extend((0..m).map(|a| {
            self.estimators
                .iter()
                .map(|q| q.value_at(key, a))
                .fold(f64::INFINITY, f64::min)
        }));
    }

    /// Per-action values the behaviour policy is greedy with respect to.
    pub fn behavior_values(&self, key: &V::Key, out: &mut Vec<f64>) {
        match self.config.variant {
            Variant::Q | Variant::AveragedQ(_) => self.estimators[0].action_values(key, out),
            Variant::MaxminQ(_) => self.q_min(key, out),
            Variant::DoubleQ | Variant::EnsembleQ(_) => {
                out.clear();
                let m = self.estimators[0].num_actions(key);
                let n = self.estimators.len() as f64;
                out.extend((0..m).map(|a| self.estimators.iter().map(|q| q.value_at(key, a)).sum::<f64>() / n));
            }
        }
    }

    pub fn behavior_values_at(&self, state: &V::State) -> Result<Vec<f64>> {
        let key = self.key(state)?;
        let mut out = Vec::new();
        self.behavior_values(&key, &mut out);
        Ok(out)
    }

    /// ε-greedy on [`Agent::behavior_values`].
    pub fn select_action<R: Rng + ?Sized>(&mut self, state: &V::State, rng: &mut R) -> Result<usize> {
        let key = self.key(state)?;
        let mut values = std::mem::take(&mut self.scratch);
        self.behavior_values(&key, &mut values);
        let action = epsilon_greedy(&values, self.config.epsilon, rng);
        self.scratch = values;
        Ok(action)
    }

    pub fn observe(&mut self, t: Transition<V::State>) {
        self.buffer.push(t);
    }

    /// One update of the configured variant. A no-op on an empty buffer.
    pub fn update<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        if self.buffer.is_empty() {
            return Ok(());
        }
        match self.config.variant {
            Variant::Q => self.q_update_step(rng),
            Variant::DoubleQ => self.double_q_update(rng),
            Variant::MaxminQ(_) => self.maxmin_update(rng),
            Variant::EnsembleQ(_) => self.ensemble_q_update(rng),
            Variant::AveragedQ(_) => self.averaged_q_update(rng),
        }
    }

    /// The bootstrap value at `s'` used when updating estimator `learner`.
    pub fn bootstrap<R: Rng + ?Sized>(&self, next: &V::Key, learner: usize, rng: &mut R) -> f64 {
        let m = self.estimators[0].num_actions(next);
        match self.config.variant {
            Variant::Q | Variant::MaxminQ(_) => (0..m)
                .map(|a| {
                    self.estimators
                        .iter()
                        .map(|q| q.value_at(next, a))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(f64::NEG_INFINITY, f64::max),
            Variant::EnsembleQ(_) => {
                let n = self.estimators.len() as f64;
                (0..m)
                    .map(|a| self.estimators.iter().map(|q| q.value_at(next, a)).sum::<f64>() / n)
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            Variant::AveragedQ(_) => {
                let live = &self.estimators[0];
                let k = 1.0 + self.history.len() as f64;
                (0..m)
                    .map(|a| {
                        (live.value_at(next, a) + self.history.iter().map(|q| q.value_at(next, a)).sum::<f64>()) / k
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            Variant::DoubleQ => {
                let (select, evaluate) = (&self.estimators[learner], &self.estimators[1 - learner]);
                let values: Vec<f64> = (0..m).map(|a| select.value_at(next, a)).collect();
                evaluate.value_at(next, argmax_random_tie(&values, rng))
            }
        }
    }

    /// Samples a mini-batch and computes targets for `learner` against the
    /// current (pre-update) estimates.
    fn collect_batch<R: Rng + ?Sized>(&mut self, learner: usize, rng: &mut R) -> Result<Vec<(V::Key, usize, f64)>> {
        let mut batch = std::mem::take(&mut self.batch);
        batch.clear();
        for _ in 0..self.config.batch_size {
            let t = self
                .buffer
                .sample(rng)
                .expect("update called with an empty buffer");
            let key = self.estimators[0].key(&t.state)?;
            let target = if t.terminal {
                t.reward
            } else {
                let next = self.estimators[0].key(&t.next_state)?;
                t.reward + self.config.gamma * self.bootstrap(&next, learner, rng)
            };
            batch.push((key, t.action, target));
        }
        Ok(batch)
    }

    fn apply(&mut self, estimator: usize, batch: &[(V::Key, usize, f64)]) -> Result<()> {
        let alpha = self.config.alpha;
        let q = &mut self.estimators[estimator];
        for (key, action, target) in batch {
            q.update_at(key, *action, *target, alpha)?;
        }
        Ok(())
    }

    pub fn q_update_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let batch = self.collect_batch(0, rng)?;
        let res = self.apply(0, &batch);
        self.batch = batch;
        res
    }

    /// Updates one uniformly chosen estimator toward `r + γ max_a Q^min(s', a)`.
    pub fn maxmin_update<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let n = self.estimators.len();
        let chosen = if n > 1 { rng.random_range(0..n) } else { 0 };
        let batch = self.collect_batch(chosen, rng)?;
        let res = self.apply(chosen, &batch);
        self.batch = batch;
        res
    }

    pub fn double_q_update<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let learner = usize::from(!rng.random_bool(0.5));
        let batch = self.collect_batch(learner, rng)?;
        let res = self.apply(learner, &batch);
        self.batch = batch;
        res
    }

    pub fn ensemble_q_update<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let batch = self.collect_batch(0, rng)?;
        let mut res = Ok(());
        for i in 0..self.estimators.len() {
            res = res.and(self.apply(i, &batch));
        }
        self.batch = batch;
        res
    }

    /// Updates the live table toward the mean of the last `K` iterates, then
    /// rotates the pre-update table into the snapshot ring.
    pub fn averaged_q_update<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let k = match self.config.variant {
            Variant::AveragedQ(k) => k,
            _ => 1,
        };
        let batch = self.collect_batch(0, rng)?;
        if k > 1 {
            let live = &self.estimators[0];
            if self.history.len() + 1 >= k {
                let mut oldest = self.history.pop_back().expect("history is non-empty");
                oldest.assign_from(live);
                self.history.push_front(oldest);
            } else {
                self.history.push_front(live.clone());
            }
        }
        let res = self.apply(0, &batch);
        self.batch = batch;
        res
    }
}
