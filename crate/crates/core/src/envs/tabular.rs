use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Environment, Transition};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};

/// Iterate cap for [`value_iteration`].
pub const VALUE_ITERATION_CAP: usize = 1_000_000;

const PROBABILITY_SLACK: f64 = 1e-9;

/// Zero-mean noise added to the tabulated mean reward.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RewardNoise {
    #[default]
    None,
    Uniform {
        half_width: f64,
    },
    Gaussian {
        std: f64,
    },
}

impl RewardNoise {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            RewardNoise::None => 0.0,
            RewardNoise::Uniform { half_width } => rng.random_range(-half_width..=half_width),
            RewardNoise::Gaussian { std } => {
                let z: f64 = StandardNormal.sample(rng);
                std * z
            }
        }
    }

    /// Largest magnitude the noise can reach (3σ for Gaussian).
    pub fn scale(&self) -> f64 {
        match *self {
            RewardNoise::None => 0.0,
            RewardNoise::Uniform { half_width } => half_width,
            RewardNoise::Gaussian { std } => 3.0 * std,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            RewardNoise::None => true,
            RewardNoise::Uniform { half_width } => half_width > 0.0 && half_width.is_finite(),
            RewardNoise::Gaussian { std } => std >= 0.0 && std.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::MdpSpec(format!("bad noise parameter {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub next_state: usize,
    pub probability: f64,
    /// Mean reward for this `(s, a, s')`.
    pub reward: f64,
}

/// Outcome distribution of one `(s, a)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct StateAction {
    pub outcomes: Vec<Outcome>,
    pub noise: RewardNoise,
}

impl StateAction {
    pub fn expected_reward(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability * o.reward).sum()
    }
}

/// Explicit finite MDP. `rows[s][a]` lists the sparse support of
/// `P(· | s, a)` with the mean reward of each transition.
///
/// Absorbing states self-loop with probability one and zero reward; their
/// action values are pinned to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdpSpec {
    pub rows: Vec<Vec<StateAction>>,
    pub gamma: f64,
    pub absorbing: Vec<usize>,
    pub start: usize,
}

impl TabularMdpSpec {
    pub fn state_count(&self) -> usize {
        self.rows.len()
    }

    pub fn action_counts(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn is_absorbing(&self, s: usize) -> bool {
        self.absorbing.contains(&s)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.state_count();
        if n == 0 {
            return Err(Error::MdpSpec("no states".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::MdpSpec(format!("gamma {} not in [0, 1]", self.gamma)));
        }
        if self.start >= n {
            return Err(Error::MdpSpec(format!("start state {} out of range", self.start)));
        }
        for &s in &self.absorbing {
            if s >= n {
                return Err(Error::MdpSpec(format!("absorbing state {s} out of range")));
            }
        }
        for (s, row) in self.rows.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::MdpSpec(format!("state {s} has no actions")));
            }
            for (a, sa) in row.iter().enumerate() {
                sa.noise.validate()?;
                let mut total = 0.0;
                for o in &sa.outcomes {
                    if o.next_state >= n {
                        return Err(Error::MdpSpec(format!(
                            "({s}, {a}) -> {} out of range",
                            o.next_state
                        )));
                    }
                    if !(o.probability >= 0.0) || !o.reward.is_finite() {
                        return Err(Error::MdpSpec(format!("({s}, {a}) has a bad outcome {o:?}")));
                    }
                    total += o.probability;
                }
                if (total - 1.0).abs() > PROBABILITY_SLACK {
                    return Err(Error::MdpSpec(format!(
                        "P(.|{s}, {a}) sums to {total}, expected 1"
                    )));
                }
                if self.is_absorbing(s) {
                    let self_loop = sa
                        .outcomes
                        .iter()
                        .all(|o| o.probability == 0.0 || (o.next_state == s && o.reward == 0.0));
                    if !self_loop || sa.noise != RewardNoise::None {
                        return Err(Error::MdpSpec(format!(
                            "absorbing state {s} must self-loop with zero reward"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Draws `(s', r)` for `(s, a)`.
    pub fn sample<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> (usize, f64) {
        let sa = &self.rows[s][a];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = sa.outcomes[sa.outcomes.len() - 1];
        for o in &sa.outcomes {
            acc += o.probability;
            if u < acc {
                chosen = *o;
                break;
            }
        }
        (chosen.next_state, chosen.reward + sa.noise.sample(rng))
    }

    /// Largest reward magnitude reachable, counting noise.
    pub fn reward_bound(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .map(|sa| {
                let mean = sa.outcomes.iter().map(|o| o.reward.abs()).fold(0.0, f64::max);
                mean + sa.noise.scale()
            })
            .fold(0.0, f64::max)
    }

    /// Relabels states so that old state `s` becomes `perm[s]`.
    pub fn permute_states(&self, perm: &[usize]) -> Result<Self> {
        let n = self.state_count();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::MdpSpec("not a permutation of the state set".into()));
        }
        let mut rows = vec![Vec::new(); n];
        for (s, row) in self.rows.iter().enumerate() {
            rows[perm[s]] = row
                .iter()
                .map(|sa| StateAction {
                    outcomes: sa
                        .outcomes
                        .iter()
                        .map(|o| Outcome {
                            next_state: perm[o.next_state],
                            ..*o
                        })
                        .collect(),
                    noise: sa.noise,
                })
                .collect();
        }
        Ok(TabularMdpSpec {
            rows,
            gamma: self.gamma,
            absorbing: self.absorbing.iter().map(|&s| perm[s]).collect(),
            start: perm[self.start],
        })
    }

    /// Bellman optimality residual `max |Q − T Q|`.
    pub fn bellman_residual(&self, q: &[Vec<f64>]) -> f64 {
        let mut worst: f64 = 0.0;
        for (s, row) in self.rows.iter().enumerate() {
            for (a, sa) in row.iter().enumerate() {
                let backed = if self.is_absorbing(s) {
                    0.0
                } else {
                    backup(self, q, sa)
                };
                worst = worst.max((q[s][a] - backed).abs());
            }
        }
        worst
    }
}

#[inline]
fn backup(spec: &TabularMdpSpec, q: &[Vec<f64>], sa: &StateAction) -> f64 {
    sa.outcomes
        .iter()
        .map(|o| {
            let next = if spec.is_absorbing(o.next_state) {
                0.0
            } else {
                q[o.next_state].iter().copied().fold(f64::NEG_INFINITY, f64::max)
            };
            o.probability * (o.reward + spec.gamma * next)
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueIterationResult {
    pub q: Vec<Vec<f64>>,
    /// Greedy action per state (lowest index on ties).
    pub policy: Vec<usize>,
    pub iterations: usize,
    pub last_change: f64,
}

/// Jacobi value iteration on `Q` until the max-norm change between
/// successive iterates drops below `tol`.
pub fn value_iteration(spec: &TabularMdpSpec, tol: f64) -> Result<ValueIterationResult> {
    spec.validate()?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let mut q: Vec<Vec<f64>> = spec.rows.iter().map(|row| vec![0.0; row.len()]).collect();
    let mut next = q.clone();
    let mut last_change = f64::INFINITY;
    for iteration in 1..=VALUE_ITERATION_CAP {
        last_change = 0.0;
        for (s, row) in spec.rows.iter().enumerate() {
            if spec.is_absorbing(s) {
                continue;
            }
            for (a, sa) in row.iter().enumerate() {
                let v = backup(spec, &q, sa);
                last_change = last_change.max((v - q[s][a]).abs());
                next[s][a] = v;
            }
        }
        std::mem::swap(&mut q, &mut next);
        if last_change < tol {
            let policy = q
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |best, (a, &v)| if v > best.1 { (a, v) } else { best })
                        .0
                })
                .collect();
            return Ok(ValueIterationResult {
                q,
                policy,
                iterations: iteration,
                last_change,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: VALUE_ITERATION_CAP,
        last_change,
    })
}

/// States from which some stationary policy avoids the absorbing set
/// forever. Empty iff every policy is proper.
///
/// Computes the largest set `C` of non-absorbing states in which every
/// state has an action whose whole support stays in `C`.
pub fn improper_states(spec: &TabularMdpSpec) -> Vec<usize> {
    let n = spec.state_count();
    let mut trapped: Vec<bool> = (0..n).map(|s| !spec.is_absorbing(s)).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !trapped[s] {
                continue;
            }
            let can_stay = spec.rows[s].iter().any(|sa| {
                sa.outcomes
                    .iter()
                    .all(|o| o.probability == 0.0 || trapped[o.next_state])
            });
            if !can_stay {
                trapped[s] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (0..n).filter(|&s| trapped[s]).collect()
}

/// Random MDP with `states × actions`, each `(s, a)` leading to `branching`
/// distinct successors with Dirichlet(1) probabilities and mean rewards
/// drawn from `U(0, 1)`. No absorbing states.
pub fn random_mdp(states: usize, actions: usize, branching: usize, gamma: f64, seed: u64) -> Result<TabularMdpSpec> {
    if states == 0 || actions == 0 {
        return Err(Error::invalid("shape", "need at least one state and action"));
    }
    if branching == 0 || branching > states {
        return Err(Error::invalid("branching", format!("must be in 1..={states}")));
    }
    let mut rng = rng_from_seed(seed);
    let rows = (0..states)
        .map(|_| {
            (0..actions)
                .map(|_| {
                    let targets = rand::seq::index::sample(&mut rng, states, branching).into_vec();
                    let weights: Vec<f64> = (0..branching)
                        .map(|_| -(1.0 - rng.random::<f64>()).ln())
                        .collect();
                    let total: f64 = weights.iter().sum();
                    let reward = rng.random::<f64>();
                    StateAction {
                        outcomes: targets
                            .into_iter()
                            .zip(weights)
                            .map(|(next_state, w)| Outcome {
                                next_state,
                                probability: w / total,
                                reward,
                            })
                            .collect(),
                        noise: RewardNoise::None,
                    }
                })
                .collect()
        })
        .collect();
    let spec = TabularMdpSpec {
        rows,
        gamma,
        absorbing: Vec::new(),
        start: 0,
    };
    spec.validate()?;
    Ok(spec)
}

/// Episodic simulator over a [`TabularMdpSpec`]; episodes end on entering
/// an absorbing state or after `step_cap` steps.
#[derive(Debug, Clone)]
pub struct TabularEnv {
    spec: TabularMdpSpec,
    step_cap: usize,
    state: usize,
    steps: usize,
    done: bool,
    rng: SimRng,
}

impl TabularEnv {
    pub fn new(spec: TabularMdpSpec, step_cap: usize) -> Result<Self> {
        spec.validate()?;
        if step_cap == 0 {
            return Err(Error::invalid("step_cap", "must be at least 1"));
        }
        let start = spec.start;
        Ok(TabularEnv {
            spec,
            step_cap,
            state: start,
            steps: 0,
            done: true,
            rng: rng_from_seed(0),
        })
    }

    pub fn spec(&self) -> &TabularMdpSpec {
        &self.spec
    }
}

impl Environment for TabularEnv {
    type State = usize;

    fn max_actions(&self) -> usize {
        self.spec.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn num_actions(&self, state: &usize) -> usize {
        self.spec.rows[*state].len()
    }

    fn reset(&mut self, seed: u64) -> usize {
        self.rng = rng_from_seed(seed);
        self.state = self.spec.start;
        self.steps = 0;
        self.done = self.spec.is_absorbing(self.state);
        self.state
    }

    fn step(&mut self, action: usize) -> Result<Transition<usize>> {
        if self.done {
            return Err(Error::EpisodeTerminated);
        }
        let limit = self.num_actions(&self.state);
        if action >= limit {
            return Err(Error::OutOfRange {
                what: "action",
                index: action,
                limit,
            });
        }
        let state = self.state;
        let (next_state, reward) = self.spec.sample(state, action, &mut self.rng);
        self.steps += 1;
        let terminal = self.spec.is_absorbing(next_state);
        let truncated = !terminal && self.steps >= self.step_cap;
        self.done = terminal || truncated;
        self.state = next_state;
        Ok(Transition {
            state,
            action,
            reward,
            next_state,
            terminal,
            truncated,
        })
    }
}
