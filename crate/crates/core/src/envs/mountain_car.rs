use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Environment, Transition};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};

pub const ACTION_REVERSE: usize = 0;
pub const ACTION_COAST: usize = 1;
pub const ACTION_FORWARD: usize = 2;

/// Classic under-powered car with per-step reward `N(reward_mean, reward_std²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MountainCarConfig {
    pub reward_mean: f64,
    pub reward_std: f64,
    pub step_cap: usize,
    pub position_bounds: (f64, f64),
    pub velocity_bounds: (f64, f64),
    pub goal_position: f64,
}

impl Default for MountainCarConfig {
    fn default() -> Self {
        MountainCarConfig {
            reward_mean: -1.0,
            reward_std: 0.0,
            step_cap: 5000,
            position_bounds: (-1.2, 0.6),
            velocity_bounds: (-0.07, 0.07),
            goal_position: 0.5,
        }
    }
}

impl MountainCarConfig {
    pub fn with_reward_variance(sigma2: f64) -> Self {
        MountainCarConfig {
            reward_std: sigma2.max(0.0).sqrt(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (plo, phi) = self.position_bounds;
        let (vlo, vhi) = self.velocity_bounds;
        if self.step_cap == 0 {
            return Err(Error::invalid("step_cap", "must be at least 1"));
        }
        if !(plo < phi) || !(vlo < vhi) {
            return Err(Error::invalid("bounds", "lower bound must be below upper bound"));
        }
        if !(plo < self.goal_position && self.goal_position <= phi) {
            return Err(Error::invalid("goal_position", "must lie inside the position bounds"));
        }
        if !(self.reward_std >= 0.0 && self.reward_std.is_finite()) {
            return Err(Error::invalid("reward_std", "must be a non-negative number"));
        }
        Ok(())
    }
}

/// State is `[position, velocity]`.
#[derive(Debug, Clone)]
pub struct MountainCar {
    config: MountainCarConfig,
    state: [f64; 2],
    steps: usize,
    done: bool,
    rng: SimRng,
}

impl MountainCar {
    pub fn new(config: MountainCarConfig) -> Result<Self> {
        config.validate()?;
        Ok(MountainCar {
            config,
            state: [-0.5, 0.0],
            steps: 0,
            done: true,
            rng: rng_from_seed(0),
        })
    }

    pub fn config(&self) -> &MountainCarConfig {
        &self.config
    }

    /// Noise-free dynamics for one step.
    pub fn dynamics(config: &MountainCarConfig, [position, velocity]: [f64; 2], action: usize) -> [f64; 2] {
        let (plo, phi) = config.position_bounds;
        let (vlo, vhi) = config.velocity_bounds;
        let mut v = velocity + 0.001 * (action as f64 - 1.0) - 0.0025 * (3.0 * position).cos();
        v = v.clamp(vlo, vhi);
        let p = (position + v).clamp(plo, phi);
        if p <= plo && v < 0.0 {
            v = 0.0;
        }
        [p, v]
    }
}

impl Environment for MountainCar {
    type State = [f64; 2];

    fn max_actions(&self) -> usize {
        3
    }

    fn num_actions(&self, _state: &[f64; 2]) -> usize {
        3
    }

    fn reset(&mut self, seed: u64) -> [f64; 2] {
        self.rng = rng_from_seed(seed);
        self.state = [self.rng.random_range(-0.6..-0.4), 0.0];
        self.steps = 0;
        self.done = false;
        self.state
    }

    fn step(&mut self, action: usize) -> Result<Transition<[f64; 2]>> {
        if self.done {
            return Err(Error::EpisodeTerminated);
        }
        if action >= 3 {
            return Err(Error::OutOfRange {
                what: "action",
                index: action,
                limit: 3,
            });
        }
        let state = self.state;
        let next_state = Self::dynamics(&self.config, state, action);
        let reward = if self.config.reward_std > 0.0 {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            self.config.reward_mean + self.config.reward_std * z
        } else {
            self.config.reward_mean
        };
        self.steps += 1;
        let terminal = next_state[0] >= self.config.goal_position;
        let truncated = !terminal && self.steps >= self.config.step_cap;
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
