use rand::Rng;

use super::tabular::{Outcome, RewardNoise, StateAction, TabularMdpSpec};
use super::{Environment, Transition};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};

pub const STATE_A: usize = 0;
pub const STATE_B: usize = 1;
pub const STATE_TERMINAL: usize = 2;

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// Two non-terminal states. `A` has Left (to `B`, reward 0) and Right
/// (to the terminal state, reward 0). Every action at `B` terminates with
/// reward `mu + ξ`, `ξ ~ U(-w, w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpleMdpConfig {
    pub mu: f64,
    pub branch_count: usize,
    pub noise_half_width: f64,
}

impl Default for SimpleMdpConfig {
    fn default() -> Self {
        SimpleMdpConfig {
            mu: -0.1,
            branch_count: 8,
            noise_half_width: 1.0,
        }
    }
}

impl SimpleMdpConfig {
    pub fn with_mu(mu: f64) -> Self {
        SimpleMdpConfig {
            mu,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.branch_count == 0 {
            return Err(Error::invalid("branch_count", "must be at least 1"));
        }
        if !(self.noise_half_width > 0.0 && self.noise_half_width.is_finite()) {
            return Err(Error::invalid("noise_half_width", "must be positive"));
        }
        if !self.mu.is_finite() {
            return Err(Error::invalid("mu", "must be finite"));
        }
        Ok(())
    }

    /// Per-state action counts `[A, B, terminal]`.
    pub fn action_counts(&self) -> Vec<usize> {
        vec![2, self.branch_count, 1]
    }

    /// Explicit tabular form with `γ = 1`; the noisy reward keeps its mean
    /// in the table and its law in the noise descriptor.
    pub fn to_tabular(&self) -> TabularMdpSpec {
        let det = |next| StateAction {
            outcomes: vec![Outcome {
                next_state: next,
                probability: 1.0,
                reward: 0.0,
            }],
            noise: RewardNoise::None,
        };
        let b_row = StateAction {
            outcomes: vec![Outcome {
                next_state: STATE_TERMINAL,
                probability: 1.0,
                reward: self.mu,
            }],
            noise: RewardNoise::Uniform {
                half_width: self.noise_half_width,
            },
        };
        TabularMdpSpec {
            rows: vec![
                vec![det(STATE_B), det(STATE_TERMINAL)],
                vec![b_row; self.branch_count],
                vec![det(STATE_TERMINAL)],
            ],
            gamma: 1.0,
            absorbing: vec![STATE_TERMINAL],
            start: STATE_A,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimpleMdp {
    config: SimpleMdpConfig,
    state: usize,
    rng: SimRng,
}

impl SimpleMdp {
    pub fn new(config: SimpleMdpConfig) -> Result<Self> {
        config.validate()?;
        Ok(SimpleMdp {
            config,
            state: STATE_TERMINAL,
            rng: rng_from_seed(0),
        })
    }

    pub fn config(&self) -> &SimpleMdpConfig {
        &self.config
    }
}

impl Environment for SimpleMdp {
    type State = usize;

    fn max_actions(&self) -> usize {
        self.config.branch_count.max(2)
    }

    fn num_actions(&self, state: &usize) -> usize {
        match *state {
            STATE_A => 2,
            STATE_B => self.config.branch_count,
            _ => 1,
        }
    }

    fn reset(&mut self, seed: u64) -> usize {
        self.rng = rng_from_seed(seed);
        self.state = STATE_A;
        STATE_A
    }

    fn step(&mut self, action: usize) -> Result<Transition<usize>> {
        let state = self.state;
        let limit = self.num_actions(&state);
        if state == STATE_TERMINAL {
            return Err(Error::EpisodeTerminated);
        }
        if action >= limit {
            return Err(Error::OutOfRange {
                what: "action",
                index: action,
                limit,
            });
        }
        let (reward, next_state) = match (state, action) {
            (STATE_A, LEFT) => (0.0, STATE_B),
            (STATE_A, _) => (0.0, STATE_TERMINAL),
            _ => {
                let w = self.config.noise_half_width;
                (self.config.mu + self.rng.random_range(-w..=w), STATE_TERMINAL)
            }
        };
        self.state = next_state;
        Ok(Transition {
            state,
            action,
            reward,
            next_state,
            terminal: next_state == STATE_TERMINAL,
            truncated: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Accumulator;

    #[test]
    fn right_terminates_with_zero() {
        let mut env = SimpleMdp::new(SimpleMdpConfig::with_mu(0.1)).unwrap();
        assert_eq!(env.reset(1), STATE_A);
        let t = env.step(RIGHT).unwrap();
        assert_eq!(t, Transition {
            state: STATE_A,
            action: RIGHT,
            reward: 0.0,
            next_state: STATE_TERMINAL,
            terminal: true,
            truncated: false,
        });
        assert!(matches!(env.step(0), Err(Error::EpisodeTerminated)));
    }

    #[test]
    fn left_then_branch_reward_in_band() {
        let mut env = SimpleMdp::new(SimpleMdpConfig::with_mu(-0.1)).unwrap();
        for seed in 0..200 {
            env.reset(seed);
            let t = env.step(LEFT).unwrap();
            assert_eq!((t.next_state, t.reward, t.terminal), (STATE_B, 0.0, false));
            let t = env.step((seed % 8) as usize).unwrap();
            assert!(t.terminal);
            assert!((-1.1..=0.9).contains(&t.reward), "{}", t.reward);
        }
    }

    #[test]
    fn branch_reward_mean_and_support() {
        let mu = 0.1;
        let mut env = SimpleMdp::new(SimpleMdpConfig::with_mu(mu)).unwrap();
        let mut acc = Accumulator::new();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        env.reset(3);
        for _ in 0..100_000 {
            env.state = STATE_B;
            let r = env.step(0).unwrap().reward;
            lo = lo.min(r);
            hi = hi.max(r);
            acc.push(r);
        }
        assert!((acc.summary().mean - mu).abs() < 0.01);
        assert!(lo >= mu - 1.0 && lo < mu - 0.99);
        assert!(hi <= mu + 1.0 && hi > mu + 0.99);
    }

    #[test]
    fn invalid_action_rejected() {
        let mut env = SimpleMdp::new(SimpleMdpConfig::default()).unwrap();
        env.reset(0);
        assert!(env.step(2).is_err());
    }

    #[test]
    fn tabular_export_is_valid() {
        let spec = SimpleMdpConfig::with_mu(0.1).to_tabular();
        spec.validate().unwrap();
        assert_eq!(spec.action_counts(), vec![2, 8, 1]);
    }
}
