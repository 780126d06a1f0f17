//! Episodic environments and explicit finite MDPs.

mod mountain_car;
mod simple_mdp;
pub mod spec_file;
mod tabular;

pub use mountain_car::{MountainCar, MountainCarConfig, ACTION_COAST, ACTION_FORWARD, ACTION_REVERSE};
pub use simple_mdp::{SimpleMdp, SimpleMdpConfig, LEFT, RIGHT, STATE_A, STATE_B, STATE_TERMINAL};
pub use tabular::{
    improper_states, random_mdp, value_iteration, Outcome, RewardNoise, StateAction, TabularEnv,
    TabularMdpSpec, ValueIterationResult, VALUE_ITERATION_CAP,
};

use crate::error::Result;

/// One step of experience.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<S> {
    pub state: S,
    pub action: usize,
    pub reward: f64,
    pub next_state: S,
    /// The next state is terminal: no bootstrapping past it.
    pub terminal: bool,
    /// The episode was cut off by a step cap; `next_state` is not terminal.
    pub truncated: bool,
}

impl<S> Transition<S> {
    pub fn ends_episode(&self) -> bool {
        self.terminal || self.truncated
    }
}

/// How an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    /// Reached a terminal state (the goal, for Mountain Car).
    Terminal,
    /// Hit the step cap first.
    StepCap,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Terminal => "terminal",
            Termination::StepCap => "step_cap",
        }
    }
}

/// Episodic simulator. Each instance owns a private generator that
/// [`Environment::reset`] reseeds.
pub trait Environment {
    type State: Clone;

    /// Largest action count over all states.
    fn max_actions(&self) -> usize;

    fn num_actions(&self, state: &Self::State) -> usize;

    fn reset(&mut self, seed: u64) -> Self::State;

    /// Errors with [`crate::Error::EpisodeTerminated`] once the episode is over.
    fn step(&mut self, action: usize) -> Result<Transition<Self::State>>;
}
