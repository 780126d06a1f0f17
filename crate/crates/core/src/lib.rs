//! Estimation-bias laboratory for Q-learning and its multi-estimator
//! relatives.
//!
//! The crate is organised around five pieces:
//!
//! * [`order_stats`]: closed forms for the bias and variance of the maxmin
//!   estimator under uniform noise, plus Monte Carlo oracles for them.
//! * [`envs`]: the two-state toy MDP, noisy Mountain Car, explicit tabular
//!   MDPs and a value-iteration solver for ground truth.
//! * [`approx`]: dense tables and tile-coded linear action values behind one
//!   [`approx::ValueFunction`] contract.
//! * [`agents`]: Q, Double Q, Maxmin Q, Ensemble Q and Averaged Q learners
//!   with experience replay and ε-greedy behaviour.
//! * [`generalized_q`]: the pluggable bootstrap function `G`, its property
//!   checks, and asynchronous convergence runs against value iteration.
//!
//! [`harness`] ties them together into reproducible experiments that write
//! CSV artifacts.

// `!(x < y)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod approx;
pub mod envs;
pub mod error;
pub mod generalized_q;
pub mod harness;
pub mod order_stats;
pub mod rng;
pub mod stats;

pub use agents::{Agent, AgentConfig, ReplayBuffer, Variant};
pub use approx::{LinearQ, QTable, TileCoder, ValueFunction};
pub use envs::{
    Environment, MountainCar, MountainCarConfig, SimpleMdp, SimpleMdpConfig, TabularEnv,
    TabularMdpSpec, Termination, Transition,
};
pub use error::{Error, Result};
pub use generalized_q::{GFunction, GWindow, StepSizeSchedule};
pub use order_stats::{BiasResult, BiasSpec, McEstimate};
