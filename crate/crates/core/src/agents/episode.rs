use rand::Rng;

use super::Agent;
use crate::approx::ValueFunction;
use crate::envs::{Environment, Termination, Transition};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome {
    pub steps: usize,
    /// Undiscounted sum of rewards.
    pub ret: f64,
    pub termination: Termination,
}

pub fn run_episode<V, E, R>(agent: &mut Agent<V>, env: &mut E, env_seed: u64, rng: &mut R) -> Result<EpisodeOutcome>
where
    V: ValueFunction,
    V::State: Clone,
    E: Environment<State = V::State>,
    R: Rng + ?Sized,
{
    run_episode_with(agent, env, env_seed, rng, |_| {})
}

/// Act, store, replay until the episode ends; `on_step` sees each transition
/// after the agent has learned from it.
pub fn run_episode_with<V, E, R, F>(
    agent: &mut Agent<V>,
    env: &mut E,
    env_seed: u64,
    rng: &mut R,
    mut on_step: F,
) -> Result<EpisodeOutcome>
where
    V: ValueFunction,
    V::State: Clone,
    E: Environment<State = V::State>,
    R: Rng + ?Sized,
    F: FnMut(&Transition<V::State>),
{
    let mut state = env.reset(env_seed);
    let mut steps = 0;
    let mut ret = 0.0;
    loop {
        let action = agent.select_action(&state, rng)?;
        let t = env.step(action)?;
        steps += 1;
        ret += t.reward;
        let ended = t.ends_episode();
        let termination = if t.terminal {
            Termination::Terminal
        } else {
            Termination::StepCap
        };
        state = t.next_state.clone();
        agent.observe(t);
        for _ in 0..agent.config().updates_per_step {
            agent.update(rng)?;
        }
        if let Some(last) = agent.buffer().iter_oldest_first().last() {
            on_step(last);
        }
        if ended {
            return Ok(EpisodeOutcome {
                steps,
                ret,
                termination,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentConfig, Variant};
    use crate::approx::QTable;
    use crate::envs::{SimpleMdp, SimpleMdpConfig};
    use crate::rng::rng_from_seed;

    fn toy_agent(variant: Variant, seed: u64) -> (Agent<QTable>, crate::rng::SimRng) {
        let mut rng = rng_from_seed(seed);
        let counts = SimpleMdpConfig::default().action_counts();
        let agent = Agent::new(AgentConfig::toy(variant), || QTable::gaussian(&counts, 0.0, 0.01, &mut rng)).unwrap();
        (agent, rng)
    }

    #[test]
    fn toy_episodes_are_short() {
        let (mut agent, mut rng) = toy_agent(Variant::MaxminQ(2), 0);
        let mut env = SimpleMdp::new(SimpleMdpConfig::with_mu(0.1)).unwrap();
        for ep in 0..200 {
            let out = run_episode(&mut agent, &mut env, ep, &mut rng).unwrap();
            assert!(out.steps == 1 || out.steps == 2);
            assert_eq!(out.termination, Termination::Terminal);
        }
    }

    #[test]
    fn reruns_are_bit_identical() {
        let run = || {
            let (mut agent, mut rng) = toy_agent(Variant::DoubleQ, 9);
            let mut env = SimpleMdp::new(SimpleMdpConfig::with_mu(-0.1)).unwrap();
            let mut log = Vec::new();
            for ep in 0..50 {
                let out = run_episode(&mut agent, &mut env, ep, &mut rng).unwrap();
                log.push((out.steps, out.ret.to_bits()));
            }
            (log, agent.estimators()[0].clone())
        };
        assert_eq!(run(), run());
    }
}
