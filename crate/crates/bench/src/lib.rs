//! Fixtures shared by the benchmarks.

use qbias::agents::run_episode;
use qbias::approx::Features;
use qbias::rng::{rng_from_seed, SimRng};
use qbias::{Agent, AgentConfig, LinearQ, MountainCar, MountainCarConfig, QTable, SimpleMdp, SimpleMdpConfig, TileCoder, Variant};

/// A toy-MDP agent whose replay buffer is already full.
pub fn warm_toy_agent(variant: Variant, seed: u64) -> (Agent<QTable>, SimRng) {
    let cfg = SimpleMdpConfig::with_mu(0.1);
    let mut env = SimpleMdp::new(cfg).expect("valid toy config");
    let counts = cfg.action_counts();
    let mut rng = rng_from_seed(seed);
    let mut agent = Agent::new(AgentConfig::toy(variant), || QTable::gaussian(&counts, 0.0, 0.01, &mut rng))
        .expect("valid agent");
    for ep in 0..100 {
        run_episode(&mut agent, &mut env, ep, &mut rng).expect("toy episode");
    }
    (agent, rng)
}

/// A tile-coded Mountain Car agent after a few short episodes.
pub fn warm_mountain_agent(variant: Variant, seed: u64) -> (Agent<LinearQ>, SimRng) {
    let env_cfg = MountainCarConfig {
        step_cap: 500,
        ..MountainCarConfig::with_reward_variance(10.0)
    };
    let mut env = MountainCar::new(env_cfg).expect("valid env config");
    let cfg = AgentConfig {
        alpha: 0.04,
        ..AgentConfig::toy(variant)
    };
    let coder = TileCoder::mountain_car();
    let mut agent = Agent::new(cfg, || Ok(LinearQ::new(coder.clone(), 3))).expect("valid agent");
    let mut rng = rng_from_seed(seed);
    for ep in 0..3 {
        run_episode(&mut agent, &mut env, ep, &mut rng).expect("mountain car episode");
    }
    (agent, rng)
}

/// Evenly spread points over the Mountain Car state box.
pub fn mountain_points(count: usize) -> Vec<[f64; 2]> {
    (0..count)
        .map(|i| {
            let u = (i as f64 + 0.5) / count as f64;
            let v = ((i * 7919) % count) as f64 / count as f64;
            [-1.2 + 1.7 * u, -0.07 + 0.14 * v]
        })
        .collect()
}

pub fn features_of(points: &[[f64; 2]]) -> Vec<Features> {
    let coder = TileCoder::mountain_car();
    points.iter().map(|p| coder.features(p).expect("in-range point")).collect()
}
