//! The two-state toy MDP: learning curves of the policy distance and of the
//! learned `Q(A, Left)`, and the Maxmin `N × μ` sweep.

use std::path::Path;

use super::{fmt_f64, run_tasks, Artifacts, CsvFile, ExperimentConfig};
use crate::agents::{epsilon_greedy_probability, run_episode, Agent, AgentConfig, Variant};
use crate::approx::QTable;
use crate::envs::{SimpleMdp, SimpleMdpConfig, LEFT, STATE_A};
use crate::error::{Error, Result};
use crate::rng::{child_seed, rng_from_seed, run_seed};
use crate::stats::{Accumulator, Summary};

const RUNS_HEADER: &str = "arm,mu,run,episode,steps,return,policy_distance,q_left,final";
const SUMMARY_HEADER: &str =
    "arm,mu,episode,runs,policy_distance_mean,policy_distance_se,q_left_mean,q_left_se,steps_mean,steps_se";
const SWEEP_HEADER: &str =
    "mu,N,runs,final_policy_distance_mean,final_policy_distance_se,final_q_left_mean,final_q_left_se";

/// Probability of Left at `A` under the optimal ε-greedy policy.
pub fn optimal_egreedy_left_prob(mu: f64, epsilon: f64) -> Result<f64> {
    if mu == 0.0 || !mu.is_finite() {
        return Err(Error::invalid("mu", "optimal action is unique only for finite mu != 0"));
    }
    let greedy = if mu > 0.0 { 1.0 } else { 0.0 };
    Ok((1.0 - epsilon) * greedy + epsilon / 2.0)
}

/// One row of the long-format output.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub arm: String,
    pub run: usize,
    pub episode: usize,
    pub steps: usize,
    pub ret: f64,
    pub policy_distance: Option<f64>,
    pub q_left: Option<f64>,
    pub final_episode: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ToyEpisode {
    steps: usize,
    ret: f64,
    distance: f64,
    q_left: f64,
}

/// Cross-run statistics of one `(arm, μ, episode)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub arm: Variant,
    pub mu: f64,
    pub episode: usize,
    pub policy_distance: Summary,
    pub q_left: Summary,
    pub steps: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimpleMdpResults {
    /// Ordered by arm, then μ, then episode.
    pub summaries: Vec<EpisodeSummary>,
}

impl SimpleMdpResults {
    /// Summary of the last episode for `(arm, μ)`.
    pub fn final_summary(&self, arm: Variant, mu: f64) -> Option<&EpisodeSummary> {
        self.summaries.iter().rev().find(|s| s.arm == arm && s.mu == mu)
    }
}

fn agent_config(cfg: &ExperimentConfig, variant: Variant) -> AgentConfig {
    AgentConfig {
        variant,
        alpha: cfg.agent.alpha,
        epsilon: cfg.agent.epsilon,
        gamma: cfg.agent.gamma,
        buffer_capacity: cfg.agent.buffer_capacity,
        batch_size: cfg.agent.batch_size,
        updates_per_step: cfg.agent.updates_per_step,
    }
}

fn toy_run(cfg: &ExperimentConfig, variant: Variant, mu: f64, seed: u64) -> Result<Vec<ToyEpisode>> {
    let env_cfg = SimpleMdpConfig {
        mu,
        branch_count: cfg.simple_mdp.branch_count,
        ..SimpleMdpConfig::default()
    };
    let mut env = SimpleMdp::new(env_cfg)?;
    let counts = env_cfg.action_counts();
    let agent_cfg = agent_config(cfg, variant);
    let target = optimal_egreedy_left_prob(mu, agent_cfg.epsilon)?;
    let mut rng = rng_from_seed(seed);
    let mut agent = Agent::new(agent_cfg, || QTable::gaussian(&counts, 0.0, cfg.agent.init_std, &mut rng))?;
    let env_base = child_seed(seed, u64::MAX);
    let mut values = Vec::new();
    (0..cfg.simple_mdp.episodes)
        .map(|ep| {
            let out = run_episode(&mut agent, &mut env, child_seed(env_base, ep as u64), &mut rng)?;
            agent.behavior_values(&STATE_A, &mut values);
            let p_left = epsilon_greedy_probability(&values, agent_cfg.epsilon, LEFT);
            Ok(ToyEpisode {
                steps: out.steps,
                ret: out.ret,
                distance: (p_left - target).abs(),
                q_left: values[LEFT],
            })
        })
        .collect()
}

struct Accumulators {
    distance: Accumulator,
    q_left: Accumulator,
    steps: Accumulator,
}

/// Trains every `(arm, μ, run)`; `on_record` sees the long-format rows in
/// canonical order.
fn simulate(
    cfg: &ExperimentConfig,
    arms: &[Variant],
    mus: &[f64],
    mut on_record: impl FnMut(f64, &RunRecord) -> Result<()>,
) -> Result<SimpleMdpResults> {
    let episodes = cfg.simple_mdp.episodes;
    let tasks: Vec<(usize, usize, usize)> = (0..arms.len())
        .flat_map(|a| (0..mus.len()).flat_map(move |m| (0..cfg.runs).map(move |r| (a, m, r))))
        .collect();
    let mut acc: Vec<Accumulators> = (0..arms.len() * mus.len() * episodes)
        .map(|_| Accumulators {
            distance: Accumulator::new(),
            q_left: Accumulator::new(),
            steps: Accumulator::new(),
        })
        .collect();
    run_tasks(
        &tasks,
        cfg.workers,
        |&(a, m, r)| {
            let label = format!("{}@mu={}", arms[a], mus[m]);
            toy_run(cfg, arms[a], mus[m], run_seed(cfg.base_seed, &label, r as u64))
        },
        |&(a, m, r), rows| {
            let arm = arms[a].to_string();
            for (ep, row) in rows.iter().enumerate() {
                let slot = &mut acc[(a * mus.len() + m) * episodes + ep];
                slot.distance.push(row.distance);
                slot.q_left.push(row.q_left);
                slot.steps.push(row.steps as f64);
                on_record(
                    mus[m],
                    &RunRecord {
                        arm: arm.clone(),
                        run: r,
                        episode: ep,
                        steps: row.steps,
                        ret: row.ret,
                        policy_distance: Some(row.distance),
                        q_left: Some(row.q_left),
                        final_episode: ep + 1 == episodes,
                    },
                )?;
            }
            Ok(())
        },
    )?;
    let summaries = acc
        .iter()
        .enumerate()
        .map(|(i, s)| EpisodeSummary {
            arm: arms[i / (mus.len() * episodes)],
            mu: mus[(i / episodes) % mus.len()],
            episode: i % episodes,
            policy_distance: s.distance.summary(),
            q_left: s.q_left.summary(),
            steps: s.steps.summary(),
        })
        .collect();
    Ok(SimpleMdpResults { summaries })
}

/// In-memory toy-MDP experiment over the configured arms and μ values.
pub fn run_simple_mdp(cfg: &ExperimentConfig) -> Result<SimpleMdpResults> {
    simulate(cfg, &cfg.agent.arms, &cfg.simple_mdp.mu, |_, _| Ok(()))
}

/// Writes `simple_mdp_summary.csv` and, with `long_rows`, `simple_mdp_runs.csv`.
pub fn run_simple_mdp_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Artifacts> {
    let mut artifacts = Artifacts::default();
    let mut long = if cfg.long_rows {
        Some(CsvFile::create(out.join("simple_mdp_runs.csv"), RUNS_HEADER)?)
    } else {
        None
    };
    let results = simulate(cfg, &cfg.agent.arms, &cfg.simple_mdp.mu, |mu, rec| match long.as_mut() {
        Some(csv) => csv.row(&format!(
            "{},{},{},{},{},{},{},{},{}",
            rec.arm,
            fmt_f64(mu),
            rec.run,
            rec.episode,
            rec.steps,
            fmt_f64(rec.ret),
            super::fmt_opt(rec.policy_distance),
            super::fmt_opt(rec.q_left),
            u8::from(rec.final_episode)
        )),
        None => Ok(()),
    })?;
    if let Some(csv) = long {
        artifacts.add(csv.finish()?, RUNS_HEADER);
    }
    let mut summary = CsvFile::create(out.join("simple_mdp_summary.csv"), SUMMARY_HEADER)?;
    for s in &results.summaries {
        summary.row(&format!(
            "{},{},{},{},{},{},{},{},{},{}",
            s.arm,
            fmt_f64(s.mu),
            s.episode,
            s.policy_distance.count,
            fmt_f64(s.policy_distance.mean),
            fmt_f64(s.policy_distance.std_error),
            fmt_f64(s.q_left.mean),
            fmt_f64(s.q_left.std_error),
            fmt_f64(s.steps.mean),
            fmt_f64(s.steps.std_error),
        ))?;
    }
    artifacts.add(summary.finish()?, SUMMARY_HEADER);
    Ok(artifacts)
}

/// Final-episode statistics of `MaxminQ(N)` at one μ.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub mu: f64,
    pub n: usize,
    pub policy_distance: Summary,
    pub q_left: Summary,
}

/// Maxmin estimator count × μ grid on the toy MDP; writes `sweep.csv`.
pub fn run_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<Artifacts> {
    let arms: Vec<Variant> = cfg.sweep.n_values.iter().map(|&n| Variant::MaxminQ(n)).collect();
    let results = simulate(cfg, &arms, &cfg.simple_mdp.mu, |_, _| Ok(()))?;
    let mut csv = CsvFile::create(out.join("sweep.csv"), SWEEP_HEADER)?;
    for &mu in &cfg.simple_mdp.mu {
        for (&n, &arm) in cfg.sweep.n_values.iter().zip(&arms) {
            let s = results.final_summary(arm, mu).expect("every cell was simulated");
            let cell = SweepCell {
                mu,
                n,
                policy_distance: s.policy_distance,
                q_left: s.q_left,
            };
            csv.row(&format!(
                "{},{},{},{},{},{},{}",
                fmt_f64(cell.mu),
                cell.n,
                cell.policy_distance.count,
                fmt_f64(cell.policy_distance.mean),
                fmt_f64(cell.policy_distance.std_error),
                fmt_f64(cell.q_left.mean),
                fmt_f64(cell.q_left.std_error),
            ))?;
        }
    }
    let mut artifacts = Artifacts::default();
    artifacts.add(csv.finish()?, SWEEP_HEADER);
    Ok(artifacts)
}
