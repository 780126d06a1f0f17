//! Noisy Mountain Car: arms × reward variances × step sizes × runs, with
//! the best step size per arm and variance chosen by mean final-episode
//! steps.

use std::path::Path;

use super::{fmt_f64, run_tasks, Artifacts, CsvFile, ExperimentConfig};
use crate::agents::{run_episode, Agent, AgentConfig, Variant};
use crate::approx::{LinearQ, TileCoder};
use crate::envs::{MountainCar, MountainCarConfig, Termination};
use crate::error::{Error, Result};
use crate::rng::{child_seed, rng_from_seed, run_seed};
use crate::stats::{Accumulator, Summary};

const RUNS_HEADER: &str = "arm,sigma2,alpha,run,episode,steps,return,termination,final";
const SWEEP_HEADER: &str = "arm,sigma2,alpha,runs,final_steps_mean,final_steps_se,diverged_runs";
const BEST_HEADER: &str = "arm,sigma2,best_alpha,runs,final_steps_mean,final_steps_se";
const CURVES_HEADER: &str = "arm,sigma2,alpha,episode,runs,steps_mean,steps_se";

#[derive(Debug, Clone, Copy, PartialEq)]
struct McEpisode {
    steps: usize,
    ret: f64,
    /// `None` once the weights have diverged.
    termination: Option<Termination>,
}

/// Statistics of one `(arm, σ², α)` over runs.
#[derive(Debug, Clone, PartialEq)]
pub struct McCell {
    pub arm: Variant,
    pub sigma2: f64,
    pub alpha: f64,
    pub final_steps: Summary,
    /// Runs whose weights became non-finite.
    pub diverged_runs: usize,
    /// Per-episode steps.
    pub curve: Vec<Summary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McArmResult {
    pub arm: Variant,
    pub sigma2: f64,
    pub best_alpha: f64,
    pub final_steps: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MountainCarResults {
    /// Ordered by arm, then σ², then step size.
    pub cells: Vec<McCell>,
    /// Ordered by arm, then σ².
    pub best: Vec<McArmResult>,
}

impl MountainCarResults {
    pub fn best_for(&self, arm: Variant, sigma2: f64) -> Option<&McArmResult> {
        self.best.iter().find(|b| b.arm == arm && b.sigma2 == sigma2)
    }

    pub fn cell(&self, arm: Variant, sigma2: f64, alpha: f64) -> Option<&McCell> {
        self.cells
            .iter()
            .find(|c| c.arm == arm && c.sigma2 == sigma2 && c.alpha == alpha)
    }
}

/// One training run. A run whose weights diverge records every remaining
/// episode at the step cap.
fn mc_run(cfg: &ExperimentConfig, variant: Variant, sigma2: f64, alpha: f64, seed: u64) -> Result<Vec<McEpisode>> {
    let env_cfg = MountainCarConfig {
        step_cap: cfg.mountain_car.step_cap,
        ..MountainCarConfig::with_reward_variance(sigma2)
    };
    let mut env = MountainCar::new(env_cfg)?;
    let agent_cfg = AgentConfig {
        variant,
        alpha,
        epsilon: cfg.agent.epsilon,
        gamma: cfg.agent.gamma,
        buffer_capacity: cfg.agent.buffer_capacity,
        batch_size: cfg.agent.batch_size,
        updates_per_step: cfg.agent.updates_per_step,
    };
    let coder = TileCoder::mountain_car();
    let mut agent = Agent::new(agent_cfg, || Ok(LinearQ::new(coder.clone(), 3)))?;
    let mut rng = rng_from_seed(seed);
    let env_base = child_seed(seed, u64::MAX);
    let episodes = cfg.mountain_car.episodes;
    let mut rows = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        match run_episode(&mut agent, &mut env, child_seed(env_base, ep as u64), &mut rng) {
            Ok(out) => rows.push(McEpisode {
                steps: out.steps,
                ret: out.ret,
                termination: Some(out.termination),
            }),
            Err(Error::NonFiniteTarget(_)) => {
                rows.resize(
                    episodes,
                    McEpisode {
                        steps: env_cfg.step_cap,
                        ret: f64::NAN,
                        termination: None,
                    },
                );
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

fn simulate(
    cfg: &ExperimentConfig,
    mut on_row: impl FnMut(&str, f64, f64, usize, usize, &McEpisode) -> Result<()>,
) -> Result<MountainCarResults> {
    let arms = &cfg.agent.arms;
    let sigmas = &cfg.mountain_car.sigma2;
    let alphas = &cfg.mountain_car.step_sizes;
    let episodes = cfg.mountain_car.episodes;
    let cells = arms.len() * sigmas.len() * alphas.len();
    let cell_of = |a: usize, s: usize, k: usize| (a * sigmas.len() + s) * alphas.len() + k;
    let tasks: Vec<(usize, usize, usize, usize)> = (0..cells)
        .flat_map(|c| {
            let (a, s, k) = (c / (sigmas.len() * alphas.len()), (c / alphas.len()) % sigmas.len(), c % alphas.len());
            (0..cfg.runs).map(move |r| (a, s, k, r))
        })
        .collect();
    let mut curves = vec![Accumulator::new(); cells * episodes];
    let mut diverged = vec![0usize; cells];
    run_tasks(
        &tasks,
        cfg.workers,
        |&(a, s, k, r)| {
            let label = format!("{}@sigma2={}@alpha={}", arms[a], sigmas[s], alphas[k]);
            mc_run(cfg, arms[a], sigmas[s], alphas[k], run_seed(cfg.base_seed, &label, r as u64))
        },
        |&(a, s, k, r), rows| {
            let c = cell_of(a, s, k);
            if rows.iter().any(|e| e.termination.is_none()) {
                diverged[c] += 1;
            }
            let arm = arms[a].to_string();
            for (ep, row) in rows.iter().enumerate() {
                curves[c * episodes + ep].push(row.steps as f64);
                on_row(&arm, sigmas[s], alphas[k], r, ep, row)?;
            }
            Ok(())
        },
    )?;

    let cells: Vec<McCell> = (0..cells)
        .map(|c| {
            let curve: Vec<Summary> = curves[c * episodes..(c + 1) * episodes].iter().map(Accumulator::summary).collect();
            McCell {
                arm: arms[c / (sigmas.len() * alphas.len())],
                sigma2: sigmas[(c / alphas.len()) % sigmas.len()],
                alpha: alphas[c % alphas.len()],
                final_steps: *curve.last().expect("episodes >= 1"),
                diverged_runs: diverged[c],
                curve,
            }
        })
        .collect();
    let best = cells
        .chunks(alphas.len())
        .map(|group| {
            // Lowest mean final steps; the first (smaller listed) step size wins ties.
            let b = group
                .iter()
                .fold(&group[0], |b, c| if c.final_steps.mean < b.final_steps.mean { c } else { b });
            McArmResult {
                arm: b.arm,
                sigma2: b.sigma2,
                best_alpha: b.alpha,
                final_steps: b.final_steps,
            }
        })
        .collect();
    Ok(MountainCarResults { cells, best })
}

/// In-memory Mountain Car study.
pub fn run_mountain_car(cfg: &ExperimentConfig) -> Result<MountainCarResults> {
    simulate(cfg, |_, _, _, _, _, _| Ok(()))
}

/// Writes the sweep, best-step-size and learning-curve CSVs, plus the long
/// per-episode rows when `long_rows` is set.
pub fn run_mountain_car_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Artifacts> {
    let mut artifacts = Artifacts::default();
    let mut long = if cfg.long_rows {
        Some(CsvFile::create(out.join("mountain_car_runs.csv"), RUNS_HEADER)?)
    } else {
        None
    };
    let episodes = cfg.mountain_car.episodes;
    let results = simulate(cfg, |arm, sigma2, alpha, run, ep, row| match long.as_mut() {
        Some(csv) => csv.row(&format!(
            "{arm},{},{},{run},{ep},{},{},{},{}",
            fmt_f64(sigma2),
            fmt_f64(alpha),
            row.steps,
            fmt_f64(row.ret),
            row.termination.map_or("diverged", |t| t.as_str()),
            u8::from(ep + 1 == episodes)
        )),
        None => Ok(()),
    })?;
    if let Some(csv) = long {
        artifacts.add(csv.finish()?, RUNS_HEADER);
    }

    let mut sweep = CsvFile::create(out.join("mountain_car_sweep.csv"), SWEEP_HEADER)?;
    for c in &results.cells {
        sweep.row(&format!(
            "{},{},{},{},{},{},{}",
            c.arm,
            fmt_f64(c.sigma2),
            fmt_f64(c.alpha),
            c.final_steps.count,
            fmt_f64(c.final_steps.mean),
            fmt_f64(c.final_steps.std_error),
            c.diverged_runs
        ))?;
    }
    artifacts.add(sweep.finish()?, SWEEP_HEADER);

    let mut best = CsvFile::create(out.join("mountain_car_best.csv"), BEST_HEADER)?;
    let mut curves = CsvFile::create(out.join("mountain_car_curves.csv"), CURVES_HEADER)?;
    for b in &results.best {
        best.row(&format!(
            "{},{},{},{},{},{}",
            b.arm,
            fmt_f64(b.sigma2),
            fmt_f64(b.best_alpha),
            b.final_steps.count,
            fmt_f64(b.final_steps.mean),
            fmt_f64(b.final_steps.std_error)
        ))?;
        let cell = results.cell(b.arm, b.sigma2, b.best_alpha).expect("best cell exists");
        for (ep, s) in cell.curve.iter().enumerate() {
            curves.row(&format!(
                "{},{},{},{ep},{},{},{}",
                b.arm,
                fmt_f64(b.sigma2),
                fmt_f64(b.best_alpha),
                s.count,
                fmt_f64(s.mean),
                fmt_f64(s.std_error)
            ))?;
        }
    }
    artifacts.add(best.finish()?, BEST_HEADER);
    artifacts.add(curves.finish()?, CURVES_HEADER);
    Ok(artifacts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ExperimentKind;

    fn tiny() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(ExperimentKind::MountainCar);
        cfg.runs = 2;
        cfg.agent.arms = vec![Variant::Q, Variant::MaxminQ(2)];
        cfg.mountain_car.sigma2 = vec![0.0, 10.0];
        cfg.mountain_car.step_sizes = vec![0.04, 0.08];
        cfg.mountain_car.episodes = 3;
        cfg.mountain_car.step_cap = 300;
        cfg
    }

    #[test]
    fn shapes_and_best_selection() {
        let res = run_mountain_car(&tiny()).unwrap();
        assert_eq!(res.cells.len(), 2 * 2 * 2);
        assert_eq!(res.best.len(), 4);
        for b in &res.best {
            let others: Vec<f64> = res
                .cells
                .iter()
                .filter(|c| c.arm == b.arm && c.sigma2 == b.sigma2)
                .map(|c| c.final_steps.mean)
                .collect();
            assert!(others.iter().all(|&m| m >= b.final_steps.mean));
        }
        for c in &res.cells {
            assert_eq!(c.curve.len(), 3);
            assert!(c.final_steps.mean <= 300.0);
        }
    }

    #[test]
    fn divergence_is_recorded_at_the_cap() {
        let mut cfg = tiny();
        cfg.agent.arms = vec![Variant::Q];
        cfg.mountain_car.sigma2 = vec![50.0];
        cfg.mountain_car.step_sizes = vec![1.0];
        cfg.mountain_car.step_cap = 5000;
        cfg.mountain_car.episodes = 100;
        let res = run_mountain_car(&cfg).unwrap();
        let c = &res.cells[0];
        assert_eq!(c.diverged_runs, 2);
        assert_eq!(c.final_steps.mean, 5000.0);
    }
}
