use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qbias::harness::{run_experiment, ExperimentConfig, ExperimentKind};
use qbias::Variant;

#[derive(Parser)]
#[command(name = "qbias", version, about = "Estimation-bias experiments for Q-learning variants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form bias/variance grid over (M, N), with optional Monte Carlo columns.
    Theory {
        #[command(flatten)]
        common: Common,
        /// Monte Carlo samples per cell (0 skips the oracle).
        #[arg(long)]
        mc_samples: Option<usize>,
    },
    /// Two-state toy MDP learning curves.
    Mdp {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        toy: ToyArgs,
    },
    /// Noisy Mountain Car step-size sweep.
    MountainCar {
        #[command(flatten)]
        common: Common,
        /// Reward variances, comma separated.
        #[arg(long, value_delimiter = ',')]
        sigma2: Option<Vec<f64>>,
        #[arg(long)]
        episodes: Option<usize>,
        /// Replaces the estimator counts of the MaxminQ arms.
        #[arg(long, value_delimiter = ',')]
        n_estimators: Option<Vec<usize>>,
    },
    /// Generalized Q-learning convergence study.
    Converge {
        #[command(flatten)]
        common: Common,
    },
    /// MaxminQ estimator count × mu sweep on the toy MDP.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        toy: ToyArgs,
    },
    /// Parses a config file and prints its normalised form.
    ValidateConfig {
        #[arg(long, short)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Existing directory to write into; defaults to the config's `output`, then `.`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Args)]
struct ToyArgs {
    /// Reward means at B, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mu: Option<Vec<f64>>,
    #[arg(long)]
    episodes: Option<usize>,
    /// MaxminQ estimator counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    n_estimators: Option<Vec<usize>>,
}

fn load(kind: ExperimentKind, common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            if cfg.kind != kind {
                bail!(
                    "{} describes a `{}` experiment, not `{}`",
                    path.display(),
                    cfg.kind.as_str(),
                    kind.as_str()
                );
            }
            cfg
        }
        None => ExperimentConfig::new(kind),
    };
    if let Some(seed) = common.seed {
        cfg.base_seed = seed;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if let Some(r) = common.runs {
        cfg.runs = r;
    }
    Ok(cfg)
}

/// Swaps every MaxminQ arm for one arm per requested estimator count, keeping
/// the position of the first.
fn replace_maxmin_arms(arms: &mut Vec<Variant>, counts: &[usize]) {
    let at = arms
        .iter()
        .position(|v| matches!(v, Variant::MaxminQ(_)))
        .unwrap_or(arms.len());
    arms.retain(|v| !matches!(v, Variant::MaxminQ(_)));
    let at = at.min(arms.len());
    arms.splice(at..at, counts.iter().map(|&n| Variant::MaxminQ(n)));
}

fn apply_toy(cfg: &mut ExperimentConfig, toy: ToyArgs) {
    if let Some(mu) = toy.mu {
        cfg.simple_mdp.mu = mu;
    }
    if let Some(e) = toy.episodes {
        cfg.simple_mdp.episodes = e;
    }
    if let Some(ns) = toy.n_estimators {
        if cfg.kind == ExperimentKind::Sweep {
            cfg.sweep.n_values = ns;
        } else {
            replace_maxmin_arms(&mut cfg.agent.arms, &ns);
        }
    }
}

fn execute(cfg: &ExperimentConfig, common: &Common) -> Result<()> {
    let out: &Path = common
        .out
        .as_deref()
        .or(cfg.output.as_deref())
        .unwrap_or(Path::new("."));
    let artifacts = run_experiment(cfg, out)?;
    for (path, _) in &artifacts.files {
        println!("wrote {}", path.display());
    }
    println!("wrote {}", out.join("manifest.txt").display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Theory { common, mc_samples } => {
            let mut cfg = load(ExperimentKind::TheoryGrid, &common)?;
            if let Some(s) = mc_samples {
                cfg.theory.mc_samples = s;
            }
            execute(&cfg, &common)
        }
        Command::Mdp { common, toy } => {
            let mut cfg = load(ExperimentKind::SimpleMdp, &common)?;
            apply_toy(&mut cfg, toy);
            execute(&cfg, &common)
        }
        Command::Sweep { common, toy } => {
            let mut cfg = load(ExperimentKind::Sweep, &common)?;
            apply_toy(&mut cfg, toy);
            execute(&cfg, &common)
        }
        Command::MountainCar {
            common,
            sigma2,
            episodes,
            n_estimators,
        } => {
            let mut cfg = load(ExperimentKind::MountainCar, &common)?;
            if let Some(s) = sigma2 {
                cfg.mountain_car.sigma2 = s;
            }
            if let Some(e) = episodes {
                cfg.mountain_car.episodes = e;
            }
            if let Some(ns) = n_estimators {
                replace_maxmin_arms(&mut cfg.agent.arms, &ns);
            }
            execute(&cfg, &common)
        }
        Command::Converge { common } => {
            let cfg = load(ExperimentKind::Converge, &common)?;
            execute(&cfg, &common)
        }
        Command::ValidateConfig { config } => {
            let cfg = ExperimentConfig::load(&config).with_context(|| format!("invalid config {}", config.display()))?;
            print!("{}", cfg.to_text());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxmin_arms_are_replaced_in_place() {
        let mut arms = vec![Variant::Q, Variant::MaxminQ(2), Variant::DoubleQ, Variant::MaxminQ(8)];
        replace_maxmin_arms(&mut arms, &[3, 5]);
        assert_eq!(
            arms,
            vec![Variant::Q, Variant::MaxminQ(3), Variant::MaxminQ(5), Variant::DoubleQ]
        );
        let mut none = vec![Variant::Q];
        replace_maxmin_arms(&mut none, &[4]);
        assert_eq!(none, vec![Variant::Q, Variant::MaxminQ(4)]);
    }
}
