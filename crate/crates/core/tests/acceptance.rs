//! End-to-end acceptance run. Prints one `PASS`/`FAIL` line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use qbias::agents::run_episode_with;
use qbias::generalized_q::{check_assumption1_i, check_assumption1_ii};
use qbias::harness::{run_convergence, run_mountain_car, run_simple_mdp, ExperimentConfig, ExperimentKind};
use qbias::order_stats::{expected_bias, mc_cell, mc_min_oracle, variance_min, variance_ratio};
use qbias::rng::{rng_from_seed, run_seed};
use qbias::stats::{diff_std_error, Summary};
use qbias::{Agent, AgentConfig, BiasSpec, GFunction, QTable, SimpleMdp, SimpleMdpConfig, Variant};

const SEED: u64 = 20_240_901;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn bias(m: usize, n: usize) -> f64 {
    expected_bias(&BiasSpec::new(m, n, 1.0, 1.0).unwrap()).unwrap()
}

fn bias_closed_form() -> Outcome {
    let mut worst_sigmas: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    let mut failures = Vec::new();
    for m in 1..=8 {
        for n in 1..=8 {
            let exact = bias(m, n);
            let mc = mc_cell(m, n, 1.0, 1_000_000, SEED).unwrap();
            let err = (mc.mean - exact).abs();
            worst_sigmas = worst_sigmas.max(err / mc.std_error);
            worst_abs = worst_abs.max(err);
            if err > 4.0 * mc.std_error || err > 5e-3 {
                failures.push(format!("(M={m},N={n}) mc {:.5} vs {exact:.5}", mc.mean));
            }
        }
    }
    let spot_a = (bias(8, 1) - 7.0 / 9.0).abs();
    let spot_b = (bias(1, 2) + 1.0 / 3.0).abs();
    if spot_a > 1e-12 || spot_b > 1e-12 {
        failures.push(format!("spot values off by {spot_a:e}, {spot_b:e}"));
    }
    outcome(
        failures.is_empty(),
        format!(
            "64 cells at 1e6 samples, worst {worst_sigmas:.2} SE, worst abs error {worst_abs:.2e}; {}",
            if failures.is_empty() { "spot values exact".to_string() } else { failures.join("; ") }
        ),
    )
}

fn min_variance() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for n in 1..=8 {
        let nf = n as f64;
        let exact = 4.0 * nf / ((nf + 1.0).powi(2) * (nf + 2.0));
        let closed = variance_min(n, 1.0).unwrap();
        let mc = mc_min_oracle(n, 1.0, 1_000_000, SEED + n as u64).unwrap();
        let rel = (mc.variance - exact).abs() / exact;
        worst = worst.max(rel);
        if rel > 0.01 || (closed - exact).abs() > 1e-15 {
            failures.push(format!("N={n}: mc {:.6} vs {exact:.6}", mc.variance));
        }
    }
    let n1 = (variance_min(1, 1.0).unwrap() - 1.0 / 3.0).abs();
    if n1 > 1e-15 {
        failures.push(format!("N=1 closed form off by {n1:e}"));
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("N in 1..=8 at 1e6 samples, worst relative error {worst:.3e}")
        } else {
            format!("worst relative error {worst:.3e}; {}", failures.join("; "))
        },
    )
}

fn ratio_threshold() -> Outcome {
    let above = (2..=7).all(|n| variance_ratio(n).unwrap() > 1.0);
    let below = (8..=64).all(|n| variance_ratio(n).unwrap() < 1.0);
    let at8 = (variance_ratio(8).unwrap() - 768.0 / 810.0).abs();
    outcome(
        above && below && at8 <= 1e-12,
        format!("ratio > 1 on 2..=7: {above}, < 1 on 8..=64: {below}, |ratio(8) - 768/810| = {at8:e}"),
    )
}

fn monotonicity() -> Outcome {
    let mut bad = Vec::new();
    for m in 1..=8 {
        for n in 1..64 {
            if bias(m, n + 1) >= bias(m, n) {
                bad.push(format!("bias M={m} N={n}"));
            }
        }
    }
    for n in 1..64 {
        if variance_min(n + 1, 1.0).unwrap() >= variance_min(n, 1.0).unwrap() {
            bad.push(format!("variance N={n}"));
        }
    }
    outcome(
        bad.is_empty(),
        format!("M in 1..=8, N in 1..=64: {} violations {}", bad.len(), bad.join(", ")).trim_end(),
    )
}

const ASSERTED: [GFunction; 5] = [
    GFunction::Q,
    GFunction::Maxmin,
    GFunction::Ensemble,
    GFunction::Averaged,
    GFunction::HistoricalBest,
];

fn assumption1() -> Outcome {
    let mut rng = rng_from_seed(SEED);
    let mut lines = Vec::new();
    let mut pass = true;
    for g in ASSERTED {
        for report in [check_assumption1_i(g, 10_000, &mut rng), check_assumption1_ii(g, 10_000, &mut rng)] {
            pass &= report.trials == 10_000 && report.failures == 0;
            lines.push(format!("{} {}:{}", g, report.check, report.failures));
        }
    }
    outcome(pass, format!("failures per check [{}]", lines.join(" ")))
}

fn convergence() -> Outcome {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Converge);
    cfg.runs = 10;
    cfg.base_seed = SEED;
    cfg.converge.g = ASSERTED.to_vec();
    let study = run_convergence(&cfg).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for g in ASSERTED {
        let runs: Vec<_> = study.summaries.iter().filter(|s| s.g == g).collect();
        let below = runs.iter().filter(|s| s.final_error < cfg.converge.tolerance).count();
        let trend = runs.iter().filter(|s| s.trend_decreasing).count();
        let worst = runs.iter().map(|s| s.final_error).fold(0.0, f64::max);
        let median = {
            let mut e: Vec<f64> = runs.iter().map(|s| s.final_error).collect();
            e.sort_by(f64::total_cmp);
            e[e.len() / 2]
        };
        pass &= runs.len() == 10 && below >= 9 && trend == runs.len();
        parts.push(format!(
            "{g}: {below}/10 below {}, trend {trend}/10, median {median:.3}, worst {worst:.3}",
            cfg.converge.tolerance
        ));
    }
    outcome(pass, parts.join("; "))
}

fn gap(lo: &Summary, hi: &Summary) -> (bool, f64) {
    let se = diff_std_error(lo, hi);
    (hi.mean - lo.mean > 2.0 * se, se)
}

fn toy_ordering() -> Outcome {
    let mut cfg = ExperimentConfig::new(ExperimentKind::SimpleMdp);
    cfg.runs = 500;
    cfg.base_seed = SEED;
    cfg.simple_mdp.mu = vec![0.1, -0.1];
    cfg.simple_mdp.episodes = 2000;
    cfg.agent.arms = vec![Variant::Q, Variant::MaxminQ(8), Variant::DoubleQ];
    let res = run_simple_mdp(&cfg).unwrap();
    let fin = |arm, mu| res.final_summary(arm, mu).unwrap().policy_distance;
    let mut pass = true;
    let mut parts = Vec::new();
    for (mu, order) in [
        (0.1, [Variant::Q, Variant::MaxminQ(8), Variant::DoubleQ]),
        (-0.1, [Variant::DoubleQ, Variant::MaxminQ(8), Variant::Q]),
    ] {
        let s: Vec<Summary> = order.iter().map(|&a| fin(a, mu)).collect();
        let (g1, _) = gap(&s[0], &s[1]);
        let (g2, _) = gap(&s[1], &s[2]);
        let (g3, _) = gap(&s[0], &s[2]);
        pass &= g1 && g2 && g3;
        parts.push(format!(
            "mu={mu:+}: {} {:.4}±{:.4} < {} {:.4}±{:.4} < {} {:.4}±{:.4} ({})",
            order[0],
            s[0].mean,
            s[0].std_error,
            order[1],
            s[1].mean,
            s[1].std_error,
            order[2],
            s[2].mean,
            s[2].std_error,
            if g1 && g2 && g3 { "holds" } else { "violated" }
        ));
    }
    outcome(pass, parts.join("; "))
}

fn mountain_car() -> Outcome {
    let mut cfg = ExperimentConfig::new(ExperimentKind::MountainCar);
    cfg.runs = 20;
    cfg.base_seed = SEED;
    cfg.agent.arms = vec![
        Variant::Q,
        Variant::MaxminQ(2),
        Variant::MaxminQ(4),
        Variant::MaxminQ(6),
        Variant::MaxminQ(8),
    ];
    cfg.mountain_car.sigma2 = vec![10.0, 50.0];
    cfg.mountain_car.episodes = 1000;
    let res = run_mountain_car(&cfg).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for sigma2 in [10.0, 50.0] {
        let q = res.best_for(Variant::Q, sigma2).unwrap();
        let best = [2, 4, 6, 8]
            .iter()
            .map(|&n| res.best_for(Variant::MaxminQ(n), sigma2).unwrap())
            .min_by(|a, b| a.final_steps.mean.total_cmp(&b.final_steps.mean))
            .unwrap();
        let (beats, se) = gap(&best.final_steps, &q.final_steps);
        pass &= beats;
        parts.push(format!(
            "sigma2={sigma2}: Q {:.1}±{:.1} (alpha {}), best {} {:.1}±{:.1} (alpha {}), gap SE {se:.1}",
            q.final_steps.mean,
            q.final_steps.std_error,
            q.best_alpha,
            best.arm,
            best.final_steps.mean,
            best.final_steps.std_error,
            best.best_alpha
        ));
        if sigma2 == 50.0 {
            let capped = q.final_steps.mean > 4000.0;
            pass &= capped;
            parts.push(format!("Q above 4000 at sigma2=50: {capped}"));
        }
    }
    outcome(pass, parts.join("; "))
}

/// Every transition, the behaviour values after it, and the final tables.
fn toy_trajectory(variant: Variant, seed: u64) -> (Vec<u64>, Vec<u64>) {
    let env_cfg = SimpleMdpConfig::with_mu(0.1);
    let counts = env_cfg.action_counts();
    let mut env = SimpleMdp::new(env_cfg).unwrap();
    let mut rng = rng_from_seed(seed);
    let mut agent = Agent::new(AgentConfig::toy(variant), || QTable::gaussian(&counts, 0.0, 0.01, &mut rng)).unwrap();
    let mut trace = Vec::new();
    for ep in 0..300 {
        let mut steps = Vec::new();
        run_episode_with(&mut agent, &mut env, ep, &mut rng, |t| {
            steps.push([t.state as u64, t.action as u64, t.reward.to_bits(), t.next_state as u64]);
        })
        .unwrap();
        for s in steps {
            trace.extend(s);
            for state in 0..counts.len() {
                trace.extend(agent.behavior_values_at(&state).unwrap().iter().map(|v| v.to_bits()));
            }
        }
    }
    let tables = agent
        .estimators()
        .iter()
        .flat_map(|t| t.values().iter().map(|v| v.to_bits()))
        .collect();
    (trace, tables)
}

fn reductions() -> Outcome {
    let mut mismatches = Vec::new();
    for s in 0..100u64 {
        let seed = run_seed(SEED, "reduction", s);
        let reference = toy_trajectory(Variant::Q, seed);
        for v in [Variant::MaxminQ(1), Variant::EnsembleQ(1), Variant::AveragedQ(1)] {
            if toy_trajectory(v, seed) != reference {
                mismatches.push(format!("{v} seed {s}"));
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("100 seeds x 300 episodes, {} mismatches {}", mismatches.len(), mismatches.join(", ")).trim_end(),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("bias closed form vs Monte Carlo", bias_closed_form),
        ("variance of the minimum vs Monte Carlo", min_variance),
        ("variance ratio threshold at N = 8", ratio_threshold),
        ("bias and variance decrease in N", monotonicity),
        ("structural checks on G", assumption1),
        ("generalized Q convergence", convergence),
        ("toy MDP ordering", toy_ordering),
        ("noisy Mountain Car robustness", mountain_car),
        ("single-estimator reductions", reductions),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id}: {name} [{secs:.1}s] {}", result.detail);
        failed += usize::from(!result.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
