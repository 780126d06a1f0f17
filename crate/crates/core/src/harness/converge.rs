//! Convergence of generalized Q-learning across the `G` catalog, plus the
//! structural checks on each `G`.

use std::fs;
use std::path::Path;

use super::{fmt_f64, run_tasks, Artifacts, CsvFile, ExperimentConfig};
use crate::envs::spec_file::load_spec;
use crate::envs::{random_mdp, TabularMdpSpec};
use crate::error::{Error, Result};
use crate::generalized_q::{
    check_assumption1_i, check_assumption1_ii, run_generalized_q, AssumptionReport, ErrorTrace, GFunction,
};
use crate::rng::{label_hash, rng_from_seed, run_seed};

const SUMMARY_HEADER: &str = "g,N,K,seed,final_error,trend_decreasing,pass,error";
const TABLE_HEADER: &str = "g,seeds,passed,required,pass";
const ASSUMPTION_HEADER: &str = "g,check,trials,failures,asserted";
const TRACE_HEADER: &str = "update_index,max_norm_error";

/// Outcome of one `(G, seed)` run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSummary {
    pub g: GFunction,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub final_error: f64,
    pub trend_decreasing: bool,
    pub passed: bool,
    /// Divergence or other run failure, verbatim.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub summaries: Vec<ConvergenceSummary>,
    /// Successful runs, in the same order as `summaries`.
    pub traces: Vec<ErrorTrace>,
    pub assumption_reports: Vec<AssumptionReport>,
}

impl ConvergenceStudy {
    /// `(passed seeds, total seeds)` for `g`.
    pub fn pass_count(&self, g: GFunction) -> (usize, usize) {
        let runs = self.summaries.iter().filter(|s| s.g == g);
        let total = runs.clone().count();
        (runs.filter(|s| s.passed).count(), total)
    }
}

/// Seeds that must pass: nine in ten, rounded up.
fn required(seeds: usize) -> usize {
    (seeds * 9).div_ceil(10)
}

/// The MDP named by the config: a spec file if given, else a random MDP.
pub fn converge_mdp(cfg: &ExperimentConfig) -> Result<TabularMdpSpec> {
    let c = &cfg.converge;
    match &c.mdp_file {
        Some(path) => load_spec(path),
        None => random_mdp(c.states, c.actions, c.branching, c.gamma, c.mdp_seed),
    }
}

/// Runs every configured `G` for `runs` seeds; in memory.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceStudy> {
    let c = &cfg.converge;
    let spec = converge_mdp(cfg)?;
    let tasks: Vec<(GFunction, u64)> = c
        .g
        .iter()
        .flat_map(|&g| (0..cfg.runs as u64).map(move |r| (g, run_seed(cfg.base_seed, g.name(), r))))
        .collect();
    let mut summaries = Vec::with_capacity(tasks.len());
    let mut traces = Vec::new();
    run_tasks(
        &tasks,
        cfg.workers,
        |&(g, seed)| {
            let (n, k) = g.default_shape();
            match run_generalized_q(&spec, g, n, k, c.rho, c.updates, seed) {
                Ok(trace) => Ok(Ok(trace)),
                Err(e @ Error::Diverged { .. }) => Ok(Err(e.to_string())),
                Err(e) => Err(e),
            }
        },
        |&(g, seed), outcome| {
            let (n, k) = g.default_shape();
            let summary = match outcome {
                Ok(trace) => {
                    let final_error = trace.final_error();
                    let trend = trace.trend_decreasing();
                    traces.push(trace);
                    ConvergenceSummary {
                        g,
                        n,
                        k,
                        seed,
                        final_error,
                        trend_decreasing: trend,
                        passed: final_error < c.tolerance && trend,
                        error: None,
                    }
                }
                Err(message) => ConvergenceSummary {
                    g,
                    n,
                    k,
                    seed,
                    final_error: f64::NAN,
                    trend_decreasing: false,
                    passed: false,
                    error: Some(message),
                },
            };
            summaries.push(summary);
            Ok(())
        },
    )?;
    let assumption_reports = c
        .g
        .iter()
        .flat_map(|&g| {
            let mut rng = rng_from_seed(run_seed(cfg.base_seed, g.name(), label_hash("assumption1")));
            [
                check_assumption1_i(g, c.assumption_trials, &mut rng),
                check_assumption1_ii(g, c.assumption_trials, &mut rng),
            ]
        })
        .collect();
    Ok(ConvergenceStudy {
        summaries,
        traces,
        assumption_reports,
    })
}

/// Writes the per-seed summary, the pass table, the structural checks and
/// one trace file per `(G, seed)` under `traces/`.
pub fn run_convergence_study(cfg: &ExperimentConfig, out: &Path) -> Result<Artifacts> {
    let study = run_convergence(cfg)?;
    let mut artifacts = Artifacts::default();

    let mut summary = CsvFile::create(out.join("converge_summary.csv"), SUMMARY_HEADER)?;
    for s in &study.summaries {
        summary.row(&format!(
            "{},{},{},{},{},{},{},{}",
            s.g,
            s.n,
            s.k,
            s.seed,
            fmt_f64(s.final_error),
            u8::from(s.trend_decreasing),
            u8::from(s.passed),
            s.error.as_deref().unwrap_or("").replace(',', ";")
        ))?;
    }
    artifacts.add(summary.finish()?, SUMMARY_HEADER);

    let mut table = CsvFile::create(out.join("converge_table.csv"), TABLE_HEADER)?;
    for &g in &cfg.converge.g {
        let (passed, total) = study.pass_count(g);
        let need = required(total);
        table.row(&format!("{g},{total},{passed},{need},{}", u8::from(passed >= need)))?;
    }
    artifacts.add(table.finish()?, TABLE_HEADER);

    let mut checks = CsvFile::create(out.join("converge_assumption1.csv"), ASSUMPTION_HEADER)?;
    for r in &study.assumption_reports {
        checks.row(&format!("{},{},{},{},{}", r.g, r.check, r.trials, r.failures, u8::from(r.asserted)))?;
    }
    artifacts.add(checks.finish()?, ASSUMPTION_HEADER);

    let dir = out.join("traces");
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for trace in &study.traces {
        let path = dir.join(format!("{}_seed{}.csv", trace.g, trace.seed));
        fs::write(&path, trace.to_csv()).map_err(|e| Error::io(&path, e))?;
        artifacts.add(path, TRACE_HEADER);
    }
    Ok(artifacts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ExperimentKind;

    #[test]
    fn small_study() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Converge);
        cfg.runs = 2;
        cfg.converge.g = vec![GFunction::Q, GFunction::Maxmin];
        cfg.converge.updates = 5000;
        cfg.converge.assumption_trials = 100;
        let study = run_convergence(&cfg).unwrap();
        assert_eq!(study.summaries.len(), 4);
        assert_eq!(study.traces.len(), 4);
        assert_eq!(study.assumption_reports.len(), 4);
        assert!(study.assumption_reports.iter().all(AssumptionReport::passed));
        assert_eq!(study.pass_count(GFunction::Q).1, 2);
    }

    #[test]
    fn nine_in_ten() {
        assert_eq!(required(10), 9);
        assert_eq!(required(1), 1);
        assert_eq!(required(3), 3);
        assert_eq!(required(20), 18);
    }
}
