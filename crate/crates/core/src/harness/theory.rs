//! The `(M, N)` bias/variance grid with optional Monte Carlo columns.

use std::path::Path;

use super::{fmt_f64, run_tasks, Artifacts, CsvFile, ExperimentConfig};
use crate::error::Result;
use crate::order_stats::{bias_variance_grid, mc_cell, BiasResult, McEstimate};

pub const THEORY_HEADER: &str =
    "M,N,gamma,tau,t_mn,expected_bias,variance_min,variance_ratio,mc_bias_mean,mc_bias_se,mc_samples";

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryRow {
    pub closed_form: BiasResult,
    /// Oracle estimate of the bootstrap error, already scaled by `γ`.
    pub mc: Option<McEstimate>,
}

/// Closed forms for `M ∈ 1..=m_max`, `N ∈ 1..=n_max`, plus the oracle when
/// `mc_samples > 0`.
pub fn theory_rows(cfg: &ExperimentConfig) -> Result<Vec<TheoryRow>> {
    let t = &cfg.theory;
    let grid = bias_variance_grid(1..=t.m_max, 1..=t.n_max, t.gamma, t.tau)?;
    if t.mc_samples == 0 {
        return Ok(grid.into_iter().map(|closed_form| TheoryRow { closed_form, mc: None }).collect());
    }
    let mut rows = Vec::with_capacity(grid.len());
    run_tasks(
        &grid,
        cfg.workers,
        |cell| {
            let mut mc = mc_cell(cell.spec.m, cell.spec.n, t.tau, t.mc_samples, cfg.base_seed)?;
            mc.mean *= t.gamma;
            mc.std_error *= t.gamma;
            mc.variance *= t.gamma * t.gamma;
            Ok(mc)
        },
        |cell, mc| {
            rows.push(TheoryRow {
                closed_form: *cell,
                mc: Some(mc),
            });
            Ok(())
        },
    )?;
    Ok(rows)
}

/// Writes `theory_grid.csv`.
pub fn run_theory_grid(cfg: &ExperimentConfig, out: &Path) -> Result<Artifacts> {
    let rows = theory_rows(cfg)?;
    let mut csv = CsvFile::create(out.join("theory_grid.csv"), THEORY_HEADER)?;
    for row in &rows {
        let r = &row.closed_form;
        let (mean, se, samples) = match &row.mc {
            Some(mc) => (fmt_f64(mc.mean), fmt_f64(mc.std_error), mc.samples.to_string()),
            None => (String::new(), String::new(), "0".to_string()),
        };
        csv.row(&format!(
            "{},{},{},{},{},{},{},{},{mean},{se},{samples}",
            r.spec.m,
            r.spec.n,
            fmt_f64(r.spec.gamma),
            fmt_f64(r.spec.tau),
            fmt_f64(r.t_mn),
            fmt_f64(r.expected_bias),
            fmt_f64(r.variance_min),
            fmt_f64(r.variance_ratio),
        ))?;
    }
    let mut artifacts = Artifacts::default();
    artifacts.add(csv.finish()?, THEORY_HEADER);
    Ok(artifacts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ExperimentKind;

    #[test]
    fn grid_with_oracle() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::TheoryGrid);
        cfg.theory.m_max = 3;
        cfg.theory.n_max = 2;
        cfg.theory.mc_samples = 20_000;
        let rows = theory_rows(&cfg).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!((rows[1].closed_form.spec.m, rows[1].closed_form.spec.n), (1, 2));
        for row in &rows {
            let mc = row.mc.unwrap();
            assert!((mc.mean - row.closed_form.expected_bias).abs() < 5.0 * mc.std_error);
        }
    }
}
