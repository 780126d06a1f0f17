use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng;

use super::{GFunction, GWindow, StepSizeSchedule};
use crate::approx::QTable;
use crate::envs::{improper_states, value_iteration, TabularMdpSpec};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Updates between trace samples.
pub const TRACE_INTERVAL: usize = 1000;

/// Tolerance for the value-iteration ground truth.
const GROUND_TRUTH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTrace {
    pub g: GFunction,
    pub seed: u64,
    /// `(updates so far, max_i max_{s,a} |Qⁱ − Q*|)`, every
    /// [`TRACE_INTERVAL`] updates and after the last one.
    pub points: Vec<(usize, f64)>,
    pub estimators: Vec<QTable>,
    pub q_star: Vec<Vec<f64>>,
}

impl ErrorTrace {
    pub fn final_error(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.1)
    }

    /// Mean error over the last tenth of the samples is below the mean over
    /// the first tenth.
    pub fn trend_decreasing(&self) -> bool {
        let n = self.points.len();
        let w = (n / 10).max(1);
        if n < 2 {
            return false;
        }
        let mean = |s: &[(usize, f64)]| s.iter().map(|p| p.1).sum::<f64>() / s.len() as f64;
        mean(&self.points[n - w..]) < mean(&self.points[..w])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("update_index,max_norm_error\n");
        for (t, e) in &self.points {
            let _ = writeln!(out, "{t},{e:.16e}");
        }
        out
    }
}

/// Asynchronous generalized Q-learning with a uniform behaviour policy:
/// each tick draws one non-absorbing `(s, a)` and one estimator `i`
/// uniformly, samples `(r, s')`, and moves `Qⁱ(s, a)` toward
/// `r + γ G(window at s')` with the schedule's step size.
///
/// All tables start at zero; absorbing rows stay at zero. With `γ = 1` the
/// spec must have every policy proper.
pub fn run_generalized_q(
    spec: &TabularMdpSpec,
    g: GFunction,
    n: usize,
    k: usize,
    rho: f64,
    total_updates: usize,
    seed: u64,
) -> Result<ErrorTrace> {
    spec.validate()?;
    if n == 0 || k == 0 {
        return Err(Error::invalid("window", "N and K must be positive"));
    }
    if g == GFunction::Double && n != 2 {
        return Err(Error::invalid("n", "G_DQ needs exactly two estimators"));
    }
    if spec.gamma >= 1.0 {
        if spec.absorbing.is_empty() {
            return Err(Error::MdpSpec("undiscounted run needs an absorbing state".into()));
        }
        let improper = improper_states(spec);
        if !improper.is_empty() {
            return Err(Error::ImproperPolicy(improper));
        }
    }
    let q_star = value_iteration(spec, GROUND_TRUTH_TOL)?.q;

    let counts = spec.action_counts();
    let pairs: Vec<(usize, usize)> = (0..spec.state_count())
        .filter(|&s| !spec.is_absorbing(s))
        .flat_map(|s| (0..counts[s]).map(move |a| (s, a)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::MdpSpec("no non-absorbing state-action pairs".into()));
    }
    // Visit-counter slot of (pair, estimator).
    let mut schedule = StepSizeSchedule::new(rho, pairs.len() * n)?;
    let bound = if spec.gamma < 1.0 {
        spec.reward_bound().max(f64::MIN_POSITIVE) / (1.0 - spec.gamma) * 1e3
    } else {
        f64::INFINITY
    };

    let mut rng = rng_from_seed(seed);
    let mut tables = vec![QTable::zeros(&counts); n];
    // history[j - 1] holds all tables at lag j.
    let mut history: VecDeque<Vec<QTable>> = (1..k).map(|_| tables.clone()).collect();
    let mut window = GWindow::zeros(n, k, 1)?;

    let mut points = Vec::with_capacity(total_updates / TRACE_INTERVAL + 1);
    for t in 1..=total_updates {
        let p = rng.random_range(0..pairs.len());
        let i = if n > 1 { rng.random_range(0..n) } else { 0 };
        let (s, a) = pairs[p];
        let (next, reward) = spec.sample(s, a, &mut rng);

        let target = if spec.is_absorbing(next) {
            reward
        } else {
            window.reshape(n, k, counts[next]);
            for e in 0..n {
                window.slice_mut(e, 0).copy_from_slice(tables[e].row(next));
                for (j, lagged) in history.iter().enumerate() {
                    window.slice_mut(e, j + 1).copy_from_slice(lagged[e].row(next));
                }
            }
            reward + spec.gamma * g.eval_unchecked(&window)
        };

        if k > 1 {
            let mut oldest = history.pop_back().expect("k > 1");
            for (dst, src) in oldest.iter_mut().zip(&tables) {
                dst.copy_from(src);
            }
            history.push_front(oldest);
        }

        let alpha = schedule.next(p * n + i);
        let q = &mut tables[i].row_mut(s)[a];
        *q += alpha * (target - *q);
        if !q.is_finite() || q.abs() > bound {
            return Err(Error::Diverged {
                update: t,
                magnitude: q.abs(),
                bound,
            });
        }

        if t % TRACE_INTERVAL == 0 || t == total_updates {
            points.push((t, max_norm_error(&tables, &q_star)));
        }
    }

    Ok(ErrorTrace {
        g,
        seed,
        points,
        estimators: tables,
        q_star,
    })
}

fn max_norm_error(tables: &[QTable], q_star: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for t in tables {
        for (s, row) in q_star.iter().enumerate() {
            for (q, v) in t.row(s).iter().zip(row) {
                worst = worst.max((q - v).abs());
            }
        }
    }
    worst
}

/// [`run_generalized_q`] for `γ = 1` specs with an absorbing state; rejects
/// specs where some policy never absorbs.
pub fn run_undiscounted_case(
    spec: &TabularMdpSpec,
    g: GFunction,
    n: usize,
    k: usize,
    rho: f64,
    total_updates: usize,
    seed: u64,
) -> Result<ErrorTrace> {
    if spec.gamma != 1.0 {
        return Err(Error::invalid("gamma", format!("undiscounted case needs γ = 1, got {}", spec.gamma)));
    }
    run_generalized_q(spec, g, n, k, rho, total_updates, seed)
}
