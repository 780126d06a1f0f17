//! Generalized Q-learning: the bootstrap value at `s'` is any function `G`
//! of an `N × K` window of estimator histories.
//!
//! Q, Maxmin, Ensemble, Averaged and historical-best Q all satisfy the two
//! structural conditions checked in [`check_assumption1_i`] and
//! [`check_assumption1_ii`]; Double Q is kept in the catalog for comparison
//! and only reported on.

mod convergence;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

pub use convergence::{run_generalized_q, run_undiscounted_case, ErrorTrace, TRACE_INTERVAL};

use crate::error::{Error, Result};

/// Entry `(i, j, a)` is estimator `i`'s value of action `a` at lag `j`
/// (`j = 0` is the most recent).
#[derive(Debug, Clone, PartialEq)]
pub struct GWindow {
    n: usize,
    k: usize,
    actions: usize,
    values: Vec<f64>,
}

impl GWindow {
    pub fn new(n: usize, k: usize, actions: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || k == 0 || actions == 0 {
            return Err(Error::invalid("window", "N, K and the action count must be positive"));
        }
        if values.len() != n * k * actions {
            return Err(Error::invalid(
                "window",
                format!("expected {} values, got {}", n * k * actions, values.len()),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid("window", format!("non-finite entry {v}")));
        }
        Ok(GWindow { n, k, actions, values })
    }

    pub fn zeros(n: usize, k: usize, actions: usize) -> Result<Self> {
        Self::new(n, k, actions, vec![0.0; n * k * actions])
    }

    /// Every `(i, j)` slice set to `action_values`.
    pub fn replicated(n: usize, k: usize, action_values: &[f64]) -> Result<Self> {
        let values = action_values.repeat(n * k);
        Self::new(n, k, action_values.len(), values)
    }

    pub fn estimators(&self) -> usize {
        self.n
    }

    pub fn lags(&self) -> usize {
        self.k
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, a: usize) -> f64 {
        self.values[(i * self.k + j) * self.actions + a]
    }

    /// Action values of estimator `i` at lag `j`.
    pub fn slice(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.k + j) * self.actions;
        &self.values[start..start + self.actions]
    }

    pub(crate) fn slice_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let start = (i * self.k + j) * self.actions;
        &mut self.values[start..start + self.actions]
    }

    /// Reshapes in place, reusing the allocation.
    pub(crate) fn reshape(&mut self, n: usize, k: usize, actions: usize) {
        self.n = n;
        self.k = k;
        self.actions = actions;
        self.values.resize(n * k * actions, 0.0);
    }

    /// Largest `|self − other|` over all entries; windows must share a shape.
    pub fn max_abs_diff(&self, other: &GWindow) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GFunction {
    /// `max_a Q⁰_a` at lag 0.
    Q,
    /// `max_a min_i Qⁱ_a` at lag 0.
    Maxmin,
    /// `max_a mean_i Qⁱ_a` at lag 0.
    Ensemble,
    /// `max_a mean_{i,j} Qⁱʲ_a`; with one estimator this is the lag mean.
    Averaged,
    /// Largest entry in the window.
    HistoricalBest,
    /// `Q¹` at the greedy action of `Q⁰` (lowest index on ties), lag 0.
    Double,
}

impl GFunction {
    pub const CATALOG: [GFunction; 6] = [
        GFunction::Q,
        GFunction::Maxmin,
        GFunction::Ensemble,
        GFunction::Averaged,
        GFunction::HistoricalBest,
        GFunction::Double,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GFunction::Q => "G_Q",
            GFunction::Maxmin => "G_MQ",
            GFunction::Ensemble => "G_EQ",
            GFunction::Averaged => "G_AQ",
            GFunction::HistoricalBest => "G_HBQ",
            GFunction::Double => "G_DQ",
        }
    }

    /// Whether both structural conditions are claimed for this `G`. Double Q
    /// is not: a small perturbation can flip the selecting argmax.
    pub fn asserted_assumption1(&self) -> bool {
        !matches!(self, GFunction::Double)
    }

    /// Window shape `(N, K)` used for convergence runs.
    pub fn default_shape(&self) -> (usize, usize) {
        match self {
            GFunction::Q => (1, 1),
            GFunction::Maxmin | GFunction::Ensemble | GFunction::Double => (2, 1),
            GFunction::Averaged => (1, 2),
            GFunction::HistoricalBest => (2, 2),
        }
    }

    pub fn evaluate(&self, w: &GWindow) -> Result<f64> {
        if *self == GFunction::Double && w.n != 2 {
            return Err(Error::invalid("window", format!("G_DQ needs N = 2, got {}", w.n)));
        }
        Ok(self.eval_unchecked(w))
    }

    pub(crate) fn eval_unchecked(&self, w: &GWindow) -> f64 {
        let max_over_actions = |f: &dyn Fn(usize) -> f64| (0..w.actions).map(f).fold(f64::NEG_INFINITY, f64::max);
        match self {
            GFunction::Q => max_over_actions(&|a| w.get(0, 0, a)),
            GFunction::Maxmin => {
                max_over_actions(&|a| (0..w.n).map(|i| w.get(i, 0, a)).fold(f64::INFINITY, f64::min))
            }
            GFunction::Ensemble => max_over_actions(&|a| shifted_mean((0..w.n).map(|i| w.get(i, 0, a)))),
            GFunction::Averaged => max_over_actions(&|a| {
                shifted_mean((0..w.n).flat_map(|i| (0..w.k).map(move |j| w.get(i, j, a))))
            }),
            GFunction::HistoricalBest => w.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            GFunction::Double => {
                let select = w.slice(0, 0);
                let best = select
                    .iter()
                    .enumerate()
                    .fold(0, |b, (a, &v)| if v > select[b] { a } else { b });
                w.get(1, 0, best)
            }
        }
    }
}

/// Mean computed as `x₀ + mean(xᵢ − x₀)`, which is exact when all inputs
/// are equal.
fn shifted_mean(mut xs: impl Iterator<Item = f64>) -> f64 {
    let Some(first) = xs.next() else {
        return f64::NAN;
    };
    let (mut sum, mut count) = (0.0, 1.0);
    for x in xs {
        sum += x - first;
        count += 1.0;
    }
    first + sum / count
}

impl fmt::Display for GFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let key = key.strip_prefix("g_").unwrap_or(&key);
        Ok(match key {
            "q" => GFunction::Q,
            "mq" | "maxmin" => GFunction::Maxmin,
            "eq" | "ensemble" => GFunction::Ensemble,
            "aq" | "averaged" => GFunction::Averaged,
            "hbq" | "historical_best" => GFunction::HistoricalBest,
            "dq" | "double" => GFunction::Double,
            _ => return Err(Error::Config(format!("unknown G function `{s}`"))),
        })
    }
}

/// Robbins–Monro step sizes `α = 1 / (1 + visits)^ρ` with one visit counter
/// per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSizeSchedule {
    rho: f64,
    visits: Vec<u64>,
}

impl StepSizeSchedule {
    pub fn new(rho: f64, slots: usize) -> Result<Self> {
        if !(rho > 0.5 && rho <= 1.0) {
            return Err(Error::invalid("rho", format!("{rho} not in (0.5, 1]")));
        }
        Ok(StepSizeSchedule {
            rho,
            visits: vec![0; slots],
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn alpha(rho: f64, visits: u64) -> f64 {
        (1.0 + visits as f64).powf(-rho)
    }

    pub fn visits(&self, slot: usize) -> u64 {
        self.visits[slot]
    }

    /// Step size for the next update of `slot`; counts the visit.
    pub fn next(&mut self, slot: usize) -> f64 {
        let v = &mut self.visits[slot];
        let alpha = Self::alpha(self.rho, *v);
        *v += 1;
        alpha
    }

    /// `Σ α` and `Σ α²` over the first `t` visits of one slot.
    pub fn partial_sums(rho: f64, t: u64) -> (f64, f64) {
        (0..t).fold((0.0, 0.0), |(s1, s2), v| {
            let a = Self::alpha(rho, v);
            (s1 + a, s2 + a * a)
        })
    }

    /// Upper bound on `Σ α²` over infinitely many visits: `ζ(2ρ) ≤ 1 + 1/(2ρ − 1)`.
    pub fn square_sum_bound(rho: f64) -> f64 {
        1.0 + 1.0 / (2.0 * rho - 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub window: GWindow,
    /// Second window for the nonexpansiveness check.
    pub other: Option<GWindow>,
    pub got: f64,
    /// Expected value (condition i) or allowed bound (condition ii).
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub g: GFunction,
    pub check: &'static str,
    pub trials: usize,
    /// False for report-only checks.
    pub asserted: bool,
    pub failures: usize,
    /// The first few failing cases.
    pub counterexamples: Vec<Counterexample>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    /// Failed and the property is claimed for this `G`.
    pub fn violated(&self) -> bool {
        self.asserted && !self.passed()
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {}/{} failures{}",
            self.g,
            self.check,
            self.failures,
            self.trials,
            if self.asserted { "" } else { " (report only)" }
        )
    }
}

/// Keep the first few counterexamples; the count is what matters.
const MAX_COUNTEREXAMPLES: usize = 16;

fn random_shape<R: Rng + ?Sized>(g: GFunction, rng: &mut R) -> (usize, usize, usize) {
    let n = match g {
        GFunction::Double => 2,
        GFunction::Q => 1,
        _ => rng.random_range(1..=5),
    };
    let k = match g {
        GFunction::Q | GFunction::Maxmin | GFunction::Ensemble | GFunction::Double => 1,
        _ => rng.random_range(1..=4),
    };
    (n, k, rng.random_range(1..=6))
}

fn random_value<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let scale = [1e-3, 1.0, 1e3][rng.random_range(0..3)];
    rng.random_range(-scale..=scale)
}

/// Windows whose `(i, j)` slices are all equal must map to the largest
/// action value, exactly.
pub fn check_assumption1_i<R: Rng + ?Sized>(g: GFunction, trials: usize, rng: &mut R) -> AssumptionReport {
    let mut failures = Vec::new();
    let mut failed = 0;
    for _ in 0..trials {
        let (n, k, m) = random_shape(g, rng);
        let action_values: Vec<f64> = (0..m).map(|_| random_value(rng)).collect();
        let expected = action_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let window = GWindow::replicated(n, k, &action_values).expect("valid shape");
        let got = g.eval_unchecked(&window);
        if got != expected {
            failed += 1;
            if failures.len() < MAX_COUNTEREXAMPLES {
                failures.push(Counterexample {
                    window,
                    other: None,
                    got,
                    limit: expected,
                });
            }
        }
    }
    report(g, "assumption1(i)", trials, failed, failures)
}

/// `|G(W) − G(W')| ≤ max |W − W'|` over random pairs: independent draws,
/// constant shifts and single-coordinate perturbations.
pub fn check_assumption1_ii<R: Rng + ?Sized>(g: GFunction, trials: usize, rng: &mut R) -> AssumptionReport {
    let mut failures = Vec::new();
    let mut failed = 0;
    for trial in 0..trials {
        let (n, k, m) = random_shape(g, rng);
        let len = n * k * m;
        let a: Vec<f64> = (0..len).map(|_| random_value(rng)).collect();
        let b: Vec<f64> = match trial % 3 {
            0 => (0..len).map(|_| random_value(rng)).collect(),
            1 => {
                let c = random_value(rng);
                a.iter().map(|x| x + c).collect()
            }
            _ => {
                let mut b = a.clone();
                let idx = rng.random_range(0..len);
                b[idx] += random_value(rng);
                b
            }
        };
        let w = GWindow::new(n, k, m, a).expect("valid shape");
        let w2 = GWindow::new(n, k, m, b).expect("valid shape");
        let gap = (g.eval_unchecked(&w) - g.eval_unchecked(&w2)).abs();
        let bound = w.max_abs_diff(&w2);
        // Rounding slack: a few ulps of the largest magnitude involved.
        let scale = w.values.iter().chain(&w2.values).fold(0.0f64, |m, v| m.max(v.abs()));
        if gap > bound + 8.0 * f64::EPSILON * scale {
            failed += 1;
            if failures.len() < MAX_COUNTEREXAMPLES {
                failures.push(Counterexample {
                    window: w,
                    other: Some(w2),
                    got: gap,
                    limit: bound,
                });
            }
        }
    }
    report(g, "assumption1(ii)", trials, failed, failures)
}

fn report(
    g: GFunction,
    check: &'static str,
    trials: usize,
    failures: usize,
    counterexamples: Vec<Counterexample>,
) -> AssumptionReport {
    AssumptionReport {
        g,
        check,
        trials,
        asserted: g.asserted_assumption1(),
        failures,
        counterexamples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn window_layout() {
        let w = GWindow::new(2, 3, 2, (0..12).map(f64::from).collect()).unwrap();
        assert_eq!(w.get(0, 0, 1), 1.0);
        assert_eq!(w.get(0, 2, 0), 4.0);
        assert_eq!(w.get(1, 0, 0), 6.0);
        assert_eq!(w.slice(1, 2), &[10.0, 11.0]);
        assert!(GWindow::new(2, 1, 2, vec![0.0; 3]).is_err());
        assert!(GWindow::new(1, 1, 1, vec![f64::NAN]).is_err());
        assert!(GWindow::zeros(0, 1, 1).is_err());
    }

    #[test]
    fn catalog_on_equal_windows() {
        let w = GWindow::replicated(1, 1, &[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(GFunction::Q.evaluate(&w).unwrap(), 1.0);
        let w = GWindow::replicated(2, 3, &[0.1, 0.7, 0.3]).unwrap();
        for g in GFunction::CATALOG {
            let w = if g == GFunction::Double {
                GWindow::replicated(2, 1, &[0.1, 0.7, 0.3]).unwrap()
            } else {
                w.clone()
            };
            assert_eq!(g.evaluate(&w).unwrap(), 0.7, "{g}");
        }
    }

    #[test]
    fn catalog_values() {
        // Estimator 0: lag0 (1, 4), lag1 (3, 0); estimator 1: lag0 (2, -1), lag1 (5, 5).
        let w = GWindow::new(2, 2, 2, vec![1.0, 4.0, 3.0, 0.0, 2.0, -1.0, 5.0, 5.0]).unwrap();
        assert_eq!(GFunction::Q.evaluate(&w).unwrap(), 4.0);
        assert_eq!(GFunction::Maxmin.evaluate(&w).unwrap(), 1.0);
        assert_eq!(GFunction::Ensemble.evaluate(&w).unwrap(), 1.5);
        assert_eq!(GFunction::Averaged.evaluate(&w).unwrap(), 2.75);
        assert_eq!(GFunction::HistoricalBest.evaluate(&w).unwrap(), 5.0);
        assert_eq!(GFunction::Double.evaluate(&w).unwrap(), -1.0);
        let three = GWindow::zeros(3, 1, 2).unwrap();
        assert!(GFunction::Double.evaluate(&three).is_err());
    }

    #[test]
    fn shifted_mean_is_exact_for_equal_inputs() {
        for x in [0.1, 1.0 / 3.0, -7.3e5, 2.0f64.sqrt()] {
            for n in 1..20 {
                assert_eq!(shifted_mean(std::iter::repeat_n(x, n)), x);
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for g in GFunction::CATALOG {
            assert_eq!(g.name().parse::<GFunction>().unwrap(), g);
        }
        assert!("G_XQ".parse::<GFunction>().is_err());
    }

    #[test]
    fn assumption_checks_on_catalog() {
        let mut rng = rng_from_seed(11);
        for g in GFunction::CATALOG {
            let i = check_assumption1_i(g, 2000, &mut rng);
            assert!(i.passed(), "{i}");
            let ii = check_assumption1_ii(g, 2000, &mut rng);
            if g.asserted_assumption1() {
                assert!(ii.passed(), "{ii}");
            } else {
                // Report-only: argmax flips make G_DQ expansive.
                assert!(!ii.passed());
                assert!(!ii.violated());
            }
        }
    }

    #[test]
    fn double_is_expansive_on_a_known_pair() {
        let w = GWindow::new(2, 1, 2, vec![1.0, 0.0, 0.0, 10.0]).unwrap();
        let w2 = GWindow::new(2, 1, 2, vec![1.0, 1.5, 0.0, 10.0]).unwrap();
        let gap = (GFunction::Double.evaluate(&w).unwrap() - GFunction::Double.evaluate(&w2).unwrap()).abs();
        assert_eq!(gap, 10.0);
        assert_eq!(w.max_abs_diff(&w2), 1.5);
    }

    #[test]
    fn step_sizes() {
        assert!(StepSizeSchedule::new(0.5, 1).is_err());
        assert!(StepSizeSchedule::new(1.1, 1).is_err());
        let mut s = StepSizeSchedule::new(0.8, 2).unwrap();
        assert_eq!(s.next(0), 1.0);
        assert_eq!(s.next(0), 2f64.powf(-0.8));
        assert_eq!(s.next(1), 1.0);
        assert_eq!(s.visits(0), 2);
    }

    #[test]
    fn robbins_monro_partial_sums() {
        for rho in [0.6, 0.8, 1.0] {
            let (s1, s2) = StepSizeSchedule::partial_sums(rho, 1_000_000);
            assert!(s2 <= StepSizeSchedule::square_sum_bound(rho));
            // Σα over 10⁶ visits is at least the integral of x^(−ρ) from 1 to 10⁶ + 1.
            let integral = if rho == 1.0 {
                (1e6f64 + 1.0).ln()
            } else {
                ((1e6f64 + 1.0).powf(1.0 - rho) - 1.0) / (1.0 - rho)
            };
            assert!(s1 >= integral, "{rho}: {s1} < {integral}");
            assert!(s1 > 10.0);
        }
    }

    proptest::proptest! {
        #[test]
        fn ordering_between_catalog_members(
            n in 1usize..5, k in 1usize..4, m in 1usize..5,
            seed in 0u64..1000,
        ) {
            let mut rng = rng_from_seed(seed);
            let values = (0..n * k * m).map(|_| rng.random_range(-5.0..5.0)).collect();
            let w = GWindow::new(n, k, m, values).unwrap();
            let mq = GFunction::Maxmin.evaluate(&w).unwrap();
            let eq = GFunction::Ensemble.evaluate(&w).unwrap();
            let hb = GFunction::HistoricalBest.evaluate(&w).unwrap();
            proptest::prop_assert!(mq <= eq + 1e-12);
            proptest::prop_assert!(eq <= hb + 1e-12);
            proptest::prop_assert!(mq <= hb);
        }
    }
}
