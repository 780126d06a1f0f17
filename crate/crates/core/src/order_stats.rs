//! Bias and variance of the maxmin estimator under uniform estimation noise.
//!
//! Every estimate `Qⁱ(s', a)` is modelled as the true value plus independent
//! `U(-τ, τ)` error, and all `M` actions at `s'` share the same true value.
//! The bootstrap error of `max_a min_i Qⁱ(s', a)` then has closed-form mean
//! `γτ(1 − 2 t_MN)` with `t_MN = ∫₀¹ (1 − y^N)^M dy`, and the per-action
//! minimum has variance `4Nτ² / ((N+1)²(N+2))`.
//!
//! The Monte Carlo routines here draw the raw uniforms and never use the
//! closed forms, so they serve as independent oracles for them.

use rand::distr::{Distribution, Uniform};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{child_seed, rng_from_seed};
use crate::stats::Accumulator;

/// Inputs of the bias formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasSpec {
    /// Number of actions at the next state.
    pub m: usize,
    /// Number of estimators.
    pub n: usize,
    pub gamma: f64,
    /// Half-width of the uniform estimation error.
    pub tau: f64,
}

impl BiasSpec {
    pub fn new(m: usize, n: usize, gamma: f64, tau: f64) -> Result<Self> {
        let spec = BiasSpec { m, n, gamma, tau };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::invalid("M", "need at least one action"));
        }
        if self.n == 0 {
            return Err(Error::invalid("N", "need at least one estimator"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid("gamma", format!("{} not in [0, 1]", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid("tau", format!("{} must be positive", self.tau)));
        }
        Ok(())
    }
}

/// Closed-form quantities for one `(M, N)` cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasResult {
    pub spec: BiasSpec,
    pub t_mn: f64,
    /// `E[Z_MN]`, the expected bootstrap error.
    pub expected_bias: f64,
    /// Variance of the per-action minimum over `N` estimators.
    pub variance_min: f64,
    /// `Var[Q^min] / Var[Q]` when samples are split evenly across estimators.
    pub variance_ratio: f64,
}

/// Output of a Monte Carlo oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

// Below this the direct product is exact enough and cheaper.
const LOG_SPACE_THRESHOLD: usize = 20;

/// `t_MN = Π_{k=1..M} k / (k + 1/N)`.
pub fn t_mn(m: usize, n: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("M", "need at least one action"));
    }
    if n == 0 {
        return Err(Error::invalid("N", "need at least one estimator"));
    }
    let inv_n = 1.0 / n as f64;
    let value = if m > LOG_SPACE_THRESHOLD {
        (1..=m)
            .map(|k| {
                let k = k as f64;
                k.ln() - (k + inv_n).ln()
            })
            .sum::<f64>()
            .exp()
    } else {
        (1..=m)
            .map(|k| {
                let k = k as f64;
                k / (k + inv_n)
            })
            .product()
    };
    Ok(value)
}

/// `γτ(1 − 2 t_MN)`.
pub fn expected_bias(spec: &BiasSpec) -> Result<f64> {
    spec.validate()?;
    Ok(spec.gamma * spec.tau * (1.0 - 2.0 * t_mn(spec.m, spec.n)?))
}

/// `4Nτ² / ((N+1)²(N+2))`.
pub fn variance_min(n: usize, tau: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("N", "need at least one estimator"));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid("tau", format!("{tau} must be positive")));
    }
    let n = n as f64;
    Ok(4.0 * n * tau * tau / ((n + 1.0) * (n + 1.0) * (n + 2.0)))
}

/// `12N² / ((N+1)²(N+2))`.
pub fn variance_ratio(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("N", "need at least one estimator"));
    }
    let n = n as f64;
    Ok(12.0 * n * n / ((n + 1.0) * (n + 1.0) * (n + 2.0)))
}

/// CDF of the minimum of `n` iid `U(-τ, τ)` draws, `1 − (1/2 − x/2τ)^n`.
pub fn min_cdf(x: f64, n: usize, tau: f64) -> f64 {
    if x <= -tau {
        return 0.0;
    }
    if x >= tau {
        return 1.0;
    }
    1.0 - (0.5 - x / (2.0 * tau)).powi(n as i32)
}

/// The `N ∈ [1, max_n]` that brings `|1 − 2 t_MN|` closest to zero; ties go
/// to the smaller `N`.
pub fn find_unbiased_n(m: usize, max_n: usize) -> Result<usize> {
    if max_n == 0 {
        return Err(Error::invalid("max_n", "must be at least 1"));
    }
    let mut best = (1, f64::INFINITY);
    for n in 1..=max_n {
        let gap = (1.0 - 2.0 * t_mn(m, n)?).abs();
        if gap < best.1 {
            best = (n, gap);
        }
    }
    Ok(best.0)
}

/// One [`BiasResult`] per `(M, N)` cell, rows ordered by `M` then `N`.
pub fn bias_variance_grid(
    m_range: impl IntoIterator<Item = usize>,
    n_range: impl IntoIterator<Item = usize> + Clone,
    gamma: f64,
    tau: f64,
) -> Result<Vec<BiasResult>> {
    let mut out = Vec::new();
    for m in m_range {
        for n in n_range.clone() {
            out.push(bias_result(&BiasSpec::new(m, n, gamma, tau)?)?);
        }
    }
    if out.is_empty() {
        return Err(Error::invalid("grid", "empty M or N range"));
    }
    Ok(out)
}

pub fn bias_result(spec: &BiasSpec) -> Result<BiasResult> {
    Ok(BiasResult {
        spec: *spec,
        t_mn: t_mn(spec.m, spec.n)?,
        expected_bias: expected_bias(spec)?,
        variance_min: variance_min(spec.n, spec.tau)?,
        variance_ratio: variance_ratio(spec.n)?,
    })
}

/// Minimum of `n` fresh draws from `noise`.
#[inline]
pub fn sample_group_min<R: Rng + ?Sized>(noise: &Uniform<f64>, n: usize, rng: &mut R) -> f64 {
    let mut lo = f64::INFINITY;
    for _ in 0..n {
        lo = lo.min(noise.sample(rng));
    }
    lo
}

fn uniform_noise(tau: f64) -> Result<Uniform<f64>> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid("tau", format!("{tau} must be positive")));
    }
    Uniform::new_inclusive(-tau, tau).map_err(|e| Error::invalid("tau", e.to_string()))
}

/// Monte Carlo estimate of `max_{a<M} min_{i<N} e_{a,i}` with
/// `e ~ U(-τ, τ)`: the bootstrap error at `γ = 1`. Callers scale by `γ`.
pub fn mc_bias_oracle(m: usize, n: usize, tau: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    if m == 0 {
        return Err(Error::invalid("M", "need at least one action"));
    }
    mc_bias_oracle_with_values(&vec![0.0; m], n, tau, samples, seed)
}

/// Exploratory variant where the `M` actions have distinct true values.
///
/// Returns the statistic `max_a min_i (q_a + e_{a,i}) − max_a q_a`. No closed
/// form is asserted for unequal values.
pub fn mc_bias_oracle_with_values(
    true_values: &[f64],
    n: usize,
    tau: f64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if true_values.is_empty() {
        return Err(Error::invalid("M", "need at least one action"));
    }
    if n == 0 {
        return Err(Error::invalid("N", "need at least one estimator"));
    }
    if samples == 0 {
        return Err(Error::invalid("samples", "must be at least 1"));
    }
    let noise = uniform_noise(tau)?;
    let true_max = true_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut rng = rng_from_seed(seed);
    let mut acc = Accumulator::new();
    for _ in 0..samples {
        let mut best = f64::NEG_INFINITY;
        for &q in true_values {
            best = best.max(q + sample_group_min(&noise, n, &mut rng));
        }
        acc.push(best - true_max);
    }
    let s = acc.summary();
    Ok(McEstimate {
        mean: s.mean,
        variance: s.variance,
        std_error: s.std_error,
        samples,
        seed,
    })
}

/// Monte Carlo estimate of the law of `min_{i<N} e_i`, `e ~ U(-τ, τ)`; the
/// `variance` field is the oracle for [`variance_min`].
pub fn mc_min_oracle(n: usize, tau: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    if n == 0 {
        return Err(Error::invalid("N", "need at least one estimator"));
    }
    if samples < 2 {
        return Err(Error::invalid("samples", "need at least two samples for a variance"));
    }
    let noise = uniform_noise(tau)?;
    let mut rng = rng_from_seed(seed);
    let mut acc = Accumulator::new();
    for _ in 0..samples {
        acc.push(sample_group_min(&noise, n, &mut rng));
    }
    let s = acc.summary();
    Ok(McEstimate {
        mean: s.mean,
        variance: s.variance,
        std_error: s.std_error,
        samples,
        seed,
    })
}

/// Monte Carlo oracle columns for one grid cell, seeded from `(seed, M, N)`.
pub fn mc_cell(m: usize, n: usize, tau: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    let cell_seed = child_seed(child_seed(seed, m as u64), n as u64);
    mc_bias_oracle(m, n, tau, samples, cell_seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Composite Simpson on ∫₀¹ (1 − y^N)^M dy; independent of the product form.
    fn t_mn_quadrature(m: usize, n: usize) -> f64 {
        let intervals = 20_000;
        let h = 1.0 / intervals as f64;
        let f = |y: f64| (1.0 - y.powi(n as i32)).powi(m as i32);
        let mut sum = f(0.0) + f(1.0);
        for k in 1..intervals {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * f(k as f64 * h);
        }
        sum * h / 3.0
    }

    #[test]
    fn t_mn_examples() {
        assert!((t_mn(8, 1).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(t_mn(1, 1).unwrap(), 0.5);
        assert!((t_mn(2, 2).unwrap() - 8.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn t_mn_matches_quadrature() {
        for m in [1, 2, 3, 5, 8, 13, 21, 40] {
            for n in [1, 2, 3, 4, 7, 8, 16] {
                let closed = t_mn(m, n).unwrap();
                let quad = t_mn_quadrature(m, n);
                assert!((closed - quad).abs() < 1e-9, "M={m} N={n}: {closed} vs {quad}");
            }
        }
    }

    #[test]
    fn log_space_agrees_with_direct_product_at_threshold() {
        // M = 21 goes through logs; the direct product is still accurate there.
        let direct: f64 = (1..=21).map(|k| k as f64 / (k as f64 + 1.0 / 3.0)).product();
        assert!((t_mn(21, 3).unwrap() - direct).abs() < 1e-13);
        let big = t_mn(5000, 2).unwrap();
        assert!(big > 0.0 && big.is_finite());
    }

    #[test]
    fn rejects_zero_counts() {
        assert!(t_mn(0, 1).is_err());
        assert!(t_mn(1, 0).is_err());
        assert!(variance_min(1, 0.0).is_err());
        assert!(variance_min(1, -1.0).is_err());
        assert!(variance_ratio(0).is_err());
        assert!(BiasSpec::new(1, 1, 1.5, 1.0).is_err());
        assert!(mc_bias_oracle(1, 1, 1.0, 0, 0).is_err());
    }

    #[test]
    fn expected_bias_examples() {
        let b = |m, n| expected_bias(&BiasSpec::new(m, n, 1.0, 1.0).unwrap()).unwrap();
        assert!((b(8, 1) - 7.0 / 9.0).abs() < 1e-12);
        assert_eq!(b(1, 1), 0.0);
        assert!((b(2, 2) + 1.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn variance_examples() {
        assert!((variance_min(1, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((variance_min(2, 1.0).unwrap() - 2.0 / 9.0).abs() < 1e-15);
        assert!(variance_min(1_000_000, 1.0).unwrap() < 1e-5);
        assert_eq!(variance_ratio(1).unwrap(), 1.0);
        assert!((variance_ratio(8).unwrap() - 768.0 / 810.0).abs() < 1e-12);
        assert!((variance_ratio(7).unwrap() - 588.0 / 576.0).abs() < 1e-12);
    }

    #[test]
    fn min_cdf_examples() {
        assert_eq!(min_cdf(1.0, 5, 1.0), 1.0);
        assert_eq!(min_cdf(-1.0, 5, 1.0), 0.0);
        assert_eq!(min_cdf(7.0, 1, 1.0), 1.0);
        assert_eq!(min_cdf(0.0, 1, 1.0), 0.5);
        assert_eq!(min_cdf(0.0, 2, 1.0), 0.75);
    }

    #[test]
    fn unbiased_n_examples() {
        assert_eq!(find_unbiased_n(1, 10).unwrap(), 1);
        assert_eq!(find_unbiased_n(2, 10).unwrap(), 2);
        // Frozen from quadrature: |1 − 2t| over N for M = 8 bottoms out at
        // N = 4 (−0.0577); M = 16 → 5, M = 64 → 7.
        assert_eq!(find_unbiased_n(8, 64).unwrap(), 4);
        assert_eq!(find_unbiased_n(16, 64).unwrap(), 5);
        assert_eq!(find_unbiased_n(64, 64).unwrap(), 7);
        assert_eq!(find_unbiased_n(8, 2).unwrap(), 2);
        assert!(find_unbiased_n(8, 0).is_err());
    }

    #[test]
    fn grid_cells_are_pointwise() {
        let grid = bias_variance_grid(1..=1, 1..=1, 1.0, 1.0).unwrap();
        assert_eq!(grid.len(), 1);
        assert_eq!(grid[0].expected_bias, 0.0);
        assert!((grid[0].variance_min - 1.0 / 3.0).abs() < 1e-15);

        let row = bias_variance_grid(8..=8, 1..=8, 1.0, 1.0).unwrap();
        for w in row.windows(2) {
            assert!(w[1].expected_bias < w[0].expected_bias);
        }
        for cell in &row {
            let spec = cell.spec;
            assert_eq!(cell.t_mn, t_mn(spec.m, spec.n).unwrap());
            assert_eq!(cell.expected_bias, expected_bias(&spec).unwrap());
            assert_eq!(cell.variance_min, variance_min(spec.n, spec.tau).unwrap());
            assert_eq!(cell.variance_ratio, variance_ratio(spec.n).unwrap());
        }
        assert!(bias_variance_grid(1..1, 1..=3, 1.0, 1.0).is_err());
    }

    #[test]
    fn oracle_single_uniform() {
        let est = mc_bias_oracle(1, 1, 1.0, 200_000, 11).unwrap();
        assert!(est.mean.abs() < 4.0 * est.std_error);
        assert!((est.variance - 1.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn oracle_is_deterministic() {
        let a = mc_bias_oracle(3, 2, 1.0, 1000, 99).unwrap();
        let b = mc_bias_oracle(3, 2, 1.0, 1000, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.std_error, (a.variance / a.samples as f64).sqrt());
    }

    #[test]
    fn oracle_with_dominant_action_has_min_bias() {
        // One action far above the rest: the max picks it, so the error is the
        // minimum of N uniforms, mean −τ (N−1)/(N+1).
        let est = mc_bias_oracle_with_values(&[10.0, 0.0, 0.0], 3, 1.0, 100_000, 5).unwrap();
        assert!((est.mean + 0.5).abs() < 4.0 * est.std_error);
    }
}
