//! Sample summaries shared by the oracles and the harness.

/// Mean, unbiased sample variance and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

/// Welford accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn summary(&self) -> Summary {
        let variance = if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        };
        let std_error = if self.count > 0 {
            (variance / self.count as f64).sqrt()
        } else {
            0.0
        };
        Summary {
            count: self.count,
            mean: self.mean,
            variance,
            std_error,
        }
    }
}

pub fn summarize<I: IntoIterator<Item = f64>>(xs: I) -> Summary {
    let mut acc = Accumulator::new();
    for x in xs {
        acc.push(x);
    }
    acc.summary()
}

/// Standard error of the difference of two independent means.
pub fn diff_std_error(a: &Summary, b: &Summary) -> f64 {
    (a.std_error * a.std_error + b.std_error * b.std_error).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_two_pass_formula() {
        let xs = [1.0, 4.0, 4.0, 7.0, 9.5];
        let s = summarize(xs);
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((s.mean - mean).abs() < 1e-12);
        assert!((s.variance - var).abs() < 1e-12);
        assert!((s.std_error - (var / 5.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_sample_has_zero_spread() {
        let s = summarize([3.0]);
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.std_error, 0.0);
    }
}
