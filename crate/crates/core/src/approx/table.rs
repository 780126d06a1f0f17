use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{check_update, ValueFunction};
use crate::error::{Error, Result};

/// Dense action-value table; states may have different action counts.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(action_counts: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(action_counts.len() + 1);
        let mut total = 0;
        offsets.push(0);
        for &c in action_counts {
            total += c;
            offsets.push(total);
        }
        QTable {
            offsets,
            values: vec![0.0; total],
        }
    }

    /// Entries drawn iid from `N(mean, std²)`.
    pub fn gaussian<R: Rng + ?Sized>(action_counts: &[usize], mean: f64, std: f64, rng: &mut R) -> Result<Self> {
        let normal = Normal::new(mean, std).map_err(|e| Error::invalid("init_std", e.to_string()))?;
        let mut table = Self::zeros(action_counts);
        for v in &mut table.values {
            *v = normal.sample(rng);
        }
        Ok(table)
    }

    pub fn state_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[self.offsets[state]..self.offsets[state + 1]]
    }

    pub fn row_mut(&mut self, state: usize) -> &mut [f64] {
        let (lo, hi) = (self.offsets[state], self.offsets[state + 1]);
        &mut self.values[lo..hi]
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) -> Result<()> {
        let key = self.key(&state)?;
        super::check_action(action, self.num_actions(&key))?;
        self.row_mut(state)[action] = value;
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn copy_from(&mut self, other: &QTable) {
        self.values.copy_from_slice(&other.values);
    }
}

impl ValueFunction for QTable {
    type State = usize;
    type Key = usize;

    fn key(&self, state: &usize) -> Result<usize> {
        if *state < self.state_count() {
            Ok(*state)
        } else {
            Err(Error::OutOfRange {
                what: "state",
                index: *state,
                limit: self.state_count(),
            })
        }
    }

    fn assign_from(&mut self, other: &Self) {
        self.copy_from(other);
    }

    #[inline]
    fn num_actions(&self, key: &usize) -> usize {
        self.offsets[key + 1] - self.offsets[*key]
    }

    #[inline]
    fn value_at(&self, key: &usize, action: usize) -> f64 {
        self.values[self.offsets[*key] + action]
    }

    #[inline]
    fn update_at(&mut self, key: &usize, action: usize, target: f64, alpha: f64) -> Result<()> {
        check_update(target, alpha)?;
        let q = &mut self.values[self.offsets[*key] + action];
        *q += alpha * (target - *q);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::stats::summarize;

    #[test]
    fn set_and_read() {
        let mut t = QTable::zeros(&[2, 3]);
        t.set(1, 2, 3.5).unwrap();
        assert_eq!(t.q_value(&1, 2).unwrap(), 3.5);
        assert!(t.q_value(&2, 0).is_err());
        assert!(t.q_value(&0, 2).is_err());
    }

    #[test]
    fn update_examples() {
        let mut t = QTable::zeros(&[1]);
        t.q_update(&0, 0, 1.0, 0.5).unwrap();
        assert_eq!(t.q_value(&0, 0).unwrap(), 0.5);
        t.q_update(&0, 0, 0.5, 0.3).unwrap();
        assert_eq!(t.q_value(&0, 0).unwrap(), 0.5);
        assert!(matches!(t.q_update(&0, 0, f64::NAN, 0.1), Err(Error::NonFiniteTarget(_))));
        assert!(t.q_update(&0, 0, 1.0, 0.0).is_err());
        assert!(t.q_update(&0, 0, 1.0, 1.5).is_err());
    }

    #[test]
    fn gaussian_init_has_requested_spread() {
        let t = QTable::gaussian(&[100; 100], 0.0, 0.01, &mut rng_from_seed(1)).unwrap();
        let s = summarize(t.values().iter().copied());
        assert!(s.mean.abs() < 5e-4);
        assert!((s.variance.sqrt() - 0.01).abs() < 5e-4);
    }

    proptest::proptest! {
        #[test]
        fn update_contracts_toward_target(q0 in -10.0f64..10.0, target in -10.0f64..10.0, alpha in 0.001f64..=1.0) {
            let mut t = QTable::zeros(&[1]);
            t.set(0, 0, q0).unwrap();
            t.q_update(&0, 0, target, alpha).unwrap();
            let q1 = t.q_value(&0, 0).unwrap();
            proptest::prop_assert!(((q1 - target).abs() - (1.0 - alpha) * (q0 - target).abs()).abs() < 1e-12);
        }
    }
}
