use super::tiles::{Features, TileCoder};
use super::{check_update, ValueFunction};
use crate::error::Result;

/// Linear action values over tile-coded features, one weight vector per
/// action, zero-initialised.
///
/// An update at `(s, a)` moves each active weight by
/// `(alpha / tilings) · (target − q)`, so the prediction at `(s, a)` itself
/// moves by exactly `alpha · (target − q)`; step sizes mean the same thing
/// here as for [`super::QTable`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinearQ {
    coder: TileCoder,
    actions: usize,
    weights: Vec<f64>,
}

impl LinearQ {
    pub fn new(coder: TileCoder, actions: usize) -> Self {
        let weights = vec![0.0; coder.feature_count() * actions];
        LinearQ {
            coder,
            actions,
            weights,
        }
    }

    pub fn coder(&self) -> &TileCoder {
        &self.coder
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn copy_from(&mut self, other: &LinearQ) {
        self.weights.copy_from_slice(&other.weights);
    }
}

impl ValueFunction for LinearQ {
    type State = [f64; 2];
    type Key = Features;

    fn key(&self, state: &[f64; 2]) -> Result<Features> {
        self.coder.features(state)
    }

    fn assign_from(&mut self, other: &Self) {
        self.copy_from(other);
    }

    #[inline]
    fn num_actions(&self, _key: &Features) -> usize {
        self.actions
    }

    #[inline]
    fn value_at(&self, key: &Features, action: usize) -> f64 {
        let base = action * self.coder.feature_count();
        key.as_slice().iter().map(|&i| self.weights[base + i as usize]).sum()
    }

    fn update_at(&mut self, key: &Features, action: usize, target: f64, alpha: f64) -> Result<()> {
        check_update(target, alpha)?;
        let step = alpha / self.coder.tilings() as f64 * (target - self.value_at(key, action));
        let base = action * self.coder.feature_count();
        for &i in key.as_slice() {
            self.weights[base + i as usize] += step;
        }
        Ok(())
    }
}
