//! Action-value representations.
//!
//! Both representations resolve a state into a cheap `Key` first (the table
//! row for [`QTable`], the active tile indices for [`LinearQ`]). Agents that
//! hold several estimators over the same space compute the key once and reuse
//! it across all of them.

mod linear;
mod table;
mod tiles;

pub use linear::LinearQ;
pub use table::QTable;
pub use tiles::{Features, TileCoder, MAX_TILINGS};

use crate::error::{Error, Result};

pub trait ValueFunction: Clone {
    type State;
    type Key: Copy;

    fn key(&self, state: &Self::State) -> Result<Self::Key>;

    fn num_actions(&self, key: &Self::Key) -> usize;

    /// Action value at a resolved key. `action` must be in range.
    fn value_at(&self, key: &Self::Key, action: usize) -> f64;

    /// Moves the prediction at `(key, action)` by `alpha · (target − q)`.
    fn update_at(&mut self, key: &Self::Key, action: usize, target: f64, alpha: f64) -> Result<()>;

    fn q_value(&self, state: &Self::State, action: usize) -> Result<f64> {
        let key = self.key(state)?;
        check_action(action, self.num_actions(&key))?;
        Ok(self.value_at(&key, action))
    }

    fn q_update(&mut self, state: &Self::State, action: usize, target: f64, alpha: f64) -> Result<()> {
        let key = self.key(state)?;
        check_action(action, self.num_actions(&key))?;
        self.update_at(&key, action, target, alpha)
    }

    /// Overwrites `self` with `other`, reusing storage where possible.
    fn assign_from(&mut self, other: &Self) {
        self.clone_from(other);
    }

    fn action_values(&self, key: &Self::Key, out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.num_actions(key)).map(|a| self.value_at(key, a)));
    }
}

#[inline]
pub(crate) fn check_action(action: usize, limit: usize) -> Result<()> {
    if action < limit {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "action",
            index: action,
            limit,
        })
    }
}

#[inline]
pub(crate) fn check_update(target: f64, alpha: f64) -> Result<()> {
    if !target.is_finite() {
        return Err(Error::NonFiniteTarget(target));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} not in (0, 1]")));
    }
    Ok(())
}
