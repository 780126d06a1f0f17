use rand::Rng;

use crate::envs::Transition;

/// Fixed-capacity FIFO of transitions with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<S> {
    items: Vec<Transition<S>>,
    capacity: usize,
    next: usize,
}

impl<S: Clone> ReplayBuffer<S> {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        ReplayBuffer {
            items: Vec::with_capacity(capacity),
            capacity,
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Stores `t`, evicting the oldest entry when full.
    pub fn push(&mut self, t: Transition<S>) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Uniform draw; `None` when empty.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<&Transition<S>> {
        if self.items.is_empty() {
            None
        } else {
            Some(&self.items[rng.random_range(0..self.items.len())])
        }
    }

    /// Contents from oldest to newest.
    pub fn iter_oldest_first(&self) -> impl Iterator<Item = &Transition<S>> {
        let split = if self.items.len() < self.capacity { 0 } else { self.next };
        self.items[split..].iter().chain(self.items[..split].iter())
    }

    pub fn clear(&mut self) {
        self.items.clear();
        self.next = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn t(reward: f64) -> Transition<usize> {
        Transition {
            state: 0,
            action: 0,
            reward,
            next_state: 0,
            terminal: false,
            truncated: false,
        }
    }

    #[test]
    fn evicts_oldest_first() {
        let mut b = ReplayBuffer::new(3);
        for r in 0..5 {
            b.push(t(r as f64));
        }
        assert_eq!(b.len(), 3);
        let order: Vec<f64> = b.iter_oldest_first().map(|x| x.reward).collect();
        assert_eq!(order, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn empty_samples_none() {
        let b: ReplayBuffer<usize> = ReplayBuffer::new(2);
        assert!(b.sample(&mut rng_from_seed(0)).is_none());
    }

    #[test]
    fn sampling_is_uniform() {
        let mut b = ReplayBuffer::new(4);
        for r in 0..4 {
            b.push(t(r as f64));
        }
        let mut rng = rng_from_seed(3);
        let mut counts = [0usize; 4];
        let draws = 40_000;
        for _ in 0..draws {
            counts[b.sample(&mut rng).unwrap().reward as usize] += 1;
        }
        // χ² with 3 dof; 16.27 is the 0.999 quantile.
        let expected = draws as f64 / 4.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 16.27, "chi2 = {chi2}, counts = {counts:?}");
    }

    proptest::proptest! {
        #[test]
        fn never_exceeds_capacity(cap in 1usize..20, pushes in 0usize..100) {
            let mut b = ReplayBuffer::new(cap);
            for r in 0..pushes {
                b.push(t(r as f64));
            }
            proptest::prop_assert_eq!(b.len(), pushes.min(cap));
            let newest: Vec<f64> = b.iter_oldest_first().map(|x| x.reward).collect();
            let expected: Vec<f64> = (pushes.saturating_sub(cap)..pushes).map(|r| r as f64).collect();
            proptest::prop_assert_eq!(newest, expected);
        }
    }
}
