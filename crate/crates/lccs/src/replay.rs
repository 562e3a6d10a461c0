//! Fixed-capacity FIFO replay buffer with uniform without-replacement
//! batch sampling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::{Error, Result};

/// One environment step as stored for training. The action is the raw
/// normalized pair in `[-1, 1]^2`, before gain mapping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: [f64; 2],
    pub action: [f64; 2],
    pub reward: f64,
    pub next_obs: [f64; 2],
    pub done: bool,
}

#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            storage: VecDeque::with_capacity(capacity.min(1 << 20)),
        }
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Append one transition, evicting the oldest when full.
    pub fn push(&mut self, t: Transition) {
        if self.storage.len() == self.capacity {
            self.storage.pop_front();
        }
        self.storage.push_back(t);
    }

    /// Uniform sample of `m` distinct transitions (partial Fisher-Yates
    /// over an index vector).
    pub fn sample(&self, m: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Transition>> {
        let n = self.storage.len();
        if m > n {
            return Err(Error::InsufficientData { have: n, want: m });
        }
        let mut idx: Vec<usize> = (0..n).collect();
        let mut batch = Vec::with_capacity(m);
        for i in 0..m {
            let j = rng.gen_range(i..n);
            idx.swap(i, j);
            batch.push(self.storage[idx[i]]);
        }
        Ok(batch)
    }

    /// Oldest-to-newest iteration, mainly for tests.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.storage.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    fn t(tag: f64) -> Transition {
        Transition {
            obs: [tag, 0.0],
            action: [0.0, 0.0],
            reward: -tag,
            next_obs: [tag, 1.0],
            done: false,
        }
    }

    #[test]
    fn fifo_eviction() {
        let mut buf = ReplayBuffer::new(2);
        buf.push(t(1.0));
        buf.push(t(2.0));
        buf.push(t(3.0));
        let tags: Vec<f64> = buf.iter().map(|tr| tr.obs[0]).collect();
        assert_eq!(tags, vec![2.0, 3.0]);
        assert_eq!(buf.len(), 2);
    }

    #[test]
    fn sample_full_buffer_is_permutation() {
        let mut buf = ReplayBuffer::new(8);
        for i in 0..8 {
            buf.push(t(i as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let batch = buf.sample(8, &mut rng).unwrap();
        let mut tags: Vec<f64> = batch.iter().map(|tr| tr.obs[0]).collect();
        tags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(tags, (0..8).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn insufficient_data_error() {
        let mut buf = ReplayBuffer::new(4);
        buf.push(t(0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        match buf.sample(2, &mut rng) {
            Err(Error::InsufficientData { have: 1, want: 2 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn sampling_is_uniform_chi_square() {
        let mut buf = ReplayBuffer::new(10);
        for i in 0..10 {
            buf.push(t(i as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 100_000;
        let mut counts = [0usize; 10];
        for _ in 0..draws {
            let batch = buf.sample(1, &mut rng).unwrap();
            counts[batch[0].obs[0] as usize] += 1;
        }
        let expected = draws as f64 / 10.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // 9 degrees of freedom: mean 9, sigma = sqrt(18); 3 sigma above.
        assert!(chi2 < 9.0 + 3.0 * 18f64.sqrt(), "chi2 = {chi2}");
    }
}
