use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Fixed-capacity FIFO experience store with a seeded uniform sampler.
#[derive(Clone, Debug)]
pub struct ReplayBuffer<T> {
    items: Vec<T>,
    capacity: usize,
    // next slot to overwrite once full
    head: usize,
    rng: ChaCha8Rng,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize, seed: u64) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: Vec::new(),
            capacity,
            head: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
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

    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.head] = item;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    pub fn extend(&mut self, items: impl IntoIterator<Item = T>) {
        for item in items {
            self.push(item);
        }
    }

    /// Up to `n` distinct items drawn uniformly.
    pub fn sample(&mut self, n: usize) -> Vec<&T> {
        let n = n.min(self.items.len());
        if n == 0 {
            return Vec::new();
        }
        index::sample(&mut self.rng, self.items.len(), n)
            .into_iter()
            .map(|k| &self.items[k])
            .collect()
    }

    /// Items from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        let (newer, older) = self.items.split_at(self.head);
        older.iter().chain(newer.iter())
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    proptest! {
        #[test]
        fn keeps_last_capacity_items(cap in 1usize..64, extra in 0usize..200) {
            let mut buf = ReplayBuffer::new(cap, 3);
            let total = cap + extra;
            buf.extend(0..total);
            prop_assert_eq!(buf.len(), cap);
            let kept: Vec<usize> = buf.iter().copied().collect();
            let expect: Vec<usize> = (total - cap..total).collect();
            prop_assert_eq!(kept, expect);
        }
    }

    #[test]
    fn sample_is_distinct_and_seeded() {
        let mut a = ReplayBuffer::new(100, 9);
        let mut b = ReplayBuffer::new(100, 9);
        a.extend(0..50);
        b.extend(0..50);
        let sa: Vec<i32> = a.sample(20).into_iter().copied().collect();
        let sb: Vec<i32> = b.sample(20).into_iter().copied().collect();
        assert_eq!(sa, sb);
        let mut uniq = sa.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 20);
        assert_eq!(a.sample(500).len(), 50);
        let mut empty: ReplayBuffer<u8> = ReplayBuffer::new(4, 0);
        assert!(empty.sample(3).is_empty());
    }
}
