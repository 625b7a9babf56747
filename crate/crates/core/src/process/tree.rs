use rand::Rng;

/// Binary sum-tree over nonnegative weights, for `O(log n)` weighted picks
/// under point updates.
#[derive(Debug, Clone)]
pub struct SumTree {
    leaves: usize,
    n: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(weights: &[f64]) -> Self {
        let n = weights.len().max(1);
        let leaves = n.next_power_of_two();
        let mut t = Self { leaves, n: weights.len(), nodes: vec![0.0; 2 * leaves] };
        t.nodes[leaves..leaves + weights.len()].copy_from_slice(weights);
        t.rebuild();
        t
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Recompute every internal node from the leaves.
    pub fn rebuild(&mut self) {
        for i in (1..self.leaves).rev() {
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.nodes[self.leaves + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, w: f64) {
        let mut k = self.leaves + i;
        self.nodes[k] = w;
        while k > 1 {
            k >>= 1;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    /// Index `i` with `prefix(i) <= target < prefix(i + 1)`.
    #[inline]
    pub fn find(&self, mut target: f64) -> usize {
        let mut k = 1;
        while k < self.leaves {
            let left = self.nodes[2 * k];
            if target < left {
                k *= 2;
            } else {
                target -= left;
                k = 2 * k + 1;
            }
        }
        let mut i = k - self.leaves;
        // round-off can land on a zero-weight leaf; walk back to a live one
        while self.nodes[self.leaves + i] <= 0.0 && i > 0 {
            i -= 1;
        }
        if self.nodes[self.leaves + i] <= 0.0 {
            i = (0..self.n).find(|&j| self.nodes[self.leaves + j] > 0.0).unwrap_or(0);
        }
        i.min(self.n.saturating_sub(1))
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.find(u * self.total())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn find_respects_prefix_sums() {
        let t = SumTree::new(&[1.0, 0.0, 2.0, 3.0, 0.5]);
        assert_eq!(t.total(), 6.5);
        assert_eq!(t.find(0.5), 0);
        assert_eq!(t.find(1.0), 2);
        assert_eq!(t.find(2.99), 2);
        assert_eq!(t.find(3.0), 3);
        assert_eq!(t.find(6.4), 4);
    }

    #[test]
    fn updates_track_total() {
        let mut t = SumTree::new(&[1.0; 7]);
        t.set(3, 4.0);
        t.set(6, 0.0);
        assert_eq!(t.total(), 9.0);
        let mut fresh = t.clone();
        fresh.rebuild();
        assert_eq!(fresh.total(), t.total());
    }

    #[test]
    fn frequencies_match_weights() {
        let w = [1.0, 2.0, 3.0, 4.0];
        let t = SumTree::new(&w);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[t.sample(&mut rng)] += 1;
        }
        for i in 0..4 {
            let p = w[i] / 10.0;
            let se = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((counts[i] as f64 - n as f64 * p).abs() < 5.0 * se);
        }
    }
}
