//! Order-0 adaptive frequency model over a fixed alphabet.
//!
//! Counts start at one (so every symbol stays codable), grow by a fixed
//! increment on each update, and are halved when the total crosses the
//! rescale limit. Prefix sums and the inverse lookup go through a Fenwick
//! tree, so update and search are logarithmic in the alphabet size.

use alloc::vec;
use alloc::vec::Vec;

use super::range::MAX_TOTAL;
use crate::error::{Error, Result};

/// Count added per observed symbol. Large enough that skewed sources
/// converge within a few dozen symbols.
const INCREMENT: u32 = 32;

/// Rescale once the total exceeds this (or twice the alphabet when the
/// alphabet itself is larger, so halving can actually shrink anything).
const RESCALE_LIMIT: u32 = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolModel {
    counts: Vec<u32>,
    tree: Vec<u32>,
    total: u32,
    limit: u32,
}

impl SymbolModel {
    pub fn new(alphabet_size: u32) -> Result<Self> {
        if alphabet_size == 0 {
            return Err(Error::InvalidParameter("alphabet must be nonempty".into()));
        }
        let limit = RESCALE_LIMIT.max(2 * alphabet_size);
        if limit + INCREMENT > MAX_TOTAL {
            return Err(Error::InvalidParameter("alphabet too large for the range coder".into()));
        }
        let counts = vec![1u32; alphabet_size as usize];
        let mut model =
            SymbolModel { counts, tree: Vec::new(), total: alphabet_size, limit };
        model.rebuild_tree();
        Ok(model)
    }

    /// Convenience constructor for the one-bit sideband model.
    pub fn binary() -> Self {
        SymbolModel::new(2).expect("binary alphabet is valid")
    }

    pub fn alphabet_size(&self) -> u32 {
        self.counts.len() as u32
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn count(&self, symbol: u32) -> u32 {
        self.counts[symbol as usize]
    }

    fn rebuild_tree(&mut self) {
        let n = self.counts.len();
        let mut tree = vec![0u32; n + 1];
        for (i, &c) in self.counts.iter().enumerate() {
            let i = i + 1;
            tree[i] += c;
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i];
            }
        }
        self.tree = tree;
    }

    fn tree_add(&mut self, symbol: usize, delta: u32) {
        let mut i = symbol + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum of counts of all symbols below `symbol`.
    pub fn cumulative(&self, symbol: u32) -> u32 {
        let mut i = symbol as usize;
        let mut sum = 0;
        while i > 0 {
            sum += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        sum
    }

    /// Coding interval of `symbol` as (cumulative, count).
    pub fn interval(&self, symbol: u32) -> (u32, u32) {
        (self.cumulative(symbol), self.count(symbol))
    }

    /// Finds the symbol whose interval contains `target`; returns
    /// (symbol, cumulative, count).
    pub fn locate(&self, target: u32) -> (u32, u32, u32) {
        debug_assert!(target < self.total);
        let n = self.counts.len();
        let mut pos = 0usize;
        let mut remaining = target;
        // Descend from the highest power of two not exceeding n.
        let mut mask = 1usize;
        while mask * 2 <= n {
            mask *= 2;
        }
        while mask > 0 {
            let next = pos + mask;
            if next <= n && self.tree[next] <= remaining {
                pos = next;
                remaining -= self.tree[next];
            }
            mask >>= 1;
        }
        let symbol = pos as u32;
        (symbol, target - remaining, self.count(symbol))
    }

    /// Records one occurrence of `symbol`, halving all counts once the total
    /// crosses the rescale limit. Counts never drop below one.
    pub fn update(&mut self, symbol: u32) {
        let s = symbol as usize;
        self.counts[s] += INCREMENT;
        self.total += INCREMENT;
        self.tree_add(s, INCREMENT);
        if self.total > self.limit {
            self.rescale();
        }
    }

    fn rescale(&mut self) {
        let mut total = 0;
        for c in self.counts.iter_mut() {
            *c = (*c + 1) / 2;
            total += *c;
        }
        self.total = total;
        self.rebuild_tree();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_one_init_and_intervals() {
        let m = SymbolModel::new(5).unwrap();
        assert_eq!(m.total(), 5);
        for s in 0..5 {
            assert_eq!(m.interval(s), (s, 1));
        }
    }

    #[test]
    fn locate_inverts_intervals_after_updates() {
        let mut m = SymbolModel::new(17).unwrap();
        for s in [3u32, 3, 3, 16, 0, 7, 3] {
            m.update(s);
        }
        for s in 0..17 {
            let (lo, f) = m.interval(s);
            for target in [lo, lo + f - 1] {
                let (sym, cum, count) = m.locate(target);
                assert_eq!((sym, cum, count), (s, lo, f));
            }
        }
    }

    #[test]
    fn rescale_keeps_counts_positive_and_total_consistent() {
        let mut m = SymbolModel::new(3).unwrap();
        for _ in 0..10_000 {
            m.update(1);
        }
        assert!(m.total() <= (1 << 16) + INCREMENT);
        assert!(m.count(0) >= 1 && m.count(2) >= 1);
        let sum: u32 = (0..3).map(|s| m.count(s)).sum();
        assert_eq!(sum, m.total());
        // Skew is preserved through rescales.
        assert!(m.count(1) > 100 * m.count(0));
    }

    #[test]
    fn rejects_degenerate_alphabets() {
        assert!(SymbolModel::new(0).is_err());
        assert!(SymbolModel::new(1 << 23).is_err());
    }
}
