//! Fixed-width bitsets for participation vectors and tuple masks.
//!
//! Tuple-membership tests are mask-and-compare over u64 words, which keeps
//! the extraction inner loops branch-light. Width is fixed at construction
//! (the roster size) and never changes.

use serde::{Deserialize, Serialize};

/// Fixed-width set of individual indices.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bitset {
    words: Vec<u64>,
    bits: usize,
}

impl Bitset {
    /// Empty set over `bits` positions.
    pub fn new(bits: usize) -> Self {
        Self {
            words: vec![0; bits.div_ceil(64)],
            bits,
        }
    }

    /// Set built from index positions. Panics if an index is out of range.
    pub fn from_indices(bits: usize, indices: &[usize]) -> Self {
        let mut s = Self::new(bits);
        for &i in indices {
            s.insert(i);
        }
        s
    }

    pub fn width(&self) -> usize {
        self.bits
    }

    pub fn insert(&mut self, index: usize) {
        assert!(index < self.bits, "bit index {index} out of range");
        self.words[index / 64] |= 1u64 << (index % 64);
    }

    pub fn contains(&self, index: usize) -> bool {
        if index >= self.bits {
            return false;
        }
        self.words[index / 64] >> (index % 64) & 1 == 1
    }

    /// True when every member of `other` is also in `self`.
    pub fn contains_all(&self, other: &Bitset) -> bool {
        debug_assert_eq!(self.bits, other.bits);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & b == *b)
    }

    /// True when the two sets share any member.
    pub fn intersects(&self, other: &Bitset) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .any(|(a, b)| a & b != 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Indices of set bits, ascending.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    /// Collected indices of set bits, ascending.
    pub fn ones(&self) -> Vec<usize> {
        self.iter_ones().collect()
    }
}

impl std::fmt::Debug for Bitset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Bitset{:?}", self.ones())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_test_is_mask_and_compare() {
        let event = Bitset::from_indices(70, &[0, 3, 65, 69]);
        let pair = Bitset::from_indices(70, &[3, 65]);
        let other = Bitset::from_indices(70, &[3, 64]);
        assert!(event.contains_all(&pair));
        assert!(!event.contains_all(&other));
        assert!(event.contains_all(&Bitset::new(70)));
    }

    #[test]
    fn iter_ones_ascending_across_words() {
        let s = Bitset::from_indices(130, &[129, 0, 64, 63]);
        assert_eq!(s.ones(), vec![0, 63, 64, 129]);
        assert_eq!(s.count_ones(), 4);
    }

    #[test]
    fn contains_out_of_range_is_false() {
        let s = Bitset::from_indices(10, &[9]);
        assert!(s.contains(9));
        assert!(!s.contains(10));
        assert!(!s.contains(1000));
    }
}
