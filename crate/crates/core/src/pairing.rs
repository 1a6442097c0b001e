//! Minibatch pair enumeration.
//!
//! Pairs are unordered with `i < j`; self-pairs are left out because their
//! similarity is 1 whatever the noise.

use crate::error::{Error, Result};

/// All unordered pairs of a minibatch with their similarity labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairBatch {
    pairs: Vec<(usize, usize)>,
    labels: Vec<u8>,
    batch_size: usize,
}

impl PairBatch {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), u8)> + '_ {
        self.pairs.iter().copied().zip(self.labels.iter().copied())
    }
}

#[inline]
pub fn similarity_label(a: usize, b: usize) -> u8 {
    u8::from(a == b)
}

/// Lexicographic enumeration of `(i, j)`, `i < j`, over a batch of class
/// labels.
pub fn enumerate_pairs(labels: &[usize]) -> Result<PairBatch> {
    let b = labels.len();
    if b < 2 {
        return Err(Error::arg("batch", format!("need at least 2 points to pair, got {b}")));
    }
    let total = b * (b - 1) / 2;
    let mut pairs = Vec::with_capacity(total);
    let mut sims = Vec::with_capacity(total);
    for i in 0..b {
        for j in i + 1..b {
            pairs.push((i, j));
            sims.push(similarity_label(labels[i], labels[j]));
        }
    }
    Ok(PairBatch {
        pairs,
        labels: sims,
        batch_size: b,
    })
}

/// Fraction of similar (label 1) pairs.
pub fn pair_class_balance(pb: &PairBatch) -> f64 {
    if pb.is_empty() {
        return 0.0;
    }
    pb.labels.iter().map(|&l| l as usize).sum::<usize>() as f64 / pb.len() as f64
}
