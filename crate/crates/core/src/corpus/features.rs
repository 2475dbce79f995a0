use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Default hashed feature dimension, 2^14.
pub const DEFAULT_DIM: usize = 1 << 14;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over the token's UTF-8 bytes. Pinned so that feature
/// indices are identical across runs, platforms and releases.
pub fn stable_hash(token: &str) -> u64 {
    token
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Sparse vector in `[0, dim)`, entries sorted by index with no zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    dim: usize,
    entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    pub fn zeros(dim: usize) -> Self {
        FeatureVector {
            dim,
            entries: Vec::new(),
        }
    }

    /// Builds a vector from arbitrary `(index, weight)` pairs; duplicate
    /// indices are summed and zero weights dropped.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut acc = BTreeMap::new();
        for (i, w) in pairs {
            assert!(i < dim, "feature index {i} out of range for dim {dim}");
            *acc.entry(i as u32).or_insert(0.0) += w;
        }
        FeatureVector {
            dim,
            entries: acc.into_iter().filter(|&(_, w)| w != 0.0).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&(index as u32), |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    /// `⟨self, dense⟩` where `dense` has length `dim`.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, w)| w * dense[i as usize])
            .sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &(i, w) in &self.entries {
            v[i as usize] = w;
        }
        v
    }
}

/// Hashed log-count bag of tokens, L2-normalized.
///
/// Each distinct token with count `c` adds `ln(1 + c)` at
/// `stable_hash(token) mod dim`. Colliding tokens accumulate.
pub fn featurize<S: AsRef<str>>(tokens: &[S], dim: usize) -> FeatureVector {
    assert!(dim.is_power_of_two(), "feature dimension must be a power of two, got {dim}");
    let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.as_ref()).or_insert(0) += 1;
    }
    let mask = (dim - 1) as u64;
    let mut fv = FeatureVector::from_pairs(
        dim,
        counts
            .into_iter()
            .map(|(t, c)| ((stable_hash(t) & mask) as usize, f64::from(c).ln_1p())),
    );
    let norm = fv.norm();
    if norm > 0.0 {
        for e in &mut fv.entries {
            e.1 /= norm;
        }
    }
    fv
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fnv_reference_values() {
        // Published FNV-1a 64 test vectors.
        assert_eq!(stable_hash(""), 0xcbf29ce484222325);
        assert_eq!(stable_hash("a"), 0xaf63dc4c8601ec8c);
        assert_eq!(stable_hash("foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn empty_tokens_give_zero_vector() {
        let fv = featurize::<&str>(&[], 64);
        assert_eq!(fv.dim(), 64);
        assert_eq!(fv.nnz(), 0);
    }

    #[test]
    fn single_token_has_unit_weight() {
        let fv = featurize(&["main"], 1024);
        assert_eq!(fv.nnz(), 1);
        assert_eq!(fv.entries()[0].1, 1.0);
    }

    #[test]
    fn log_count_ratio() {
        let dim = 1 << 14;
        let (ia, ib) = ((stable_hash("a") as usize) % dim, (stable_hash("b") as usize) % dim);
        assert_ne!(ia, ib);
        let fv = featurize(&["a", "a", "b"], dim);
        assert_eq!(fv.nnz(), 2);
        // ln(1+2) / ln(1+1), computed by hand: 1.0986122886681098 / 0.6931471805599453
        let expected = 1.584_962_500_721_156_2;
        assert!((fv.get(ia) / fv.get(ib) - expected).abs() < 1e-12);
        let raw = (3f64.ln().powi(2) + 2f64.ln().powi(2)).sqrt();
        assert!((fv.get(ia) - 3f64.ln() / raw).abs() < 1e-15);
    }

    #[test]
    fn collisions_accumulate() {
        let fv = featurize(&["a", "b"], 1);
        assert_eq!(fv.nnz(), 1);
        assert_eq!(fv.entries()[0], (0, 1.0));
    }

    proptest! {
        #[test]
        fn nonempty_tokens_have_unit_norm(tokens in prop::collection::vec("[a-z]{1,4}", 1..40), log_dim in 0u32..12) {
            let fv = featurize(&tokens, 1 << log_dim);
            prop_assert!((fv.norm() - 1.0).abs() <= 1e-12);
            prop_assert!(fv.entries().iter().all(|&(_, w)| w != 0.0));
            prop_assert!(fv.entries().windows(2).all(|w| w[0].0 < w[1].0));
        }
    }
}
