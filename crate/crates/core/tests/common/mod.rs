//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use causal_compression::synth::BoxMuller;
use causal_compression::{CovarianceModel, Matrix, SparsityWeights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random `2n × 2n` correlation matrix `W Wᵀ / 2n + 0.1 I`, normalised.
pub fn random_correlation(n: usize, seed: u64) -> CovarianceModel<f64> {
    let dim = 2 * n;
    let mut g = BoxMuller::new(seed);
    let w = Matrix::from_fn(dim, dim, |_, _| g.next());
    let mut m = w.matmul(&w.transpose()).scale(1.0 / dim as f64);
    for i in 0..dim {
        m[(i, i)] += 0.1;
    }
    CovarianceModel::new(n, m).unwrap().to_correlation()
}

/// Weights uniform in `[lo, hi)`.
pub fn random_weights(n: usize, lo: f64, hi: f64, seed: u64) -> SparsityWeights<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SparsityWeights::new((0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

/// Block-diagonal model: X and Y independent.
pub fn independent_blocks(n: usize, seed: u64) -> CovarianceModel<f64> {
    let full = random_correlation(n, seed);
    let m = full.matrix();
    let same_block = |i: usize, j: usize| (i < n) == (j < n);
    let b = Matrix::from_fn(2 * n, 2 * n, |i, j| if same_block(i, j) { m[(i, j)] } else { 0.0 });
    CovarianceModel::new(n, b).unwrap()
}

/// F1 of a found set against the truth; two empty sets score 1.
pub fn f1<T: Ord + Clone>(truth: &[T], found: &[T]) -> f64 {
    let t: BTreeSet<T> = truth.iter().cloned().collect();
    let f: BTreeSet<T> = found.iter().cloned().collect();
    if t.is_empty() && f.is_empty() {
        return 1.0;
    }
    let tp = t.intersection(&f).count() as f64;
    2.0 * tp / (t.len() + f.len()) as f64
}
