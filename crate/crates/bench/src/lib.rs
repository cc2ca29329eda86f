//! Shared fixtures for the benchmarks.

use bruhat_core::{random_gl, Mat, RingSpec};

/// Deterministic batch of invertible matrices.
pub fn sample_gl(ring: RingSpec, n: usize, count: usize, seed: u64) -> Vec<Mat> {
    (0..count as u64)
        .map(|i| random_gl(ring, n, seed.wrapping_add(i)))
        .collect()
}

pub fn ring(p: u32, k: u32) -> RingSpec {
    RingSpec::zpk(p, k).expect("valid ring")
}
