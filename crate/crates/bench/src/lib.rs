//! Shared fixtures for the benchmarks.

use glpen::{make_density, Sample};

/// A seeded sample from test density `id`.
pub fn fixture(id: u8, n: usize) -> Sample {
    make_density(id)
        .expect("valid id")
        .sample(n, 42)
        .expect("n > 0")
}
