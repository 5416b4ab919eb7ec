//! Shared inputs for the benchmarks.

use nalgebra::DVector;

use isosect_core::geom::sampling::{gaussian_vector, rng};

/// `m` random points in dimension `n`, closed under negation.
pub fn symmetric_cloud(n: usize, m: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut r = rng(seed);
    (0..m)
        .flat_map(|_| {
            let p = gaussian_vector(&mut r, n);
            [-&p, p]
        })
        .collect()
}
