//! Fixed-seed inputs shared by the benchmarks.

use est_core::experiments::{gaussian_cloud, rng};
use est_core::{DiscreteMeasure, SliceSet};

/// Two uniform Gaussian clouds of `n` atoms in `dim` dimensions, one unit apart.
pub fn cloud_pair(n: usize, dim: usize, seed: u64) -> (DiscreteMeasure, DiscreteMeasure) {
    let mut r = rng(seed);
    let origin = vec![0.0; dim];
    let mut shifted = origin.clone();
    shifted[0] = 1.0;
    let mu = gaussian_cloud(&mut r, n, &origin, 1.0).expect("valid cloud");
    let nu = gaussian_cloud(&mut r, n, &shifted, 1.0).expect("valid cloud");
    (mu, nu)
}

pub fn slices(count: usize, dim: usize, seed: u64) -> SliceSet {
    SliceSet::sample(count, dim, seed).expect("valid slice set")
}
