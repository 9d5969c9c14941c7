#![allow(dead_code)]

use est_core::DiscreteMeasure;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use est_core::experiments::rng;

/// Random atoms in `[-1, 1]^dim`. With `grid`, coordinates are snapped to a
/// coarse lattice so that repeated atoms and projection ties occur.
pub fn random_atoms(rng: &mut ChaCha8Rng, n: usize, dim: usize, grid: bool) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    if grid {
                        f64::from(rng.random_range(-3i32..=3)) / 3.0
                    } else {
                        rng.random_range(-1.0..1.0)
                    }
                })
                .collect()
        })
        .collect()
}

pub fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn random_measure(rng: &mut ChaCha8Rng, n: usize, dim: usize, grid: bool) -> DiscreteMeasure {
    let atoms = random_atoms(rng, n, dim, grid);
    let weights = random_weights(rng, n);
    DiscreteMeasure::new(&atoms, &weights).unwrap()
}

pub fn uniform_measure(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> DiscreteMeasure {
    DiscreteMeasure::uniform(&random_atoms(rng, n, dim, false)).unwrap()
}
