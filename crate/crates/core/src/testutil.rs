use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{ComplexMatrix, RealMatrix};
use crate::scalar::Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn random_real_matrix(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> RealMatrix {
    RealMatrix::from_fn(n, |_, _| scale * normal(rng))
}

pub fn random_complex_matrix(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, |_, _| Complex64::new(scale * normal(rng), scale * normal(rng)))
}

pub fn random_traceless(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> RealMatrix {
    let mut x = random_real_matrix(rng, n, scale);
    let shift = x.trace() / n as f64;
    for i in 0..n {
        x[(i, i)] -= shift;
    }
    x
}
