#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64;
use qftsim::unitary::UnitaryMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// Gaussian complex matrix orthonormalized column by column (modified
/// Gram-Schmidt); close enough to Haar for property tests.
pub fn random_unitary<R: Rng>(m: usize, rng: &mut R) -> UnitaryMatrix {
    let mut a = Array2::from_shape_fn((m, m), |_| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    for j in 0..m {
        for k in 0..j {
            let proj: Complex64 = (0..m).map(|i| a[(i, k)].conj() * a[(i, j)]).sum();
            for i in 0..m {
                let v = a[(i, k)];
                a[(i, j)] -= proj * v;
            }
        }
        let norm = (0..m).map(|i| a[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..m {
            a[(i, j)] /= norm;
        }
    }
    UnitaryMatrix::new(a).expect("orthonormalized columns")
}

pub fn random_complex_matrix<R: Rng>(k: usize, rng: &mut R) -> Array2<Complex64> {
    Array2::from_shape_fn((k, k), |_| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}
