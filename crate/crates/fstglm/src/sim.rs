//! Seeded simulation designs used by the command-line tool and the test
//! suite. Same seed, same bytes, on every platform.

use crate::data::Dataset;
use crate::dist::{bernoulli, rng_for, standard_normal, streams};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::scalar::Real;

/// Design 1: n = 100 rows; the label is Bernoulli(0.6) and independent of
/// ten independent binary predictors with success probabilities
/// (0.3, 0.3, 0.3, 0.5, 0.5, 0.5, 0.5, 0.5, 0.8, 0.8). Pure noise: no
/// feature carries signal, so shrinkage should drive coefficients to zero.
pub fn gen_example1<T: Real>(seed: u64) -> Dataset<T> {
    const N: usize = 100;
    const PROBS: [f64; 10] = [0.3, 0.3, 0.3, 0.5, 0.5, 0.5, 0.5, 0.5, 0.8, 0.8];
    let mut rng = rng_for(seed, streams::BERNOULLI_DESIGN);
    let mut design = Matrix::zeros(N, PROBS.len());
    let mut labels = Vec::with_capacity(N);
    for i in 0..N {
        labels.push(bernoulli(&mut rng, T::of(0.6)));
        for (j, &p) in PROBS.iter().enumerate() {
            let x = bernoulli(&mut rng, T::of(p));
            design.set(i, j, if x { T::one() } else { T::zero() });
        }
    }
    let names = (1..=PROBS.len()).map(|j| format!("x{j}")).collect();
    Dataset::new(design, labels, names).expect("generated dataset is well-formed")
}

/// Correlation matrix of the 11 latent Gaussians behind design 2.
/// Coordinate 0 becomes the label. Pairwise correlations: 0.8 within
/// {0..4}, 0.3 within {5,6,7}, 0.4 within {8,9,10}, 0.01 across groups.
pub fn example2_covariance<T: Real>() -> Matrix<T> {
    const K: usize = 11;
    let mut cov = Matrix::zeros(K, K);
    let group = |i: usize| -> usize {
        match i {
            0..=4 => 0,
            5..=7 => 1,
            _ => 2,
        }
    };
    let within = [0.8, 0.3, 0.4];
    for i in 0..K {
        for j in 0..K {
            let v = if i == j {
                1.0
            } else if group(i) == group(j) {
                within[group(i)]
            } else {
                0.01
            };
            cov.set(i, j, T::of(v));
        }
    }
    cov
}

/// Design 2: n = 100 rows; draw an 11-dimensional correlated Gaussian and
/// dichotomize each coordinate at zero (negative -> 0, else -> 1).
/// Coordinate 0 is the label, coordinates 1..=10 the features, so the label
/// is strongly related to features x1..x4 and nearly independent of the rest.
pub fn gen_example2<T: Real>(seed: u64) -> Result<Dataset<T>> {
    gen_thresholded(seed, &example2_covariance())
}

fn gen_thresholded<T: Real>(seed: u64, cov: &Matrix<T>) -> Result<Dataset<T>> {
    const N: usize = 100;
    let k = cov.rows();
    if k < 2 || cov.cols() != k {
        return Err(Error::Validation(format!(
            "covariance must be square with at least 2 variables, got {}x{}",
            cov.rows(),
            cov.cols()
        )));
    }
    let chol = Cholesky::new(cov)
        .map_err(|e| Error::Numerical(format!("covariance factorization failed: {e}")))?;
    let l = chol.factor();
    let mut rng = rng_for(seed, streams::CORRELATED_DESIGN);
    let mut design = Matrix::zeros(N, k - 1);
    let mut labels = Vec::with_capacity(N);
    let mut z = vec![T::zero(); k];
    for i in 0..N {
        for zi in z.iter_mut() {
            *zi = standard_normal(&mut rng);
        }
        let v = l.matvec(&z);
        labels.push(v[0] >= T::zero());
        for j in 1..k {
            let b = v[j] >= T::zero();
            design.set(i, j - 1, if b { T::one() } else { T::zero() });
        }
    }
    let names = (1..k).map(|j| format!("x{j}")).collect();
    Dataset::new(design, labels, names)
}
