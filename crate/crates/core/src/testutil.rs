//! Small synthetic datasets shared by unit tests.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{dot, psi, Dataset, MisclassProbs, NonValidationObs, ValidationObs};

/// Intercept plus uniform(-1, 1) covariates, responses from the logistic model
/// and surrogates flipped with probabilities `theta`.
pub(crate) fn synthetic(n1: usize, n2: usize, beta: &[f64], theta: MisclassProbs, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = beta.len();
    let b = DVector::from_column_slice(beta);
    let draw = |rng: &mut ChaCha8Rng| {
        let mut x = vec![1.0];
        for _ in 1..p {
            x.push(rng.random::<f64>() * 2.0 - 1.0);
        }
        let y = rng.random::<f64>() < psi(dot(&x, &b));
        let flip = rng.random::<f64>() < if y { theta.theta2 } else { theta.theta1 };
        (y, y != flip, x)
    };
    let val = (0..n1)
        .map(|_| {
            let (y, ytilde, x) = draw(&mut rng);
            ValidationObs { y, ytilde, x }
        })
        .collect();
    let non = (0..n2)
        .map(|_| {
            let (_, ytilde, x) = draw(&mut rng);
            NonValidationObs { ytilde, x }
        })
        .collect();
    Dataset::new(p, true, val, non).unwrap()
}
