//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use misclassit::{Dataset, MisclassProbs, NonValidationObs, ValidationObs};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/tiny_n30.csv");

pub fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Surrogate log-likelihood of the naive fit, written out directly.
pub fn naive_loglik(rows: &[(bool, Vec<f64>)], beta: &[f64]) -> f64 {
    rows.iter()
        .map(|(y, x)| {
            let eta: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
            let p = sigmoid(eta);
            if *y {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum()
}

/// Maximiser over the lattice `step Z^2` by coarse-to-fine exhaustive search.
///
/// Each stage scans every lattice point of a square window around the
/// previous winner; the final stage uses spacing `step`.
pub fn lattice_argmax_2d(f: impl Fn(&[f64]) -> f64, centre: [f64; 2], half_width: f64, step: f64) -> [f64; 2] {
    let mut best = centre;
    let mut h = half_width;
    let mut s = half_width / 50.0;
    loop {
        let s_eff = s.max(step);
        let k = (h / s_eff).ceil() as i64;
        let origin = [(best[0] / s_eff).round() * s_eff, (best[1] / s_eff).round() * s_eff];
        let mut top = (f64::NEG_INFINITY, best);
        for i in -k..=k {
            for j in -k..=k {
                let b = [origin[0] + i as f64 * s_eff, origin[1] + j as f64 * s_eff];
                let v = f(&b);
                if v > top.0 {
                    top = (v, b);
                }
            }
        }
        best = top.1;
        if s_eff <= step {
            return best;
        }
        h = 3.0 * s_eff;
        s = s_eff / 10.0;
    }
}

/// Plain logistic MLE by Newton iterations, independent of the crate's solver.
pub fn logistic_mle(rows: &[(bool, Vec<f64>)], p: usize) -> DVector<f64> {
    let mut beta = DVector::zeros(p);
    for _ in 0..100 {
        let mut g = DVector::zeros(p);
        let mut h = DMatrix::zeros(p, p);
        for (y, x) in rows {
            let xv = DVector::from_column_slice(x);
            let pr = sigmoid(xv.dot(&beta));
            g += &xv * ((*y as u8 as f64) - pr);
            h += &xv * xv.transpose() * (pr * (1.0 - pr));
        }
        let step = h.lu().solve(&g).unwrap();
        beta += &step;
        if step.amax() < 1e-14 {
            break;
        }
    }
    beta
}

/// Random dataset with an intercept and `p - 1` normal covariates.
pub fn random_dataset(rng: &mut ChaCha8Rng, n1: usize, n2: usize, beta: &[f64], theta: MisclassProbs) -> Dataset {
    let p = beta.len();
    let mut draw = || {
        let mut x = vec![1.0];
        for _ in 1..p {
            let u: f64 = rng.random::<f64>() * 2.0 - 1.0;
            x.push(1.5 * u);
        }
        let eta: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
        let y = rng.random::<f64>() < sigmoid(eta);
        let flip = rng.random::<f64>() < if y { theta.theta2 } else { theta.theta1 };
        (y, y != flip, x)
    };
    let val: Vec<_> = (0..n1)
        .map(|_| {
            let (y, ytilde, x) = draw();
            ValidationObs { y, ytilde, x }
        })
        .collect();
    let non: Vec<_> = (0..n2)
        .map(|_| {
            let (_, ytilde, x) = draw();
            NonValidationObs { ytilde, x }
        })
        .collect();
    Dataset::new(p, true, val, non).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigen(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

pub fn max_eigen(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.max()
}

pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}
pub mod criteria;
