//! Inputs shared by the benchmarks.

use misclassit::sim::{replicate_dataset, SimConfig, SimModel};
use misclassit::Dataset;

/// A model (a) dataset with `n` rows, a fifth of them validated.
pub fn model_a_data(n: usize) -> Dataset {
    let cfg = SimConfig { n, f_n: 0.2, seed: 42, ..SimConfig::default() };
    replicate_dataset(&SimModel::model_a(), &cfg, 0).expect("valid design")
}
