//! Fixtures shared by the estimator benchmarks.

use tcsa_core::{sample_model, ModelSpec, Sample, Scheme};

/// Ishigami sample of size `n` from a Latin hypercube design.
pub fn ishigami_sample(n: usize, seed: u64) -> Sample {
    let model = ModelSpec::ishigami_default();
    sample_model(&model, &model.design(n, Scheme::LatinHypercube, seed)).expect("valid design")
}
