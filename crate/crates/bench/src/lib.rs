//! Shared workloads for the criterion benchmarks.

use credible::synthetic::sample_network;
use credible::{generate_candidates, Dataset, ScoreConfig, ScoreTable};

/// Sampled data over `n` binary and ternary variables with at most two
/// parents per variable.
pub fn workload(n: usize, rows: usize, seed: u64) -> Dataset {
    sample_network(n, rows, &[2, 3], 2, seed).0
}

/// BIC candidate lists for `data` at window `eps`.
pub fn bic_table(data: &Dataset, eps: f64) -> ScoreTable {
    generate_candidates(data, &ScoreConfig::bic(data), eps, None)
        .expect("synthetic data scores")
        .0
}
