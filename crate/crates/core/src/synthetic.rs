//! Seeded synthetic datasets for tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dag::Dag;
use crate::dataset::{Dataset, Variable};
use crate::varset::VarSet;

fn variables(n: usize, arities: &[usize]) -> Vec<Variable> {
    (0..n)
        .map(|v| Variable {
            name: format!("X{v}"),
            states: (0..arities[v % arities.len()]).map(|s| s.to_string()).collect(),
        })
        .collect()
}

/// Independent uniform columns. Arities are cycled over the variables.
pub fn random_dataset(n: usize, rows: usize, arities: &[usize], seed: u64) -> Dataset {
    assert!(!arities.is_empty(), "need at least one arity");
    let vars = variables(n, arities);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<Vec<u32>> = (0..rows)
        .map(|_| vars.iter().map(|v| rng.gen_range(0..v.arity() as u32)).collect())
        .collect();
    Dataset::new(vars, &data).expect("generated data is well formed")
}

/// Forward-samples `rows` records from a random network over `n` variables
/// in which each variable draws up to `max_parents` parents among lower
/// indices. Conditional distributions are skewed so the structure is
/// recoverable. Returns the data and the generating structure.
pub fn sample_network(
    n: usize,
    rows: usize,
    arities: &[usize],
    max_parents: usize,
    seed: u64,
) -> (Dataset, Dag) {
    assert!(!arities.is_empty(), "need at least one arity");
    let vars = variables(n, arities);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parents = vec![VarSet::EMPTY; n];
    for (v, ps) in parents.iter_mut().enumerate() {
        let k = rng.gen_range(0..=max_parents.min(v));
        while ps.len() < k {
            *ps = ps.with(rng.gen_range(0..v));
        }
    }
    // cpts[v][config] is a cumulative distribution over the states of v
    let cpts: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|v| {
            let configs: usize = parents[v].iter().map(|p| vars[p].arity()).product();
            (0..configs)
                .map(|_| {
                    let r = vars[v].arity();
                    let favored = rng.gen_range(0..r);
                    let mut w: Vec<f64> = (0..r)
                        .map(|s| rng.gen::<f64>() + if s == favored { 3.0 } else { 0.0 })
                        .collect();
                    let total: f64 = w.iter().sum();
                    let mut acc = 0.0;
                    for x in &mut w {
                        acc += *x / total;
                        *x = acc;
                    }
                    w
                })
                .collect()
        })
        .collect();
    let data: Vec<Vec<u32>> = (0..rows)
        .map(|_| {
            let mut row = vec![0u32; n];
            for v in 0..n {
                let config = parents[v]
                    .iter()
                    .fold(0usize, |acc, p| acc * vars[p].arity() + row[p] as usize);
                let u: f64 = rng.gen();
                let cdf = &cpts[v][config];
                row[v] = cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1) as u32;
            }
            row
        })
        .collect();
    let dataset = Dataset::new(vars, &data).expect("generated data is well formed");
    (dataset, Dag::new(parents))
}
