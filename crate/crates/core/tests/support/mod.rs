//! Brute-force reference: score every DAG on a handful of variables.
#![allow(dead_code)]

use std::collections::HashMap;

use credible::scoring::score_parent_set;
use credible::synthetic::{random_dataset, sample_network};
use credible::varset::subsets;
use credible::{Dag, Dataset, ScoreConfig, ScoreFunction, VarSet};

pub const LN3: f64 = 1.0986122886681098;
pub const LN20: f64 = 2.995732273553991;
pub const LN150: f64 = 5.0106352940962555;
pub const EPSILONS: [f64; 4] = [0.0, LN3, LN20, LN150];
pub const SLACK: f64 = 1e-9;

/// Every acyclic parent assignment on `n` variables.
pub fn all_dags(n: usize) -> Vec<Vec<VarSet>> {
    let options: Vec<Vec<VarSet>> = (0..n)
        .map(|v| subsets(VarSet::full(n).without(v)).collect())
        .collect();
    let mut out = Vec::new();
    let mut current = vec![VarSet::EMPTY; n];
    fill(&options, 0, &mut current, &mut out);
    out
}

fn fill(options: &[Vec<VarSet>], v: usize, current: &mut Vec<VarSet>, out: &mut Vec<Vec<VarSet>>) {
    if v == options.len() {
        if Dag::new(current.clone()).is_acyclic() {
            out.push(current.clone());
        }
        return;
    }
    for &p in &options[v] {
        current[v] = p;
        fill(options, v + 1, current, out);
    }
}

/// All DAGs with scores, sorted by (score, parents).
pub fn scored_dags(data: &Dataset, cfg: &ScoreConfig) -> Vec<Dag> {
    let n = data.variable_count();
    let mut local: HashMap<(usize, VarSet), f64> = HashMap::new();
    for child in 0..n {
        for ps in subsets(VarSet::full(n).without(child)) {
            let s = score_parent_set(data, child, ps, cfg).unwrap();
            local.insert((child, ps), s.value);
        }
    }
    let mut dags: Vec<Dag> = all_dags(n)
        .into_iter()
        .map(|ps| {
            let score = ps.iter().enumerate().map(|(c, &p)| local[&(c, p)]).sum();
            Dag::scored(ps, score)
        })
        .collect();
    dags.sort_by(Dag::cmp_rank);
    dags
}

/// Members of `dags` (sorted) within `eps` of the best.
pub fn credible(dags: &[Dag], eps: f64) -> Vec<Dag> {
    let opt = dags[0].score();
    dags.iter()
        .filter(|g| g.score() <= opt + eps + SLACK)
        .cloned()
        .collect()
}

pub struct Instance {
    pub label: String,
    pub data: Dataset,
}

impl Instance {
    pub fn configs(&self) -> Vec<ScoreConfig> {
        vec![
            ScoreConfig::bic(&self.data),
            ScoreConfig::new(ScoreFunction::BDeu, 1.0, &self.data).unwrap(),
        ]
    }
}

/// Fifty small datasets covering n in {2,3,4}, N in {10,50} and arities
/// in {2,3}; alternate between sampled networks and independent noise.
pub fn suite() -> Vec<Instance> {
    let arity_sets: [&[usize]; 3] = [&[2], &[3], &[2, 3]];
    (0..50u64)
        .map(|i| {
            let n = 2 + (i % 3) as usize;
            let rows = if (i / 3) % 2 == 0 { 10 } else { 50 };
            let arities = arity_sets[(i / 6) as usize % 3];
            let data = if i % 2 == 0 {
                sample_network(n, rows, arities, 2, 1000 + i).0
            } else {
                random_dataset(n, rows, arities, 2000 + i)
            };
            Instance {
                label: format!("#{i} n={n} N={rows} r={arities:?}"),
                data,
            }
        })
        .collect()
}
