use std::cmp::Ordering;

use crate::varset::VarSet;

/// A network structure given as one parent set per variable, plus its score.
#[derive(Clone, Debug, PartialEq)]
pub struct Dag {
    parents: Vec<VarSet>,
    score: f64,
}

impl Dag {
    /// An unscored structure (score 0).
    pub fn new(parents: Vec<VarSet>) -> Self {
        Dag { parents, score: 0.0 }
    }

    pub fn scored(parents: Vec<VarSet>, score: f64) -> Self {
        Dag { parents, score }
    }

    pub fn parent_sets(&self) -> &[VarSet] {
        &self.parents
    }

    pub fn parents_of(&self, v: usize) -> VarSet {
        self.parents[v]
    }

    pub fn variable_count(&self) -> usize {
        self.parents.len()
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn set_score(&mut self, score: f64) {
        self.score = score;
    }

    /// Parent masks in ascending variable order, each as 8 big-endian bytes.
    pub fn canonical_key(&self) -> Vec<u8> {
        self.parents
            .iter()
            .flat_map(|p| p.bits().to_be_bytes())
            .collect()
    }

    /// Orders by score, then by canonical key.
    pub fn cmp_rank(&self, other: &Dag) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| self.parents.cmp(&other.parents))
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(|p| p.len()).sum()
    }

    /// Directed edges `(from, to)` sorted by `to`, then `from`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(child, ps)| ps.iter().map(move |p| (p, child)))
    }

    /// A topological order, or `None` if the graph has a cycle or a
    /// self-loop or references a variable out of range.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.parents.len();
        if self
            .parents
            .iter()
            .enumerate()
            .any(|(v, p)| p.contains(v) || p.max_index().is_some_and(|m| m >= n))
        {
            return None;
        }
        let mut placed = VarSet::EMPTY;
        let mut order = Vec::with_capacity(n);
        while order.len() < n {
            let ready = (0..n).find(|&v| !placed.contains(v) && self.parents[v].is_subset_of(placed))?;
            placed = placed.with(ready);
            order.push(ready);
        }
        Some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// `child:parent,parent;child:...` with variables and parents in
    /// ascending name order.
    pub fn format_named(&self, names: &[String]) -> String {
        let mut order: Vec<usize> = (0..self.parents.len()).collect();
        order.sort_by(|&a, &b| names[a].cmp(&names[b]));
        let mut out = String::new();
        for (i, &v) in order.iter().enumerate() {
            if i > 0 {
                out.push(';');
            }
            out.push_str(&names[v]);
            out.push(':');
            let mut ps: Vec<&str> = self.parents[v].iter().map(|p| names[p].as_str()).collect();
            ps.sort_unstable();
            out.push_str(&ps.join(","));
        }
        out
    }
}
