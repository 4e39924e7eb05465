//! Exact optimum by dynamic programming over variable subsets, and
//! enumeration of every network within `ε` of it.
//!
//! `best_parents(v, S)` is the cheapest kept parent set of `v` inside `S`;
//! `best_net(S)` the cheapest network over `S`, built by repeatedly choosing
//! a sink. Because `best_net` is exact it is an admissible completion bound,
//! so the branch-and-bound enumeration never cuts a credible network.
//!
//! Each network is generated exactly once: at every step the chosen sink must
//! be the largest-index sink of the subgraph on the remaining variables. Any
//! remaining variable above the chosen sink that is not one of its parents is
//! recorded as needing a child among the variables still to be placed, and
//! may not itself be chosen as a sink until it gets one.

use std::collections::{BinaryHeap, HashSet};
use std::io::Write;

use rayon::prelude::*;

use crate::dag::Dag;
use crate::error::{Error, Result};
use crate::scorefile::ScoreTable;
use crate::scoring::sum_local_scores;
use crate::varset::VarSet;

/// Absolute slack on every score comparison, so networks on the
/// `OPT + ε` boundary survive floating-point evaluation.
pub const SCORE_TOLERANCE: f64 = 1e-9;

/// Largest variable count the subset tables are built for by default.
pub const DEFAULT_DP_LIMIT: usize = 24;

/// Default cap on collected networks.
pub const DEFAULT_COUNT_LIMIT: usize = 150_000;

/// How the score window is specified.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EpsilonSpec {
    Direct(f64),
    /// ε = ln BF, BF > 1.
    BayesFactor(f64),
    /// ε = (ρ − 1)·|OPT|, ρ ≥ 1.
    Factor(f64),
}

impl EpsilonSpec {
    /// Whether the window depends on the optimal score.
    pub fn needs_opt(&self) -> bool {
        matches!(self, EpsilonSpec::Factor(_))
    }
}

pub fn resolve_epsilon(spec: EpsilonSpec, opt: f64) -> Result<f64> {
    match spec {
        EpsilonSpec::Direct(eps) if eps >= 0.0 && eps.is_finite() => Ok(eps),
        EpsilonSpec::Direct(eps) => Err(Error::Domain(format!(
            "epsilon must be finite and non-negative, got {eps}"
        ))),
        EpsilonSpec::BayesFactor(bf) if bf > 1.0 && bf.is_finite() => Ok(bf.ln()),
        EpsilonSpec::BayesFactor(bf) => Err(Error::Domain(format!(
            "Bayes factor must exceed 1, got {bf}"
        ))),
        EpsilonSpec::Factor(rho) if rho >= 1.0 && rho.is_finite() => {
            if !opt.is_finite() {
                return Err(Error::Domain(format!("optimal score {opt} is not finite")));
            }
            Ok((rho - 1.0) * opt.abs())
        }
        EpsilonSpec::Factor(rho) => Err(Error::Domain(format!(
            "approximation factor must be at least 1, got {rho}"
        ))),
    }
}

/// Subset tables shared by the optimum search and the enumeration.
#[derive(Clone, Debug)]
pub struct SubsetTables {
    n: usize,
    // best_parents[v] is indexed by subsets of the other variables with bit v removed
    best_parents: Vec<Vec<f64>>,
    best_net: Vec<f64>,
}

fn squeeze(set: VarSet, v: usize) -> usize {
    let bits = set.bits();
    let low = bits & ((1u64 << v) - 1);
    let high = (bits >> (v + 1)) << v;
    (low | high) as usize
}

impl SubsetTables {
    fn build(lists: &[Vec<(f64, VarSet)>]) -> Self {
        let n = lists.len();
        let width = n.saturating_sub(1);
        let best_parents: Vec<Vec<f64>> = lists
            .par_iter()
            .enumerate()
            .map(|(v, list)| {
                let mut t = vec![f64::INFINITY; 1 << width];
                for &(score, parents) in list {
                    let slot = &mut t[squeeze(parents, v)];
                    *slot = slot.min(score);
                }
                for b in 0..width {
                    let bit = 1 << b;
                    for idx in 0..t.len() {
                        if idx & bit != 0 {
                            t[idx] = t[idx].min(t[idx ^ bit]);
                        }
                    }
                }
                t
            })
            .collect();
        let mut tables = SubsetTables {
            n,
            best_parents,
            best_net: vec![f64::INFINITY; 1 << n],
        };
        tables.best_net[0] = 0.0;
        for s in 1..(1u64 << n) {
            let set = VarSet::from_bits(s);
            tables.best_net[s as usize] = set
                .iter()
                .map(|v| tables.sink_cost(set, v))
                .fold(f64::INFINITY, f64::min);
        }
        tables
    }

    fn sink_cost(&self, set: VarSet, v: usize) -> f64 {
        let rest = set.without(v);
        self.best_parents(v, rest) + self.best_net(rest)
    }

    pub fn variable_count(&self) -> usize {
        self.n
    }

    /// Minimal local score of `v` over kept parent sets inside `within`.
    pub fn best_parents(&self, v: usize, within: VarSet) -> f64 {
        self.best_parents[v][squeeze(within.without(v), v)]
    }

    /// Minimal network score over the variables in `set`.
    pub fn best_net(&self, set: VarSet) -> f64 {
        self.best_net[set.bits() as usize]
    }
}

/// Output of [`solve_opt`].
#[derive(Clone, Debug)]
pub struct Solution {
    pub opt: f64,
    pub tables: SubsetTables,
    pub witness: Dag,
}

fn kept_lists(table: &ScoreTable) -> Vec<Vec<(f64, VarSet)>> {
    table
        .lists
        .iter()
        .map(|l| {
            let mut v: Vec<(f64, VarSet)> = l.kept().map(|s| (s.value, s.parents)).collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            v
        })
        .collect()
}

pub fn solve_opt(table: &ScoreTable) -> Result<Solution> {
    solve_opt_with_limit(table, DEFAULT_DP_LIMIT)
}

/// Optimal network score and one optimal network, refusing instances with
/// more than `dp_limit` variables.
pub fn solve_opt_with_limit(table: &ScoreTable, dp_limit: usize) -> Result<Solution> {
    let n = table.variable_count();
    if n == 0 {
        return Err(Error::Domain("no variables".into()));
    }
    if n > dp_limit || n >= 63 {
        return Err(Error::Capacity(format!(
            "{n} variables exceed the subset table limit of {dp_limit}; reduce the number of variables"
        )));
    }
    if table.lists.len() != n {
        return Err(Error::Domain(format!(
            "{} candidate lists for {n} variables",
            table.lists.len()
        )));
    }
    let lists = kept_lists(table);
    let tables = SubsetTables::build(&lists);
    let full = VarSet::full(n);
    if !tables.best_net(full).is_finite() {
        return Err(Error::Infeasible);
    }

    let mut parents = vec![VarSet::EMPTY; n];
    let mut remaining = full;
    while !remaining.is_empty() {
        let target = tables.best_net(remaining);
        let sink = remaining
            .iter()
            .find(|&v| tables.sink_cost(remaining, v) == target)
            .expect("some sink attains the subset minimum");
        let rest = remaining.without(sink);
        let best = tables.best_parents(sink, rest);
        parents[sink] = lists[sink]
            .iter()
            .find(|(s, p)| *s == best && p.is_subset_of(rest))
            .map(|&(_, p)| p)
            .expect("minimal parent set is present in the list");
        remaining = rest;
    }
    let score = sum_local_scores(&parents, &table.index())?;
    Ok(Solution {
        opt: score,
        tables,
        witness: Dag::scored(parents, score),
    })
}

/// All networks with score in `[OPT, OPT + ε]`, possibly truncated.
#[derive(Clone, Debug, PartialEq)]
pub struct CredibleSet {
    /// Sorted by (score, canonical key).
    pub networks: Vec<Dag>,
    pub opt_score: f64,
    pub epsilon: f64,
    /// Set when more than `limit` credible networks exist; the kept ones are
    /// the best `limit` by (score, canonical key).
    pub truncated: bool,
}

impl CredibleSet {
    pub fn len(&self) -> usize {
        self.networks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.networks.is_empty()
    }

    /// `#opt=.. eps=.. truncated=..` header, then `score<TAB>structure` lines.
    pub fn write_text<W: Write>(&self, names: &[String], mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "#opt={} eps={} truncated={}",
            self.opt_score,
            self.epsilon,
            u8::from(self.truncated)
        )?;
        for g in &self.networks {
            writeln!(out, "{}\t{}", g.score(), g.format_named(names))?;
        }
        Ok(())
    }
}

struct Ranked(Dag);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.0.cmp_rank(&other.0).is_eq()
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.cmp_rank(&other.0)
    }
}

struct Enumerator<'a> {
    lists: &'a [Vec<(f64, VarSet)>],
    tables: &'a SubsetTables,
    limit: usize,
    window: f64,
    cutoff: f64,
    parents: Vec<VarSet>,
    local: Vec<f64>,
    best: BinaryHeap<Ranked>,
    members: HashSet<Vec<VarSet>>,
    truncated: bool,
}

impl Enumerator<'_> {
    fn search(&mut self, remaining: VarSet, cost: f64, need: VarSet) {
        if remaining.is_empty() {
            self.complete();
            return;
        }
        if cost + self.tables.best_net(remaining) > self.cutoff + SCORE_TOLERANCE {
            return;
        }
        let lists = self.lists;
        for v in remaining.difference(need) {
            let rest = remaining.without(v);
            let base = cost + self.tables.best_net(rest);
            if base + self.tables.best_parents(v, rest) > self.cutoff + SCORE_TOLERANCE {
                continue;
            }
            let above: VarSet = rest.iter().filter(|&u| u > v).collect();
            for &(score, ps) in &lists[v] {
                if base + score > self.cutoff + SCORE_TOLERANCE {
                    break;
                }
                if !ps.is_subset_of(rest) {
                    continue;
                }
                let next_need = need.union(above).difference(ps);
                if !rest.is_empty() && next_need == rest {
                    continue;
                }
                self.parents[v] = ps;
                self.local[v] = score;
                self.search(rest, cost + score, next_need);
            }
        }
    }

    fn complete(&mut self) {
        let score: f64 = self.local.iter().sum();
        if score > self.window + SCORE_TOLERANCE {
            return;
        }
        if self.members.contains(&self.parents) {
            return;
        }
        let dag = Dag::scored(self.parents.clone(), score);
        if self.best.len() < self.limit {
            self.members.insert(self.parents.clone());
            self.best.push(Ranked(dag));
            return;
        }
        self.truncated = true;
        let worst = self.best.peek().expect("limit is positive");
        if dag.cmp_rank(&worst.0).is_lt() {
            let evicted = self.best.pop().expect("heap is full");
            self.members.remove(evicted.0.parent_sets());
            self.members.insert(self.parents.clone());
            self.best.push(Ranked(dag));
        }
        self.cutoff = self.best.peek().map_or(self.window, |w| w.0.score());
    }
}

/// Collects every network with score at most `opt + eps`, keeping at most
/// `limit` of them.
pub fn enumerate_credible(
    table: &ScoreTable,
    tables: &SubsetTables,
    opt: f64,
    eps: f64,
    limit: usize,
) -> Result<CredibleSet> {
    if limit == 0 {
        return Err(Error::Domain("counting limit must be at least 1".into()));
    }
    let eps = resolve_epsilon(EpsilonSpec::Direct(eps), opt)?;
    let n = table.variable_count();
    if tables.variable_count() != n {
        return Err(Error::Domain("subset tables were built for a different problem".into()));
    }
    let lists = kept_lists(table);
    let mut search = Enumerator {
        lists: &lists,
        tables,
        limit,
        window: opt + eps,
        cutoff: opt + eps,
        parents: vec![VarSet::EMPTY; n],
        local: vec![0.0; n],
        best: BinaryHeap::new(),
        members: HashSet::new(),
        truncated: false,
    };
    search.search(VarSet::full(n), 0.0, VarSet::EMPTY);
    let truncated = search.truncated;
    let mut networks: Vec<Dag> = search.best.into_iter().map(|r| r.0).collect();
    networks.sort_by(Dag::cmp_rank);
    let opt_score = networks.first().map_or(opt, Dag::score);
    Ok(CredibleSet {
        networks,
        opt_score,
        epsilon: eps,
        truncated,
    })
}

/// Outcome of [`verify_credible`]; empty `failures` means the set is valid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Rechecks every member: known parent sets, recomputed score, acyclicity,
/// window bounds, uniqueness and ordering.
pub fn verify_credible(set: &CredibleSet, table: &ScoreTable) -> VerifyReport {
    let index = table.index();
    let mut failures = Vec::new();
    let mut seen = HashSet::new();
    let upper = set.opt_score + set.epsilon + SCORE_TOLERANCE;
    for (i, g) in set.networks.iter().enumerate() {
        if g.variable_count() != table.variable_count() {
            failures.push(format!("network {i}: wrong variable count"));
            continue;
        }
        if !g.is_acyclic() {
            failures.push(format!("network {i}: cycle detected"));
        }
        match sum_local_scores(g.parent_sets(), &index) {
            Ok(s) if (s - g.score()).abs() > SCORE_TOLERANCE => failures.push(format!(
                "network {i}: score mismatch (stored {}, recomputed {s})",
                g.score()
            )),
            Ok(_) => {}
            Err(e) => failures.push(format!("network {i}: {e}")),
        }
        if g.score() < set.opt_score - SCORE_TOLERANCE || g.score() > upper {
            failures.push(format!("network {i}: score {} outside the window", g.score()));
        }
        if !seen.insert(g.canonical_key()) {
            failures.push(format!("network {i}: duplicate network"));
        }
        if i > 0 && set.networks[i - 1].cmp_rank(g).is_gt() {
            failures.push(format!("network {i}: out of order"));
        }
    }
    VerifyReport { failures }
}
