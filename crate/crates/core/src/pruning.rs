//! Candidate parent-set generation with ε-relaxed pruning.
//!
//! For each child the parent-set lattice is expanded breadth-first by
//! cardinality, so every subset of a set has been scored (or provably
//! skipped) before the set itself is considered. A set is removed only when
//! no network using it can score within `ε` of the optimum:
//!
//! | rule | applies to | removes |
//! |------|-----------|---------|
//! | 1 subset score | any score | the set |
//! | 2 BIC penalty | BIC | the set and all supersets |
//! | 3 BIC instantiations | BIC | all proper supersets |
//! | 4 BIC cardinality | BIC | every set above the size cap |
//! | 5 BIC entropy | BIC | the set and all supersets |
//! | 6 BDeu positive counts | BDeu | the set and all supersets |
//!
//! All predicates are strict and carry [`SCORE_TOLERANCE`] of slack, so a
//! network scoring exactly `OPT + ε` is never discarded.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;

use crate::dataset::{ContingencyTable, Dataset};
use crate::error::{Error, Result};
use crate::scoring::{local_score, LocalScore, ScoreConfig, ScoreFunction};
use crate::scorefile::ScoreTable;
use crate::solver::SCORE_TOLERANCE;
use crate::varset::VarSet;

/// Parent-set size cap used for BDeu when none is supplied.
pub const DEFAULT_BDEU_PARENT_CAP: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PruneRule {
    SubsetScore,
    BicPenalty,
    BicInstantiations,
    BicCardinality,
    BicEntropy,
    BdeuPositiveCounts,
}

impl PruneRule {
    pub const ALL: [PruneRule; 6] = [
        PruneRule::SubsetScore,
        PruneRule::BicPenalty,
        PruneRule::BicInstantiations,
        PruneRule::BicCardinality,
        PruneRule::BicEntropy,
        PruneRule::BdeuPositiveCounts,
    ];

    pub fn id(self) -> u8 {
        self as u8 + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            PruneRule::SubsetScore => "subset-score",
            PruneRule::BicPenalty => "bic-penalty",
            PruneRule::BicInstantiations => "bic-instantiations",
            PruneRule::BicCardinality => "bic-cardinality",
            PruneRule::BicEntropy => "bic-entropy",
            PruneRule::BdeuPositiveCounts => "bdeu-positive-counts",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Kept,
    Pruned(PruneRule),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub score: LocalScore,
    pub status: Status,
}

impl Candidate {
    pub fn is_kept(&self) -> bool {
        self.status == Status::Kept
    }
}

/// Scored parent sets of one child.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateList {
    pub child: usize,
    /// Sorted by (score, parent set).
    pub entries: Vec<Candidate>,
    /// `None` when the list was imported and its pruning level is unknown.
    pub epsilon: Option<f64>,
    pub max_size: Option<usize>,
}

impl CandidateList {
    pub fn kept(&self) -> impl Iterator<Item = &LocalScore> + '_ {
        self.entries.iter().filter(|c| c.is_kept()).map(|c| &c.score)
    }

    pub fn kept_count(&self) -> usize {
        self.kept().count()
    }

    pub fn find(&self, parents: VarSet) -> Option<&Candidate> {
        self.entries.iter().find(|c| c.score.parents == parents)
    }

    pub(crate) fn sort(&mut self) {
        self.entries.sort_by(|a, b| {
            a.score
                .value
                .total_cmp(&b.score.value)
                .then(a.score.parents.cmp(&b.score.parents))
        });
    }
}

/// Bookkeeping for one pruning run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PruneStats {
    /// Times each rule fired, indexed by `PruneRule as usize`.
    pub fired: [u64; 6],
    pub scored: u64,
    pub skipped: u64,
    pub visited: u64,
    /// Set when a user-supplied or default size cap cut the lattice short.
    pub cap_reached: Option<usize>,
}

impl PruneStats {
    pub fn fired(&self, rule: PruneRule) -> u64 {
        self.fired[rule as usize]
    }

    fn bump(&mut self, rule: PruneRule) {
        self.fired[rule as usize] += 1;
    }

    pub fn merge(&mut self, other: &PruneStats) {
        for (a, b) in self.fired.iter_mut().zip(other.fired) {
            *a += b;
        }
        self.scored += other.scored;
        self.skipped += other.skipped;
        self.visited += other.visited;
        self.cap_reached = match (self.cap_reached, other.cap_reached) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }
}

impl fmt::Display for PruneStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in PruneRule::ALL {
            writeln!(f, "rule {} {}: {}", rule.id(), rule.name(), self.fired(rule))?;
        }
        writeln!(f, "scored: {}", self.scored)?;
        writeln!(f, "skipped: {}", self.skipped)?;
        writeln!(f, "visited: {}", self.visited)?;
        if let Some(cap) = self.cap_reached {
            writeln!(
                f,
                "warning: parent-set size cap {cap} was reached; larger parent sets were not scored and the candidate lists may be incomplete"
            )?;
        }
        Ok(())
    }
}

/// Subset-score rule: prune the superset when the subset beats it by more
/// than `eps`.
pub fn rule_subset_eps(sigma_subset: f64, sigma_superset: f64, eps: f64) -> bool {
    sigma_subset + eps + SCORE_TOLERANCE < sigma_superset
}

/// BIC penalty rule: the superset's penalty alone already exceeds the
/// subset's score by more than `eps`.
pub fn rule_bic_penalty(sigma_subset: f64, penalty_superset: f64, eps: f64) -> bool {
    sigma_subset - penalty_superset + eps + SCORE_TOLERANCE < 0.0
}

/// BIC instantiation rule: when true, every proper superset of the tested
/// set can be pruned.
pub fn rule_bic_instantiations(
    r_parent_inst: u64,
    r_child: usize,
    n_rows: usize,
    weight: f64,
    eps: f64,
) -> bool {
    let lhs = r_parent_inst as f64 * (r_child - 1) as f64 * weight
        - n_rows as f64 * (r_child as f64).ln();
    lhs > eps + SCORE_TOLERANCE
}

/// Largest BIC parent-set size that can appear in a network within `eps` of
/// the optimum: `⌈log₂ N + eps⌉`. `None` for `N ≤ 4`, where the bound is not
/// established.
pub fn bic_parent_cap(n_rows: usize, eps: f64) -> Option<usize> {
    (n_rows > 4).then(|| ((n_rows as f64).log2() + eps).ceil() as usize)
}

/// BIC cardinality rule.
pub fn rule_bic_cardinality(parent_count: usize, n_rows: usize, eps: f64) -> bool {
    bic_parent_cap(n_rows, eps).is_some_and(|cap| parent_count > cap)
}

/// BIC entropy rule for extending `parents` with `new_parent`. When true,
/// `parents ∪ {new_parent}` and all its supersets can be pruned.
pub fn rule_bic_entropy(
    data: &Dataset,
    child: usize,
    parents: VarSet,
    new_parent: usize,
    cfg: &ScoreConfig,
    eps: f64,
) -> Result<bool> {
    let n = data.variable_count();
    if child >= n || new_parent >= n || parents.max_index().is_some_and(|m| m >= n) {
        return Err(Error::InvalidQuery("variable index out of range".into()));
    }
    if parents.contains(child) || parents.contains(new_parent) || new_parent == child {
        return Err(Error::InvalidQuery(
            "new parent must lie outside the parent set and differ from the child".into(),
        ));
    }
    let ps = parents.to_vec();
    let h_child = data.conditional_entropy(&[child], &ps)?;
    let h_new = data.conditional_entropy(&[new_parent], &ps)?;
    let r_pi: f64 = ps.iter().map(|&p| data.arity(p) as f64).product();
    let penalty = r_pi * (data.arity(child) - 1) as f64 * cfg.weight;
    Ok(entropy_predicate(
        h_child,
        h_new,
        data.arity(new_parent),
        penalty,
        data.row_count(),
        eps,
    ))
}

/// `(r_j − 1)·t(Π)·w − N·min{H(V_i|Π), H(V_j|Π)} > eps`: adding `V_j` raises
/// the penalty by more than it can raise the likelihood, with `eps` to spare.
fn entropy_predicate(
    h_child: f64,
    h_new: f64,
    r_new: usize,
    penalty: f64,
    n_rows: usize,
    eps: f64,
) -> bool {
    (r_new - 1) as f64 * penalty - n_rows as f64 * h_child.min(h_new) > eps + SCORE_TOLERANCE
}

/// BDeu positive-count rule: when true, the superset and all its supersets
/// can be pruned.
pub fn rule_bdeu_positive_counts(
    sigma_subset: f64,
    positive_count_superset: usize,
    r_child: usize,
    eps: f64,
) -> bool {
    sigma_subset + eps + SCORE_TOLERANCE < positive_count_superset as f64 * (r_child as f64).ln()
}

struct Node {
    best_sub: f64,
    expandable: bool,
    // H(Π) and H(V_i | Π), used by the entropy rule
    h_parents: f64,
    h_child: f64,
}

fn table_entropy(table: &ContingencyTable, n_rows: usize) -> f64 {
    let n = n_rows as f64;
    table
        .cells()
        .iter()
        .map(|c| {
            let p = c.total as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn conditional_child_entropy(table: &ContingencyTable, n_rows: usize) -> f64 {
    let n = n_rows as f64;
    let h: f64 = table
        .cells()
        .iter()
        .map(|c| {
            let t = c.total as f64;
            c.counts
                .iter()
                .filter(|&&k| k > 0)
                .map(|&k| {
                    let k = k as f64;
                    -(k / n) * (k / t).ln()
                })
                .sum::<f64>()
        })
        .sum();
    h.max(0.0)
}

/// Scores and prunes candidate parent sets for every variable.
///
/// `hard_cap` limits parent-set size; for BDeu it defaults to
/// [`DEFAULT_BDEU_PARENT_CAP`]. The returned lists contain every parent set
/// of every network within `eps` of the optimum, unless the size cap was
/// reached (reported in [`PruneStats::cap_reached`]).
pub fn generate_candidates(
    data: &Dataset,
    cfg: &ScoreConfig,
    eps: f64,
    hard_cap: Option<usize>,
) -> Result<(ScoreTable, PruneStats)> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("epsilon must be finite and non-negative, got {eps}")));
    }
    let per_child: Vec<(CandidateList, PruneStats)> = (0..data.variable_count())
        .into_par_iter()
        .map(|child| candidates_for(data, cfg, eps, child, hard_cap))
        .collect::<Result<_>>()?;
    let mut stats = PruneStats::default();
    let mut lists = Vec::with_capacity(per_child.len());
    for (list, s) in per_child {
        stats.merge(&s);
        lists.push(list);
    }
    Ok((
        ScoreTable {
            names: data.names(),
            lists,
        },
        stats,
    ))
}

fn candidates_for(
    data: &Dataset,
    cfg: &ScoreConfig,
    eps: f64,
    child: usize,
    hard_cap: Option<usize>,
) -> Result<(CandidateList, PruneStats)> {
    let n_rows = data.row_count();
    let r_child = data.arity(child);
    let bic = cfg.function == ScoreFunction::Bic;
    let others = VarSet::full(data.variable_count()).without(child);
    let size_cap = if bic {
        bic_parent_cap(n_rows, eps)
    } else {
        None
    };
    let user_cap = match cfg.function {
        ScoreFunction::Bic => hard_cap,
        ScoreFunction::BDeu => Some(hard_cap.unwrap_or(DEFAULT_BDEU_PARENT_CAP)),
    };
    let applied_cap = match (size_cap, user_cap) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };

    let mut stats = PruneStats::default();
    let mut entries = Vec::new();

    let empty = data.counts_set(child, VarSet::EMPTY);
    let empty_score = local_score(&empty, cfg)?;
    stats.visited += 1;
    stats.scored += 1;
    let mut layer = HashMap::new();
    let mut root = Node {
        best_sub: empty_score.value,
        expandable: true,
        h_parents: 0.0,
        h_child: conditional_child_entropy(&empty, n_rows),
    };
    if bic && rule_bic_instantiations(1, r_child, n_rows, cfg.weight, eps) {
        stats.bump(PruneRule::BicInstantiations);
        root.expandable = false;
    }
    layer.insert(VarSet::EMPTY, root);
    entries.push(Candidate {
        score: empty_score,
        status: Status::Kept,
    });

    for size in 1..=others.len() {
        let mut frontier: Vec<VarSet> = layer
            .iter()
            .filter(|(_, node)| node.expandable)
            .map(|(&s, _)| s)
            .collect();
        frontier.sort_unstable();
        let proposals: Vec<VarSet> = frontier
            .into_iter()
            .flat_map(|s| {
                let floor = s.max_index().map_or(0, |m| m + 1);
                others
                    .iter()
                    .filter(move |&v| v >= floor)
                    .map(move |v| s.with(v))
            })
            .collect();
        if proposals.is_empty() {
            break;
        }
        let count = proposals.len() as u64;
        if size_cap.is_some_and(|cap| size > cap) {
            stats.visited += count;
            stats.skipped += count;
            stats.fired[PruneRule::BicCardinality as usize] += count;
            break;
        }
        if user_cap.is_some_and(|cap| size > cap) {
            stats.visited += count;
            stats.skipped += count;
            stats.cap_reached = user_cap;
            break;
        }

        let mut next = HashMap::with_capacity(proposals.len());
        'candidates: for cand in proposals {
            stats.visited += 1;
            let mut best_sub = f64::INFINITY;
            for v in cand {
                match layer.get(&cand.without(v)) {
                    Some(node) if node.expandable => best_sub = best_sub.min(node.best_sub),
                    _ => {
                        stats.skipped += 1;
                        continue 'candidates;
                    }
                }
            }

            let r_cand: f64 = cand.iter().map(|p| data.arity(p) as f64).product();
            if bic {
                let penalty = r_cand * (r_child - 1) as f64 * cfg.weight;
                if rule_bic_penalty(best_sub, penalty, eps) {
                    stats.bump(PruneRule::BicPenalty);
                    stats.skipped += 1;
                    continue;
                }
            }

            let table = data.counts_set(child, cand);
            let h_cand = table_entropy(&table, n_rows);
            if bic {
                for v in cand {
                    let base = cand.without(v);
                    let node = &layer[&base];
                    let r_base: f64 = base.iter().map(|p| data.arity(p) as f64).product();
                    let penalty = r_base * (r_child - 1) as f64 * cfg.weight;
                    let h_new = (h_cand - node.h_parents).max(0.0);
                    if entropy_predicate(node.h_child, h_new, data.arity(v), penalty, n_rows, eps) {
                        stats.bump(PruneRule::BicEntropy);
                        stats.skipped += 1;
                        continue 'candidates;
                    }
                }
            }

            let score = local_score(&table, cfg)?;
            stats.scored += 1;
            if !bic && rule_bdeu_positive_counts(best_sub, table.positive_count(), r_child, eps) {
                stats.bump(PruneRule::BdeuPositiveCounts);
                entries.push(Candidate {
                    score,
                    status: Status::Pruned(PruneRule::BdeuPositiveCounts),
                });
                continue;
            }

            let status = if rule_subset_eps(best_sub, score.value, eps) {
                stats.bump(PruneRule::SubsetScore);
                Status::Pruned(PruneRule::SubsetScore)
            } else {
                Status::Kept
            };
            let mut expandable = true;
            if bic {
                let r_inst = table.instantiation_count().unwrap_or(u64::MAX);
                if rule_bic_instantiations(r_inst, r_child, n_rows, cfg.weight, eps) {
                    stats.bump(PruneRule::BicInstantiations);
                    expandable = false;
                }
            }
            next.insert(
                cand,
                Node {
                    best_sub: best_sub.min(score.value),
                    expandable,
                    h_parents: h_cand,
                    h_child: conditional_child_entropy(&table, n_rows),
                },
            );
            entries.push(Candidate { score, status });
        }
        layer = next;
        if layer.is_empty() {
            break;
        }
    }

    let mut list = CandidateList {
        child,
        entries,
        epsilon: Some(eps),
        max_size: applied_cap,
    };
    list.sort();
    Ok((list, stats))
}
