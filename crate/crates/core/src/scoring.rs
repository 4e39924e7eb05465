//! Decomposable local scores, lower is better.
//!
//! BIC is `−L(Π) + r_Π (r_i − 1) · w` with `w = ln N / 2`. BDeu is the
//! negated log marginal likelihood with Dirichlet weight `α / r_Π` per parent
//! instantiation and `α / (r_Π r_i)` per cell.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use statrs::function::gamma::ln_gamma;

use crate::dag::Dag;
use crate::dataset::{ContingencyTable, Dataset};
use crate::error::{Error, Result};
use crate::varset::VarSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScoreFunction {
    Bic,
    BDeu,
}

impl fmt::Display for ScoreFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreFunction::Bic => "bic",
            ScoreFunction::BDeu => "bdeu",
        })
    }
}

impl FromStr for ScoreFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bic" | "mdl" => Ok(ScoreFunction::Bic),
            "bdeu" => Ok(ScoreFunction::BDeu),
            other => Err(Error::Domain(format!("unknown scoring function '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreConfig {
    pub function: ScoreFunction,
    /// BDeu equivalent sample size.
    pub alpha: f64,
    /// BIC penalty weight, `ln N / 2`.
    pub weight: f64,
}

impl ScoreConfig {
    pub fn new(function: ScoreFunction, alpha: f64, data: &Dataset) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!(
                "equivalent sample size must be positive, got {alpha}"
            )));
        }
        Ok(ScoreConfig {
            function,
            alpha,
            weight: (data.row_count() as f64).ln() / 2.0,
        })
    }

    pub fn bic(data: &Dataset) -> Self {
        ScoreConfig {
            function: ScoreFunction::Bic,
            alpha: 1.0,
            weight: (data.row_count() as f64).ln() / 2.0,
        }
    }

    pub fn bdeu(data: &Dataset, alpha: f64) -> Result<Self> {
        Self::new(ScoreFunction::BDeu, alpha, data)
    }
}

/// A scored (child, parent set) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalScore {
    pub child: usize,
    pub parents: VarSet,
    pub value: f64,
    /// Maximized log-likelihood; present for BIC scores.
    pub log_lik: Option<f64>,
    /// `t(Π) · w`; present for BIC scores.
    pub penalty: Option<f64>,
}

impl LocalScore {
    /// A score with no breakdown, e.g. one read from a score file.
    pub fn opaque(child: usize, parents: VarSet, value: f64) -> Self {
        LocalScore {
            child,
            parents,
            value,
            log_lik: None,
            penalty: None,
        }
    }
}

fn parents_of(table: &ContingencyTable) -> VarSet {
    table.parents().iter().copied().collect()
}

fn instantiations(table: &ContingencyTable) -> Result<u64> {
    table
        .instantiation_count()
        .ok_or_else(|| Error::ParentSetTooLarge {
            child: table.child(),
            parents: table.parents().to_vec(),
        })
}

/// Maximized log-likelihood Σ_j Σ_k n_ijk ln(n_ijk / n_ij).
pub fn log_likelihood(table: &ContingencyTable) -> f64 {
    table
        .cells()
        .iter()
        .map(|cell| {
            let total = cell.total as f64;
            cell.counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let c = c as f64;
                    c * (c / total).ln()
                })
                .sum::<f64>()
        })
        .sum()
}

pub fn bic_local(table: &ContingencyTable, cfg: &ScoreConfig) -> Result<LocalScore> {
    let r_pi = instantiations(table)?;
    let log_lik = log_likelihood(table);
    let penalty = r_pi as f64 * (table.child_arity() - 1) as f64 * cfg.weight;
    Ok(LocalScore {
        child: table.child(),
        parents: parents_of(table),
        value: -log_lik + penalty,
        log_lik: Some(log_lik),
        penalty: Some(penalty),
    })
}

pub fn bdeu_local(table: &ContingencyTable, cfg: &ScoreConfig) -> Result<LocalScore> {
    let r_pi = instantiations(table)?;
    let a_j = cfg.alpha / r_pi as f64;
    let a_jk = a_j / table.child_arity() as f64;
    let ln_a_j = ln_gamma(a_j);
    let ln_a_jk = ln_gamma(a_jk);
    let mut log_ml = 0.0;
    for cell in table.cells() {
        if cell.total == 0 {
            continue;
        }
        log_ml += ln_a_j - ln_gamma(a_j + cell.total as f64);
        for &c in &cell.counts {
            if c > 0 {
                log_ml += ln_gamma(a_jk + c as f64) - ln_a_jk;
            }
        }
    }
    Ok(LocalScore {
        child: table.child(),
        parents: parents_of(table),
        value: -log_ml,
        log_lik: None,
        penalty: None,
    })
}

/// `r_i^+ · ln r_i`, a lower bound on the BDeu score of this table and of
/// every table over a superset of its parents.
pub fn bdeu_lower_bound(table: &ContingencyTable) -> f64 {
    table.positive_count() as f64 * (table.child_arity() as f64).ln()
}

pub fn local_score(table: &ContingencyTable, cfg: &ScoreConfig) -> Result<LocalScore> {
    match cfg.function {
        ScoreFunction::Bic => bic_local(table, cfg),
        ScoreFunction::BDeu => bdeu_local(table, cfg),
    }
}

/// Scores `child` with `parents` directly from the data.
pub fn score_parent_set(
    data: &Dataset,
    child: usize,
    parents: VarSet,
    cfg: &ScoreConfig,
) -> Result<LocalScore> {
    local_score(&data.counts(child, &parents.to_vec())?, cfg)
}

/// Source of local scores for whole-network evaluation.
pub trait LocalScoreLookup {
    fn local_score(&self, child: usize, parents: VarSet) -> Option<f64>;
}

impl LocalScoreLookup for HashMap<(usize, VarSet), f64> {
    fn local_score(&self, child: usize, parents: VarSet) -> Option<f64> {
        self.get(&(child, parents)).copied()
    }
}

/// Sum of local scores in ascending variable order.
pub fn network_score<L: LocalScoreLookup + ?Sized>(dag: &Dag, locals: &L) -> Result<f64> {
    sum_local_scores(dag.parent_sets(), locals)
}

pub(crate) fn sum_local_scores<L: LocalScoreLookup + ?Sized>(
    parent_sets: &[VarSet],
    locals: &L,
) -> Result<f64> {
    let mut total = 0.0;
    for (child, &parents) in parent_sets.iter().enumerate() {
        total += locals
            .local_score(child, parents)
            .ok_or_else(|| Error::MissingLocalScore {
                child,
                parents: parents.to_vec(),
            })?;
    }
    Ok(total)
}
