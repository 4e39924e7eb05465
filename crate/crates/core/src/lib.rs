//! Enumeration of near-optimal Bayesian network structures.
//!
//! The pipeline reads discrete complete data ([`dataset`]), scores candidate
//! parent sets with BIC or BDeu ([`scoring`]), discards parent sets that
//! cannot appear in any network within `ε` of the optimum ([`pruning`]),
//! finds the optimum and every network within the window ([`solver`]), and
//! groups the result into Markov equivalence classes ([`equivalence`]).

pub mod dag;
pub mod dataset;
pub mod equivalence;
pub mod error;
pub mod pruning;
pub mod scorefile;
pub mod scoring;
pub mod solver;
pub mod synthetic;
pub mod varset;

pub use dag::Dag;
pub use dataset::{parse_dataset, Cell, ContingencyTable, DataFormat, Dataset, Variable};
pub use equivalence::{mec_key, partition, ArcStat, MecClass, MecKey, MecPartition};
pub use error::{Error, ParseError, Result};
pub use pruning::{generate_candidates, Candidate, CandidateList, PruneRule, PruneStats, Status};
pub use scorefile::{read_scores, write_scores, ScoreTable};
pub use scoring::{LocalScore, ScoreConfig, ScoreFunction};
pub use solver::{
    enumerate_credible, resolve_epsilon, solve_opt, verify_credible, CredibleSet, EpsilonSpec,
    Solution, SubsetTables, SCORE_TOLERANCE,
};
pub use varset::VarSet;

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::dataset::{parse_dataset, DataFormat, Dataset};

    /// Two binary variables, N = 8, B agrees with A in 6 of 8 rows.
    pub fn d1() -> Dataset {
        let text = "A B\n2 2\n0 0\n0 0\n0 0\n0 1\n1 0\n1 1\n1 1\n1 1\n";
        parse_dataset(text.as_bytes(), DataFormat::Native).unwrap()
    }
}
