//! Local-score files.
//!
//! ```text
//! <n>
//! <name> <m>
//! <score> <k> <parent_1> ... <parent_k>     (m lines)
//! ...
//! ```
//!
//! Scores on disk are higher-is-better, the negation of the in-memory
//! convention. This module is the only place the sign flips.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use crate::error::{Error, ParseError, Result};
use crate::pruning::{Candidate, CandidateList, Status};
use crate::scoring::{LocalScore, LocalScoreLookup};
use crate::varset::{VarSet, MAX_VARIABLES};

/// Named per-variable candidate lists.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    pub names: Vec<String>,
    pub lists: Vec<CandidateList>,
}

impl ScoreTable {
    pub fn variable_count(&self) -> usize {
        self.names.len()
    }

    /// Hash index over kept entries for fast network scoring.
    pub fn index(&self) -> ScoreIndex {
        ScoreIndex(
            self.lists
                .iter()
                .map(|l| l.kept().map(|s| (s.parents, s.value)).collect())
                .collect(),
        )
    }

    pub fn kept_total(&self) -> usize {
        self.lists.iter().map(CandidateList::kept_count).sum()
    }
}

/// Kept local scores keyed by (child, parents).
#[derive(Clone, Debug)]
pub struct ScoreIndex(Vec<HashMap<VarSet, f64>>);

impl LocalScoreLookup for ScoreIndex {
    fn local_score(&self, child: usize, parents: VarSet) -> Option<f64> {
        self.0.get(child)?.get(&parents).copied()
    }
}

impl LocalScoreLookup for ScoreTable {
    fn local_score(&self, child: usize, parents: VarSet) -> Option<f64> {
        self.lists
            .get(child)?
            .find(parents)
            .filter(|c| c.is_kept())
            .map(|c| c.score.value)
    }
}

fn sorted_parent_names(names: &[String], parents: VarSet) -> Vec<&str> {
    let mut ps: Vec<&str> = parents.iter().map(|p| names[p].as_str()).collect();
    ps.sort_unstable();
    ps
}

/// Writes the kept entries of every list.
pub fn write_scores<W: Write>(table: &ScoreTable, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", table.names.len())?;
    for (v, name) in table.names.iter().enumerate() {
        let mut kept: Vec<(&LocalScore, Vec<&str>)> = table
            .lists
            .get(v)
            .into_iter()
            .flat_map(CandidateList::kept)
            .map(|s| (s, sorted_parent_names(&table.names, s.parents)))
            .collect();
        kept.sort_by(|a, b| a.0.value.total_cmp(&b.0.value).then_with(|| a.1.cmp(&b.1)));
        writeln!(out, "{} {}", name, kept.len())?;
        for (score, parents) in kept {
            write!(out, "{} {}", -score.value, parents.len())?;
            for p in parents {
                write!(out, " {p}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn scores_to_string(table: &ScoreTable) -> String {
    let mut buf = Vec::new();
    write_scores(table, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("names are UTF-8")
}

struct RawEntry {
    line: usize,
    score: f64,
    parents: Vec<String>,
}

struct RawSection {
    line: usize,
    name: String,
    entries: Vec<RawEntry>,
}

/// Reads a score file; every entry comes back as kept with an unknown
/// pruning level.
pub fn read_scores<R: BufRead>(source: R) -> Result<ScoreTable> {
    let mut lines = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push((i + 1, line));
        }
    }
    let mut iter = lines.into_iter().peekable();
    let (first_line, header) = iter.next().ok_or_else(|| ParseError::MalformedHeader {
        line: 1,
        reason: "missing variable count".into(),
    })?;
    let declared: usize = header.trim().parse().map_err(|_| ParseError::InvalidNumber {
        line: first_line,
        token: header.trim().to_owned(),
    })?;
    if declared > MAX_VARIABLES {
        return Err(Error::Capacity(format!(
            "{declared} variables, at most {MAX_VARIABLES} supported"
        )));
    }

    let mut sections: Vec<RawSection> = Vec::with_capacity(declared);
    while let Some((line, text)) = iter.next() {
        if sections.len() == declared {
            return Err(ParseError::SectionCountMismatch {
                line,
                declared,
                found: declared + 1,
            }
            .into());
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(ParseError::Invalid {
                line,
                reason: "section header must be '<name> <count>'".into(),
            }
            .into());
        }
        let count: usize = fields[1].parse().map_err(|_| ParseError::InvalidNumber {
            line,
            token: fields[1].to_owned(),
        })?;
        let mut entries = Vec::with_capacity(count);
        for found in 0..count {
            let Some((eline, etext)) = iter.next() else {
                return Err(ParseError::EntryCountMismatch {
                    line: line + found + 1,
                    declared: count,
                    found,
                }
                .into());
            };
            entries.push(parse_entry(eline, &etext)?);
        }
        sections.push(RawSection {
            line,
            name: fields[0].to_owned(),
            entries,
        });
    }
    if sections.len() != declared {
        let line = sections
            .last()
            .map_or(first_line, |s| s.entries.last().map_or(s.line, |e| e.line))
            + 1;
        return Err(ParseError::SectionCountMismatch {
            line,
            declared,
            found: sections.len(),
        }
        .into());
    }

    let mut index = HashMap::new();
    for (v, s) in sections.iter().enumerate() {
        if index.insert(s.name.clone(), v).is_some() {
            return Err(ParseError::Invalid {
                line: s.line,
                reason: format!("duplicate variable '{}'", s.name),
            }
            .into());
        }
    }

    let mut lists = Vec::with_capacity(declared);
    for (child, section) in sections.iter().enumerate() {
        let mut seen = HashSet::new();
        let mut entries = Vec::with_capacity(section.entries.len());
        for e in &section.entries {
            let mut parents = VarSet::EMPTY;
            for name in &e.parents {
                let &p = index.get(name).ok_or_else(|| ParseError::UnknownParent {
                    line: e.line,
                    name: name.clone(),
                })?;
                if p == child || parents.contains(p) {
                    return Err(ParseError::Invalid {
                        line: e.line,
                        reason: format!("invalid or repeated parent '{name}'"),
                    }
                    .into());
                }
                parents = parents.with(p);
            }
            if !seen.insert(parents) {
                return Err(ParseError::DuplicateParentSet { line: e.line }.into());
            }
            entries.push(Candidate {
                score: LocalScore::opaque(child, parents, -e.score),
                status: Status::Kept,
            });
        }
        let mut list = CandidateList {
            child,
            entries,
            epsilon: None,
            max_size: None,
        };
        list.sort();
        lists.push(list);
    }
    Ok(ScoreTable {
        names: sections.into_iter().map(|s| s.name).collect(),
        lists,
    })
}

fn parse_entry(line: usize, text: &str) -> Result<RawEntry> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(ParseError::Invalid {
            line,
            reason: "score line must be '<score> <k> <parents...>'".into(),
        }
        .into());
    }
    let score: f64 = fields[0]
        .parse()
        .ok()
        .filter(|s: &f64| s.is_finite())
        .ok_or_else(|| ParseError::InvalidNumber {
            line,
            token: fields[0].to_owned(),
        })?;
    let k: usize = fields[1].parse().map_err(|_| ParseError::InvalidNumber {
        line,
        token: fields[1].to_owned(),
    })?;
    let parents: Vec<String> = fields[2..].iter().map(|s| (*s).to_owned()).collect();
    if parents.len() != k {
        return Err(ParseError::ParentCountMismatch {
            line,
            declared: k,
            found: parents.len(),
        }
        .into());
    }
    Ok(RawEntry {
        line,
        score,
        parents,
    })
}
