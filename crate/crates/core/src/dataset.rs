//! Discrete complete-data tables and their sufficient statistics.
//!
//! A [`Dataset`] is immutable once built. Counting and entropy queries are
//! pure reads, so they can be shared freely across worker threads.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use crate::error::{Error, ParseError, Result};
use crate::varset::{VarSet, MAX_VARIABLES};

/// Input encodings understood by [`parse_dataset`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataFormat {
    /// Whitespace-separated: names, arities, then integer rows.
    Native,
    /// Header of names followed by string-valued rows; arities inferred.
    Csv,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    /// State labels; the arity is their count.
    pub states: Vec<String>,
}

impl Variable {
    pub fn arity(&self) -> usize {
        self.states.len()
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    variables: Vec<Variable>,
    // column-major: columns[v][row]
    columns: Vec<Vec<u32>>,
    rows: usize,
}

impl Dataset {
    /// Builds a dataset from row tuples of state indices.
    pub fn new(variables: Vec<Variable>, rows: &[Vec<u32>]) -> Result<Self> {
        let n = variables.len();
        if n == 0 {
            return Err(ParseError::MalformedHeader {
                line: 1,
                reason: "no variables".into(),
            }
            .into());
        }
        if n > MAX_VARIABLES {
            return Err(Error::Capacity(format!(
                "{n} variables, at most {MAX_VARIABLES} supported"
            )));
        }
        let mut seen = HashSet::new();
        for v in &variables {
            if v.name.is_empty() || !seen.insert(v.name.as_str()) {
                return Err(ParseError::MalformedHeader {
                    line: 1,
                    reason: format!("empty or duplicate variable name '{}'", v.name),
                }
                .into());
            }
            if v.arity() < 2 {
                return Err(ParseError::ArityTooSmall {
                    line: 2,
                    variable: v.name.clone(),
                    arity: v.arity(),
                }
                .into());
            }
        }
        if rows.is_empty() {
            return Err(ParseError::EmptyDataset { line: 3 }.into());
        }
        let mut columns = vec![Vec::with_capacity(rows.len()); n];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(ParseError::RaggedRow {
                    line: r + 3,
                    expected: n,
                    found: row.len(),
                }
                .into());
            }
            for (v, &x) in row.iter().enumerate() {
                if x as usize >= variables[v].arity() {
                    return Err(ParseError::ValueOutOfRange {
                        line: r + 3,
                        variable: variables[v].name.clone(),
                        value: x.to_string(),
                        arity: variables[v].arity(),
                    }
                    .into());
                }
                columns[v].push(x);
            }
        }
        Ok(Dataset {
            variables,
            columns,
            rows: rows.len(),
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable_count(&self) -> usize {
        self.variables.len()
    }

    /// Number of instances N.
    pub fn row_count(&self) -> usize {
        self.rows
    }

    pub fn arity(&self, v: usize) -> usize {
        self.variables[v].arity()
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn value(&self, row: usize, v: usize) -> u32 {
        self.columns[v][row]
    }

    fn check_index(&self, v: usize) -> Result<()> {
        if v >= self.variables.len() {
            return Err(Error::InvalidQuery(format!(
                "variable index {v} out of range (n = {})",
                self.variables.len()
            )));
        }
        Ok(())
    }

    /// Exact joint counts of `child` against every observed instantiation of
    /// `parents`.
    pub fn counts(&self, child: usize, parents: &[usize]) -> Result<ContingencyTable> {
        self.check_index(child)?;
        for &p in parents {
            self.check_index(p)?;
        }
        if parents.contains(&child) {
            return Err(Error::InvalidQuery(format!(
                "child {child} listed among its own parents"
            )));
        }
        let mut parents = parents.to_vec();
        parents.sort_unstable();
        parents.dedup();
        Ok(self.tally(child, parents))
    }

    pub(crate) fn counts_set(&self, child: usize, parents: VarSet) -> ContingencyTable {
        debug_assert!(!parents.contains(child));
        self.tally(child, parents.to_vec())
    }

    fn tally(&self, child: usize, parents: Vec<usize>) -> ContingencyTable {
        let grouping = self.group_rows(&parents);
        let r = self.arity(child);
        let mut flat = vec![0u64; grouping.groups * r];
        for (row, &g) in grouping.ids.iter().enumerate() {
            flat[g as usize * r + self.columns[child][row] as usize] += 1;
        }
        let mut cells: Vec<Cell> = grouping
            .representatives
            .iter()
            .enumerate()
            .map(|(g, &row)| {
                let counts = flat[g * r..(g + 1) * r].to_vec();
                Cell {
                    instantiation: parents.iter().map(|&p| self.columns[p][row]).collect(),
                    total: counts.iter().sum(),
                    counts,
                }
            })
            .collect();
        cells.sort_unstable_by(|a, b| a.instantiation.cmp(&b.instantiation));
        ContingencyTable {
            child,
            child_arity: r,
            parent_arities: parents.iter().map(|&p| self.arity(p)).collect(),
            parents,
            cells,
        }
    }

    /// Assigns each row a dense id for its instantiation of `vars`.
    fn group_rows(&self, vars: &[usize]) -> Grouping {
        let mut ids = vec![0u32; self.rows];
        let mut groups = 1usize;
        let mut lookup: Vec<u32> = Vec::new();
        for &v in vars {
            let arity = self.arity(v);
            let mut next = 0u32;
            if groups * arity <= 4 * self.rows + 1024 {
                lookup.clear();
                lookup.resize(groups * arity, u32::MAX);
                for (id, &x) in ids.iter_mut().zip(&self.columns[v]) {
                    let slot = &mut lookup[*id as usize * arity + x as usize];
                    if *slot == u32::MAX {
                        *slot = next;
                        next += 1;
                    }
                    *id = *slot;
                }
            } else {
                let mut sparse = HashMap::new();
                for (id, &x) in ids.iter_mut().zip(&self.columns[v]) {
                    let key = *id as u64 * arity as u64 + x as u64;
                    *id = *sparse.entry(key).or_insert_with(|| {
                        next += 1;
                        next - 1
                    });
                }
            }
            groups = next as usize;
        }
        let mut representatives = vec![usize::MAX; groups];
        for (row, &id) in ids.iter().enumerate() {
            if representatives[id as usize] == usize::MAX {
                representatives[id as usize] = row;
            }
        }
        Grouping {
            ids,
            groups,
            representatives,
        }
    }

    fn group_sizes(&self, vars: &[usize]) -> Vec<u64> {
        let grouping = self.group_rows(vars);
        let mut sizes = vec![0u64; grouping.groups];
        for &id in &grouping.ids {
            sizes[id as usize] += 1;
        }
        sizes
    }

    /// Empirical joint entropy of `vars`, in nats.
    pub fn entropy(&self, vars: &[usize]) -> Result<f64> {
        for &v in vars {
            self.check_index(v)?;
        }
        let mut vars = vars.to_vec();
        vars.sort_unstable();
        vars.dedup();
        Ok(self.entropy_of(&vars))
    }

    fn entropy_of(&self, vars: &[usize]) -> f64 {
        if vars.is_empty() {
            return 0.0;
        }
        let n = self.rows as f64;
        self.group_sizes(vars)
            .into_iter()
            .filter(|&c| c > 0)
            .map(|c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    }

    /// H(x | y) = H(x ∪ y) − H(y), clamped at zero.
    pub fn conditional_entropy(&self, x: &[usize], y: &[usize]) -> Result<f64> {
        let joint: Vec<usize> = x.iter().chain(y).copied().collect();
        let h = self.entropy(&joint)? - self.entropy(y)?;
        Ok(h.max(0.0))
    }

    /// Writes the dataset in the native whitespace format.
    pub fn write_native<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let names: Vec<&str> = self.variables.iter().map(|v| v.name.as_str()).collect();
        writeln!(out, "{}", names.join(" "))?;
        let arities: Vec<String> = self.variables.iter().map(|v| v.arity().to_string()).collect();
        writeln!(out, "{}", arities.join(" "))?;
        let mut line = String::new();
        for row in 0..self.rows {
            line.clear();
            for (v, col) in self.columns.iter().enumerate() {
                if v > 0 {
                    line.push(' ');
                }
                line.push_str(&col[row].to_string());
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

struct Grouping {
    ids: Vec<u32>,
    groups: usize,
    representatives: Vec<usize>,
}

/// One observed parent instantiation and its child-state tallies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    /// Parent states in the table's parent order.
    pub instantiation: Vec<u32>,
    /// n_ij
    pub total: u64,
    /// n_ijk for k in 0..r_i
    pub counts: Vec<u64>,
}

/// Sparse contingency table for a (child, parent set) pair. Only
/// instantiations with a positive count are stored, sorted by instantiation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    child: usize,
    child_arity: usize,
    parents: Vec<usize>,
    parent_arities: Vec<usize>,
    cells: Vec<Cell>,
}

impl ContingencyTable {
    /// Builds a table from explicit cells, dropping empty ones.
    pub fn from_cells(
        child: usize,
        child_arity: usize,
        parents: Vec<usize>,
        parent_arities: Vec<usize>,
        cells: Vec<Vec<u64>>,
    ) -> Self {
        let cells = cells
            .into_iter()
            .enumerate()
            .filter(|(_, c)| c.iter().any(|&x| x > 0))
            .map(|(j, counts)| Cell {
                instantiation: vec![j as u32],
                total: counts.iter().sum(),
                counts,
            })
            .collect();
        ContingencyTable {
            child,
            child_arity,
            parents,
            parent_arities,
            cells,
        }
    }

    pub fn child(&self) -> usize {
        self.child
    }

    pub fn child_arity(&self) -> usize {
        self.child_arity
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn parent_arities(&self) -> &[usize] {
        &self.parent_arities
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// r_i^+: instantiations with a positive count.
    pub fn positive_count(&self) -> usize {
        self.cells.len()
    }

    /// r_Π: product of parent arities, `None` on overflow.
    pub fn instantiation_count(&self) -> Option<u64> {
        self.parent_arities
            .iter()
            .try_fold(1u64, |acc, &r| acc.checked_mul(r as u64))
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().map(|c| c.total).sum()
    }
}

/// Reads a dataset from `source` in the given format.
pub fn parse_dataset<R: BufRead>(source: R, format: DataFormat) -> Result<Dataset> {
    match format {
        DataFormat::Native => parse_native(source),
        DataFormat::Csv => parse_csv(source),
    }
}

fn parse_native<R: BufRead>(source: R) -> Result<Dataset> {
    let mut lines = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push((i + 1, line));
        }
    }
    let mut iter = lines.into_iter();
    let (_, header) = iter.next().ok_or_else(|| ParseError::MalformedHeader {
        line: 1,
        reason: "missing variable names".into(),
    })?;
    let names: Vec<String> = header.split_whitespace().map(str::to_owned).collect();
    let (arity_line, arities) = iter.next().ok_or_else(|| ParseError::MalformedHeader {
        line: 2,
        reason: "missing arity line".into(),
    })?;
    let arities: Vec<&str> = arities.split_whitespace().collect();
    if arities.len() != names.len() {
        return Err(ParseError::MalformedHeader {
            line: arity_line,
            reason: format!("{} names but {} arities", names.len(), arities.len()),
        }
        .into());
    }
    let mut variables = Vec::with_capacity(names.len());
    let mut seen = HashSet::new();
    for (name, tok) in names.into_iter().zip(arities) {
        if !seen.insert(name.clone()) {
            return Err(ParseError::MalformedHeader {
                line: 1,
                reason: format!("duplicate variable name '{name}'"),
            }
            .into());
        }
        let arity: usize = tok.parse().map_err(|_| ParseError::InvalidNumber {
            line: arity_line,
            token: tok.to_owned(),
        })?;
        if arity < 2 {
            return Err(ParseError::ArityTooSmall {
                line: arity_line,
                variable: name,
                arity,
            }
            .into());
        }
        variables.push(Variable {
            states: (0..arity).map(|s| s.to_string()).collect(),
            name,
        });
    }
    let n = variables.len();
    let mut rows = Vec::new();
    let mut last_line = arity_line;
    for (line_no, line) in iter {
        last_line = line_no;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != n {
            return Err(ParseError::RaggedRow {
                line: line_no,
                expected: n,
                found: fields.len(),
            }
            .into());
        }
        let mut row = Vec::with_capacity(n);
        for (v, tok) in fields.into_iter().enumerate() {
            let x: i64 = tok.parse().map_err(|_| ParseError::InvalidNumber {
                line: line_no,
                token: tok.to_owned(),
            })?;
            if x < 0 || x as u64 >= variables[v].arity() as u64 {
                return Err(ParseError::ValueOutOfRange {
                    line: line_no,
                    variable: variables[v].name.clone(),
                    value: tok.to_owned(),
                    arity: variables[v].arity(),
                }
                .into());
            }
            row.push(x as u32);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(ParseError::EmptyDataset { line: last_line + 1 }.into());
    }
    Dataset::new(variables, &rows)
}

fn parse_csv<R: BufRead>(source: R) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader.headers().map_err(|e| csv_error(e, 1))?.clone();
    let names: Vec<String> = header.iter().map(str::to_owned).collect();
    if names.is_empty() || names.iter().any(String::is_empty) {
        return Err(ParseError::MalformedHeader {
            line: 1,
            reason: "empty variable name".into(),
        }
        .into());
    }
    let n = names.len();
    let mut states: Vec<Vec<String>> = vec![Vec::new(); n];
    let mut rows = Vec::new();
    let mut last_line = 1;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, last_line + 1))?;
        let line = record.position().map_or(last_line + 1, |p| p.line() as usize);
        last_line = line;
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if record.len() != n {
            return Err(ParseError::RaggedRow {
                line,
                expected: n,
                found: record.len(),
            }
            .into());
        }
        let mut row = Vec::with_capacity(n);
        for (v, field) in record.iter().enumerate() {
            if field.is_empty() {
                return Err(ParseError::Invalid {
                    line,
                    reason: format!("missing value for '{}'", names[v]),
                }
                .into());
            }
            let idx = match states[v].iter().position(|s| s == field) {
                Some(i) => i,
                None => {
                    states[v].push(field.to_owned());
                    states[v].len() - 1
                }
            };
            row.push(idx as u32);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(ParseError::EmptyDataset { line: last_line + 1 }.into());
    }
    let variables = names
        .into_iter()
        .zip(states)
        .map(|(name, states)| Variable { name, states })
        .collect::<Vec<_>>();
    if let Some(v) = variables.iter().find(|v| v.arity() < 2) {
        return Err(ParseError::ArityTooSmall {
            line: 1,
            variable: v.name.clone(),
            arity: v.arity(),
        }
        .into());
    }
    Dataset::new(variables, &rows)
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e
        .position()
        .map_or(fallback_line, |p| p.line() as usize);
    if let csv::ErrorKind::Io(_) = e.kind() {
        return Error::Io(std::io::Error::other(e.to_string()));
    }
    ParseError::Invalid {
        line,
        reason: e.to_string(),
    }
    .into()
}
