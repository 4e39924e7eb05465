//! Markov equivalence classes and model-averaged arc statistics.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use crate::dag::Dag;
use crate::solver::CredibleSet;

/// Skeleton plus v-structures; two DAGs are Markov equivalent iff their
/// keys are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MecKey {
    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub skeleton: Vec<(usize, usize)>,
    /// `(a, c, b)` for `a → c ← b` with `a < b` and `a`, `b` non-adjacent, sorted.
    pub vstructures: Vec<(usize, usize, usize)>,
}

pub fn mec_key(g: &Dag) -> MecKey {
    let mut skeleton: Vec<(usize, usize)> = g.edges().map(|(u, v)| (u.min(v), u.max(v))).collect();
    skeleton.sort_unstable();
    skeleton.dedup();
    let adjacent: HashSet<(usize, usize)> = skeleton.iter().copied().collect();
    let mut vstructures = Vec::new();
    for c in 0..g.variable_count() {
        let ps = g.parents_of(c).to_vec();
        for (i, &a) in ps.iter().enumerate() {
            for &b in &ps[i + 1..] {
                if !adjacent.contains(&(a.min(b), a.max(b))) {
                    vstructures.push((a.min(b), c, a.max(b)));
                }
            }
        }
    }
    vstructures.sort_unstable();
    MecKey {
        skeleton,
        vstructures,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MecClass {
    pub key: MecKey,
    /// Indices into the credible set, in its (score, key) order.
    pub members: Vec<usize>,
    pub best_score: f64,
}

impl MecClass {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Index of the best-ranked member.
    pub fn representative(&self) -> usize {
        self.members[0]
    }
}

/// Presence statistics for the directed arc `from → to`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcStat {
    pub from: usize,
    pub to: usize,
    pub presence_count: usize,
    pub weighted_probability: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MecPartition {
    /// Sorted by best member score, then key.
    pub classes: Vec<MecClass>,
    /// One entry per ordered pair of distinct variables, row-major.
    pub arcs: Vec<ArcStat>,
}

/// Groups a credible set by equivalence class and averages arcs with
/// weights `exp(-(score - OPT))`.
pub fn partition(set: &CredibleSet) -> MecPartition {
    let mut by_key: HashMap<MecKey, usize> = HashMap::new();
    let mut classes: Vec<MecClass> = Vec::new();
    for (i, g) in set.networks.iter().enumerate() {
        let key = mec_key(g);
        match by_key.get(&key) {
            Some(&c) => {
                let class = &mut classes[c];
                class.members.push(i);
                class.best_score = class.best_score.min(g.score());
            }
            None => {
                by_key.insert(key.clone(), classes.len());
                classes.push(MecClass {
                    key,
                    members: vec![i],
                    best_score: g.score(),
                });
            }
        }
    }
    classes.sort_by(|a, b| a.best_score.total_cmp(&b.best_score).then_with(|| a.key.cmp(&b.key)));

    let n = set.networks.first().map_or(0, Dag::variable_count);
    let mut counts = vec![0usize; n * n];
    let mut mass = vec![0.0f64; n * n];
    let mut total = 0.0;
    for g in &set.networks {
        let w = (-(g.score() - set.opt_score)).exp();
        total += w;
        for (u, v) in g.edges() {
            counts[u * n + v] += 1;
            mass[u * n + v] += w;
        }
    }
    let mut arcs = Vec::with_capacity(n * n.saturating_sub(1));
    for u in 0..n {
        for v in 0..n {
            if u != v {
                arcs.push(ArcStat {
                    from: u,
                    to: v,
                    presence_count: counts[u * n + v],
                    weighted_probability: if total > 0.0 { mass[u * n + v] / total } else { 0.0 },
                });
            }
        }
    }
    MecPartition { classes, arcs }
}

impl MecPartition {
    /// `mec_id,size,best_score,representative` with 1-based ids.
    pub fn write_classes<W: Write>(
        &self,
        set: &CredibleSet,
        names: &[String],
        out: W,
    ) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["mec_id", "size", "best_score", "representative"])?;
        for (i, c) in self.classes.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                c.size().to_string(),
                c.best_score.to_string(),
                set.networks[c.representative()].format_named(names),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `from,to,presence_count,weighted_probability` for every ordered pair.
    pub fn write_arcs<W: Write>(&self, names: &[String], out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["from", "to", "presence_count", "weighted_probability"])?;
        for a in &self.arcs {
            w.write_record([
                names[a.from].clone(),
                names[a.to].clone(),
                a.presence_count.to_string(),
                a.weighted_probability.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
