//! Pairwise alignment and progressive multiple-sequence alignment into word
//! lattices.
//!
//! [`align_pair`] is a global Needleman-Wunsch alignment. [`Lattice`] grows
//! one sentence at a time: each new sentence is aligned against the whole
//! DAG ([`align_to_lattice`]), reusing nodes it matches and adding fresh
//! branch nodes for the words it does not.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cluster::{Cluster, SimilarityParams};
use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type NodeId = usize;

pub const START: NodeId = 0;
pub const END: NodeId = 1;
pub const START_LABEL: &str = "<s>";
pub const END_LABEL: &str = "</s>";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringParams<S> {
    pub match_score: S,
    pub gap: S,
    pub mismatch: S,
}

impl<S: Scalar> Default for ScoringParams<S> {
    fn default() -> Self {
        ScoringParams {
            match_score: S::one(),
            gap: S::from_ratio(-1, 100),
            mismatch: S::from_ratio(-1, 2),
        }
    }
}

impl<S: Scalar> ScoringParams<S> {
    /// Warnings for orderings other than match > gap > mismatch.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !(self.match_score > self.gap && self.gap > self.mismatch) {
            w.push(format!(
                "scoring constants should satisfy match > gap > mismatch (got {}, {}, {})",
                self.match_score, self.gap, self.mismatch
            ));
        }
        w
    }

    fn column<T: PartialEq>(&self, a: &T, b: &T) -> S {
        if a == b {
            self.match_score
        } else {
            self.mismatch
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column<T> {
    pub left: Option<T>,
    pub right: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment<T, S> {
    pub columns: Vec<Column<T>>,
    pub score: S,
}

impl<T: Clone, S> Alignment<T, S> {
    pub fn left_sequence(&self) -> Vec<T> {
        self.columns.iter().filter_map(|c| c.left.clone()).collect()
    }

    pub fn right_sequence(&self) -> Vec<T> {
        self.columns.iter().filter_map(|c| c.right.clone()).collect()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Move {
    Diag,
    /// Consume from the left sequence, gap on the right.
    Up,
    /// Consume from the right sequence, gap on the left.
    Left,
}

/// Global alignment maximizing the summed column score.
///
/// Ties prefer the diagonal, then a gap in the right sequence, then a gap in
/// the left sequence.
pub fn align_pair<T: PartialEq + Clone, S: Scalar>(
    left: &[T],
    right: &[T],
    p: &ScoringParams<S>,
) -> Result<Alignment<T, S>> {
    if left.is_empty() || right.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (n, m) = (left.len(), right.len());
    let w = m + 1;
    let mut score = vec![S::zero(); (n + 1) * w];
    let mut moves = vec![Move::Diag; (n + 1) * w];
    for i in 1..=n {
        score[i * w] = score[(i - 1) * w] + p.gap;
        moves[i * w] = Move::Up;
    }
    for j in 1..=m {
        score[j] = score[j - 1] + p.gap;
        moves[j] = Move::Left;
    }
    for i in 1..=n {
        for j in 1..=m {
            let mut best = score[(i - 1) * w + j - 1] + p.column(&left[i - 1], &right[j - 1]);
            let mut mv = Move::Diag;
            let up = score[(i - 1) * w + j] + p.gap;
            if up > best {
                best = up;
                mv = Move::Up;
            }
            let lf = score[i * w + j - 1] + p.gap;
            if lf > best {
                best = lf;
                mv = Move::Left;
            }
            score[i * w + j] = best;
            moves[i * w + j] = mv;
        }
    }
    let mut columns = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        match moves[i * w + j] {
            Move::Diag => {
                columns.push(Column {
                    left: Some(left[i - 1].clone()),
                    right: Some(right[j - 1].clone()),
                });
                i -= 1;
                j -= 1;
            }
            Move::Up => {
                columns.push(Column {
                    left: Some(left[i - 1].clone()),
                    right: None,
                });
                i -= 1;
            }
            Move::Left => {
                columns.push(Column {
                    left: None,
                    right: Some(right[j - 1].clone()),
                });
                j -= 1;
            }
        }
    }
    columns.reverse();
    Ok(Alignment {
        columns,
        score: score[n * w + m],
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeNode {
    pub id: NodeId,
    pub label: String,
}

/// Word lattice built by progressive alignment of a cluster.
///
/// Node 0 and node 1 are the start and end sentinels. Every stored path
/// starts at [`START`] and ends at [`END`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    pub id: String,
    pub nodes: Vec<LatticeNode>,
    pub edges: BTreeSet<(NodeId, NodeId)>,
    pub paths: BTreeMap<String, Vec<NodeId>>,
    pub visit_count: Vec<usize>,
}

/// Where one word of an aligned sentence landed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// Reuses an existing node with the same label.
    Matched(NodeId),
    /// Needs a fresh branch node.
    New,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<S> {
    pub placements: Vec<Placement>,
    pub score: S,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Step {
    Origin,
    /// Word consumed against this node (match or mismatch).
    Diag(NodeId),
    /// Node passed over without consuming a word.
    Skip(NodeId),
    /// Word inserted after the same node.
    Insert,
}

impl Lattice {
    pub fn new(id: impl Into<String>) -> Self {
        Lattice {
            id: id.into(),
            nodes: vec![
                LatticeNode {
                    id: START,
                    label: START_LABEL.into(),
                },
                LatticeNode {
                    id: END,
                    label: END_LABEL.into(),
                },
            ],
            edges: BTreeSet::new(),
            paths: BTreeMap::new(),
            visit_count: vec![0, 0],
        }
    }

    pub fn label(&self, n: NodeId) -> &str {
        &self.nodes[n].label
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    pub fn successors(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.edges.range((n, 0)..(n + 1, 0)).map(|&(_, to)| to)
    }

    fn predecessors_table(&self) -> Vec<Vec<NodeId>> {
        let mut preds = vec![Vec::new(); self.nodes.len()];
        for &(from, to) in &self.edges {
            preds[to].push(from);
        }
        preds
    }

    /// Kahn's algorithm, smallest ready id first. `None` on a cycle.
    pub fn topological_order(&self) -> Option<Vec<NodeId>> {
        let mut indeg = vec![0usize; self.nodes.len()];
        for &(_, to) in &self.edges {
            indeg[to] += 1;
        }
        let mut ready: BinaryHeap<Reverse<NodeId>> = (0..self.nodes.len())
            .filter(|&n| indeg[n] == 0)
            .map(Reverse)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(Reverse(n)) = ready.pop() {
            order.push(n);
            for to in self.successors(n) {
                indeg[to] -= 1;
                if indeg[to] == 0 {
                    ready.push(Reverse(to));
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Labels along a sentence path, sentinels excluded.
    pub fn path_labels(&self, sentence_id: &str) -> Option<Vec<&str>> {
        self.paths.get(sentence_id).map(|p| {
            p[1..p.len() - 1]
                .iter()
                .map(|&n| self.label(n))
                .collect()
        })
    }

    fn add_node(&mut self, label: &str) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(LatticeNode {
            id,
            label: label.to_string(),
        });
        self.visit_count.push(0);
        id
    }

    /// Records a sentence along an embedding computed by
    /// [`align_to_lattice`], creating the nodes it needs.
    pub fn add_path(&mut self, sentence_id: &str, tokens: &[String], embedding: &Embedding<impl Scalar>) {
        debug_assert_eq!(tokens.len(), embedding.placements.len());
        let mut path = Vec::with_capacity(tokens.len() + 2);
        path.push(START);
        for (tok, placement) in tokens.iter().zip(&embedding.placements) {
            let node = match *placement {
                Placement::Matched(n) => n,
                Placement::New => self.add_node(tok),
            };
            path.push(node);
        }
        path.push(END);
        for w in path.windows(2) {
            self.edges.insert((w[0], w[1]));
        }
        for &n in &path {
            self.visit_count[n] += 1;
        }
        self.paths.insert(sentence_id.to_string(), path);
    }

    /// Aligns and records one more sentence; returns the alignment score.
    pub fn merge<S: Scalar>(&mut self, sentence_id: &str, tokens: &[String], p: &ScoringParams<S>) -> Result<S> {
        let embedding = align_to_lattice(self, tokens, p)?;
        self.add_path(sentence_id, tokens, &embedding);
        Ok(embedding.score)
    }

    /// Lattice built by merging sequences in the given order.
    pub fn from_sequences<S: Scalar>(
        id: impl Into<String>,
        sequences: &[(String, Vec<String>)],
        p: &ScoringParams<S>,
    ) -> Result<Self> {
        let mut lat = Lattice::new(id);
        for (sid, tokens) in sequences {
            lat.merge(sid, tokens, p)?;
        }
        Ok(lat)
    }

    /// Checks the structural invariants; returns a description of the first
    /// violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if !self.is_acyclic() {
            return Err("lattice has a cycle".into());
        }
        let mut counts = vec![0usize; self.nodes.len()];
        let mut used = BTreeSet::new();
        for (sid, path) in &self.paths {
            if path.first() != Some(&START) || path.last() != Some(&END) {
                return Err(format!("path {sid} does not run start to end"));
            }
            for w in path.windows(2) {
                if !self.edges.contains(&(w[0], w[1])) {
                    return Err(format!("path {sid} uses missing edge {:?}", (w[0], w[1])));
                }
                used.insert((w[0], w[1]));
            }
            let distinct: BTreeSet<_> = path.iter().collect();
            if distinct.len() != path.len() {
                return Err(format!("path {sid} repeats a node"));
            }
            for &n in path {
                counts[n] += 1;
            }
        }
        if counts != self.visit_count {
            return Err("visit counts disagree with paths".into());
        }
        if used.len() != self.edges.len() {
            return Err("an edge lies on no path".into());
        }
        Ok(())
    }

    /// Stable line-oriented text form.
    ///
    /// ```text
    /// lattice <id>
    /// node <id> <visit_count> <label>
    /// edge <from> <to>
    /// path <sentence-id> <node> <node> ...
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = format!("lattice {}\n", self.id);
        for n in &self.nodes {
            let _ = writeln!(out, "node {} {} {}", n.id, self.visit_count[n.id], n.label);
        }
        for (a, b) in &self.edges {
            let _ = writeln!(out, "edge {a} {b}");
        }
        for (sid, path) in &self.paths {
            let nodes: Vec<String> = path.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(out, "path {} {}", sid, nodes.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, msg: &str| Error::parse("lattice", line, msg);
        let mut lat: Option<Lattice> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let mut parts = raw.split_whitespace();
            let Some(tag) = parts.next() else { continue };
            let num = |s: Option<&str>| -> Result<usize> {
                s.and_then(|v| v.parse().ok())
                    .ok_or_else(|| err(line, "expected an integer"))
            };
            match tag {
                "lattice" => {
                    let id = parts.next().ok_or_else(|| err(line, "missing lattice id"))?;
                    let mut l = Lattice::new(id);
                    l.nodes.clear();
                    l.visit_count.clear();
                    lat = Some(l);
                }
                _ => {
                    let l = lat.as_mut().ok_or_else(|| err(line, "missing lattice header"))?;
                    match tag {
                        "node" => {
                            let id = num(parts.next())?;
                            let visits = num(parts.next())?;
                            let label = parts.next().ok_or_else(|| err(line, "missing label"))?;
                            if id != l.nodes.len() {
                                return Err(err(line, "node ids must be dense and ordered"));
                            }
                            l.nodes.push(LatticeNode {
                                id,
                                label: label.to_string(),
                            });
                            l.visit_count.push(visits);
                        }
                        "edge" => {
                            let a = num(parts.next())?;
                            let b = num(parts.next())?;
                            l.edges.insert((a, b));
                        }
                        "path" => {
                            let sid = parts.next().ok_or_else(|| err(line, "missing sentence id"))?;
                            let nodes = parts
                                .map(|p| p.parse().map_err(|_| err(line, "bad node id")))
                                .collect::<Result<Vec<NodeId>>>()?;
                            l.paths.insert(sid.to_string(), nodes);
                        }
                        _ => return Err(err(line, "unknown record")),
                    }
                }
            }
        }
        let lat = lat.ok_or_else(|| err(1, "empty lattice document"))?;
        if lat.nodes.len() < 2 {
            return Err(err(1, "lattice needs start and end nodes"));
        }
        Ok(lat)
    }
}

/// Best embedding of `tokens` into the lattice.
///
/// Dynamic program over nodes in topological order. Each word either
/// consumes a node (match, or mismatch which yields a new parallel node),
/// or is inserted as a new node (gap); lattice nodes along the chosen route
/// that receive no word are skipped at gap cost. Ties prefer consuming a
/// node, then skipping, then inserting, and the smallest predecessor id.
pub fn align_to_lattice<S: Scalar>(lat: &Lattice, tokens: &[String], p: &ScoringParams<S>) -> Result<Embedding<S>> {
    if tokens.is_empty() {
        return Err(Error::EmptyInput);
    }
    if lat.paths.is_empty() {
        return Ok(Embedding {
            placements: vec![Placement::New; tokens.len()],
            score: tokens.iter().fold(S::zero(), |acc, _| acc + p.gap),
        });
    }
    let order = lat
        .topological_order()
        .expect("lattice invariants guarantee acyclicity");
    let preds = lat.predecessors_table();
    let m = tokens.len();
    let w = m + 1;
    let n_nodes = lat.nodes.len();
    let mut score: Vec<Option<S>> = vec![None; n_nodes * w];
    let mut back: Vec<(Step, NodeId)> = vec![(Step::Origin, START); n_nodes * w];

    let relax = |score: &mut Vec<Option<S>>, back: &mut Vec<(Step, NodeId)>, idx: usize, cand: S, step: (Step, NodeId)| {
        if score[idx].is_none_or(|cur| cand > cur) {
            score[idx] = Some(cand);
            back[idx] = step;
        }
    };

    for &v in &order {
        if v == START {
            score[0] = Some(S::zero());
            for j in 1..=m {
                score[j] = Some(score[j - 1].unwrap() + p.gap);
                back[j] = (Step::Insert, START);
            }
            continue;
        }
        let mut ps = preds[v].clone();
        ps.sort_unstable();
        for j in 0..=m {
            let idx = v * w + j;
            if v == END {
                if j == m {
                    for &u in &ps {
                        if let Some(s) = score[u * w + m] {
                            relax(&mut score, &mut back, idx, s, (Step::Skip(v), u));
                        }
                    }
                }
                continue;
            }
            if j >= 1 {
                for &u in &ps {
                    if let Some(s) = score[u * w + j - 1] {
                        let cand = s + p.column(&tokens[j - 1].as_str(), &lat.label(v));
                        relax(&mut score, &mut back, idx, cand, (Step::Diag(v), u));
                    }
                }
            }
            for &u in &ps {
                if let Some(s) = score[u * w + j] {
                    relax(&mut score, &mut back, idx, s + p.gap, (Step::Skip(v), u));
                }
            }
            if j >= 1 {
                if let Some(s) = score[v * w + j - 1] {
                    relax(&mut score, &mut back, idx, s + p.gap, (Step::Insert, v));
                }
            }
        }
    }

    let total = score[END * w + m].expect("end sentinel reachable");
    let mut placements = vec![Placement::New; m];
    let (mut v, mut j) = (END, m);
    while !(v == START && j == 0) {
        let (step, from) = back[v * w + j];
        match step {
            Step::Diag(node) => {
                if lat.label(node) == tokens[j - 1] {
                    placements[j - 1] = Placement::Matched(node);
                }
                v = from;
                j -= 1;
            }
            Step::Skip(_) => v = from,
            Step::Insert => j -= 1,
            Step::Origin => unreachable!("origin only at start"),
        }
    }
    Ok(Embedding {
        placements,
        score: total,
    })
}

/// Merge order: decreasing mean similarity to the other members, ties by
/// sentence id.
pub fn merge_order<'a, S: Scalar>(members: &[&'a Sentence], sim: &SimilarityParams<S>) -> Vec<&'a Sentence> {
    let keys: Vec<Vec<String>> = members.iter().map(|s| s.keys()).collect();
    let n = members.len();
    let matrix = crate::cluster::similarity_matrix::<S>(&keys, &sim.orders);
    let mut scored: Vec<(S, &Sentence)> = (0..n)
        .map(|i| {
            let total: S = (0..n).filter(|&j| j != i).map(|j| matrix[i * n + j]).sum();
            let mean = if n > 1 { total / S::from_count(n - 1) } else { S::zero() };
            (mean, members[i])
        })
        .collect();
    scored.sort_by(|(sa, a), (sb, b)| {
        sb.partial_cmp(sa)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.id.cmp(&b.id))
    });
    scored.into_iter().map(|(_, s)| s).collect()
}

/// Builds the lattice of a cluster by progressive alignment.
///
/// `lookup` resolves member ids to masked sentences.
pub fn build_lattice<'a, S: Scalar>(
    id: impl Into<String>,
    cluster: &Cluster,
    lookup: impl Fn(&str) -> Option<&'a Sentence>,
    scoring: &ScoringParams<S>,
    sim: &SimilarityParams<S>,
) -> Result<Lattice> {
    if cluster.len() < 2 {
        return Err(Error::ClusterTooSmall {
            cluster: cluster.id,
            size: cluster.len(),
        });
    }
    let members: Vec<&Sentence> = cluster
        .members
        .iter()
        .map(|m| lookup(m).ok_or_else(|| Error::Config(format!("unknown sentence {m}"))))
        .collect::<Result<_>>()?;
    let mut lat = Lattice::new(id);
    for s in merge_order(&members, sim) {
        lat.merge(&s.id, &s.keys(), scoring)?;
    }
    Ok(lat)
}
