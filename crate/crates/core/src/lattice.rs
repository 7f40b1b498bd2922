//! Backbone detection and slot induction.
//!
//! Backbone nodes are those visited by a strict majority of a cluster's
//! sentences; on a DAG they admit one order consistent with every sentence
//! path. Between consecutive backbone positions the lattice either varies
//! a lot (an argument: replaced by a slot) or splits into a few well
//! supported branches (synonyms: kept). The synonymy threshold decides
//! which, using path counts:
//!
//! * slot when no single next node out of the left position takes more than
//!   `s` of the sentences passing through both positions;
//! * otherwise keep the interior nodes reached by at least `s` of those
//!   sentences and drop the rest.
//!
//! Backbone nodes carrying a generic token become slots, and adjacent slots
//! are condensed into one.
//!
//! A backbone word can itself be one side of a synonym split (four
//! sentences say "injured", three say "wounded"). Such a node is grouped
//! with its sibling alternatives into a single position whose members are
//! all kept as synonym nodes.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::corpus::{is_generic_label, CorpusId};
use crate::error::{Error, Result};
use crate::msa::{Lattice, NodeId, END, END_LABEL, START, START_LABEL};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlottingParams<S> {
    /// Strict lower bound on the fraction of sentences visiting a backbone
    /// node.
    pub backbone_fraction: S,
    pub synonymy_threshold: S,
}

impl<S: Scalar> Default for SlottingParams<S> {
    fn default() -> Self {
        SlottingParams {
            backbone_fraction: S::from_ratio(1, 2),
            synonymy_threshold: S::from_ratio(3, 10),
        }
    }
}

impl<S: Scalar> SlottingParams<S> {
    pub fn validate(&self) -> std::result::Result<(), String> {
        let s = self.synonymy_threshold;
        if !(s > S::zero() && s < S::one()) {
            return Err("synonymy_threshold must lie strictly between 0 and 1".into());
        }
        if self.backbone_fraction < S::from_ratio(1, 2) || self.backbone_fraction >= S::one() {
            return Err("backbone_fraction must lie in [0.5, 1)".into());
        }
        Ok(())
    }
}

fn at_least<S: Scalar>(count: usize, fraction: S, total: usize) -> bool {
    S::from_count(count) >= fraction * S::from_count(total)
}

/// Nodes visited by more than `fraction` of the sentence paths, in
/// topological order. Sentinels always qualify on a non-empty lattice.
pub fn find_backbone<S: Scalar>(lat: &Lattice, fraction: S) -> Vec<NodeId> {
    let n = lat.path_count();
    if n == 0 {
        return Vec::new();
    }
    let bound = fraction * S::from_count(n);
    let order = lat.topological_order().expect("acyclic lattice");
    order
        .into_iter()
        .filter(|&v| S::from_count(lat.visit_count[v]) > bound)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Start,
    End,
    Backbone,
    Synonym,
    Slot(u32),
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Start => f.write_str("start"),
            NodeKind::End => f.write_str("end"),
            NodeKind::Backbone => f.write_str("backbone"),
            NodeKind::Synonym => f.write_str("synonym"),
            NodeKind::Slot(k) => write!(f, "slot{k}"),
        }
    }
}

impl std::str::FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "start" => Ok(NodeKind::Start),
            "end" => Ok(NodeKind::End),
            "backbone" => Ok(NodeKind::Backbone),
            "synonym" => Ok(NodeKind::Synonym),
            other => other
                .strip_prefix("slot")
                .and_then(|k| k.parse().ok())
                .map(NodeKind::Slot)
                .ok_or_else(|| format!("unknown node kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlottedNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub label: String,
    pub visits: usize,
    /// Backbone position a word node stands for; synonyms grouped at one
    /// backbone position share it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlottedLattice {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<CorpusId>,
    pub sentence_count: usize,
    pub nodes: Vec<SlottedNode>,
    pub edges: BTreeSet<(NodeId, NodeId)>,
    /// Original lattice nodes each slot replaced.
    pub slot_regions: BTreeMap<u32, BTreeSet<NodeId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TemplateItem {
    Word(String),
    Slot(u32),
}

/// One start-to-end path of a slotted lattice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub nodes: Vec<NodeId>,
    pub items: Vec<TemplateItem>,
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .items
            .iter()
            .map(|i| match i {
                TemplateItem::Word(w) => w.clone(),
                TemplateItem::Slot(k) => format!("SLOT{k}"),
            })
            .collect();
        f.write_str(&parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Templates {
    pub templates: Vec<Template>,
    pub truncated: bool,
}

impl SlottedLattice {
    pub fn with_source(mut self, cluster_id: usize, corpus: CorpusId) -> Self {
        self.cluster_id = Some(cluster_id);
        self.corpus = Some(corpus);
        self
    }

    pub fn slot_count(&self) -> usize {
        self.slot_regions.len()
    }

    /// Number of backbone word positions (grouped synonyms count once).
    pub fn position_count(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| n.position)
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn successors(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.edges.range((n, 0)..(n + 1, 0)).map(|&(_, to)| to)
    }

    pub fn topological_order(&self) -> Option<Vec<NodeId>> {
        let mut indeg = vec![0usize; self.nodes.len()];
        for &(_, to) in &self.edges {
            indeg[to] += 1;
        }
        let mut ready: BTreeSet<NodeId> = (0..self.nodes.len()).filter(|&n| indeg[n] == 0).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(n) = ready.pop_first() {
            order.push(n);
            for to in self.successors(n) {
                indeg[to] -= 1;
                if indeg[to] == 0 {
                    ready.insert(to);
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }

    fn template_for(&self, nodes: &[NodeId]) -> Template {
        let items = nodes[1..nodes.len() - 1]
            .iter()
            .map(|&n| match self.nodes[n].kind {
                NodeKind::Slot(k) => TemplateItem::Slot(k),
                _ => TemplateItem::Word(self.nodes[n].label.clone()),
            })
            .collect();
        Template {
            nodes: nodes.to_vec(),
            items,
        }
    }

    /// All start-to-end paths in lexicographic node-id order, at most `cap`.
    pub fn enumerate_templates(&self, cap: usize) -> Templates {
        let mut out = Vec::new();
        let mut truncated = false;
        let mut stack: Vec<(NodeId, usize)> = vec![(START, 0)];
        let mut path = vec![START];
        while let Some(&(node, next)) = stack.last() {
            if node == END {
                if out.len() == cap {
                    truncated = true;
                    break;
                }
                out.push(self.template_for(&path));
                stack.pop();
                path.pop();
                continue;
            }
            match self.successors(node).nth(next) {
                Some(child) => {
                    stack.last_mut().expect("non-empty").1 += 1;
                    stack.push((child, 0));
                    path.push(child);
                }
                None => {
                    stack.pop();
                    path.pop();
                }
            }
        }
        Templates {
            templates: out,
            truncated,
        }
    }

    /// Number of start-to-end paths, saturating.
    pub fn path_count(&self) -> u64 {
        let order = self.topological_order().expect("acyclic");
        let mut count = vec![0u64; self.nodes.len()];
        count[START] = 1;
        for n in order {
            let c = count[n];
            for to in self.successors(n) {
                count[to] = count[to].saturating_add(c);
            }
        }
        count[END]
    }

    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let order = self.topological_order().ok_or("slotted lattice has a cycle")?;
        let k = self.slot_count() as u32;
        let slot_ids: BTreeSet<u32> = self
            .nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Slot(s) => Some(s),
                _ => None,
            })
            .collect();
        if slot_ids != (1..=k).collect::<BTreeSet<_>>() {
            return Err("slot ids are not dense 1..K".into());
        }
        for &(a, b) in &self.edges {
            if matches!(self.nodes[a].kind, NodeKind::Slot(_)) && matches!(self.nodes[b].kind, NodeKind::Slot(_)) {
                return Err(format!("adjacent slots {a} -> {b}"));
            }
        }
        // Paths through a node, counted forwards and backwards.
        let mut fwd = vec![0u128; self.nodes.len()];
        let mut bwd = vec![0u128; self.nodes.len()];
        fwd[START] = 1;
        bwd[END] = 1;
        for &n in &order {
            for to in self.successors(n) {
                fwd[to] += fwd[n];
            }
        }
        for &n in order.iter().rev() {
            for to in self.successors(n) {
                bwd[n] += bwd[to];
            }
        }
        let total = fwd[END];
        for n in &self.nodes {
            let on_every_path = matches!(n.kind, NodeKind::Backbone | NodeKind::Slot(_));
            if on_every_path && fwd[n.id] * bwd[n.id] != total {
                return Err(format!("node {} ({}) is not on every path", n.id, n.label));
            }
        }
        Ok(())
    }

    /// Line-oriented text form extending the lattice format with node kinds
    /// and slot regions.
    ///
    /// ```text
    /// slotted <id> cluster=<n|-> corpus=<A|B|-> sentences=<n>
    /// node <id> <kind> <visits> <label> [pos=<k>]
    /// edge <from> <to>
    /// region <slot> <lattice-node> ...
    /// ```
    pub fn to_text(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        let mut out = format!(
            "slotted {} cluster={} corpus={} sentences={}\n",
            self.id,
            opt(self.cluster_id.map(|c| c.to_string())),
            opt(self.corpus.map(|c| c.to_string())),
            self.sentence_count
        );
        for n in &self.nodes {
            let _ = write!(out, "node {} {} {} {}", n.id, n.kind, n.visits, n.label);
            if let Some(p) = n.position {
                let _ = write!(out, " pos={p}");
            }
            out.push('\n');
        }
        for (a, b) in &self.edges {
            let _ = writeln!(out, "edge {a} {b}");
        }
        for (slot, region) in &self.slot_regions {
            let ids: Vec<String> = region.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(out, "region {slot} {}", ids.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::parse("slotted lattice", line, msg);
        let mut sl: Option<SlottedLattice> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let parts: Vec<&str> = raw.split_whitespace().collect();
            let Some(&tag) = parts.first() else { continue };
            let num = |s: Option<&&str>| -> Result<usize> {
                s.and_then(|v| v.parse().ok())
                    .ok_or_else(|| err(line, "expected an integer".into()))
            };
            if tag == "slotted" {
                let mut l = SlottedLattice {
                    id: parts.get(1).ok_or_else(|| err(line, "missing id".into()))?.to_string(),
                    cluster_id: None,
                    corpus: None,
                    sentence_count: 0,
                    nodes: Vec::new(),
                    edges: BTreeSet::new(),
                    slot_regions: BTreeMap::new(),
                };
                for kv in &parts[2..] {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| err(line, format!("bad header field `{kv}`")))?;
                    match (k, v) {
                        (_, "-") => {}
                        ("cluster", v) => l.cluster_id = Some(v.parse().map_err(|_| err(line, "bad cluster".into()))?),
                        ("corpus", v) => l.corpus = Some(v.parse().map_err(|e| err(line, e))?),
                        ("sentences", v) => {
                            l.sentence_count = v.parse().map_err(|_| err(line, "bad sentence count".into()))?
                        }
                        _ => return Err(err(line, format!("unknown header field `{k}`"))),
                    }
                }
                sl = Some(l);
                continue;
            }
            let l = sl.as_mut().ok_or_else(|| err(line, "missing header".into()))?;
            match tag {
                "node" => {
                    let id = num(parts.get(1))?;
                    if id != l.nodes.len() {
                        return Err(err(line, "node ids must be dense and ordered".into()));
                    }
                    let kind: NodeKind = parts
                        .get(2)
                        .ok_or_else(|| err(line, "missing kind".into()))?
                        .parse()
                        .map_err(|e| err(line, e))?;
                    let visits = num(parts.get(3))?;
                    let label = parts.get(4).ok_or_else(|| err(line, "missing label".into()))?;
                    let position = match parts.get(5) {
                        Some(p) => Some(
                            p.strip_prefix("pos=")
                                .and_then(|v| v.parse().ok())
                                .ok_or_else(|| err(line, format!("bad position `{p}`")))?,
                        ),
                        None => None,
                    };
                    l.nodes.push(SlottedNode {
                        id,
                        kind,
                        label: label.to_string(),
                        visits,
                        position,
                    });
                }
                "edge" => {
                    let a = num(parts.get(1))?;
                    let b = num(parts.get(2))?;
                    l.edges.insert((a, b));
                }
                "region" => {
                    let slot = num(parts.get(1))? as u32;
                    let ids = parts[2..]
                        .iter()
                        .map(|p| p.parse().map_err(|_| err(line, "bad node id".into())))
                        .collect::<Result<BTreeSet<NodeId>>>()?;
                    l.slot_regions.insert(slot, ids);
                }
                other => return Err(err(line, format!("unknown record `{other}`"))),
            }
        }
        sl.ok_or_else(|| err(1, "empty document".into()))
    }
}

/// What sits between two consecutive backbone positions.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Element {
    Backbone(NodeId),
    /// Backbone position shared by alternative synonym nodes.
    Alternates(Vec<NodeId>),
    Slot(BTreeSet<NodeId>),
    Synonyms { chains: Vec<Vec<NodeId>>, bypass: bool },
}

struct PathInfo<'a> {
    nodes: &'a [NodeId],
    index: HashMap<NodeId, usize>,
}

/// Groups a backbone word with sibling nodes that replace it on the other
/// sentences. Returns one member list per backbone position.
fn group_positions<S: Scalar>(
    lat: &Lattice,
    backbone: &[NodeId],
    paths: &[PathInfo<'_>],
    s: S,
) -> Vec<Vec<NodeId>> {
    let bidx: HashMap<NodeId, usize> = backbone.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut preds: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); lat.nodes.len()];
    for &(a, b) in &lat.edges {
        preds[b].insert(a);
    }
    let succs = |n: NodeId| lat.successors(n).collect::<BTreeSet<_>>();
    let order = lat.topological_order().expect("acyclic lattice");
    let mut taken: HashSet<NodeId> = backbone.iter().copied().collect();
    let mut positions: Vec<Vec<NodeId>> = backbone.iter().map(|&b| vec![b]).collect();

    for k in 1..backbone.len().saturating_sub(1) {
        let v = backbone[k];
        if is_generic_label(lat.label(v)) {
            continue;
        }
        let (u, w) = (backbone[k - 1], backbone[k + 1]);
        let through_neighbours = paths
            .iter()
            .filter(|p| p.index.contains_key(&u) && p.index.contains_key(&w))
            .count();
        let v_succ = succs(v);
        for &q in &order {
            if taken.contains(&q) || q == START || q == END || is_generic_label(lat.label(q)) {
                continue;
            }
            if !at_least(lat.visit_count[q], s, through_neighbours) {
                continue;
            }
            let sibling = !preds[q].is_disjoint(&preds[v]) || !succs(q).is_disjoint(&v_succ);
            if !sibling {
                continue;
            }
            let members = &positions[k];
            let consistent = paths.iter().filter(|p| p.index.contains_key(&q)).all(|p| {
                let qi = p.index[&q];
                if members.iter().any(|m| p.index.contains_key(m)) {
                    return false;
                }
                p.nodes.iter().enumerate().all(|(i, n)| match bidx.get(n) {
                    Some(&b) if i < qi => b < k,
                    Some(&b) if i > qi => b > k,
                    _ => true,
                })
            });
            if consistent {
                positions[k].push(q);
                taken.insert(q);
            }
        }
    }
    positions
}

/// Turns a lattice into a slotted lattice.
pub fn induce_slots<S: Scalar>(lat: &Lattice, p: &SlottingParams<S>) -> SlottedLattice {
    let s = p.synonymy_threshold;
    let paths: Vec<PathInfo<'_>> = lat
        .paths
        .values()
        .map(|nodes| PathInfo {
            nodes,
            index: nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect(),
        })
        .collect();
    let backbone = find_backbone(lat, p.backbone_fraction);
    let positions = if backbone.is_empty() {
        vec![vec![START], vec![END]]
    } else {
        group_positions(lat, &backbone, &paths, s)
    };
    let pos_of: HashMap<NodeId, usize> = positions
        .iter()
        .enumerate()
        .flat_map(|(k, ms)| ms.iter().map(move |&m| (m, k)))
        .collect();

    // Per path: (position, index in path), kept increasing in position.
    let projections: Vec<Vec<(usize, usize)>> = paths
        .iter()
        .map(|p| {
            let mut proj: Vec<(usize, usize)> = Vec::new();
            for (i, n) in p.nodes.iter().enumerate() {
                if let Some(&k) = pos_of.get(n) {
                    if proj.last().is_none_or(|&(last, _)| k > last) {
                        proj.push((k, i));
                    }
                }
            }
            proj
        })
        .collect();

    let mut elements: Vec<Element> = Vec::new();
    for k in 0..positions.len() - 1 {
        if k > 0 {
            let members = &positions[k];
            elements.push(match members.as_slice() {
                [single] if is_generic_label(lat.label(*single)) => Element::Slot(BTreeSet::from([*single])),
                [single] => Element::Backbone(*single),
                many => Element::Alternates(many.to_vec()),
            });
        }
        let interiors: Vec<&[NodeId]> = paths
            .iter()
            .zip(&projections)
            .filter_map(|(p, proj)| {
                proj.windows(2)
                    .find(|w| w[0].0 == k && w[1].0 == k + 1)
                    .map(|w| &p.nodes[w[0].1 + 1..w[1].1])
            })
            .collect();
        if let Some(el) = analyse_region(&interiors, s) {
            elements.push(el);
        }
    }
    let elements = condense(elements);
    assemble(lat, elements)
}

fn analyse_region<S: Scalar>(interiors: &[&[NodeId]], s: S) -> Option<Element> {
    let total = interiors.len();
    if interiors.iter().all(|i| i.is_empty()) {
        return None;
    }
    let mut next_counts: BTreeMap<Option<NodeId>, usize> = BTreeMap::new();
    for i in interiors {
        *next_counts.entry(i.first().copied()).or_default() += 1;
    }
    let max_next = next_counts.values().copied().max().unwrap_or(0);
    if S::from_count(max_next) <= s * S::from_count(total) {
        let region: BTreeSet<NodeId> = interiors.iter().flat_map(|i| i.iter().copied()).collect();
        return Some(Element::Slot(region));
    }
    let mut node_counts: BTreeMap<NodeId, usize> = BTreeMap::new();
    for i in interiors {
        for &n in i.iter() {
            *node_counts.entry(n).or_default() += 1;
        }
    }
    let kept: BTreeSet<NodeId> = node_counts
        .into_iter()
        .filter(|&(_, c)| at_least(c, s, total))
        .map(|(n, _)| n)
        .collect();
    let empty = interiors.iter().filter(|i| i.is_empty()).count();
    let bypass = at_least(empty, s, total);
    let chains: BTreeSet<Vec<NodeId>> = interiors
        .iter()
        .map(|i| i.iter().copied().filter(|n| kept.contains(n)).collect::<Vec<_>>())
        .filter(|c| !c.is_empty())
        .collect();
    if chains.is_empty() {
        return None;
    }
    Some(Element::Synonyms {
        chains: chains.into_iter().collect(),
        bypass,
    })
}

fn condense(elements: Vec<Element>) -> Vec<Element> {
    let mut out: Vec<Element> = Vec::with_capacity(elements.len());
    for el in elements {
        match (out.last_mut(), el) {
            (Some(Element::Slot(prev)), Element::Slot(region)) => prev.extend(region),
            (_, el) => out.push(el),
        }
    }
    // A bypass between two slots would make them adjacent.
    for i in 1..out.len().saturating_sub(1) {
        let flanked = matches!(out[i - 1], Element::Slot(_)) && matches!(out[i + 1], Element::Slot(_));
        if let Element::Synonyms { bypass, .. } = &mut out[i] {
            if flanked {
                *bypass = false;
            }
        }
    }
    out
}

fn assemble(lat: &Lattice, elements: Vec<Element>) -> SlottedLattice {
    let n_paths = lat.path_count();
    let mut sl = SlottedLattice {
        id: lat.id.clone(),
        cluster_id: None,
        corpus: None,
        sentence_count: n_paths,
        nodes: vec![
            SlottedNode {
                id: START,
                kind: NodeKind::Start,
                label: START_LABEL.into(),
                visits: n_paths,
                position: None,
            },
            SlottedNode {
                id: END,
                kind: NodeKind::End,
                label: END_LABEL.into(),
                visits: n_paths,
                position: None,
            },
        ],
        edges: BTreeSet::new(),
        slot_regions: BTreeMap::new(),
    };
    let add = |sl: &mut SlottedLattice, kind: NodeKind, label: String, visits: usize, position: Option<usize>| {
        let id = sl.nodes.len();
        sl.nodes.push(SlottedNode {
            id,
            kind,
            label,
            visits,
            position,
        });
        id
    };
    let mut frontier = vec![START];
    let mut next_slot = 1u32;
    let mut next_position = 0usize;
    for el in elements {
        let link = |sl: &mut SlottedLattice, from: &[NodeId], to: NodeId| {
            for &f in from {
                sl.edges.insert((f, to));
            }
        };
        match el {
            Element::Backbone(n) => {
                let id = add(&mut sl, NodeKind::Backbone, lat.label(n).into(), lat.visit_count[n], Some(next_position));
                next_position += 1;
                link(&mut sl, &frontier, id);
                frontier = vec![id];
            }
            Element::Alternates(members) => {
                let mut ids = Vec::new();
                for m in members {
                    let id = add(&mut sl, NodeKind::Synonym, lat.label(m).into(), lat.visit_count[m], Some(next_position));
                    link(&mut sl, &frontier, id);
                    ids.push(id);
                }
                next_position += 1;
                frontier = ids;
            }
            Element::Slot(region) => {
                let visits = lat
                    .paths
                    .values()
                    .filter(|p| p.iter().any(|n| region.contains(n)))
                    .count();
                let id = add(&mut sl, NodeKind::Slot(next_slot), format!("SLOT{next_slot}"), visits, None);
                sl.slot_regions.insert(next_slot, region);
                next_slot += 1;
                link(&mut sl, &frontier, id);
                frontier = vec![id];
            }
            Element::Synonyms { chains, bypass } => {
                let mut ids: BTreeMap<NodeId, NodeId> = BTreeMap::new();
                let mut new_frontier: BTreeSet<NodeId> = if bypass {
                    frontier.iter().copied().collect()
                } else {
                    BTreeSet::new()
                };
                for chain in &chains {
                    let mut prev: Vec<NodeId> = frontier.clone();
                    for &orig in chain {
                        let id = *ids.entry(orig).or_insert_with(|| {
                            add(&mut sl, NodeKind::Synonym, lat.label(orig).into(), lat.visit_count[orig], None)
                        });
                        link(&mut sl, &prev, id);
                        prev = vec![id];
                    }
                    new_frontier.extend(prev);
                }
                frontier = new_frontier.into_iter().collect();
            }
        }
    }
    for f in frontier {
        sl.edges.insert((f, END));
    }
    sl
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msa::ScoringParams;
    use num_rational::Rational64;

    fn lattice(sentences: &[&str]) -> Lattice {
        let seqs: Vec<(String, Vec<String>)> = sentences
            .iter()
            .enumerate()
            .map(|(i, s)| (format!("s{i:02}"), s.split_whitespace().map(str::to_string).collect()))
            .collect();
        Lattice::from_sequences("L", &seqs, &ScoringParams::<f64>::default()).unwrap()
    }

    fn labels(sl: &SlottedLattice, kind: fn(&NodeKind) -> bool) -> Vec<&str> {
        sl.nodes.iter().filter(|n| kind(&n.kind)).map(|n| n.label.as_str()).collect()
    }

    #[test]
    fn identical_sentences_are_all_backbone() {
        let lat = lattice(&["a b c"; 5]);
        assert_eq!(find_backbone(&lat, 0.5).len(), lat.nodes.len());
    }

    #[test]
    fn three_way_branch_backbone() {
        let lat = lattice(&["x a y", "x b y", "x c y"]);
        let bb: Vec<&str> = find_backbone(&lat, Rational64::new(1, 2))
            .into_iter()
            .map(|n| lat.label(n))
            .collect();
        assert_eq!(bb, ["<s>", "x", "y", "</s>"]);
    }

    #[test]
    fn generic_backbone_becomes_slot() {
        let lat = lattice(&["police arrested NAME today"; 4]);
        let sl = induce_slots(&lat, &SlottingParams::<f64>::default());
        assert_eq!(sl.slot_count(), 1);
        assert_eq!(
            sl.enumerate_templates(10).templates[0].to_string(),
            "police arrested SLOT1 today"
        );
        sl.check_invariants().unwrap();
    }

    #[test]
    fn slot_followed_by_number_is_condensed() {
        let mut sentences = Vec::new();
        let places = ["gaza", "jenin", "hebron", "nablus", "tulkarm", "ramallah", "rafah", "jericho", "bethlehem", "qalqilya"];
        for p in places {
            sentences.push(format!("troops entered {p} NUM times"));
        }
        let refs: Vec<&str> = sentences.iter().map(String::as_str).collect();
        let lat = lattice(&refs);
        let sl = induce_slots(&lat, &SlottingParams::<f64>::default());
        let t = sl.enumerate_templates(10);
        assert_eq!(t.templates.len(), 1);
        assert_eq!(t.templates[0].to_string(), "troops entered SLOT1 times");
        assert_eq!(sl.slot_regions[&1].len(), 11);
        sl.check_invariants().unwrap();
    }

    #[test]
    fn template_counting() {
        let lat = lattice(&[
            "x injured y and killed z",
            "x wounded y and killed z",
            "x injured y and shot z",
            "x wounded y and shot z",
        ]);
        let sl = induce_slots(&lat, &SlottingParams::<f64>::default());
        assert_eq!(sl.enumerate_templates(100).templates.len(), 4);
        assert_eq!(sl.path_count(), 4);
        let capped = sl.enumerate_templates(3);
        assert_eq!(capped.templates.len(), 3);
        assert!(capped.truncated);
        assert_eq!(labels(&sl, |k| *k == NodeKind::Synonym).len(), 4);
    }

    #[test]
    fn idiosyncratic_branches_are_pruned() {
        let lat = lattice(&[
            "they were wounded by fire",
            "they were wounded by fire",
            "they were wounded by fire",
            "they were hurt by fire",
            "they were hurt by fire",
            "they were hurt by fire",
            "they were maimed by fire",
            "they were wounded by fire",
            "they were hurt by fire",
            "they were hurt by fire",
        ]);
        let sl = induce_slots(&lat, &SlottingParams::<f64>::default());
        assert_eq!(labels(&sl, |k| *k == NodeKind::Synonym), ["wounded", "hurt"]);
        sl.check_invariants().unwrap();
    }

    #[test]
    fn slotted_text_round_trips() {
        let lat = lattice(&["x a y", "x b y", "x c y", "x d y"]);
        let sl = induce_slots(&lat, &SlottingParams::<f64>::default()).with_source(3, CorpusId::B);
        let text = sl.to_text();
        assert_eq!(SlottedLattice::from_text(&text).unwrap(), sl);
        assert!(text.starts_with("slotted L cluster=3 corpus=B sentences=4\n"));
    }
}
