//! Paraphrasing new sentences through paired slotted lattices.
//!
//! A sentence is aligned to a slotted lattice with a small dynamic program:
//! word nodes either match the next token or are skipped, a slot absorbs a
//! run of tokens (or nothing, leaving it unbound), and tokens that fit
//! nowhere are inserted at a per-token penalty after any node. The bound
//! slot values are then carried through the pair's slot map and written
//! into every path of the partner lattice.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{is_generic_label, mask_with, render_surfaces, CorpusId, MaskOptions, Sentence};
use crate::error::{Error, Result};
use crate::lattice::{NodeKind, SlottedLattice, Template, TemplateItem};
use crate::matching::{filler_tokens, LatticePair};
use crate::model::TrainedModel;
use crate::msa::{NodeId, END, START};
use crate::scalar::Scalar;

/// Upper bound on target paths considered per rewrite.
pub const TEMPLATE_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationParams<S> {
    pub insert_score: S,
    pub node_match_score: S,
    /// Fraction of backbone positions the sentence must match.
    pub accept_threshold: S,
    pub max_outputs: usize,
}

impl<S: Scalar> Default for GenerationParams<S> {
    fn default() -> Self {
        GenerationParams {
            insert_score: S::from_ratio(-1, 10),
            node_match_score: S::one(),
            accept_threshold: S::from_ratio(4, 5),
            max_outputs: 20,
        }
    }
}

impl<S: Scalar> GenerationParams<S> {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.insert_score < S::zero() && S::zero() < self.node_match_score) {
            return Err("insert_score must be negative and node_match_score positive".into());
        }
        if !(self.accept_threshold > S::zero() && self.accept_threshold <= S::one()) {
            return Err("accept_threshold must lie in (0, 1]".into());
        }
        if self.max_outputs == 0 {
            return Err("max_outputs must be at least 1".into());
        }
        Ok(())
    }
}

/// Slot values taken from an input sentence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotBinding {
    /// Original-surface words per slot.
    pub values: BTreeMap<u32, Vec<String>>,
    /// Half-open token ranges of the masked sentence.
    pub spans: BTreeMap<u32, (usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeMatch<S> {
    pub lattice_id: String,
    pub score: S,
    pub matched_positions: usize,
    pub position_count: usize,
    pub matched_fraction: S,
    pub binding: SlotBinding,
    /// Slotted-lattice nodes on the best alignment, start to end.
    pub path: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Insert,
    Match,
    Skip,
    Absorb(usize),
    Finish,
}

#[derive(Debug, Clone, Copy)]
struct Cell<S> {
    score: S,
    from: (NodeId, usize),
    step: Step,
}

fn relax<S: Scalar>(table: &mut [Vec<Option<Cell<S>>>], to: (NodeId, usize), cell: Cell<S>) {
    let slot = &mut table[to.0][to.1];
    if slot.as_ref().is_none_or(|c| cell.score > c.score) {
        *slot = Some(cell);
    }
}

/// Best alignment of a masked sentence to one slotted lattice.
pub fn align_sentence<S: Scalar>(s: &Sentence, sl: &SlottedLattice, p: &GenerationParams<S>) -> Option<LatticeMatch<S>> {
    let keys = s.keys();
    let m = keys.len();
    let order = sl.topological_order()?;
    let mut table: Vec<Vec<Option<Cell<S>>>> = vec![vec![None; m + 1]; sl.nodes.len()];
    table[START][0] = Some(Cell {
        score: S::zero(),
        from: (START, 0),
        step: Step::Skip,
    });
    for &u in &order {
        if u == END {
            continue;
        }
        for j in 0..m {
            if let Some(c) = table[u][j] {
                let cell = Cell {
                    score: c.score + p.insert_score,
                    from: (u, j),
                    step: Step::Insert,
                };
                relax(&mut table, (u, j + 1), cell);
            }
        }
        for v in sl.successors(u).collect::<Vec<_>>() {
            for j in 0..=m {
                let Some(c) = table[u][j] else { continue };
                let from = (u, j);
                match sl.nodes[v].kind {
                    NodeKind::End => {
                        if j == m {
                            relax(&mut table, (v, j), Cell { score: c.score, from, step: Step::Finish });
                        }
                    }
                    NodeKind::Slot(_) => {
                        relax(&mut table, (v, j), Cell { score: c.score, from, step: Step::Absorb(0) });
                        for k in 1..=m - j {
                            let cell = Cell {
                                score: c.score + p.node_match_score,
                                from,
                                step: Step::Absorb(k),
                            };
                            relax(&mut table, (v, j + k), cell);
                        }
                    }
                    NodeKind::Backbone | NodeKind::Synonym => {
                        if j < m && keys[j] == sl.nodes[v].label {
                            let cell = Cell {
                                score: c.score + p.node_match_score,
                                from,
                                step: Step::Match,
                            };
                            relax(&mut table, (v, j + 1), cell);
                        }
                        relax(&mut table, (v, j), Cell { score: c.score, from, step: Step::Skip });
                    }
                    NodeKind::Start => {}
                }
            }
        }
    }
    let final_cell = table[END][m]?;

    let mut path = vec![END];
    let mut binding = SlotBinding::default();
    let mut matched = std::collections::BTreeSet::new();
    let mut at = (END, m);
    let mut cell = final_cell;
    while at != (START, 0) {
        let (node, j) = at;
        match cell.step {
            Step::Insert => {}
            Step::Match => {
                if let Some(pos) = sl.nodes[node].position {
                    matched.insert(pos);
                }
            }
            Step::Absorb(k) if k > 0 => {
                if let NodeKind::Slot(slot) = sl.nodes[node].kind {
                    let span = (j - k, j);
                    let values = (span.0..span.1)
                        .flat_map(|i| filler_tokens(s, i))
                        .map(|t| t.surface)
                        .collect();
                    binding.spans.insert(slot, span);
                    binding.values.insert(slot, values);
                }
            }
            _ => {}
        }
        if cell.from.0 != node {
            path.push(cell.from.0);
        }
        at = cell.from;
        cell = table[at.0][at.1].expect("traceback cell");
    }
    path.reverse();

    let position_count = sl.position_count();
    let matched_fraction = if position_count == 0 {
        S::zero()
    } else {
        S::from_count(matched.len()) / S::from_count(position_count)
    };
    Some(LatticeMatch {
        lattice_id: sl.id.clone(),
        score: final_cell.score,
        matched_positions: matched.len(),
        position_count,
        matched_fraction,
        binding,
        path,
    })
}

/// Aligns `s` to every lattice and returns the best one if it passes the
/// acceptance threshold. Ties go to the earlier lattice.
pub fn match_sentence<S: Scalar>(s: &Sentence, lattices: &[SlottedLattice], p: &GenerationParams<S>) -> Option<LatticeMatch<S>> {
    let all: Vec<Option<LatticeMatch<S>>> = lattices.par_iter().map(|sl| align_sentence(s, sl, p)).collect();
    let best = all.into_iter().flatten().fold(None::<LatticeMatch<S>>, |best, m| match best {
        Some(b) if !(m.score > b.score) => Some(b),
        _ => Some(m),
    })?;
    (best.matched_fraction >= p.accept_threshold).then_some(best)
}

/// One rendered target path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rendering {
    pub text: String,
    pub path: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RewriteOutcome {
    pub outputs: Vec<Rendering>,
    /// Paths dropped because a slot was unbound or a word was generic.
    pub skipped: usize,
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Renders one template with slot values substituted.
pub fn render_template(t: &Template, values: &BTreeMap<u32, Vec<String>>) -> Result<String> {
    let mut words: Vec<&str> = Vec::new();
    for item in &t.items {
        match item {
            TemplateItem::Word(w) if is_generic_label(w) => {
                return Err(Error::Config(format!("template word `{w}` has no surface form")));
            }
            TemplateItem::Word(w) => words.push(w),
            TemplateItem::Slot(k) => {
                let v = values.get(k).filter(|v| !v.is_empty()).ok_or(Error::UnboundSlot(*k))?;
                words.extend(v.iter().map(String::as_str));
            }
        }
    }
    Ok(capitalize(&render_surfaces(words)))
}

/// Writes a binding of the source lattice into every path of `target`.
///
/// `slot_map` maps source slots to target slots. Paths needing a slot with no
/// value are skipped; at most `max_outputs` sentences are returned, in path
/// order.
pub fn rewrite<S: Scalar>(
    binding: &SlotBinding,
    slot_map: &BTreeMap<u32, u32>,
    target: &SlottedLattice,
    p: &GenerationParams<S>,
) -> RewriteOutcome {
    let values: BTreeMap<u32, Vec<String>> = slot_map
        .iter()
        .filter_map(|(src, tgt)| binding.values.get(src).map(|v| (*tgt, v.clone())))
        .collect();
    let mut out = RewriteOutcome::default();
    for t in target.enumerate_templates(TEMPLATE_CAP).templates {
        match render_template(&t, &values) {
            Ok(text) if out.outputs.len() < p.max_outputs => out.outputs.push(Rendering { text, path: t.nodes }),
            Ok(_) => {}
            Err(_) => out.skipped += 1,
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRef {
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParaphraseSet {
    pub input: String,
    pub lattice: Option<String>,
    pub pair: Option<PairRef>,
    pub outputs: Vec<String>,
    pub paths: Vec<Vec<NodeId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl ParaphraseSet {
    fn empty(input: &str, reason: impl Into<String>) -> Self {
        ParaphraseSet {
            input: input.to_string(),
            lattice: None,
            pair: None,
            outputs: Vec::new(),
            paths: Vec::new(),
            reason: Some(reason.into()),
        }
    }

    pub fn matched(&self) -> bool {
        !self.outputs.is_empty()
    }
}

fn best_pair<'a>(pairs: &'a [LatticePair<f64>], lattice_id: &str) -> Option<&'a LatticePair<f64>> {
    pairs
        .iter()
        .filter(|p| p.source == lattice_id || p.target == lattice_id)
        .fold(None, |best: Option<&LatticePair<f64>>, p| match best {
            Some(b) if !(p.score > b.score) => Some(b),
            _ => Some(p),
        })
}

/// Paraphrases raw sentence text with a trained model.
pub fn paraphrase(raw: &str, model: &TrainedModel) -> Result<ParaphraseSet> {
    let sentence = Sentence::from_raw(CorpusId::A, "input", 0, raw)?;
    let masked = mask_with(&sentence, &model.lexicon, MaskOptions { mask_unseen_names: true });
    let params = model.config.generation::<f64>();
    let mut matches: Vec<LatticeMatch<f64>> = model
        .lattices
        .par_iter()
        .filter_map(|sl| align_sentence(&masked, sl, &params))
        .filter(|m| m.matched_fraction >= params.accept_threshold)
        .collect();
    matches.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.lattice_id.cmp(&b.lattice_id))
    });
    let Some(first) = matches.first() else {
        return Ok(ParaphraseSet::empty(raw, "no lattice matched above the acceptance threshold"));
    };
    let Some((m, pair)) = matches
        .iter()
        .find_map(|m| best_pair(&model.pairs, &m.lattice_id).map(|p| (m, p)))
    else {
        let mut set = ParaphraseSet::empty(raw, format!("matched lattice {} has no paired lattice", first.lattice_id));
        set.lattice = Some(first.lattice_id.clone());
        return Ok(set);
    };
    let (target_id, slot_map) = pair.oriented_from(&m.lattice_id).expect("pair involves lattice");
    let target = model
        .lattice(target_id)
        .ok_or_else(|| Error::Config(format!("model has no lattice {target_id}")))?;
    let outcome = rewrite(&m.binding, &slot_map, target, &params);
    let reason = outcome
        .outputs
        .is_empty()
        .then(|| format!("no path of {target_id} could be filled from the bound slots"));
    Ok(ParaphraseSet {
        input: raw.to_string(),
        lattice: Some(m.lattice_id.clone()),
        pair: Some(PairRef {
            source: pair.source.clone(),
            target: pair.target.clone(),
        }),
        paths: outcome.outputs.iter().map(|r| r.path.clone()).collect(),
        outputs: outcome.outputs.into_iter().map(|r| r.text).collect(),
        reason,
    })
}
