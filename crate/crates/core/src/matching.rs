//! Cross-corpus lattice pairing by slot filler overlap.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::OnceLock;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{ArticlePairs, Sentence, Token, TokenKind};
use crate::lattice::SlottedLattice;
use crate::msa::Lattice;
use crate::scalar::Scalar;

const FUNCTION_WORDS: &str = include_str!("../data/function_words.txt");

fn function_words() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        FUNCTION_WORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

pub fn is_function_word(word: &str) -> bool {
    function_words().contains(word.to_lowercase().as_str())
}

/// A filler word in its original surface form, tagged with the generic kind
/// it was masked as (`Word` when it was not masked).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FillerToken {
    pub surface: String,
    pub kind: TokenKind,
}

impl FillerToken {
    pub fn new(surface: impl Into<String>, kind: TokenKind) -> Self {
        FillerToken {
            surface: surface.into(),
            kind,
        }
    }

    pub fn word(surface: impl Into<String>) -> Self {
        Self::new(surface, TokenKind::Word)
    }
}

/// Original-surface tokens behind masked token `index` of `sentence`.
///
/// A sentence-initial plain word is lowercased so that it reads naturally
/// when substituted elsewhere; everything else keeps its surface.
pub fn filler_tokens(sentence: &Sentence, index: usize) -> Vec<FillerToken> {
    let token = &sentence.tokens[index];
    if token.kind == TokenKind::Word {
        let surface = if token.sentence_initial {
            token.surface.to_lowercase()
        } else {
            token.surface.clone()
        };
        return vec![FillerToken::word(surface)];
    }
    sentence
        .original_tokens(index)
        .into_iter()
        .map(|t: Token| FillerToken::new(t.surface, token.kind))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotFillRecord {
    pub lattice_id: String,
    pub slot: u32,
    pub sentence_id: String,
    pub article_id: String,
    pub date: Option<NaiveDate>,
    pub values: Vec<FillerToken>,
}

/// Records, for each sentence and slot, the words its lattice path routed
/// through the slot's region. Sentences without a path in `lat` and slots a
/// path misses produce no record.
pub fn collect_fillers<'a>(
    sl: &SlottedLattice,
    lat: &Lattice,
    sentences: impl IntoIterator<Item = (&'a Sentence, Option<NaiveDate>)>,
) -> Vec<SlotFillRecord> {
    let mut slot_of: HashMap<usize, Vec<u32>> = HashMap::new();
    for (&slot, region) in &sl.slot_regions {
        for &n in region {
            slot_of.entry(n).or_default().push(slot);
        }
    }
    let mut out = Vec::new();
    for (sentence, date) in sentences {
        let Some(path) = lat.paths.get(&sentence.id) else {
            continue;
        };
        let mut values: BTreeMap<u32, Vec<FillerToken>> = BTreeMap::new();
        for i in 0..sentence.tokens.len() {
            let Some(slots) = path.get(i + 1).and_then(|n| slot_of.get(n)) else {
                continue;
            };
            for &slot in slots {
                values.entry(slot).or_default().extend(filler_tokens(sentence, i));
            }
        }
        for (slot, values) in values {
            out.push(SlotFillRecord {
                lattice_id: sl.id.clone(),
                slot,
                sentence_id: sentence.id.clone(),
                article_id: sentence.article_id.clone(),
                date,
                values,
            });
        }
    }
    out
}

/// Weighted word overlap between two filler bags.
///
/// Function words and punctuation are dropped and order is ignored. Each
/// shared lowercased word contributes its minimum count, doubled when
/// either side has it as part of a name or number.
pub fn overlap_score<S: Scalar>(a: &[FillerToken], b: &[FillerToken]) -> S {
    fn bag(tokens: &[FillerToken]) -> HashMap<String, (usize, bool)> {
        let mut out: HashMap<String, (usize, bool)> = HashMap::new();
        for t in tokens {
            let key = t.surface.to_lowercase();
            if key.chars().all(|c| !c.is_alphanumeric()) || is_function_word(&key) {
                continue;
            }
            let e = out.entry(key).or_default();
            e.0 += 1;
            e.1 |= matches!(t.kind, TokenKind::Name | TokenKind::Num);
        }
        out
    }
    let (ba, bb) = (bag(a), bag(b));
    let total: usize = ba
        .iter()
        .filter_map(|(k, &(ca, wa))| {
            bb.get(k)
                .map(|&(cb, wb)| ca.min(cb) * if wa || wb { 2 } else { 1 })
        })
        .sum();
    S::from_count(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchParams<S> {
    /// Lattice-pair scores must be strictly above this.
    pub match_threshold: S,
    pub min_support: usize,
}

impl<S: Scalar> Default for MatchParams<S> {
    fn default() -> Self {
        MatchParams {
            match_threshold: S::one(),
            min_support: 2,
        }
    }
}

/// Two lattices judged to be paraphrases. `source` comes from corpus A,
/// `target` from corpus B; `slot_map` maps source slots to target slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticePair<S> {
    pub source: String,
    pub target: String,
    pub slot_map: BTreeMap<u32, u32>,
    pub score: S,
    pub support: usize,
}

impl<S> LatticePair<S> {
    pub fn inverse_map(&self) -> BTreeMap<u32, u32> {
        self.slot_map.iter().map(|(&a, &b)| (b, a)).collect()
    }

    /// The partner of `lattice_id` and the slot map oriented from it, if
    /// this pair involves that lattice.
    pub fn oriented_from(&self, lattice_id: &str) -> Option<(&str, BTreeMap<u32, u32>)> {
        if self.source == lattice_id {
            Some((&self.target, self.slot_map.clone()))
        } else if self.target == lattice_id {
            Some((&self.source, self.inverse_map()))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SentenceFillers {
    pub article_id: String,
    pub slots: BTreeMap<u32, Vec<FillerToken>>,
}

/// Fillers of one slotted lattice grouped by sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeFillers {
    pub lattice_id: String,
    pub slot_count: usize,
    pub sentences: BTreeMap<String, SentenceFillers>,
}

impl LatticeFillers {
    pub fn new(sl: &SlottedLattice, records: &[SlotFillRecord]) -> Self {
        let mut sentences: BTreeMap<String, SentenceFillers> = BTreeMap::new();
        for r in records.iter().filter(|r| r.lattice_id == sl.id) {
            let entry = sentences.entry(r.sentence_id.clone()).or_insert_with(|| SentenceFillers {
                article_id: r.article_id.clone(),
                slots: BTreeMap::new(),
            });
            entry.slots.entry(r.slot).or_default().extend(r.values.iter().cloned());
        }
        LatticeFillers {
            lattice_id: sl.id.clone(),
            slot_count: sl.slot_count(),
            sentences,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome<S> {
    pub pairs: Vec<LatticePair<S>>,
    pub diagnostics: Vec<String>,
}

/// Calls `visit` on every injective sequence of `k` distinct values from
/// `0..n`, in lexicographic order.
fn for_each_arrangement(n: usize, k: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(n: usize, k: usize, used: &mut [bool], cur: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            visit(cur);
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                rec(n, k, used, cur, visit);
                cur.pop();
                used[v] = false;
            }
        }
    }
    rec(n, k, &mut vec![false; n], &mut Vec::with_capacity(k), visit);
}

/// Best injective assignment between the slots of two sentences.
///
/// `overlap[i][j]` scores source slot `i` against target slot `j`. The
/// smaller side is mapped into the larger one; among equal scores the
/// lexicographically first assignment wins, which is the order-preserving
/// one when it is optimal. Returns the score and the (source, target) index
/// pairs.
pub fn best_assignment<S: Scalar>(overlap: &[Vec<S>]) -> (S, Vec<(usize, usize)>) {
    let ka = overlap.len();
    let kb = overlap.first().map_or(0, Vec::len);
    let mut best: Option<(S, Vec<(usize, usize)>)> = None;
    let mut consider = |pairs: Vec<(usize, usize)>| {
        let score: S = pairs.iter().map(|&(i, j)| overlap[i][j]).sum();
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, pairs));
        }
    };
    if ka <= kb {
        for_each_arrangement(kb, ka, &mut |perm| consider(perm.iter().enumerate().map(|(i, &j)| (i, j)).collect()));
    } else {
        for_each_arrangement(ka, kb, &mut |perm| consider(perm.iter().enumerate().map(|(j, &i)| (i, j)).collect()));
    }
    best.unwrap_or((S::zero(), Vec::new()))
}

fn score_lattice_pair<S: Scalar>(
    a: &LatticeFillers,
    b: &LatticeFillers,
    article_pairs: &ArticlePairs,
    params: &MatchParams<S>,
) -> Option<LatticePair<S>> {
    let (ka, kb) = (a.slot_count, b.slot_count);
    if ka == 0 || kb == 0 {
        return None;
    }
    let empty: Vec<FillerToken> = Vec::new();
    let mut total = S::zero();
    let mut support = 0usize;
    let mut votes: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for sa in a.sentences.values() {
        for sb in b.sentences.values() {
            if !article_pairs.contains(&(sa.article_id.clone(), sb.article_id.clone())) {
                continue;
            }
            let overlap: Vec<Vec<S>> = (1..=ka as u32)
                .map(|i| {
                    let fa = sa.slots.get(&i).unwrap_or(&empty);
                    (1..=kb as u32)
                        .map(|j| overlap_score(fa, sb.slots.get(&j).unwrap_or(&empty)))
                        .collect()
                })
                .collect();
            let (score, assignment) = best_assignment(&overlap);
            if score <= S::zero() {
                continue;
            }
            support += 1;
            total = total + score;
            for (i, j) in assignment {
                if overlap[i][j] > S::zero() {
                    *votes.entry((i as u32 + 1, j as u32 + 1)).or_default() += 1;
                }
            }
        }
    }
    if support == 0 {
        return None;
    }
    let score = total / (S::from_count(support) * S::from_count(ka.min(kb)));
    if !(score > params.match_threshold) || support < params.min_support {
        return None;
    }
    let mut ranked: Vec<((u32, u32), usize)> = votes.into_iter().collect();
    ranked.sort_by(|(pa, ca), (pb, cb)| cb.cmp(ca).then(pa.cmp(pb)));
    let mut slot_map = BTreeMap::new();
    let mut used_targets = BTreeSet::new();
    for ((i, j), _) in ranked {
        if !slot_map.contains_key(&i) && !used_targets.contains(&j) {
            slot_map.insert(i, j);
            used_targets.insert(j);
        }
    }
    Some(LatticePair {
        source: a.lattice_id.clone(),
        target: b.lattice_id.clone(),
        slot_map,
        score,
        support,
    })
}

/// Scores every (A, B) lattice pair over sentence pairs from paired
/// articles and keeps those above threshold, sorted by (source, target).
pub fn match_lattices<S: Scalar>(
    lattices_a: &[LatticeFillers],
    lattices_b: &[LatticeFillers],
    article_pairs: &ArticlePairs,
    params: &MatchParams<S>,
) -> MatchOutcome<S> {
    let mut diagnostics = Vec::new();
    if article_pairs.is_empty() {
        diagnostics.push("no same-day, same-topic article pairs; no lattices can be paired".to_string());
        return MatchOutcome {
            pairs: Vec::new(),
            diagnostics,
        };
    }
    let candidates: Vec<(&LatticeFillers, &LatticeFillers)> = lattices_a
        .iter()
        .flat_map(|a| lattices_b.iter().map(move |b| (a, b)))
        .collect();
    let mut pairs: Vec<LatticePair<S>> = candidates
        .par_iter()
        .filter_map(|(a, b)| score_lattice_pair(a, b, article_pairs, params))
        .collect();
    pairs.sort_by(|x, y| (&x.source, &x.target).cmp(&(&y.source, &y.target)));
    MatchOutcome { pairs, diagnostics }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn words(s: &str) -> Vec<FillerToken> {
        s.split_whitespace().map(FillerToken::word).collect()
    }

    #[test]
    fn order_is_ignored() {
        assert_eq!(overlap_score::<f64>(&words("plane town"), &words("town plane")), 2.0);
        assert_eq!(overlap_score::<f64>(&words("plane"), &words("town")), 0.0);
    }

    #[test]
    fn names_and_numbers_count_double() {
        let a = vec![
            FillerToken::new("Nablus", TokenKind::Name),
            FillerToken::new("20", TokenKind::Num),
            FillerToken::word("men"),
        ];
        let b = words("Nablus 20 women");
        assert_eq!(overlap_score::<Rational64>(&a, &b), Rational64::from_integer(4));
        assert_eq!(overlap_score::<Rational64>(&b, &a), Rational64::from_integer(4));
    }

    #[test]
    fn function_words_and_punctuation_are_discarded() {
        assert_eq!(overlap_score::<f64>(&words("the town , was"), &words("the town , was")), 1.0);
    }

    #[test]
    fn assignment_prefers_identity_on_ties() {
        let (score, a) = best_assignment(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(score, 2.0);
        assert_eq!(a, [(0, 0), (1, 1)]);
    }

    #[test]
    fn assignment_crosses_when_better() {
        let (score, a) = best_assignment(&[vec![0.0, 2.0], vec![2.0, 0.0]]);
        assert_eq!(score, 4.0);
        assert_eq!(a, [(0, 1), (1, 0)]);
    }

    #[test]
    fn assignment_with_unequal_slot_counts() {
        let (score, a) = best_assignment(&[vec![0.0], vec![0.0], vec![3.0]]);
        assert_eq!(score, 3.0);
        assert_eq!(a, [(2, 0)]);
        let (score, a) = best_assignment(&[vec![0.0, 0.0, 3.0]]);
        assert_eq!(score, 3.0);
        assert_eq!(a, [(0, 2)]);
    }

    #[test]
    fn arrangement_count() {
        let mut n = 0;
        for_each_arrangement(4, 2, &mut |_| n += 1);
        assert_eq!(n, 12);
    }

    #[test]
    fn no_article_pairs_gives_diagnostic() {
        let out = match_lattices::<f64>(&[], &[], &ArticlePairs::new(), &MatchParams::default());
        assert!(out.pairs.is_empty());
        assert_eq!(out.diagnostics.len(), 1);
    }
}
