//! Sentence clustering by word n-gram overlap and complete-link
//! agglomeration.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusId, Sentence};
use crate::scalar::Scalar;

pub const DEFAULT_MIN_CLUSTER_SIZE: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityParams<S> {
    pub orders: Vec<usize>,
    pub join_threshold: S,
}

impl<S: Scalar> Default for SimilarityParams<S> {
    fn default() -> Self {
        SimilarityParams {
            orders: vec![1, 2, 3, 4],
            join_threshold: S::from_ratio(1, 2),
        }
    }
}

impl<S: Scalar> SimilarityParams<S> {
    pub fn validate(&self) -> Result<(), String> {
        if self.orders.is_empty() || self.orders.contains(&0) {
            return Err("n-gram orders must be a non-empty set of integers >= 1".into());
        }
        if self.join_threshold < S::zero() || self.join_threshold > S::one() {
            return Err("join_threshold must lie in [0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    pub corpus: CorpusId,
    /// Sentence ids in canonical order.
    pub members: Vec<String>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// N-gram multiset of one order.
type Grams<'a> = HashMap<&'a [String], usize>;

fn grams(keys: &[String], n: usize) -> Grams<'_> {
    let mut out = Grams::new();
    if keys.len() >= n {
        for w in keys.windows(n) {
            *out.entry(w).or_default() += 1;
        }
    }
    out
}

fn dice<S: Scalar>(a: &Grams<'_>, b: &Grams<'_>) -> S {
    let total_a: usize = a.values().sum();
    let total_b: usize = b.values().sum();
    if total_a + total_b == 0 {
        return S::one();
    }
    let shared: usize = a
        .iter()
        .filter_map(|(g, ca)| b.get(g).map(|cb| (*ca).min(*cb)))
        .sum();
    S::from_count(2 * shared) / S::from_count(total_a + total_b)
}

/// Profile of a sentence's n-gram multisets, computed once per sentence.
struct Profile<'a> {
    per_order: Vec<Grams<'a>>,
}

impl<'a> Profile<'a> {
    fn new(keys: &'a [String], orders: &[usize]) -> Self {
        Profile {
            per_order: orders.iter().map(|&n| grams(keys, n)).collect(),
        }
    }

    fn similarity<S: Scalar>(&self, other: &Profile<'_>) -> S {
        let k = self.per_order.len();
        let sum: S = self
            .per_order
            .iter()
            .zip(&other.per_order)
            .map(|(a, b)| dice::<S>(a, b))
            .sum();
        sum / S::from_count(k)
    }
}

/// Mean over the configured orders of the Dice coefficient between the two
/// sentences' n-gram multisets.
pub fn ngram_similarity<S: Scalar>(s1: &Sentence, s2: &Sentence, params: &SimilarityParams<S>) -> S {
    key_similarity(&s1.keys(), &s2.keys(), &params.orders)
}

/// [`ngram_similarity`] over pre-computed comparison keys.
pub fn key_similarity<S: Scalar>(a: &[String], b: &[String], orders: &[usize]) -> S {
    Profile::new(a, orders).similarity(&Profile::new(b, orders))
}

/// Full pairwise similarity matrix, row-major.
pub fn similarity_matrix<S: Scalar>(keys: &[Vec<String>], orders: &[usize]) -> Vec<S> {
    let n = keys.len();
    let profiles: Vec<Profile<'_>> = keys.iter().map(|k| Profile::new(k, orders)).collect();
    let rows: Vec<Vec<S>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        S::one()
                    } else {
                        profiles[i].similarity(&profiles[j])
                    }
                })
                .collect()
        })
        .collect();
    rows.into_iter().flatten().collect()
}

/// Agglomerative complete-link clustering.
///
/// Sentences are put in canonical id order first; the initial cluster id of
/// each sentence is its index there and a merged cluster keeps the smaller
/// id. Merging stops once the best inter-cluster similarity drops below the
/// join threshold. Returns clusters sorted by id.
pub fn complete_link_cluster<S: Scalar>(
    sentences: &[Sentence],
    params: &SimilarityParams<S>,
) -> Vec<Cluster> {
    let mut ordered: Vec<&Sentence> = sentences.iter().collect();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));
    let keys: Vec<Vec<String>> = ordered.iter().map(|s| s.keys()).collect();
    let n = ordered.len();
    if n == 0 {
        return Vec::new();
    }
    let mut sim = similarity_matrix::<S>(&keys, &params.orders);
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut active = vec![true; n];

    loop {
        let mut best: Option<(usize, usize, S)> = None;
        for i in (0..n).filter(|&i| active[i]) {
            for j in (i + 1..n).filter(|&j| active[j]) {
                let s = sim[i * n + j];
                if best.is_none_or(|(_, _, b)| s > b) {
                    best = Some((i, j, s));
                }
            }
        }
        let Some((i, j, s)) = best else { break };
        if s < params.join_threshold {
            break;
        }
        // Complete link: similarity to the merged cluster is the minimum.
        for k in (0..n).filter(|&k| active[k] && k != i && k != j) {
            let merged = if sim[j * n + k] < sim[i * n + k] {
                sim[j * n + k]
            } else {
                sim[i * n + k]
            };
            sim[i * n + k] = merged;
            sim[k * n + i] = merged;
        }
        active[j] = false;
        let moved = std::mem::take(&mut members[j]);
        members[i].extend(moved);
    }

    (0..n)
        .filter(|&i| active[i])
        .map(|i| {
            let mut ids: Vec<String> = members[i].iter().map(|&m| ordered[m].id.clone()).collect();
            ids.sort();
            Cluster {
                id: i,
                corpus: ordered[i].corpus,
                members: ids,
            }
        })
        .collect()
}

/// Keeps clusters with at least `min_cluster_size` members.
pub fn filter_clusters(clusters: Vec<Cluster>, min_cluster_size: usize) -> Vec<Cluster> {
    clusters
        .into_iter()
        .filter(|c| c.len() >= min_cluster_size)
        .collect()
}
