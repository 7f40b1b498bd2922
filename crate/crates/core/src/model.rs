//! Training pipeline and the trained-model file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::{complete_link_cluster, filter_clusters, Cluster};
use crate::config::Config;
use crate::corpus::{build_name_lexicon, mask, pair_articles, Article, CorpusId, NameLexicon, Sentence};
use crate::error::{Error, Result};
use crate::generate::TEMPLATE_CAP;
use crate::lattice::{induce_slots, SlottedLattice};
use crate::matching::{collect_fillers, match_lattices, LatticeFillers, LatticePair};
use crate::msa::build_lattice;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub corpus: CorpusId,
    pub id: usize,
    pub size: usize,
    pub lattice: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub corpus_a_sha256: String,
    pub corpus_b_sha256: String,
    /// Taken from `SOURCE_DATE_EPOCH` when set, so builds stay reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created: Option<String>,
}

impl Provenance {
    pub fn for_inputs(corpus_a: &[u8], corpus_b: &[u8]) -> Self {
        let created = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.trim().parse::<i64>().ok())
            .and_then(|secs| chrono::DateTime::from_timestamp(secs, 0))
            .map(|t| t.to_rfc3339());
        Provenance {
            corpus_a_sha256: hex::encode(Sha256::digest(corpus_a)),
            corpus_b_sha256: hex::encode(Sha256::digest(corpus_b)),
            created,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub config: Config,
    pub lexicon: NameLexicon,
    pub clusters: Vec<ClusterSummary>,
    /// Slotted lattices of both corpora, corpus A first.
    pub lattices: Vec<SlottedLattice>,
    pub pairs: Vec<LatticePair<f64>>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub clusters_a: usize,
    pub clusters_b: usize,
    pub lattices_a: usize,
    pub lattices_b: usize,
    pub pairs: usize,
    pub template_pairs: usize,
}

impl fmt::Display for TrainSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "clusters: A={} B={}", self.clusters_a, self.clusters_b)?;
        writeln!(f, "slotted lattices: A={} B={}", self.lattices_a, self.lattices_b)?;
        writeln!(f, "lattice pairs: {}", self.pairs)?;
        write!(f, "template pairs: {}", self.template_pairs)
    }
}

impl TrainedModel {
    pub fn empty(config: Config) -> Self {
        TrainedModel {
            format_version: FORMAT_VERSION,
            config,
            lexicon: NameLexicon::default(),
            clusters: Vec::new(),
            lattices: Vec::new(),
            pairs: Vec::new(),
            provenance: Provenance::default(),
        }
    }

    pub fn lattice(&self, id: &str) -> Option<&SlottedLattice> {
        self.lattices.iter().find(|l| l.id == id)
    }

    pub fn summary(&self) -> TrainSummary {
        let count = |c: CorpusId| self.clusters.iter().filter(|s| s.corpus == c).count();
        let lattices = |c: CorpusId| self.lattices.iter().filter(|l| l.corpus == Some(c)).count();
        let templates = |id: &str| {
            self.lattice(id)
                .map_or(0, |l| l.enumerate_templates(TEMPLATE_CAP).templates.len())
        };
        TrainSummary {
            clusters_a: count(CorpusId::A),
            clusters_b: count(CorpusId::B),
            lattices_a: lattices(CorpusId::A),
            lattices_b: lattices(CorpusId::B),
            pairs: self.pairs.len(),
            template_pairs: self
                .pairs
                .iter()
                .map(|p| templates(&p.source) * templates(&p.target))
                .sum(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let not_loaded = |reason: String| Error::ModelNotLoaded {
            path: path.to_path_buf(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| not_loaded(e.to_string()))?;
        let model: TrainedModel = serde_json::from_str(&text).map_err(|e| not_loaded(e.to_string()))?;
        if model.format_version != FORMAT_VERSION {
            return Err(not_loaded(format!("unsupported format version {}", model.format_version)));
        }
        Ok(model)
    }
}

pub struct TrainOutput {
    pub model: TrainedModel,
    pub warnings: Vec<String>,
}

pub fn lattice_id(corpus: CorpusId, cluster: usize) -> String {
    format!("{corpus}-{cluster:04}")
}

struct CorpusLattices {
    clusters: Vec<ClusterSummary>,
    lattices: Vec<SlottedLattice>,
    fillers: Vec<LatticeFillers>,
}

fn process_corpus(corpus: CorpusId, articles: &[Article], lexicon: &NameLexicon, config: &Config) -> Result<CorpusLattices> {
    let dates: BTreeMap<&str, Option<NaiveDate>> = articles.iter().map(|a| (a.id.as_str(), a.date)).collect();
    let sentences: Vec<Sentence> = articles
        .iter()
        .flat_map(|a| &a.sentences)
        .map(|s| mask(s, lexicon))
        .collect();
    let by_id: BTreeMap<&str, &Sentence> = sentences.iter().map(|s| (s.id.as_str(), s)).collect();
    let sim = config.similarity::<f64>();
    let clusters: Vec<Cluster> = filter_clusters(complete_link_cluster(&sentences, &sim), config.min_cluster_size);
    let scoring = config.scoring::<f64>();
    let slotting = config.slotting::<f64>();
    let built: Vec<(SlottedLattice, LatticeFillers)> = clusters
        .par_iter()
        .map(|c| {
            let lat = build_lattice(lattice_id(corpus, c.id), c, |id| by_id.get(id).copied(), &scoring, &sim)?;
            let sl = induce_slots(&lat, &slotting).with_source(c.id, corpus);
            let members = c.members.iter().map(|m| {
                let s = by_id[m.as_str()];
                (s, dates.get(s.article_id.as_str()).copied().flatten())
            });
            let records = collect_fillers(&sl, &lat, members);
            let fillers = LatticeFillers::new(&sl, &records);
            Ok((sl, fillers))
        })
        .collect::<Result<_>>()?;
    let summaries = clusters
        .iter()
        .map(|c| ClusterSummary {
            corpus,
            id: c.id,
            size: c.len(),
            lattice: lattice_id(corpus, c.id),
            members: c.members.clone(),
        })
        .collect();
    let (lattices, fillers) = built.into_iter().unzip();
    Ok(CorpusLattices {
        clusters: summaries,
        lattices,
        fillers,
    })
}

fn check_corpus(articles: &[Article], expected: CorpusId) -> Result<()> {
    if articles.is_empty() {
        return Err(Error::EmptyCorpus(expected.to_string()));
    }
    if let Some(a) = articles.iter().find(|a| a.corpus != expected) {
        return Err(Error::Config(format!(
            "article {} belongs to corpus {} but was given as corpus {expected}",
            a.id, a.corpus
        )));
    }
    Ok(())
}

/// Runs clustering, alignment, slotting and pairing over both corpora.
pub fn train(corpus_a: &[Article], corpus_b: &[Article], config: &Config, provenance: Provenance) -> Result<TrainOutput> {
    config.validate()?;
    check_corpus(corpus_a, CorpusId::A)?;
    check_corpus(corpus_b, CorpusId::B)?;
    let mut warnings = config.warnings();
    let all: Vec<Article> = corpus_a.iter().chain(corpus_b).cloned().collect();
    let lexicon = build_name_lexicon(&all, config.min_name_count);
    let a = process_corpus(CorpusId::A, corpus_a, &lexicon, config)?;
    let b = process_corpus(CorpusId::B, corpus_b, &lexicon, config)?;
    let article_pairs = pair_articles(corpus_a, corpus_b)?;
    let outcome = match_lattices(&a.fillers, &b.fillers, &article_pairs, &config.matching::<f64>());
    warnings.extend(outcome.diagnostics);
    if outcome.pairs.is_empty() {
        warnings.push("training produced no lattice pairs".to_string());
    }
    let model = TrainedModel {
        format_version: FORMAT_VERSION,
        config: config.clone(),
        lexicon,
        clusters: a.clusters.into_iter().chain(b.clusters).collect(),
        lattices: a.lattices.into_iter().chain(b.lattices).collect(),
        pairs: outcome.pairs,
        provenance,
    };
    Ok(TrainOutput { model, warnings })
}
