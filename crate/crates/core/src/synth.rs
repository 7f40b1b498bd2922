//! Seeded synthetic comparable corpora.
//!
//! A spec lists template families. Every instance of a family becomes one
//! article in each corpus, written on the same day under the family's
//! topic, with the same slot values rendered through an A-side and a B-side
//! template. The manifest records which articles and templates belong to
//! which family.
//!
//! ```toml
//! start_date = "2024-03-01"
//!
//! [[family]]
//! name = "bombing"
//! instances = 15
//! templates_a = ["{X} injured {Y} people, {Z} of them seriously"]
//! templates_b = ["{Y} were wounded by {X}, among them {Z} were in serious condition"]
//!
//! [family.slots]
//! X = ["a car bomb", "the blast"]
//! Y = ["12", "30"]
//! Z = ["2", "5"]
//! ```

use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::DEFAULT_MIN_CLUSTER_SIZE;
use crate::corpus::{CorpusId, CorpusRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub start_date: NaiveDate,
    #[serde(rename = "family")]
    pub families: Vec<FamilySpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub name: String,
    pub instances: usize,
    pub templates_a: Vec<String>,
    pub templates_b: Vec<String>,
    pub slots: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyManifest {
    pub name: String,
    pub templates_a: Vec<String>,
    pub templates_b: Vec<String>,
    /// Article ids; each id names one article in both corpora.
    pub articles: Vec<String>,
    pub values: Vec<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub families: Vec<FamilyManifest>,
}

impl Manifest {
    /// Family an article belongs to.
    pub fn family_of(&self, article_id: &str) -> Option<&str> {
        self.families
            .iter()
            .find(|f| f.articles.iter().any(|a| a == article_id))
            .map(|f| f.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthOutput {
    pub corpus_a: Vec<CorpusRecord>,
    pub corpus_b: Vec<CorpusRecord>,
    pub manifest: Manifest,
    pub warnings: Vec<String>,
}

pub fn parse_spec(text: &str) -> Result<SynthSpec> {
    let spec: SynthSpec = toml::from_str(text).map_err(|e| Error::SynthSpec(e.to_string()))?;
    validate(&spec)?;
    Ok(spec)
}

fn placeholders(template: &str) -> Result<Vec<&str>> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let close = rest[open..]
            .find('}')
            .ok_or_else(|| Error::SynthSpec(format!("unclosed placeholder in `{template}`")))?;
        out.push(&rest[open + 1..open + close]);
        rest = &rest[open + close + 1..];
    }
    Ok(out)
}

fn validate(spec: &SynthSpec) -> Result<()> {
    if spec.families.is_empty() {
        return Err(Error::SynthSpec("no families".into()));
    }
    for f in &spec.families {
        if f.templates_a.is_empty() || f.templates_b.is_empty() {
            return Err(Error::SynthSpec(format!("family {} needs templates on both sides", f.name)));
        }
        if f.name.is_empty() || f.name.contains(char::is_whitespace) {
            return Err(Error::SynthSpec(format!("family name `{}` must be a non-empty word", f.name)));
        }
        for t in f.templates_a.iter().chain(&f.templates_b) {
            for p in placeholders(t)? {
                if f.slots.get(p).is_none_or(|v| v.is_empty()) {
                    return Err(Error::SynthSpec(format!("family {}: slot `{p}` has no values", f.name)));
                }
            }
        }
    }
    Ok(())
}

fn fill(template: &str, values: &BTreeMap<String, String>) -> String {
    let mut out = template.to_string();
    for (k, v) in values {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    let mut chars = out.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => out,
    }
}

/// Instantiates every family. The output depends only on `seed` and `spec`.
pub fn generate(seed: u64, spec: &SynthSpec) -> Result<SynthOutput> {
    validate(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SynthOutput {
        corpus_a: Vec::new(),
        corpus_b: Vec::new(),
        manifest: Manifest {
            seed,
            families: Vec::new(),
        },
        warnings: Vec::new(),
    };
    let mut day = 0u64;
    for f in &spec.families {
        if f.instances < DEFAULT_MIN_CLUSTER_SIZE {
            out.warnings.push(format!(
                "family {} has {} instances, fewer than the default minimum cluster size {}",
                f.name, f.instances, DEFAULT_MIN_CLUSTER_SIZE
            ));
        }
        let pools: BTreeMap<&String, Vec<&String>> = f
            .slots
            .iter()
            .map(|(k, vs)| {
                let mut pool: Vec<&String> = vs.iter().collect();
                pool.shuffle(&mut rng);
                (k, pool)
            })
            .collect();
        let mut fm = FamilyManifest {
            name: f.name.clone(),
            templates_a: f.templates_a.clone(),
            templates_b: f.templates_b.clone(),
            articles: Vec::new(),
            values: Vec::new(),
        };
        for i in 0..f.instances {
            let values: BTreeMap<String, String> = pools
                .iter()
                .map(|(k, pool)| ((*k).clone(), pool[i % pool.len()].clone()))
                .collect();
            let date = spec
                .start_date
                .checked_add_days(Days::new(day))
                .ok_or_else(|| Error::SynthSpec("date out of range".into()))?;
            day += 1;
            let article = format!("{}-{i:03}", f.name);
            let record = |corpus: CorpusId, text: String| CorpusRecord {
                corpus_id: corpus.to_string(),
                article_id: article.clone(),
                date: date.format("%Y-%m-%d").to_string(),
                topic_id: f.name.clone(),
                sentence_index: 0,
                text,
            };
            out.corpus_a.push(record(CorpusId::A, fill(&f.templates_a[i % f.templates_a.len()], &values)));
            out.corpus_b.push(record(CorpusId::B, fill(&f.templates_b[i % f.templates_b.len()], &values)));
            fm.articles.push(article.clone());
            fm.values.push(values);
        }
        out.manifest.families.push(fm);
    }
    Ok(out)
}

/// Corpus file text for a list of records.
pub fn render_corpus(records: &[CorpusRecord]) -> String {
    let mut out = String::from("# corpus_id\tarticle_id\tdate\ttopic_id\tsentence_index\ttext\n");
    for r in records {
        out.push_str(&r.to_tsv());
        out.push('\n');
    }
    out
}
