#![allow(dead_code)]

use std::io::BufReader;
use std::path::PathBuf;

use paralattice::config::Config;
use paralattice::corpus::{read_corpus, Article};
use paralattice::model::{train, Provenance, TrainedModel};
use paralattice::msa::Lattice;
use paralattice::synth::{self, Manifest};
use paralattice::ScoringParams;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const OVERVIEW_INPUT: &str = "The surprise bombing injured twenty people, five of them seriously";
pub const OVERVIEW_WOUNDED: &str = "Twenty were wounded by the surprise bombing, among them five were in serious condition";
pub const OVERVIEW_HURT: &str = "Twenty were hurt by the surprise bombing, among them five were in serious condition";

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub struct Synthetic {
    pub text_a: String,
    pub text_b: String,
    pub articles_a: Vec<Article>,
    pub articles_b: Vec<Article>,
    pub manifest: Manifest,
}

pub fn synthetic(spec_file: &str, seed: u64) -> Synthetic {
    let spec = synth::parse_spec(&std::fs::read_to_string(fixture(spec_file)).unwrap()).unwrap();
    let out = synth::generate(seed, &spec).unwrap();
    let text_a = synth::render_corpus(&out.corpus_a);
    let text_b = synth::render_corpus(&out.corpus_b);
    let articles_a = read_corpus(BufReader::new(text_a.as_bytes()), "a").unwrap();
    let articles_b = read_corpus(BufReader::new(text_b.as_bytes()), "b").unwrap();
    Synthetic {
        text_a,
        text_b,
        articles_a,
        articles_b,
        manifest: out.manifest,
    }
}

pub fn train_synthetic(data: &Synthetic, config: &Config) -> TrainedModel {
    let provenance = Provenance::for_inputs(data.text_a.as_bytes(), data.text_b.as_bytes());
    train(&data.articles_a, &data.articles_b, config, provenance).unwrap().model
}

pub fn overview_model() -> TrainedModel {
    train_synthetic(&synthetic("overview.toml", 42), &Config::default())
}

/// Family of the sentences a lattice was built from, when they all agree.
pub fn lattice_family(model: &TrainedModel, manifest: &Manifest, lattice: &str) -> Option<String> {
    let cluster = model.clusters.iter().find(|c| c.lattice == lattice)?;
    let mut families = cluster.members.iter().map(|sid| {
        let article = sid.split('/').nth(1).unwrap_or_default();
        manifest.family_of(article).map(str::to_string)
    });
    let first = families.next()??;
    families.all(|f| f.as_deref() == Some(first.as_str())).then_some(first)
}

pub fn random_sentence(rng: &mut ChaCha8Rng, vocab: &[&str], min_len: usize, max_len: usize) -> Vec<String> {
    let len = rng.gen_range(min_len..=max_len);
    (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())].to_string()).collect()
}

/// A lattice over `n` random sentences that share a common frame, so that
/// backbones are non-trivial.
pub fn random_cluster_lattice(rng: &mut ChaCha8Rng, n: usize) -> Lattice {
    let frame = ["troops", "raided", "camp", "at", "dawn"];
    let noise = ["jenin", "nablus", "gaza", "heavy", "at", "camp", "dawn", "NUM"];
    let seqs: Vec<(String, Vec<String>)> = (0..n)
        .map(|i| {
            let mut words = Vec::new();
            for f in frame {
                if rng.gen_bool(0.25) {
                    words.push(noise[rng.gen_range(0..noise.len())].to_string());
                }
                if rng.gen_bool(0.8) {
                    words.push(f.to_string());
                }
            }
            if words.is_empty() {
                words.push("troops".to_string());
            }
            (format!("s{i:03}"), words)
        })
        .collect();
    Lattice::from_sequences("R", &seqs, &ScoringParams::default()).unwrap()
}
