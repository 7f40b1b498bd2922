mod common;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use paralattice::config::Config;
use paralattice::corpus::{mask, ArticlePairs, CorpusId, NameLexicon, Sentence, TokenKind};
use paralattice::generate::{align_sentence, match_sentence, paraphrase, rewrite, SlotBinding};
use paralattice::lattice::{induce_slots, SlottedLattice};
use paralattice::matching::{collect_fillers, match_lattices, FillerToken, LatticeFillers};
use paralattice::model::TrainedModel;
use paralattice::msa::Lattice;
use paralattice::{GenerationParams, MatchParams, ScoringParams, SlottingParams};

use common::*;

fn sentence(corpus: CorpusId, article: &str, text: &str) -> Sentence {
    mask(&Sentence::from_raw(corpus, article, 0, text).unwrap(), &NameLexicon::default())
}

/// Builds the slotted lattice of the given (article, text) sentences.
fn build(corpus: CorpusId, id: &str, items: &[(&str, &str)]) -> (Vec<Sentence>, Lattice, SlottedLattice) {
    let sentences: Vec<Sentence> = items.iter().map(|(a, t)| sentence(corpus, a, t)).collect();
    let seqs: Vec<(String, Vec<String>)> = sentences.iter().map(|s| (s.id.clone(), s.keys())).collect();
    let lat = Lattice::from_sequences(id, &seqs, &ScoringParams::default()).unwrap();
    let sl = induce_slots(&lat, &SlottingParams::default());
    (sentences, lat, sl)
}

fn surfaces(values: &[FillerToken]) -> Vec<&str> {
    values.iter().map(|v| v.surface.as_str()).collect()
}

const BOMBED_A: [(&str, &str); 5] = [
    ("d1", "the plane bombed the town"),
    ("d2", "jets bombed a village"),
    ("d3", "helicopters bombed houses"),
    ("d4", "artillery bombed some camp"),
    ("d5", "gunships bombed nablus"),
];

const BOMBED_B: [(&str, &str); 5] = [
    ("d1", "the town was bombed by the plane"),
    ("d2", "a village was bombed by jets"),
    ("d3", "houses was bombed by helicopters"),
    ("d4", "some camp was bombed by artillery"),
    ("d5", "nablus was bombed by gunships"),
];

#[test]
fn fillers_follow_the_slot_regions() {
    let (sentences, lat, sl) = build(CorpusId::A, "A", &BOMBED_A);
    let t = sl.enumerate_templates(10).templates;
    assert_eq!(t.len(), 1);
    assert_eq!(t[0].to_string(), "SLOT1 bombed SLOT2");
    let records = collect_fillers(&sl, &lat, sentences.iter().map(|s| (s, None)));
    let first: Vec<_> = records.iter().filter(|r| r.sentence_id == sentences[0].id).collect();
    assert_eq!(first.len(), 2);
    assert_eq!(surfaces(&first[0].values), ["the", "plane"]);
    assert_eq!(surfaces(&first[1].values), ["the", "town"]);
}

#[test]
fn masked_fillers_are_unmasked() {
    let lexicon = NameLexicon::from_entries([("Yussef".to_string(), 2)]);
    let texts = [
        "police said Yussef killed 20",
        "police said Yussef killed 3",
        "police said Yussef killed 14",
    ];
    let sentences: Vec<Sentence> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| mask(&Sentence::from_raw(CorpusId::A, &format!("a{i}"), 0, t).unwrap(), &lexicon))
        .collect();
    assert_eq!(sentences[0].keys(), ["police", "said", "NAME", "killed", "NUM"]);
    let seqs: Vec<(String, Vec<String>)> = sentences.iter().map(|s| (s.id.clone(), s.keys())).collect();
    let lat = Lattice::from_sequences("L", &seqs, &ScoringParams::default()).unwrap();
    let sl = induce_slots(&lat, &SlottingParams::default());
    let records = collect_fillers(&sl, &lat, [(&sentences[0], None)]);
    let all: Vec<FillerToken> = records.into_iter().flat_map(|r| r.values).collect();
    assert!(all.contains(&FillerToken::new("Yussef", TokenKind::Name)));
    assert!(all.contains(&FillerToken::new("20", TokenKind::Num)));
}

#[test]
fn backbone_only_sentence_has_no_fillers() {
    let (sentences, lat, sl) = build(CorpusId::A, "A", &[("a", "x y z"), ("b", "x y z"), ("c", "x y z")]);
    assert_eq!(sl.slot_count(), 0);
    assert!(collect_fillers(&sl, &lat, sentences.iter().map(|s| (s, None))).is_empty());
}

fn worked_example() -> paralattice::matching::MatchOutcome<f64> {
    let (sa, la, sla) = build(CorpusId::A, "A", &BOMBED_A);
    let (sb, lb, slb) = build(CorpusId::B, "B", &BOMBED_B);
    let date = NaiveDate::from_ymd_opt(2024, 1, 1);
    let fa = LatticeFillers::new(&sla, &collect_fillers(&sla, &la, sa.iter().map(|s| (s, date))));
    let fb = LatticeFillers::new(&slb, &collect_fillers(&slb, &lb, sb.iter().map(|s| (s, date))));
    assert_eq!(
        slb.enumerate_templates(10).templates[0].to_string(),
        "SLOT1 was bombed by SLOT2"
    );
    let pairs: ArticlePairs = BOMBED_A.iter().map(|(a, _)| (a.to_string(), a.to_string())).collect();
    match_lattices(&[fa], &[fb], &pairs, &MatchParams::default())
}

#[test]
fn worked_example_crosses_the_slots() {
    let out = worked_example();
    assert_eq!(out.pairs.len(), 1);
    let p = &out.pairs[0];
    assert_eq!(p.slot_map, BTreeMap::from([(1, 2), (2, 1)]));
    assert_eq!(p.support, 5);
}

#[test]
fn maps_compose_to_identity() {
    let (sa, la, sla) = build(CorpusId::A, "A", &BOMBED_A);
    let (sb, lb, slb) = build(CorpusId::B, "B", &BOMBED_B);
    let fa = LatticeFillers::new(&sla, &collect_fillers(&sla, &la, sa.iter().map(|s| (s, None))));
    let fb = LatticeFillers::new(&slb, &collect_fillers(&slb, &lb, sb.iter().map(|s| (s, None))));
    let pairs: ArticlePairs = BOMBED_A.iter().map(|(a, _)| (a.to_string(), a.to_string())).collect();
    let swapped: ArticlePairs = pairs.iter().map(|(a, b)| (b.clone(), a.clone())).collect();
    let ab = match_lattices(&[fa.clone()], &[fb.clone()], &pairs, &MatchParams::default());
    let ba = match_lattices(&[fb], &[fa], &swapped, &MatchParams::default());
    let (ab, ba) = (&ab.pairs[0].slot_map, &ba.pairs[0].slot_map);
    for (a, b) in ab {
        assert_eq!(ba[b], *a);
    }
}

#[test]
fn threshold_extremes() {
    let (sa, la, sla) = build(CorpusId::A, "A", &BOMBED_A);
    let (sb, lb, slb) = build(CorpusId::B, "B", &BOMBED_B);
    let fa = LatticeFillers::new(&sla, &collect_fillers(&sla, &la, sa.iter().map(|s| (s, None))));
    let fb = LatticeFillers::new(&slb, &collect_fillers(&slb, &lb, sb.iter().map(|s| (s, None))));
    let pairs: ArticlePairs = [("d1".to_string(), "d1".to_string())].into();
    let never = MatchParams {
        match_threshold: f64::INFINITY,
        min_support: 1,
    };
    assert!(match_lattices(&[fa.clone()], &[fb.clone()], &pairs, &never).pairs.is_empty());
    let always = MatchParams {
        match_threshold: 0.0,
        min_support: 1,
    };
    assert_eq!(match_lattices(&[fa], &[fb], &pairs, &always).pairs.len(), 1);
}

#[test]
fn identical_lattices_pair_with_identity_map() {
    let (sa, la, sla) = build(CorpusId::A, "A", &BOMBED_A);
    let (sb, lb, slb) = build(CorpusId::B, "B", &BOMBED_A);
    let fa = LatticeFillers::new(&sla, &collect_fillers(&sla, &la, sa.iter().map(|s| (s, None))));
    let fb = LatticeFillers::new(&slb, &collect_fillers(&slb, &lb, sb.iter().map(|s| (s, None))));
    let pairs: ArticlePairs = BOMBED_A.iter().map(|(a, _)| (a.to_string(), a.to_string())).collect();
    let out = match_lattices(&[fa], &[fb], &pairs, &MatchParams::default());
    assert_eq!(out.pairs[0].slot_map, BTreeMap::from([(1, 1), (2, 2)]));
}

#[test]
fn overview_sentence_binds_the_arguments() {
    let model = overview_model();
    let input = paralattice::corpus::mask_with(
        &Sentence::from_raw(CorpusId::A, "in", 0, OVERVIEW_INPUT).unwrap(),
        &model.lexicon,
        paralattice::corpus::MaskOptions { mask_unseen_names: true },
    );
    let m = match_sentence(&input, &model.lattices, &model.config.generation::<f64>()).unwrap();
    assert_eq!(m.lattice_id, "A-0000");
    assert_eq!(m.matched_fraction, 1.0);
    let values: Vec<String> = m.binding.values.values().map(|v| v.join(" ")).collect();
    assert_eq!(values, ["the surprise bombing", "twenty", "five"]);
}

#[test]
fn overview_paraphrases_are_exact() {
    let model = overview_model();
    let set = paraphrase(OVERVIEW_INPUT, &model).unwrap();
    assert_eq!(set.outputs, [OVERVIEW_WOUNDED, OVERVIEW_HURT]);
    assert_eq!(set.paths.len(), 2);
}

#[test]
fn unrelated_sentence_does_not_match() {
    let model = overview_model();
    let set = paraphrase("stocks rose across the board", &model).unwrap();
    assert!(set.outputs.is_empty());
    assert!(set.reason.is_some());
}

#[test]
fn training_sentences_round_trip_their_fillers() {
    let data = synthetic("overview.toml", 42);
    let model = train_synthetic(&data, &Config::default());
    let sl = model.lattice("A-0000").unwrap();
    let lexicon = &model.lexicon;
    let p = model.config.generation::<f64>();
    for article in &data.articles_a {
        let s = mask(&article.sentences[0], lexicon);
        let m = align_sentence(&s, sl, &p).unwrap();
        assert_eq!(m.matched_fraction, 1.0, "{}", s.text());
        // Slot 1 holds the phrase before the verb.
        let text = s.text();
        let words: Vec<&str> = text.split(' ').collect();
        let verb = words.iter().position(|w| *w == "injured" || *w == "wounded").unwrap();
        assert_eq!(m.binding.values[&1].join(" "), words[..verb].join(" ").to_lowercase());
    }
}

#[test]
fn sentence_without_partner_reports_reason() {
    let mut model = overview_model();
    model.pairs.clear();
    let set = paraphrase(OVERVIEW_INPUT, &model).unwrap();
    assert!(set.outputs.is_empty());
    assert_eq!(set.lattice.as_deref(), Some("A-0000"));
    assert!(set.reason.unwrap().contains("no paired lattice"));
}

#[test]
fn rewrite_through_identical_lattice_rerenders_input() {
    let model = overview_model();
    let sl = model.lattice("A-0000").unwrap();
    let s = mask(&Sentence::from_raw(CorpusId::A, "x", 0, "The blast injured 30 people, 2 of them seriously").unwrap(), &model.lexicon);
    let p = model.config.generation::<f64>();
    let m = align_sentence(&s, sl, &p).unwrap();
    let identity: BTreeMap<u32, u32> = (1..=3).map(|k| (k, k)).collect();
    let out = rewrite(&m.binding, &identity, sl, &p);
    let texts: Vec<&str> = out.outputs.iter().map(|r| r.text.as_str()).collect();
    assert_eq!(
        texts,
        [
            "The blast injured 30 people, 2 of them seriously",
            "The blast wounded 30 people, 2 of them seriously"
        ]
    );
    for r in &out.outputs {
        assert_eq!(r.text.matches("30").count(), 1);
    }
}

#[test]
fn rewrite_output_count_matches_bound_paths() {
    let model = overview_model();
    let target = model.lattice("B-0000").unwrap();
    let binding = SlotBinding {
        values: BTreeMap::from([(1, vec!["x".to_string()]), (2, vec!["4".to_string()])]),
        spans: BTreeMap::new(),
    };
    let p = GenerationParams::default();
    let all: BTreeMap<u32, u32> = BTreeMap::from([(1, 1), (2, 2)]);
    let out = rewrite(&binding, &all, target, &p);
    // Slot 3 is never bound, so every path is skipped.
    assert!(out.outputs.is_empty());
    assert_eq!(out.skipped, target.enumerate_templates(100).templates.len());
}

#[test]
fn lowering_acceptance_never_loses_a_match() {
    let model = overview_model();
    let input = mask(&Sentence::from_raw(CorpusId::A, "x", 0, "The blast injured many people").unwrap(), &model.lexicon);
    let mut p = model.config.generation::<f64>();
    let mut matched_before = false;
    for t in [1.0, 0.8, 0.6, 0.4, 0.2, 0.05] {
        p.accept_threshold = t;
        let matched = match_sentence(&input, &model.lattices, &p).is_some();
        assert!(matched || !matched_before, "lost match at {t}");
        matched_before |= matched;
    }
    assert!(matched_before);
}

#[test]
fn coverage_counts_planted_sentences() {
    let model = overview_model();
    let mut lines = Vec::new();
    let planted = [
        ("a truck bomb", 11, 3),
        ("a car bomb", 19, 4),
        ("gunfire", 25, 6),
        ("the explosion", 33, 2),
        ("an artillery shell", 14, 7),
        ("heavy shelling", 41, 9),
        ("the collapse", 16, 5),
        ("a landmine", 22, 1),
        ("rubber bullets", 29, 8),
        ("the riot", 35, 3),
        ("a fire", 44, 2),
        ("the crash", 50, 6),
    ];
    for (i, (x, y, z)) in planted.iter().enumerate() {
        let verb = if i % 2 == 0 { "injured" } else { "wounded" };
        let x = format!("{}{}", x[..1].to_uppercase(), &x[1..]);
        lines.push(format!("{x} {verb} {y} people, {z} of them seriously"));
    }
    let topics = ["stocks", "bonds", "the index", "oil prices", "the currency", "gold", "wheat futures", "shares"];
    let moves = ["rose", "fell", "climbed", "slipped", "jumped", "dropped", "edged higher", "steadied", "recovered", "stalled", "surged"];
    for i in 0..88 {
        let t = topics[i % topics.len()];
        let m = moves[i % moves.len()];
        lines.push(format!("{t} {m} on day {} of trading", i + 1));
    }
    let input = lines.join("\n");
    let mut out = Vec::new();
    let coverage = paralattice::cli::cmd_paraphrase(&model, &input, false, &mut out).unwrap();
    assert_eq!((coverage.matched, coverage.total), (12, 100));
    assert_eq!(coverage.fraction(), 0.12);
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 100);
}

#[test]
fn save_load_preserves_outputs() {
    let model = overview_model();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    model.save(&path).unwrap();
    let loaded = TrainedModel::load(&path).unwrap();
    assert_eq!(loaded, model);
    assert_eq!(
        paraphrase(OVERVIEW_INPUT, &loaded).unwrap(),
        paraphrase(OVERVIEW_INPUT, &model).unwrap()
    );
}

#[test]
fn summary_matches_saved_model() {
    let data = synthetic("two_families.toml", 3);
    let dir = tempfile::tempdir().unwrap();
    let (a, b, m) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("m.json"));
    std::fs::write(&a, &data.text_a).unwrap();
    std::fs::write(&b, &data.text_b).unwrap();
    let summary = paralattice::cli::cmd_train(&a, &b, &Config::default(), &m, 2, &mut std::io::sink()).unwrap();
    let model = TrainedModel::load(&m).unwrap();
    assert_eq!(summary.clusters_a, model.clusters.iter().filter(|c| c.corpus == CorpusId::A).count());
    assert_eq!(summary.lattices_b, model.lattices.iter().filter(|l| l.corpus == Some(CorpusId::B)).count());
    assert_eq!(summary.pairs, model.pairs.len());
    assert_eq!((summary.lattices_a, summary.lattices_b, summary.pairs), (2, 2, 2));
    assert!(model.clusters.iter().all(|c| c.size >= model.config.min_cluster_size));
}

#[test]
fn model_records_provenance() {
    let data = synthetic("overview.toml", 42);
    let model = train_synthetic(&data, &Config::default());
    assert_eq!(model.provenance.corpus_a_sha256.len(), 64);
    assert_ne!(model.provenance.corpus_a_sha256, model.provenance.corpus_b_sha256);
    assert_eq!(model.config, Config::default());
}
