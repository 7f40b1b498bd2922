mod common;

use std::collections::BTreeSet;

use num_rational::Rational64;
use paralattice::cluster::{complete_link_cluster, key_similarity};
use paralattice::corpus::{is_generic_label, mask, CorpusId, NameLexicon, Sentence, TokenKind};
use paralattice::lattice::{find_backbone, induce_slots, NodeKind, SlottedLattice};
use paralattice::matching::{overlap_score, FillerToken};
use paralattice::msa::{align_pair, Lattice, END, START};
use paralattice::{ExactScoringParams, ScoringParams, SimilarityParams, SlottingParams};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::random_cluster_lattice;

fn word() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "c", "d", "e", "NUM", "NAME"]).prop_map(str::to_string)
}

fn seq(max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(word(), 1..=max)
}

fn lattice(seqs: &[Vec<String>]) -> Lattice {
    let named: Vec<(String, Vec<String>)> = seqs
        .iter()
        .enumerate()
        .map(|(i, s)| (format!("s{i:03}"), s.clone()))
        .collect();
    Lattice::from_sequences("P", &named, &ScoringParams::default()).unwrap()
}

/// Start-to-end paths counted by plain recursion.
fn dfs_count(sl: &SlottedLattice, n: usize) -> u64 {
    if n == END {
        return 1;
    }
    sl.successors(n).map(|s| dfs_count(sl, s)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn alignment_reproduces_both_sequences(a in seq(8), b in seq(8)) {
        let al = align_pair(&a, &b, &ExactScoringParams::default()).unwrap();
        prop_assert_eq!(al.left_sequence(), a.clone());
        prop_assert_eq!(al.right_sequence(), b.clone());
        let rescored: Rational64 = al.columns.iter().map(|c| match (&c.left, &c.right) {
            (Some(x), Some(y)) if x == y => Rational64::from_integer(1),
            (Some(_), Some(_)) => Rational64::new(-1, 2),
            _ => Rational64::new(-1, 100),
        }).sum();
        prop_assert_eq!(rescored, al.score);
    }

    #[test]
    fn similarity_is_symmetric_and_bounded(a in seq(10), b in seq(10)) {
        let orders = [1, 2, 3, 4];
        let ab: Rational64 = key_similarity(&a, &b, &orders);
        let ba: Rational64 = key_similarity(&b, &a, &orders);
        prop_assert_eq!(ab, ba);
        prop_assert!(ab >= Rational64::from_integer(0) && ab <= Rational64::from_integer(1));
    }

    #[test]
    fn lattice_paths_reproduce_sentences(seqs in prop::collection::vec(seq(7), 1..8)) {
        let lat = lattice(&seqs);
        prop_assert!(lat.check_invariants().is_ok());
        for (i, s) in seqs.iter().enumerate() {
            let labels = lat.path_labels(&format!("s{i:03}")).unwrap();
            prop_assert_eq!(labels, s.iter().map(String::as_str).collect::<Vec<_>>());
        }
        let total: usize = seqs.iter().map(|s| s.len()).sum();
        let visits: usize = lat.visit_count.iter().skip(2).sum();
        prop_assert_eq!(visits, total);
    }

    #[test]
    fn backbone_nodes_pairwise_cooccur(seqs in prop::collection::vec(seq(6), 2..12)) {
        let lat = lattice(&seqs);
        let bb = find_backbone(&lat, 0.5);
        for (i, &u) in bb.iter().enumerate() {
            for &v in &bb[i + 1..] {
                prop_assert!(lat.paths.values().any(|p| p.contains(&u) && p.contains(&v)));
            }
        }
    }

    #[test]
    fn slotted_lattices_are_well_formed(seqs in prop::collection::vec(seq(6), 2..12)) {
        let lat = lattice(&seqs);
        let sl = induce_slots(&lat, &SlottingParams::default());
        prop_assert!(sl.check_invariants().is_ok(), "{}", sl.to_text());
        let templates = sl.enumerate_templates(100_000);
        prop_assert!(!templates.truncated);
        prop_assert_eq!(templates.templates.len() as u64, dfs_count(&sl, START));
        prop_assert_eq!(sl.path_count(), dfs_count(&sl, START));
        prop_assert_eq!(SlottedLattice::from_text(&sl.to_text()).unwrap(), sl.clone());
    }

    #[test]
    fn backbone_words_survive_slotting(seqs in prop::collection::vec(seq(6), 2..12)) {
        let lat = lattice(&seqs);
        let sl = induce_slots(&lat, &SlottingParams::default());
        let kept: BTreeSet<&str> = sl
            .nodes
            .iter()
            .filter(|n| n.position.is_some())
            .map(|n| n.label.as_str())
            .collect();
        for v in find_backbone(&lat, 0.5) {
            let label = lat.label(v);
            if v == START || v == END || is_generic_label(label) {
                continue;
            }
            prop_assert!(kept.contains(label), "lost backbone word {}", label);
        }
    }

    #[test]
    fn overlap_is_symmetric(a in prop::collection::vec((word(), any::<bool>()), 0..8), b in prop::collection::vec((word(), any::<bool>()), 0..8)) {
        let tok = |(w, named): &(String, bool)| FillerToken::new(w.clone(), if *named { TokenKind::Name } else { TokenKind::Word });
        let a: Vec<FillerToken> = a.iter().map(tok).collect();
        let b: Vec<FillerToken> = b.iter().map(tok).collect();
        prop_assert_eq!(overlap_score::<f64>(&a, &b), overlap_score::<f64>(&b, &a));
        prop_assert!(overlap_score::<f64>(&a, &b) >= 0.0);
    }

    #[test]
    fn masking_is_reversible_and_idempotent(words in prop::collection::vec(prop::sample::select(vec![
        "police", "Ahmed", "Jenin", "12", "March", "3", "Monday", "said", ",", "the", "1,200"
    ]), 1..12)) {
        let text = words.join(" ");
        let raw = Sentence::from_raw(CorpusId::A, "p", 0, &text).unwrap();
        let lexicon = NameLexicon::from_entries([("Ahmed".to_string(), 3), ("Jenin".to_string(), 2)]);
        let masked = mask(&raw, &lexicon);
        prop_assert_eq!(masked.unmask(), raw.tokens.clone());
        prop_assert_eq!(mask(&masked, &lexicon), masked.clone());
    }
}

#[test]
fn complete_link_guarantee() {
    let texts = [
        "troops raided the camp at dawn",
        "troops raided the camp at night",
        "soldiers raided the camp at dawn",
        "stocks fell sharply in early trading",
        "stocks fell sharply in late trading",
        "the minister resigned on monday",
        "troops stormed the camp at dawn",
    ];
    let sentences: Vec<Sentence> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| Sentence::from_raw(CorpusId::A, &format!("a{i}"), 0, t).unwrap())
        .collect();
    let params = SimilarityParams::default();
    let clusters = complete_link_cluster(&sentences, &params);
    let by_id = |id: &str| sentences.iter().find(|s| s.id == id).unwrap().keys();
    for c in &clusters {
        for x in &c.members {
            for y in &c.members {
                let s: f64 = key_similarity(&by_id(x), &by_id(y), &params.orders);
                assert!(s >= params.join_threshold, "{x} / {y}: {s}");
            }
        }
    }
    let total: usize = clusters.iter().map(|c| c.len()).sum();
    assert_eq!(total, texts.len());
}

#[test]
fn generic_backbone_nodes_become_slots_on_random_clusters() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let lat = random_cluster_lattice(&mut rng, 12);
        let sl = induce_slots(&lat, &SlottingParams::default());
        sl.check_invariants().unwrap();
        for n in &sl.nodes {
            if n.position.is_some() {
                assert!(!is_generic_label(&n.label));
                assert!(matches!(n.kind, NodeKind::Backbone | NodeKind::Synonym));
            }
        }
    }
}
