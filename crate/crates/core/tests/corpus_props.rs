use std::path::Path;

use lintext::corpus::{
    corpus_stats, read_split, segment_tokens, word_count, write_split, Dataset, Document, Format, TaskKind,
};
use lintext::features::{Tokenizer, TokenizerConfig};
use proptest::prelude::*;

fn doc_strategy() -> impl Strategy<Value = (Vec<String>, String)> {
    (
        prop::collection::btree_set("[A-Za-z][A-Za-z0-9_.-]{0,6}", 0..4),
        "[a-z0-9 ,.!?']{0,60}",
    )
        .prop_map(|(labels, text)| (labels.into_iter().collect(), text))
}

proptest! {
    #[test]
    fn tsv_round_trip(docs in prop::collection::vec(doc_strategy(), 0..20)) {
        let docs: Vec<Document> = docs
            .into_iter()
            .enumerate()
            .map(|(i, (labels, text))| Document::new((i + 1).to_string(), labels, text))
            .collect();
        let mut buf = Vec::new();
        write_split(&mut buf, &docs, Format::Tsv).unwrap();
        let back = read_split(buf.as_slice(), Path::new("mem"), Format::Tsv).unwrap();
        prop_assert_eq!(back, docs);
    }

    #[test]
    fn segments_respect_limits(n in 0usize..200, max_tokens in 1usize..20, max_segments in 1usize..6) {
        let tokens: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
        let s = segment_tokens(tokens.clone(), max_tokens, max_segments).unwrap();
        prop_assert!(s.segments.len() <= max_segments);
        prop_assert!(s.segments.iter().all(|seg| !seg.is_empty() && seg.len() <= max_tokens));
        let kept: Vec<String> = s.segments.concat();
        prop_assert_eq!(kept.len() + s.dropped, n);
        prop_assert_eq!(&kept[..], &tokens[..kept.len()]);
    }

    #[test]
    fn stats_agree_with_direct_count(
        texts in prop::collection::vec("[a-z ]{0,40}", 1..15),
        budget in 1usize..10,
    ) {
        let train: Vec<Document> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document::new(i.to_string(), ["x"], t.clone()))
            .collect();
        let d = Dataset::new(train, vec![], vec![], TaskKind::MultiClass).unwrap();
        let tok = Tokenizer::new(TokenizerConfig::default()).unwrap();
        let s = corpus_stats(&d, &tok, budget).unwrap();
        let words: Vec<usize> = texts.iter().map(|t| t.split(' ').filter(|w| !w.is_empty()).count()).collect();
        let mean = words.iter().sum::<usize>() as f64 / texts.len() as f64;
        prop_assert!((s.mean_words - mean).abs() < 1e-12);
        prop_assert_eq!(s.max_words, *words.iter().max().unwrap());
        prop_assert!((0.0..=1.0).contains(&s.fraction_over_budget));
        let over = texts.iter().filter(|t| tok.tokens(t).len() > budget).count();
        prop_assert_eq!(s.n_over_budget, over);
        prop_assert_eq!(words.iter().sum::<usize>(), texts.iter().map(|t| word_count(t)).sum::<usize>());
    }
}

#[test]
fn duplicate_ids_rejected() {
    let train = vec![Document::new("1", ["a"], "x"), Document::new("1", ["b"], "y")];
    assert!(Dataset::new(train, vec![], vec![], TaskKind::MultiLabel).is_err());
}

#[test]
fn unseen_test_label_rejected() {
    let train = vec![Document::new("1", ["a"], "x")];
    let test = vec![Document::new("1", ["zzz"], "y")];
    let err = Dataset::new(train, vec![], test, TaskKind::MultiClass).unwrap_err();
    assert!(matches!(err, lintext::Error::UnknownLabel { .. }));
}
