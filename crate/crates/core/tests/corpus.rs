use pivotmt_core::corpus::{
    clean, concat, generate_trilingual, load_stem, stats, write_stem, CleaningConfig,
    ParallelCorpus, Provenance, TrilingualConfig,
};
use proptest::prelude::*;

fn arb_corpus() -> impl Strategy<Value = ParallelCorpus> {
    let sentence = prop::collection::vec("[a-c]{1,2}", 0..10).prop_map(|w| w.join(" "));
    prop::collection::vec((sentence.clone(), sentence), 0..25)
        .prop_map(|pairs| ParallelCorpus::from_strs("ne", "hi", &pairs))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cleaned_corpora_have_no_empty_sentences(c in arb_corpus()) {
        let (cleaned, _) = clean(&c, &CleaningConfig::default());
        prop_assert!(cleaned.pairs.iter().all(|p| !p.src.is_empty() && !p.tgt.is_empty()));
    }

    #[test]
    fn provenance_counts_sum_to_pairs(a in arb_corpus(), b in arb_corpus(), tag in 0usize..4) {
        let mut b = b;
        for p in &mut b.pairs {
            p.provenance = Provenance::ALL[tag];
        }
        let st = stats(&concat(&[&a, &b]).unwrap());
        prop_assert_eq!(st.provenance.values().sum::<usize>(), st.n_pairs);
        prop_assert_eq!(st.n_pairs, a.len() + b.len());
    }

    #[test]
    fn tokens_rejoin_to_normalized_text(text in "[ a-c\t]{0,30}") {
        let s = pivotmt_core::corpus::Sentence::new(text);
        prop_assert_eq!(s.tokens().join(" "), s.normalized());
    }
}

#[test]
fn generation_is_a_pure_function_of_its_config() {
    let cfg = TrilingualConfig {
        n_sentences: 300,
        ..TrilingualConfig::default()
    };
    let a = generate_trilingual(&cfg).unwrap();
    let b = generate_trilingual(&cfg).unwrap();
    assert_eq!(a.src_pivot, b.src_pivot);
    assert_eq!(a.pivot_tgt, b.pivot_tgt);
    assert_eq!(a.pivot_mono, b.pivot_mono);
    let c = generate_trilingual(&TrilingualConfig { seed: 8, ..cfg }).unwrap();
    assert_ne!(a.src_tgt, c.src_tgt);
}

#[test]
fn generated_corpora_survive_a_file_round_trip() {
    let data = generate_trilingual(&TrilingualConfig {
        n_sentences: 200,
        ..TrilingualConfig::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    for corpus in [&data.src_pivot, &data.pivot_tgt, &data.src_tgt] {
        let stem = dir.path().join(format!("{}-{}", corpus.src_lang, corpus.tgt_lang));
        write_stem(corpus, &stem).unwrap();
        let back = load_stem(&stem, corpus.src_lang.clone(), corpus.tgt_lang.clone()).unwrap();
        assert_eq!(&back, corpus);
    }
}
