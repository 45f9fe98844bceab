use jedi::corpus::CorpusStore;
use jedi::distance::{quickjedi, Engine};
use jedi::index::JsimIndex;
use jedi::pipeline::{linear_scan, linear_scan_with, similarity_lookup, LookupOptions};
use jedi::synth::{synth_corpus, Profile};

fn build(documents: &[String]) -> (JsimIndex, CorpusStore) {
    let store = CorpusStore::from_texts(documents.iter().map(String::as_str));
    let mut idx = JsimIndex::new();
    for d in store.documents() {
        idx.insert(d.id, &d.tree).unwrap();
    }
    (idx, store)
}

#[test]
fn lookup_equals_scan_on_random_corpus() {
    let corpus = synth_corpus(1000, Profile::Mixed, 3);
    let (idx, store) = build(&corpus.documents);
    for q in [5u32, 250, 777] {
        let tq = store.tree(q).unwrap();
        let scan = linear_scan(&store, tq, 5, Engine::Quick);
        for tau in [1, 2, 5] {
            let r = similarity_lookup(&idx, &store, tq, tau, &LookupOptions::default());
            let expected: Vec<u32> = scan.results.iter().filter(|h| h.dist <= tau).map(|h| h.id).collect();
            let mut expected = expected;
            expected.sort_unstable();
            assert_eq!(r.result_ids(), expected, "q={q} tau={tau}");
            for hit in &r.results {
                let d = quickjedi(tq, store.tree(hit.id).unwrap());
                if hit.upper_bound {
                    assert!(d <= hit.dist && hit.dist <= tau);
                } else {
                    assert_eq!(d, hit.dist);
                }
            }
        }
    }
}

#[test]
fn filtered_scan_matches_plain_scan() {
    let corpus = synth_corpus(300, Profile::ArrayHeavy, 8);
    let (_, store) = build(&corpus.documents);
    let tq = store.tree(42).unwrap();
    for tau in [0, 3, 8] {
        let plain = linear_scan(&store, tq, tau, Engine::Baseline);
        let filtered = linear_scan_with(&store, tq, tau, &LookupOptions::default());
        assert_eq!(plain.result_ids(), filtered.result_ids());
        assert_eq!(plain.counts.candidates, store.len());
        assert!(plain.counts.verified >= filtered.counts.verified);
    }
}

#[test]
fn planted_duplicates_are_found() {
    for profile in Profile::ALL {
        let corpus = synth_corpus(400, profile, 11);
        let (idx, store) = build(&corpus.documents);
        assert!(!corpus.planted.is_empty());
        for p in &corpus.planted {
            let tq = store.tree(p.id).unwrap();
            let r = similarity_lookup(&idx, &store, tq, p.budget, &LookupOptions::default());
            assert!(r.result_ids().contains(&p.source), "{profile:?} {p:?}");
        }
    }
}

#[test]
fn missing_documents_are_reported() {
    let corpus = synth_corpus(20, Profile::Deep, 1);
    let (idx, _) = build(&corpus.documents);
    let partial = CorpusStore::from_texts(corpus.documents[..10].iter().map(String::as_str));
    let tq = partial.tree(0).unwrap();
    let r = similarity_lookup(&idx, &partial, tq, 1000, &LookupOptions::default());
    assert_eq!(r.errors.len(), 10);
    assert_eq!(r.result_ids(), (0..10).collect::<Vec<u32>>());
}
