//! Four-stage similarity lookup: index candidates, label-bag lower bound,
//! ordered upper bound, exact verification.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::CorpusStore;
use crate::distance::{jedi, Engine};
use crate::index::{label_intersection_bound, JsimIndex, LevelCounters, TreeId};
use crate::order::jofilter_with_stats;
use crate::tree::JsonTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LookupOptions {
    /// Without the index every document is a candidate.
    pub use_index: bool,
    /// Without the label filter only the size difference is checked.
    pub use_label_filter: bool,
    pub use_upper_bound: bool,
    pub engine: Engine,
    /// Verify pairs accepted by the upper bound as well.
    pub exact_distances: bool,
    pub deadline: Option<Instant>,
    pub threads: usize,
}

impl Default for LookupOptions {
    fn default() -> Self {
        LookupOptions {
            use_index: true,
            use_label_filter: true,
            use_upper_bound: true,
            engine: Engine::Quick,
            exact_distances: false,
            deadline: None,
            threads: 1,
        }
    }
}

impl LookupOptions {
    /// Plain scan: every document verified with `engine`.
    pub fn scan(engine: Engine) -> Self {
        LookupOptions {
            use_index: false,
            use_label_filter: false,
            use_upper_bound: false,
            engine,
            ..LookupOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LookupResult {
    pub id: TreeId,
    /// Exact distance, or the ordered distance when `upper_bound` is set.
    pub dist: usize,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub upper_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateError {
    pub id: TreeId,
    pub message: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StageCounts {
    pub corpus: usize,
    /// Candidates returned by the index (all documents without it).
    pub candidates: usize,
    /// Candidates left after the lower-bound filter.
    pub after_lower_bound: usize,
    /// Candidates accepted by the upper bound without verification.
    pub accepted_by_upper_bound: usize,
    /// Candidates left for verification.
    pub after_upper_bound: usize,
    pub verified: usize,
    pub results: usize,
}

impl StageCounts {
    pub fn pruned_by_index(&self) -> usize {
        self.corpus - self.candidates
    }

    pub fn pruned_by_lower_bound(&self) -> usize {
        self.candidates - self.after_lower_bound
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageTimes {
    pub index: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub verify: f64,
}

impl StageTimes {
    pub fn total(&self) -> f64 {
        self.index + self.lower_bound + self.upper_bound + self.verify
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LookupReport {
    pub query_id: Option<TreeId>,
    pub query_size: usize,
    pub tau: usize,
    pub counts: StageCounts,
    /// Ascending by distance, then id.
    pub results: Vec<LookupResult>,
    pub errors: Vec<CandidateError>,
    /// Seconds per stage.
    pub seconds: StageTimes,
    pub index_levels: LevelCounters,
    pub timed_out: bool,
    pub threads: usize,
}

impl LookupReport {
    pub fn result_ids(&self) -> Vec<TreeId> {
        let mut ids: Vec<TreeId> = self.results.iter().map(|r| r.id).collect();
        ids.sort_unstable();
        ids
    }
}

/// Threshold for a percentage of the query size, rounding half up. The
/// percentage is given in hundredths of a percent (`1000` = 10 %).
pub fn tau_from_basis_points(basis_points: u32, query_size: usize) -> usize {
    (basis_points as usize * query_size + 5000) / 10000
}

/// Threshold for `pct` percent of the query size, rounding half up.
pub fn tau_from_percent(pct: f64, query_size: usize) -> usize {
    let bp = (pct * 100.0).round().max(0.0) as u32;
    tau_from_basis_points(bp, query_size)
}

/// All documents of `store` within distance `tau` of `tq`.
pub fn similarity_lookup(
    idx: &JsimIndex,
    store: &CorpusStore,
    tq: &JsonTree,
    tau: usize,
    opts: &LookupOptions,
) -> LookupReport {
    run(Some(idx), store, tq, tau, opts)
}

/// Verifies with `engine` every document whose size is within `tau` of the
/// query size.
pub fn linear_scan(store: &CorpusStore, tq: &JsonTree, tau: usize, engine: Engine) -> LookupReport {
    run(None, store, tq, tau, &LookupOptions::scan(engine))
}

/// Scan with the filters of `opts`; the index setting is ignored.
pub fn linear_scan_with(store: &CorpusStore, tq: &JsonTree, tau: usize, opts: &LookupOptions) -> LookupReport {
    run(None, store, tq, tau, &LookupOptions { use_index: false, ..*opts })
}

enum Outcome {
    Accepted(usize),
    Verified(Option<usize>),
    Missing,
    Skipped,
}

fn run(
    idx: Option<&JsimIndex>,
    store: &CorpusStore,
    tq: &JsonTree,
    tau: usize,
    opts: &LookupOptions,
) -> LookupReport {
    let mut report = LookupReport {
        query_id: None,
        query_size: tq.len(),
        tau,
        counts: StageCounts {
            corpus: store.len(),
            ..StageCounts::default()
        },
        results: Vec::new(),
        errors: Vec::new(),
        seconds: StageTimes::default(),
        index_levels: LevelCounters::default(),
        timed_out: false,
        threads: opts.threads.max(1),
    };

    let clock = Instant::now();
    let candidates: Vec<TreeId> = match idx {
        Some(idx) if opts.use_index => {
            let set = idx.lookup(tq, tau);
            report.index_levels = set.counters;
            set.ids
        }
        _ => store.ids().collect(),
    };
    report.counts.candidates = candidates.len();
    report.seconds.index = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let mut survivors = Vec::with_capacity(candidates.len());
    for id in candidates {
        let Some(t) = store.tree(id) else {
            report.errors.push(CandidateError {
                id,
                message: format!("no document with id {id}"),
            });
            continue;
        };
        let bound = if opts.use_label_filter {
            label_intersection_bound(tq, t)
        } else {
            tq.len().abs_diff(t.len())
        };
        if bound <= tau {
            survivors.push(id);
        }
    }
    report.counts.after_lower_bound = survivors.len();
    report.seconds.lower_bound = clock.elapsed().as_secs_f64();

    let sorted_query = opts.use_upper_bound.then(|| tq.sort());
    let expired = |deadline: Option<Instant>| deadline.is_some_and(|d| Instant::now() >= d);
    let evaluate = |id: TreeId| -> (TreeId, Outcome, Duration, Duration) {
        if expired(opts.deadline) {
            return (id, Outcome::Skipped, Duration::ZERO, Duration::ZERO);
        }
        let Some(t) = store.tree(id) else {
            return (id, Outcome::Missing, Duration::ZERO, Duration::ZERO);
        };
        let clock = Instant::now();
        let mut accepted = None;
        if let Some(sq) = &sorted_query {
            let outcome = jofilter_with_stats(sq, &t.sort(), tau);
            if outcome.accepted {
                accepted = outcome.distance;
            }
        }
        let upper = clock.elapsed();
        let clock = Instant::now();
        let outcome = match accepted {
            Some(d) if !opts.exact_distances => Outcome::Accepted(d),
            _ => {
                let d = jedi(tq, t, opts.engine);
                Outcome::Verified((d <= tau).then_some(d))
            }
        };
        (id, outcome, upper, clock.elapsed())
    };

    let clock = Instant::now();
    let outcomes: Vec<(TreeId, Outcome, Duration, Duration)> = if report.threads > 1 {
        match rayon::ThreadPoolBuilder::new().num_threads(report.threads).build() {
            Ok(pool) => pool.install(|| survivors.par_iter().map(|&id| evaluate(id)).collect()),
            Err(_) => survivors.iter().map(|&id| evaluate(id)).collect(),
        }
    } else {
        survivors.iter().map(|&id| evaluate(id)).collect()
    };
    let elapsed = clock.elapsed().as_secs_f64();

    let (mut upper, mut verify) = (Duration::ZERO, Duration::ZERO);
    for (id, outcome, u, v) in outcomes {
        upper += u;
        verify += v;
        match outcome {
            Outcome::Accepted(d) => {
                report.counts.accepted_by_upper_bound += 1;
                report.results.push(LookupResult { id, dist: d, upper_bound: true });
            }
            Outcome::Verified(d) => {
                report.counts.verified += 1;
                if let Some(d) = d {
                    report.results.push(LookupResult { id, dist: d, upper_bound: false });
                }
            }
            Outcome::Missing => report.errors.push(CandidateError {
                id,
                message: format!("no document with id {id}"),
            }),
            Outcome::Skipped => report.timed_out = true,
        }
    }
    report.counts.after_upper_bound = report.counts.after_lower_bound - report.counts.accepted_by_upper_bound;
    // per-candidate times are summed over threads; scale to wall time
    let total = (upper + verify).as_secs_f64();
    if total > 0.0 {
        report.seconds.upper_bound = elapsed * upper.as_secs_f64() / total;
        report.seconds.verify = elapsed * verify.as_secs_f64() / total;
    }
    report.results.sort_unstable_by_key(|r| (r.dist, r.id));
    report.counts.results = report.results.len();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_document;

    const MOVIE_A: &str = r#"{"title": "Star Wars - A New Hope", "running time": 125, "cast": {"Han": "Ford", "Leia": "Fisher"}}"#;
    const MOVIE_B: &str = r#"{"cast": ["Ford", "Fisher"], "running time": 125, "name": "Star Wars - A New Hope"}"#;

    fn indexed(texts: &[&str]) -> (JsimIndex, CorpusStore) {
        let store = CorpusStore::from_texts(texts.iter().copied());
        let mut idx = JsimIndex::new();
        for d in store.documents() {
            idx.insert(d.id, &d.tree).unwrap();
        }
        (idx, store)
    }

    #[test]
    fn movie_pair() {
        let (idx, store) = indexed(&[MOVIE_B]);
        let q = parse_document(MOVIE_A).unwrap();
        let at5 = similarity_lookup(&idx, &store, &q, 5, &LookupOptions::default());
        assert_eq!(at5.results, vec![LookupResult { id: 0, dist: 5, upper_bound: false }]);
        assert_eq!(at5.counts.accepted_by_upper_bound, 0);
        assert_eq!(at5.counts.verified, 1);

        let at4 = similarity_lookup(&idx, &store, &q, 4, &LookupOptions::default());
        assert!(at4.results.is_empty());
        assert_eq!(at4.counts.verified, 1);

        let at8 = similarity_lookup(&idx, &store, &q, 8, &LookupOptions::default());
        assert_eq!(at8.results, vec![LookupResult { id: 0, dist: 8, upper_bound: true }]);
        let exact = LookupOptions {
            exact_distances: true,
            ..LookupOptions::default()
        };
        let at8 = similarity_lookup(&idx, &store, &q, 8, &exact);
        assert_eq!(at8.results, vec![LookupResult { id: 0, dist: 5, upper_bound: false }]);
    }

    #[test]
    fn self_lookup() {
        let (idx, store) = indexed(&[MOVIE_A, MOVIE_B, "[1, 2, 3]"]);
        let q = parse_document(MOVIE_B).unwrap();
        let r = similarity_lookup(&idx, &store, &q, 0, &LookupOptions::default());
        assert_eq!(r.result_ids(), vec![1]);
        assert_eq!(r.results[0].dist, 0);
    }

    #[test]
    fn empty_corpus() {
        let store = CorpusStore::from_texts(Vec::<String>::new());
        let r = linear_scan(&store, &parse_document("1").unwrap(), 3, Engine::Quick);
        assert!(r.results.is_empty());
        assert_eq!(r.counts, StageCounts::default());
    }

    #[test]
    fn size_filter_short_circuits() {
        let store = CorpusStore::from_texts(["[1, 2, 3, 4, 5, 6]", "[[[[[[[[1]]]]]]]]"]);
        let q = parse_document("1").unwrap();
        let opts = LookupOptions {
            use_upper_bound: true,
            ..LookupOptions::scan(Engine::Quick)
        };
        let r = linear_scan_with(&store, &q, 3, &opts);
        assert_eq!(r.counts.verified, 0);
        assert_eq!(r.counts.after_lower_bound, 0);
    }

    #[test]
    fn stage_counts_add_up() {
        let texts: Vec<String> = (0..40)
            .map(|i| format!(r#"{{"a": {}, "b": [{}, "x"], "c": {{"d": {}}}}}"#, i % 3, i % 5, i % 2))
            .collect();
        let (idx, store) = indexed(&texts.iter().map(String::as_str).collect::<Vec<_>>());
        let q = store.tree(7).unwrap().clone();
        for tau in 0..6 {
            let r = similarity_lookup(&idx, &store, &q, tau, &LookupOptions::default());
            let c = r.counts;
            assert!(c.corpus >= c.candidates && c.candidates >= c.after_lower_bound);
            assert_eq!(c.after_lower_bound, c.accepted_by_upper_bound + c.after_upper_bound);
            assert_eq!(c.verified, c.after_upper_bound);
            let scan = linear_scan(&store, &q, tau, Engine::Quick);
            assert_eq!(r.result_ids(), scan.result_ids());
            let parallel = similarity_lookup(
                &idx,
                &store,
                &q,
                tau,
                &LookupOptions {
                    threads: 3,
                    ..LookupOptions::default()
                },
            );
            assert_eq!(parallel.results, r.results);
        }
    }

    #[test]
    fn tau_rounding() {
        assert_eq!(tau_from_percent(30.0, 11), 3);
        assert_eq!(tau_from_percent(5.0, 10), 1);
        assert_eq!(tau_from_percent(10.0, 15), 2);
        assert_eq!(tau_from_percent(10.0, 14), 1);
        assert_eq!(tau_from_basis_points(2500, 2), 1);
    }

    #[test]
    fn expired_deadline_marks_timeout() {
        let (idx, store) = indexed(&[MOVIE_A, MOVIE_B]);
        let q = parse_document(MOVIE_A).unwrap();
        let opts = LookupOptions {
            deadline: Some(Instant::now()),
            ..LookupOptions::default()
        };
        let r = similarity_lookup(&idx, &store, &q, 10, &opts);
        assert!(r.timed_out);
    }
}
