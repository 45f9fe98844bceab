//! Benchmark harness: quantile queries, percentage thresholds and filter
//! combinations over one corpus, with one row per configuration.
//!
//! CSV columns (schema version 1), in order:
//! `quantile, query_id, query_size, tau_pct, tau, variant, index, upper_bound,
//! engine, threads, timed_out, corpus, candidates, after_lower_bound,
//! accepted_by_upper_bound, after_upper_bound, verified, results,
//! wall_seconds, index_seconds, lower_bound_seconds, upper_bound_seconds,
//! verify_seconds`. The last five are timings; all other columns are
//! deterministic for a fixed corpus and configuration.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{CorpusError, CorpusStore};
use crate::distance::Engine;
use crate::index::{IndexError, JsimIndex, TreeId};
use crate::pipeline::{similarity_lookup, tau_from_percent, LookupOptions};
use crate::synth::{synth_corpus, Profile};

pub const BENCH_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Path(PathBuf),
    Synthetic { profile: Profile, documents: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Variant {
    pub index: bool,
    pub upper_bound: bool,
    pub engine: Engine,
}

impl Variant {
    pub fn name(&self) -> String {
        format!(
            "{}{}-{}",
            if self.index { "index" } else { "scan" },
            if self.upper_bound { "-jofilter" } else { "" },
            match self.engine {
                Engine::Quick => "quickjedi",
                Engine::Baseline => "baseline",
            }
        )
    }

    /// Every combination of index, upper bound and engine.
    pub fn all() -> Vec<Variant> {
        let mut out = Vec::new();
        for index in [true, false] {
            for upper_bound in [true, false] {
                for engine in [Engine::Quick, Engine::Baseline] {
                    out.push(Variant { index, upper_bound, engine });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub dataset: Dataset,
    pub quantiles: Vec<f64>,
    /// Thresholds as percentages of the query size.
    pub tau_percentages: Vec<f64>,
    pub variants: Vec<Variant>,
    pub timeout: Duration,
    /// Seeds synthetic datasets.
    pub seed: u64,
    /// Verification threads per configuration.
    pub threads: usize,
}

impl BenchConfig {
    pub fn new(dataset: Dataset) -> Self {
        BenchConfig {
            dataset,
            quantiles: vec![25.0, 50.0, 75.0],
            tau_percentages: vec![5.0, 10.0, 20.0, 30.0],
            variants: Variant::all(),
            timeout: DEFAULT_TIMEOUT,
            seed: 0,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if let Some(&p) = self.tau_percentages.iter().find(|&&p| !(p > 0.0 && p <= 100.0)) {
            return Err(BenchError::Config(format!("threshold percentage {p} is outside (0, 100]")));
        }
        if let Some(&q) = self.quantiles.iter().find(|&&q| !(0.0..=100.0).contains(&q)) {
            return Err(BenchError::Config(format!("quantile {q} is outside [0, 100]")));
        }
        if self.timeout.is_zero() {
            return Err(BenchError::Config("timeout must be positive".into()));
        }
        if self.variants.is_empty() {
            return Err(BenchError::Config("no variants selected".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("the corpus holds no parseable documents")]
    EmptyCorpus,
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub quantile: f64,
    pub query_id: TreeId,
    pub query_size: usize,
    pub tau_pct: f64,
    pub tau: usize,
    pub variant: String,
    pub index: bool,
    pub upper_bound: bool,
    pub engine: Engine,
    pub threads: usize,
    pub timed_out: bool,
    pub corpus: usize,
    pub candidates: usize,
    pub after_lower_bound: usize,
    pub accepted_by_upper_bound: usize,
    pub after_upper_bound: usize,
    pub verified: usize,
    pub results: usize,
    pub wall_seconds: f64,
    pub index_seconds: f64,
    pub lower_bound_seconds: f64,
    pub upper_bound_seconds: f64,
    pub verify_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub dataset: String,
    pub seed: u64,
    pub corpus_size: usize,
    pub ingest_failures: usize,
    pub index_build_seconds: f64,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_csv(&self) -> Result<String, BenchError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| BenchError::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn load_dataset(dataset: &Dataset, seed: u64) -> Result<CorpusStore, BenchError> {
    Ok(match dataset {
        Dataset::Path(p) => CorpusStore::ingest(p)?,
        Dataset::Synthetic { profile, documents } => {
            CorpusStore::from_texts(synth_corpus(*documents, *profile, seed).documents)
        }
    })
}

pub fn bench_run(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    cfg.validate()?;
    let store = load_dataset(&cfg.dataset, cfg.seed)?;
    bench_store(cfg, &store)
}

/// Runs `cfg` against an already loaded store; the dataset field only
/// labels the report.
pub fn bench_store(cfg: &BenchConfig, store: &CorpusStore) -> Result<BenchReport, BenchError> {
    cfg.validate()?;
    if store.is_empty() {
        return Err(BenchError::EmptyCorpus);
    }
    let clock = Instant::now();
    let mut idx = JsimIndex::new();
    for d in store.documents() {
        idx.insert(d.id, &d.tree)?;
    }
    let index_build_seconds = clock.elapsed().as_secs_f64();

    let mut rows = Vec::new();
    for &quantile in &cfg.quantiles {
        let query_id = store.size_quantile(quantile).expect("store is not empty");
        let tq = store.tree(query_id).expect("quantile ids exist");
        for &pct in &cfg.tau_percentages {
            let tau = tau_from_percent(pct, tq.len());
            for variant in &cfg.variants {
                let opts = LookupOptions {
                    use_index: variant.index,
                    use_label_filter: true,
                    use_upper_bound: variant.upper_bound,
                    engine: variant.engine,
                    exact_distances: false,
                    deadline: Some(Instant::now() + cfg.timeout),
                    threads: cfg.threads,
                };
                let clock = Instant::now();
                let r = similarity_lookup(&idx, store, tq, tau, &opts);
                let wall_seconds = clock.elapsed().as_secs_f64();
                let c = r.counts;
                rows.push(BenchRow {
                    quantile,
                    query_id,
                    query_size: tq.len(),
                    tau_pct: pct,
                    tau,
                    variant: variant.name(),
                    index: variant.index,
                    upper_bound: variant.upper_bound,
                    engine: variant.engine,
                    threads: r.threads,
                    timed_out: r.timed_out,
                    corpus: c.corpus,
                    candidates: c.candidates,
                    after_lower_bound: c.after_lower_bound,
                    accepted_by_upper_bound: c.accepted_by_upper_bound,
                    after_upper_bound: c.after_upper_bound,
                    verified: c.verified,
                    results: c.results,
                    wall_seconds,
                    index_seconds: r.seconds.index,
                    lower_bound_seconds: r.seconds.lower_bound,
                    upper_bound_seconds: r.seconds.upper_bound,
                    verify_seconds: r.seconds.verify,
                });
            }
        }
    }
    Ok(BenchReport {
        schema_version: BENCH_SCHEMA_VERSION,
        dataset: match &cfg.dataset {
            Dataset::Path(p) => p.display().to_string(),
            Dataset::Synthetic { profile, documents } => format!("synth:{}:{}", profile.name(), documents),
        },
        seed: cfg.seed,
        corpus_size: store.len(),
        ingest_failures: store.failures().len(),
        index_build_seconds,
        rows,
    })
}
