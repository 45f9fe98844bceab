use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use jedi::bench::{bench_run, BenchConfig, Dataset, Variant, DEFAULT_TIMEOUT};
use jedi::corpus::CorpusStore;
use jedi::distance::{jedi_with_stats, Engine};
use jedi::index::JsimIndex;
use jedi::oracle::{min_mapping_with_limit, ConstraintSet, DEFAULT_SIZE_LIMIT};
use jedi::order::{jedi_order_exact, jofilter_with_stats};
use jedi::pipeline::{linear_scan_with, similarity_lookup, tau_from_percent, LookupOptions};
use jedi::synth::{synth_corpus, Profile};
use jedi::JsonTree;

#[derive(Parser)]
#[command(name = "jedi", version, about = "JSON similarity lookup under the JSON edit distance")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Seed for synthetic data.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for candidate verification.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write data here instead of standard output.
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Edit distance between two documents.
    Dist {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "quick")]
        engine: Engine,
        /// Report matching counts.
        #[arg(long)]
        stats: bool,
    },
    /// Decide whether the ordered distance of the sorted documents is within tau.
    Ubound {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        tau: usize,
        /// Also compute the exact ordered distance.
        #[arg(long)]
        exact: bool,
    },
    #[command(subcommand)]
    Index(IndexCommand),
    /// Find corpus documents within tau of a query document.
    Lookup {
        index: PathBuf,
        corpus: PathBuf,
        query: PathBuf,
        #[arg(long, conflicts_with = "tau_pct", required_unless_present = "tau_pct")]
        tau: Option<usize>,
        /// Threshold as a percentage of the query size.
        #[arg(long)]
        tau_pct: Option<f64>,
        /// Print a stats object after the results.
        #[arg(long)]
        stats: bool,
        /// Ignore the index and scan the corpus.
        #[arg(long)]
        scan: bool,
        /// Verify pairs accepted by the upper bound.
        #[arg(long)]
        exact_dist: bool,
        #[arg(long, default_value = "quick")]
        engine: Engine,
    },
    /// Run the benchmark matrix over a corpus.
    Bench {
        /// JSON Lines file or directory of .json files.
        #[arg(long, conflicts_with = "synth")]
        dataset: Option<PathBuf>,
        /// Generate a corpus of this profile instead.
        #[arg(long)]
        synth: Option<Profile>,
        #[arg(long, default_value_t = 1000)]
        docs: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [25.0, 50.0, 75.0])]
        quantiles: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [5.0, 10.0, 20.0, 30.0])]
        tau_pct: Vec<f64>,
        /// Variant names such as index-jofilter-quickjedi; all by default.
        #[arg(long, value_delimiter = ',')]
        variants: Vec<String>,
        /// Seconds per configuration.
        #[arg(long, default_value_t = DEFAULT_TIMEOUT.as_secs_f64())]
        timeout: f64,
    },
    /// Generate a synthetic JSON Lines corpus.
    Synth {
        #[arg(long, default_value_t = 1000)]
        docs: usize,
        #[arg(long, default_value = "mixed")]
        profile: Profile,
        /// Write the planted near-duplicates here as JSON Lines.
        #[arg(long)]
        planted: Option<PathBuf>,
    },
    /// Minimum mapping by exhaustive search (small documents only).
    #[command(hide = true)]
    Oracle {
        a: PathBuf,
        b: PathBuf,
        /// Require totally ordered siblings (inputs are sorted first).
        #[arg(long)]
        order: bool,
        #[arg(long, default_value_t = DEFAULT_SIZE_LIMIT)]
        limit: usize,
    },
}

#[derive(Subcommand)]
enum IndexCommand {
    /// Index a corpus and write a snapshot (requires -o).
    Build { corpus: PathBuf },
    /// Entry counts of a snapshot.
    Stats { index: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn read_tree(path: &Path) -> Result<JsonTree> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    JsonTree::parse(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn load_store(path: &Path) -> Result<CorpusStore> {
    let store = CorpusStore::ingest(path)?;
    for f in store.failures() {
        match &f.file {
            Some(file) => eprintln!("warning: skipped {}: {}", file.display(), f.message),
            None => eprintln!("warning: skipped line {}: {}", f.line, f.message),
        }
    }
    Ok(store)
}

fn load_index(path: &Path) -> Result<JsimIndex> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    JsimIndex::load(&bytes).with_context(|| format!("cannot load index {}", path.display()))
}

struct Sink {
    out: Box<dyn Write>,
    format: Format,
}

impl Sink {
    fn open(g: &Global) -> Result<Self> {
        let out: Box<dyn Write> = match &g.output {
            Some(p) => Box::new(io::BufWriter::new(
                fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
            )),
            None => Box::new(io::BufWriter::new(io::stdout().lock())),
        };
        Ok(Sink { out, format: g.format })
    }

    /// One JSON object per line, or CSV with a header.
    fn records<T: Serialize>(&mut self, rows: &[T]) -> Result<()> {
        match self.format {
            Format::Json => {
                for r in rows {
                    serde_json::to_writer(&mut self.out, r)?;
                    writeln!(self.out)?;
                }
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(&mut self.out);
                for r in rows {
                    w.serialize(r)?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }

    fn raw(&mut self, text: &str) -> Result<()> {
        self.out.write_all(text.as_bytes())?;
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
struct DistRow {
    distance: usize,
    engine: Engine,
    size_a: usize,
    size_b: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    matchings_needed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matchings_computed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matchings_skipped: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    aggregate_skips: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    greedy_skips: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    greedy_exact: Option<u64>,
}

#[derive(Serialize)]
struct UboundRow {
    accepted: bool,
    tau: usize,
    cells: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    jedi_order: Option<usize>,
}

#[derive(Serialize)]
struct StatsRow {
    trees: u64,
    removed: u64,
    nodes: u64,
    labels: u64,
    desc_keys: u64,
    anc_keys: u64,
    lr_keys: u64,
    postings: u64,
}

#[derive(Serialize)]
struct HitRow {
    id: u32,
    dist: usize,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    upper_bound: bool,
}

#[derive(Serialize)]
struct OracleRow {
    cost: usize,
    pairs: Vec<(usize, usize)>,
}

fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    match cli.command {
        Command::Dist { a, b, engine, stats } => {
            let (t1, t2) = (read_tree(&a)?, read_tree(&b)?);
            let (distance, s) = jedi_with_stats(&t1, &t2, engine);
            let row = DistRow {
                distance,
                engine,
                size_a: t1.len(),
                size_b: t2.len(),
                matchings_needed: stats.then_some(s.matchings_needed),
                matchings_computed: stats.then_some(s.sed + s.bpm),
                matchings_skipped: stats.then_some(s.skipped()),
                aggregate_skips: stats.then_some(s.aggregate_skips),
                greedy_skips: stats.then_some(s.greedy_skips),
                greedy_exact: stats.then_some(s.greedy_exact),
            };
            let mut sink = Sink::open(&g)?;
            sink.records(&[row])?;
            sink.finish()
        }
        Command::Ubound { a, b, tau, exact } => {
            let (t1, t2) = (read_tree(&a)?.sort(), read_tree(&b)?.sort());
            let outcome = jofilter_with_stats(&t1, &t2, tau);
            let jedi_order = if exact { Some(jedi_order_exact(&t1, &t2)?) } else { None };
            let mut sink = Sink::open(&g)?;
            sink.records(&[UboundRow {
                accepted: outcome.accepted,
                tau,
                cells: outcome.cells,
                jedi_order,
            }])?;
            sink.finish()
        }
        Command::Index(IndexCommand::Build { corpus }) => {
            let Some(out) = &g.output else {
                bail!("index build needs -o <index file>");
            };
            let store = load_store(&corpus)?;
            let mut idx = JsimIndex::new();
            for d in store.documents() {
                idx.insert(d.id, &d.tree)?;
            }
            fs::write(out, idx.save()).with_context(|| format!("cannot write {}", out.display()))?;
            let s = store.summary();
            eprintln!("indexed {} documents ({} nodes, {} skipped)", s.documents, s.nodes, s.failures);
            Ok(())
        }
        Command::Index(IndexCommand::Stats { index }) => {
            let s = load_index(&index)?.stats();
            let mut sink = Sink::open(&g)?;
            sink.records(&[StatsRow {
                trees: s.trees,
                removed: s.removed,
                nodes: s.nodes,
                labels: s.labels,
                desc_keys: s.desc_keys,
                anc_keys: s.anc_keys,
                lr_keys: s.lr_keys,
                postings: s.postings,
            }])?;
            sink.finish()
        }
        Command::Lookup {
            index,
            corpus,
            query,
            tau,
            tau_pct,
            stats,
            scan,
            exact_dist,
            engine,
        } => {
            let idx = load_index(&index)?;
            let store = load_store(&corpus)?;
            let tq = read_tree(&query)?;
            let tau = match (tau, tau_pct) {
                (Some(t), _) => t,
                (None, Some(p)) if p > 0.0 && p <= 100.0 => tau_from_percent(p, tq.len()),
                (None, Some(p)) => bail!("--tau-pct {p} is outside (0, 100]"),
                (None, None) => bail!("either --tau or --tau-pct is required"),
            };
            let opts = LookupOptions {
                engine,
                exact_distances: exact_dist,
                threads: g.threads,
                ..LookupOptions::default()
            };
            let report = if scan {
                linear_scan_with(&store, &tq, tau, &opts)
            } else {
                similarity_lookup(&idx, &store, &tq, tau, &opts)
            };
            for e in &report.errors {
                eprintln!("warning: candidate {}: {}", e.id, e.message);
            }
            let hits: Vec<HitRow> = report
                .results
                .iter()
                .map(|r| HitRow { id: r.id, dist: r.dist, upper_bound: r.upper_bound })
                .collect();
            let mut sink = Sink::open(&g)?;
            sink.records(&hits)?;
            if stats {
                match g.format {
                    Format::Json => {
                        #[derive(Serialize)]
                        struct Stats<'a> {
                            stats: &'a jedi::pipeline::LookupReport,
                        }
                        sink.raw(&serde_json::to_string(&Stats { stats: &report })?)?;
                        sink.raw("\n")?;
                    }
                    // CSV output keeps one table; stats go to standard error
                    Format::Csv => eprintln!("{}", serde_json::to_string(&report.counts)?),
                }
            }
            sink.finish()
        }
        Command::Bench {
            dataset,
            synth,
            docs,
            quantiles,
            tau_pct,
            variants,
            timeout,
        } => {
            let dataset = match (dataset, synth) {
                (Some(p), _) => Dataset::Path(p),
                (None, Some(profile)) => Dataset::Synthetic { profile, documents: docs },
                (None, None) => bail!("bench needs --dataset <path> or --synth <profile>"),
            };
            let variants = if variants.is_empty() {
                Variant::all()
            } else {
                let all = Variant::all();
                variants
                    .iter()
                    .map(|name| {
                        all.iter()
                            .find(|v| v.name() == *name)
                            .copied()
                            .with_context(|| format!("unknown variant {name:?}"))
                    })
                    .collect::<Result<_>>()?
            };
            if !(timeout > 0.0 && timeout.is_finite()) {
                bail!("--timeout must be a positive number of seconds");
            }
            let cfg = BenchConfig {
                dataset,
                quantiles,
                tau_percentages: tau_pct,
                variants,
                timeout: Duration::from_secs_f64(timeout),
                seed: g.seed,
                threads: g.threads,
            };
            let report = bench_run(&cfg)?;
            let mut sink = Sink::open(&g)?;
            match g.format {
                Format::Json => {
                    sink.raw(&serde_json::to_string_pretty(&report)?)?;
                    sink.raw("\n")?;
                }
                Format::Csv => sink.raw(&report.to_csv()?)?,
            }
            sink.finish()
        }
        Command::Synth { docs, profile, planted } => {
            let corpus = synth_corpus(docs, profile, g.seed);
            if let Some(p) = planted {
                let mut text = String::new();
                for d in &corpus.planted {
                    text.push_str(&serde_json::to_string(d)?);
                    text.push('\n');
                }
                fs::write(&p, text).with_context(|| format!("cannot write {}", p.display()))?;
            }
            let mut sink = Sink::open(&g)?;
            sink.raw(&corpus.to_jsonl())?;
            sink.finish()
        }
        Command::Oracle { a, b, order, limit } => {
            let (mut t1, mut t2) = (read_tree(&a)?, read_tree(&b)?);
            let constraints = if order {
                t1 = t1.sort();
                t2 = t2.sort();
                ConstraintSet::JEDI_ORDER
            } else {
                ConstraintSet::JEDI
            };
            let m = min_mapping_with_limit(&t1, &t2, constraints, limit)?;
            let mut sink = Sink::open(&g)?;
            match g.format {
                Format::Json => sink.records(&[OracleRow { cost: m.cost, pairs: m.pairs }])?,
                Format::Csv => {
                    #[derive(Serialize)]
                    struct Pair {
                        cost: usize,
                        left: usize,
                        right: usize,
                    }
                    let rows: Vec<Pair> = m
                        .pairs
                        .iter()
                        .map(|&(left, right)| Pair { cost: m.cost, left, right })
                        .collect();
                    sink.records(&rows)?;
                }
            }
            sink.finish()
        }
    }
}
