use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use newsedits::analytics::corpus_stats;
use newsedits::differ::{diff_corpus, DiffOptions, DEFAULT_BATCH};
use newsedits::ingest::ingest_jsonl;
use newsedits::synth::{generate_corpus, SynthOptions};
use newsedits::tasks::{
    balance, build_task1, build_task2, build_task3, filter_breaking, read_dataset, read_predictions,
    split_by_article, write_dataset, BreakingFilter, Predictor, Task, Task3Options, TaskSource,
};
use newsedits::Store;
use newsedits_core::aligner::{calibrate_threshold, load_fixtures};
use newsedits_core::eval::DEFAULT_RESAMPLES;
use newsedits_core::pipeline::{DiffConfig, PipelineScorer, DEFAULT_THRESHOLD};
use newsedits_core::segmenter::Lemmatizer;
use newsedits_core::SimMethod;

#[derive(Parser)]
#[command(name = "newsedits", version, about = "Sentence-level diffs of news article revisions")]
struct Cli {
    /// SQLite database file.
    #[arg(long, global = true, default_value = "newsedits.db")]
    db: PathBuf,
    /// Worker threads for diffing.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SimArgs {
    /// unigram | ngram:N | embed:PATH | hungarian | bleu:W
    #[arg(long, default_value = "ngram:2")]
    sim: String,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Tab-separated token/lemma overrides.
    #[arg(long)]
    lemmas: Option<PathBuf>,
}

impl SimArgs {
    fn method(&self) -> Result<SimMethod> {
        let lemmatizer = match &self.lemmas {
            Some(p) => Some(Lemmatizer::from_file(p)?),
            None => None,
        };
        Ok(SimMethod::parse(&self.sim, lemmatizer)?)
    }

    fn config(&self) -> Result<DiffConfig> {
        Ok(DiffConfig::new(self.method()?, self.threshold)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load newline-delimited JSON article versions.
    Ingest { files: Vec<PathBuf> },
    /// Diff every adjacent version pair.
    Diff {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = DEFAULT_BATCH)]
        batch: usize,
    },
    /// Corpus statistics as JSON.
    Stats {
        /// Flag corrections on a single lexicon hit.
        #[arg(long)]
        raw_lexicon: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a task dataset (train.jsonl and test.jsonl).
    Taskgen {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        task: u8,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated source allowlist.
        #[arg(long, value_delimiter = ',')]
        sources: Option<Vec<String>>,
        /// Downsample to equal class sizes on this subtask.
        #[arg(long)]
        balance: Option<String>,
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        /// Count an addition only when more than one sentence was added.
        #[arg(long)]
        strict_additions: bool,
    },
    /// Score predictions or a baseline on a task dataset.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, conflicts_with_all = ["train", "random"])]
        predictions: Option<PathBuf>,
        /// Training set for the most-popular baseline.
        #[arg(long, conflicts_with = "random")]
        train: Option<PathBuf>,
        #[arg(long)]
        random: bool,
        #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
        resamples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tune the match threshold on annotated pairs.
    Calibrate {
        #[arg(long)]
        fixtures: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        /// start:end:step, inclusive.
        #[arg(long, default_value = "0:0.95:0.05")]
        grid: String,
    },
    /// Write every table as CSV.
    Export { out: PathBuf },
    /// Write a seeded synthetic corpus as JSONL.
    Synth {
        #[arg(long, default_value_t = 50)]
        articles: usize,
        #[arg(long, default_value_t = 2)]
        min_versions: usize,
        #[arg(long, default_value_t = 5)]
        max_versions: usize,
        out: PathBuf,
    },
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("bad grid {spec:?}"))?;
    let [start, end, step] = parts[..] else { bail!("grid must be start:end:step") };
    if step <= 0.0 || end < start {
        bail!("grid needs step > 0 and end >= start");
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    // round to the step's precision so 0.1 * 3 prints as 0.3
    Ok((0..=n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect())
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let body = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Ingest { files } => {
            let mut store = Store::open(&cli.db)?;
            for f in files {
                let report = ingest_jsonl(&f, &mut store)?;
                for e in &report.errors {
                    eprintln!("{}:{}: {}", f.display(), e.line, e.message);
                }
                println!(
                    "{}: ingested {}, duplicates {}, errors {}",
                    f.display(),
                    report.ingested,
                    report.duplicates,
                    report.errors.len()
                );
            }
        }
        Command::Diff { sim, batch } => {
            let config = sim.config()?;
            let mut store = Store::open(&cli.db)?;
            let mut opts = DiffOptions {
                batch,
                ..DiffOptions::default()
            };
            if let Some(w) = cli.workers {
                opts.workers = w;
            }
            let start = Instant::now();
            let r = diff_corpus(&mut store, &config, &opts)?;
            for (pair, err) in &r.failed {
                eprintln!("{pair}: {err}");
            }
            println!(
                "{} pairs ({}): written {}, unchanged {}, failed {}, stale removed {} in {:.2}s",
                r.pairs,
                config.fingerprint(),
                r.written,
                r.unchanged,
                r.failed.len(),
                r.stale_removed,
                start.elapsed().as_secs_f64()
            );
        }
        Command::Stats { raw_lexicon, out } => {
            let store = Store::open(&cli.db)?;
            emit(&corpus_stats(&store, raw_lexicon)?, out.as_deref())?;
        }
        Command::Taskgen {
            task,
            out,
            sources,
            balance: balance_on,
            test_fraction,
            strict_additions,
        } => {
            let task = Task::from_number(task).expect("range checked by clap");
            let store = Store::open(&cli.db)?;
            let src = TaskSource::load(&store)?;
            let mut filter = BreakingFilter::default();
            if let Some(s) = sources {
                filter.sources = s;
            }
            let keys = filter_breaking(&src, &filter);
            let (mut examples, missing) = match task {
                Task::NextVersion => (build_task1(&src, &keys), 0),
                Task::Counts => {
                    let b = build_task2(&src, &keys);
                    (b.examples, b.missing_successor)
                }
                Task::Sentences => {
                    let b = build_task3(&src, &keys, Task3Options { strict_additions })?;
                    (b.examples, b.missing_successor)
                }
            };
            if let Some(subtask) = balance_on {
                if !task.subtasks().iter().any(|(s, _)| *s == subtask) {
                    bail!("{} has no subtask {subtask:?}", task.name());
                }
                examples = balance(examples, &subtask, None, cli.seed);
            }
            let (train, test) = split_by_article(examples, test_fraction);
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            write_dataset(out.join("train.jsonl"), task, &train)?;
            write_dataset(out.join("test.jsonl"), task, &test)?;
            for note in task.notes() {
                eprintln!("note: {note}");
            }
            println!(
                "{}: {} versions kept, {} without a stored next diff; train {}, test {}",
                task.name(),
                keys.len(),
                missing,
                train.len(),
                test.len()
            );
        }
        Command::Eval {
            dataset,
            predictions,
            train,
            random,
            resamples,
            out,
        } => {
            let test = read_dataset(&dataset)?;
            let predictor = match (predictions, train, random) {
                (Some(p), _, _) => Predictor::File(read_predictions(p)?),
                (None, Some(t), _) => Predictor::MostPopular(read_dataset(t)?),
                (None, None, true) => Predictor::Random,
                _ => bail!("pass one of --predictions, --train or --random"),
            };
            let report = newsedits::tasks::evaluate(&test, &predictor, cli.seed, resamples)?;
            emit(&report, out.as_deref())?;
        }
        Command::Calibrate { fixtures, sim, grid } => {
            let method = sim.method()?;
            let fixtures = load_fixtures(&fixtures)?;
            let cal = calibrate_threshold(&fixtures, &PipelineScorer(&method), &parse_grid(&grid)?)?;
            emit(&cal, None)?;
        }
        Command::Export { out } => {
            let store = Store::open(&cli.db)?;
            for p in store.export_csv(&out)? {
                println!("{}", p.display());
            }
        }
        Command::Synth {
            articles,
            min_versions,
            max_versions,
            out,
        } => {
            let corpus = generate_corpus(&SynthOptions {
                articles,
                min_versions,
                max_versions,
                seed: cli.seed,
                ..SynthOptions::default()
            });
            let mut body = String::new();
            for v in &corpus {
                body.push_str(&serde_json::to_string(v)?);
                body.push('\n');
            }
            fs::write(&out, body).with_context(|| format!("writing {}", out.display()))?;
            println!("{} versions of {articles} articles", corpus.len());
        }
    }
    Ok(())
}
