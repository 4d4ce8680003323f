//! Prediction-task datasets and their evaluation.
//!
//! * Task 1: will version `v` be followed by another version?
//! * Task 2: binned counts of additions, deletions, edits and refactors in
//!   the next version.
//! * Task 3: per-sentence operation, refactor direction and whether a
//!   sentence is added above or below it.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use newsedits_core::aligner::{stable_hash, SentenceTag};
use newsedits_core::eval::{EvalReport, MostPopular, RandomBaseline};
use newsedits_core::segmenter::{normalize_text, split_sentences};

use crate::error::{CorpusError, Result};
use crate::model::{DiffRecord, PairKey, RefactorRecord, VersionKey};
use crate::store::Store;

/// Outlets used for the breaking-news tasks.
pub const DEFAULT_SOURCES: &[&str] = &["nytimes", "ap", "washpo", "bbc", "independent", "guardian", "reuters"];

pub const BIN_NOTE: &str =
    "count bins are low=[0,1), medium=[1,3), high=[3,inf); the middle bin is taken as [1,3) so the bins partition the counts";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bin {
    Low,
    Medium,
    High,
}

impl Bin {
    pub fn as_str(self) -> &'static str {
        match self {
            Bin::Low => "low",
            Bin::Medium => "medium",
            Bin::High => "high",
        }
    }
}

pub fn bin_count(k: u64) -> Bin {
    match k {
        0 => Bin::Low,
        1 | 2 => Bin::Medium,
        _ => Bin::High,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "task1")]
    NextVersion,
    #[serde(rename = "task2")]
    Counts,
    #[serde(rename = "task3")]
    Sentences,
}

impl Task {
    pub fn from_number(n: u8) -> Option<Task> {
        match n {
            1 => Some(Task::NextVersion),
            2 => Some(Task::Counts),
            3 => Some(Task::Sentences),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::NextVersion => "task1",
            Task::Counts => "task2",
            Task::Sentences => "task3",
        }
    }

    /// Subtasks and their declared classes, in canonical order.
    pub fn subtasks(self) -> Vec<(&'static str, Vec<&'static str>)> {
        const BINS: [&str; 3] = ["low", "medium", "high"];
        const BOOL: [&str; 2] = ["false", "true"];
        match self {
            Task::NextVersion => vec![("next_version", vec!["0", "1"])],
            Task::Counts => ["additions", "deletions", "edits", "refactors"]
                .into_iter()
                .map(|s| (s, BINS.to_vec()))
                .collect(),
            Task::Sentences => vec![
                ("operation", vec!["deletion", "edit", "unchanged"]),
                ("refactor", vec!["up", "down", "unchanged"]),
                ("addition_above", BOOL.to_vec()),
                ("addition_below", BOOL.to_vec()),
            ],
        }
    }

    pub fn notes(self) -> Vec<String> {
        match self {
            Task::Counts => vec![BIN_NOTE.to_string()],
            _ => Vec::new(),
        }
    }
}

/// One dataset row. Document-level tasks leave `sentence_id` empty; Task 3
/// rows point at one sentence of `sentences`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub example_id: String,
    pub task: Task,
    pub source: String,
    pub a_id: String,
    pub version_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_id: Option<usize>,
    pub sentences: Vec<String>,
    pub labels: BTreeMap<String, Option<String>>,
}

impl Example {
    pub fn label(&self, subtask: &str) -> Option<&str> {
        self.labels.get(subtask).and_then(|l| l.as_deref())
    }
}

#[derive(Debug, Clone)]
pub struct BreakingFilter {
    pub sources: Vec<String>,
    pub min_sentences: usize,
    pub max_sentences: usize,
    /// Exclusive upper bound on `version_id`.
    pub max_version: u32,
}

impl Default for BreakingFilter {
    fn default() -> Self {
        BreakingFilter {
            sources: DEFAULT_SOURCES.iter().map(|s| s.to_string()).collect(),
            min_sentences: 5,
            max_sentences: 15,
            max_version: 20,
        }
    }
}

impl BreakingFilter {
    pub fn admits(&self, source: &str, version_id: u32, sentences: usize) -> bool {
        self.sources.iter().any(|s| s.eq_ignore_ascii_case(source))
            && version_id < self.max_version
            && (self.min_sentences..=self.max_sentences).contains(&sentences)
    }
}

fn segment(text: &str) -> Vec<String> {
    split_sentences(&normalize_text(text)).into_inner()
}

/// Snapshot of everything dataset construction reads from the store.
#[derive(Debug, Default)]
pub struct TaskSource {
    versions: BTreeMap<VersionKey, Vec<String>>,
    successors: HashMap<VersionKey, PairKey>,
    rows: HashMap<PairKey, Vec<DiffRecord>>,
    refactors: HashMap<PairKey, Vec<RefactorRecord>>,
    stats: HashMap<PairKey, PairCounts>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct PairCounts {
    old: usize,
    new: usize,
    added: u64,
    removed: u64,
    changed: u64,
    refactors: u64,
}

impl TaskSource {
    pub fn load(store: &Store) -> Result<Self> {
        let mut src = TaskSource::default();
        for a in store.articles()? {
            src.versions.insert(a.key(), segment(&a.text));
        }
        for pair in store.adjacent_pairs()? {
            src.successors.insert(pair.old_version(), pair);
        }
        for r in store.sentence_diffs()? {
            src.rows.entry(r.pair()).or_default().push(r);
        }
        for r in store.refactors()? {
            src.refactors.entry(r.pair.clone()).or_default().push(r);
        }
        let mut stmt = store.conn().prepare(
            "SELECT SOURCE, A_ID, V_OLD_ID, V_NEW_ID, NUM_SENTENCES_OLD, NUM_SENTENCES_NEW,
                    NUM_SENTENCES_ADDED, NUM_SENTENCES_REMOVED, NUM_SENTENCES_CHANGED, NUM_REFACTORS
             FROM sentence_diff_stats",
        )?;
        let mut rows = stmt.query([])?;
        while let Some(r) = rows.next()? {
            let key = PairKey {
                source: r.get(0)?,
                a_id: r.get(1)?,
                v_old: r.get(2)?,
                v_new: r.get(3)?,
            };
            let get = |i| r.get::<_, i64>(i).map(|v| v as u64);
            src.stats.insert(
                key,
                PairCounts {
                    old: get(4)? as usize,
                    new: get(5)? as usize,
                    added: get(6)?,
                    removed: get(7)?,
                    changed: get(8)?,
                    refactors: get(9)?,
                },
            );
        }
        Ok(src)
    }

    pub fn sentences(&self, key: &VersionKey) -> Option<&[String]> {
        self.versions.get(key).map(Vec::as_slice)
    }

    /// The pair starting at `key`: `Ok(None)` for an article's last version,
    /// `Err(())` when the next version exists but its diff is not stored.
    fn diffed_successor(&self, key: &VersionKey) -> std::result::Result<Option<&PairKey>, ()> {
        match self.successors.get(key) {
            None => Ok(None),
            Some(p) if self.stats.contains_key(p) => Ok(Some(p)),
            Some(_) => Err(()),
        }
    }
}

pub fn filter_breaking(src: &TaskSource, filter: &BreakingFilter) -> Vec<VersionKey> {
    src.versions
        .iter()
        .filter(|(k, s)| filter.admits(&k.source, k.version_id, s.len()))
        .map(|(k, _)| k.clone())
        .collect()
}

fn doc_id(key: &VersionKey) -> String {
    format!("{}/{}/{}", key.source, key.a_id, key.version_id)
}

fn example(task: Task, key: &VersionKey, sentences: Vec<String>) -> Example {
    Example {
        example_id: doc_id(key),
        task,
        source: key.source.clone(),
        a_id: key.a_id.clone(),
        version_id: key.version_id,
        sentence_id: None,
        sentences,
        labels: BTreeMap::new(),
    }
}

/// `next_version` is "1" iff the article has a later stored version.
pub fn build_task1(src: &TaskSource, keys: &[VersionKey]) -> Vec<Example> {
    keys.par_iter()
        .filter_map(|k| {
            let sentences = src.sentences(k)?.to_vec();
            let later = src
                .versions
                .range(k.clone()..)
                .nth(1)
                .is_some_and(|(n, _)| n.source == k.source && n.a_id == k.a_id);
            let mut ex = example(Task::NextVersion, k, sentences);
            ex.labels.insert("next_version".into(), Some(if later { "1" } else { "0" }.into()));
            Some(ex)
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Built {
    pub examples: Vec<Example>,
    /// Last versions, which have nothing to predict.
    pub last_versions: usize,
    /// Keys skipped because the diff to their next version is not stored.
    pub missing_successor: usize,
}

type Outcome = std::result::Result<Option<Vec<Example>>, ()>;

pub fn build_task2(src: &TaskSource, keys: &[VersionKey]) -> Built {
    let results: Vec<Outcome> = keys
        .par_iter()
        .map(|k| {
            let Some(pair) = src.diffed_successor(k)? else { return Ok(None) };
            let c = src.stats[pair];
            let sentences = src.sentences(k).unwrap_or_default().to_vec();
            let mut ex = example(Task::Counts, k, sentences);
            for (name, n) in [
                ("additions", c.added),
                ("deletions", c.removed),
                ("edits", c.changed),
                ("refactors", c.refactors),
            ] {
                ex.labels.insert(name.into(), Some(bin_count(n).as_str().into()));
            }
            Ok(Some(vec![ex]))
        })
        .collect();
    collect_built(keys, results)
}

fn collect_built(keys: &[VersionKey], results: Vec<Outcome>) -> Built {
    let mut built = Built::default();
    for (k, r) in keys.iter().zip(results) {
        match r {
            Ok(Some(exs)) => built.examples.extend(exs),
            Ok(None) => built.last_versions += 1,
            Err(()) => {
                log::warn!("{k}: no stored diff to the next version, skipped");
                built.missing_successor += 1;
            }
        }
    }
    built
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Task3Options {
    /// Require more than one added sentence instead of at least one.
    pub strict_additions: bool,
}

/// Per-old-sentence labels of one pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SentenceLabels {
    pub operation: &'static str,
    pub refactor: &'static str,
    pub addition_above: Option<bool>,
    pub addition_below: Option<bool>,
}

/// Derives Task 3 labels from serialized tags and the removed edges of one
/// pair. `tags_old` and `tags_new` are the tag columns cut to each side's
/// length.
pub fn task3_labels(
    tags_old: &[SentenceTag],
    tags_new: &[SentenceTag],
    refactors: &[(usize, usize, String)],
    opts: Task3Options,
) -> Vec<SentenceLabels> {
    let added: Vec<usize> = tags_new
        .iter()
        .enumerate()
        .filter(|(_, t)| **t == SentenceTag::Added)
        .map(|(j, _)| j + 1)
        .collect();
    let anchors: Vec<Option<usize>> = tags_old.iter().map(|t| t.indices().iter().copied().min()).collect();
    let between = |a: usize, b: usize| {
        let (lo, hi) = (a.min(b), a.max(b));
        let n = added.iter().filter(|&&k| lo < k && k < hi).count();
        if opts.strict_additions {
            n > 1
        } else {
            n >= 1
        }
    };
    let end = tags_new.len() + 1;
    tags_old
        .iter()
        .enumerate()
        .map(|(i, tag)| {
            let operation = match tag {
                SentenceTag::Removed => "deletion",
                t if t.is_changed_match() => "edit",
                _ => "unchanged",
            };
            let refactor = refactors
                .iter()
                .find(|(o, _, _)| *o == i + 1)
                .map_or("unchanged", |(_, _, d)| if d == "up" { "up" } else { "down" });
            let (above, below) = match anchors[i] {
                None => (None, None),
                Some(a) => {
                    let prev = anchors[..i].iter().rev().flatten().next().copied().unwrap_or(0);
                    let next = anchors[i + 1..].iter().flatten().next().copied().unwrap_or(end);
                    (Some(between(prev, a)), Some(between(a, next)))
                }
            };
            SentenceLabels {
                operation,
                refactor,
                addition_above: above,
                addition_below: below,
            }
        })
        .collect()
}

fn parse_tags(rows: &[DiffRecord], n: usize, old_side: bool) -> Result<Vec<SentenceTag>> {
    rows.iter()
        .take(n)
        .map(|r| {
            let t = if old_side { &r.tag_old } else { &r.tag_new };
            t.parse::<SentenceTag>()
                .map_err(|e| CorpusError::Invalid(format!("{}: bad tag {t:?}: {e}", r.pair())))
        })
        .collect()
}

pub fn build_task3(src: &TaskSource, keys: &[VersionKey], opts: Task3Options) -> Result<Built> {
    let results: Vec<Result<Outcome>> = keys
        .par_iter()
        .map(|k| {
            let pair = match src.diffed_successor(k) {
                Ok(Some(p)) => p,
                Ok(None) => return Ok(Ok(None)),
                Err(()) => return Ok(Err(())),
            };
            let c = src.stats[pair];
            let rows = src.rows.get(pair).map(Vec::as_slice).unwrap_or_default();
            let tags_old = parse_tags(rows, c.old, true)?;
            let tags_new = parse_tags(rows, c.new, false)?;
            let refactors: Vec<(usize, usize, String)> = src
                .refactors
                .get(pair)
                .into_iter()
                .flatten()
                .map(|r| (r.old_idx as usize, r.new_idx as usize, r.direction.clone()))
                .collect();
            let sentences: Vec<String> = rows.iter().take(c.old).map(|r| r.sent_old.clone()).collect();
            let labels = task3_labels(&tags_old, &tags_new, &refactors, opts);
            let bool_label = |b: Option<bool>| b.map(|b| b.to_string());
            Ok(Ok(Some(
                labels
                    .into_iter()
                    .enumerate()
                    .map(|(i, l)| {
                        let mut ex = example(Task::Sentences, k, sentences.clone());
                        ex.example_id = format!("{}/{}", doc_id(k), i + 1);
                        ex.sentence_id = Some(i + 1);
                        ex.labels.insert("operation".into(), Some(l.operation.into()));
                        ex.labels.insert("refactor".into(), Some(l.refactor.into()));
                        ex.labels.insert("addition_above".into(), bool_label(l.addition_above));
                        ex.labels.insert("addition_below".into(), bool_label(l.addition_below));
                        ex
                    })
                    .collect(),
            )))
        })
        .collect();
    Ok(collect_built(keys, results.into_iter().collect::<Result<_>>()?))
}

/// Downsamples so that every label of `subtask` keeps at most `cap`
/// examples (the smallest class size when `cap` is `None`). Examples
/// without that label are dropped. Output keeps the input order.
pub fn balance(examples: Vec<Example>, subtask: &str, cap: Option<usize>, seed: u64) -> Vec<Example> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, ex) in examples.iter().enumerate() {
        if let Some(l) = ex.label(subtask) {
            groups.entry(l.to_string()).or_default().push(i);
        }
    }
    let limit = cap.unwrap_or_else(|| groups.values().map(Vec::len).min().unwrap_or(0));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; examples.len()];
    for idx in groups.values_mut() {
        idx.shuffle(&mut rng);
        for &i in idx.iter().take(limit) {
            keep[i] = true;
        }
    }
    examples
        .into_iter()
        .zip(keep)
        .filter_map(|(e, k)| k.then_some(e))
        .collect()
}

/// Splits by article so no article lands on both sides; the test side gets
/// `ceil(fraction * articles)` articles chosen by a stable hash.
pub fn split_by_article(examples: Vec<Example>, test_fraction: f64) -> (Vec<Example>, Vec<Example>) {
    let mut articles: Vec<(u64, String)> = examples
        .iter()
        .map(|e| format!("{}/{}", e.source, e.a_id))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|a| (stable_hash(&a), a))
        .collect();
    articles.sort();
    let n_test = (test_fraction.clamp(0.0, 1.0) * articles.len() as f64).ceil() as usize;
    let test: std::collections::BTreeSet<String> = articles.into_iter().take(n_test).map(|(_, a)| a).collect();
    examples
        .into_iter()
        .partition(|e| !test.contains(&format!("{}/{}", e.source, e.a_id)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub task: Task,
    pub examples: usize,
    pub classes: BTreeMap<String, Vec<String>>,
    pub notes: Vec<String>,
}

pub fn meta_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

/// Writes examples as JSONL plus a `.meta.json` sidecar with class lists.
pub fn write_dataset(path: impl AsRef<Path>, task: Task, examples: &[Example]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for ex in examples {
        serde_json::to_writer(&mut w, ex)?;
        w.write_all(b"\n").map_err(|e| CorpusError::io(path, e))?;
    }
    w.flush().map_err(|e| CorpusError::io(path, e))?;
    let meta = DatasetMeta {
        task,
        examples: examples.len(),
        classes: task
            .subtasks()
            .into_iter()
            .map(|(s, c)| (s.to_string(), c.into_iter().map(String::from).collect()))
            .collect(),
        notes: task.notes(),
    };
    let mp = meta_path(path);
    std::fs::write(&mp, serde_json::to_string_pretty(&meta)? + "\n").map_err(|e| CorpusError::io(mp, e))?;
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| CorpusError::Invalid(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<Example>> {
    read_jsonl(path.as_ref())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub example_id: String,
    pub subtask: String,
    pub predicted_label: String,
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    read_jsonl(path.as_ref())
}

pub enum Predictor {
    /// Labels from a predictions file.
    File(Vec<Prediction>),
    /// Modal class of each subtask in a training set.
    MostPopular(Vec<Example>),
    Random,
}

impl Predictor {
    fn name(&self) -> &'static str {
        match self {
            Predictor::File(_) => "predictions",
            Predictor::MostPopular(_) => "most_popular",
            Predictor::Random => "random",
        }
    }
}

/// Scores a predictor on every subtask of a single-task dataset.
pub fn evaluate(test: &[Example], predictor: &Predictor, seed: u64, resamples: usize) -> Result<EvalReport> {
    let task = test
        .first()
        .map(|e| e.task)
        .ok_or_else(|| CorpusError::Invalid("evaluation set is empty".into()))?;
    if test.iter().any(|e| e.task != task) {
        return Err(CorpusError::Invalid("evaluation set mixes tasks".into()));
    }
    let lookup: HashMap<(&str, &str), &str> = match predictor {
        Predictor::File(p) => p
            .iter()
            .map(|p| ((p.example_id.as_str(), p.subtask.as_str()), p.predicted_label.as_str()))
            .collect(),
        _ => HashMap::new(),
    };
    let mut report = EvalReport::new(predictor.name(), seed, resamples);
    report.notes = task.notes();
    for (subtask, classes) in task.subtasks() {
        let scored: Vec<&Example> = test.iter().filter(|e| e.label(subtask).is_some()).collect();
        if scored.is_empty() {
            continue;
        }
        let golds: Vec<&str> = scored.iter().map(|e| e.label(subtask).expect("filtered")).collect();
        let preds: Vec<String> = match predictor {
            Predictor::File(_) => {
                let mut missing = 0;
                let preds = scored
                    .iter()
                    .map(|e| match lookup.get(&(e.example_id.as_str(), subtask)) {
                        Some(l) => l.to_string(),
                        None => {
                            missing += 1;
                            String::new()
                        }
                    })
                    .collect();
                if missing > 0 {
                    return Err(CorpusError::Invalid(format!(
                        "{missing} example(s) have no {subtask} prediction"
                    )));
                }
                preds
            }
            Predictor::MostPopular(train) => {
                let labels: Vec<&str> = train.iter().filter_map(|e| e.label(subtask)).collect();
                MostPopular::fit(&labels, &classes)?.predict(scored.len())
            }
            Predictor::Random => RandomBaseline::new(&classes, seed)?.predict(scored.len()),
        };
        let preds: Vec<&str> = preds.iter().map(String::as_str).collect();
        report.add_subtask(subtask, &preds, &golds, &classes)?;
    }
    Ok(report)
}
