//! Corpus-wide diffing: a worker pool computes pair outputs, one writer
//! commits them batch by batch.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use newsedits_core::pipeline::{diff_texts, DiffConfig};

use crate::error::{CorpusError, Result};
use crate::model::{PairKey, VersionKey};
use crate::store::{PairOutput, Store};

pub const DEFAULT_BATCH: usize = 256;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DiffReport {
    pub pairs: usize,
    pub written: usize,
    pub unchanged: usize,
    pub failed: Vec<(String, String)>,
    pub stale_removed: usize,
}

impl DiffReport {
    /// Pairs that now have stored diffs.
    pub fn processed(&self) -> usize {
        self.written + self.unchanged
    }
}

#[derive(Debug, Clone)]
pub struct DiffOptions {
    pub workers: usize,
    pub batch: usize,
}

impl Default for DiffOptions {
    fn default() -> Self {
        DiffOptions {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            batch: DEFAULT_BATCH,
        }
    }
}

/// Diffs one pair of texts into its stored form.
pub fn diff_pair(old: &str, new: &str, config: &DiffConfig) -> Result<PairOutput> {
    let diff = diff_texts(old, new, config)?;
    Ok(PairOutput::from_diff(&diff, &config.fingerprint()))
}

/// Diffs every adjacent version pair. Pairs whose output fingerprint is
/// already stored are left untouched, so a rerun with the same config does
/// not modify the database file.
pub fn diff_corpus(store: &mut Store, config: &DiffConfig, opts: &DiffOptions) -> Result<DiffReport> {
    let pairs = store.adjacent_pairs()?;
    let known = store.fingerprints()?;
    let texts: HashMap<VersionKey, String> = store.articles()?.into_iter().map(|a| (a.key(), a.text)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| CorpusError::Invalid(format!("worker pool: {e}")))?;

    let mut report = DiffReport {
        pairs: pairs.len(),
        ..DiffReport::default()
    };
    for chunk in pairs.chunks(opts.batch.max(1)) {
        let results: Vec<(PairKey, Result<PairOutput>)> = pool.install(|| {
            chunk
                .par_iter()
                .map(|key| {
                    let out = match (texts.get(&key.old_version()), texts.get(&key.new_version())) {
                        (Some(o), Some(n)) => diff_pair(o, n, config),
                        _ => Err(CorpusError::Invalid("version text missing".into())),
                    };
                    (key.clone(), out)
                })
                .collect()
        });
        let mut to_write = Vec::new();
        for (key, out) in results {
            match out {
                Ok(out) => {
                    if known.get(&key).is_some_and(|fp| *fp == out.fingerprint()) {
                        report.unchanged += 1;
                    } else {
                        to_write.push((key, out));
                    }
                }
                Err(e) => {
                    log::error!("pair {key}: {e}");
                    report.failed.push((key.to_string(), e.to_string()));
                }
            }
        }
        report.written += to_write.len();
        store.write_pairs(&to_write)?;
    }

    let live: BTreeSet<&PairKey> = pairs.iter().collect();
    let stale: Vec<PairKey> = known.keys().filter(|k| !live.contains(k)).cloned().collect();
    report.stale_removed = stale.len();
    store.remove_pairs(&stale)?;

    let bad = row_count_violations(store)?;
    if !bad.is_empty() {
        return Err(CorpusError::Invalid(format!(
            "row-count invariant violated for {} pair(s), first {}",
            bad.len(),
            bad[0]
        )));
    }
    Ok(report)
}

/// Pairs whose `sentence_diffs` row count differs from `max(|old|, |new|)`.
pub fn row_count_violations(store: &Store) -> Result<Vec<PairKey>> {
    let mut stmt = store.conn().prepare(
        "SELECT s.SOURCE, s.A_ID, s.V_OLD_ID, s.V_NEW_ID
         FROM sentence_diff_stats s
         LEFT JOIN (SELECT SOURCE, A_ID, V_OLD_ID, V_NEW_ID, COUNT(*) AS n FROM sentence_diffs
                    GROUP BY SOURCE, A_ID, V_OLD_ID, V_NEW_ID) d
           USING (SOURCE, A_ID, V_OLD_ID, V_NEW_ID)
         WHERE COALESCE(d.n, 0) != MAX(s.NUM_SENTENCES_OLD, s.NUM_SENTENCES_NEW)",
    )?;
    let rows = stmt.query_map([], |r| {
        Ok(PairKey {
            source: r.get(0)?,
            a_id: r.get(1)?,
            v_old: r.get(2)?,
            v_new: r.get(3)?,
        })
    })?;
    Ok(rows.collect::<rusqlite::Result<_>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ArticleVersion;

    fn version(a_id: &str, v: u32, text: &str) -> ArticleVersion {
        ArticleVersion {
            source: "bbc".into(),
            a_id: a_id.into(),
            version_id: v,
            title: String::new(),
            url: String::new(),
            text: text.into(),
            created: format!("2020-01-01T0{v}:00:00Z"),
            archive_url: None,
        }
    }

    const OLD: &str = "Alpha bravo charlie delta. Echo foxtrot golf hotel. India juliet kilo lima. Mike november oscar papa.";
    const NEW: &str = "Alpha bravo charlie delta. Echo foxtrot golf hotel. Mike november oscar papa.";

    #[test]
    fn three_versions_two_pairs() {
        let mut s = Store::open_in_memory().unwrap();
        s.upsert_articles(&[version("a", 0, OLD), version("a", 1, NEW), version("a", 2, NEW)])
            .unwrap();
        let r = diff_corpus(&mut s, &DiffConfig::default(), &DiffOptions::default()).unwrap();
        assert_eq!(r.processed(), 2);
        let rows = s.sentence_diffs().unwrap();
        assert_eq!(rows.len(), 4 + 3);
        assert_eq!(rows[2].tag_old, "R");
        assert_eq!(rows.iter().filter(|r| r.tag_old == "R").count(), 1);
    }

    #[test]
    fn no_multi_version_article() {
        let mut s = Store::open_in_memory().unwrap();
        s.upsert_articles(&[version("a", 0, OLD), version("b", 0, NEW)]).unwrap();
        let r = diff_corpus(&mut s, &DiffConfig::default(), &DiffOptions::default()).unwrap();
        assert_eq!(r.processed(), 0);
    }

    #[test]
    fn rerun_skips_unchanged_and_drops_stale() {
        let mut s = Store::open_in_memory().unwrap();
        s.upsert_articles(&[version("a", 0, OLD), version("a", 1, NEW), version("a", 2, OLD)])
            .unwrap();
        let opts = DiffOptions { workers: 2, batch: 1 };
        diff_corpus(&mut s, &DiffConfig::default(), &opts).unwrap();
        let r = diff_corpus(&mut s, &DiffConfig::default(), &opts).unwrap();
        assert_eq!((r.written, r.unchanged), (0, 2));

        s.conn().execute("DELETE FROM articles WHERE VERSION_ID = 1", []).unwrap();
        let r = diff_corpus(&mut s, &DiffConfig::default(), &opts).unwrap();
        assert_eq!((r.pairs, r.written, r.stale_removed), (1, 1, 2));
        assert!(s.sentence_diffs().unwrap().iter().all(|d| d.v_new_id == 2));
    }
}
