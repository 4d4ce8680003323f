//! SQLite-backed diff store.
//!
//! Column names of `articles` and `sentence_diffs` follow the released
//! dataset layout (`SOURCE`, `A_ID`, `V_OLD_ID`, ...). `word_diffs`,
//! `refactors`, the two `*_stats` summary tables and `diff_runs` (per-pair
//! content fingerprints) are written alongside them in one transaction per
//! batch.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rusqlite::types::ValueRef;
use rusqlite::{params, Connection, OptionalExtension};
use serde::Serialize;
use sha2::{Digest, Sha256};

use newsedits_core::aligner::EditKind;
use newsedits_core::pipeline::{DiffRow, PairDiff};

use crate::error::{CorpusError, Result};
use crate::model::{ArticleVersion, DiffRecord, PairKey, RefactorRecord, VersionKey};

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS articles (
    SOURCE TEXT NOT NULL,
    A_ID TEXT NOT NULL,
    VERSION_ID INTEGER NOT NULL,
    TITLE TEXT NOT NULL,
    URL TEXT NOT NULL,
    TEXT TEXT NOT NULL,
    CREATED TEXT NOT NULL,
    ARCHIVE_URL TEXT,
    NUM_VERSIONS INTEGER NOT NULL,
    PRIMARY KEY (SOURCE, A_ID, VERSION_ID)
);
CREATE TABLE IF NOT EXISTS sentence_diffs (
    SOURCE TEXT NOT NULL,
    A_ID TEXT NOT NULL,
    V_OLD_ID INTEGER NOT NULL,
    V_NEW_ID INTEGER NOT NULL,
    SENTENCE_ID INTEGER NOT NULL,
    SENT_OLD TEXT NOT NULL,
    SENT_NEW TEXT NOT NULL,
    TAG_OLD TEXT NOT NULL,
    TAG_NEW TEXT NOT NULL,
    PRIMARY KEY (SOURCE, A_ID, V_OLD_ID, V_NEW_ID, SENTENCE_ID)
);
CREATE TABLE IF NOT EXISTS word_diffs (
    SOURCE TEXT NOT NULL,
    A_ID TEXT NOT NULL,
    V_OLD_ID INTEGER NOT NULL,
    V_NEW_ID INTEGER NOT NULL,
    SENTENCE_ID INTEGER NOT NULL,
    MATCHED_ID INTEGER NOT NULL,
    EDIT_ID INTEGER NOT NULL,
    KIND TEXT NOT NULL,
    OLD_START INTEGER NOT NULL,
    OLD_END INTEGER NOT NULL,
    NEW_START INTEGER NOT NULL,
    NEW_END INTEGER NOT NULL,
    OLD_TEXT TEXT NOT NULL,
    NEW_TEXT TEXT NOT NULL,
    PRIMARY KEY (SOURCE, A_ID, V_OLD_ID, V_NEW_ID, SENTENCE_ID, MATCHED_ID, EDIT_ID)
);
CREATE TABLE IF NOT EXISTS refactors (
    SOURCE TEXT NOT NULL,
    A_ID TEXT NOT NULL,
    V_OLD_ID INTEGER NOT NULL,
    V_NEW_ID INTEGER NOT NULL,
    OLD_IDX INTEGER NOT NULL,
    NEW_IDX INTEGER NOT NULL,
    DIRECTION TEXT NOT NULL,
    REMOVAL_RANK INTEGER NOT NULL,
    PRIMARY KEY (SOURCE, A_ID, V_OLD_ID, V_NEW_ID, REMOVAL_RANK)
);
CREATE TABLE IF NOT EXISTS sentence_diff_stats (
    SOURCE TEXT NOT NULL,
    A_ID TEXT NOT NULL,
    V_OLD_ID INTEGER NOT NULL,
    V_NEW_ID INTEGER NOT NULL,
    NUM_SENTENCES_OLD INTEGER NOT NULL,
    NUM_SENTENCES_NEW INTEGER NOT NULL,
    NUM_SENTENCES_ADDED INTEGER NOT NULL,
    NUM_SENTENCES_REMOVED INTEGER NOT NULL,
    NUM_SENTENCES_CHANGED INTEGER NOT NULL,
    NUM_SENTENCES_UNCHANGED INTEGER NOT NULL,
    NUM_REFACTORS INTEGER NOT NULL,
    PRIMARY KEY (SOURCE, A_ID, V_OLD_ID, V_NEW_ID)
);
CREATE TABLE IF NOT EXISTS word_diff_stats (
    SOURCE TEXT NOT NULL,
    A_ID TEXT NOT NULL,
    V_OLD_ID INTEGER NOT NULL,
    V_NEW_ID INTEGER NOT NULL,
    NUM_INSERTS INTEGER NOT NULL,
    NUM_DELETES INTEGER NOT NULL,
    NUM_REPLACES INTEGER NOT NULL,
    NUM_WORDS_ADDED INTEGER NOT NULL,
    NUM_WORDS_REMOVED INTEGER NOT NULL,
    PRIMARY KEY (SOURCE, A_ID, V_OLD_ID, V_NEW_ID)
);
CREATE TABLE IF NOT EXISTS diff_runs (
    SOURCE TEXT NOT NULL,
    A_ID TEXT NOT NULL,
    V_OLD_ID INTEGER NOT NULL,
    V_NEW_ID INTEGER NOT NULL,
    CONFIG TEXT NOT NULL,
    FINGERPRINT TEXT NOT NULL,
    PRIMARY KEY (SOURCE, A_ID, V_OLD_ID, V_NEW_ID)
);
";

/// Tables written by the diff stage, in export order.
pub const DIFF_TABLES: &[&str] = &[
    "sentence_diffs",
    "word_diffs",
    "refactors",
    "sentence_diff_stats",
    "word_diff_stats",
    "diff_runs",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WordDiffRow {
    pub sentence_id: usize,
    pub matched_id: usize,
    pub edit_id: usize,
    pub kind: EditKind,
    pub old_start: usize,
    pub old_end: usize,
    pub new_start: usize,
    pub new_end: usize,
    pub old_text: String,
    pub new_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RefactorRow {
    pub old_idx: usize,
    pub new_idx: usize,
    pub direction: String,
    pub removal_rank: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PairStats {
    pub sentences_old: usize,
    pub sentences_new: usize,
    pub added: usize,
    pub removed: usize,
    pub changed: usize,
    pub unchanged: usize,
    pub refactors: usize,
    pub word_inserts: usize,
    pub word_deletes: usize,
    pub word_replaces: usize,
    pub words_added: usize,
    pub words_removed: usize,
}

/// Everything stored for one version pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairOutput {
    pub config: String,
    pub rows: Vec<DiffRow>,
    pub word_rows: Vec<WordDiffRow>,
    pub refactors: Vec<RefactorRow>,
    pub stats: PairStats,
}

impl PairOutput {
    pub fn from_diff(diff: &PairDiff, config: &str) -> Self {
        let old_tokens: Vec<Vec<String>> = diff
            .old
            .iter()
            .map(|s| newsedits_core::segmenter::tokenize(s).tokens().to_vec())
            .collect();
        let mut word_rows = Vec::new();
        let mut stats = PairStats {
            sentences_old: diff.old.len(),
            sentences_new: diff.new.len(),
            added: diff.additions(),
            removed: diff.deletions(),
            changed: diff.edits(),
            unchanged: diff.tags_old.iter().filter(|t| t.is_unchanged_match()).count(),
            refactors: diff.refactors.len(),
            ..PairStats::default()
        };
        for we in &diff.word_edits {
            let old = &old_tokens[we.edge.old - 1];
            for (k, e) in we.edits.iter().enumerate() {
                match e.kind {
                    EditKind::Insert => stats.word_inserts += 1,
                    EditKind::Delete => stats.word_deletes += 1,
                    EditKind::Replace => stats.word_replaces += 1,
                }
                stats.words_added += e.new.len();
                stats.words_removed += e.old.len();
                word_rows.push(WordDiffRow {
                    sentence_id: we.edge.old,
                    matched_id: we.edge.new,
                    edit_id: k + 1,
                    kind: e.kind,
                    old_start: e.old.start,
                    old_end: e.old.end,
                    new_start: e.new.start,
                    new_end: e.new.end,
                    old_text: old[e.old.clone()].join(" "),
                    new_text: e.replacement.join(" "),
                });
            }
        }
        let refactors = diff
            .refactors
            .removed
            .iter()
            .map(|r| RefactorRow {
                old_idx: r.edge.old,
                new_idx: r.edge.new,
                direction: r.direction.as_str().to_string(),
                removal_rank: r.rank,
            })
            .collect();
        PairOutput {
            config: config.to_string(),
            rows: diff.rows(),
            word_rows,
            refactors,
            stats,
        }
    }

    /// SHA-256 over the serialized output.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("pair output serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct UpsertCounts {
    pub inserted: usize,
    pub replaced: usize,
}

pub struct Store {
    conn: Connection,
    path: Option<PathBuf>,
}

impl Store {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let conn = Connection::open(path)?;
        let store = Store {
            conn,
            path: Some(path.to_path_buf()),
        };
        store.init()?;
        Ok(store)
    }

    pub fn open_in_memory() -> Result<Self> {
        let store = Store {
            conn: Connection::open_in_memory()?,
            path: None,
        };
        store.init()?;
        Ok(store)
    }

    fn init(&self) -> Result<()> {
        let existing: i64 = self.conn.query_row(
            "SELECT COUNT(*) FROM sqlite_master WHERE type = 'table' AND name = 'diff_runs'",
            [],
            |r| r.get(0),
        )?;
        // only touch the file when the schema is missing
        if existing == 0 {
            self.conn.execute_batch(SCHEMA)?;
        }
        Ok(())
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn conn(&self) -> &Connection {
        &self.conn
    }

    /// Inserts or replaces articles and refreshes `NUM_VERSIONS` for every
    /// article touched.
    pub fn upsert_articles(&mut self, records: &[ArticleVersion]) -> Result<UpsertCounts> {
        let tx = self.conn.transaction()?;
        let mut counts = UpsertCounts::default();
        {
            let mut exists = tx.prepare_cached(
                "SELECT 1 FROM articles WHERE SOURCE = ?1 AND A_ID = ?2 AND VERSION_ID = ?3",
            )?;
            let mut insert = tx.prepare_cached(
                "INSERT OR REPLACE INTO articles
                 (SOURCE, A_ID, VERSION_ID, TITLE, URL, TEXT, CREATED, ARCHIVE_URL, NUM_VERSIONS)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, 1)",
            )?;
            let mut recount = tx.prepare_cached(
                "UPDATE articles SET NUM_VERSIONS =
                   (SELECT COUNT(*) FROM articles a WHERE a.SOURCE = ?1 AND a.A_ID = ?2)
                 WHERE SOURCE = ?1 AND A_ID = ?2",
            )?;
            let mut touched = std::collections::BTreeSet::new();
            for r in records {
                let present = exists
                    .query_row(params![r.source, r.a_id, r.version_id], |_| Ok(()))
                    .optional()?
                    .is_some();
                if present {
                    counts.replaced += 1;
                } else {
                    counts.inserted += 1;
                }
                insert.execute(params![
                    r.source,
                    r.a_id,
                    r.version_id,
                    r.title,
                    r.url,
                    r.text,
                    r.created,
                    r.archive_url
                ])?;
                touched.insert((r.source.clone(), r.a_id.clone()));
            }
            for (source, a_id) in touched {
                recount.execute(params![source, a_id])?;
            }
        }
        tx.commit()?;
        Ok(counts)
    }

    pub fn articles(&self) -> Result<Vec<ArticleVersion>> {
        let mut stmt = self.conn.prepare(
            "SELECT SOURCE, A_ID, VERSION_ID, TITLE, URL, TEXT, CREATED, ARCHIVE_URL
             FROM articles ORDER BY SOURCE, A_ID, VERSION_ID",
        )?;
        let rows = stmt.query_map([], |r| {
            Ok(ArticleVersion {
                source: r.get(0)?,
                a_id: r.get(1)?,
                version_id: r.get(2)?,
                title: r.get(3)?,
                url: r.get(4)?,
                text: r.get(5)?,
                created: r.get(6)?,
                archive_url: r.get(7)?,
            })
        })?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    pub fn version_keys(&self) -> Result<Vec<VersionKey>> {
        let mut stmt = self
            .conn
            .prepare("SELECT SOURCE, A_ID, VERSION_ID FROM articles ORDER BY SOURCE, A_ID, VERSION_ID")?;
        let rows = stmt.query_map([], |r| {
            Ok(VersionKey {
                source: r.get(0)?,
                a_id: r.get(1)?,
                version_id: r.get(2)?,
            })
        })?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    pub fn version_text(&self, key: &VersionKey) -> Result<Option<String>> {
        let mut stmt = self
            .conn
            .prepare_cached("SELECT TEXT FROM articles WHERE SOURCE = ?1 AND A_ID = ?2 AND VERSION_ID = ?3")?;
        Ok(stmt
            .query_row(params![key.source, key.a_id, key.version_id], |r| r.get(0))
            .optional()?)
    }

    /// Consecutive stored versions of every article.
    pub fn adjacent_pairs(&self) -> Result<Vec<PairKey>> {
        let keys = self.version_keys()?;
        Ok(keys
            .windows(2)
            .filter(|w| w[0].source == w[1].source && w[0].a_id == w[1].a_id)
            .map(|w| PairKey {
                source: w[0].source.clone(),
                a_id: w[0].a_id.clone(),
                v_old: w[0].version_id,
                v_new: w[1].version_id,
            })
            .collect())
    }

    pub fn fingerprints(&self) -> Result<HashMap<PairKey, String>> {
        let mut stmt = self
            .conn
            .prepare("SELECT SOURCE, A_ID, V_OLD_ID, V_NEW_ID, FINGERPRINT FROM diff_runs")?;
        let rows = stmt.query_map([], |r| {
            Ok((
                PairKey {
                    source: r.get(0)?,
                    a_id: r.get(1)?,
                    v_old: r.get(2)?,
                    v_new: r.get(3)?,
                },
                r.get::<_, String>(4)?,
            ))
        })?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    /// Replaces all stored rows of each pair in a single transaction.
    pub fn write_pairs(&mut self, outputs: &[(PairKey, PairOutput)]) -> Result<()> {
        if outputs.is_empty() {
            return Ok(());
        }
        let tx = self.conn.transaction()?;
        for (key, out) in outputs {
            delete_pair(&tx, key)?;
            write_pair(&tx, key, out)?;
        }
        tx.commit()?;
        Ok(())
    }

    pub fn remove_pairs(&mut self, keys: &[PairKey]) -> Result<()> {
        if keys.is_empty() {
            return Ok(());
        }
        let tx = self.conn.transaction()?;
        for key in keys {
            delete_pair(&tx, key)?;
        }
        tx.commit()?;
        Ok(())
    }

    pub fn sentence_diffs(&self) -> Result<Vec<DiffRecord>> {
        self.query_diffs("", &[])
    }

    pub fn pair_rows(&self, pair: &PairKey) -> Result<Vec<DiffRecord>> {
        self.query_diffs(
            "WHERE SOURCE = ?1 AND A_ID = ?2 AND V_OLD_ID = ?3 AND V_NEW_ID = ?4",
            &[&pair.source, &pair.a_id, &pair.v_old, &pair.v_new],
        )
    }

    fn query_diffs(&self, filter: &str, args: &[&dyn rusqlite::ToSql]) -> Result<Vec<DiffRecord>> {
        let sql = format!(
            "SELECT SOURCE, A_ID, V_OLD_ID, V_NEW_ID, SENTENCE_ID, SENT_OLD, SENT_NEW, TAG_OLD, TAG_NEW
             FROM sentence_diffs {filter}
             ORDER BY SOURCE, A_ID, V_OLD_ID, V_NEW_ID, SENTENCE_ID"
        );
        let mut stmt = self.conn.prepare_cached(&sql)?;
        let rows = stmt.query_map(args, |r| {
            Ok(DiffRecord {
                source: r.get(0)?,
                a_id: r.get(1)?,
                v_old_id: r.get(2)?,
                v_new_id: r.get(3)?,
                sentence_id: r.get(4)?,
                sent_old: r.get(5)?,
                sent_new: r.get(6)?,
                tag_old: r.get(7)?,
                tag_new: r.get(8)?,
            })
        })?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    pub fn refactors(&self) -> Result<Vec<RefactorRecord>> {
        let mut stmt = self.conn.prepare(
            "SELECT SOURCE, A_ID, V_OLD_ID, V_NEW_ID, OLD_IDX, NEW_IDX, DIRECTION, REMOVAL_RANK
             FROM refactors ORDER BY SOURCE, A_ID, V_OLD_ID, V_NEW_ID, REMOVAL_RANK",
        )?;
        let rows = stmt.query_map([], |r| {
            Ok(RefactorRecord {
                pair: PairKey {
                    source: r.get(0)?,
                    a_id: r.get(1)?,
                    v_old: r.get(2)?,
                    v_new: r.get(3)?,
                },
                old_idx: r.get(4)?,
                new_idx: r.get(5)?,
                direction: r.get(6)?,
                removal_rank: r.get(7)?,
            })
        })?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    /// Writes `<table>.csv` for every table into `dir`.
    pub fn export_csv(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
        let mut written = Vec::new();
        for table in std::iter::once(&"articles").chain(DIFF_TABLES) {
            let path = dir.join(format!("{table}.csv"));
            self.export_table(table, &path)?;
            written.push(path);
        }
        Ok(written)
    }

    fn export_table(&self, table: &str, path: &Path) -> Result<()> {
        let pk: Vec<String> = {
            let mut stmt = self.conn.prepare(&format!("PRAGMA table_info({table})"))?;
            let mut cols: Vec<(i64, String)> = stmt
                .query_map([], |r| Ok((r.get::<_, i64>(5)?, r.get::<_, String>(1)?)))?
                .collect::<rusqlite::Result<_>>()?;
            cols.retain(|(k, _)| *k > 0);
            cols.sort();
            cols.into_iter().map(|(_, c)| c).collect()
        };
        let mut stmt = self
            .conn
            .prepare(&format!("SELECT * FROM {table} ORDER BY {}", pk.join(", ")))?;
        let names: Vec<String> = stmt.column_names().iter().map(|s| s.to_string()).collect();
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(&names)?;
        let mut rows = stmt.query([])?;
        while let Some(row) = rows.next()? {
            let mut record = Vec::with_capacity(names.len());
            for i in 0..names.len() {
                record.push(match row.get_ref(i)? {
                    ValueRef::Null => String::new(),
                    ValueRef::Integer(v) => v.to_string(),
                    ValueRef::Real(v) => v.to_string(),
                    ValueRef::Text(t) | ValueRef::Blob(t) => String::from_utf8_lossy(t).into_owned(),
                });
            }
            writer.write_record(&record)?;
        }
        writer.flush().map_err(|e| CorpusError::io(path, e))?;
        Ok(())
    }
}

fn delete_pair(tx: &rusqlite::Transaction<'_>, key: &PairKey) -> Result<()> {
    for table in DIFF_TABLES {
        tx.prepare_cached(&format!(
            "DELETE FROM {table} WHERE SOURCE = ?1 AND A_ID = ?2 AND V_OLD_ID = ?3 AND V_NEW_ID = ?4"
        ))?
        .execute(params![key.source, key.a_id, key.v_old, key.v_new])?;
    }
    Ok(())
}

fn write_pair(tx: &rusqlite::Transaction<'_>, key: &PairKey, out: &PairOutput) -> Result<()> {
    let k = (&key.source, &key.a_id, key.v_old, key.v_new);
    let mut stmt = tx.prepare_cached(
        "INSERT INTO sentence_diffs
         (SOURCE, A_ID, V_OLD_ID, V_NEW_ID, SENTENCE_ID, SENT_OLD, SENT_NEW, TAG_OLD, TAG_NEW)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9)",
    )?;
    for r in &out.rows {
        stmt.execute(params![k.0, k.1, k.2, k.3, r.sentence_id, r.sent_old, r.sent_new, r.tag_old, r.tag_new])?;
    }
    let mut stmt = tx.prepare_cached(
        "INSERT INTO word_diffs
         (SOURCE, A_ID, V_OLD_ID, V_NEW_ID, SENTENCE_ID, MATCHED_ID, EDIT_ID, KIND,
          OLD_START, OLD_END, NEW_START, NEW_END, OLD_TEXT, NEW_TEXT)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11, ?12, ?13, ?14)",
    )?;
    for w in &out.word_rows {
        stmt.execute(params![
            k.0,
            k.1,
            k.2,
            k.3,
            w.sentence_id,
            w.matched_id,
            w.edit_id,
            w.kind.as_str(),
            w.old_start,
            w.old_end,
            w.new_start,
            w.new_end,
            w.old_text,
            w.new_text
        ])?;
    }
    let mut stmt = tx.prepare_cached(
        "INSERT INTO refactors (SOURCE, A_ID, V_OLD_ID, V_NEW_ID, OLD_IDX, NEW_IDX, DIRECTION, REMOVAL_RANK)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)",
    )?;
    for r in &out.refactors {
        stmt.execute(params![k.0, k.1, k.2, k.3, r.old_idx, r.new_idx, r.direction, r.removal_rank])?;
    }
    let s = &out.stats;
    tx.prepare_cached(
        "INSERT INTO sentence_diff_stats
         (SOURCE, A_ID, V_OLD_ID, V_NEW_ID, NUM_SENTENCES_OLD, NUM_SENTENCES_NEW, NUM_SENTENCES_ADDED,
          NUM_SENTENCES_REMOVED, NUM_SENTENCES_CHANGED, NUM_SENTENCES_UNCHANGED, NUM_REFACTORS)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11)",
    )?
    .execute(params![
        k.0,
        k.1,
        k.2,
        k.3,
        s.sentences_old,
        s.sentences_new,
        s.added,
        s.removed,
        s.changed,
        s.unchanged,
        s.refactors
    ])?;
    tx.prepare_cached(
        "INSERT INTO word_diff_stats
         (SOURCE, A_ID, V_OLD_ID, V_NEW_ID, NUM_INSERTS, NUM_DELETES, NUM_REPLACES, NUM_WORDS_ADDED, NUM_WORDS_REMOVED)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9)",
    )?
    .execute(params![
        k.0,
        k.1,
        k.2,
        k.3,
        s.word_inserts,
        s.word_deletes,
        s.word_replaces,
        s.words_added,
        s.words_removed
    ])?;
    tx.prepare_cached(
        "INSERT INTO diff_runs (SOURCE, A_ID, V_OLD_ID, V_NEW_ID, CONFIG, FINGERPRINT)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
    )?
    .execute(params![k.0, k.1, k.2, k.3, out.config, out.fingerprint()])?;
    Ok(())
}
