//! Corpus-level statistics over a diffed store.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::PairKey;
use crate::store::Store;

pub const CORRECTION_LEXICON: &[&str] = &[
    "was corrected",
    "revised",
    "clarification",
    "earlier error",
    "version",
    "article",
];
pub const CONTRIBUTOR_LEXICON: &[&str] = &[
    "reporting by",
    "additional reporting",
    "contributed reporting",
    "editing by",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ActionCount {
    pub count: u64,
    pub pct: f64,
}

/// Action totals with percentages of all sentences in the diffed version
/// snapshots (each snapshot counted once even when it sits in two pairs).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ActionStats {
    pub total_sentences: u64,
    pub pairs: u64,
    pub edits: ActionCount,
    pub additions: ActionCount,
    pub deletions: ActionCount,
    pub refactors: ActionCount,
}

fn pct(count: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

pub fn summarize_actions(store: &Store) -> Result<ActionStats> {
    let c = store.conn();
    let scalar = |sql: &str| -> Result<u64> { Ok(c.query_row(sql, [], |r| r.get::<_, Option<i64>>(0))?.unwrap_or(0) as u64) };
    let total = scalar(
        "SELECT SUM(n) FROM (
           SELECT SOURCE, A_ID, V_OLD_ID AS V, NUM_SENTENCES_OLD AS n FROM sentence_diff_stats
           UNION
           SELECT SOURCE, A_ID, V_NEW_ID AS V, NUM_SENTENCES_NEW AS n FROM sentence_diff_stats)",
    )?;
    let pairs = scalar("SELECT COUNT(*) FROM sentence_diff_stats")?;
    let edits = scalar("SELECT COUNT(*) FROM sentence_diffs WHERE TAG_OLD GLOB 'M * C'")?;
    let additions = scalar("SELECT COUNT(*) FROM sentence_diffs WHERE TAG_NEW = 'A'")?;
    let deletions = scalar("SELECT COUNT(*) FROM sentence_diffs WHERE TAG_OLD = 'R'")?;
    let refactors = scalar("SELECT COUNT(*) FROM refactors")?;
    let ac = |count| ActionCount {
        count,
        pct: pct(count, total),
    };
    Ok(ActionStats {
        total_sentences: total,
        pairs,
        edits: ac(edits),
        additions: ac(additions),
        deletions: ac(deletions),
        refactors: ac(refactors),
    })
}

/// Action fractions for all pairs whose old version has one id.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct VersionRow {
    pub version: u32,
    pub pairs: u64,
    pub old_sentences: u64,
    pub new_sentences: u64,
    pub edited: f64,
    pub added: f64,
    pub deleted: f64,
    pub refactored: f64,
}

/// Edit, deletion and refactor fractions are over old-version sentences;
/// additions over new-version sentences.
pub fn version_dynamics(store: &Store) -> Result<Vec<VersionRow>> {
    let mut stmt = store.conn().prepare(
        "SELECT V_OLD_ID, COUNT(*), SUM(NUM_SENTENCES_OLD), SUM(NUM_SENTENCES_NEW),
                SUM(NUM_SENTENCES_CHANGED), SUM(NUM_SENTENCES_ADDED), SUM(NUM_SENTENCES_REMOVED),
                SUM(NUM_REFACTORS)
         FROM sentence_diff_stats GROUP BY V_OLD_ID ORDER BY V_OLD_ID",
    )?;
    let frac = |a: i64, b: i64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let rows = stmt.query_map([], |r| {
        let old: i64 = r.get(2)?;
        let new: i64 = r.get(3)?;
        Ok(VersionRow {
            version: r.get(0)?,
            pairs: r.get::<_, i64>(1)? as u64,
            old_sentences: old as u64,
            new_sentences: new as u64,
            edited: frac(r.get(4)?, old),
            added: frac(r.get(5)?, new),
            deleted: frac(r.get(6)?, old),
            refactored: frac(r.get(7)?, old),
        })
    })?;
    Ok(rows.collect::<rusqlite::Result<_>>()?)
}

pub fn decile(idx: usize, len: usize) -> usize {
    debug_assert!(idx >= 1 && idx <= len);
    (10 * (idx - 1) / len).min(9)
}

/// Percentage of each action falling in each position decile. Actions with no
/// occurrences are omitted; every row present sums to 100.
pub fn position_distribution(store: &Store) -> Result<BTreeMap<String, [f64; 10]>> {
    let c = store.conn();
    let mut lengths: BTreeMap<PairKey, (usize, usize)> = BTreeMap::new();
    {
        let mut stmt = c.prepare(
            "SELECT SOURCE, A_ID, V_OLD_ID, V_NEW_ID, NUM_SENTENCES_OLD, NUM_SENTENCES_NEW FROM sentence_diff_stats",
        )?;
        let mut rows = stmt.query([])?;
        while let Some(r) = rows.next()? {
            let key = PairKey {
                source: r.get(0)?,
                a_id: r.get(1)?,
                v_old: r.get(2)?,
                v_new: r.get(3)?,
            };
            lengths.insert(key, (r.get::<_, i64>(4)? as usize, r.get::<_, i64>(5)? as usize));
        }
    }
    let mut counts: BTreeMap<String, [u64; 10]> = BTreeMap::new();
    let mut bump = |action: &str, idx: usize, len: usize| {
        if idx >= 1 && idx <= len {
            counts.entry(action.to_string()).or_insert([0; 10])[decile(idx, len)] += 1;
        }
    };
    for d in store.sentence_diffs()? {
        let Some(&(n_old, n_new)) = lengths.get(&d.pair()) else { continue };
        let i = d.sentence_id as usize;
        if d.tag_old == "R" {
            bump("deletion", i, n_old);
        } else if d.tag_old.starts_with('M') && d.tag_old.ends_with(" C") {
            bump("edit", i, n_old);
        }
        if d.tag_new == "A" {
            bump("addition", i, n_new);
        }
    }
    for r in store.refactors()? {
        if let Some(&(n_old, _)) = lengths.get(&r.pair) {
            bump("refactor", r.old_idx as usize, n_old);
        }
    }
    Ok(counts
        .into_iter()
        .map(|(k, row)| {
            let total: u64 = row.iter().sum();
            let mut out = [0.0; 10];
            for (o, c) in out.iter_mut().zip(row) {
                *o = 100.0 * c as f64 / total as f64;
            }
            (k, out)
        })
        .collect())
}

/// Type-7 (linear interpolation) quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpdateTimes {
    pub intervals: usize,
    pub q1_hours: f64,
    pub median_hours: f64,
    pub q3_hours: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct UpdateTimeReport {
    pub sources: BTreeMap<String, UpdateTimes>,
    /// Consecutive versions whose timestamps go backwards; skipped.
    pub warnings: usize,
}

pub fn update_time_stats(store: &Store) -> Result<UpdateTimeReport> {
    let articles = store.articles()?;
    let mut gaps: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut report = UpdateTimeReport::default();
    for w in articles.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.source != b.source || a.a_id != b.a_id {
            continue;
        }
        let (Some(ta), Some(tb)) = (a.created_at(), b.created_at()) else {
            report.warnings += 1;
            continue;
        };
        let secs = (tb - ta).num_seconds();
        if secs < 0 {
            log::warn!("{}: version {} predates version {}", a.a_id, b.version_id, a.version_id);
            report.warnings += 1;
            continue;
        }
        gaps.entry(a.source.clone()).or_default().push(secs as f64 / 3600.0);
    }
    for (source, mut g) in gaps {
        g.sort_by(f64::total_cmp);
        report.sources.insert(
            source,
            UpdateTimes {
                intervals: g.len(),
                q1_hours: quantile(&g, 0.25),
                median_hours: quantile(&g, 0.5),
                q3_hours: quantile(&g, 0.75),
            },
        );
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SpecialFlags {
    pub correction: bool,
    pub contributor: bool,
}

/// Lexicon flags. A correction needs two distinct lexicon terms or a leading
/// "correction"; `raw` accepts a single term.
pub fn flag_special_sentences(sentence: &str, raw: bool) -> SpecialFlags {
    let lower = sentence.to_lowercase();
    let hits = CORRECTION_LEXICON.iter().filter(|t| lower.contains(*t)).count();
    let prefixed = lower
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .starts_with("correction");
    SpecialFlags {
        correction: prefixed || hits >= if raw { 1 } else { 2 },
        contributor: CONTRIBUTOR_LEXICON.iter().any(|t| lower.contains(t)),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SpecialCounts {
    pub added_sentences: u64,
    pub corrections: u64,
    pub contributor_lines: u64,
}

/// Lexicon hits among added sentences.
pub fn special_sentence_counts(store: &Store, raw: bool) -> Result<SpecialCounts> {
    let mut out = SpecialCounts::default();
    let mut stmt = store.conn().prepare("SELECT SENT_NEW FROM sentence_diffs WHERE TAG_NEW = 'A'")?;
    let mut rows = stmt.query([])?;
    while let Some(r) = rows.next()? {
        let s: String = r.get(0)?;
        let f = flag_special_sentences(&s, raw);
        out.added_sentences += 1;
        out.corrections += f.correction as u64;
        out.contributor_lines += f.contributor as u64;
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorpusStats {
    pub actions: ActionStats,
    pub versions: Vec<VersionRow>,
    pub positions: BTreeMap<String, [f64; 10]>,
    pub update_times: UpdateTimeReport,
    pub special: SpecialCounts,
}

pub fn corpus_stats(store: &Store, raw_lexicon: bool) -> Result<CorpusStats> {
    Ok(CorpusStats {
        actions: summarize_actions(store)?,
        versions: version_dynamics(store)?,
        positions: position_distribution(store)?,
        update_times: update_time_stats(store)?,
        special: special_sentence_counts(store, raw_lexicon)?,
    })
}
