//! Newline-delimited JSON ingestion.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Serialize;

use crate::error::{CorpusError, Result};
use crate::model::{ArticleVersion, VersionKey};
use crate::store::Store;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    /// Records written (after collapsing duplicates).
    pub ingested: usize,
    /// Records that replaced an earlier one, in this file or in the store.
    pub duplicates: usize,
    pub errors: Vec<LineError>,
}

/// Parses and validates one line. Blank lines yield `Ok(None)`.
pub fn parse_line(line: &str) -> std::result::Result<Option<ArticleVersion>, String> {
    if line.trim().is_empty() {
        return Ok(None);
    }
    let rec: ArticleVersion = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if rec.source.trim().is_empty() {
        return Err("empty source".into());
    }
    if rec.a_id.trim().is_empty() {
        return Err("empty a_id".into());
    }
    if rec.created_at().is_none() {
        return Err(format!("created is not an RFC 3339 timestamp: {:?}", rec.created));
    }
    Ok(Some(rec))
}

pub fn ingest_jsonl(path: impl AsRef<Path>, store: &mut Store) -> Result<IngestReport> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut report = IngestReport::default();
    let mut pending: Vec<ArticleVersion> = Vec::new();
    let mut seen: HashMap<VersionKey, usize> = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        match parse_line(&line) {
            Ok(Some(rec)) => match seen.get(&rec.key()) {
                Some(&slot) => {
                    report.duplicates += 1;
                    pending[slot] = rec;
                }
                None => {
                    seen.insert(rec.key(), pending.len());
                    pending.push(rec);
                }
            },
            Ok(None) => {}
            Err(message) => {
                log::warn!("{}:{}: {}", path.display(), i + 1, message);
                report.errors.push(LineError { line: i + 1, message });
            }
        }
    }
    let counts = store.upsert_articles(&pending)?;
    report.duplicates += counts.replaced;
    report.ingested = pending.len();
    Ok(report)
}
