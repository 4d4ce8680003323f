use std::fmt;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};

/// One publication of an article, as ingested.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleVersion {
    pub source: String,
    pub a_id: String,
    pub version_id: u32,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub url: String,
    pub text: String,
    /// RFC 3339 timestamp.
    pub created: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archive_url: Option<String>,
}

impl ArticleVersion {
    pub fn created_at(&self) -> Option<DateTime<FixedOffset>> {
        DateTime::parse_from_rfc3339(&self.created).ok()
    }

    pub fn key(&self) -> VersionKey {
        VersionKey {
            source: self.source.clone(),
            a_id: self.a_id.clone(),
            version_id: self.version_id,
        }
    }
}

/// `(source, a_id, version_id)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VersionKey {
    pub source: String,
    pub a_id: String,
    pub version_id: u32,
}

impl fmt::Display for VersionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.source, self.a_id, self.version_id)
    }
}

/// Two adjacent stored versions of one article.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairKey {
    pub source: String,
    pub a_id: String,
    pub v_old: u32,
    pub v_new: u32,
}

impl PairKey {
    pub fn old_version(&self) -> VersionKey {
        VersionKey {
            source: self.source.clone(),
            a_id: self.a_id.clone(),
            version_id: self.v_old,
        }
    }

    pub fn new_version(&self) -> VersionKey {
        VersionKey {
            source: self.source.clone(),
            a_id: self.a_id.clone(),
            version_id: self.v_new,
        }
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}-{}", self.source, self.a_id, self.v_old, self.v_new)
    }
}

/// One stored `sentence_diffs` row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffRecord {
    pub source: String,
    pub a_id: String,
    pub v_old_id: u32,
    pub v_new_id: u32,
    pub sentence_id: u32,
    pub sent_old: String,
    pub sent_new: String,
    pub tag_old: String,
    pub tag_new: String,
}

impl DiffRecord {
    pub fn pair(&self) -> PairKey {
        PairKey {
            source: self.source.clone(),
            a_id: self.a_id.clone(),
            v_old: self.v_old_id,
            v_new: self.v_new_id,
        }
    }
}

/// One stored `refactors` row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefactorRecord {
    pub pair: PairKey,
    pub old_idx: u32,
    pub new_idx: u32,
    pub direction: String,
    pub removal_rank: u32,
}
