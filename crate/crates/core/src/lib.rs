//! Sentence-level revision diffing for news articles.
//!
//! Two versions of an article are segmented into sentences, matched in both
//! directions with an asymmetric similarity, and described by per-sentence
//! tags (`A`, `R`, `M idx.. C|U`). Crossing match edges are reduced to a set
//! of refactored (moved) sentences, and matched-but-changed sentences get
//! word-level atomic edits.
//!
//! ```
//! use newsedits_core::pipeline::{diff_texts, DiffConfig};
//!
//! let old = "The storm hit the coast on Monday. Officials urged calm.";
//! let new = "Officials urged calm. The storm hit the coast on Monday night.";
//! let diff = diff_texts(old, new, &DiffConfig::default()).unwrap();
//! let tags: Vec<String> = diff.tags_old.iter().map(ToString::to_string).collect();
//! assert_eq!(tags, ["M 2 C", "M 1 U"]);
//! assert_eq!(diff.refactors.len(), 1);
//! ```

pub mod aligner;
pub mod assignment;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod refactor;
pub mod segmenter;
pub mod similarity;
pub mod synth;

pub use aligner::{Edge, MatchGraph, MatchThreshold, SentenceTag};
pub use error::{Error, Result};
pub use pipeline::{diff_texts, DiffConfig, PairDiff};
pub use similarity::SimMethod;
