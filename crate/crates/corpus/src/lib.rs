//! Corpus side of the news-revision diff engine: ingestion, the SQLite diff
//! store, corpus analytics and the prediction-task datasets.

pub mod analytics;
pub mod differ;
pub mod error;
pub mod ingest;
pub mod model;
pub mod store;
pub mod synth;
pub mod tasks;

pub use error::{CorpusError, Result};
pub use model::{ArticleVersion, DiffRecord, PairKey, VersionKey};
pub use store::Store;
