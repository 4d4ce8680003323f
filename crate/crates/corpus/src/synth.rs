//! Seeded synthetic corpora in the ingest format.

use chrono::{DateTime, Duration, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use newsedits_core::synth::{mutate, MutationRates, Vocabulary};

use crate::model::ArticleVersion;
use crate::tasks::DEFAULT_SOURCES;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthOptions {
    pub articles: usize,
    pub min_versions: usize,
    pub max_versions: usize,
    pub min_sentences: usize,
    pub max_sentences: usize,
    pub rates: MutationRates,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            articles: 50,
            min_versions: 2,
            max_versions: 5,
            min_sentences: 5,
            max_sentences: 15,
            rates: MutationRates::default(),
            seed: 0,
        }
    }
}

/// Articles with successive mutated versions. Sources cycle through the
/// breaking-news outlets; gaps between versions are 5 minutes to 12 hours.
pub fn generate_corpus(opts: &SynthOptions) -> Vec<ArticleVersion> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let vocab = Vocabulary::new(2000, &mut rng);
    let epoch: DateTime<Utc> = DateTime::from_timestamp(1_600_000_000, 0).expect("valid epoch");
    let mut out = Vec::new();
    for a in 0..opts.articles {
        let source = DEFAULT_SOURCES[a % DEFAULT_SOURCES.len()];
        let versions = rng.gen_range(opts.min_versions..=opts.max_versions.max(opts.min_versions));
        let len = rng.gen_range(opts.min_sentences..=opts.max_sentences.max(opts.min_sentences));
        let mut doc = vocab.document(len, &mut rng);
        let mut t = epoch + Duration::minutes(rng.gen_range(0..60 * 24 * 365));
        let title = vocab.sentence(&mut rng);
        for v in 0..versions {
            if v > 0 {
                doc = mutate(&doc, &vocab, opts.rates, &mut rng).new;
                if doc.is_empty() {
                    doc.push(vocab.sentence(&mut rng));
                }
                t += Duration::minutes(rng.gen_range(5..=12 * 60));
            }
            out.push(ArticleVersion {
                source: source.to_string(),
                a_id: format!("{a:05}"),
                version_id: v as u32,
                title: title.clone(),
                url: format!("https://{source}.example/{a:05}"),
                text: doc.join(" "),
                created: t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                archive_url: None,
            });
        }
    }
    out
}
