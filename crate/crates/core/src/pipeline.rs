//! End-to-end diff of one version pair: segment, match both directions, tag,
//! word-diff changed matches and detect refactors.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::aligner::{
    build_match_graph, classify_change, derive_tags, directional_from_scores, match_directional, word_diff,
    AtomicEdit, Change, DirectionalMap, Edge, MatchGraph, MatchThreshold, SentenceScorer, SentenceTag,
};
use crate::error::{Error, Result};
use crate::refactor::{identify_refactors, RefactorSet};
use crate::segmenter::{normalize_text, split_sentences, tokenize, Lemmatizer, SentenceList, TokenSeq};
use crate::similarity::{sim_asym_ngram_with, SimMethod};

/// Default similarity cutoff for the default `ngram:2` method.
pub const DEFAULT_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone)]
pub struct DiffConfig {
    pub method: SimMethod,
    pub threshold: MatchThreshold,
}

impl Default for DiffConfig {
    fn default() -> Self {
        DiffConfig {
            method: SimMethod::default(),
            threshold: MatchThreshold::new(DEFAULT_THRESHOLD).expect("valid default"),
        }
    }
}

impl DiffConfig {
    pub fn new(method: SimMethod, threshold: f64) -> Result<Self> {
        Ok(DiffConfig {
            method,
            threshold: MatchThreshold::new(threshold)?,
        })
    }

    /// Stable description, e.g. `ngram:2@0.3`.
    pub fn fingerprint(&self) -> String {
        format!("{}@{}", self.method, self.threshold)
    }
}

/// Scorer used by the pipeline. Sentences without any word score 0 against
/// everything, and ngram orders shrink to the source length for short
/// sentences, so real-world text never hits the similarity error paths.
pub struct PipelineScorer<'a>(pub &'a SimMethod);

impl SentenceScorer for PipelineScorer<'_> {
    fn score(&self, x: &TokenSeq, y: &TokenSeq) -> Result<f64> {
        if x.is_empty() {
            return Ok(0.0);
        }
        match self.0 {
            SimMethod::Ngram { n, lemmatizer } => sim_asym_ngram_with(x, y, (*n).min(x.len()), lemmatizer),
            method => method.score(x, y),
        }
    }
}

/// Lemma ids of every sentence, interned once per pair.
fn intern(docs: [&[TokenSeq]; 2], lem: &Lemmatizer) -> [Vec<Vec<u32>>; 2] {
    let mut ids: HashMap<String, u32> = HashMap::new();
    docs.map(|doc| {
        doc.iter()
            .map(|s| {
                s.keys()
                    .iter()
                    .map(|k| {
                        let next = ids.len() as u32;
                        *ids.entry(lem.lemma(k)).or_insert(next)
                    })
                    .collect()
            })
            .collect()
    })
}

/// Same value as [`PipelineScorer`] for ngram methods, over interned ids.
fn ngram_score(x: &[u32], y: &[u32], n: usize) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = n.min(x.len());
    let mut used = vec![false; (y.len() + 1).saturating_sub(n)];
    let mut matched = 0;
    for w in x.windows(n) {
        if let Some(j) = y.windows(n).enumerate().position(|(j, v)| !used[j] && v == w) {
            used[j] = true;
            matched += 1;
        }
    }
    matched as f64 / (x.len() - n + 1) as f64
}

fn ngram_directional(src: &[Vec<u32>], tgt: &[Vec<u32>], n: usize, t: MatchThreshold) -> DirectionalMap {
    let scores: Vec<Vec<f64>> = src
        .iter()
        .map(|x| tgt.iter().map(|y| ngram_score(x, y, n)).collect())
        .collect();
    directional_from_scores(&scores, t)
}

/// Atomic edits between one matched-and-changed sentence pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordEdits {
    pub edge: Edge,
    pub edits: Vec<AtomicEdit>,
}

/// One `sentence_diffs` row (without the pair key columns).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffRow {
    pub sentence_id: usize,
    pub sent_old: String,
    pub sent_new: String,
    pub tag_old: String,
    pub tag_new: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDiff {
    pub old: SentenceList,
    pub new: SentenceList,
    pub graph: MatchGraph,
    pub tags_old: Vec<SentenceTag>,
    pub tags_new: Vec<SentenceTag>,
    pub word_edits: Vec<WordEdits>,
    pub refactors: RefactorSet,
}

impl PairDiff {
    /// `max(|old|, |new|)` rows, 1-based, with empty strings where a side has
    /// run out of sentences.
    pub fn rows(&self) -> Vec<DiffRow> {
        let n = self.old.len().max(self.new.len());
        (1..=n)
            .map(|i| DiffRow {
                sentence_id: i,
                sent_old: self.old.get(i).unwrap_or_default().to_string(),
                sent_new: self.new.get(i).unwrap_or_default().to_string(),
                tag_old: self.tags_old.get(i - 1).map(ToString::to_string).unwrap_or_default(),
                tag_new: self.tags_new.get(i - 1).map(ToString::to_string).unwrap_or_default(),
            })
            .collect()
    }

    pub fn additions(&self) -> usize {
        self.tags_new.iter().filter(|t| **t == SentenceTag::Added).count()
    }

    pub fn deletions(&self) -> usize {
        self.tags_old.iter().filter(|t| **t == SentenceTag::Removed).count()
    }

    /// Old sentences matched and changed.
    pub fn edits(&self) -> usize {
        self.tags_old.iter().filter(|t| t.is_changed_match()).count()
    }
}

/// Normalizes and segments both texts, then diffs them.
pub fn diff_texts(old_text: &str, new_text: &str, config: &DiffConfig) -> Result<PairDiff> {
    let old = split_sentences(&normalize_text(old_text));
    let new = split_sentences(&normalize_text(new_text));
    diff_sentences(old, new, config)
}

pub fn diff_sentences(old: SentenceList, new: SentenceList, config: &DiffConfig) -> Result<PairDiff> {
    let old_tok: Vec<TokenSeq> = old.iter().map(tokenize).collect();
    let new_tok: Vec<TokenSeq> = new.iter().map(tokenize).collect();
    let (fwd, bwd) = match &config.method {
        SimMethod::Ngram { n, lemmatizer } => {
            let [o, w] = intern([&old_tok, &new_tok], lemmatizer);
            (
                ngram_directional(&o, &w, *n, config.threshold),
                ngram_directional(&w, &o, *n, config.threshold),
            )
        }
        method => {
            let scorer = PipelineScorer(method);
            (
                match_directional(&old_tok, &new_tok, &scorer, config.threshold)?,
                match_directional(&new_tok, &old_tok, &scorer, config.threshold)?,
            )
        }
    };
    let graph = build_match_graph(&fwd, &bwd);
    let (tags_old, tags_new) = derive_tags(old.as_slice(), new.as_slice(), &graph);

    let mut word_edits = Vec::new();
    for edge in graph.edges() {
        let (o, n) = (
            old.get(edge.old).ok_or_else(|| Error::InvalidArgument("edge out of range".into()))?,
            new.get(edge.new).ok_or_else(|| Error::InvalidArgument("edge out of range".into()))?,
        );
        if classify_change(o, n) == Change::Changed {
            word_edits.push(WordEdits {
                edge,
                edits: word_diff(&old_tok[edge.old - 1], &new_tok[edge.new - 1]),
            });
        }
    }
    let edges: Vec<Edge> = graph.edges().collect();
    let refactors = identify_refactors(&edges);
    Ok(PairDiff {
        old,
        new,
        graph,
        tags_old,
        tags_new,
        word_edits,
        refactors,
    })
}
