//! Seeded synthetic articles and revision mutations with known ground truth.
//!
//! Used for recovery benchmarks, throughput checks and demo corpora. Text is
//! pseudo-English: frequent function words mixed with generated content
//! words, so unrelated sentences still share some common bigrams.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aligner::Edge;

const FUNCTION_WORDS: &[&str] = &[
    "the", "of", "and", "to", "in", "a", "said", "on", "for", "was", "with", "that", "at", "by", "from", "is",
];
const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st", "tr", "ch"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou"];

/// Word source for synthetic sentences.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    content: Vec<String>,
    function_rate: f64,
}

impl Vocabulary {
    /// `size` distinct content words built from two or three syllables.
    pub fn new(size: usize, rng: &mut impl Rng) -> Self {
        let mut seen = BTreeSet::new();
        let mut content = Vec::with_capacity(size);
        while content.len() < size {
            let syllables = rng.gen_range(2..=3);
            let word: String = (0..syllables)
                .map(|_| {
                    format!(
                        "{}{}",
                        ONSETS[rng.gen_range(0..ONSETS.len())],
                        VOWELS[rng.gen_range(0..VOWELS.len())]
                    )
                })
                .collect();
            if !FUNCTION_WORDS.contains(&word.as_str()) && seen.insert(word.clone()) {
                content.push(word);
            }
        }
        Vocabulary {
            content,
            function_rate: 0.3,
        }
    }

    fn content_word(&self, rng: &mut impl Rng) -> String {
        self.content[rng.gen_range(0..self.content.len())].clone()
    }

    fn word(&self, rng: &mut impl Rng) -> String {
        if rng.gen_bool(self.function_rate) {
            FUNCTION_WORDS[rng.gen_range(0..FUNCTION_WORDS.len())].to_string()
        } else {
            self.content_word(rng)
        }
    }

    /// A capitalized sentence of `8..=16` words ending in a period.
    pub fn sentence(&self, rng: &mut impl Rng) -> String {
        let len = rng.gen_range(8..=16);
        let mut words: Vec<String> = Vec::with_capacity(len);
        words.push(capitalize(&self.content_word(rng)));
        for _ in 1..len {
            words.push(self.word(rng));
        }
        format!("{}.", words.join(" "))
    }

    pub fn document(&self, sentences: usize, rng: &mut impl Rng) -> Vec<String> {
        (0..sentences).map(|_| self.sentence(rng)).collect()
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Rewrites one to two content words of a sentence (replace, insert or
/// delete), never leaving it identical.
pub fn edit_sentence(sentence: &str, vocab: &Vocabulary, rng: &mut impl Rng) -> String {
    let body = sentence.trim_end_matches('.');
    let mut words: Vec<String> = body.split(' ').map(str::to_string).collect();
    let ops = rng.gen_range(1..=2);
    for _ in 0..ops {
        let pos = rng.gen_range(1..words.len().max(2));
        match rng.gen_range(0..4) {
            0 if words.len() > 6 => {
                words.remove(pos.min(words.len() - 1));
            }
            1 => words.insert(pos.min(words.len()), vocab.content_word(rng)),
            _ => {
                let p = pos.min(words.len() - 1);
                let mut w = vocab.content_word(rng);
                while w == words[p] {
                    w = vocab.content_word(rng);
                }
                words[p] = w;
            }
        }
    }
    let out = format!("{}.", words.join(" "));
    if out == sentence {
        format!("{} {}.", body, vocab.content_word(rng))
    } else {
        out
    }
}

/// Mutation rates for [`mutate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationRates {
    pub delete: f64,
    pub edit: f64,
    pub max_additions: usize,
    pub moves: f64,
}

impl Default for MutationRates {
    fn default() -> Self {
        MutationRates {
            delete: 0.1,
            edit: 0.2,
            max_additions: 2,
            moves: 0.3,
        }
    }
}

/// What happened to one old sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fate {
    Deleted,
    Kept { new: usize, edited: bool },
}

/// Ground truth for a mutated pair; indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub old_fates: Vec<Fate>,
    pub added: BTreeSet<usize>,
}

impl GroundTruth {
    pub fn deleted(&self) -> BTreeSet<usize> {
        self.old_fates
            .iter()
            .enumerate()
            .filter(|(_, f)| **f == Fate::Deleted)
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn edited(&self) -> BTreeSet<usize> {
        self.old_fates
            .iter()
            .enumerate()
            .filter(|(_, f)| matches!(f, Fate::Kept { edited: true, .. }))
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn edges(&self) -> BTreeSet<Edge> {
        self.old_fates
            .iter()
            .enumerate()
            .filter_map(|(i, f)| match f {
                Fate::Kept { new, .. } => Some(Edge::new(i + 1, *new)),
                Fate::Deleted => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mutated {
    pub new: Vec<String>,
    pub truth: GroundTruth,
}

/// Applies deletions, edits, additions and at most one sentence move.
pub fn mutate(old: &[String], vocab: &Vocabulary, rates: MutationRates, rng: &mut impl Rng) -> Mutated {
    // (origin old index, text, edited)
    let mut slots: Vec<(Option<usize>, String, bool)> = Vec::with_capacity(old.len() + rates.max_additions);
    for (i, s) in old.iter().enumerate() {
        if rng.gen_bool(rates.delete) {
            continue;
        }
        if rng.gen_bool(rates.edit) {
            slots.push((Some(i), edit_sentence(s, vocab, rng), true));
        } else {
            slots.push((Some(i), s.clone(), false));
        }
    }
    let additions = rng.gen_range(0..=rates.max_additions);
    for _ in 0..additions {
        let at = rng.gen_range(0..=slots.len());
        slots.insert(at, (None, vocab.sentence(rng), false));
    }
    if slots.len() > 2 && rng.gen_bool(rates.moves) {
        let from = rng.gen_range(0..slots.len());
        let item = slots.remove(from);
        let mut to = rng.gen_range(0..=slots.len());
        if to == from {
            to = (to + 1) % (slots.len() + 1);
        }
        slots.insert(to, item);
    }
    let mut old_fates = vec![Fate::Deleted; old.len()];
    let mut added = BTreeSet::new();
    let mut new = Vec::with_capacity(slots.len());
    for (j, (origin, text, edited)) in slots.into_iter().enumerate() {
        match origin {
            Some(i) => old_fates[i] = Fate::Kept { new: j + 1, edited },
            None => {
                added.insert(j + 1);
            }
        }
        new.push(text);
    }
    Mutated {
        new,
        truth: GroundTruth { old_fates, added },
    }
}

/// Shuffles a document in place; handy for building arbitrary reorderings.
pub fn shuffle(doc: &mut [String], rng: &mut impl Rng) {
    doc.shuffle(rng);
}
