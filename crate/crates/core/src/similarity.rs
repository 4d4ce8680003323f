//! Word- and sentence-level similarity functions.
//!
//! The central score is the asymmetric maximum alignment
//! `sim(x, y) = (1/|x|) * sum_i max_j phi(x_i, y_j)`, which lets many words of
//! `x` land on the same word of `y`. One-to-one (Hungarian) matching, greedy
//! non-overlapping ngram matching and smoothed sentence BLEU are provided for
//! comparison. All scores lie in `[0, 1]`.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::assignment::max_weight_assignment;
use crate::error::{Error, Result};
use crate::segmenter::{Lemmatizer, TokenSeq};

/// Exact lemma match.
pub fn phi_lexical(key_x: &str, key_y: &str) -> f64 {
    if key_x == key_y {
        1.0
    } else {
        0.0
    }
}

/// Dot product of two unit vectors, clamped to `[0, 1]`.
pub fn phi_embedding(x: &[f32], y: &[f32]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| f64::from(*a) * f64::from(*b)).sum();
    Ok(dot.clamp(0.0, 1.0))
}

/// Word vectors keyed by lowercase token, each stored with unit L2 norm.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    data: Vec<f32>,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&[f32]> {
        self.index
            .get(key)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// Inserts `vector` after normalizing it. Fails on a dimension change or
    /// a zero vector.
    pub fn insert(&mut self, key: &str, vector: &[f32]) -> Result<()> {
        if self.index.is_empty() && self.data.is_empty() {
            self.dim = vector.len();
        } else if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        let norm = vector.iter().map(|v| f64::from(*v).powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument(format!("vector for {key:?} has zero or non-finite norm")));
        }
        let unit = vector.iter().map(|v| (f64::from(*v) / norm) as f32);
        match self.index.get(key) {
            Some(&i) => {
                for (slot, v) in self.data[i * self.dim..(i + 1) * self.dim].iter_mut().zip(unit) {
                    *slot = v;
                }
            }
            None => {
                self.index.insert(key.to_string(), self.index.len());
                self.data.extend(unit);
            }
        }
        Ok(())
    }

    /// `phi` between two keys; out-of-vocabulary keys score 0.
    pub fn phi(&self, key_x: &str, key_y: &str) -> f64 {
        match (self.get(key_x), self.get(key_y)) {
            (Some(a), Some(b)) => phi_embedding(a, b).unwrap_or(0.0),
            _ => 0.0,
        }
    }
}

/// Loads whitespace-separated `token v1 .. vd` lines. Keys are lowercased.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&body)
}

pub fn parse_embeddings(body: &str) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::default();
    for (n, line) in body.lines().enumerate() {
        let line_no = n + 1;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let vector = fields
            .map(|f| f.parse::<f32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line: line_no,
                message: format!("bad vector component: {e}"),
            })?;
        if vector.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "token without vector".into(),
            });
        }
        table
            .insert(&token.to_lowercase(), &vector)
            .map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
    }
    Ok(table)
}

/// Word similarity function used inside sentence scores.
#[derive(Debug, Clone)]
pub enum WordSim {
    /// 1 when lemmas agree, else 0.
    Lexical(Lemmatizer),
    /// Clamped cosine of stored vectors.
    Embedding(Arc<EmbeddingTable>),
}

impl Default for WordSim {
    fn default() -> Self {
        WordSim::Lexical(Lemmatizer::default())
    }
}

impl WordSim {
    /// Row-major `|x| x |y|` matrix of phi values.
    fn matrix(&self, x: &TokenSeq, y: &TokenSeq) -> Vec<Vec<f64>> {
        match self {
            WordSim::Lexical(lem) => {
                let ly: Vec<String> = y.keys().iter().map(|k| lem.lemma(k)).collect();
                x.keys()
                    .iter()
                    .map(|k| {
                        let lx = lem.lemma(k);
                        ly.iter().map(|l| phi_lexical(&lx, l)).collect()
                    })
                    .collect()
            }
            WordSim::Embedding(table) => {
                let vy: Vec<Option<&[f32]>> = y.keys().iter().map(|k| table.get(k)).collect();
                x.keys()
                    .iter()
                    .map(|k| {
                        let vx = table.get(k);
                        vy.iter()
                            .map(|v| match (vx, v) {
                                (Some(a), Some(b)) => phi_embedding(a, b).unwrap_or(0.0),
                                _ => 0.0,
                            })
                            .collect()
                    })
                    .collect()
            }
        }
    }
}

/// Asymmetric maximum alignment of `x` into `y`.
pub fn sim_asym_max(x: &TokenSeq, y: &TokenSeq, phi: &WordSim) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptySource);
    }
    if y.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = phi
        .matrix(x, y)
        .iter()
        .map(|row| row.iter().copied().fold(0.0, f64::max))
        .sum();
    Ok((total / x.len() as f64).clamp(0.0, 1.0))
}

/// One-to-one variant: best assignment weight divided by `|x|`.
pub fn sim_hungarian(x: &TokenSeq, y: &TokenSeq, phi: &WordSim) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptySource);
    }
    if y.is_empty() {
        return Ok(0.0);
    }
    let (total, _) = max_weight_assignment(&phi.matrix(x, y));
    Ok((total / x.len() as f64).clamp(0.0, 1.0))
}

/// Fraction of `x`'s ngrams that find an unused exact match in `y`, claiming
/// matches left to right.
pub fn sim_asym_ngram(x: &TokenSeq, y: &TokenSeq, n: usize) -> Result<f64> {
    sim_asym_ngram_with(x, y, n, &Lemmatizer::default())
}

pub fn sim_asym_ngram_with(x: &TokenSeq, y: &TokenSeq, n: usize, lem: &Lemmatizer) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("ngram order must be positive".into()));
    }
    if x.len() < n {
        return Err(Error::TooShortForNgram { len: x.len(), n });
    }
    let lx: Vec<String> = x.keys().iter().map(|k| lem.lemma(k)).collect();
    let ly: Vec<String> = y.keys().iter().map(|k| lem.lemma(k)).collect();
    let mut available: HashMap<&[String], usize> = HashMap::new();
    for w in ly.windows(n) {
        *available.entry(w).or_default() += 1;
    }
    let total = lx.len() - n + 1;
    let mut matched = 0usize;
    for w in lx.windows(n) {
        if let Some(count) = available.get_mut(w) {
            if *count > 0 {
                *count -= 1;
                matched += 1;
            }
        }
    }
    Ok(matched as f64 / total as f64)
}

/// Sentence BLEU of hypothesis `x` against the single reference `y`.
///
/// `weights[k]` applies to order `k + 1`; zero-weight orders are skipped.
/// Orders of two and above use add-one smoothing of the modified precision.
pub fn sim_bleu(x: &TokenSeq, y: &TokenSeq, weights: &[f64]) -> Result<f64> {
    validate_bleu_weights(weights)?;
    if x.is_empty() {
        return Ok(0.0);
    }
    let hyp = x.keys();
    let reference = y.keys();
    let mut log_sum = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let order = k + 1;
        let (matches, total) = clipped_matches(hyp, reference, order);
        let precision = if order == 1 {
            if total == 0 {
                0.0
            } else {
                matches as f64 / total as f64
            }
        } else {
            (matches as f64 + 1.0) / (total as f64 + 1.0)
        };
        if precision == 0.0 {
            return Ok(0.0);
        }
        log_sum += w * precision.ln();
    }
    let (c, r) = (hyp.len() as f64, reference.len() as f64);
    let brevity = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    Ok((brevity * log_sum.exp()).clamp(0.0, 1.0))
}

fn validate_bleu_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidArgument("BLEU weights must be non-empty and non-negative".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!("BLEU weights sum to {sum}, expected 1")));
    }
    Ok(())
}

fn clipped_matches(hyp: &[String], reference: &[String], n: usize) -> (usize, usize) {
    if hyp.len() < n {
        return (0, 0);
    }
    let mut ref_counts: HashMap<&[String], usize> = HashMap::new();
    for w in reference.windows(n) {
        *ref_counts.entry(w).or_default() += 1;
    }
    let mut hyp_counts: HashMap<&[String], usize> = HashMap::new();
    for w in hyp.windows(n) {
        *hyp_counts.entry(w).or_default() += 1;
    }
    let matches = hyp_counts
        .iter()
        .map(|(g, &c)| c.min(ref_counts.get(g).copied().unwrap_or(0)))
        .sum();
    (matches, hyp.len() - n + 1)
}

/// A complete sentence-similarity method, as selected on the command line.
#[derive(Debug, Clone)]
pub enum SimMethod {
    /// Maximum alignment with a word similarity.
    MaxAlign { phi: WordSim, label: String },
    /// Non-overlapping ngram matching of order `n`.
    Ngram { n: usize, lemmatizer: Lemmatizer },
    /// One-to-one assignment with a word similarity.
    Hungarian { phi: WordSim, label: String },
    /// Sentence BLEU with per-order weights.
    Bleu { weights: Vec<f64> },
}

impl Default for SimMethod {
    fn default() -> Self {
        SimMethod::Ngram {
            n: 2,
            lemmatizer: Lemmatizer::default(),
        }
    }
}

impl SimMethod {
    pub fn unigram() -> Self {
        SimMethod::MaxAlign {
            phi: WordSim::default(),
            label: "unigram".into(),
        }
    }

    pub fn ngram(n: usize) -> Self {
        SimMethod::Ngram {
            n,
            lemmatizer: Lemmatizer::default(),
        }
    }

    pub fn hungarian() -> Self {
        SimMethod::Hungarian {
            phi: WordSim::default(),
            label: "hungarian".into(),
        }
    }

    /// Parses `unigram | ngram:N | embed:PATH | hungarian | bleu:W`, where
    /// `W` is a comma-separated weight list (`bleu:0.5,0.5`) or one of the
    /// shorthands `1`, `2`, `3` for a single order (`bleu:2` is weight one
    /// on bigrams).
    pub fn parse(spec: &str, lemmatizer: Option<Lemmatizer>) -> Result<Self> {
        let lemmatizer = lemmatizer.unwrap_or_default();
        let (kind, arg) = match spec.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (spec, None),
        };
        let bad = || Error::InvalidArgument(format!("unknown similarity method {spec:?}"));
        match (kind, arg) {
            ("unigram", None) => Ok(SimMethod::MaxAlign {
                phi: WordSim::Lexical(lemmatizer),
                label: "unigram".into(),
            }),
            ("hungarian", None) => Ok(SimMethod::Hungarian {
                phi: WordSim::Lexical(lemmatizer),
                label: "hungarian".into(),
            }),
            ("ngram", Some(n)) => {
                let n: usize = n.parse().map_err(|_| bad())?;
                if n == 0 {
                    return Err(bad());
                }
                Ok(SimMethod::Ngram { n, lemmatizer })
            }
            ("embed", Some(path)) => {
                let table = load_embeddings(PathBuf::from(path))?;
                Ok(SimMethod::MaxAlign {
                    phi: WordSim::Embedding(Arc::new(table)),
                    label: format!("embed:{path}"),
                })
            }
            ("bleu", Some(w)) => {
                let weights = parse_bleu_weights(w).ok_or_else(bad)?;
                validate_bleu_weights(&weights)?;
                Ok(SimMethod::Bleu { weights })
            }
            _ => Err(bad()),
        }
    }

    pub fn score(&self, x: &TokenSeq, y: &TokenSeq) -> Result<f64> {
        match self {
            SimMethod::MaxAlign { phi, .. } => sim_asym_max(x, y, phi),
            SimMethod::Hungarian { phi, .. } => sim_hungarian(x, y, phi),
            SimMethod::Ngram { n, lemmatizer } => sim_asym_ngram_with(x, y, *n, lemmatizer),
            SimMethod::Bleu { weights } => sim_bleu(x, y, weights),
        }
    }
}

fn parse_bleu_weights(w: &str) -> Option<Vec<f64>> {
    if !w.contains(',') {
        if let Ok(order) = w.parse::<usize>() {
            if order == 0 {
                return None;
            }
            let mut weights = vec![0.0; order];
            weights[order - 1] = 1.0;
            return Some(weights);
        }
    }
    w.split(',').map(|p| p.trim().parse::<f64>().ok()).collect()
}

impl fmt::Display for SimMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimMethod::MaxAlign { label, .. } | SimMethod::Hungarian { label, .. } => f.write_str(label),
            SimMethod::Ngram { n, .. } => write!(f, "ngram:{n}"),
            SimMethod::Bleu { weights } => {
                let parts: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
                write!(f, "bleu:{}", parts.join(","))
            }
        }
    }
}
