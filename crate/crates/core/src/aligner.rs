//! Bidirectional sentence matching, the `A`/`R`/`M idx.. C|U` tag grammar,
//! word-level atomic edits and threshold calibration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmenter::{normalize_text, tokenize, TokenSeq};
use crate::similarity::SimMethod;

/// Similarity cutoff; a pair matches only when its best score is strictly
/// greater than the threshold.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct MatchThreshold(f64);

impl MatchThreshold {
    pub fn new(t: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&t) {
            Ok(MatchThreshold(t))
        } else {
            Err(Error::InvalidArgument(format!("threshold {t} outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn admits(self, score: f64) -> bool {
        score > self.0
    }
}

impl fmt::Display for MatchThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Anything that can score a source sentence against a target sentence.
pub trait SentenceScorer: Sync {
    fn score(&self, x: &TokenSeq, y: &TokenSeq) -> Result<f64>;
}

impl SentenceScorer for SimMethod {
    fn score(&self, x: &TokenSeq, y: &TokenSeq) -> Result<f64> {
        SimMethod::score(self, x, y)
    }
}

impl<F> SentenceScorer for F
where
    F: Fn(&TokenSeq, &TokenSeq) -> Result<f64> + Sync,
{
    fn score(&self, x: &TokenSeq, y: &TokenSeq) -> Result<f64> {
        self(x, y)
    }
}

/// Best target (1-based) for every source sentence, or `None` when the best
/// score does not clear the threshold.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DirectionalMap {
    targets: Vec<Option<usize>>,
    scores: Vec<f64>,
}

impl DirectionalMap {
    /// Builds a map from explicit 1-based targets; scores default to 1.
    pub fn from_targets(targets: Vec<Option<usize>>) -> Self {
        let scores = vec![1.0; targets.len()];
        DirectionalMap { targets, scores }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Target of 1-based source index `i`.
    pub fn target(&self, i: usize) -> Option<usize> {
        self.targets.get(i.checked_sub(1)?).copied().flatten()
    }

    pub fn best_score(&self, i: usize) -> Option<f64> {
        self.scores.get(i.checked_sub(1)?).copied()
    }

    /// `(source, target)` pairs with a match, 1-based.
    pub fn matches(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.targets
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.map(|t| (i + 1, t)))
    }
}

/// Algorithm-1 style matching in one direction. Argmax ties go to the
/// smallest target index.
pub fn match_directional<S: SentenceScorer + ?Sized>(
    source: &[TokenSeq],
    target: &[TokenSeq],
    sim: &S,
    threshold: MatchThreshold,
) -> Result<DirectionalMap> {
    let mut rows = Vec::with_capacity(source.len());
    for s in source {
        let mut row = Vec::with_capacity(target.len());
        for t in target {
            row.push(sim.score(s, t)?);
        }
        rows.push(row);
    }
    Ok(directional_from_scores(&rows, threshold))
}

/// Applies argmax and threshold to a precomputed `source x target` score matrix.
pub fn directional_from_scores(scores: &[Vec<f64>], threshold: MatchThreshold) -> DirectionalMap {
    let mut map = DirectionalMap::default();
    for row in scores {
        let mut best: Option<(usize, f64)> = None;
        for (j, &s) in row.iter().enumerate() {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((j + 1, s));
            }
        }
        match best {
            Some((j, d)) => {
                map.targets.push(threshold.admits(d).then_some(j));
                map.scores.push(d);
            }
            None => {
                map.targets.push(None);
                map.scores.push(0.0);
            }
        }
    }
    map
}

/// Old-to-new sentence edge, both indices 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub old: usize,
    pub new: usize,
}

impl Edge {
    pub fn new(old: usize, new: usize) -> Self {
        Edge { old, new }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.old, self.new)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Forward,
    Backward,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeInfo {
    pub score: f64,
    pub provenance: Provenance,
}

/// Union of both directional maps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchGraph {
    edges: BTreeMap<Edge, EdgeInfo>,
}

impl MatchGraph {
    pub fn from_edges(edges: impl IntoIterator<Item = Edge>) -> Self {
        let edges = edges
            .into_iter()
            .map(|e| {
                (
                    e,
                    EdgeInfo {
                        score: 1.0,
                        provenance: Provenance::Both,
                    },
                )
            })
            .collect();
        MatchGraph { edges }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: Edge) -> bool {
        self.edges.contains_key(&e)
    }

    pub fn info(&self, e: Edge) -> Option<EdgeInfo> {
        self.edges.get(&e).copied()
    }

    /// Edges in canonical `(old, new)` order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.keys().copied()
    }

    pub fn new_neighbors(&self, old: usize) -> Vec<usize> {
        self.edges
            .range(Edge::new(old, 0)..=Edge::new(old, usize::MAX))
            .map(|(e, _)| e.new)
            .collect()
    }

    pub fn old_neighbors(&self, new: usize) -> Vec<usize> {
        self.edges.keys().filter(|e| e.new == new).map(|e| e.old).collect()
    }
}

/// Edge set `{(i, fwd[i])} ∪ {(bwd[j], j)}`.
pub fn build_match_graph(fwd: &DirectionalMap, bwd: &DirectionalMap) -> MatchGraph {
    let mut edges: BTreeMap<Edge, EdgeInfo> = BTreeMap::new();
    for (i, j) in fwd.matches() {
        let score = fwd.best_score(i).unwrap_or(0.0);
        edges.insert(
            Edge::new(i, j),
            EdgeInfo {
                score,
                provenance: Provenance::Forward,
            },
        );
    }
    for (j, i) in bwd.matches() {
        let score = bwd.best_score(j).unwrap_or(0.0);
        edges
            .entry(Edge::new(i, j))
            .and_modify(|info| {
                info.provenance = Provenance::Both;
                info.score = info.score.max(score);
            })
            .or_insert(EdgeInfo {
                score,
                provenance: Provenance::Backward,
            });
    }
    MatchGraph { edges }
}

/// Third tag component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Change {
    Changed,
    Unchanged,
}

impl Change {
    pub fn symbol(self) -> &'static str {
        match self {
            Change::Changed => "C",
            Change::Unchanged => "U",
        }
    }
}

/// Per-sentence tag: `A`, `R`, or `M` with counterpart indices and C/U.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SentenceTag {
    Added,
    Removed,
    Matched {
        indices: Vec<usize>,
        /// Always emitted by this crate; accepted as absent when parsing.
        change: Option<Change>,
    },
}

impl SentenceTag {
    pub fn matched(indices: Vec<usize>, change: Change) -> Self {
        SentenceTag::Matched {
            indices,
            change: Some(change),
        }
    }

    pub fn indices(&self) -> &[usize] {
        match self {
            SentenceTag::Matched { indices, .. } => indices,
            _ => &[],
        }
    }

    pub fn is_changed_match(&self) -> bool {
        matches!(
            self,
            SentenceTag::Matched {
                change: Some(Change::Changed),
                ..
            }
        )
    }

    pub fn is_unchanged_match(&self) -> bool {
        matches!(
            self,
            SentenceTag::Matched {
                change: Some(Change::Unchanged),
                ..
            }
        )
    }
}

impl fmt::Display for SentenceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SentenceTag::Added => f.write_str("A"),
            SentenceTag::Removed => f.write_str("R"),
            SentenceTag::Matched { indices, change } => {
                f.write_str("M")?;
                for i in indices {
                    write!(f, " {i}")?;
                }
                if let Some(c) = change {
                    write!(f, " {}", c.symbol())?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for SentenceTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("malformed tag {s:?}"));
        match s {
            "A" => return Ok(SentenceTag::Added),
            "R" => return Ok(SentenceTag::Removed),
            _ => {}
        }
        let mut parts: Vec<&str> = s.split(' ').collect();
        if parts.first() != Some(&"M") {
            return Err(bad());
        }
        let change = match parts.last() {
            Some(&"C") => Some(Change::Changed),
            Some(&"U") => Some(Change::Unchanged),
            _ => None,
        };
        if change.is_some() {
            parts.pop();
        }
        let mut indices = Vec::with_capacity(parts.len() - 1);
        for p in &parts[1..] {
            if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) || p.starts_with('0') {
                return Err(bad());
            }
            let idx: usize = p.parse().map_err(|_| bad())?;
            if indices.last().is_some_and(|&last| last >= idx) {
                return Err(bad());
            }
            indices.push(idx);
        }
        if indices.is_empty() {
            return Err(bad());
        }
        Ok(SentenceTag::Matched { indices, change })
    }
}

/// Words with boundary punctuation removed, case preserved.
fn surface_words(s: &str) -> Vec<String> {
    normalize_text(s)
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// `U` when both sentences carry the same word sequence once boundary
/// punctuation (quotes, commas, final periods) is ignored.
pub fn classify_change(s_old: &str, s_new: &str) -> Change {
    classify_change_multi(s_old, &[s_new])
}

/// Like [`classify_change`] against the concatenation of several
/// counterparts, in order.
pub fn classify_change_multi(sentence: &str, counterparts: &[&str]) -> Change {
    let mine = surface_words(sentence);
    let theirs: Vec<String> = counterparts.iter().flat_map(|c| surface_words(c)).collect();
    if mine == theirs {
        Change::Unchanged
    } else {
        Change::Changed
    }
}

/// Tags for both versions from the match graph.
pub fn derive_tags<S: AsRef<str>>(
    old: &[S],
    new: &[S],
    graph: &MatchGraph,
) -> (Vec<SentenceTag>, Vec<SentenceTag>) {
    let mut old_adj: Vec<Vec<usize>> = vec![Vec::new(); old.len()];
    let mut new_adj: Vec<Vec<usize>> = vec![Vec::new(); new.len()];
    for e in graph.edges() {
        old_adj[e.old - 1].push(e.new);
        new_adj[e.new - 1].push(e.old);
    }
    let tag = |me: &str, adj: &mut Vec<usize>, other: &[S], unmatched: SentenceTag| {
        if adj.is_empty() {
            return unmatched;
        }
        adj.sort_unstable();
        let counterparts: Vec<&str> = adj.iter().map(|&k| other[k - 1].as_ref()).collect();
        SentenceTag::matched(adj.clone(), classify_change_multi(me, &counterparts))
    };
    let tags_old = old
        .iter()
        .zip(old_adj.iter_mut())
        .map(|(s, adj)| tag(s.as_ref(), adj, new, SentenceTag::Removed))
        .collect();
    let tags_new = new
        .iter()
        .zip(new_adj.iter_mut())
        .map(|(s, adj)| tag(s.as_ref(), adj, old, SentenceTag::Added))
        .collect();
    (tags_old, tags_new)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditKind {
    Insert,
    Delete,
    Replace,
}

impl EditKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EditKind::Insert => "insert",
            EditKind::Delete => "delete",
            EditKind::Replace => "replace",
        }
    }
}

/// A maximal run of differing tokens. Spans are 0-based, half-open token
/// ranges; `replacement` holds the new tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicEdit {
    pub kind: EditKind,
    pub old: Range<usize>,
    pub new: Range<usize>,
    pub replacement: Vec<String>,
}

/// Token-level LCS diff between two matched sentences.
pub fn word_diff(old: &TokenSeq, new: &TokenSeq) -> Vec<AtomicEdit> {
    diff_tokens(old.tokens(), new.tokens())
}

pub fn diff_tokens<S: AsRef<str> + PartialEq>(a: &[S], b: &[S]) -> Vec<AtomicEdit> {
    let (n, m) = (a.len(), b.len());
    // lcs[i][j] = LCS length of a[i..] and b[j..]
    let mut lcs = vec![0u32; (n + 1) * (m + 1)];
    let at = |i: usize, j: usize| i * (m + 1) + j;
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[at(i, j)] = if a[i] == b[j] {
                lcs[at(i + 1, j + 1)] + 1
            } else {
                lcs[at(i + 1, j)].max(lcs[at(i, j + 1)])
            };
        }
    }
    let mut edits = Vec::new();
    let (mut i, mut j) = (0, 0);
    let (mut run_i, mut run_j) = (0, 0);
    let flush = |i: usize, j: usize, run_i: usize, run_j: usize, edits: &mut Vec<AtomicEdit>| {
        let kind = match (run_i < i, run_j < j) {
            (true, true) => EditKind::Replace,
            (true, false) => EditKind::Delete,
            (false, true) => EditKind::Insert,
            (false, false) => return,
        };
        edits.push(AtomicEdit {
            kind,
            old: run_i..i,
            new: run_j..j,
            replacement: b[run_j..j].iter().map(|t| t.as_ref().to_string()).collect(),
        });
    };
    while i < n || j < m {
        if i < n && j < m && a[i] == b[j] && lcs[at(i, j)] == lcs[at(i + 1, j + 1)] + 1 {
            flush(i, j, run_i, run_j, &mut edits);
            i += 1;
            j += 1;
            run_i = i;
            run_j = j;
        } else if i < n && (j >= m || lcs[at(i + 1, j)] >= lcs[at(i, j + 1)]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    flush(i, j, run_i, run_j, &mut edits);
    edits
}

/// Rebuilds the new token sequence from the old one and its edits.
pub fn apply_edits<S: AsRef<str>>(old: &[S], edits: &[AtomicEdit]) -> Vec<String> {
    let mut out = Vec::new();
    let mut pos = 0;
    for e in edits {
        out.extend(old[pos..e.old.start].iter().map(|t| t.as_ref().to_string()));
        out.extend(e.replacement.iter().cloned());
        pos = e.old.end;
    }
    out.extend(old[pos..].iter().map(|t| t.as_ref().to_string()));
    out
}

/// Precision, recall and F1 in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MatchScores {
    pub fn from_counts(tp: usize, n_pred: usize, n_gold: usize) -> Self {
        if n_pred == 0 && n_gold == 0 {
            return MatchScores {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            };
        }
        let precision = if n_pred == 0 { 0.0 } else { tp as f64 / n_pred as f64 };
        let recall = if n_gold == 0 { 0.0 } else { tp as f64 / n_gold as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        MatchScores { precision, recall, f1 }
    }
}

/// Set precision/recall/F1. Two empty sets score 1.
pub fn match_f1<T: Ord>(predicted: &BTreeSet<T>, gold: &BTreeSet<T>) -> MatchScores {
    let tp = predicted.intersection(gold).count();
    MatchScores::from_counts(tp, predicted.len(), gold.len())
}

/// One hand-annotated version pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedPair {
    pub article_id: String,
    pub old_sentences: Vec<String>,
    pub new_sentences: Vec<String>,
    /// `[old_idx, new_idx]`, 1-based.
    pub gold_edges: Vec<(usize, usize)>,
}

/// Reads annotated pairs, one JSON object per line.
pub fn load_fixtures(path: impl AsRef<Path>) -> Result<Vec<AnnotatedPair>> {
    let path = path.as_ref();
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    body.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: n + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub threshold: f64,
    pub tuning_f1: f64,
    pub heldout: MatchScores,
    pub tuning_ids: Vec<String>,
    pub heldout_ids: Vec<String>,
    /// `(threshold, tuning F1)` for every grid value, in grid order.
    pub curve: Vec<(f64, f64)>,
}

/// FNV-1a, used for the stable fixture split.
pub fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

struct ScoredPair {
    fwd: Vec<Vec<f64>>,
    bwd: Vec<Vec<f64>>,
    gold: BTreeSet<Edge>,
}

impl ScoredPair {
    fn edges_at(&self, t: MatchThreshold) -> BTreeSet<Edge> {
        let g = build_match_graph(
            &directional_from_scores(&self.fwd, t),
            &directional_from_scores(&self.bwd, t),
        );
        g.edges().collect()
    }
}

fn f1_over(pairs: &[&ScoredPair], t: MatchThreshold) -> MatchScores {
    let (mut tp, mut n_pred, mut n_gold) = (0, 0, 0);
    for p in pairs {
        let pred = p.edges_at(t);
        tp += pred.intersection(&p.gold).count();
        n_pred += pred.len();
        n_gold += p.gold.len();
    }
    MatchScores::from_counts(tp, n_pred, n_gold)
}

/// Grid-searches the match threshold on one half of the fixtures and
/// reports F1 on the other half.
///
/// Fixtures are ordered by a stable hash of their article id; the first half
/// (rounded up) tunes, the rest is held out. Ties go to the smallest
/// threshold.
pub fn calibrate_threshold<S: SentenceScorer + ?Sized>(
    fixtures: &[AnnotatedPair],
    sim: &S,
    grid: &[f64],
) -> Result<Calibration> {
    if fixtures.is_empty() || grid.is_empty() {
        return Err(Error::InvalidArgument("calibration needs fixtures and a grid".into()));
    }
    let grid: Vec<MatchThreshold> = grid.iter().map(|&t| MatchThreshold::new(t)).collect::<Result<_>>()?;
    let mut ordered: Vec<&AnnotatedPair> = fixtures.iter().collect();
    ordered.sort_by(|a, b| {
        (stable_hash(&a.article_id), &a.article_id).cmp(&(stable_hash(&b.article_id), &b.article_id))
    });
    let cut = ordered.len().div_ceil(2);
    let scored: Vec<ScoredPair> = ordered.iter().map(|p| score_pair(p, sim)).collect::<Result<_>>()?;
    let (tune, held) = scored.split_at(cut);
    let tune: Vec<&ScoredPair> = tune.iter().collect();
    let held: Vec<&ScoredPair> = held.iter().collect();
    if tune.iter().all(|p| p.gold.is_empty()) {
        return Err(Error::InvalidArgument("tuning half has no gold edges".into()));
    }
    let mut curve = Vec::with_capacity(grid.len());
    let mut best: Option<(MatchThreshold, f64)> = None;
    for &t in &grid {
        let f1 = f1_over(&tune, t).f1;
        curve.push((t.value(), f1));
        let better = match best {
            None => true,
            Some((bt, bf)) => f1 > bf || (f1 == bf && t < bt),
        };
        if better {
            best = Some((t, f1));
        }
    }
    let (threshold, tuning_f1) = best.expect("grid is non-empty");
    Ok(Calibration {
        threshold: threshold.value(),
        tuning_f1,
        heldout: f1_over(&held, threshold),
        tuning_ids: ordered[..cut].iter().map(|p| p.article_id.clone()).collect(),
        heldout_ids: ordered[cut..].iter().map(|p| p.article_id.clone()).collect(),
        curve,
    })
}

fn score_pair<S: SentenceScorer + ?Sized>(pair: &AnnotatedPair, sim: &S) -> Result<ScoredPair> {
    let old: Vec<TokenSeq> = pair.old_sentences.iter().map(|s| tokenize(s)).collect();
    let new: Vec<TokenSeq> = pair.new_sentences.iter().map(|s| tokenize(s)).collect();
    let matrix = |a: &[TokenSeq], b: &[TokenSeq]| -> Result<Vec<Vec<f64>>> {
        a.iter()
            .map(|x| b.iter().map(|y| sim.score(x, y)).collect())
            .collect()
    };
    for &(o, n) in &pair.gold_edges {
        if o == 0 || n == 0 || o > old.len() || n > new.len() {
            return Err(Error::InvalidArgument(format!(
                "{}: gold edge ({o}, {n}) out of range",
                pair.article_id
            )));
        }
    }
    Ok(ScoredPair {
        fwd: matrix(&old, &new)?,
        bwd: matrix(&new, &old)?,
        gold: pair.gold_edges.iter().map(|&(o, n)| Edge::new(o, n)).collect(),
    })
}
