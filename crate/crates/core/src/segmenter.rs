//! Text normalization, rule-based sentence splitting and tokenization.
//!
//! Every function here is deterministic and allocation-only; the rest of the
//! engine relies on sentence units and word keys produced by this module.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Abbreviations that never terminate a sentence.
pub const ABBREVIATIONS: &[&str] = &["Mr.", "Mrs.", "Dr.", "U.S.", "U.K.", "St.", "No.", "vs."];

const TERMINALS: &[char] = &['.', '!', '?'];
const CLOSERS: &[char] = &['"', '\'', '\u{201D}', '\u{2019}', ')', ']', '\u{BB}'];
const OPENERS: &[char] = &['"', '\'', '\u{201C}', '\u{2018}', '(', '[', '\u{AB}'];

/// Ordered sentences of one article version, addressed 1-based.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SentenceList(Vec<String>);

impl SentenceList {
    pub fn new(sentences: Vec<String>) -> Self {
        SentenceList(sentences.into_iter().filter(|s| !s.trim().is_empty()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sentence at 1-based index `idx`.
    pub fn get(&self, idx: usize) -> Option<&str> {
        idx.checked_sub(1).and_then(|i| self.0.get(i)).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl<S: Into<String>> FromIterator<S> for SentenceList {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        SentenceList::new(iter.into_iter().map(Into::into).collect())
    }
}

/// Surface tokens with their parallel lowercase match keys.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSeq {
    tokens: Vec<String>,
    keys: Vec<String>,
}

impl TokenSeq {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Builds a sequence directly from keys, using each key as its own token.
    pub fn from_keys<S: AsRef<str>>(keys: &[S]) -> Self {
        let mut seq = TokenSeq::default();
        for k in keys {
            let key = match_key(k.as_ref());
            if !key.is_empty() {
                seq.tokens.push(k.as_ref().to_string());
                seq.keys.push(key);
            }
        }
        seq
    }
}

/// NFC-normalizes, unifies line endings, strips control characters and
/// collapses horizontal whitespace runs to a single space.
pub fn normalize_text(raw: &str) -> String {
    let unified = raw.replace("\r\n", "\n").replace('\r', "\n");
    let mut out = String::with_capacity(unified.len());
    let mut pending_space = false;
    for c in unified.nfc() {
        if c == '\n' {
            pending_space = false;
            // drop trailing space before a newline
            if out.ends_with(' ') {
                out.pop();
            }
            out.push('\n');
        } else if c.is_whitespace() {
            pending_space = true;
        } else if c.is_control() || is_format_char(c) {
            continue;
        } else {
            if pending_space && !out.is_empty() && !out.ends_with('\n') {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        }
    }
    out
}

fn is_format_char(c: char) -> bool {
    matches!(c, '\u{200B}'..='\u{200D}' | '\u{FEFF}' | '\u{00AD}')
}

/// Splits normalized text into sentences.
///
/// Newlines are hard boundaries. Within a line a boundary is a run of
/// `.`/`!`/`?` (plus any closing quotes or brackets) followed by whitespace
/// and an uppercase letter or opening quote, unless the word ending in the
/// period is one of [`ABBREVIATIONS`].
pub fn split_sentences(text: &str) -> SentenceList {
    let mut out = Vec::new();
    for line in text.split('\n') {
        split_line(line, &mut out);
    }
    SentenceList::new(out)
}

fn split_line(line: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = line.chars().collect();
    let n = chars.len();
    let mut start = 0;
    let mut i = 0;
    while i < n {
        if !TERMINALS.contains(&chars[i]) {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < n && TERMINALS.contains(&chars[j]) {
            j += 1;
        }
        while j < n && CLOSERS.contains(&chars[j]) {
            j += 1;
        }
        if j >= n || !chars[j].is_whitespace() {
            i = j.max(i + 1);
            continue;
        }
        let mut k = j;
        while k < n && chars[k].is_whitespace() {
            k += 1;
        }
        let opens = k < n && (chars[k].is_uppercase() || OPENERS.contains(&chars[k]));
        if opens && !(chars[i] == '.' && ends_with_abbreviation(&chars[start..j])) {
            push_trimmed(&chars[start..j], out);
            start = k;
        }
        i = k;
    }
    if start < n {
        push_trimmed(&chars[start..], out);
    }
}

fn ends_with_abbreviation(span: &[char]) -> bool {
    let word_start = span
        .iter()
        .rposition(|c| c.is_whitespace())
        .map_or(0, |p| p + 1);
    let word: String = span[word_start..]
        .iter()
        .skip_while(|c| OPENERS.contains(c))
        .collect();
    ABBREVIATIONS.contains(&word.as_str())
}

fn push_trimmed(span: &[char], out: &mut Vec<String>) {
    let s: String = span.iter().collect();
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

fn strip_boundary(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric())
}

fn match_key(token: &str) -> String {
    strip_boundary(token).to_lowercase()
}

/// Whitespace tokenization. Fields that are pure punctuation are dropped;
/// surviving tokens keep their punctuation while keys lose boundary
/// punctuation and case.
pub fn tokenize(sentence: &str) -> TokenSeq {
    let mut seq = TokenSeq::default();
    for field in sentence.split_whitespace() {
        let key = match_key(field);
        if key.is_empty() {
            continue;
        }
        seq.tokens.push(field.to_string());
        seq.keys.push(key);
    }
    seq
}

/// Lowercased, boundary-stripped token with a trailing possessive removed.
pub fn lemma_key(token: &str) -> String {
    let key = match_key(token);
    for suffix in ["'s", "\u{2019}s"] {
        if let Some(stem) = key.strip_suffix(suffix) {
            if !stem.is_empty() {
                return stem.to_string();
            }
        }
    }
    key
}

/// All contiguous `n`-key windows, joined by single spaces.
pub fn ngrams(seq: &TokenSeq, n: usize) -> Vec<String> {
    assert!(n >= 1, "ngram order must be positive");
    seq.keys().windows(n).map(|w| w.join(" ")).collect()
}

/// Maps tokens to lemmas, optionally overridden by an external table.
#[derive(Debug, Clone, Default)]
pub struct Lemmatizer {
    overrides: Option<HashMap<String, String>>,
}

impl Lemmatizer {
    pub fn with_map(map: HashMap<String, String>) -> Self {
        Lemmatizer { overrides: Some(map) }
    }

    /// Reads a `token<TAB>lemma` file. Tokens are matched case-insensitively.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut map = HashMap::new();
        for (n, line) in body.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (token, lemma) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: n + 1,
                message: "expected token<TAB>lemma".into(),
            })?;
            map.insert(match_key(token), lemma.trim().to_lowercase());
        }
        Ok(Lemmatizer::with_map(map))
    }

    pub fn lemma(&self, token: &str) -> String {
        if let Some(map) = &self.overrides {
            if let Some(l) = map.get(&match_key(token)) {
                return l.clone();
            }
        }
        lemma_key(token)
    }
}
