//! Text preparation: tokenizing, stop-word removal, information-gain
//! feature scoring, vocabulary selection, and binary presence features.
//!
//! Corpora travel as TSV: `doc_id <TAB> comma-separated-labels <TAB> text`,
//! one document per line, with backslash escapes (`\\`, `\t`, `\n`, `\r`)
//! inside the text field.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Lowercased maximal runs of ASCII letters; everything else separates.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_ascii_alphabetic() {
            cur.push(c.to_ascii_lowercase());
        } else if !cur.is_empty() {
            tokens.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

#[derive(Debug, Clone, Default)]
pub struct Stoplist {
    words: HashSet<String>,
}

impl Stoplist {
    /// The bundled general-English stop list (571 words).
    pub fn bundled() -> Self {
        Self::from_text(include_str!("../assets/stoplist.txt"))
    }

    /// One word per line; blank lines are ignored, words are lowercased.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::from_text(&fs::read_to_string(path)?))
    }

    pub fn from_text(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_lowercase)
            .collect();
        Stoplist { words }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Order-preserving removal of stop words.
pub fn apply_stoplist(tokens: &[String], stoplist: &Stoplist) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !stoplist.contains(t))
        .cloned()
        .collect()
}

/// Tokenize, drop stop words, and keep each remaining word once.
pub fn doc_term_set(text: &str, stoplist: &Stoplist) -> BTreeSet<String> {
    let mut set = BTreeSet::new();
    for t in tokenize(text) {
        if !stoplist.contains(&t) {
            set.insert(t);
        }
    }
    set
}

/// Document-level contingency counts for one word against a binary category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordCounts {
    pub present_pos: usize,
    pub present_neg: usize,
    pub absent_pos: usize,
    pub absent_neg: usize,
}

impl WordCounts {
    pub fn total(&self) -> usize {
        self.present_pos + self.present_neg + self.absent_pos + self.absent_neg
    }
}

fn binary_entropy<T: Real>(p: T) -> T {
    let mut h = T::zero();
    for q in [p, T::one() - p] {
        if q > T::zero() {
            h -= q * q.log2();
        }
    }
    h
}

/// Expected reduction, in bits, of the category entropy from observing
/// whether the word is present: H(c) - P(w)H(c|w) - P(!w)H(c|!w).
pub fn information_gain<T: Real>(counts: &WordCounts, n_docs: usize) -> Result<T> {
    if n_docs == 0 {
        return Err(Error::Validation("information gain over zero documents".into()));
    }
    if counts.total() != n_docs {
        return Err(Error::Validation(format!(
            "contingency counts sum to {}, expected {}",
            counts.total(),
            n_docs
        )));
    }
    let n = T::of(n_docs as f64);
    let of = |c: usize| T::of(c as f64);
    let pos = counts.present_pos + counts.absent_pos;
    let present = counts.present_pos + counts.present_neg;
    let h_c = binary_entropy(of(pos) / n);
    let mut gain = h_c;
    if present > 0 {
        let p_w = of(present) / n;
        gain -= p_w * binary_entropy(of(counts.present_pos) / of(present));
    }
    let absent = n_docs - present;
    if absent > 0 {
        let p_a = of(absent) / n;
        gain -= p_a * binary_entropy(of(counts.absent_pos) / of(absent));
    }
    Ok(gain)
}

/// Information gain for every word appearing in `term_sets`, against the
/// per-document labels. Deterministic word order (lexicographic).
pub fn score_words<T: Real>(term_sets: &[BTreeSet<String>], labels: &[bool]) -> Result<Vec<(String, T)>> {
    if term_sets.len() != labels.len() {
        return Err(Error::Validation(format!(
            "{} documents but {} labels",
            term_sets.len(),
            labels.len()
        )));
    }
    let n = term_sets.len();
    if n == 0 {
        return Err(Error::Validation("no documents to score".into()));
    }
    let n_pos = labels.iter().filter(|&&b| b).count();
    let mut present: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (set, &label) in term_sets.iter().zip(labels) {
        for w in set {
            let e = present.entry(w).or_insert((0, 0));
            if label {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
    }
    present
        .into_iter()
        .map(|(w, (pp, pn))| {
            let counts = WordCounts {
                present_pos: pp,
                present_neg: pn,
                absent_pos: n_pos - pp,
                absent_neg: (n - n_pos) - pn,
            };
            Ok((w.to_string(), information_gain(&counts, n)?))
        })
        .collect()
}

/// A scored vocabulary in selection order (score descending, then word).
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary<T> {
    pub entries: Vec<(String, T)>,
    /// How many words were asked for; fewer candidates set `is_short`.
    pub requested: usize,
}

impl<T: Real> Vocabulary<T> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when fewer candidate words existed than were requested.
    pub fn is_short(&self) -> bool {
        self.entries.len() < self.requested
    }

    pub fn words(&self) -> Vec<String> {
        self.entries.iter().map(|(w, _)| w.clone()).collect()
    }
}

/// Keep the `k` highest-scoring words; ties break lexicographically.
/// With fewer than `k` candidates all are kept and the result reports short.
pub fn select_top_k<T: Real>(scores: &[(String, T)], k: usize) -> Result<Vocabulary<T>> {
    if k == 0 {
        return Err(Error::Validation("vocabulary size must be at least 1".into()));
    }
    let mut seen = HashSet::new();
    for (w, s) in scores {
        if !seen.insert(w.as_str()) {
            return Err(Error::Validation(format!("duplicate scored word {w:?}")));
        }
        if !s.is_finite() {
            return Err(Error::Validation(format!("non-finite score for {w:?}")));
        }
    }
    let mut sorted: Vec<(String, T)> = scores.to_vec();
    sorted.sort_by(|(wa, sa), (wb, sb)| {
        sb.partial_cmp(sa).unwrap().then_with(|| wa.cmp(wb))
    });
    sorted.truncate(k);
    Ok(Vocabulary {
        entries: sorted,
        requested: k,
    })
}

/// Binary presence features in vocabulary order.
pub fn featurize<T: Real>(tokens: &[String], vocab: &Vocabulary<T>) -> Vec<T> {
    assert!(!vocab.is_empty(), "featurize needs a non-empty vocabulary");
    let present: HashSet<&str> = tokens.iter().map(String::as_str).collect();
    vocab
        .entries
        .iter()
        .map(|(w, _)| {
            if present.contains(w.as_str()) {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect()
}

/// Presence features for pre-computed term sets, one row per document.
pub fn featurize_sets<T: Real>(term_sets: &[BTreeSet<String>], vocab: &Vocabulary<T>) -> Matrix<T> {
    assert!(!vocab.is_empty(), "featurize needs a non-empty vocabulary");
    let mut out = Matrix::zeros(term_sets.len(), vocab.len());
    for (i, set) in term_sets.iter().enumerate() {
        for (j, (w, _)) in vocab.entries.iter().enumerate() {
            if set.contains(w) {
                out.set(i, j, T::one());
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub labels: BTreeSet<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    /// Sorted union of all document labels.
    pub categories: Vec<String>,
}

fn check_field(value: &str, what: &str, allow_comma: bool) -> Result<()> {
    if value.is_empty() {
        return Err(Error::Validation(format!("empty {what}")));
    }
    if value.contains('\t') || value.contains('\n') || value.contains('\\') {
        return Err(Error::Validation(format!(
            "{what} {value:?} contains a tab, newline, or backslash"
        )));
    }
    if !allow_comma && value.contains(',') {
        return Err(Error::Validation(format!("{what} {value:?} contains a comma")));
    }
    Ok(())
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::Validation("empty corpus".into()));
        }
        let mut ids = HashSet::new();
        let mut categories = BTreeSet::new();
        for doc in &documents {
            check_field(&doc.id, "document id", false)?;
            if !ids.insert(doc.id.as_str()) {
                return Err(Error::Validation(format!("duplicate document id {:?}", doc.id)));
            }
            for label in &doc.labels {
                check_field(label, "label", false)?;
                categories.insert(label.clone());
            }
        }
        Ok(Corpus {
            documents,
            categories: categories.into_iter().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// One-vs-rest labels for a category, in document order.
    pub fn labels_for(&self, category: &str) -> Vec<bool> {
        self.documents
            .iter()
            .map(|d| d.labels.contains(category))
            .collect()
    }

    pub fn to_tsv_string(&self) -> String {
        let mut out = String::new();
        for doc in &self.documents {
            out.push_str(&doc.id);
            out.push('\t');
            let labels: Vec<&str> = doc.labels.iter().map(String::as_str).collect();
            out.push_str(&labels.join(","));
            out.push('\t');
            out.push_str(&escape_text(&doc.text));
            out.push('\n');
        }
        out
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_tsv_string())?;
        Ok(())
    }

    pub fn from_tsv_str(text: &str) -> Result<Self> {
        let mut documents = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::InputFormat {
                    line: lineno,
                    msg: format!("expected 3 tab-separated fields, got {}", fields.len()),
                });
            }
            let labels: BTreeSet<String> = fields[1]
                .split(',')
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect();
            documents.push(Document {
                id: fields[0].trim().to_string(),
                labels,
                text: unescape_text(fields[2], lineno)?,
            });
        }
        if documents.is_empty() {
            return Err(Error::InputFormat {
                line: 1,
                msg: "no documents".into(),
            });
        }
        Corpus::new(documents).map_err(|e| Error::InputFormat {
            line: 1,
            msg: e.to_string(),
        })
    }

    pub fn read_tsv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_tsv_str(&fs::read_to_string(path)?)
    }
}

fn escape_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out
}

fn unescape_text(text: &str, lineno: usize) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => {
                return Err(Error::InputFormat {
                    line: lineno,
                    msg: format!("bad escape sequence \\{}", other.map(String::from).unwrap_or_default()),
                })
            }
        }
    }
    Ok(out)
}
