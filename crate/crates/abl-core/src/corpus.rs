//! Plain corpora, bracketed treebanks, and the bracket serialization format.
//!
//! A plain corpus is one sentence per line, tokens separated by whitespace.
//! A bracket file carries labelled constituents per line as a space-separated
//! stream of `(LABEL` openers, tokens, and `)` closers, e.g.
//! `(S What is (NP the name ) )`. A line may be a forest: several top-level
//! brackets, with bare tokens allowed outside any bracket.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Interned word identifier. Two tokens have equal ids iff their surface
/// strings are byte-identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenId(pub u32);

/// Half-open token interval `[begin, end)` within one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub begin: usize,
    pub end: usize,
}

impl Span {
    pub fn new(begin: usize, end: usize) -> Span {
        debug_assert!(begin <= end, "span begin must not exceed end");
        Span { begin, end }
    }

    pub fn width(&self) -> usize {
        self.end - self.begin
    }

    pub fn is_empty(&self) -> bool {
        self.begin == self.end
    }

    /// Strict partial overlap. Nesting, equality, and disjointness all
    /// count as non-crossing.
    pub fn crosses(&self, other: Span) -> bool {
        (self.begin < other.begin && other.begin < self.end && self.end < other.end)
            || (other.begin < self.begin && self.begin < other.end && other.end < self.end)
    }

    /// True when `other` lies within `self` (shared edges allowed).
    pub fn contains(&self, other: Span) -> bool {
        self.begin <= other.begin && other.end <= self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.begin, self.end)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: unbalanced brackets")]
    UnbalancedBrackets { line: usize },
    #[error("line {line}: bracket with no terminals")]
    EmptyBracket { line: usize },
    #[error("sentence {sid}: spans {a} and {b} cross; bracket output requires a non-crossing set")]
    CrossingSpans { sid: usize, a: Span, b: Span },
    #[error("sentence {sid}: span {span} does not fit a sentence of length {len}")]
    SpanOutOfBounds { sid: usize, span: Span, len: usize },
    #[error("sentence {sid}: zero-width span {span} cannot be serialized as a bracket")]
    EmptySpan { sid: usize, span: Span },
}

/// Global token interner. Ids depend only on the first-occurrence order of
/// surfaces, so interning the same text always yields the same ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Interner {
    surfaces: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Interner {
    pub fn new() -> Interner {
        Interner::default()
    }

    pub fn intern(&mut self, surface: &str) -> TokenId {
        if let Some(&id) = self.index.get(surface) {
            return id;
        }
        let id = TokenId(self.surfaces.len() as u32);
        self.surfaces.push(surface.to_owned());
        self.index.insert(surface.to_owned(), id);
        id
    }

    pub fn surface(&self, id: TokenId) -> &str {
        &self.surfaces[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }
}

/// One tokenized sentence; `sid` is its position in the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub sid: usize,
    pub tokens: Vec<TokenId>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// An ordered list of sentences sharing one interner.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    sentences: Vec<Sentence>,
    interner: Interner,
}

impl Corpus {
    /// Parses whitespace-tokenized text, one sentence per line. Blank lines
    /// are skipped; empty input yields an empty corpus.
    pub fn parse_plain(text: &str) -> Corpus {
        let mut corpus = Corpus::default();
        for line in text.lines() {
            let tokens: Vec<TokenId> = line
                .split_whitespace()
                .map(|w| corpus.interner.intern(w))
                .collect();
            if tokens.is_empty() {
                continue;
            }
            let sid = corpus.sentences.len();
            corpus.sentences.push(Sentence { sid, tokens });
        }
        corpus
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn sentence(&self, sid: usize) -> &Sentence {
        &self.sentences[sid]
    }

    pub fn interner(&self) -> &Interner {
        &self.interner
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Token ids covered by `span` in sentence `sid`.
    pub fn yield_of(&self, sid: usize, span: Span) -> &[TokenId] {
        &self.sentences[sid].tokens[span.begin..span.end]
    }

    /// Sentence restored to its surface form, tokens joined by single spaces.
    pub fn surface_line(&self, sid: usize) -> String {
        let s = &self.sentences[sid];
        s.tokens
            .iter()
            .map(|&t| self.interner.surface(t))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Canonical plain-text serialization: one surface line per sentence,
    /// each terminated by a newline. Parsing it back reproduces the corpus.
    pub fn to_plain_text(&self) -> String {
        let mut out = String::new();
        for sid in 0..self.sentences.len() {
            out.push_str(&self.surface_line(sid));
            out.push('\n');
        }
        out
    }

    /// Copy containing only sentences with at least `min` tokens, re-indexed
    /// and re-interned in the new corpus order.
    pub fn filter_min_length(&self, min: usize) -> Corpus {
        let mut corpus = Corpus::default();
        for s in &self.sentences {
            if s.len() < min {
                continue;
            }
            let sid = corpus.sentences.len();
            let tokens = s
                .tokens
                .iter()
                .map(|&t| corpus.interner.intern(self.interner.surface(t)))
                .collect();
            corpus.sentences.push(Sentence { sid, tokens });
        }
        corpus
    }

    /// Copy with sentences reordered so that new position `i` holds the
    /// sentence originally at `perm[i]`; re-interned in the new order.
    pub fn permuted(&self, perm: &[usize]) -> Corpus {
        assert_eq!(perm.len(), self.sentences.len());
        let mut corpus = Corpus::default();
        for (sid, &orig) in perm.iter().enumerate() {
            let tokens = self.sentences[orig]
                .tokens
                .iter()
                .map(|&t| corpus.interner.intern(self.interner.surface(t)))
                .collect();
            corpus.sentences.push(Sentence { sid, tokens });
        }
        corpus
    }
}

/// A corpus with gold labelled spans per sentence. Spans within one sentence
/// never cross; they are stored in the order their brackets open.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeBank {
    corpus: Corpus,
    spans: Vec<Vec<(Span, String)>>,
}

impl TreeBank {
    /// Parses labelled bracket notation, one sentence (or forest) per line.
    ///
    /// Any whitespace-separated item starting with `(` opens a bracket whose
    /// label is the rest of the item; an item that is exactly `)` closes the
    /// innermost open bracket; everything else is a terminal. Blank lines
    /// are skipped. Unbalanced brackets and brackets containing no terminal
    /// are reported with their 1-based physical line number.
    pub fn parse(text: &str) -> Result<TreeBank, CorpusError> {
        let mut corpus = Corpus::default();
        let mut spans: Vec<Vec<(Span, String)>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line_no = lineno + 1;
            if line.split_whitespace().next().is_none() {
                continue;
            }
            let mut tokens: Vec<TokenId> = Vec::new();
            // (label, open position, open order)
            let mut stack: Vec<(String, usize, usize)> = Vec::new();
            let mut opened: Vec<Option<(Span, String)>> = Vec::new();
            for item in line.split_whitespace() {
                if item == ")" {
                    let (label, begin, seq) = stack
                        .pop()
                        .ok_or(CorpusError::UnbalancedBrackets { line: line_no })?;
                    if begin == tokens.len() {
                        return Err(CorpusError::EmptyBracket { line: line_no });
                    }
                    opened[seq] = Some((Span::new(begin, tokens.len()), label));
                } else if let Some(label) = item.strip_prefix('(') {
                    stack.push((label.to_owned(), tokens.len(), opened.len()));
                    opened.push(None);
                } else {
                    tokens.push(corpus.interner.intern(item));
                }
            }
            if !stack.is_empty() {
                return Err(CorpusError::UnbalancedBrackets { line: line_no });
            }
            if tokens.is_empty() {
                // Line held only bracket symbols; the closers above would
                // have errored already, so this is unreachable in practice.
                continue;
            }
            let sid = corpus.sentences.len();
            corpus.sentences.push(Sentence { sid, tokens });
            spans.push(opened.into_iter().map(|o| o.expect("closed")).collect());
        }
        Ok(TreeBank { corpus, spans })
    }

    /// Builds a treebank from parts, validating span bounds, non-emptiness,
    /// and the per-sentence non-crossing requirement.
    pub fn from_parts(
        corpus: Corpus,
        spans: Vec<Vec<(Span, String)>>,
    ) -> Result<TreeBank, CorpusError> {
        assert_eq!(corpus.len(), spans.len());
        for (sid, set) in spans.iter().enumerate() {
            let len = corpus.sentence(sid).len();
            for &(span, _) in set {
                if span.end > len || span.begin > span.end {
                    return Err(CorpusError::SpanOutOfBounds { sid, span, len });
                }
                if span.is_empty() {
                    return Err(CorpusError::EmptySpan { sid, span });
                }
            }
            for (i, &(a, _)) in set.iter().enumerate() {
                for &(b, _) in &set[i + 1..] {
                    if a.crosses(b) {
                        return Err(CorpusError::CrossingSpans { sid, a, b });
                    }
                }
            }
        }
        Ok(TreeBank { corpus, spans })
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn len(&self) -> usize {
        self.corpus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corpus.is_empty()
    }

    pub fn spans(&self, sid: usize) -> &[(Span, String)] {
        &self.spans[sid]
    }

    /// Per-sentence bare span sets, for metric computations.
    pub fn span_sets(&self) -> Vec<Vec<Span>> {
        self.spans
            .iter()
            .map(|set| set.iter().map(|&(sp, _)| sp).collect())
            .collect()
    }

    /// Drops all structure, keeping sentence order and token sequences.
    pub fn strip(&self) -> Corpus {
        self.corpus.clone()
    }

    /// Serializes back to bracket notation. The output re-parses to an
    /// equal treebank.
    pub fn write(&self) -> Result<String, CorpusError> {
        let mut out = String::new();
        for sid in 0..self.corpus.len() {
            out.push_str(&write_sentence_brackets(
                &self.corpus,
                sid,
                &self.spans[sid],
            )?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Copy keeping only sentences of at least `min` tokens.
    pub fn filter_min_length(&self, min: usize) -> TreeBank {
        let mut corpus = Corpus::default();
        let mut spans = Vec::new();
        for (sid, s) in self.corpus.sentences().iter().enumerate() {
            if s.len() < min {
                continue;
            }
            let new_sid = corpus.sentences.len();
            let tokens = s
                .tokens
                .iter()
                .map(|&t| corpus.interner.intern(self.corpus.interner().surface(t)))
                .collect();
            corpus.sentences.push(Sentence {
                sid: new_sid,
                tokens,
            });
            spans.push(self.spans[sid].clone());
        }
        TreeBank { corpus, spans }
    }
}

/// Renders one sentence with its labelled spans in bracket notation.
///
/// Spans may nest and share boundaries but must not cross. Spans with equal
/// bounds nest in their stored order (earlier entries outermost), so parsing
/// the output restores the original span list.
pub fn write_sentence_brackets(
    corpus: &Corpus,
    sid: usize,
    spans: &[(Span, String)],
) -> Result<String, CorpusError> {
    let len = corpus.sentence(sid).len();
    for &(span, _) in spans {
        if span.end > len || span.begin > span.end {
            return Err(CorpusError::SpanOutOfBounds { sid, span, len });
        }
        if span.is_empty() {
            return Err(CorpusError::EmptySpan { sid, span });
        }
    }
    for (i, &(a, _)) in spans.iter().enumerate() {
        for &(b, _) in &spans[i + 1..] {
            if a.crosses(b) {
                return Err(CorpusError::CrossingSpans { sid, a, b });
            }
        }
    }

    // Opens at a position: outermost first (larger end, then earlier entry).
    // Closes at a position: innermost first (larger begin, then later entry).
    let mut opens: Vec<Vec<usize>> = vec![Vec::new(); len + 1];
    let mut closes: Vec<Vec<usize>> = vec![Vec::new(); len + 1];
    for (seq, &(span, _)) in spans.iter().enumerate() {
        opens[span.begin].push(seq);
        closes[span.end].push(seq);
    }
    for list in &mut opens {
        list.sort_by(|&a, &b| spans[b].0.end.cmp(&spans[a].0.end).then(a.cmp(&b)));
    }
    for list in &mut closes {
        list.sort_by(|&a, &b| spans[b].0.begin.cmp(&spans[a].0.begin).then(b.cmp(&a)));
    }

    let mut items: Vec<String> = Vec::new();
    for pos in 0..=len {
        for _ in &closes[pos] {
            items.push(")".to_owned());
        }
        for &seq in &opens[pos] {
            items.push(format!("({}", spans[seq].1));
        }
        if pos < len {
            let tok = corpus.sentence(sid).tokens[pos];
            items.push(corpus.interner().surface(tok).to_owned());
        }
    }
    Ok(items.join(" "))
}
