//! Constituent hypothesis accumulation over a corpus.
//!
//! Sentences are processed in corpus order; each new sentence is aligned
//! against every earlier one. The dissimilar parts of each alignment become
//! labelled span hypotheses: a brand-new pair of spans shares one fresh
//! non-terminal, a span already known on one side lends its type to the
//! other, and a pair known on both sides with different types merges those
//! types everywhere. Hypotheses may overlap within a sentence; resolving
//! that is left to selection.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::alignment::{
    all_alignments, edit_distance_align, extract_dissimilar, AlignmentMethod, DissimilarPair, Gamma,
};
use crate::corpus::{Corpus, Span};

/// A non-terminal label, rendered as a decimal natural number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NonTerminal(pub u32);

impl fmt::Display for NonTerminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The reserved type shared by every sentence-level hypothesis.
pub const SENTENCE_TYPE: NonTerminal = NonTerminal(0);

/// Equivalence structure over issued non-terminals. The canonical
/// representative of a class is its smallest raw id, so merging never
/// invents new labels and type 0 can only ever absorb others.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeStore {
    parent: Vec<u32>,
    classes: usize,
}

impl Default for TypeStore {
    fn default() -> Self {
        TypeStore::new()
    }
}

impl TypeStore {
    /// A store holding only the reserved sentence-level type.
    pub fn new() -> TypeStore {
        TypeStore {
            parent: vec![0],
            classes: 1,
        }
    }

    /// A store with ids `0..issued` all distinct, as read back from a file.
    pub fn with_issued(issued: u32) -> TypeStore {
        TypeStore {
            parent: (0..issued.max(1)).collect(),
            classes: issued.max(1) as usize,
        }
    }

    /// Issues a never-before-used non-terminal.
    pub fn fresh(&mut self) -> NonTerminal {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        self.classes += 1;
        NonTerminal(id)
    }

    pub fn issued(&self) -> u32 {
        self.parent.len() as u32
    }

    pub fn contains(&self, nt: NonTerminal) -> bool {
        (nt.0 as usize) < self.parent.len()
    }

    /// Number of distinct equivalence classes among issued ids.
    pub fn canonical_count(&self) -> usize {
        self.classes
    }

    fn find(&mut self, id: u32) -> u32 {
        let mut root = id;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = id;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    /// Canonical representative without mutation; equal ids iff merged.
    pub fn canonical(&self, nt: NonTerminal) -> NonTerminal {
        assert!(self.contains(nt), "unknown non-terminal {}", nt);
        let mut root = nt.0;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        NonTerminal(root)
    }

    /// Merges the classes of `a` and `b`; the smaller canonical id wins.
    /// Both ids must have been issued by this store.
    pub fn merge(&mut self, a: NonTerminal, b: NonTerminal) -> NonTerminal {
        assert!(self.contains(a), "unknown non-terminal {}", a);
        assert!(self.contains(b), "unknown non-terminal {}", b);
        let ra = self.find(a.0);
        let rb = self.find(b.0);
        if ra == rb {
            return NonTerminal(ra);
        }
        let (keep, absorb) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[absorb as usize] = keep;
        self.classes -= 1;
        NonTerminal(keep)
    }

    /// Points every id directly at its canonical representative.
    pub fn flatten(&mut self) {
        for id in 0..self.parent.len() as u32 {
            self.find(id);
        }
    }
}

/// One labelled span hypothesis in one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hypothesis {
    pub sid: usize,
    pub span: Span,
    pub nt: NonTerminal,
}

/// Online acceptance test applied to each candidate span before storage;
/// returns true to accept. `existing` holds the candidate sentence's current
/// hypothesis spans.
pub type HypothesisFilter = fn(existing: &[Span], candidate: Span) -> bool;

/// Bookkeeping for one learning run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LearnStats {
    /// Sentence pairs actually aligned.
    pub pairs_aligned: usize,
    /// Alignments processed (> pairs for the exhaustive method).
    pub alignments_used: usize,
    /// Pairs whose exhaustive enumeration hit the cap and fell back to the
    /// single default-cost alignment.
    pub capped_pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("line {line}: expected '<sentence> TAB <begin:end:type> ...'")]
    BadLine { line: usize },
    #[error("line {line}: malformed span triple {triple:?}")]
    BadTriple { line: usize, triple: String },
    #[error("line {line}: span ({begin},{end}) does not fit a sentence of length {len}")]
    SpanOutOfBounds {
        line: usize,
        begin: usize,
        end: usize,
        len: usize,
    },
    #[error("line {line}: missing the sentence-level hypothesis 0:{len}:0")]
    MissingSentenceSpan { line: usize, len: usize },
}

/// Per-sentence hypothesis sets over a corpus, plus the type equivalence
/// structure. Span sets may contain crossing spans.
#[derive(Debug, Clone)]
pub struct HypothesisSpace {
    corpus: Corpus,
    sentences: Vec<BTreeMap<Span, NonTerminal>>,
    types: TypeStore,
    stats: LearnStats,
}

impl HypothesisSpace {
    /// An unlearned space: every sentence carries only its sentence-level
    /// hypothesis with the reserved type 0.
    pub fn new(corpus: Corpus) -> HypothesisSpace {
        let sentences = corpus
            .sentences()
            .iter()
            .map(|s| {
                let mut set = BTreeMap::new();
                set.insert(Span::new(0, s.len()), SENTENCE_TYPE);
                set
            })
            .collect();
        HypothesisSpace {
            corpus,
            sentences,
            types: TypeStore::new(),
            stats: LearnStats::default(),
        }
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn types(&self) -> &TypeStore {
        &self.types
    }

    pub fn types_mut(&mut self) -> &mut TypeStore {
        &mut self.types
    }

    pub fn stats(&self) -> &LearnStats {
        &self.stats
    }

    /// Total stored hypotheses, sentence-level ones included.
    pub fn hypothesis_count(&self) -> usize {
        self.sentences.iter().map(|s| s.len()).sum()
    }

    /// Canonical type stored at exactly this span, if any.
    pub fn get(&self, sid: usize, span: Span) -> Option<NonTerminal> {
        self.sentences[sid]
            .get(&span)
            .map(|&nt| self.types.canonical(nt))
    }

    /// Hypothesis spans of one sentence, in span order.
    pub fn spans_of(&self, sid: usize) -> Vec<Span> {
        self.sentences[sid].keys().copied().collect()
    }

    /// Hypotheses of one sentence with canonical types, in span order.
    pub fn sentence_hypotheses(&self, sid: usize) -> Vec<Hypothesis> {
        self.sentences[sid]
            .iter()
            .map(|(&span, &nt)| Hypothesis {
                sid,
                span,
                nt: self.types.canonical(nt),
            })
            .collect()
    }

    /// All hypotheses with canonical types, by sentence then span order.
    pub fn all_hypotheses(&self) -> Vec<Hypothesis> {
        (0..self.sentences.len())
            .flat_map(|sid| self.sentence_hypotheses(sid))
            .collect()
    }

    /// Distinct canonical types among stored hypotheses.
    pub fn distinct_canonical_types(&self) -> BTreeSet<NonTerminal> {
        self.all_hypotheses().iter().map(|h| h.nt).collect()
    }

    /// Inserts a hypothesis directly. The non-terminal must come from this
    /// space's store. Duplicate spans keep the first stored type.
    pub fn add_hypothesis(&mut self, sid: usize, span: Span, nt: NonTerminal) {
        assert!(self.types.contains(nt), "unknown non-terminal {}", nt);
        assert!(span.width() >= 1, "hypotheses have width >= 1");
        assert!(
            span.end <= self.corpus.sentence(sid).len(),
            "span outside sentence"
        );
        self.sentences[sid].entry(span).or_insert(nt);
    }

    /// Applies the type-assignment rules to the dissimilar pairs of one
    /// alignment of sentences `sid1` and `sid2`, returning the hypotheses
    /// that were newly stored. With a filter present, every candidate span
    /// is offered first and dropped when rejected.
    pub fn assign_types(
        &mut self,
        sid1: usize,
        sid2: usize,
        pairs: &[DissimilarPair],
        filter: Option<HypothesisFilter>,
    ) -> Vec<Hypothesis> {
        let mut created = Vec::new();
        for pair in pairs {
            let cand1 = self.offered(sid1, pair.span1, filter);
            let cand2 = self.offered(sid2, pair.span2, filter);
            match (cand1, cand2) {
                (Some(sp1), Some(sp2)) => {
                    let t1 = self.sentences[sid1].get(&sp1).copied();
                    let t2 = self.sentences[sid2].get(&sp2).copied();
                    match (t1, t2) {
                        (None, None) => {
                            let t = self.types.fresh();
                            self.sentences[sid1].insert(sp1, t);
                            self.sentences[sid2].insert(sp2, t);
                            created.push(Hypothesis {
                                sid: sid1,
                                span: sp1,
                                nt: t,
                            });
                            created.push(Hypothesis {
                                sid: sid2,
                                span: sp2,
                                nt: t,
                            });
                        }
                        (Some(t), None) => {
                            let c = self.types.canonical(t);
                            self.sentences[sid2].insert(sp2, c);
                            created.push(Hypothesis {
                                sid: sid2,
                                span: sp2,
                                nt: c,
                            });
                        }
                        (None, Some(t)) => {
                            let c = self.types.canonical(t);
                            self.sentences[sid1].insert(sp1, c);
                            created.push(Hypothesis {
                                sid: sid1,
                                span: sp1,
                                nt: c,
                            });
                        }
                        (Some(a), Some(b)) => {
                            if self.types.canonical(a) != self.types.canonical(b) {
                                self.types.merge(a, b);
                            }
                        }
                    }
                }
                (Some(sp1), None) => {
                    if !self.sentences[sid1].contains_key(&sp1) {
                        let t = self.types.fresh();
                        self.sentences[sid1].insert(sp1, t);
                        created.push(Hypothesis {
                            sid: sid1,
                            span: sp1,
                            nt: t,
                        });
                    }
                }
                (None, Some(sp2)) => {
                    if !self.sentences[sid2].contains_key(&sp2) {
                        let t = self.types.fresh();
                        self.sentences[sid2].insert(sp2, t);
                        created.push(Hypothesis {
                            sid: sid2,
                            span: sp2,
                            nt: t,
                        });
                    }
                }
                (None, None) => {}
            }
        }
        created
    }

    // A candidate survives when it is non-empty and the filter (if any)
    // accepts it against the sentence's current spans.
    fn offered(&self, sid: usize, span: Span, filter: Option<HypothesisFilter>) -> Option<Span> {
        if span.is_empty() {
            return None;
        }
        if let Some(f) = filter {
            let existing = self.spans_of(sid);
            if !f(&existing, span) {
                return None;
            }
        }
        Some(span)
    }

    /// Tab-separated serialization: per line the surface sentence, a tab,
    /// then space-separated `begin:end:type` triples with canonical type
    /// numbers, in span order.
    pub fn to_tabular(&self) -> String {
        let mut out = String::new();
        for sid in 0..self.sentences.len() {
            out.push_str(&self.corpus.surface_line(sid));
            out.push('\t');
            let triples: Vec<String> = self.sentences[sid]
                .iter()
                .map(|(&span, &nt)| {
                    format!("{}:{}:{}", span.begin, span.end, self.types.canonical(nt))
                })
                .collect();
            out.push_str(&triples.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the tabular form back into a space. Types in the file are
    /// treated as canonical; the sentence-level triple must be present.
    pub fn parse_tabular(text: &str) -> Result<HypothesisSpace, SpaceError> {
        let mut plain_text = String::new();
        let mut span_sets: Vec<Vec<(Span, NonTerminal)>> = Vec::new();
        let mut max_type = 0u32;
        for (lineno, line) in text.lines().enumerate() {
            let line_no = lineno + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (sentence_part, triples_part) = line
                .split_once('\t')
                .ok_or(SpaceError::BadLine { line: line_no })?;
            let len = sentence_part.split_whitespace().count();
            if len == 0 {
                return Err(SpaceError::BadLine { line: line_no });
            }
            let mut set = Vec::new();
            for triple in triples_part.split_whitespace() {
                let mut it = triple.split(':');
                let parse = |s: Option<&str>| -> Option<usize> { s?.parse().ok() };
                let begin = parse(it.next());
                let end = parse(it.next());
                let nt = parse(it.next());
                let (begin, end, nt) = match (begin, end, nt, it.next()) {
                    (Some(b), Some(e), Some(t), None) => (b, e, t),
                    _ => {
                        return Err(SpaceError::BadTriple {
                            line: line_no,
                            triple: triple.to_owned(),
                        })
                    }
                };
                if begin >= end || end > len {
                    return Err(SpaceError::SpanOutOfBounds {
                        line: line_no,
                        begin,
                        end,
                        len,
                    });
                }
                max_type = max_type.max(nt as u32);
                set.push((Span::new(begin, end), NonTerminal(nt as u32)));
            }
            if !set.contains(&(Span::new(0, len), SENTENCE_TYPE)) {
                return Err(SpaceError::MissingSentenceSpan { line: line_no, len });
            }
            plain_text.push_str(sentence_part.trim());
            plain_text.push('\n');
            span_sets.push(set);
        }
        Ok(HypothesisSpace {
            corpus: Corpus::parse_plain(&plain_text),
            sentences: span_sets
                .iter()
                .map(|set| set.iter().copied().collect())
                .collect(),
            types: TypeStore::with_issued(max_type + 1),
            stats: LearnStats::default(),
        })
    }
}

/// Runs the alignment-learning phase over a corpus.
///
/// Sentence `n` is aligned against every earlier sentence; sentences with
/// fewer than two tokens are carried through with only their sentence-level
/// hypothesis and never enter pairwise alignment. For the exhaustive method,
/// a capped pair falls back to the single default-cost alignment and is
/// recorded in the stats.
pub fn learn(
    corpus: Corpus,
    method: AlignmentMethod,
    filter: Option<HypothesisFilter>,
) -> HypothesisSpace {
    let mut space = HypothesisSpace::new(corpus);
    let n = space.corpus.len();
    for new in 0..n {
        for mem in 0..new {
            let a = space.corpus.sentence(mem);
            let b = space.corpus.sentence(new);
            if a.len() < 2 || b.len() < 2 {
                continue;
            }
            space.stats.pairs_aligned += 1;
            let alignments = match method {
                AlignmentMethod::Default => {
                    vec![edit_distance_align(a, b, Gamma::Default)]
                }
                AlignmentMethod::Biased => {
                    vec![edit_distance_align(a, b, Gamma::Biased)]
                }
                AlignmentMethod::All => {
                    let all = all_alignments(a, b);
                    if all.capped {
                        space.stats.capped_pairs.push((mem, new));
                        vec![edit_distance_align(a, b, Gamma::Default)]
                    } else {
                        all.alignments
                    }
                }
            };
            for al in alignments {
                space.stats.alignments_used += 1;
                let a = space.corpus.sentence(mem);
                let b = space.corpus.sentence(new);
                let pairs = extract_dissimilar(a, b, &al);
                space.assign_types(mem, new, &pairs, filter);
            }
        }
    }
    space.types.flatten();
    space
}
