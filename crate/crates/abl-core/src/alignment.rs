//! Pairwise sentence alignment and dissimilar-part extraction.
//!
//! Two sentences are aligned by linking equal tokens, order-preserving and
//! one-to-one. The linked tokens are the similar parts; the maximal gaps
//! between links (and at the sentence edges) are the dissimilar parts, paired
//! positionally across the two sentences. Three regimes are provided: a
//! minimum-edit-cost alignment under the unit cost function, the same under
//! an offset-biased cost function, and exhaustive enumeration of all maximal
//! alignments.

use std::collections::HashMap;

use crate::corpus::{Sentence, Span, TokenId};

/// One matched token pair: position `i1` in sentence 1, `i2` in sentence 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Link {
    pub i1: usize,
    pub i2: usize,
}

/// An order-preserving, one-to-one matching of equal tokens. Consecutive
/// links strictly increase in both coordinates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alignment {
    pub links: Vec<Link>,
}

/// A positional pairing of dissimilar parts; at most one side may be empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DissimilarPair {
    pub span1: Span,
    pub span2: Span,
}

/// Edit operations of the alignment distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Insert,
    Delete,
    /// Covers both proper substitution and a match of equal tokens.
    Substitute,
}

/// Cost regime for the edit-distance alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gamma {
    Default,
    Biased,
}

/// How a sentence pair is aligned during learning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignmentMethod {
    /// Single minimum-cost alignment under the unit cost function.
    Default,
    /// Single minimum-cost alignment under the offset-biased cost function.
    Biased,
    /// Every maximal alignment of the pair.
    All,
}

/// Unit cost function: insert and delete cost 1, a match of equal tokens
/// costs 0, a substitution of unequal tokens costs 2. Minimizing this cost
/// links the longest common subsequence.
pub fn default_gamma(op: EditOp, w1: Option<TokenId>, w2: Option<TokenId>) -> f64 {
    match op {
        EditOp::Insert | EditOp::Delete => 1.0,
        EditOp::Substitute => {
            if w1.expect("substitute needs both tokens") == w2.expect("substitute needs both") {
                0.0
            } else {
                2.0
            }
        }
    }
}

/// Offset-biased cost function: identical to [`default_gamma`] except that a
/// match of equal tokens at 0-based offsets `i1`, `i2` in sentences of
/// lengths `s1`, `s2` costs `|i1/s1 - i2/s2| * (s1+s2)/2`, preferring matches
/// between words at similar relative positions.
pub fn biased_gamma(
    op: EditOp,
    w1: Option<TokenId>,
    w2: Option<TokenId>,
    i1: usize,
    i2: usize,
    s1: usize,
    s2: usize,
) -> f64 {
    assert!(s1 > 0 && s2 > 0, "sentences must be non-empty");
    match op {
        EditOp::Insert | EditOp::Delete => 1.0,
        EditOp::Substitute => {
            if w1.expect("substitute needs both tokens") == w2.expect("substitute needs both") {
                let rel = (i1 as f64 / s1 as f64 - i2 as f64 / s2 as f64).abs();
                rel * (s1 + s2) as f64 / 2.0
            } else {
                2.0
            }
        }
    }
}

// All DP arithmetic is exact: costs are integers scaled by 2*s1*s2, the
// common denominator of every cost either regime can produce for one pair.
// This keeps minimum-cost comparisons and tie-breaking stable.
struct ScaledCosts {
    s1: usize,
    s2: usize,
    gamma: Gamma,
}

impl ScaledCosts {
    fn new(s1: usize, s2: usize, gamma: Gamma) -> ScaledCosts {
        ScaledCosts { s1, s2, gamma }
    }

    fn unit(&self) -> i64 {
        2 * self.s1 as i64 * self.s2 as i64
    }

    fn indel(&self) -> i64 {
        self.unit()
    }

    fn substitute(&self, equal: bool, i1: usize, i2: usize) -> i64 {
        if !equal {
            return 2 * self.unit();
        }
        match self.gamma {
            Gamma::Default => 0,
            Gamma::Biased => {
                let diff = (i1 as i64 * self.s2 as i64 - i2 as i64 * self.s1 as i64).abs();
                diff * (self.s1 + self.s2) as i64
            }
        }
    }
}

fn align_dp(a: &Sentence, b: &Sentence, gamma: Gamma) -> (Vec<Link>, i64, i64) {
    let (n1, n2) = (a.len(), b.len());
    assert!(n1 > 0 && n2 > 0, "sentences must be non-empty");
    let costs = ScaledCosts::new(n1, n2, gamma);
    let mut d = vec![0i64; (n1 + 1) * (n2 + 1)];
    let idx = |i: usize, j: usize| i * (n2 + 1) + j;
    for i in 1..=n1 {
        d[idx(i, 0)] = i as i64 * costs.indel();
    }
    for j in 1..=n2 {
        d[idx(0, j)] = j as i64 * costs.indel();
    }
    for i in 1..=n1 {
        for j in 1..=n2 {
            let equal = a.tokens[i - 1] == b.tokens[j - 1];
            let diag = d[idx(i - 1, j - 1)] + costs.substitute(equal, i - 1, j - 1);
            let del = d[idx(i - 1, j)] + costs.indel();
            let ins = d[idx(i, j - 1)] + costs.indel();
            d[idx(i, j)] = diag.min(del).min(ins);
        }
    }

    // Backtrace preference at every cell: match > substitute > delete > insert.
    let mut links = Vec::new();
    let (mut i, mut j) = (n1, n2);
    while i > 0 || j > 0 {
        let here = d[idx(i, j)];
        if i > 0 && j > 0 {
            let equal = a.tokens[i - 1] == b.tokens[j - 1];
            let diag = d[idx(i - 1, j - 1)] + costs.substitute(equal, i - 1, j - 1);
            if equal && diag == here {
                links.push(Link {
                    i1: i - 1,
                    i2: j - 1,
                });
                i -= 1;
                j -= 1;
                continue;
            }
            if !equal && diag == here {
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[idx(i - 1, j)] + costs.indel() == here {
            i -= 1;
            continue;
        }
        j -= 1;
    }
    links.reverse();
    (links, d[idx(n1, n2)], costs.unit())
}

/// Match links of a minimum-total-cost edit script between two non-empty
/// sentences, deterministic under the fixed backtrace preference
/// match > substitute > delete > insert.
pub fn edit_distance_align(a: &Sentence, b: &Sentence, gamma: Gamma) -> Alignment {
    let (links, _, _) = align_dp(a, b, gamma);
    Alignment { links }
}

/// Minimum total edit cost between two non-empty sentences.
pub fn edit_distance_cost(a: &Sentence, b: &Sentence, gamma: Gamma) -> f64 {
    let (_, cost, unit) = align_dp(a, b, gamma);
    cost as f64 / unit as f64
}

/// Cap on the number of alignments enumerated per sentence pair.
pub const ALL_ALIGNMENTS_CAP: usize = 256;

/// Result of [`all_alignments`]. When the enumeration exceeds
/// [`ALL_ALIGNMENTS_CAP`], `capped` is set and callers should fall back to
/// the single default-cost alignment for the pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllAlignments {
    pub alignments: Vec<Alignment>,
    pub capped: bool,
}

/// Enumerates every maximal alignment of two non-empty sentences: monotone
/// matchings of equal tokens to which no further link can be added. They are
/// pairwise distinct and produced in depth-first lexicographic order.
pub fn all_alignments(a: &Sentence, b: &Sentence) -> AllAlignments {
    assert!(
        !a.is_empty() && !b.is_empty(),
        "sentences must be non-empty"
    );
    let mut matches: Vec<Link> = Vec::new();
    for (i1, &t1) in a.tokens.iter().enumerate() {
        for (i2, &t2) in b.tokens.iter().enumerate() {
            if t1 == t2 {
                matches.push(Link { i1, i2 });
            }
        }
    }
    matches.sort();

    let mut enumerator = Enumerator {
        matches,
        frontiers: HashMap::new(),
        out: Vec::new(),
        capped: false,
    };
    enumerator.walk(None, &mut Vec::new());
    AllAlignments {
        alignments: enumerator.out,
        capped: enumerator.capped,
    }
}

struct Enumerator {
    matches: Vec<Link>,
    // Memoized dominance frontier per resume position.
    frontiers: HashMap<(usize, usize), Vec<Link>>,
    out: Vec<Alignment>,
    capped: bool,
}

impl Enumerator {
    /// Minimal elements (under strict coordinate dominance) of the match set
    /// beyond `after`. Every maximal alignment must continue with one of
    /// them; anything else would leave an insertable link behind.
    fn frontier(&mut self, after: Option<Link>) -> Vec<Link> {
        let key = after.map_or((0, 0), |l| (l.i1 + 1, l.i2 + 1));
        if let Some(f) = self.frontiers.get(&key) {
            return f.clone();
        }
        let mut frontier: Vec<Link> = Vec::new();
        let mut min_i2_before = usize::MAX; // among matches with strictly smaller i1
        let mut group_start_i1 = usize::MAX;
        let mut group_min_i2 = usize::MAX;
        for &m in self
            .matches
            .iter()
            .filter(|m| m.i1 >= key.0 && m.i2 >= key.1)
        {
            if m.i1 != group_start_i1 {
                min_i2_before = min_i2_before.min(group_min_i2);
                group_start_i1 = m.i1;
                group_min_i2 = usize::MAX;
            }
            // Dominance is strict in both coordinates, so an i2 tie with an
            // earlier row does not dominate.
            if m.i2 <= min_i2_before {
                frontier.push(m);
            }
            group_min_i2 = group_min_i2.min(m.i2);
        }
        self.frontiers.insert(key, frontier.clone());
        frontier
    }

    fn walk(&mut self, after: Option<Link>, chain: &mut Vec<Link>) {
        if self.capped {
            return;
        }
        let frontier = self.frontier(after);
        if frontier.is_empty() {
            if self.out.len() >= ALL_ALIGNMENTS_CAP {
                self.capped = true;
                return;
            }
            self.out.push(Alignment {
                links: chain.clone(),
            });
            return;
        }
        for m in frontier {
            chain.push(m);
            self.walk(Some(m), chain);
            chain.pop();
            if self.capped {
                return;
            }
        }
    }
}

/// Pairs the maximal unlinked gaps of an aligned sentence pair, left to
/// right. Gaps that are empty on both sides are dropped; an alignment with
/// no links yields a single pair covering both full sentences.
pub fn extract_dissimilar(a: &Sentence, b: &Sentence, al: &Alignment) -> Vec<DissimilarPair> {
    let mut pairs = Vec::new();
    let (mut p1, mut p2) = (0, 0);
    let push = |pairs: &mut Vec<DissimilarPair>, g1: Span, g2: Span| {
        if !g1.is_empty() || !g2.is_empty() {
            pairs.push(DissimilarPair {
                span1: g1,
                span2: g2,
            });
        }
    };
    for link in &al.links {
        push(&mut pairs, Span::new(p1, link.i1), Span::new(p2, link.i2));
        p1 = link.i1 + 1;
        p2 = link.i2 + 1;
    }
    push(&mut pairs, Span::new(p1, a.len()), Span::new(p2, b.len()));
    pairs
}
