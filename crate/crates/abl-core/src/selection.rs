//! Resolving overlapping hypotheses into one structure per sentence.
//!
//! Hypotheses that cross nothing are always kept; the sentence-level span is
//! one of them. Among the hypotheses involved in crossings, selection keeps
//! a maximal pairwise-non-crossing subset that maximizes the geometric mean
//! of the members' probabilities. Exact score ties fall to a seeded uniform
//! draw; the extended variant first prefers the larger subset.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{Span, TokenId};
use crate::hypothesis::{Hypothesis, HypothesisSpace, NonTerminal};

/// Probability assigned to a stored hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbabilityModel {
    /// Frequency of the yield among all stored hypotheses.
    Leaf,
    /// Frequency of the yield among hypotheses sharing its canonical type.
    Branch,
}

/// How member probabilities combine into a subset score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanVariant {
    /// Plain geometric mean.
    Geo,
    /// Geometric mean, breaking exact score ties toward more constituents.
    GeoPlus,
}

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("probability {0} outside (0,1]")]
    BadProbability(f64),
}

/// Score ties within this margin on the mean count as exact.
pub const SCORE_EPSILON: f64 = 1e-12;

/// Online filter for incremental selection: a candidate is rejected iff its
/// span crosses a span already stored in the sentence.
pub fn incr_filter(existing: &[Span], candidate: Span) -> bool {
    !existing.iter().any(|&s| s.crosses(candidate))
}

/// A hypothesis with its probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstituentProbability {
    pub hypothesis: Hypothesis,
    pub p: f64,
    pub logp: f64,
}

/// Combined score of a constituent set: the geometric mean of the member
/// probabilities and the member count. The empty combination scores 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub mean: f64,
    pub count: usize,
}

impl Score {
    /// True when `self` beats `other` under the given variant, treating
    /// means within [`SCORE_EPSILON`] as equal.
    pub fn better_than(&self, other: &Score, variant: MeanVariant) -> bool {
        if self.mean > other.mean + SCORE_EPSILON {
            return true;
        }
        if self.mean < other.mean - SCORE_EPSILON {
            return false;
        }
        match variant {
            MeanVariant::Geo => false,
            MeanVariant::GeoPlus => self.count > other.count,
        }
    }
}

/// Geometric mean of a probability list; the empty list scores 1 so that
/// selecting nothing stays comparable. Probabilities must lie in (0,1].
/// The variant does not change the score itself, only how [`Score`]s order
/// at comparison time.
pub fn combine(probs: &[f64], _variant: MeanVariant) -> Result<Score, SelectionError> {
    if probs.is_empty() {
        return Ok(Score {
            mean: 1.0,
            count: 0,
        });
    }
    let mut sum = 0.0;
    for &p in probs {
        if p <= 0.0 || p > 1.0 {
            return Err(SelectionError::BadProbability(p));
        }
        sum += p.ln();
    }
    Ok(Score {
        mean: (sum / probs.len() as f64).exp(),
        count: probs.len(),
    })
}

/// Precomputed occurrence counts over a whole hypothesis space. Probabilities
/// are evaluated after learning so the counts reflect every discovery.
#[derive(Debug, Clone)]
pub struct ProbabilityTable {
    model: ProbabilityModel,
    total: usize,
    yields: HashMap<Vec<TokenId>, usize>,
    roots: HashMap<NonTerminal, usize>,
    yield_roots: HashMap<(Vec<TokenId>, NonTerminal), usize>,
}

impl ProbabilityTable {
    pub fn new(space: &HypothesisSpace, model: ProbabilityModel) -> ProbabilityTable {
        let mut yields: HashMap<Vec<TokenId>, usize> = HashMap::new();
        let mut roots: HashMap<NonTerminal, usize> = HashMap::new();
        let mut yield_roots: HashMap<(Vec<TokenId>, NonTerminal), usize> = HashMap::new();
        let mut total = 0;
        for h in space.all_hypotheses() {
            let y = space.corpus().yield_of(h.sid, h.span).to_vec();
            total += 1;
            *yields.entry(y.clone()).or_insert(0) += 1;
            *roots.entry(h.nt).or_insert(0) += 1;
            *yield_roots.entry((y, h.nt)).or_insert(0) += 1;
        }
        ProbabilityTable {
            model,
            total,
            yields,
            roots,
            yield_roots,
        }
    }

    pub fn model(&self) -> ProbabilityModel {
        self.model
    }

    /// Probability of a stored hypothesis (canonical type expected).
    pub fn probability(&self, space: &HypothesisSpace, h: &Hypothesis) -> f64 {
        let y = space.corpus().yield_of(h.sid, h.span).to_vec();
        match self.model {
            ProbabilityModel::Leaf => {
                let k = self.yields.get(&y).copied().unwrap_or(0);
                k as f64 / self.total as f64
            }
            ProbabilityModel::Branch => {
                let k = self.yield_roots.get(&(y, h.nt)).copied().unwrap_or(0);
                let n = self.roots.get(&h.nt).copied().unwrap_or(0);
                k as f64 / n as f64
            }
        }
    }
}

/// Yield frequency of `h` among all stored hypotheses.
pub fn p_leaf(space: &HypothesisSpace, h: &Hypothesis) -> f64 {
    ProbabilityTable::new(space, ProbabilityModel::Leaf).probability(space, h)
}

/// Yield frequency of `h` among hypotheses with the same canonical root.
pub fn p_branch(space: &HypothesisSpace, h: &Hypothesis) -> f64 {
    ProbabilityTable::new(space, ProbabilityModel::Branch).probability(space, h)
}

/// Chosen structure of one sentence. `score` is the geometric mean over the
/// chosen conflict-involved hypotheses (1 when the sentence had no
/// conflicts).
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceSelection {
    pub sid: usize,
    pub chosen: Vec<(Span, NonTerminal)>,
    pub score: f64,
}

/// Selection of a whole corpus, reproducible from the recorded seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    pub seed: u64,
    pub sentences: Vec<SentenceSelection>,
}

impl SelectionOutcome {
    /// Per-sentence bare span sets, for metric computations.
    pub fn span_sets(&self) -> Vec<Vec<Span>> {
        self.sentences
            .iter()
            .map(|s| s.chosen.iter().map(|&(sp, _)| sp).collect())
            .collect()
    }

    /// Per-sentence labelled spans with the type numbers as labels.
    pub fn labelled_spans(&self) -> Vec<Vec<(Span, String)>> {
        self.sentences
            .iter()
            .map(|s| {
                s.chosen
                    .iter()
                    .map(|&(sp, nt)| (sp, nt.to_string()))
                    .collect()
            })
            .collect()
    }
}

/// Selects one sentence's structure from scored hypotheses, whose spans
/// must be pairwise distinct (as stored spaces guarantee).
///
/// Hypotheses crossing nothing are kept unconditionally. From the rest, a
/// maximal non-crossing subset with the best combined score is returned;
/// exact ties are resolved by one uniform draw over the tied subsets.
pub fn select(
    hyps: &[ConstituentProbability],
    variant: MeanVariant,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, f64) {
    debug_assert!(
        hyps.iter().enumerate().all(|(i, a)| {
            hyps[i + 1..]
                .iter()
                .all(|b| a.hypothesis.span != b.hypothesis.span)
        }),
        "sentence hypotheses must have distinct spans"
    );
    let n = hyps.len();
    let mut conflicted: Vec<usize> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..n {
        let crossing =
            (0..n).any(|j| j != i && hyps[i].hypothesis.span.crosses(hyps[j].hypothesis.span));
        if crossing {
            conflicted.push(i);
        } else {
            kept.push(i);
        }
    }
    if conflicted.is_empty() {
        return (kept, 1.0);
    }

    let sentence_len = hyps
        .iter()
        .map(|h| h.hypothesis.span.end)
        .max()
        .unwrap_or(0);
    let mut order: Vec<usize> = conflicted.clone();
    order.sort_by_key(|&i| hyps[i].hypothesis.span);
    let spans: Vec<Span> = order.iter().map(|&i| hyps[i].hypothesis.span).collect();
    let logps: Vec<f64> = order.iter().map(|&i| hyps[i].logp).collect();

    let mut chart = Chart::new(&spans, &logps, sentence_len);
    let (picked, score) = chart.run(variant, rng);
    kept.extend(picked.into_iter().map(|k| order[k]));
    kept.sort_unstable();
    (kept, score)
}

/// Applies [`select`] to every sentence of a space. Each sentence draws from
/// its own substream, seeded with `seed ^ sid`, so outcomes are deterministic
/// given the space, model, variant, and seed.
pub fn select_corpus(
    space: &HypothesisSpace,
    model: ProbabilityModel,
    variant: MeanVariant,
    seed: u64,
) -> SelectionOutcome {
    let table = ProbabilityTable::new(space, model);
    let mut sentences = Vec::new();
    for sid in 0..space.corpus().len() {
        let scored: Vec<ConstituentProbability> = space
            .sentence_hypotheses(sid)
            .into_iter()
            .map(|h| {
                let p = table.probability(space, &h);
                ConstituentProbability {
                    hypothesis: h,
                    p,
                    logp: p.ln(),
                }
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ sid as u64);
        let (idx, score) = select(&scored, variant, &mut rng);
        let chosen = idx
            .into_iter()
            .map(|i| (scored[i].hypothesis.span, scored[i].hypothesis.nt))
            .collect();
        sentences.push(SentenceSelection { sid, chosen, score });
    }
    SelectionOutcome { seed, sentences }
}

// ---------------------------------------------------------------------------
// Chart search over maximal non-crossing span subsets.
//
// The chosen spans form a forest nested inside the always-present sentence
// span. The recursion builds that forest left to right inside each parent:
// a state is (p, pe, at_start, pending) where [p, pe) is the unscanned rest
// of the parent window, at_start marks the window as exactly the parent span
// (which is then excluded from its own universe), and pending holds the
// right endpoints of spans that began at or before an already-placed child
// and reach beyond it. Such a span is neither chosen nor inside a child, so
// some later sibling must cross it or the arrangement is not maximal: a
// sibling [db, de) resolves endpoint x iff db < x < de.
//
// Every cell keeps, per constituent count, the best log-probability sum,
// the number of distinct arrangements achieving it, and backpointers. The
// geometric mean is applied only at the root when entries are compared, so
// the count normalization never has to decompose over the chart.
// ---------------------------------------------------------------------------

const SUMLOG_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct StateKey {
    p: usize,
    pe: usize,
    at_start: bool,
    pending: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
enum Source {
    Stop,
    Child {
        span_idx: usize,
        inside_count: u32,
        cont_count: u32,
        weight: u64,
    },
}

impl Source {
    fn weight(&self) -> u64 {
        match self {
            Source::Stop => 1,
            Source::Child { weight, .. } => *weight,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Entry {
    sumlog: f64,
    weight: u64,
    sources: Vec<Source>,
}

type Frontier = std::collections::BTreeMap<u32, Entry>;

struct Chart<'a> {
    spans: &'a [Span],
    logps: &'a [f64],
    sentence_len: usize,
    memo: HashMap<StateKey, Frontier>,
}

impl<'a> Chart<'a> {
    fn new(spans: &'a [Span], logps: &'a [f64], sentence_len: usize) -> Chart<'a> {
        Chart {
            spans,
            logps,
            sentence_len,
            memo: HashMap::new(),
        }
    }

    fn run(&mut self, variant: MeanVariant, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
        let root = StateKey {
            p: 0,
            pe: self.sentence_len,
            at_start: true,
            pending: Vec::new(),
        };
        let frontier = self.solve(root.clone());
        debug_assert!(!frontier.is_empty(), "some maximal arrangement exists");

        let mean_of = |count: u32, sumlog: f64| -> f64 {
            if count == 0 {
                1.0
            } else {
                (sumlog / count as f64).exp()
            }
        };
        let best = frontier
            .iter()
            .map(|(&c, e)| mean_of(c, e.sumlog))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut tied: Vec<(u32, &Entry)> = frontier
            .iter()
            .filter(|(&c, e)| best - mean_of(c, e.sumlog) <= SCORE_EPSILON)
            .map(|(&c, e)| (c, e))
            .collect();
        if variant == MeanVariant::GeoPlus {
            let max_count = tied.iter().map(|&(c, _)| c).max().unwrap();
            tied.retain(|&(c, _)| c == max_count);
        }
        let total: u64 = tied.iter().map(|(_, e)| e.weight.max(1)).sum();
        let mut draw = rng.random_range(0..total);
        let mut target = tied[0].0;
        for &(c, e) in &tied {
            let w = e.weight.max(1);
            if draw < w {
                target = c;
                break;
            }
            draw -= w;
        }
        let score = mean_of(target, frontier[&target].sumlog);

        let mut picked = Vec::new();
        self.reconstruct(root, target, rng, &mut picked);
        picked.sort_unstable();
        (picked, score)
    }

    // Spans of the current window, excluding the parent span itself.
    fn universe(&self, key: &StateKey) -> impl Iterator<Item = (usize, Span)> + '_ {
        let (p, pe, at_start) = (key.p, key.pe, key.at_start);
        self.spans
            .iter()
            .copied()
            .enumerate()
            .filter(move |&(_, s)| {
                s.begin >= p && s.end <= pe && !(at_start && s.begin == p && s.end == pe)
            })
    }

    fn placement_valid(&self, key: &StateKey, child: Span) -> bool {
        // A pending endpoint at or before the child's begin can no longer be
        // crossed; one exactly at its end never can be.
        for &x in &key.pending {
            if x <= child.begin || x == child.end {
                return false;
            }
        }
        for (_, u) in self.universe(key) {
            // Trapped in the gap: nothing later can cross it.
            if u.end <= child.begin {
                return false;
            }
            // Contains the child and ends with it: no later sibling can
            // cross it either.
            if u.begin < child.begin && u.end == child.end {
                return false;
            }
        }
        true
    }

    fn next_pending(&self, key: &StateKey, child: Span) -> Vec<usize> {
        let mut pend: Vec<usize> = key
            .pending
            .iter()
            .copied()
            .filter(|&x| x > child.end)
            .collect();
        for (_, u) in self.universe(key) {
            if u.begin <= child.begin && u.end > child.end {
                pend.push(u.end);
            }
        }
        pend.sort_unstable();
        pend.dedup();
        pend
    }

    fn solve(&mut self, key: StateKey) -> Frontier {
        if let Some(f) = self.memo.get(&key) {
            return f.clone();
        }
        let mut frontier = Frontier::new();

        // Stop: close the window. Valid only when nothing is left unhandled.
        if key.pending.is_empty() && self.universe(&key).next().is_none() {
            frontier.insert(
                0,
                Entry {
                    sumlog: 0.0,
                    weight: 1,
                    sources: vec![Source::Stop],
                },
            );
        }

        let candidates: Vec<(usize, Span)> = self.universe(&key).collect();
        for (idx, child) in candidates {
            if !self.placement_valid(&key, child) {
                continue;
            }
            let inside = self.solve(StateKey {
                p: child.begin,
                pe: child.end,
                at_start: true,
                pending: Vec::new(),
            });
            let cont = self.solve(StateKey {
                p: child.end,
                pe: key.pe,
                at_start: false,
                pending: self.next_pending(&key, child),
            });
            for (&c_in, e_in) in &inside {
                for (&c_cont, e_cont) in &cont {
                    let count = 1 + c_in + c_cont;
                    let sumlog = self.logps[idx] + e_in.sumlog + e_cont.sumlog;
                    let weight = e_in.weight.saturating_mul(e_cont.weight);
                    merge_entry(
                        &mut frontier,
                        count,
                        sumlog,
                        weight,
                        Source::Child {
                            span_idx: idx,
                            inside_count: c_in,
                            cont_count: c_cont,
                            weight,
                        },
                    );
                }
            }
        }

        self.memo.insert(key, frontier.clone());
        frontier
    }

    fn reconstruct(
        &mut self,
        key: StateKey,
        count: u32,
        rng: &mut ChaCha8Rng,
        out: &mut Vec<usize>,
    ) {
        let frontier = self.solve(key.clone());
        let entry = frontier.get(&count).expect("reconstruction target exists");
        let total: u64 = entry.sources.iter().map(|s| s.weight().max(1)).sum();
        let mut draw = rng.random_range(0..total);
        let mut chosen = entry.sources[0];
        for &s in &entry.sources {
            let w = s.weight().max(1);
            if draw < w {
                chosen = s;
                break;
            }
            draw -= w;
        }
        match chosen {
            Source::Stop => {}
            Source::Child {
                span_idx,
                inside_count,
                cont_count,
                ..
            } => {
                out.push(span_idx);
                let child = self.spans[span_idx];
                let inside_key = StateKey {
                    p: child.begin,
                    pe: child.end,
                    at_start: true,
                    pending: Vec::new(),
                };
                let cont_key = StateKey {
                    p: child.end,
                    pe: key.pe,
                    at_start: false,
                    pending: self.next_pending(&key, child),
                };
                self.reconstruct(inside_key, inside_count, rng, out);
                self.reconstruct(cont_key, cont_count, rng, out);
            }
        }
    }
}

fn merge_entry(frontier: &mut Frontier, count: u32, sumlog: f64, weight: u64, src: Source) {
    use std::collections::btree_map::Entry as MapEntry;
    match frontier.entry(count) {
        MapEntry::Vacant(v) => {
            v.insert(Entry {
                sumlog,
                weight,
                sources: vec![src],
            });
        }
        MapEntry::Occupied(mut o) => {
            let e = o.get_mut();
            if sumlog > e.sumlog + SUMLOG_TOLERANCE {
                *e = Entry {
                    sumlog,
                    weight,
                    sources: vec![src],
                };
            } else if sumlog >= e.sumlog - SUMLOG_TOLERANCE {
                e.sumlog = e.sumlog.max(sumlog);
                e.weight = e.weight.saturating_add(weight);
                e.sources.push(src);
            }
        }
    }
}
