//! Crossing-brackets evaluation of a learned corpus against a gold corpus,
//! multi-trial aggregation, and branching baselines.

use thiserror::Error;

use crate::corpus::Span;
use crate::hypothesis::NonTerminal;
use crate::selection::SelectionOutcome;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("learned and gold corpora differ in sentence count ({learned} vs {gold})")]
    SentenceCountMismatch { learned: usize, gold: usize },
    #[error("no learned constituents; precision is undefined")]
    NoLearnedConstituents,
    #[error("no gold constituents; recall is undefined")]
    NoGoldConstituents,
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("aggregation needs at least one trial")]
    NoTrials,
    #[error("trials disagree on corpus dimensions")]
    TrialMismatch,
}

/// Strict partial overlap between two spans of the same sentence.
pub fn crosses(a: Span, b: Span) -> bool {
    a.crosses(b)
}

fn crossing_count(from: &[Span], against: &[Span]) -> usize {
    from.iter()
        .filter(|&&s| against.iter().any(|&t| s.crosses(t)))
        .count()
}

/// Metric values of one trial, all percentages in [0, 100].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub ncbp: f64,
    pub ncbr: f64,
    pub zcs: f64,
    pub sentences: usize,
    pub learned_constituents: usize,
    pub gold_constituents: usize,
}

/// Percentage of learned constituents that cross no gold constituent,
/// micro-averaged over the corpus.
pub fn ncbp(learned: &[Vec<Span>], gold: &[Vec<Span>]) -> Result<f64, EvalError> {
    check_lengths(learned, gold)?;
    let total: usize = learned.iter().map(|o| o.len()).sum();
    if total == 0 {
        return Err(EvalError::NoLearnedConstituents);
    }
    let crossing: usize = learned
        .iter()
        .zip(gold)
        .map(|(o, t)| crossing_count(o, t))
        .sum();
    Ok(100.0 * (total - crossing) as f64 / total as f64)
}

/// Percentage of gold constituents that cross no learned constituent.
pub fn ncbr(learned: &[Vec<Span>], gold: &[Vec<Span>]) -> Result<f64, EvalError> {
    check_lengths(learned, gold)?;
    let total: usize = gold.iter().map(|t| t.len()).sum();
    if total == 0 {
        return Err(EvalError::NoGoldConstituents);
    }
    let crossing: usize = gold
        .iter()
        .zip(learned)
        .map(|(t, o)| crossing_count(t, o))
        .sum();
    Ok(100.0 * (total - crossing) as f64 / total as f64)
}

/// Percentage of sentences without any crossing constituent.
pub fn zcs(learned: &[Vec<Span>], gold: &[Vec<Span>]) -> Result<f64, EvalError> {
    check_lengths(learned, gold)?;
    if learned.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let clean = learned
        .iter()
        .zip(gold)
        .filter(|(o, t)| crossing_count(o, t) == 0)
        .count();
    Ok(100.0 * clean as f64 / learned.len() as f64)
}

fn check_lengths(learned: &[Vec<Span>], gold: &[Vec<Span>]) -> Result<(), EvalError> {
    if learned.len() != gold.len() {
        return Err(EvalError::SentenceCountMismatch {
            learned: learned.len(),
            gold: gold.len(),
        });
    }
    Ok(())
}

/// All three metrics of one trial.
pub fn metrics(learned: &[Vec<Span>], gold: &[Vec<Span>]) -> Result<Metrics, EvalError> {
    Ok(Metrics {
        ncbp: ncbp(learned, gold)?,
        ncbr: ncbr(learned, gold)?,
        zcs: zcs(learned, gold)?,
        sentences: learned.len(),
        learned_constituents: learned.iter().map(|o| o.len()).sum(),
        gold_constituents: gold.iter().map(|t| t.len()).sum(),
    })
}

/// Drops spans that cannot cross anything: width-1 spans and the full
/// sentence span. `lens` gives each sentence's token count.
pub fn without_trivial_spans(sets: &[Vec<Span>], lens: &[usize]) -> Vec<Vec<Span>> {
    sets.iter()
        .zip(lens)
        .map(|(set, &len)| {
            set.iter()
                .copied()
                .filter(|s| s.width() > 1 && s.width() < len)
                .collect()
        })
        .collect()
}

/// Mean and population standard deviation over repeated trials.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub trials: Vec<Metrics>,
    pub ncbp_mean: f64,
    pub ncbp_std: f64,
    pub ncbr_mean: f64,
    pub ncbr_std: f64,
    pub zcs_mean: f64,
    pub zcs_std: f64,
    pub sentences: usize,
    pub gold_constituents: usize,
    pub learned_constituents_mean: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregates per-trial metrics; trials must share corpus dimensions.
pub fn aggregate(trials: &[Metrics]) -> Result<MetricsReport, EvalError> {
    let first = trials.first().ok_or(EvalError::NoTrials)?;
    if trials
        .iter()
        .any(|t| t.sentences != first.sentences || t.gold_constituents != first.gold_constituents)
    {
        return Err(EvalError::TrialMismatch);
    }
    let collect = |f: fn(&Metrics) -> f64| -> Vec<f64> { trials.iter().map(f).collect() };
    let (ncbp_mean, ncbp_std) = mean_std(&collect(|t| t.ncbp));
    let (ncbr_mean, ncbr_std) = mean_std(&collect(|t| t.ncbr));
    let (zcs_mean, zcs_std) = mean_std(&collect(|t| t.zcs));
    let (learned_mean, _) = mean_std(&collect(|t| t.learned_constituents as f64));
    Ok(MetricsReport {
        trials: trials.to_vec(),
        ncbp_mean,
        ncbp_std,
        ncbr_mean,
        ncbr_std,
        zcs_mean,
        zcs_std,
        sentences: first.sentences,
        gold_constituents: first.gold_constituents,
        learned_constituents_mean: learned_mean,
    })
}

impl MetricsReport {
    /// Aligned plain-text table: metric, mean, stddev.
    pub fn table(&self) -> String {
        let mut out = String::from("metric    mean  stddev\n");
        for (name, mean, std) in [
            ("NCBP", self.ncbp_mean, self.ncbp_std),
            ("NCBR", self.ncbr_mean, self.ncbr_std),
            ("ZCS", self.zcs_mean, self.zcs_std),
        ] {
            out.push_str(&format!("{:<6} {:>7.2} {:>7.2}\n", name, mean, std));
        }
        out
    }

    /// One results-table row: `label  ncbp (std)  ncbr (std)  zcs (std)`.
    pub fn row(&self, label: &str) -> String {
        format!(
            "{}  {:.2} ({:.2})  {:.2} ({:.2})  {:.2} ({:.2})",
            label,
            self.ncbp_mean,
            self.ncbp_std,
            self.ncbr_mean,
            self.ncbr_std,
            self.zcs_mean,
            self.zcs_std
        )
    }

    /// Machine-readable `key = value` lines, keys in fixed order.
    pub fn key_values(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("trials = {}\n", self.trials.len()));
        out.push_str(&format!("sentences = {}\n", self.sentences));
        out.push_str(&format!("gold_constituents = {}\n", self.gold_constituents));
        out.push_str(&format!(
            "learned_constituents_mean = {:.4}\n",
            self.learned_constituents_mean
        ));
        for (name, mean, std) in [
            ("ncbp", self.ncbp_mean, self.ncbp_std),
            ("ncbr", self.ncbr_mean, self.ncbr_std),
            ("zcs", self.zcs_mean, self.zcs_std),
        ] {
            out.push_str(&format!("{}_mean = {:.4}\n", name, mean));
            out.push_str(&format!("{}_std = {:.4}\n", name, std));
        }
        for (i, t) in self.trials.iter().enumerate() {
            out.push_str(&format!(
                "trial_{}_ncbp = {:.4}\ntrial_{}_ncbr = {:.4}\ntrial_{}_zcs = {:.4}\n",
                i, t.ncbp, i, t.ncbr, i, t.zcs
            ));
        }
        out
    }
}

/// Right-branching structure of a sentence of `len` tokens: the full span
/// plus every suffix of width >= 2, a strictly nested chain.
pub fn right_branching(len: usize) -> Vec<Span> {
    assert!(len >= 1);
    let mut spans = vec![Span::new(0, len)];
    for i in 1..len.saturating_sub(1) {
        spans.push(Span::new(i, len));
    }
    spans
}

/// Left-branching structure: the full span plus every prefix of width >= 2.
pub fn left_branching(len: usize) -> Vec<Span> {
    assert!(len >= 1);
    let mut spans = vec![Span::new(0, len)];
    for i in 2..len {
        spans.push(Span::new(0, i));
    }
    spans
}

/// A same-type nesting found in a selected structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecursionInstance {
    pub sid: usize,
    pub outer: Span,
    pub inner: Span,
    pub nt: NonTerminal,
}

/// Every pair of selected constituents where one strictly contains the other
/// and both carry the same canonical type.
pub fn recursion_report(outcome: &SelectionOutcome) -> Vec<RecursionInstance> {
    let mut found = Vec::new();
    for sel in &outcome.sentences {
        for (i, &(a, ta)) in sel.chosen.iter().enumerate() {
            for &(b, tb) in &sel.chosen[i + 1..] {
                if ta != tb || a == b {
                    continue;
                }
                if a.contains(b) {
                    found.push(RecursionInstance {
                        sid: sel.sid,
                        outer: a,
                        inner: b,
                        nt: ta,
                    });
                } else if b.contains(a) {
                    found.push(RecursionInstance {
                        sid: sel.sid,
                        outer: b,
                        inner: a,
                        nt: ta,
                    });
                }
            }
        }
    }
    found
}
