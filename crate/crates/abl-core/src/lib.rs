//! Learns labelled constituent structure from plain, untagged sentences.
//!
//! The pipeline has two phases. Alignment learning compares every pair of
//! sentences, takes the parts that differ as candidate constituents, and
//! gives interchangeable parts the same non-terminal type. Selection then
//! resolves the overlapping candidates per sentence, either online (first
//! stored wins) or by maximizing the geometric mean of constituent
//! probabilities over non-crossing subsets. The [`eval`] module scores a
//! learned corpus against a gold treebank with crossing-brackets metrics.

pub mod alignment;
pub mod corpus;
pub mod eval;
pub mod hypothesis;
pub mod selection;

pub use alignment::{Alignment, AlignmentMethod, DissimilarPair, Gamma, Link};
pub use corpus::{Corpus, CorpusError, Interner, Sentence, Span, TokenId, TreeBank};
pub use eval::{Metrics, MetricsReport, RecursionInstance};
pub use hypothesis::{Hypothesis, HypothesisSpace, LearnStats, NonTerminal, TypeStore};
pub use selection::{MeanVariant, ProbabilityModel, SelectionOutcome, SentenceSelection};
