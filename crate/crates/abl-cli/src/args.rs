//! Command-line surface.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "abl",
    version,
    about = "Learns labelled constituent structure from plain sentences and scores it \
             against gold treebanks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlignmentArg {
    Default,
    Biased,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectionArg {
    Incr,
    Leaf,
    Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeanArg {
    Geo,
    #[value(name = "geo+")]
    GeoPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Right,
    Left,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align all sentence pairs and write the hypothesis space.
    Learn {
        /// Plain corpus: one sentence per line, whitespace-tokenized.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        alignment: AlignmentArg,
        /// With incr, overlapping candidates are rejected while learning;
        /// leaf/branch leave learning untouched.
        #[arg(long, value_enum)]
        selection: Option<SelectionArg>,
        /// Drop sentences shorter than this many tokens.
        #[arg(long, default_value_t = 0)]
        min_length: usize,
        /// Hypothesis-space file to write (a .manifest sits beside it).
        #[arg(long)]
        output: PathBuf,
    },
    /// Resolve overlaps in a hypothesis space and write a bracket corpus.
    Select {
        /// Hypothesis-space file produced by learn.
        #[arg(long)]
        space: PathBuf,
        #[arg(long, value_enum)]
        selection: SelectionArg,
        /// Combination score for leaf/branch (defaults to geo).
        #[arg(long, value_enum)]
        mean: Option<MeanArg>,
        /// Seed for tie-breaking draws.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Score a learned bracket corpus against a gold bracket corpus.
    Eval {
        #[arg(long)]
        learned: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Ignore width-1 and whole-sentence brackets on both sides.
        #[arg(long)]
        exclude_trivial_brackets: bool,
        /// Also write the metrics as a key-value file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Learn, select, and evaluate repeatedly; report mean and stddev.
    Run {
        /// Gold treebank; its stripped sentences are the learning input.
        #[arg(long, required_unless_present = "from_manifest")]
        gold: Option<PathBuf>,
        #[arg(long, value_enum, required_unless_present = "from_manifest")]
        alignment: Option<AlignmentArg>,
        #[arg(long, value_enum, required_unless_present = "from_manifest")]
        selection: Option<SelectionArg>,
        #[arg(long, value_enum)]
        mean: Option<MeanArg>,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        min_length: usize,
        #[arg(long)]
        exclude_trivial_brackets: bool,
        /// Keep the corpus order fixed across incr trials.
        #[arg(long)]
        no_shuffle: bool,
        /// Directory for trial outputs, metrics, and the run manifest.
        #[arg(long, required_unless_present = "from_manifest")]
        output: Option<PathBuf>,
        /// Re-run the configuration recorded in an earlier run manifest.
        #[arg(long)]
        from_manifest: Option<PathBuf>,
    },
    /// Build right- or left-branching structures as a reference system.
    Baseline {
        /// Plain corpus to bracket (mutually exclusive with --gold).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Gold treebank: its sentences are bracketed and scored against it.
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long, value_enum)]
        direction: DirectionArg,
        #[arg(long)]
        exclude_trivial_brackets: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}
