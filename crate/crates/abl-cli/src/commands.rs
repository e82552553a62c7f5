//! Implementations of the five subcommands.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use abl_core::alignment::AlignmentMethod;
use abl_core::corpus::{Corpus, Span, TreeBank};
use abl_core::eval::{self, Metrics, MetricsReport};
use abl_core::hypothesis::{learn, HypothesisSpace};
use abl_core::selection::{self, select_corpus, MeanVariant, ProbabilityModel};

use crate::args::{AlignmentArg, DirectionArg, MeanArg, SelectionArg};
use crate::manifest::Manifest;
use crate::util::{
    atomic_write, data, read_file, sha256_hex, trial_seed, usage, CliError, SHUFFLE_TAG,
};

impl AlignmentArg {
    fn method(self) -> AlignmentMethod {
        match self {
            AlignmentArg::Default => AlignmentMethod::Default,
            AlignmentArg::Biased => AlignmentMethod::Biased,
            AlignmentArg::All => AlignmentMethod::All,
        }
    }

    fn name(self) -> &'static str {
        match self {
            AlignmentArg::Default => "default",
            AlignmentArg::Biased => "biased",
            AlignmentArg::All => "all",
        }
    }

    fn from_name(name: &str) -> Result<AlignmentArg, CliError> {
        match name {
            "default" => Ok(AlignmentArg::Default),
            "biased" => Ok(AlignmentArg::Biased),
            "all" => Ok(AlignmentArg::All),
            other => Err(data(format!("unknown alignment {:?}", other))),
        }
    }
}

impl SelectionArg {
    fn name(self) -> &'static str {
        match self {
            SelectionArg::Incr => "incr",
            SelectionArg::Leaf => "leaf",
            SelectionArg::Branch => "branch",
        }
    }

    fn from_name(name: &str) -> Result<SelectionArg, CliError> {
        match name {
            "incr" => Ok(SelectionArg::Incr),
            "leaf" => Ok(SelectionArg::Leaf),
            "branch" => Ok(SelectionArg::Branch),
            other => Err(data(format!("unknown selection {:?}", other))),
        }
    }

    fn model(self) -> Option<ProbabilityModel> {
        match self {
            SelectionArg::Incr => None,
            SelectionArg::Leaf => Some(ProbabilityModel::Leaf),
            SelectionArg::Branch => Some(ProbabilityModel::Branch),
        }
    }
}

impl MeanArg {
    fn name(self) -> &'static str {
        match self {
            MeanArg::Geo => "geo",
            MeanArg::GeoPlus => "geo+",
        }
    }

    fn from_name(name: &str) -> Result<MeanArg, CliError> {
        match name {
            "geo" => Ok(MeanArg::Geo),
            "geo+" => Ok(MeanArg::GeoPlus),
            other => Err(data(format!("unknown mean {:?}", other))),
        }
    }

    fn variant(self) -> MeanVariant {
        match self {
            MeanArg::Geo => MeanVariant::Geo,
            MeanArg::GeoPlus => MeanVariant::GeoPlus,
        }
    }
}

/// `--mean` only applies to the probabilistic selection methods.
pub fn check_mean_combination(
    selection: Option<SelectionArg>,
    mean: Option<MeanArg>,
) -> Result<(), CliError> {
    if mean.is_some() && matches!(selection, Some(SelectionArg::Incr)) {
        return Err(usage(
            "--mean applies to leaf/branch selection only; incr never scores combinations",
        ));
    }
    Ok(())
}

fn parse_plain_file(path: &Path, min_length: usize) -> Result<Corpus, CliError> {
    let corpus = Corpus::parse_plain(&read_file(path)?);
    Ok(if min_length > 1 {
        corpus.filter_min_length(min_length)
    } else {
        corpus
    })
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    output.with_file_name(name)
}

pub fn cmd_learn(
    input: &Path,
    alignment: AlignmentArg,
    selection: Option<SelectionArg>,
    min_length: usize,
    output: &Path,
) -> Result<(), CliError> {
    let corpus = parse_plain_file(input, min_length)?;
    if corpus.is_empty() {
        return Err(data(format!(
            "{}: no sentences to learn from",
            input.display()
        )));
    }
    let filter = match selection {
        Some(SelectionArg::Incr) => Some(selection::incr_filter as _),
        _ => None,
    };
    let checksum = sha256_hex(&corpus.to_plain_text());
    let space = learn(corpus, alignment.method(), filter);

    atomic_write(output, &space.to_tabular())?;
    let mut m = Manifest::new();
    m.set("command", "learn");
    m.set("input", input.display());
    m.set("alignment", alignment.name());
    m.set("selection", selection.map_or("none", |s| s.name()));
    m.set("min_length", min_length);
    m.set("corpus_sha256", &checksum);
    m.set("sentences", space.corpus().len());
    m.set("hypotheses", space.hypothesis_count());
    m.set("canonical_types", space.distinct_canonical_types().len());
    m.set("pairs_aligned", space.stats().pairs_aligned);
    m.set("capped_pairs", space.stats().capped_pairs.len());
    if !space.stats().capped_pairs.is_empty() {
        let list: Vec<String> = space
            .stats()
            .capped_pairs
            .iter()
            .map(|(a, b)| format!("{}-{}", a, b))
            .collect();
        m.set("capped_pair_list", list.join(","));
    }
    m.write(&manifest_path(output))?;
    println!(
        "learned {} hypotheses over {} sentences -> {}",
        space.hypothesis_count(),
        space.corpus().len(),
        output.display()
    );
    Ok(())
}

fn load_space_checked(space_path: &Path) -> Result<HypothesisSpace, CliError> {
    let space = HypothesisSpace::parse_tabular(&read_file(space_path)?)
        .map_err(|e| data(format!("{}: {}", space_path.display(), e)))?;
    let manifest = Manifest::read(&manifest_path(space_path)).map_err(|e| {
        data(format!(
            "{}: cannot verify corpus checksum ({})",
            space_path.display(),
            e
        ))
    })?;
    let recorded = manifest.require("corpus_sha256")?.to_owned();
    let actual = sha256_hex(&space.corpus().to_plain_text());
    if recorded != actual {
        return Err(data(format!(
            "{}: corpus checksum mismatch (manifest {}, file {})",
            space_path.display(),
            recorded,
            actual
        )));
    }
    Ok(space)
}

pub fn cmd_select(
    space_path: &Path,
    selection: SelectionArg,
    mean: Option<MeanArg>,
    seed: u64,
    output: &Path,
) -> Result<(), CliError> {
    check_mean_combination(Some(selection), mean)?;
    let space = load_space_checked(space_path)?;
    let variant = mean.unwrap_or(MeanArg::Geo);

    let labelled: Vec<Vec<(Span, String)>> = match selection.model() {
        None => {
            // incr resolves overlaps during learning; here the stored space
            // must already be overlap-free and passes through unchanged.
            for sid in 0..space.corpus().len() {
                let spans = space.spans_of(sid);
                for (i, &a) in spans.iter().enumerate() {
                    if let Some(&b) = spans[i + 1..].iter().find(|&&b| a.crosses(b)) {
                        return Err(data(format!(
                            "sentence {}: spans {} and {} overlap; incr requires a space \
                             learned with incr filtering (use leaf or branch instead)",
                            sid, a, b
                        )));
                    }
                }
            }
            (0..space.corpus().len())
                .map(|sid| {
                    space
                        .sentence_hypotheses(sid)
                        .into_iter()
                        .map(|h| (h.span, h.nt.to_string()))
                        .collect()
                })
                .collect()
        }
        Some(model) => {
            let outcome = select_corpus(&space, model, variant.variant(), seed);
            outcome.labelled_spans()
        }
    };

    let tb =
        TreeBank::from_parts(space.corpus().clone(), labelled).map_err(|e| data(e.to_string()))?;
    let text = tb.write().map_err(|e| data(e.to_string()))?;
    atomic_write(output, &text)?;

    let mut m = Manifest::new();
    m.set("command", "select");
    m.set("space", space_path.display());
    m.set("selection", selection.name());
    m.set("mean", mean.map_or("-", |v| v.name()));
    m.set("seed", seed);
    m.set("corpus_sha256", sha256_hex(&space.corpus().to_plain_text()));
    m.write(&manifest_path(output))?;
    println!("selected structures -> {}", output.display());
    Ok(())
}

/// Parses a bracket file, returning span sets plus surface token lines.
fn load_treebank(path: &Path) -> Result<TreeBank, CliError> {
    TreeBank::parse(&read_file(path)?).map_err(|e| data(format!("{}: {}", path.display(), e)))
}

fn check_sentence_alignment(learned: &TreeBank, gold: &TreeBank) -> Result<(), CliError> {
    if learned.len() != gold.len() {
        return Err(data(format!(
            "sentence count mismatch: learned {} vs gold {}",
            learned.len(),
            gold.len()
        )));
    }
    for sid in 0..learned.len() {
        if learned.corpus().surface_line(sid) != gold.corpus().surface_line(sid) {
            return Err(data(format!(
                "sentence {}: token sequences differ between learned and gold files",
                sid
            )));
        }
    }
    Ok(())
}

fn spans_for_eval(tb: &TreeBank, exclude_trivial: bool) -> Vec<Vec<Span>> {
    let sets = tb.span_sets();
    if exclude_trivial {
        let lens: Vec<usize> = tb.corpus().sentences().iter().map(|s| s.len()).collect();
        eval::without_trivial_spans(&sets, &lens)
    } else {
        sets
    }
}

fn single_trial_report(m: Metrics) -> MetricsReport {
    eval::aggregate(&[m]).expect("one trial aggregates")
}

pub fn cmd_eval(
    learned_path: &Path,
    gold_path: &Path,
    exclude_trivial: bool,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let learned = load_treebank(learned_path)?;
    let gold = load_treebank(gold_path)?;
    check_sentence_alignment(&learned, &gold)?;
    let o = spans_for_eval(&learned, exclude_trivial);
    let t = spans_for_eval(&gold, exclude_trivial);
    let m = eval::metrics(&o, &t).map_err(|e| data(e.to_string()))?;
    let report = single_trial_report(m);
    print!("{}", report.table());
    if let Some(path) = output {
        atomic_write(path, &report.key_values())?;
    }
    Ok(())
}

pub fn cmd_baseline(
    input: Option<&Path>,
    gold_path: Option<&Path>,
    direction: DirectionArg,
    exclude_trivial: bool,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let (corpus, gold) = match (input, gold_path) {
        (Some(_), Some(_)) => {
            return Err(usage("pass either --input or --gold, not both"));
        }
        (Some(p), None) => (parse_plain_file(p, 0)?, None),
        (None, Some(g)) => {
            let tb = load_treebank(g)?;
            (tb.strip(), Some(tb))
        }
        (None, None) => return Err(usage("baseline needs --input or --gold")),
    };
    if corpus.is_empty() {
        return Err(data("empty corpus"));
    }

    let build = match direction {
        DirectionArg::Right => eval::right_branching,
        DirectionArg::Left => eval::left_branching,
    };
    let labelled: Vec<Vec<(Span, String)>> = corpus
        .sentences()
        .iter()
        .map(|s| {
            build(s.len())
                .into_iter()
                .map(|sp| (sp, "0".to_owned()))
                .collect()
        })
        .collect();
    let tb = TreeBank::from_parts(corpus, labelled).map_err(|e| data(e.to_string()))?;

    if let Some(path) = output {
        atomic_write(path, &tb.write().map_err(|e| data(e.to_string()))?)?;
        println!("baseline structures -> {}", path.display());
    }
    if let Some(gold) = gold {
        let o = spans_for_eval(&tb, exclude_trivial);
        let t = spans_for_eval(&gold, exclude_trivial);
        let m = eval::metrics(&o, &t).map_err(|e| data(e.to_string()))?;
        print!("{}", single_trial_report(m).table());
    } else if output.is_none() {
        return Err(usage("baseline without --gold needs --output"));
    }
    Ok(())
}

/// Everything a run needs; reconstructable from its own manifest.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub gold: PathBuf,
    pub alignment: AlignmentArg,
    pub selection: SelectionArg,
    pub mean: Option<MeanArg>,
    pub trials: u64,
    pub seed: u64,
    pub min_length: usize,
    pub exclude_trivial: bool,
    pub shuffle: bool,
    pub output: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check_mean_combination(Some(self.selection), self.mean)?;
        if self.trials < 1 {
            return Err(usage("--trials must be at least 1"));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        let plus = match self.mean {
            Some(MeanArg::GeoPlus) => "+",
            _ => "",
        };
        format!(
            "{}:{}{}",
            self.alignment.name(),
            self.selection.name(),
            plus
        )
    }

    pub fn from_manifest(
        path: &Path,
        output_override: Option<&Path>,
    ) -> Result<RunConfig, CliError> {
        let m = Manifest::read(path)?;
        if m.require("command")? != "run" {
            return Err(data(format!("{}: not a run manifest", path.display())));
        }
        let mean = match m.require("mean")? {
            "-" => None,
            name => Some(MeanArg::from_name(name)?),
        };
        let parse_u64 = |key: &str| -> Result<u64, CliError> {
            m.require(key)?
                .parse()
                .map_err(|_| data(format!("manifest key {:?} is not a number", key)))
        };
        Ok(RunConfig {
            gold: PathBuf::from(m.require("gold")?),
            alignment: AlignmentArg::from_name(m.require("alignment")?)?,
            selection: SelectionArg::from_name(m.require("selection")?)?,
            mean,
            trials: parse_u64("trials")?,
            seed: parse_u64("seed")?,
            min_length: parse_u64("min_length")? as usize,
            exclude_trivial: m.require("exclude_trivial_brackets")? == "true",
            shuffle: m.require("shuffle")? == "true",
            output: output_override
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from(m.get("output").unwrap_or("."))),
        })
    }

    fn manifest(&self, trial_seeds: &[u64], corpus_sha256: &str) -> Manifest {
        let mut m = Manifest::new();
        m.set("command", "run");
        m.set("gold", self.gold.display());
        m.set("alignment", self.alignment.name());
        m.set("selection", self.selection.name());
        m.set("mean", self.mean.map_or("-", |v| v.name()));
        m.set("trials", self.trials);
        m.set("seed", self.seed);
        m.set("min_length", self.min_length);
        m.set("exclude_trivial_brackets", self.exclude_trivial);
        m.set("shuffle", self.shuffle);
        m.set("output", self.output.display());
        m.set("corpus_sha256", corpus_sha256);
        let seeds: Vec<String> = trial_seeds.iter().map(|s| s.to_string()).collect();
        m.set("trial_seeds", seeds.join(","));
        m
    }
}

pub fn cmd_run(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let gold_all = load_treebank(&cfg.gold)?;
    let gold = if cfg.min_length > 1 {
        gold_all.filter_min_length(cfg.min_length)
    } else {
        gold_all
    };
    if gold.is_empty() {
        return Err(data("no sentences left to learn from"));
    }
    let corpus = gold.strip();
    let corpus_sha256 = sha256_hex(&corpus.to_plain_text());
    let lens: Vec<usize> = corpus.sentences().iter().map(|s| s.len()).collect();
    let gold_sets = spans_for_eval(&gold, cfg.exclude_trivial);

    // The probabilistic methods learn once: the accumulated space does not
    // depend on sentence order, only their tie-breaking draws vary by trial.
    let base_space = cfg
        .selection
        .model()
        .map(|_| learn(corpus.clone(), cfg.alignment.method(), None));

    let mut trial_seeds = Vec::new();
    let mut trial_metrics = Vec::new();
    for t in 0..cfg.trials {
        let tseed = trial_seed(cfg.seed, t);
        trial_seeds.push(tseed);
        let labelled: Vec<Vec<(Span, String)>> = match cfg.selection.model() {
            None => {
                let mut perm: Vec<usize> = (0..corpus.len()).collect();
                if cfg.shuffle {
                    let mut rng = ChaCha8Rng::seed_from_u64(tseed ^ SHUFFLE_TAG);
                    perm.shuffle(&mut rng);
                }
                let space = learn(
                    corpus.permuted(&perm),
                    cfg.alignment.method(),
                    Some(selection::incr_filter as _),
                );
                let mut labelled = vec![Vec::new(); corpus.len()];
                for (new_sid, &orig) in perm.iter().enumerate() {
                    labelled[orig] = space
                        .sentence_hypotheses(new_sid)
                        .into_iter()
                        .map(|h| (h.span, h.nt.to_string()))
                        .collect();
                }
                labelled
            }
            Some(model) => {
                let space = base_space.as_ref().expect("learned above");
                let variant = cfg.mean.unwrap_or(MeanArg::Geo).variant();
                select_corpus(space, model, variant, tseed).labelled_spans()
            }
        };

        let sets: Vec<Vec<Span>> = labelled
            .iter()
            .map(|set| set.iter().map(|&(sp, _)| sp).collect())
            .collect();
        let eval_sets = if cfg.exclude_trivial {
            eval::without_trivial_spans(&sets, &lens)
        } else {
            sets
        };
        trial_metrics.push(eval::metrics(&eval_sets, &gold_sets).map_err(|e| data(e.to_string()))?);

        let tb = TreeBank::from_parts(corpus.clone(), labelled).map_err(|e| data(e.to_string()))?;
        let path = cfg.output.join(format!("trial_{:02}.br", t));
        atomic_write(&path, &tb.write().map_err(|e| data(e.to_string()))?)?;
    }

    let report = eval::aggregate(&trial_metrics).map_err(|e| data(e.to_string()))?;
    let row = report.row(&cfg.label());
    println!("{}", row);
    print!("{}", report.table());
    atomic_write(&cfg.output.join("summary.txt"), &format!("{}\n", row))?;
    atomic_write(&cfg.output.join("metrics.kv"), &report.key_values())?;
    cfg.manifest(&trial_seeds, &corpus_sha256)
        .write(&cfg.output.join("run.manifest"))?;
    Ok(())
}
