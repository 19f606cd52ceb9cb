use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::{extract, sample_brackets, Annotation};
use crate::error::{Error, Result};
use crate::evaluation::{corpus_accuracy, paired_t_test, EvalReport};
use crate::grammar::Pcfg;
use crate::inside_outside::{retrain, train_direct, IterationRecord, TrainConfig};
use crate::parser::viterbi_parse;
use crate::synthetic::alias_labels;
use crate::treebank::{read_manifest_corpus, read_treebank, split_corpus, tree_brackets, Corpus};

use super::spec::{Condition, DataSource, ExperimentSpec, Strategy};

/// Supervision label of the row scoring the stage-1 grammar alone.
pub const PRETRAINED_LABEL: &str = "pretrained";

const SPLIT_STREAM: u64 = 1;
const INIT_STREAM: u64 = 2;
const SAMPLE_STREAM: u64 = 3;
const HELDOUT_STREAM: u64 = 4;
const PRETRAIN_STREAM: u64 = 5;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent seed for sub-stream `label` of `base`.
pub fn derive_seed(base: u64, label: u64) -> u64 {
    splitmix64(base ^ splitmix64(label))
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub strategy: String,
    pub supervision: String,
    pub replication: usize,
    pub seed: u64,
    /// Countable brackets supplied to training.
    pub bracket_count: usize,
    pub accuracy: Option<f64>,
    pub macro_accuracy: Option<f64>,
    pub iterations: usize,
    /// Training sentences with zero likelihood in the final iteration.
    pub skipped: usize,
    /// Test sentences with no parse, scored as having no brackets.
    pub parse_failures: usize,
    /// `ok`, or the error that stopped this cell.
    pub status: String,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone)]
struct Data {
    train: Corpus,
    heldout: Option<Corpus>,
    test: Corpus,
}

fn load_corpus(path: &Path, np_labels: &BTreeSet<String>, n: usize) -> Result<Corpus> {
    let corpus = if path.extension().is_some_and(|e| e == "manifest") {
        read_manifest_corpus(path)?
    } else {
        read_treebank(path)?
    };
    if np_labels.is_empty() {
        Ok(corpus)
    } else {
        alias_labels(&corpus, n.max(max_alias_index(np_labels) + 1), np_labels)
    }
}

fn max_alias_index(labels: &BTreeSet<String>) -> usize {
    labels.iter().filter_map(|l| l.strip_prefix('X')?.parse().ok()).max().unwrap_or(0)
}

/// Scores `g` on `test` against countable gold brackets. Sentences without a
/// parse contribute no candidates. Returns the report and the failure count.
pub fn score_grammar(g: &Pcfg<f64>, test: &Corpus) -> Result<(EvalReport, usize)> {
    let mut failures = 0;
    let mut parses = Vec::with_capacity(test.len());
    let mut golds = Vec::with_capacity(test.len());
    for e in test.entries() {
        match viterbi_parse(g, &e.sentence, None) {
            Ok(p) => parses.push(p.brackets),
            Err(Error::NoParse) => {
                failures += 1;
                parses.push(BTreeSet::new());
            }
            Err(err) => return Err(err),
        }
        golds.push(tree_brackets(&e.tree, true));
    }
    Ok((corpus_accuracy(&parses, &golds)?, failures))
}

/// Annotates every tree of `corpus` under `condition`.
pub fn annotate(corpus: &Corpus, condition: Condition, seed: u64) -> Result<Vec<Annotation>> {
    corpus
        .trees()
        .enumerate()
        .map(|(i, t)| match condition {
            Condition::Fraction(f) => sample_brackets(t, f, derive_seed(seed, i as u64)),
            Condition::Class(c) => extract(t, c),
        })
        .collect()
}

fn full_annotations(corpus: &Corpus) -> Result<Vec<Annotation>> {
    corpus.trees().map(Annotation::full).collect()
}

struct Pretrained {
    grammar: Pcfg<f64>,
    history: Vec<IterationRecord>,
}

/// Trains the stage-1 grammar on fully bracketed `pretrain` trees.
fn pretrain_grammar(pretrain: &Corpus, cfg: &TrainConfig) -> Result<Pretrained> {
    let cfg = TrainConfig { heldout: None, checkpoint: None, extra_tags: BTreeSet::new(), ..cfg.clone() };
    let out = train_direct::<f64>(&full_annotations(pretrain)?, &cfg)?;
    Ok(Pretrained { grammar: out.grammar, history: out.history })
}

/// Trains on fully bracketed `pretrain` trees only and scores on `test`.
pub fn evaluate_pretrained_only(pretrain: &Corpus, test: &Corpus, cfg: &TrainConfig) -> Result<(EvalReport, usize)> {
    let p = pretrain_grammar(pretrain, cfg)?;
    let g = widen(&p.grammar, test)?;
    score_grammar(&g, test)
}

fn widen(g: &Pcfg<f64>, test: &Corpus) -> Result<Pcfg<f64>> {
    let mut tags: BTreeSet<String> = g.tags().iter().cloned().collect();
    tags.extend(test.tag_alphabet().iter().cloned());
    g.extend_alphabet(&tags)
}

struct Replication {
    index: usize,
    seed: u64,
    data: std::result::Result<Data, String>,
    pretrained: Option<std::result::Result<Pretrained, String>>,
}

#[derive(Clone, Copy)]
struct Cell {
    strategy: Strategy,
    condition: Option<Condition>,
    rep: usize,
}

fn error_row(strategy: Strategy, supervision: String, rep: usize, seed: u64, msg: &str) -> ResultRow {
    ResultRow {
        strategy: strategy.to_string(),
        supervision,
        replication: rep,
        seed,
        bracket_count: 0,
        accuracy: None,
        macro_accuracy: None,
        iterations: 0,
        skipped: 0,
        parse_failures: 0,
        status: format!("error: {msg}"),
    }
}

fn train_config(spec: &ExperimentSpec, seed: u64) -> TrainConfig {
    TrainConfig {
        n_nonterminals: spec.n_nonterminals,
        max_iterations: spec.max_iterations,
        rel_tolerance: spec.rel_tolerance,
        seed,
        heldout: None,
        extra_tags: BTreeSet::new(),
        checkpoint: None,
        parallel: spec.parallel,
    }
}

fn run_cell(spec: &ExperimentSpec, rep: &Replication, cell: Cell, pretrain: Option<&Corpus>) -> Result<ResultRow> {
    let data = rep.data.as_ref().map_err(|m| Error::Spec(m.clone()))?;
    let pretrained = match cell.strategy {
        Strategy::Adapt => Some(
            rep.pretrained
                .as_ref()
                .expect("adapt replications pretrain")
                .as_ref()
                .map_err(|m| Error::Spec(m.clone()))?,
        ),
        Strategy::Direct => None,
    };

    let Some(condition) = cell.condition else {
        let p = pretrained.expect("pretrained row is adapt-only");
        let (report, failures) = score_grammar(&widen(&p.grammar, &data.test)?, &data.test)?;
        return Ok(ResultRow {
            strategy: cell.strategy.to_string(),
            supervision: PRETRAINED_LABEL.to_string(),
            replication: rep.index,
            seed: rep.seed,
            bracket_count: pretrain.map_or(0, |c| c.trees().map(|t| tree_brackets(t, true).len()).sum()),
            accuracy: Some(report.accuracy),
            macro_accuracy: Some(report.macro_accuracy),
            iterations: p.history.len(),
            skipped: p.history.last().map_or(0, |r| r.skipped),
            parse_failures: failures,
            status: "ok".into(),
        });
    };

    let sample_seed = derive_seed(rep.seed, SAMPLE_STREAM);
    let train = annotate(&data.train, condition, sample_seed)?;
    let heldout = data
        .heldout
        .as_ref()
        .filter(|h| !h.is_empty())
        .map(|h| annotate(h, condition, derive_seed(rep.seed, HELDOUT_STREAM)))
        .transpose()?;
    let mut extra: BTreeSet<String> = data.test.tag_alphabet().clone();
    extra.extend(data.train.tag_alphabet().iter().cloned());
    let cfg = TrainConfig { heldout, extra_tags: extra, ..train_config(spec, derive_seed(rep.seed, INIT_STREAM)) };

    let (grammar, history) = match pretrained {
        None => {
            let out = train_direct::<f64>(&train, &cfg)?;
            (out.grammar, out.history)
        }
        Some(p) => {
            let out = retrain(p.grammar.clone(), p.history.clone(), &train, &cfg)?;
            (out.grammar, out.history)
        }
    };
    let (report, failures) = score_grammar(&grammar, &data.test)?;
    Ok(ResultRow {
        strategy: cell.strategy.to_string(),
        supervision: condition.label(),
        replication: rep.index,
        seed: rep.seed,
        bracket_count: train.iter().map(Annotation::countable_count).sum(),
        accuracy: Some(report.accuracy),
        macro_accuracy: Some(report.macro_accuracy),
        iterations: history.len(),
        skipped: history.last().map_or(0, |r| r.skipped),
        parse_failures: failures,
        status: "ok".into(),
    })
}

/// Runs every (strategy, condition, replication) cell of `spec`.
///
/// Failures of individual cells become error rows; only problems with the
/// spec or its input files abort the run. Rows are ordered by strategy, then
/// condition (with the adapt-only `pretrained` row first), then replication.
/// Results do not depend on `spec.parallel`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let n = spec.n_nonterminals;
    let fixed = match &spec.data {
        DataSource::Files { train, heldout, test } => Some(Data {
            train: load_corpus(train, &spec.np_labels, n)?,
            heldout: heldout.as_deref().map(|h| load_corpus(h, &spec.np_labels, n)).transpose()?,
            test: load_corpus(test, &spec.np_labels, n)?,
        }),
        DataSource::Split { .. } => None,
    };
    let pooled = match &spec.data {
        DataSource::Split { corpus, sizes } => {
            let c = load_corpus(corpus, &spec.np_labels, n)?;
            if sizes.total() > c.len() {
                return Err(Error::CorpusTooSmall { requested: sizes.total(), available: c.len() });
            }
            Some((c, *sizes))
        }
        DataSource::Files { .. } => None,
    };
    let adapt = spec.strategies.contains(&Strategy::Adapt);
    let pretrain = match &spec.pretrain {
        Some(p) if adapt => Some(load_corpus(p, &spec.np_labels, n)?),
        _ => None,
    };

    let build_rep = |index: usize| -> Replication {
        let seed = spec.base_seed.wrapping_add(index as u64);
        let data = match (&fixed, &pooled) {
            (Some(d), _) => Ok(d.clone()),
            (None, Some((c, sizes))) => split_corpus(c, derive_seed(seed, SPLIT_STREAM), *sizes)
                .map(|s| Data { train: s.train, heldout: Some(s.heldout), test: s.test })
                .map_err(|e| e.to_string()),
            (None, None) => unreachable!("data source resolved above"),
        };
        let pretrained = pretrain.as_ref().map(|p| {
            pretrain_grammar(p, &train_config(spec, derive_seed(seed, PRETRAIN_STREAM))).map_err(|e| e.to_string())
        });
        Replication { index, seed, data, pretrained }
    };
    let reps: Vec<Replication> = if spec.parallel {
        (0..spec.replications).into_par_iter().map(build_rep).collect()
    } else {
        (0..spec.replications).map(build_rep).collect()
    };

    let mut cells = Vec::new();
    for &strategy in &spec.strategies {
        if strategy == Strategy::Adapt {
            cells.extend((0..spec.replications).map(|rep| Cell { strategy, condition: None, rep }));
        }
        for &c in &spec.conditions {
            cells.extend((0..spec.replications).map(|rep| Cell { strategy, condition: Some(c), rep }));
        }
    }
    let run = |cell: &Cell| -> ResultRow {
        let rep = &reps[cell.rep];
        let label = cell.condition.map_or_else(|| PRETRAINED_LABEL.to_string(), |c| c.label());
        run_cell(spec, rep, *cell, pretrain.as_ref()).unwrap_or_else(|e| {
            log::warn!("{} {} replication {}: {e}", cell.strategy, label, cell.rep);
            error_row(cell.strategy, label, cell.rep, rep.seed, &e.to_string())
        })
    };
    Ok(if spec.parallel { cells.par_iter().map(run).collect() } else { cells.iter().map(run).collect() })
}

/// Paired comparison of the two strategies under one condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub condition: String,
    pub replications: usize,
    pub mean_direct: f64,
    pub mean_adapt: f64,
    /// `t` of adapt minus direct.
    pub t: f64,
    pub significant_99: bool,
}

impl Comparison {
    pub fn mean_diff(&self) -> f64 {
        self.mean_adapt - self.mean_direct
    }
}

pub fn comparison_table(rows: &[Comparison]) -> String {
    let mut out = String::from("condition\treplications\tmean_direct\tmean_adapt\tdiff\tt\tsignificant_99\n");
    for c in rows {
        out.push_str(&format!(
            "{}\t{}\t{:.4}\t{:.4}\t{:+.4}\t{:.3}\t{}\n",
            c.condition,
            c.replications,
            c.mean_direct,
            c.mean_adapt,
            c.mean_diff(),
            c.t,
            c.significant_99
        ));
    }
    out
}

/// Pairs direct and adapt rows by replication for every shared condition.
///
/// Every condition must have successful rows for the same replications under
/// both strategies, at least two of them.
pub fn compare_strategies(rows: &[ResultRow]) -> Result<Vec<Comparison>> {
    let mut conditions: Vec<&str> = Vec::new();
    for r in rows.iter().filter(|r| r.supervision != PRETRAINED_LABEL) {
        if !conditions.contains(&r.supervision.as_str()) {
            conditions.push(&r.supervision);
        }
    }
    if conditions.is_empty() {
        return Err(Error::EmptyResults);
    }
    let mut out = Vec::new();
    for cond in conditions {
        let pick = |s: Strategy| -> Result<Vec<(usize, f64)>> {
            let mut v: Vec<(usize, f64)> = Vec::new();
            for r in rows.iter().filter(|r| r.supervision == cond && r.strategy == s.name()) {
                match (r.is_ok(), r.accuracy) {
                    (true, Some(a)) => v.push((r.replication, a)),
                    _ => {
                        return Err(Error::StructureMismatch(format!(
                            "{cond}: {s} replication {} failed",
                            r.replication
                        )))
                    }
                }
            }
            v.sort_by_key(|&(i, _)| i);
            Ok(v)
        };
        let (direct, adapt) = (pick(Strategy::Direct)?, pick(Strategy::Adapt)?);
        let reps = |v: &[(usize, f64)]| v.iter().map(|&(i, _)| i).collect::<Vec<_>>();
        if reps(&direct) != reps(&adapt) {
            return Err(Error::StructureMismatch(format!(
                "{cond}: direct has {} replications, adapt has {}",
                direct.len(),
                adapt.len()
            )));
        }
        let d: Vec<f64> = direct.iter().map(|&(_, a)| a).collect();
        let a: Vec<f64> = adapt.iter().map(|&(_, a)| a).collect();
        let t = paired_t_test(&a, &d)?;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        out.push(Comparison {
            condition: cond.to_string(),
            replications: d.len(),
            mean_direct: mean(&d),
            mean_adapt: mean(&a),
            t: t.t,
            significant_99: t.significant_99,
        });
    }
    Ok(out)
}
