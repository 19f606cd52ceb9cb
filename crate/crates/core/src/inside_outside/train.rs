use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use crate::annotation::Annotation;
use crate::error::{Error, Result};
use crate::grammar::Pcfg;
use crate::scalar::Real;

use super::em::{corpus_log_likelihood, em_step, prepare};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub n_nonterminals: usize,
    pub max_iterations: usize,
    /// Stop once the relative training log-likelihood gain falls below this.
    pub rel_tolerance: f64,
    pub seed: u64,
    /// Early-stopping data; never used for estimation.
    pub heldout: Option<Vec<Annotation>>,
    /// Tags to include in the alphabet beyond those observed in the data.
    pub extra_tags: BTreeSet<String>,
    /// Grammar written here whenever held-out likelihood improves.
    pub checkpoint: Option<PathBuf>,
    pub parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_nonterminals: 16,
            max_iterations: 50,
            rel_tolerance: 1e-4,
            seed: 0,
            heldout: None,
            extra_tags: BTreeSet::new(),
            checkpoint: None,
            parallel: true,
        }
    }
}

impl TrainConfig {
    pub fn check(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Spec("max_iterations must be at least 1".into()));
        }
        if !(self.rel_tolerance.is_finite() && self.rel_tolerance > 0.0) {
            return Err(Error::Spec("rel_tolerance must be positive".into()));
        }
        if self.n_nonterminals == 0 {
            return Err(Error::Spec("n_nonterminals must be at least 1".into()));
        }
        Ok(())
    }
}

/// One line of the training log. Likelihoods belong to the grammar that
/// entered the iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub train_ll: f64,
    pub heldout_ll: Option<f64>,
    pub skipped: usize,
}

impl fmt::Display for IterationRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "iter={} train_ll={} heldout_ll=", self.iteration, self.train_ll)?;
        match self.heldout_ll {
            Some(v) => write!(f, "{v}")?,
            None => f.write_str("NA")?,
        }
        write!(f, " skipped={}", self.skipped)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    HeldoutDecreased,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub grammar: Pcfg<T>,
    pub history: Vec<IterationRecord>,
    pub stop: StopReason,
}

#[derive(Debug, Clone)]
pub struct AdaptOutcome<T> {
    /// Stage-1 grammar, over the pretraining alphabet.
    pub pretrained: Pcfg<T>,
    pub grammar: Pcfg<T>,
    pub pretrain_history: Vec<IterationRecord>,
    pub history: Vec<IterationRecord>,
    pub stop: StopReason,
}

fn observed_tags<'a>(data: impl IntoIterator<Item = &'a Annotation>) -> BTreeSet<String> {
    data.into_iter().flat_map(|a| a.sentence().tags().iter().cloned()).collect()
}

fn relative_gain(prev: f64, cur: f64) -> f64 {
    let d = cur - prev;
    if d == 0.0 {
        0.0
    } else {
        d / prev.abs().max(f64::MIN_POSITIVE)
    }
}

/// EM from `grammar` until convergence, held-out decrease, or the iteration
/// cap. Returns the best held-out grammar when held-out data is given, the
/// last grammar otherwise.
pub fn run_em<T: Real>(grammar: Pcfg<T>, train: &[Annotation], cfg: &TrainConfig) -> Result<TrainOutcome<T>> {
    cfg.check()?;
    if train.is_empty() {
        return Err(Error::NoUsableData);
    }
    let data = prepare(&grammar, train)?;
    let heldout = cfg.heldout.as_deref().map(|h| prepare(&grammar, h)).transpose()?;

    let mut current = grammar;
    let mut best: Option<(f64, Pcfg<T>)> = None;
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut stop = StopReason::MaxIterations;

    for iteration in 1..=cfg.max_iterations {
        let step = em_step(&current, &data, cfg.parallel)?;
        let heldout_ll = heldout.as_ref().map(|h| corpus_log_likelihood(&current, h).0);
        let record = IterationRecord { iteration, train_ll: step.log_likelihood, heldout_ll, skipped: step.skipped };
        log::info!("{record}");

        let prev = history.last().cloned();
        history.push(record);

        if let Some(h) = heldout_ll {
            if prev.as_ref().and_then(|p| p.heldout_ll).is_some_and(|p| h < p) {
                stop = StopReason::HeldoutDecreased;
                break;
            }
            if best.as_ref().is_none_or(|(b, _)| h > *b) {
                if let Some(path) = &cfg.checkpoint {
                    current.save(path)?;
                }
                best = Some((h, current.clone()));
            }
        }
        current = step.grammar;
        if let Some(p) = prev {
            if relative_gain(p.train_ll, step.log_likelihood) < cfg.rel_tolerance {
                stop = StopReason::Converged;
                break;
            }
        }
    }

    let grammar = match (heldout, best) {
        (Some(h), Some((best_ll, best_g))) => {
            if stop != StopReason::HeldoutDecreased && corpus_log_likelihood(&current, &h).0 > best_ll {
                if let Some(path) = &cfg.checkpoint {
                    current.save(path)?;
                }
                current
            } else {
                best_g
            }
        }
        _ => current,
    };
    Ok(TrainOutcome { grammar, history, stop })
}

/// Direct induction from a random dense grammar over the observed alphabet
/// (training and held-out tags plus `cfg.extra_tags`).
pub fn train_direct<T: Real>(train: &[Annotation], cfg: &TrainConfig) -> Result<TrainOutcome<T>> {
    cfg.check()?;
    if train.is_empty() {
        return Err(Error::NoUsableData);
    }
    let mut alphabet = observed_tags(train);
    alphabet.extend(observed_tags(cfg.heldout.iter().flatten()));
    alphabet.extend(cfg.extra_tags.iter().cloned());
    let g0 = Pcfg::init_dense_random(cfg.n_nonterminals, &alphabet, cfg.seed)?;
    run_em(g0, train, cfg)
}

/// Stage 1 trains directly on the fully bracketed `pretrain` data without
/// held-out data; stage 2 widens the alphabet and re-estimates on `target`.
pub fn train_adapt<T: Real>(
    pretrain: &[Annotation],
    target: &[Annotation],
    cfg: &TrainConfig,
) -> Result<AdaptOutcome<T>> {
    if target.is_empty() {
        return Err(Error::NoUsableData);
    }
    let stage1_cfg = TrainConfig { heldout: None, checkpoint: None, extra_tags: BTreeSet::new(), ..cfg.clone() };
    let stage1 = train_direct::<T>(pretrain, &stage1_cfg)?;
    retrain(stage1.grammar, stage1.history, target, cfg)
}

/// Stage 2 of adaptation, starting from an already pretrained grammar.
pub fn retrain<T: Real>(
    pretrained: Pcfg<T>,
    pretrain_history: Vec<IterationRecord>,
    target: &[Annotation],
    cfg: &TrainConfig,
) -> Result<AdaptOutcome<T>> {
    let mut alphabet: BTreeSet<String> = pretrained.tags().iter().cloned().collect();
    alphabet.extend(observed_tags(target));
    alphabet.extend(observed_tags(cfg.heldout.iter().flatten()));
    alphabet.extend(cfg.extra_tags.iter().cloned());
    let start = pretrained.extend_alphabet(&alphabet)?;
    let stage2 = run_em(start, target, cfg)?;
    Ok(AdaptOutcome {
        pretrained,
        grammar: stage2.grammar,
        pretrain_history,
        history: stage2.history,
        stop: stage2.stop,
    })
}
