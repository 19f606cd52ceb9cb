//! Non-crossing bracket accuracy and paired significance testing.

use std::collections::BTreeSet;
use std::fmt;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::treebank::Span;

pub fn crosses(a: &Span, b: &Span) -> bool {
    a.crosses(b)
}

/// `(non_crossing, total)`: how many candidate spans cross no gold span.
pub fn sentence_score(candidate: &BTreeSet<Span>, gold: &BTreeSet<Span>) -> (usize, usize) {
    let ok = candidate.iter().filter(|c| gold.iter().all(|g| !c.crosses(g))).count();
    (ok, candidate.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// `(candidate_count, non_crossing_count)` per sentence.
    pub per_sentence: Vec<(usize, usize)>,
    /// Bracket-weighted accuracy; 0 when no candidate brackets exist.
    pub accuracy: f64,
    /// Mean of per-sentence ratios over sentences with candidates.
    pub macro_accuracy: f64,
}

impl EvalReport {
    pub fn sentences(&self) -> usize {
        self.per_sentence.len()
    }

    pub fn brackets(&self) -> usize {
        self.per_sentence.iter().map(|&(c, _)| c).sum()
    }

    /// Tab-separated `index candidate non_crossing` lines with a header.
    pub fn per_sentence_tsv(&self) -> String {
        let mut out = String::from("sentence\tcandidate\tnon_crossing\n");
        for (i, (c, ok)) in self.per_sentence.iter().enumerate() {
            out.push_str(&format!("{i}\t{c}\t{ok}\n"));
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "accuracy={} sentences={} brackets={}", self.accuracy, self.sentences(), self.brackets())
    }
}

pub fn corpus_accuracy(parses: &[BTreeSet<Span>], golds: &[BTreeSet<Span>]) -> Result<EvalReport> {
    if parses.len() != golds.len() {
        return Err(Error::LengthMismatch { left: parses.len(), right: golds.len() });
    }
    let per_sentence: Vec<(usize, usize)> = parses
        .iter()
        .zip(golds)
        .map(|(c, g)| {
            let (ok, total) = sentence_score(c, g);
            (total, ok)
        })
        .collect();
    let (total, ok) = per_sentence.iter().fold((0, 0), |(t, o), &(c, k)| (t + c, o + k));
    let accuracy = if total == 0 { 0.0 } else { ok as f64 / total as f64 };
    let ratios: Vec<f64> = per_sentence.iter().filter(|(c, _)| *c > 0).map(|&(c, k)| k as f64 / c as f64).collect();
    let macro_accuracy = if ratios.is_empty() { 0.0 } else { ratios.iter().sum::<f64>() / ratios.len() as f64 };
    Ok(EvalReport { per_sentence, accuracy, macro_accuracy })
}

/// Two-sided 99% critical values of Student's t for 1..=29 degrees of freedom.
const T_CRIT_99: [f64; 29] = [
    63.657, 9.925, 5.841, 4.604, 4.032, 3.707, 3.499, 3.355, 3.250, 3.169, 3.106, 3.055, 3.012, 2.977, 2.947, 2.921,
    2.898, 2.878, 2.861, 2.845, 2.831, 2.819, 2.807, 2.797, 2.787, 2.779, 2.771, 2.763, 2.756,
];

/// Two-sided 99% critical value; tabulated up to 29 degrees of freedom,
/// computed from the t distribution beyond.
pub fn critical_t_99(df: usize) -> f64 {
    match df {
        0 => f64::INFINITY,
        1..=29 => T_CRIT_99[df - 1],
        _ => StudentsT::new(0.0, 1.0, df as f64).expect("df > 0").inverse_cdf(0.995),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TTest {
    /// Mean of `a - b`.
    pub mean_diff: f64,
    pub t: f64,
    pub df: usize,
    pub significant_99: bool,
}

/// Paired t test on `a[i] - b[i]`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let df = n - 1;
    let t = if var == 0.0 {
        if mean == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(mean)
        }
    } else {
        mean / (var.sqrt() / (n as f64).sqrt())
    };
    Ok(TTest { mean_diff: mean, t, df, significant_99: t.abs() > critical_t_99(df) })
}
