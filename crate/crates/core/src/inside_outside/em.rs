use crate::annotation::Annotation;
use crate::error::{Error, Result};
use crate::grammar::Pcfg;
use crate::scalar::Real;

use super::chart::{inside_encoded, outside_encoded, CountSink};
use super::mask::{build_mask, ConstraintMask};

/// Sentences per sequential leaf of the count reduction.
const LEAF: usize = 4;

/// A sentence encoded against one grammar's alphabet, with its mask.
#[derive(Debug, Clone)]
pub struct PreparedSentence {
    pub tags: Vec<usize>,
    pub mask: ConstraintMask,
}

pub fn prepare<T: Real>(g: &Pcfg<T>, data: &[Annotation]) -> Result<Vec<PreparedSentence>> {
    data.iter()
        .map(|a| {
            let tags = g.encode(a.sentence())?;
            let mask = build_mask(tags.len(), a)?;
            Ok(PreparedSentence { tags, mask })
        })
        .collect()
}

/// Expected rule counts, not yet multiplied by the rule probabilities.
#[derive(Debug, Clone)]
struct Accumulator<T> {
    binary: Vec<T>,
    lexical: Vec<T>,
    log_likelihood: T,
    used: usize,
    skipped: usize,
}

impl<T: Real> Accumulator<T> {
    fn new(g: &Pcfg<T>) -> Self {
        Accumulator {
            binary: vec![T::zero(); g.binary_table().len()],
            lexical: vec![T::zero(); g.lexical_table().len()],
            log_likelihood: T::zero(),
            used: 0,
            skipped: 0,
        }
    }

    fn add(&mut self, g: &Pcfg<T>, s: &PreparedSentence) {
        let inside = inside_encoded(g, &s.tags, &s.mask);
        let ll = inside.log_likelihood();
        if ll == T::neg_infinity() {
            self.skipped += 1;
            return;
        }
        let sink = CountSink { binary: &mut self.binary, lexical: &mut self.lexical };
        outside_encoded(g, &s.tags, &s.mask, &inside, Some(sink)).expect("parseable sentence");
        self.log_likelihood = self.log_likelihood + ll;
        self.used += 1;
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.binary.iter_mut().zip(&other.binary) {
            *a = *a + *b;
        }
        for (a, b) in self.lexical.iter_mut().zip(&other.lexical) {
            *a = *a + *b;
        }
        self.log_likelihood = self.log_likelihood + other.log_likelihood;
        self.used += other.used;
        self.skipped += other.skipped;
        self
    }
}

/// Pairwise reduction over a fixed tree of sub-slices. The tree depends only
/// on the data length, so the parallel result is bit-identical to the
/// sequential one.
fn reduce<T: Real>(g: &Pcfg<T>, data: &[PreparedSentence], parallel: bool) -> Accumulator<T> {
    if data.len() <= LEAF {
        let mut acc = Accumulator::new(g);
        for s in data {
            acc.add(g, s);
        }
        return acc;
    }
    let (a, b) = data.split_at(data.len() / 2);
    let (ca, cb) = if parallel {
        rayon::join(|| reduce(g, a, parallel), || reduce(g, b, parallel))
    } else {
        (reduce(g, a, false), reduce(g, b, false))
    };
    ca.merge(cb)
}

#[derive(Debug, Clone)]
pub struct EmStep<T> {
    /// Re-estimated grammar.
    pub grammar: Pcfg<T>,
    /// Training log-likelihood of the input grammar.
    pub log_likelihood: f64,
    pub skipped: usize,
}

/// M-step: counts are normalized per left-hand side. A nonterminal with no
/// expected use keeps its previous row.
fn maximize<T: Real>(g: &Pcfg<T>, acc: &Accumulator<T>) -> Pcfg<T> {
    let mut binary: Vec<T> = g.binary_table().iter().zip(&acc.binary).map(|(&p, &q)| p * q).collect();
    let mut lexical: Vec<T> = g.lexical_table().iter().zip(&acc.lexical).map(|(&p, &q)| p * q).collect();
    let (w, t) = (g.n_nonterminals() * g.n_nonterminals(), g.n_tags());
    for lhs in 0..g.n_nonterminals() {
        let b = &mut binary[lhs * w..(lhs + 1) * w];
        let l = &mut lexical[lhs * t..(lhs + 1) * t];
        let z = b.iter().copied().sum::<T>() + l.iter().copied().sum::<T>();
        if z > T::zero() && z.is_finite() {
            b.iter_mut().for_each(|v| *v = *v / z);
            l.iter_mut().for_each(|v| *v = *v / z);
        } else {
            b.copy_from_slice(g.binary_row(lhs));
            l.copy_from_slice(g.lexical_row(lhs));
        }
    }
    Pcfg::from_tables(g.n_nonterminals(), g.tags().to_vec(), binary, lexical).expect("same dimensions")
}

/// One E-step and M-step over prepared data.
pub fn em_step<T: Real>(g: &Pcfg<T>, data: &[PreparedSentence], parallel: bool) -> Result<EmStep<T>> {
    let acc = reduce(g, data, parallel);
    if acc.used == 0 {
        return Err(Error::NoUsableData);
    }
    Ok(EmStep { grammar: maximize(g, &acc), log_likelihood: acc.log_likelihood.as_f64(), skipped: acc.skipped })
}

/// One Inside-Outside re-estimation step on annotated sentences.
pub fn em_iteration<T: Real>(g: &Pcfg<T>, data: &[Annotation], parallel: bool) -> Result<EmStep<T>> {
    em_step(g, &prepare(g, data)?, parallel)
}

/// Total log-likelihood over parseable sentences, and the number skipped.
pub fn corpus_log_likelihood<T: Real>(g: &Pcfg<T>, data: &[PreparedSentence]) -> (f64, usize) {
    let mut lls = Vec::with_capacity(data.len());
    let mut skipped = 0;
    for s in data {
        let ll = inside_encoded(g, &s.tags, &s.mask).log_likelihood();
        if ll == T::neg_infinity() {
            skipped += 1;
        } else {
            lls.push(ll);
        }
    }
    (crate::scalar::pairwise_sum(&lls).as_f64(), skipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::Supervision;
    use crate::fixtures::G1;
    use crate::treebank::{Sentence, Span};
    use approx::assert_relative_eq;

    fn g1() -> Pcfg<f64> {
        Pcfg::from_text(G1).unwrap()
    }

    fn raw(n: usize) -> Annotation {
        Annotation::unbracketed(Sentence::new(vec!["a".into(); n]).unwrap())
    }

    #[test]
    fn one_token_gives_pure_lexical_rule() {
        let step = em_iteration(&g1(), &[raw(1)], false).unwrap();
        assert_eq!(step.grammar.lexical(0, 0), 1.0);
        assert_eq!(step.grammar.binary(0, 0, 0), 0.0);
        assert_relative_eq!(step.log_likelihood, 0.6f64.ln());
        assert_eq!(step.skipped, 0);
    }

    #[test]
    fn two_tokens_give_one_third() {
        let step = em_iteration(&g1(), &[raw(2)], false).unwrap();
        assert_relative_eq!(step.grammar.binary(0, 0, 0), 1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(step.grammar.lexical(0, 0), 2.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn empty_data_is_error() {
        assert!(matches!(em_iteration(&g1(), &[], false), Err(Error::NoUsableData)));
    }

    #[test]
    fn unparseable_sentences_are_skipped() {
        let g: Pcfg<f64> = Pcfg::from_text("pcfg 2\ntags a\nB 0 1 1 0.5\nL 0 a 0.5\nL 1 a 1\n").unwrap();
        // X0 -> X1 X1 covers only width 2 below the root; three tokens are
        // unparseable, one and two tokens are fine.
        let data = [raw(1), raw(2), raw(3)];
        let step = em_iteration(&g, &data, false).unwrap();
        assert_eq!(step.skipped, 1);
        assert!(step.grammar.validate().is_empty());
        let only_bad = [raw(3)];
        assert!(matches!(em_iteration(&g, &only_bad, false), Err(Error::NoUsableData)));
    }

    #[test]
    fn brackets_change_counts() {
        let g = Pcfg::<f64>::init_dense_random(2, ["a"], 1).unwrap();
        let s = Sentence::new(vec!["a".into(); 4]).unwrap();
        let left = Annotation::new(s.clone(), [Span::new(0, 3)].into(), Supervision::Given).unwrap();
        let right = Annotation::new(s, [Span::new(1, 4)].into(), Supervision::Given).unwrap();
        let a = em_iteration(&g, &[left], false).unwrap();
        let b = em_iteration(&g, &[right], false).unwrap();
        assert!(a.log_likelihood < raw_ll(&g, 4));
        assert_ne!(a.grammar, b.grammar);
    }

    fn raw_ll(g: &Pcfg<f64>, n: usize) -> f64 {
        corpus_log_likelihood(g, &prepare(g, &[raw(n)]).unwrap()).0
    }

    #[test]
    fn parallel_is_bit_identical() {
        let g = Pcfg::<f64>::init_dense_random(4, ["a", "b"], 3).unwrap();
        let data: Vec<Annotation> = (1..40)
            .map(|i| {
                let tags = (0..(i % 9) + 1).map(|k| if (i + k) % 3 == 0 { "a" } else { "b" }).collect::<Vec<_>>();
                Annotation::unbracketed(Sentence::from_strs(&tags).unwrap())
            })
            .collect();
        let seq = em_iteration(&g, &data, false).unwrap();
        let par = em_iteration(&g, &data, true).unwrap();
        assert_eq!(seq.log_likelihood.to_bits(), par.log_likelihood.to_bits());
        assert_eq!(seq.grammar, par.grammar);
    }
}
