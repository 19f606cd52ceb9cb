//! Max-probability (Viterbi) CKY decoding.

use std::collections::BTreeSet;

use crate::annotation::format_spans;
use crate::error::{Error, Result};
use crate::grammar::{nonterminal_name, Pcfg};
use crate::inside_outside::ConstraintMask;
use crate::scalar::Real;
use crate::treebank::{ParseTree, Sentence, Span};

#[derive(Debug, Clone, Copy, Default)]
struct Back {
    split: usize,
    left: usize,
    right: usize,
}

/// Best log-probability per `(X, i, j)` and the back-pointers that realize it.
#[derive(Debug, Clone)]
pub struct ViterbiChart<T> {
    n: usize,
    nt: usize,
    best: Vec<T>,
    back: Vec<Back>,
}

impl<T: Real> ViterbiChart<T> {
    fn idx(&self, x: usize, i: usize, j: usize) -> usize {
        (i * (self.n + 1) + j) * self.nt + x
    }

    pub fn best_log_prob(&self, x: usize, i: usize, j: usize) -> T {
        self.best[self.idx(x, i, j)]
    }

    /// Builds the chart over tag indices.
    ///
    /// Candidates are visited by decreasing split point, then increasing rule
    /// index `left * N + right`; a later candidate replaces the incumbent only
    /// if it is better by more than a few ulps, so rounding differences
    /// between equal-probability derivations never break a tie. Ties thus go
    /// to the left-branching derivation, then to the lowest rule index.
    pub fn build(g: &Pcfg<T>, tags: &[usize], mask: &ConstraintMask) -> Self {
        let nt = g.n_nonterminals();
        let n = tags.len();
        let cells = (n + 1) * (n + 1);
        let mut chart =
            ViterbiChart { n, nt, best: vec![T::neg_infinity(); cells * nt], back: vec![Back::default(); cells * nt] };
        let log_bin: Vec<T> = g.binary_table().iter().map(|p| p.ln()).collect();
        let tie = T::epsilon() * T::of(16.0);

        for (i, &t) in tags.iter().enumerate() {
            for x in 0..nt {
                let at = chart.idx(x, i, i + 1);
                chart.best[at] = g.lexical(x, t).ln();
            }
        }
        for width in 2..=n {
            for i in 0..=n - width {
                let j = i + width;
                if !mask.allowed(i, j) {
                    continue;
                }
                for x in 0..nt {
                    let rules = &log_bin[x * nt * nt..(x + 1) * nt * nt];
                    let mut best = T::neg_infinity();
                    let mut back = Back::default();
                    for k in (i + 1..j).rev() {
                        if !(mask.allowed(i, k) && mask.allowed(k, j)) {
                            continue;
                        }
                        for y in 0..nt {
                            let ly = chart.best[chart.idx(y, i, k)];
                            if ly == T::neg_infinity() {
                                continue;
                            }
                            for z in 0..nt {
                                let cand = rules[y * nt + z] + ly + chart.best[chart.idx(z, k, j)];
                                if cand > best + tie * best.abs().max(T::one())
                                    || best == T::neg_infinity() && cand > best
                                {
                                    best = cand;
                                    back = Back { split: k, left: y, right: z };
                                }
                            }
                        }
                    }
                    let at = chart.idx(x, i, j);
                    chart.best[at] = best;
                    chart.back[at] = back;
                }
            }
        }
        chart
    }

    fn tree(&self, g: &Pcfg<T>, tags: &[usize], x: usize, i: usize, j: usize, spans: &mut BTreeSet<Span>) -> ParseTree {
        spans.insert(Span::new(i, j));
        if j == i + 1 {
            let leaf = ParseTree::leaf(g.tags()[tags[i]].clone());
            return ParseTree::node(nonterminal_name(x), vec![leaf]).expect("one child");
        }
        let b = self.back[self.idx(x, i, j)];
        let left = self.tree(g, tags, b.left, i, b.split, spans);
        let right = self.tree(g, tags, b.right, b.split, j, spans);
        ParseTree::node(nonterminal_name(x), vec![left, right]).expect("two children")
    }
}

#[derive(Debug, Clone)]
pub struct ViterbiParse<T> {
    /// Derivation with anonymous `X<i>` labels; lexical rules appear as
    /// `(X<i> tag)` preterminals.
    pub tree: ParseTree,
    /// Countable spans of the derivation.
    pub brackets: BTreeSet<Span>,
    pub log_prob: T,
}

/// Best derivation rooted at `X0`, restricted to `mask` when given.
pub fn viterbi_parse<T: Real>(g: &Pcfg<T>, s: &Sentence, mask: Option<&ConstraintMask>) -> Result<ViterbiParse<T>> {
    let tags = g.encode(s)?;
    let n = tags.len();
    let unconstrained;
    let mask = match mask {
        Some(m) if m.len() != n => return Err(Error::LengthMismatch { left: n, right: m.len() }),
        Some(m) => m,
        None => {
            unconstrained = ConstraintMask::unconstrained(n);
            &unconstrained
        }
    };
    let chart = ViterbiChart::build(g, &tags, mask);
    let log_prob = chart.best_log_prob(0, 0, n);
    if log_prob == T::neg_infinity() {
        return Err(Error::NoParse);
    }
    let mut spans = BTreeSet::new();
    let tree = chart.tree(g, &tags, 0, 0, n, &mut spans);
    let brackets = spans.into_iter().filter(|s| s.is_countable(n)).collect();
    Ok(ViterbiParse { tree, brackets, log_prob })
}

/// Parse dump line: tags, a tab, then the `;`-separated spans.
pub fn parse_dump_line(sentence: &Sentence, brackets: &BTreeSet<Span>) -> String {
    format!("{sentence}\t{}", format_spans(brackets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::G1;
    use crate::inside_outside::inside;
    use proptest::prelude::*;

    fn g1() -> Pcfg<f64> {
        Pcfg::from_text(G1).unwrap()
    }

    fn a(n: usize) -> Sentence {
        Sentence::new(vec!["a".to_string(); n]).unwrap()
    }

    #[test]
    fn two_tokens_have_no_countable_brackets() {
        let p = viterbi_parse(&g1(), &a(2), None).unwrap();
        assert!(p.brackets.is_empty());
        assert!((p.log_prob - 0.144f64.ln()).abs() < 1e-12);
        assert_eq!(p.tree.to_string(), "(X0 (X0 a) (X0 a))");
    }

    #[test]
    fn tie_prefers_left_branching() {
        let p = viterbi_parse(&g1(), &a(3), None).unwrap();
        assert_eq!(p.brackets, [Span::new(0, 2)].into());
        assert!((p.log_prob.exp() - 0.4f64.powi(2) * 0.6f64.powi(3)).abs() < 1e-15);
    }

    #[test]
    fn mask_forces_right_branching() {
        let m = ConstraintMask::from_brackets(3, &[Span::new(1, 3)]).unwrap();
        let p = viterbi_parse(&g1(), &a(3), Some(&m)).unwrap();
        assert_eq!(p.brackets, [Span::new(1, 3)].into());
    }

    #[test]
    fn one_token() {
        let p = viterbi_parse(&g1(), &a(1), None).unwrap();
        assert!(p.brackets.is_empty());
        assert_eq!(p.tree.to_string(), "(X0 a)");
    }

    #[test]
    fn no_parse_error() {
        let g: Pcfg<f64> = Pcfg::from_text("pcfg 2\ntags a\nB 0 1 1 1\nL 1 a 1\n").unwrap();
        assert!(matches!(viterbi_parse(&g, &a(3), None), Err(Error::NoParse)));
    }

    #[test]
    fn dump_line() {
        let line = parse_dump_line(&a(3), &[Span::new(0, 2)].into());
        assert_eq!(line, "a a a\t(0,2)");
    }

    proptest! {
        #[test]
        fn viterbi_bounded_by_inside_and_mask_respected(seed in any::<u64>(), n in 1usize..8, nt in 1usize..4, cut in 1usize..7) {
            let g = Pcfg::<f64>::init_dense_random(nt, ["a", "b"], seed).unwrap();
            let tags: Vec<&str> = (0..n).map(|i| if (seed >> (i + 3)) & 1 == 1 { "a" } else { "b" }).collect();
            let s = Sentence::from_strs(&tags).unwrap();
            let brackets: Vec<Span> = if cut < n { vec![Span::new(0, cut)] } else { vec![] };
            let m = ConstraintMask::from_brackets(n, &brackets).unwrap();
            let p = viterbi_parse(&g, &s, Some(&m)).unwrap();
            let (_, ll) = inside(&g, &s, &m).unwrap();
            prop_assert!(p.log_prob <= ll + 1e-12);
            prop_assert!(p.brackets.iter().all(|b| m.allowed(b.start, b.end)));
            let again = viterbi_parse(&g, &s, Some(&m)).unwrap();
            prop_assert_eq!(&again.tree, &p.tree);
            // A derivation's probability is the product of its rules.
            let mut lp = 0.0;
            rule_log_prob(&g, &p.tree, &mut lp);
            prop_assert!((lp - p.log_prob).abs() < 1e-9);
        }
    }

    fn rule_log_prob(g: &Pcfg<f64>, t: &ParseTree, acc: &mut f64) {
        let x: usize = t.label()[1..].parse().unwrap();
        if t.is_preterminal() {
            *acc += g.lexical(x, g.tag_id(t.children()[0].token().unwrap()).unwrap()).ln();
            return;
        }
        let y: usize = t.children()[0].label()[1..].parse().unwrap();
        let z: usize = t.children()[1].label()[1..].parse().unwrap();
        *acc += g.binary(x, y, z).ln();
        rule_log_prob(g, &t.children()[0], acc);
        rule_log_prob(g, &t.children()[1], acc);
    }

    #[test]
    fn unique_parse_matches_inside_exactly() {
        let g = g1();
        let s = a(4);
        let gold = [Span::new(0, 2), Span::new(2, 4)];
        let m = ConstraintMask::from_brackets(4, &gold).unwrap();
        let p = viterbi_parse(&g, &s, Some(&m)).unwrap();
        let (_, ll) = inside(&g, &s, &m).unwrap();
        assert!((p.log_prob - ll).abs() < 1e-12);
    }
}
