use std::collections::BTreeSet;

use crate::annotation::Annotation;
use crate::error::{Error, Result};
use crate::treebank::Span;

/// Which spans of an `n`-token sentence a derivation may use.
///
/// A span is admissible iff it crosses none of the annotation's brackets, so
/// single tokens and the whole sentence are always admissible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintMask {
    n: usize,
    allowed: Vec<bool>,
}

impl ConstraintMask {
    pub fn unconstrained(n: usize) -> Self {
        ConstraintMask { n, allowed: vec![true; (n + 1) * (n + 1)] }
    }

    pub fn from_brackets<'a>(n: usize, brackets: impl IntoIterator<Item = &'a Span>) -> Result<Self> {
        let brackets: BTreeSet<Span> = brackets.into_iter().copied().collect();
        if let Some(&span) = brackets.iter().find(|s| s.end > n) {
            return Err(Error::SpanOutOfRange { span, len: n });
        }
        let mut mask = ConstraintMask::unconstrained(n);
        // Single tokens and the full span nest with everything.
        for b in brackets.iter().filter(|b| b.width() > 1 && b.width() < n) {
            for i in 0..n {
                for j in i + 2..=n {
                    if Span::new(i, j).crosses(b) {
                        mask.allowed[i * (n + 1) + j] = false;
                    }
                }
            }
        }
        Ok(mask)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `start < end <= n` is assumed.
    #[inline]
    pub fn allowed(&self, start: usize, end: usize) -> bool {
        self.allowed[start * (self.n + 1) + end]
    }

    pub fn disallowed_spans(&self) -> Vec<Span> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..=self.n {
                if !self.allowed(i, j) {
                    out.push(Span::new(i, j));
                }
            }
        }
        out
    }
}

pub fn build_mask(n: usize, annotation: &Annotation) -> Result<ConstraintMask> {
    ConstraintMask::from_brackets(n, annotation.brackets())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::EXAMPLE_PLAIN;
    use crate::treebank::{parse_bracketed, tree_brackets};

    #[test]
    fn single_bracket_on_three_tokens() {
        let m = ConstraintMask::from_brackets(3, &[Span::new(0, 2)]).unwrap();
        assert_eq!(m.disallowed_spans(), vec![Span::new(1, 3)]);
    }

    #[test]
    fn no_brackets_allows_all() {
        let m = ConstraintMask::from_brackets(3, &[]).unwrap();
        assert!(m.disallowed_spans().is_empty());
    }

    #[test]
    fn example_tree_brackets() {
        let t = parse_bracketed(EXAMPLE_PLAIN).unwrap();
        let gold = tree_brackets(&t, false);
        let m = ConstraintMask::from_brackets(11, &gold).unwrap();
        assert!(gold.iter().all(|s| m.allowed(s.start, s.end)));
        assert!(!m.allowed(3, 7));
        assert!(m.allowed(0, 11));
        assert!((0..11).all(|i| m.allowed(i, i + 1)));
    }

    #[test]
    fn out_of_range_bracket() {
        let err = ConstraintMask::from_brackets(3, &[Span::new(1, 4)]);
        assert!(matches!(err, Err(Error::SpanOutOfRange { len: 3, .. })));
    }
}
