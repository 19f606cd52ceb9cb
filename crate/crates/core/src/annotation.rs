//! Constituent categories and sparse bracket annotations.
//!
//! Five categories are distinguished on phrasal nodes of a stripped tree:
//!
//! * `BaseP`: every child is a preterminal.
//! * `NotBaseP`: the complement of `BaseP`.
//! * `HighP`: no child is a preterminal. Such a node subsumes no word
//!   directly, which makes it a subset of `NotBaseP`.
//! * `AllNP`: the label is `NP`.
//! * `BaseNP`: an `NP` with no `NP` below it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::treebank::{normalize_label, pos_sequence, tree_brackets, Corpus, ParseTree, Sentence, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstituentClass {
    HighP,
    BaseNP,
    BaseP,
    AllNP,
    NotBaseP,
}

impl ConstituentClass {
    pub const ALL: [ConstituentClass; 5] = [
        ConstituentClass::HighP,
        ConstituentClass::BaseNP,
        ConstituentClass::BaseP,
        ConstituentClass::AllNP,
        ConstituentClass::NotBaseP,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConstituentClass::HighP => "HighP",
            ConstituentClass::BaseNP => "BaseNP",
            ConstituentClass::BaseP => "BaseP",
            ConstituentClass::AllNP => "AllNP",
            ConstituentClass::NotBaseP => "NotBaseP",
        }
    }
}

impl fmt::Display for ConstituentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConstituentClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ConstituentClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Spec(format!("unknown constituent class `{s}`")))
    }
}

fn is_np(node: &ParseTree) -> bool {
    normalize_label(node.label()) == "NP"
}

/// All categories that hold for a phrasal node.
pub fn classify_node(node: &ParseTree) -> Result<BTreeSet<ConstituentClass>> {
    if node.is_leaf() {
        return Err(Error::NotPhrasal("leaf"));
    }
    if node.is_preterminal() {
        return Err(Error::NotPhrasal("preterminal"));
    }
    let mut out = BTreeSet::new();
    let lexical = node.children().iter().filter(|c| c.is_preterminal()).count();
    if lexical == node.children().len() {
        out.insert(ConstituentClass::BaseP);
    } else {
        out.insert(ConstituentClass::NotBaseP);
    }
    if lexical == 0 {
        out.insert(ConstituentClass::HighP);
    }
    if is_np(node) {
        out.insert(ConstituentClass::AllNP);
        let mut embedded = false;
        for child in node.children() {
            child.visit(&mut |d| embedded |= !d.is_leaf() && is_np(d));
        }
        if !embedded {
            out.insert(ConstituentClass::BaseNP);
        }
    }
    Ok(out)
}

/// Where an annotation's brackets came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Supervision {
    Class(ConstituentClass),
    /// Random fraction of the countable brackets.
    Fraction(f64),
    /// Read from an annotation file.
    Given,
}

impl fmt::Display for Supervision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Supervision::Class(c) => write!(f, "{c}"),
            Supervision::Fraction(x) => write!(f, "fraction={x}"),
            Supervision::Given => f.write_str("given"),
        }
    }
}

/// A tag sequence together with the unlabeled brackets that constrain it.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    sentence: Sentence,
    brackets: BTreeSet<Span>,
    source: Supervision,
}

impl Annotation {
    /// Fails if a bracket extends past the sentence or two brackets cross.
    pub fn new(sentence: Sentence, brackets: BTreeSet<Span>, source: Supervision) -> Result<Self> {
        let n = sentence.len();
        if let Some(&span) = brackets.iter().find(|s| s.end > n) {
            return Err(Error::SpanOutOfRange { span, len: n });
        }
        let v: Vec<&Span> = brackets.iter().collect();
        for (i, a) in v.iter().enumerate() {
            if let Some(b) = v[i + 1..].iter().find(|b| a.crosses(b)) {
                return Err(Error::Structure(format!("brackets {a} and {b} cross")));
            }
        }
        Ok(Annotation { sentence, brackets, source })
    }

    /// An annotation with no brackets, i.e. a raw sentence.
    pub fn unbracketed(sentence: Sentence) -> Self {
        Annotation { sentence, brackets: BTreeSet::new(), source: Supervision::Fraction(0.0) }
    }

    /// Every countable bracket of the gold tree.
    pub fn full(tree: &ParseTree) -> Result<Self> {
        Ok(Annotation {
            sentence: pos_sequence(tree)?,
            brackets: tree_brackets(tree, true),
            source: Supervision::Fraction(1.0),
        })
    }

    pub fn sentence(&self) -> &Sentence {
        &self.sentence
    }

    pub fn brackets(&self) -> &BTreeSet<Span> {
        &self.brackets
    }

    pub fn source(&self) -> Supervision {
        self.source
    }

    /// Brackets other than the whole-sentence span and single tokens.
    pub fn countable_brackets(&self) -> impl Iterator<Item = &Span> {
        let n = self.sentence.len();
        self.brackets.iter().filter(move |s| s.is_countable(n))
    }

    pub fn countable_count(&self) -> usize {
        self.countable_brackets().count()
    }

    /// `tag tag ...<TAB>(i,j);(k,l);...`
    pub fn to_line(&self) -> String {
        format!("{}\t{}", self.sentence, format_spans(&self.brackets))
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let bad = |message: String| Error::AnnotationFormat { line: 0, message };
        let (tags, spans) = line.split_once('\t').ok_or_else(|| bad("missing tab separator".into()))?;
        let sentence = Sentence::new(tags.split_whitespace().map(str::to_string).collect())?;
        let brackets = parse_spans(spans).map_err(bad)?;
        Annotation::new(sentence, brackets, Supervision::Given)
    }
}

/// Semicolon-separated `(i,j)` list.
pub fn format_spans<'a>(spans: impl IntoIterator<Item = &'a Span>) -> String {
    spans.into_iter().map(Span::to_string).collect::<Vec<_>>().join(";")
}

pub fn parse_spans(text: &str) -> std::result::Result<BTreeSet<Span>, String> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let inner = item
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| format!("malformed span `{item}`"))?;
            let (a, b) = inner.split_once(',').ok_or_else(|| format!("malformed span `{item}`"))?;
            let a: usize = a.trim().parse().map_err(|_| format!("bad index in `{item}`"))?;
            let b: usize = b.trim().parse().map_err(|_| format!("bad index in `{item}`"))?;
            Span::try_new(a, b).ok_or_else(|| format!("empty span `{item}`"))
        })
        .collect()
}

pub fn write_annotations(annotations: &[Annotation]) -> String {
    annotations.iter().map(|a| a.to_line() + "\n").collect()
}

/// Blank lines and `#` comments are skipped.
pub fn read_annotations(text: &str) -> Result<Vec<Annotation>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            Annotation::from_line(l).map_err(|e| match e {
                Error::AnnotationFormat { message, .. } => Error::AnnotationFormat { line: i + 1, message },
                other => Error::AnnotationFormat { line: i + 1, message: other.to_string() },
            })
        })
        .collect()
}

/// Spans of exactly the phrasal nodes of `class`.
///
/// The whole-sentence span is kept when the root qualifies; it never counts
/// as supervision (see [`Annotation::countable_brackets`]).
pub fn extract(tree: &ParseTree, class: ConstituentClass) -> Result<Annotation> {
    let sentence = pos_sequence(tree)?;
    let mut brackets = BTreeSet::new();
    for node in tree.phrasal_nodes() {
        if classify_node(node)?.contains(&class) {
            brackets.insert(node.span());
        }
    }
    Ok(Annotation { sentence, brackets, source: Supervision::Class(class) })
}

/// `round(fraction * C)` countable brackets chosen uniformly without
/// replacement, rounding halves up.
pub fn sample_brackets(tree: &ParseTree, fraction: f64, seed: u64) -> Result<Annotation> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Spec(format!("fraction {fraction} outside [0,1]")));
    }
    let sentence = pos_sequence(tree)?;
    let candidates: Vec<Span> = tree_brackets(tree, true).into_iter().collect();
    let k = ((fraction * candidates.len() as f64) + 0.5).floor() as usize;
    let k = k.min(candidates.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let brackets = rand::seq::index::sample(&mut rng, candidates.len(), k).into_iter().map(|i| candidates[i]).collect();
    Ok(Annotation { sentence, brackets, source: Supervision::Fraction(fraction) })
}

/// Per-category share of the countable brackets of a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryStats {
    pub total: usize,
    pub counts: BTreeMap<ConstituentClass, usize>,
}

impl CategoryStats {
    pub fn percent(&self, class: ConstituentClass) -> f64 {
        100.0 * self.counts.get(&class).copied().unwrap_or(0) as f64 / self.total as f64
    }
}

impl fmt::Display for CategoryStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for class in ConstituentClass::ALL {
            writeln!(f, "{class} {:.2}", self.percent(class))?;
        }
        Ok(())
    }
}

/// Distinct spans are counted once per tree.
pub fn corpus_category_stats(corpus: &Corpus) -> Result<CategoryStats> {
    let mut total = 0;
    let mut counts: BTreeMap<ConstituentClass, usize> = ConstituentClass::ALL.iter().map(|&c| (c, 0)).collect();
    for tree in corpus.trees() {
        total += tree_brackets(tree, true).len();
        for class in ConstituentClass::ALL {
            *counts.get_mut(&class).expect("all classes present") += extract(tree, class)?.countable_count();
        }
    }
    if total == 0 {
        return Err(Error::NoCountableBrackets);
    }
    Ok(CategoryStats { total, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{EXAMPLE_PLAIN, EXAMPLE_TREEBANK};
    use crate::treebank::{parse_bracketed, strip_empties};

    fn spans(v: &[(usize, usize)]) -> BTreeSet<Span> {
        v.iter().map(|&(a, b)| Span::new(a, b)).collect()
    }

    fn treebank_example() -> ParseTree {
        strip_empties(&parse_bracketed(EXAMPLE_TREEBANK).unwrap()).unwrap()
    }

    fn find<'a>(tree: &'a ParseTree, label: &str, span: (usize, usize)) -> &'a ParseTree {
        tree.phrasal_nodes()
            .into_iter()
            .find(|n| n.label() == label && n.span() == Span::new(span.0, span.1))
            .expect("node present")
    }

    #[test]
    fn classify_example_nodes() {
        use ConstituentClass::*;
        let t = treebank_example();
        let got = |label, span| classify_node(find(&t, label, span)).unwrap();
        assert_eq!(got("NP", (4, 6)), [BaseP, AllNP, BaseNP].into());
        assert_eq!(got("NP", (4, 11)), [HighP, NotBaseP, AllNP].into());
        assert_eq!(got("NP", (7, 11)), [NotBaseP, AllNP, BaseNP].into());
        assert_eq!(got("VP", (1, 11)), [NotBaseP].into());
        assert_eq!(got("QP", (7, 10)), [BaseP].into());
    }

    #[test]
    fn classify_rejects_leaves_and_preterminals() {
        let t = parse_bracketed("(NP (DT the) (NN flight))").unwrap();
        assert!(matches!(classify_node(&t.children()[0]), Err(Error::NotPhrasal("preterminal"))));
        assert!(matches!(classify_node(&t.children()[0].children()[0]), Err(Error::NotPhrasal("leaf"))));
    }

    #[test]
    fn example_rows() {
        use ConstituentClass::*;
        let t = treebank_example();
        let row = |c| extract(&t, c).unwrap().brackets().clone();
        assert_eq!(row(HighP), spans(&[(0, 11), (2, 11), (4, 11)]));
        assert_eq!(row(BaseNP), spans(&[(0, 1), (4, 6), (7, 11)]));
        assert_eq!(row(BaseP), spans(&[(0, 1), (4, 6), (7, 10)]));
        assert_eq!(row(AllNP), spans(&[(0, 1), (4, 6), (4, 11), (7, 11)]));
        assert_eq!(row(NotBaseP), spans(&[(0, 11), (1, 11), (2, 11), (3, 11), (4, 11), (6, 11), (7, 11)]));
    }

    #[test]
    fn plain_rendering_loses_one_high_phrase() {
        let t = parse_bracketed(EXAMPLE_PLAIN).unwrap();
        let high = extract(&t, ConstituentClass::HighP).unwrap();
        assert_eq!(high.brackets(), &spans(&[(0, 11), (4, 11)]));
        let not_base = extract(&t, ConstituentClass::NotBaseP).unwrap();
        assert_eq!(not_base.brackets(), &spans(&[(0, 11), (1, 11), (2, 11), (3, 11), (4, 11), (6, 11), (7, 11)]));
    }

    #[test]
    fn sample_full_empty_and_half() {
        let t = parse_bracketed(EXAMPLE_PLAIN).unwrap();
        let full = sample_brackets(&t, 1.0, 1).unwrap();
        assert_eq!(full.brackets(), &tree_brackets(&t, true));
        assert_eq!(full.brackets().len(), 8);
        assert!(sample_brackets(&t, 0.0, 1).unwrap().brackets().is_empty());
        let a = sample_brackets(&t, 0.5, 42).unwrap();
        let b = sample_brackets(&t, 0.5, 42).unwrap();
        assert_eq!(a.brackets().len(), 4);
        assert_eq!(a, b);
        assert!(sample_brackets(&t, 1.5, 0).is_err());
    }

    #[test]
    fn sample_rounds_half_up() {
        // 3 countable brackets: 0.5 * 3 = 1.5 -> 2.
        let t = parse_bracketed("(S (A (B (x x) (y y)) (z z)) (C (w w) (v v)) (u u))").unwrap();
        assert_eq!(tree_brackets(&t, true).len(), 3);
        assert_eq!(sample_brackets(&t, 0.5, 0).unwrap().brackets().len(), 2);
        assert_eq!(sample_brackets(&t, 0.1, 0).unwrap().brackets().len(), 0);
    }

    #[test]
    fn stats_single_example_tree() {
        let corpus = Corpus::from_trees([parse_bracketed(EXAMPLE_PLAIN).unwrap()]).unwrap();
        let stats = corpus_category_stats(&corpus).unwrap();
        assert_eq!(stats.total, 8);
        assert_eq!(stats.percent(ConstituentClass::NotBaseP), 75.0);
        assert_eq!(stats.percent(ConstituentClass::BaseP), 25.0);
        let text = stats.to_string();
        assert!(text.contains("NotBaseP 75.00\n"), "{text}");
    }

    #[test]
    fn stats_without_brackets_is_error() {
        let corpus = Corpus::from_trees([parse_bracketed("(S (NP (PRP I)))").unwrap()]).unwrap();
        assert!(matches!(corpus_category_stats(&corpus), Err(Error::NoCountableBrackets)));
    }

    #[test]
    fn export_line_round_trip() {
        let t = parse_bracketed(EXAMPLE_PLAIN).unwrap();
        let a = extract(&t, ConstituentClass::BaseP).unwrap();
        let line = a.to_line();
        assert_eq!(line, "PRP VBP TO VB DT NN IN IN JJS CD NN\t(0,1);(4,6);(7,10)");
        let back = Annotation::from_line(&line).unwrap();
        assert_eq!(back.brackets(), a.brackets());
        assert_eq!(back.sentence(), a.sentence());
        let bare = Annotation::from_line("a b\t").unwrap();
        assert!(bare.brackets().is_empty());
    }

    #[test]
    fn annotation_rejects_bad_spans() {
        let sent = Sentence::from_strs(&["a", "b", "c"]).unwrap();
        let err = Annotation::new(sent.clone(), spans(&[(1, 4)]), Supervision::Given);
        assert!(matches!(err, Err(Error::SpanOutOfRange { .. })));
        let err = Annotation::new(sent, spans(&[(0, 2), (1, 3)]), Supervision::Given);
        assert!(matches!(err, Err(Error::Structure(_))));
        assert!(matches!(read_annotations("a b\t(0,1)\na b c\t(0,9)\n"), Err(Error::AnnotationFormat { line: 2, .. })));
    }
}
