//! Bracketed treebank reading, empty-element stripping, and corpus splits.
//!
//! Trees use the Penn `(LABEL child ...)` S-expression subset. Leaves are
//! either `(POS word)` pairs or bare tokens. Functional suffixes are dropped
//! from labels (`NP-SBJ-1` becomes `NP`); labels starting with `-`, such as
//! `-NONE-` or `-LRB-`, are kept verbatim.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Preterminal label marking an empty element (trace, null subject, ...).
pub const EMPTY_ELEMENT: &str = "-NONE-";

/// Half-open token interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    /// Panics if `start >= end`.
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start < end, "span ({start},{end}) is empty");
        Span { start, end }
    }

    pub fn try_new(start: usize, end: usize) -> Option<Self> {
        (start < end).then_some(Span { start, end })
    }

    pub fn width(&self) -> usize {
        self.end - self.start
    }

    /// Overlap without nesting. Adjacent and nested spans do not cross.
    pub fn crosses(&self, other: &Span) -> bool {
        (self.start < other.start && other.start < self.end && self.end < other.end)
            || (other.start < self.start && self.start < other.end && other.end < self.end)
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    /// Neither the whole sentence nor a single token.
    pub fn is_countable(&self, sentence_len: usize) -> bool {
        self.width() > 1 && !(self.start == 0 && self.end == sentence_len)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.start, self.end)
    }
}

/// A constituent tree node.
///
/// A node is a leaf (it carries a token and no children) or an interior node
/// with at least one child. Spans are kept consistent by the constructors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTree {
    label: String,
    children: Vec<ParseTree>,
    token: Option<String>,
    span: Span,
}

impl ParseTree {
    pub fn leaf(token: impl Into<String>) -> Self {
        ParseTree { label: String::new(), children: Vec::new(), token: Some(token.into()), span: Span::new(0, 1) }
    }

    /// Builds an interior node and re-indexes the spans of the whole subtree
    /// so that it starts at token 0.
    pub fn node(label: impl Into<String>, children: Vec<ParseTree>) -> Result<Self> {
        if children.is_empty() {
            return Err(Error::Structure("interior node without children".into()));
        }
        let mut tree = ParseTree { label: label.into(), children, token: None, span: Span::new(0, 1) };
        tree.reindex(0);
        Ok(tree)
    }

    /// Convenience for `(POS token)`.
    pub fn preterminal(tag: impl Into<String>, token: impl Into<String>) -> Self {
        ParseTree::node(tag, vec![ParseTree::leaf(token)]).expect("one child")
    }

    fn reindex(&mut self, start: usize) -> usize {
        if self.token.is_some() {
            self.span = Span::new(start, start + 1);
            return start + 1;
        }
        let mut end = start;
        for child in &mut self.children {
            end = child.reindex(end);
        }
        self.span = Span::new(start, end);
        end
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn children(&self) -> &[ParseTree] {
        &self.children
    }

    pub fn token(&self) -> Option<&str> {
        self.token.as_deref()
    }

    pub fn span(&self) -> Span {
        self.span
    }

    pub fn is_leaf(&self) -> bool {
        self.token.is_some()
    }

    /// Exactly one child, and that child is a leaf.
    pub fn is_preterminal(&self) -> bool {
        self.children.len() == 1 && self.children[0].is_leaf()
    }

    /// Neither a leaf nor a preterminal.
    pub fn is_phrasal(&self) -> bool {
        !self.is_leaf() && !self.is_preterminal()
    }

    /// Number of tokens below this node.
    pub fn yield_len(&self) -> usize {
        self.span.width()
    }

    pub fn tokens(&self) -> Vec<&str> {
        let mut out = Vec::with_capacity(self.yield_len());
        self.visit(&mut |n| {
            if let Some(t) = n.token() {
                out.push(t);
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a ParseTree)) {
        f(self);
        for c in &self.children {
            c.visit(f);
        }
    }

    /// Pre-order list of phrasal nodes.
    pub fn phrasal_nodes(&self) -> Vec<&ParseTree> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if n.is_phrasal() {
                out.push(n);
            }
        });
        out
    }

    pub(crate) fn relabel(&mut self, f: &mut impl FnMut(&str) -> Option<String>) {
        if self.is_phrasal() {
            if let Some(l) = f(&self.label) {
                self.label = l;
            }
        }
        for c in &mut self.children {
            c.relabel(f);
        }
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(t) = &self.token {
            return f.write_str(t);
        }
        f.write_str("(")?;
        f.write_str(&self.label)?;
        for (i, c) in self.children.iter().enumerate() {
            if i > 0 || !self.label.is_empty() {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// Drops functional-tag suffixes. Labels beginning with `-` are reserved
/// (`-NONE-`, `-LRB-`) and returned unchanged.
pub fn normalize_label(raw: &str) -> &str {
    if raw.starts_with('-') {
        return raw;
    }
    match raw.find('-') {
        Some(i) => &raw[..i],
        None => raw,
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Dialect {
    Penn,
    Unlabeled,
}

#[derive(Debug, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

struct Lexer<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Option<(usize, Tok<'a>)> {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= bytes.len() {
            return None;
        }
        let start = self.pos;
        match bytes[start] {
            b'(' => {
                self.pos += 1;
                Some((start, Tok::Open))
            }
            b')' => {
                self.pos += 1;
                Some((start, Tok::Close))
            }
            _ => {
                while self.pos < bytes.len()
                    && !bytes[self.pos].is_ascii_whitespace()
                    && bytes[self.pos] != b'('
                    && bytes[self.pos] != b')'
                {
                    self.pos += 1;
                }
                Some((start, Tok::Atom(&self.text[start..self.pos])))
            }
        }
    }

    fn peek(&mut self) -> Option<(usize, Tok<'a>)> {
        let save = self.pos;
        let t = self.next();
        self.pos = save;
        t
    }
}

fn syntax(index: usize, message: impl Into<String>) -> Error {
    Error::Syntax { offset: index + 1, message: message.into() }
}

fn parse_node(lx: &mut Lexer<'_>, open_at: usize, dialect: Dialect) -> Result<ParseTree> {
    let mut label = String::new();
    if dialect == Dialect::Penn {
        if let Some((_, Tok::Atom(a))) = lx.peek() {
            lx.next();
            label = normalize_label(a).to_string();
        }
    }
    let mut children = Vec::new();
    loop {
        match lx.next() {
            None => return Err(syntax(lx.text.len(), "unbalanced parentheses")),
            Some((_, Tok::Open)) => {
                let at = lx.pos - 1;
                children.push(parse_node(lx, at, dialect)?);
            }
            Some((_, Tok::Atom(a))) => children.push(ParseTree::leaf(a)),
            Some((_, Tok::Close)) => break,
        }
    }
    if children.is_empty() {
        return Err(syntax(open_at, "empty constituent"));
    }
    Ok(ParseTree { label, children, token: None, span: Span::new(0, 1) })
}

fn parse_with(text: &str, dialect: Dialect) -> Result<ParseTree> {
    let mut lx = Lexer { text, pos: 0 };
    let mut tree = match lx.next() {
        Some((at, Tok::Open)) => parse_node(&mut lx, at, dialect)?,
        Some((at, _)) => return Err(syntax(at, "expected `(`")),
        None => return Err(syntax(0, "empty input")),
    };
    if let Some((at, tok)) = lx.next() {
        let msg = if tok == Tok::Close { "unbalanced parentheses" } else { "trailing input after tree" };
        return Err(syntax(at, msg));
    }
    // Penn files commonly wrap each tree as `( (S ...) )`.
    if dialect == Dialect::Penn && tree.label.is_empty() && tree.children.len() == 1 && !tree.children[0].is_leaf() {
        tree = tree.children.pop().expect("one child");
    }
    tree.reindex(0);
    Ok(tree)
}

/// Parses one Penn-style bracketed tree.
pub fn parse_bracketed(text: &str) -> Result<ParseTree> {
    parse_with(text, Dialect::Penn)
}

/// Parses an unlabeled bracketing such as `((I) (want (to go)))`, where every
/// atom is a token and every parenthesis group is an unlabeled constituent.
pub fn parse_unlabeled(text: &str) -> Result<ParseTree> {
    parse_with(text, Dialect::Unlabeled)
}

/// Removes `-NONE-` preterminals and any interior node left without children.
pub fn strip_empties(tree: &ParseTree) -> Result<ParseTree> {
    fn strip(node: &ParseTree) -> Option<ParseTree> {
        if node.is_leaf() {
            return Some(node.clone());
        }
        if node.is_preterminal() && node.label == EMPTY_ELEMENT {
            return None;
        }
        let children: Vec<ParseTree> = node.children.iter().filter_map(strip).collect();
        if children.is_empty() {
            return None;
        }
        Some(ParseTree { label: node.label.clone(), children, token: None, span: node.span })
    }
    let mut out = strip(tree).ok_or(Error::EmptySentence)?;
    out.reindex(0);
    Ok(out)
}

/// Ordered POS-tag sequence standing in for the words of a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sentence {
    tags: Vec<String>,
}

impl Sentence {
    pub fn new(tags: Vec<String>) -> Result<Self> {
        if tags.is_empty() {
            return Err(Error::EmptySentence);
        }
        Ok(Sentence { tags })
    }

    pub fn from_strs(tags: &[&str]) -> Result<Self> {
        Sentence::new(tags.iter().map(|s| s.to_string()).collect())
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tags.join(" "))
    }
}

/// Reads off the preterminal labels left to right.
pub fn pos_sequence(tree: &ParseTree) -> Result<Sentence> {
    fn walk(node: &ParseTree, out: &mut Vec<String>) -> Result<()> {
        if node.is_leaf() {
            return Err(Error::Structure(format!(
                "leaf `{}` has no preterminal parent",
                node.token.as_deref().unwrap_or_default()
            )));
        }
        if node.is_preterminal() {
            if node.label.is_empty() {
                return Err(Error::Structure("preterminal without a tag".into()));
            }
            out.push(node.label.clone());
            return Ok(());
        }
        for c in &node.children {
            walk(c, out)?;
        }
        Ok(())
    }
    let mut tags = Vec::with_capacity(tree.yield_len());
    walk(tree, &mut tags)?;
    Sentence::new(tags)
}

/// Distinct spans of phrasal nodes. With `countable_only`, the whole-sentence
/// span and width-1 spans are dropped.
pub fn tree_brackets(tree: &ParseTree, countable_only: bool) -> BTreeSet<Span> {
    let n = tree.yield_len();
    tree.phrasal_nodes().into_iter().map(|node| node.span).filter(|s| !countable_only || s.is_countable(n)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub sentence: Sentence,
    pub tree: ParseTree,
}

/// Tagged sentences paired with their stripped gold trees.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    entries: Vec<CorpusEntry>,
    tag_alphabet: BTreeSet<String>,
}

impl Corpus {
    /// Strips empty elements and reads the tag sequence of every tree.
    pub fn from_trees(trees: impl IntoIterator<Item = ParseTree>) -> Result<Self> {
        let entries = trees
            .into_iter()
            .map(|t| {
                let tree = strip_empties(&t)?;
                let sentence = pos_sequence(&tree)?;
                Ok(CorpusEntry { sentence, tree })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Corpus::from_entries(entries))
    }

    pub fn from_entries(entries: Vec<CorpusEntry>) -> Self {
        let tag_alphabet = entries.iter().flat_map(|e| e.sentence.tags().iter().cloned()).collect();
        Corpus { entries, tag_alphabet }
    }

    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn tag_alphabet(&self) -> &BTreeSet<String> {
        &self.tag_alphabet
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn trees(&self) -> impl Iterator<Item = &ParseTree> {
        self.entries.iter().map(|e| &e.tree)
    }

    /// One tree per line.
    pub fn to_treebank_string(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            s.push_str(&e.tree.to_string());
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_treebank_string()).map_err(|e| Error::io(path, e))
    }
}

/// Reads every tree in `text`. Blank lines and lines starting with `#` are
/// skipped; a tree may span several lines.
pub fn read_trees(text: &str) -> Result<Vec<ParseTree>> {
    let mut trees = Vec::new();
    let mut buf = String::new();
    let mut depth: i64 = 0;
    let mut first_line = 0;
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if buf.is_empty() && (trimmed.is_empty() || trimmed.starts_with('#')) {
            continue;
        }
        if buf.is_empty() {
            first_line = lineno + 1;
        }
        buf.push_str(line);
        buf.push('\n');
        for b in line.bytes() {
            match b {
                b'(' => depth += 1,
                b')' => depth -= 1,
                _ => {}
            }
        }
        if depth <= 0 {
            let tree = parse_bracketed(&buf).map_err(|e| at_line(e, first_line))?;
            trees.push(tree);
            buf.clear();
            depth = 0;
        }
    }
    if !buf.is_empty() {
        return Err(at_line(parse_bracketed(&buf).expect_err("unbalanced buffer"), first_line));
    }
    Ok(trees)
}

fn at_line(e: Error, line: usize) -> Error {
    match e {
        Error::Syntax { offset, message } => Error::Syntax { offset, message: format!("line {line}: {message}") },
        other => other,
    }
}

pub fn read_treebank(path: &Path) -> Result<Corpus> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Corpus::from_trees(read_trees(&text)?)
}

/// A manifest lists tree files, one path per line, relative to the manifest.
pub fn read_manifest(path: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(|l| base.join(l)).collect())
}

/// Concatenates the corpora named by a manifest.
pub fn read_manifest_corpus(path: &Path) -> Result<Corpus> {
    let mut entries = Vec::new();
    for p in read_manifest(path)? {
        entries.extend(read_treebank(&p)?.entries);
    }
    Ok(Corpus::from_entries(entries))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub heldout: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.train + self.heldout + self.test
    }
}

#[derive(Debug, Clone)]
pub struct CorpusSplit {
    pub train: Corpus,
    pub heldout: Corpus,
    pub test: Corpus,
}

/// Random disjoint train/held-out/test partition.
///
/// Entries are put in a canonical order (by rendered tree) before shuffling,
/// so the partition depends only on the seed and the corpus contents, not on
/// the order entries were read in. Unselected entries are dropped.
pub fn split_corpus(corpus: &Corpus, seed: u64, sizes: SplitSizes) -> Result<CorpusSplit> {
    if sizes.total() > corpus.len() {
        return Err(Error::CorpusTooSmall { requested: sizes.total(), available: corpus.len() });
    }
    let rendered: Vec<String> = corpus.entries.iter().map(|e| e.tree.to_string()).collect();
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.sort_by(|&a, &b| rendered[a].cmp(&rendered[b]));
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let take = |idx: &[usize]| Corpus::from_entries(idx.iter().map(|&i| corpus.entries[i].clone()).collect());
    let (train, rest) = order.split_at(sizes.train);
    let (heldout, rest) = rest.split_at(sizes.heldout);
    Ok(CorpusSplit { train: take(train), heldout: take(heldout), test: take(&rest[..sizes.test]) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{EXAMPLE_PLAIN, EXAMPLE_TREEBANK};

    fn s(a: usize, b: usize) -> Span {
        Span::new(a, b)
    }

    #[test]
    fn single_leaf_tree() {
        let t = parse_bracketed("(S (NP (PRP I)))").unwrap();
        assert_eq!(t.label(), "S");
        assert_eq!(t.children().len(), 1);
        assert_eq!(t.children()[0].label(), "NP");
        assert_eq!(t.tokens(), vec!["I"]);
        assert_eq!(t.span(), s(0, 1));
    }

    #[test]
    fn example_tree_shape() {
        let t = parse_bracketed(EXAMPLE_PLAIN).unwrap();
        assert_eq!(t.span(), s(0, 11));
        assert_eq!(t.phrasal_nodes().len(), 10);
        assert_eq!(t.tokens().join(" "), "I want to take the flight with at most one stop");
    }

    #[test]
    fn unlabeled_caption_bracketing() {
        let t = parse_unlabeled("((I) (want (to (take ((the flight) (with ((at most one) stop)))))))").unwrap();
        assert_eq!(t.span(), s(0, 11));
        // Ten groups; (I) wraps a single token.
        let groups = {
            let mut n = 0;
            t.visit(&mut |x| n += usize::from(!x.is_leaf()));
            n
        };
        assert_eq!(groups, 10);
        let spans = tree_brackets(&t, false);
        let expected: BTreeSet<Span> =
            [s(0, 11), s(1, 11), s(2, 11), s(3, 11), s(4, 11), s(4, 6), s(6, 11), s(7, 11), s(7, 10)].into();
        assert_eq!(spans, expected);
    }

    #[test]
    fn unbalanced_reports_offset() {
        match parse_bracketed("(S (NP") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 7),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_bracketed("(S (NP x)))"), Err(Error::Syntax { offset: 11, .. })));
    }

    #[test]
    fn empty_constituent_is_error() {
        assert!(matches!(parse_bracketed("(S ())"), Err(Error::Syntax { offset: 4, .. })));
        assert!(matches!(parse_bracketed("(S (NP))"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_bracketed("()"), Err(Error::Syntax { offset: 1, .. })));
    }

    #[test]
    fn functional_tags_truncated() {
        assert_eq!(normalize_label("NP-SBJ-1"), "NP");
        assert_eq!(normalize_label("-NONE-"), "-NONE-");
        assert_eq!(normalize_label("-LRB-"), "-LRB-");
        assert_eq!(normalize_label("PRP$"), "PRP$");
    }

    #[test]
    fn outer_wrapper_removed() {
        let t = parse_bracketed("( (S (NP (PRP I)) (VP (VBD left))) )").unwrap();
        assert_eq!(t.label(), "S");
        assert_eq!(t.span(), s(0, 2));
    }

    #[test]
    fn strip_omitted_subject() {
        let t = parse_bracketed("(S (NP (-NONE- *)) (VP (TO to) (VP (VB take) (NP (NN flight)))))").unwrap();
        let stripped = strip_empties(&t).unwrap();
        assert_eq!(stripped.to_string(), "(S (VP (TO to) (VP (VB take) (NP (NN flight)))))");
        assert_eq!(stripped.span(), s(0, 3));
        assert_eq!(stripped.children()[0].span(), s(0, 3));
    }

    #[test]
    fn strip_is_identity_without_empties() {
        let t = parse_bracketed(EXAMPLE_PLAIN).unwrap();
        assert_eq!(strip_empties(&t).unwrap(), t);
    }

    #[test]
    fn strip_everything_is_error() {
        let t = parse_bracketed("(NP (-NONE- *))").unwrap();
        assert!(matches!(strip_empties(&t), Err(Error::EmptySentence)));
    }

    #[test]
    fn strip_reindexes_spans() {
        let t = strip_empties(&parse_bracketed(EXAMPLE_TREEBANK).unwrap()).unwrap();
        assert_eq!(t.span(), s(0, 11));
        let inner_s = &t.children()[1].children()[1];
        assert_eq!(inner_s.label(), "S");
        assert_eq!(inner_s.span(), s(2, 11));
        assert_eq!(inner_s.children().len(), 1);
    }

    #[test]
    fn example_pos_sequence() {
        let t = strip_empties(&parse_bracketed(EXAMPLE_TREEBANK).unwrap()).unwrap();
        let sent = pos_sequence(&t).unwrap();
        assert_eq!(sent.tags(), ["PRP", "VBP", "TO", "VB", "DT", "NN", "IN", "IN", "JJS", "CD", "NN"]);
        assert_eq!(pos_sequence(&parse_bracketed("(S (NP (PRP I)))").unwrap()).unwrap().tags(), ["PRP"]);
        let three = parse_bracketed("(S (A a) (B b) (C c))").unwrap();
        assert_eq!(pos_sequence(&three).unwrap().len(), 3);
    }

    #[test]
    fn bare_leaf_has_no_preterminal() {
        let t = parse_bracketed("(NP the (NN flight))").unwrap();
        assert!(matches!(pos_sequence(&t), Err(Error::Structure(_))));
    }

    #[test]
    fn example_brackets() {
        let t = parse_bracketed(EXAMPLE_PLAIN).unwrap();
        let all: BTreeSet<Span> =
            [s(0, 11), s(0, 1), s(1, 11), s(2, 11), s(3, 11), s(4, 11), s(4, 6), s(6, 11), s(7, 11), s(7, 10)].into();
        assert_eq!(tree_brackets(&t, false), all);
        let countable = tree_brackets(&t, true);
        assert_eq!(countable.len(), 8);
        assert!(!countable.contains(&s(0, 11)) && !countable.contains(&s(0, 1)));

        // The Treebank rendering has a unary S over VP at (2,11): same set.
        let tb = strip_empties(&parse_bracketed(EXAMPLE_TREEBANK).unwrap()).unwrap();
        assert_eq!(tree_brackets(&tb, false), all);
    }

    #[test]
    fn single_leaf_has_no_countable_brackets() {
        let t = parse_bracketed("(S (NP (PRP I)))").unwrap();
        assert!(tree_brackets(&t, true).is_empty());
        assert_eq!(tree_brackets(&t, false).len(), 1);
    }

    fn toy_corpus(n: usize) -> Corpus {
        let trees = (0..n).map(|i| {
            let text = format!("(S (NP (DT d{i})) (VP (VB v) (NN n{})))", i % 7);
            parse_bracketed(&text).unwrap()
        });
        Corpus::from_trees(trees).unwrap()
    }

    #[test]
    fn split_protocol_sizes() {
        let c = toy_corpus(577);
        let split = split_corpus(&c, 3, SplitSizes { train: 407, heldout: 90, test: 80 }).unwrap();
        assert_eq!((split.train.len(), split.heldout.len(), split.test.len()), (407, 90, 80));
        let key = |c: &Corpus| c.trees().map(|t| t.to_string()).collect::<BTreeSet<_>>();
        let (a, b, d) = (key(&split.train), key(&split.heldout), key(&split.test));
        assert!(a.is_disjoint(&b) && a.is_disjoint(&d) && b.is_disjoint(&d));
        assert_eq!(a.len() + b.len() + d.len(), 577);
    }

    #[test]
    fn split_is_deterministic_and_checks_size() {
        let c = toy_corpus(50);
        let sizes = SplitSizes { train: 30, heldout: 10, test: 5 };
        let x = split_corpus(&c, 9, sizes).unwrap();
        let y = split_corpus(&c, 9, sizes).unwrap();
        assert_eq!(x.train, y.train);
        assert_eq!(x.test, y.test);
        let err = split_corpus(&c, 9, SplitSizes { train: 40, heldout: 10, test: 5 });
        assert!(matches!(err, Err(Error::CorpusTooSmall { requested: 55, available: 50 })));
    }

    #[test]
    fn read_trees_multiline_and_comments() {
        let text = "# comment\n\n(S (NP (PRP I))\n   (VP (VBD left)))\n(S (NP (PRP you)))\n";
        let trees = read_trees(text).unwrap();
        assert_eq!(trees.len(), 2);
        assert_eq!(trees[0].yield_len(), 2);
        assert!(matches!(read_trees("(S (NP (PRP I))\n"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn span_basics() {
        assert!(s(1, 3).crosses(&s(2, 4)));
        assert!(!s(1, 4).crosses(&s(2, 3)));
        assert!(!s(0, 2).crosses(&s(2, 4)));
        assert!(s(0, 2).is_countable(3));
        assert!(!s(0, 3).is_countable(3));
        assert!(!s(1, 2).is_countable(3));
        assert_eq!(Span::try_new(2, 2), None);
    }
}
