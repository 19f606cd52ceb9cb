//! Corpora sampled from known grammars.
//!
//! Gold trees label binary nodes `X<i>`; a lexical rule `X<i> -> t` becomes
//! the preterminal `(t t)`, so the tag doubles as the token. Category
//! extraction works on these trees directly except for the NP-based
//! categories, which need [`alias_labels`].

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grammar::{nonterminal_name, Pcfg};
use crate::scalar::Real;
use crate::treebank::{Corpus, ParseTree};

/// Consecutive rejections tolerated for one sentence.
pub const MAX_REJECTIONS: usize = 1_000_000;

/// Ten nonterminals over eight Penn tags, with S/NP/VP/PP-like structure.
pub const TOY_GRAMMAR: &str = include_str!("../data/toy10.pcfg");

pub fn toy_grammar() -> Pcfg<f64> {
    Pcfg::from_text(TOY_GRAMMAR).expect("bundled grammar is valid")
}

/// Same grammar with the children of every binary rule swapped, producing
/// mirror-image sentences and trees.
pub fn mirror_grammar<T: Real>(g: &Pcfg<T>) -> Pcfg<T> {
    let n = g.n_nonterminals();
    let mut out = g.clone();
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                out.set_binary(x, y, z, g.binary(x, z, y));
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct GeneratorConfig<T> {
    pub grammar: Pcfg<T>,
    pub count: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
    pub max_expansion_depth: usize,
}

impl<T: Real> GeneratorConfig<T> {
    pub fn new(grammar: Pcfg<T>, count: usize, min_len: usize, max_len: usize, seed: u64) -> Self {
        GeneratorConfig { grammar, count, min_len, max_len, seed, max_expansion_depth: 64 }
    }
}

/// A sampled derivation, keeping every rule choice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Derivation {
    Lexical { lhs: usize, tag: usize },
    Binary { lhs: usize, left: Box<Derivation>, right: Box<Derivation> },
}

impl Derivation {
    pub fn len(&self) -> usize {
        match self {
            Derivation::Lexical { .. } => 1,
            Derivation::Binary { left, right, .. } => left.len() + right.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn visit(&self, f: &mut impl FnMut(&Derivation)) {
        f(self);
        if let Derivation::Binary { left, right, .. } = self {
            left.visit(f);
            right.visit(f);
        }
    }

    pub fn to_tree<T: Real>(&self, g: &Pcfg<T>) -> ParseTree {
        match self {
            Derivation::Lexical { tag, .. } => {
                let t = &g.tags()[*tag];
                ParseTree::preterminal(t.clone(), t.clone())
            }
            Derivation::Binary { lhs, left, right } => {
                ParseTree::node(nonterminal_name(*lhs), vec![left.to_tree(g), right.to_tree(g)]).expect("two children")
            }
        }
    }
}

/// Top-down sampler with per-row cumulative distributions.
pub struct Sampler<'a, T> {
    grammar: &'a Pcfg<T>,
    /// Per nonterminal: cumulative weights over `N*N` binary then `|T|` lexical rules.
    cumulative: Vec<Vec<f64>>,
}

impl<'a, T: Real> Sampler<'a, T> {
    pub fn new(grammar: &'a Pcfg<T>) -> Self {
        let cumulative = (0..grammar.n_nonterminals())
            .map(|x| {
                let mut acc = 0.0;
                grammar
                    .binary_row(x)
                    .iter()
                    .chain(grammar.lexical_row(x))
                    .map(|p| {
                        acc += p.as_f64();
                        acc
                    })
                    .collect()
            })
            .collect();
        Sampler { grammar, cumulative }
    }

    fn pick(&self, x: usize, rng: &mut impl Rng) -> usize {
        let row = &self.cumulative[x];
        let total = *row.last().expect("non-empty row");
        let u = rng.gen::<f64>() * total;
        row.partition_point(|&c| c <= u).min(row.len() - 1)
    }

    /// `None` if the derivation exceeds `max_tokens` or `max_depth`.
    pub fn sample(&self, rng: &mut impl Rng, max_tokens: usize, max_depth: usize) -> Option<Derivation> {
        let mut tokens = 0;
        self.expand(0, 0, rng, &mut tokens, max_tokens, max_depth)
    }

    fn expand(
        &self,
        x: usize,
        depth: usize,
        rng: &mut impl Rng,
        tokens: &mut usize,
        max_tokens: usize,
        max_depth: usize,
    ) -> Option<Derivation> {
        if depth > max_depth {
            return None;
        }
        let n = self.grammar.n_nonterminals();
        let r = self.pick(x, rng);
        if r >= n * n {
            *tokens += 1;
            if *tokens > max_tokens {
                return None;
            }
            return Some(Derivation::Lexical { lhs: x, tag: r - n * n });
        }
        let left = self.expand(r / n, depth + 1, rng, tokens, max_tokens, max_depth)?;
        let right = self.expand(r % n, depth + 1, rng, tokens, max_tokens, max_depth)?;
        Some(Derivation::Binary { lhs: x, left: Box::new(left), right: Box::new(right) })
    }
}

/// Samples `count` sentences by rejection. Sentence `i` uses its own
/// ChaCha stream, so the corpus is fixed by seed and index.
pub fn generate_corpus<T: Real>(cfg: &GeneratorConfig<T>) -> Result<Corpus> {
    if cfg.min_len == 0 || cfg.max_len < cfg.min_len {
        return Err(Error::Spec(format!("bad length bounds [{}, {}]", cfg.min_len, cfg.max_len)));
    }
    if !cfg.grammar.validate().is_empty() {
        return Err(Error::InvalidGrammar("generator grammar fails validation".into()));
    }
    let sampler = Sampler::new(&cfg.grammar);
    let mut trees = Vec::with_capacity(cfg.count);
    for i in 0..cfg.count {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let mut rejections = 0;
        let d = loop {
            match sampler.sample(&mut rng, cfg.max_len, cfg.max_expansion_depth) {
                Some(d) if d.len() >= cfg.min_len => break d,
                _ => {
                    rejections += 1;
                    if rejections >= MAX_REJECTIONS {
                        return Err(Error::GeneratorStarved(rejections));
                    }
                }
            }
        };
        trees.push(d.to_tree(&cfg.grammar));
    }
    Corpus::from_trees(trees)
}

/// Renames the listed `X<i>` nonterminals to `NP` in every gold tree.
pub fn alias_labels(corpus: &Corpus, n_nonterminals: usize, np_set: &BTreeSet<String>) -> Result<Corpus> {
    for sym in np_set {
        let ok = sym.strip_prefix('X').and_then(|d| d.parse::<usize>().ok()).is_some_and(|i| i < n_nonterminals);
        if !ok {
            return Err(Error::UnknownSymbol(sym.clone()));
        }
    }
    let trees = corpus.trees().map(|t| {
        let mut t = t.clone();
        t.relabel(&mut |l| np_set.contains(l).then(|| "NP".to_string()));
        t
    });
    Corpus::from_trees(trees)
}
