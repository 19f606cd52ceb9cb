//! Dense CNF PCFGs with anonymous nonterminals `X0..X(N-1)`.
//!
//! `X0` is the start symbol. Each nonterminal owns one row made of `N*N`
//! binary rules `X -> Y Z` and `|T|` lexical rules `X -> t`; a valid grammar
//! has every row summing to one.
//!
//! The text format is line based:
//!
//! ```text
//! pcfg 2
//! tags DT NN
//! B 0 1 1 0.5
//! L 0 DT 0.5
//! L 1 NN 1
//! ```
//!
//! Rules with probability zero may be omitted.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::treebank::Sentence;

/// Probability given to each newly added tag by [`Pcfg::extend_alphabet`].
pub const UNSEEN_TAG_PROB: f64 = 1e-6;

/// Maximum row-sum deviation accepted by [`Pcfg::from_text`].
pub const LOAD_TOLERANCE: f64 = 1e-6;

pub fn nonterminal_name(i: usize) -> String {
    format!("X{i}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pcfg<T> {
    n: usize,
    tags: Vec<String>,
    tag_index: HashMap<String, usize>,
    binary: Vec<T>,
    lexical: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Negative { lhs: usize },
    NotFinite { lhs: usize },
    Unnormalized { lhs: usize, sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Negative { lhs } => write!(f, "X{lhs}: negative probability"),
            Violation::NotFinite { lhs } => write!(f, "X{lhs}: non-finite probability"),
            Violation::Unnormalized { lhs, sum } => write!(f, "X{lhs}: row sums to {sum}"),
        }
    }
}

impl<T: Real> Pcfg<T> {
    /// Builds a grammar from raw tables without checking normalization.
    pub fn from_tables(n: usize, tags: Vec<String>, binary: Vec<T>, lexical: Vec<T>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrammar("no nonterminals".into()));
        }
        if tags.is_empty() {
            return Err(Error::InvalidGrammar("empty tag alphabet".into()));
        }
        let tag_index: HashMap<String, usize> = tags.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        if tag_index.len() != tags.len() {
            return Err(Error::InvalidGrammar("duplicate tag".into()));
        }
        if binary.len() != n * n * n || lexical.len() != n * tags.len() {
            return Err(Error::InvalidGrammar("table size does not match dimensions".into()));
        }
        Ok(Pcfg { n, tags, tag_index, binary, lexical })
    }

    /// All-zero tables, to be filled by the caller.
    pub fn zeros(n: usize, tags: Vec<String>) -> Result<Self> {
        let t = tags.len();
        Pcfg::from_tables(n, tags, vec![T::zero(); n * n * n], vec![T::zero(); n * t])
    }

    /// Every rule gets an independent weight in `(0, 1]`, then rows are
    /// normalized.
    pub fn init_dense_random<S: AsRef<str>>(
        n: usize,
        alphabet: impl IntoIterator<Item = S>,
        seed: u64,
    ) -> Result<Self> {
        let tags: BTreeSet<String> = alphabet.into_iter().map(|s| s.as_ref().to_string()).collect();
        let mut g = Pcfg::zeros(n, tags.into_iter().collect())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in g.binary.iter_mut().chain(g.lexical.iter_mut()) {
            *p = T::of(1.0 - rng.gen::<f64>());
        }
        g.normalize();
        Ok(g)
    }

    pub fn n_nonterminals(&self) -> usize {
        self.n
    }

    pub fn n_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn tag_id(&self, tag: &str) -> Option<usize> {
        self.tag_index.get(tag).copied()
    }

    /// Maps a sentence onto tag indices.
    pub fn encode(&self, sentence: &Sentence) -> Result<Vec<usize>> {
        sentence.tags().iter().map(|t| self.tag_id(t).ok_or_else(|| Error::UnknownTag(t.clone()))).collect()
    }

    #[inline]
    pub fn binary(&self, lhs: usize, left: usize, right: usize) -> T {
        self.binary[(lhs * self.n + left) * self.n + right]
    }

    #[inline]
    pub fn lexical(&self, lhs: usize, tag: usize) -> T {
        self.lexical[lhs * self.tags.len() + tag]
    }

    pub fn set_binary(&mut self, lhs: usize, left: usize, right: usize, p: T) {
        self.binary[(lhs * self.n + left) * self.n + right] = p;
    }

    pub fn set_lexical(&mut self, lhs: usize, tag: usize, p: T) {
        let t = self.tags.len();
        self.lexical[lhs * t + tag] = p;
    }

    /// `N*N` binary probabilities of `lhs`, indexed by `left * N + right`.
    #[inline]
    pub fn binary_row(&self, lhs: usize) -> &[T] {
        let w = self.n * self.n;
        &self.binary[lhs * w..(lhs + 1) * w]
    }

    #[inline]
    pub fn lexical_row(&self, lhs: usize) -> &[T] {
        let t = self.tags.len();
        &self.lexical[lhs * t..(lhs + 1) * t]
    }

    pub fn binary_table(&self) -> &[T] {
        &self.binary
    }

    pub fn lexical_table(&self) -> &[T] {
        &self.lexical
    }

    pub fn row_sum(&self, lhs: usize) -> T {
        self.binary_row(lhs).iter().copied().sum::<T>() + self.lexical_row(lhs).iter().copied().sum::<T>()
    }

    /// Rescales every row with a positive sum to one; zero rows are left alone.
    pub fn normalize(&mut self) {
        let (w, t) = (self.n * self.n, self.tags.len());
        for lhs in 0..self.n {
            let z = self.row_sum(lhs);
            if z > T::zero() {
                self.binary[lhs * w..(lhs + 1) * w].iter_mut().for_each(|p| *p = *p / z);
                self.lexical[lhs * t..(lhs + 1) * t].iter_mut().for_each(|p| *p = *p / z);
            }
        }
    }

    /// One entry per offending row; negativity is reported before
    /// normalization.
    pub fn validate(&self) -> Vec<Violation> {
        (0..self.n)
            .filter_map(|lhs| {
                let row = self.binary_row(lhs).iter().chain(self.lexical_row(lhs));
                let mut negative = false;
                for p in row {
                    if !p.is_finite() {
                        return Some(Violation::NotFinite { lhs });
                    }
                    negative |= *p < T::zero();
                }
                if negative {
                    return Some(Violation::Negative { lhs });
                }
                let sum = self.row_sum(lhs).as_f64();
                ((sum - 1.0).abs() > T::ROW_TOLERANCE).then_some(Violation::Unnormalized { lhs, sum })
            })
            .collect()
    }

    /// Widens the lexical tables to `new_tags`. Each added tag gets
    /// [`UNSEEN_TAG_PROB`] in every row before renormalization, so the
    /// existing rules keep their relative weights.
    pub fn extend_alphabet<S: AsRef<str>>(&self, new_tags: impl IntoIterator<Item = S>) -> Result<Self> {
        let tags: BTreeSet<String> = new_tags.into_iter().map(|s| s.as_ref().to_string()).collect();
        if let Some(missing) = self.tags.iter().find(|t| !tags.contains(*t)) {
            return Err(Error::InvalidGrammar(format!("extension drops existing tag `{missing}`")));
        }
        let tags: Vec<String> = tags.into_iter().collect();
        if tags == self.tags {
            return Ok(self.clone());
        }
        let mut g = Pcfg::zeros(self.n, tags)?;
        g.binary.copy_from_slice(&self.binary);
        let eps = T::of(UNSEEN_TAG_PROB);
        for lhs in 0..self.n {
            for (t, tag) in g.tags.clone().iter().enumerate() {
                let p = match self.tag_id(tag) {
                    Some(old) => self.lexical(lhs, old),
                    None => eps,
                };
                g.set_lexical(lhs, t, p);
            }
        }
        g.normalize();
        Ok(g)
    }

    /// Converts between scalar types.
    pub fn cast<U: Real>(&self) -> Pcfg<U> {
        Pcfg {
            n: self.n,
            tags: self.tags.clone(),
            tag_index: self.tag_index.clone(),
            binary: self.binary.iter().map(|p| U::of(p.as_f64())).collect(),
            lexical: self.lexical.iter().map(|p| U::of(p.as_f64())).collect(),
        }
    }

    /// Probabilities are written with 17 significant digits, which
    /// round-trips any `f64` exactly.
    pub fn to_text(&self) -> String {
        let mut out = format!("pcfg {}\ntags {}\n", self.n, self.tags.join(" "));
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    let p = self.binary(i, j, k);
                    if p != T::zero() {
                        out.push_str(&format!("B {i} {j} {k} {:.16e}\n", p.as_f64()));
                    }
                }
            }
            for (t, tag) in self.tags.iter().enumerate() {
                let p = self.lexical(i, t);
                if p != T::zero() {
                    out.push_str(&format!("L {i} {tag} {:.16e}\n", p.as_f64()));
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::GrammarFile { line, message };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (ln, header) = lines.next().ok_or_else(|| err(1, "empty grammar file".into()))?;
        let n: usize = match header.split_whitespace().collect::<Vec<_>>()[..] {
            ["pcfg", n] => n.parse().map_err(|_| err(ln, format!("bad nonterminal count `{n}`")))?,
            _ => return Err(err(ln, "expected `pcfg <N>` header".into())),
        };
        let (ln, tag_line) = lines.next().ok_or_else(|| err(ln + 1, "missing `tags` line".into()))?;
        let mut fields = tag_line.split_whitespace();
        if fields.next() != Some("tags") {
            return Err(err(ln, "expected `tags` line".into()));
        }
        let tags: Vec<String> = fields.map(str::to_string).collect();
        let mut g: Pcfg<T> = Pcfg::zeros(n, tags).map_err(|e| err(ln, e.to_string()))?;
        let mut seen_b = vec![false; n * n * n];
        let mut seen_l = vec![false; n * g.n_tags()];

        let nt = |ln: usize, s: &str| -> Result<usize> {
            let i: usize = s.parse().map_err(|_| err(ln, format!("bad nonterminal `{s}`")))?;
            if i >= n {
                return Err(err(ln, format!("nonterminal {i} out of range for pcfg {n}")));
            }
            Ok(i)
        };
        let prob = |ln: usize, s: &str| -> Result<f64> {
            let p: f64 = s.parse().map_err(|_| err(ln, format!("bad probability `{s}`")))?;
            if !p.is_finite() || p < 0.0 {
                return Err(err(ln, format!("invalid probability {p}")));
            }
            Ok(p)
        };
        for (ln, line) in lines {
            match line.split_whitespace().collect::<Vec<_>>()[..] {
                ["B", i, j, k, p] => {
                    let (i, j, k) = (nt(ln, i)?, nt(ln, j)?, nt(ln, k)?);
                    let idx = (i * n + j) * n + k;
                    if std::mem::replace(&mut seen_b[idx], true) {
                        return Err(err(ln, "duplicate binary rule".into()));
                    }
                    g.binary[idx] = T::of(prob(ln, p)?);
                }
                ["L", i, tag, p] => {
                    let i = nt(ln, i)?;
                    let t = g.tag_id(tag).ok_or_else(|| err(ln, format!("unknown tag `{tag}`")))?;
                    let idx = i * g.n_tags() + t;
                    if std::mem::replace(&mut seen_l[idx], true) {
                        return Err(err(ln, "duplicate lexical rule".into()));
                    }
                    g.lexical[idx] = T::of(prob(ln, p)?);
                }
                _ => return Err(err(ln, format!("unrecognized rule line `{line}`"))),
            }
        }
        for lhs in 0..n {
            let sum = g.row_sum(lhs).as_f64();
            if (sum - 1.0).abs() > LOAD_TOLERANCE {
                return Err(err(0, format!("row X{lhs} sums to {sum}")));
            }
        }
        Ok(g)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Pcfg::from_text(&text)
    }
}
