#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::Path;

use pcfg_induce::synthetic::{generate_corpus, toy_grammar, GeneratorConfig};
use pcfg_induce::treebank::Corpus;
use pcfg_induce::{Pcfg64, Span};

/// Example sentence tree with the Treebank empty subject under the
/// infinitival clause.
pub const EXAMPLE_TREEBANK: &str = "(S (NP-SBJ (PRP I)) (VP (VBP want) (S (NP-SBJ (-NONE- *)) \
    (VP (TO to) (VP (VB take) (NP (NP (DT the) (NN flight)) (PP (IN with) \
    (NP (QP (IN at) (JJS most) (CD one)) (NN stop)))))))))";

/// `X0 -> X0 X0 : 0.4`, `X0 -> a : 0.6`.
pub const G1: &str = "pcfg 1\ntags a\nB 0 0 0 0.4\nL 0 a 0.6\n";

pub fn g1() -> Pcfg64 {
    Pcfg64::from_text(G1).unwrap()
}

pub fn spans(v: &[(usize, usize)]) -> BTreeSet<Span> {
    v.iter().map(|&(a, b)| Span::new(a, b)).collect()
}

pub fn toy_corpus(count: usize, max_len: usize, seed: u64) -> Corpus {
    generate_corpus(&GeneratorConfig::new(toy_grammar(), count, 2, max_len, seed)).unwrap()
}

/// Writes `corpus` and a sweep file referring to it into `dir` and returns
/// its path.
pub fn write_sweep(dir: &Path, corpus: &Corpus, pretrain: Option<&Corpus>, body: &str) -> std::path::PathBuf {
    corpus.write(&dir.join("corpus.trees")).unwrap();
    let mut text = String::from("corpus = corpus.trees\n");
    if let Some(p) = pretrain {
        p.write(&dir.join("pretrain.trees")).unwrap();
        text.push_str("pretrain = pretrain.trees\n");
    }
    text.push_str(body);
    let path = dir.join("sweep.spec");
    std::fs::write(&path, text).unwrap();
    path
}
