//! Probabilistic context-free grammar induction from partially bracketed
//! corpora.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for common use.

pub mod annotation;
pub mod error;
pub mod evaluation;
pub mod experiments;
pub mod grammar;
pub mod inside_outside;
pub mod parser;
pub mod scalar;
pub mod synthetic;
pub mod treebank;

#[cfg(test)]
mod fixtures;

pub use annotation::{Annotation, ConstituentClass, Supervision};
pub use error::{Error, ErrorKind, Result};
pub use evaluation::{corpus_accuracy, paired_t_test, EvalReport, TTest};
pub use grammar::Pcfg;
pub use inside_outside::{ConstraintMask, TrainConfig};
pub use scalar::Real;
pub use treebank::{Corpus, ParseTree, Sentence, Span};

pub type Pcfg64 = grammar::Pcfg<f64>;
pub type Pcfg32 = grammar::Pcfg<f32>;
pub type InsideChart64 = inside_outside::InsideChart<f64>;
pub type OutsideChart64 = inside_outside::OutsideChart<f64>;
pub type ViterbiParse64 = parser::ViterbiParse<f64>;
