//! Constraint-filtered Inside-Outside re-estimation.
//!
//! A partial bracketing restricts the chart to spans that cross none of the
//! given brackets ([`ConstraintMask`]). Inside and outside passes, expected
//! counts and the EM loop all work over the admissible spans only, so the
//! unbracketed case is ordinary unsupervised Inside-Outside.

mod chart;
mod em;
mod mask;
mod train;

pub use chart::{inside, outside, InsideChart, OutsideChart, ScaledChart};
pub use em::{corpus_log_likelihood, em_iteration, em_step, prepare, EmStep, PreparedSentence};
pub use mask::{build_mask, ConstraintMask};
pub use train::{
    retrain, run_em, train_adapt, train_direct, AdaptOutcome, IterationRecord, StopReason, TrainConfig, TrainOutcome,
};
