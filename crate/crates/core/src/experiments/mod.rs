//! Declarative supervision sweeps, strategy comparison and result output.

mod output;
mod run;
mod spec;

pub use output::{emit_results, read_csv, read_results, render_svg, to_csv_string, write_csv, OutputFormat};
pub use run::{
    annotate, compare_strategies, comparison_table, derive_seed, evaluate_pretrained_only, run_experiment,
    score_grammar, Comparison, ResultRow, PRETRAINED_LABEL,
};
pub use spec::{Condition, DataSource, ExperimentSpec, Strategy};
