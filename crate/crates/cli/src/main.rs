use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pcfg_induce::annotation::{
    corpus_category_stats, extract, read_annotations, sample_brackets, write_annotations, Annotation, ConstituentClass,
};
use pcfg_induce::evaluation::corpus_accuracy;
use pcfg_induce::experiments::{
    compare_strategies, comparison_table, emit_results, read_results, run_experiment, ExperimentSpec, OutputFormat,
};
use pcfg_induce::inside_outside::{retrain, train_direct, TrainConfig};
use pcfg_induce::parser::{parse_dump_line, viterbi_parse};
use pcfg_induce::synthetic::{alias_labels, generate_corpus, mirror_grammar, toy_grammar, GeneratorConfig};
use pcfg_induce::treebank::{read_manifest_corpus, read_treebank, tree_brackets, Corpus};
use pcfg_induce::{Error, ErrorKind, Pcfg64};

#[derive(Parser)]
#[command(name = "pcfg-induce", version, about = "Grammar induction from partially bracketed corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    nonterminals: Option<usize>,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Percentage of countable brackets in each constituent class.
    Stats {
        treebank: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Export annotations for one class or a random bracket fraction.
    Extract {
        treebank: PathBuf,
        #[arg(long, conflicts_with = "fraction", required_unless_present = "fraction")]
        class: Option<ConstituentClass>,
        #[arg(long)]
        fraction: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Train one grammar from annotation files.
    Train {
        /// Training annotations (output of `extract`).
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        heldout: Option<PathBuf>,
        /// Fully bracketed treebank; switches to the two-stage adapt strategy.
        #[arg(long)]
        pretrain: Option<PathBuf>,
        /// Rewrite the grammar here whenever held-out likelihood improves.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        single_thread: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Viterbi-parse a treebank or annotation file into a parse dump.
    Parse {
        #[arg(long)]
        grammar: PathBuf,
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a supervision sweep from a spec file.
    Sweep {
        spec: PathBuf,
        /// Also write an SVG plot here.
        #[arg(long)]
        plot: Option<PathBuf>,
        #[arg(long)]
        single_thread: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Score a parse dump against a gold treebank.
    Eval {
        parses: PathBuf,
        gold: PathBuf,
        /// Print per-sentence counts instead of the summary.
        #[arg(long)]
        per_sentence: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Paired t-test of adapt against direct in a results CSV.
    Compare {
        results: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sample a synthetic treebank.
    Gen {
        /// Grammar file; the built-in 10-nonterminal toy grammar when omitted.
        #[arg(long)]
        grammar: Option<PathBuf>,
        /// Use the left-right mirror image of the grammar.
        #[arg(long)]
        mirror: bool,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long, default_value_t = 2)]
        min_len: usize,
        #[arg(long, default_value_t = 15)]
        max_len: usize,
        /// Nonterminals relabeled NP in the output trees, e.g. `X1`.
        #[arg(long, value_delimiter = ',')]
        np: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
}

type Result<T> = std::result::Result<T, Error>;

fn load_corpus(path: &Path) -> Result<Corpus> {
    if path.extension().is_some_and(|e| e == "manifest") {
        read_manifest_corpus(path)
    } else {
        read_treebank(path)
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn train_config(common: &Common, parallel: bool) -> TrainConfig {
    let d = TrainConfig::default();
    TrainConfig {
        n_nonterminals: common.nonterminals.unwrap_or(d.n_nonterminals),
        max_iterations: common.max_iters.unwrap_or(d.max_iterations),
        rel_tolerance: common.tol.unwrap_or(d.rel_tolerance),
        seed: common.seed.unwrap_or(d.seed),
        parallel,
        ..d
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stats { treebank, common } => {
            let stats = corpus_category_stats(&load_corpus(&treebank)?)?;
            emit(&common, &format!("brackets {}\n{stats}", stats.total))
        }
        Command::Extract { treebank, class, fraction, common } => {
            let corpus = load_corpus(&treebank)?;
            let seed = common.seed.unwrap_or(0);
            let anns: Vec<Annotation> = corpus
                .trees()
                .enumerate()
                .map(|(i, t)| match (class, fraction) {
                    (Some(c), _) => extract(t, c),
                    (None, Some(f)) => sample_brackets(t, f, seed.wrapping_add(i as u64)),
                    (None, None) => unreachable!("clap requires one of them"),
                })
                .collect::<Result<_>>()?;
            emit(&common, &write_annotations(&anns))
        }
        Command::Train { train, heldout, pretrain, checkpoint, single_thread, common } => {
            let data = read_annotations(&read_text(&train)?)?;
            let heldout = heldout.map(|h| read_text(&h).and_then(|t| read_annotations(&t))).transpose()?;
            let cfg = TrainConfig { heldout, checkpoint, ..train_config(&common, !single_thread) };
            let grammar = match pretrain {
                None => train_direct::<f64>(&data, &cfg)?.grammar,
                Some(p) => {
                    let full: Vec<Annotation> =
                        load_corpus(&p)?.trees().map(Annotation::full).collect::<Result<_>>()?;
                    let stage1_cfg = TrainConfig { heldout: None, checkpoint: None, ..cfg.clone() };
                    let stage1 = train_direct::<f64>(&full, &stage1_cfg)?;
                    retrain(stage1.grammar, stage1.history, &data, &cfg)?.grammar
                }
            };
            emit(&common, &grammar.to_text())
        }
        Command::Parse { grammar, input, common } => {
            let g = Pcfg64::load(&grammar)?;
            let sentences: Vec<_> = match read_annotations(&read_text(&input)?) {
                Ok(anns) => anns.into_iter().map(|a| a.sentence().clone()).collect(),
                Err(_) => load_corpus(&input)?.entries().iter().map(|e| e.sentence.clone()).collect(),
            };
            let mut out = String::new();
            for s in &sentences {
                let brackets = match viterbi_parse(&g, s, None) {
                    Ok(p) => p.brackets,
                    Err(Error::NoParse) => BTreeSet::new(),
                    Err(e) => return Err(e),
                };
                out.push_str(&parse_dump_line(s, &brackets));
                out.push('\n');
            }
            emit(&common, &out)
        }
        Command::Sweep { spec, plot, single_thread, common } => {
            let mut spec = ExperimentSpec::load(&spec)?;
            if let Some(s) = common.seed {
                spec.base_seed = s;
            }
            if let Some(n) = common.nonterminals {
                spec.n_nonterminals = n;
            }
            if let Some(m) = common.max_iters {
                spec.max_iterations = m;
            }
            if let Some(t) = common.tol {
                spec.rel_tolerance = t;
            }
            if single_thread {
                spec.parallel = false;
            }
            spec.validate()?;
            let rows = run_experiment(&spec)?;
            match &common.out {
                Some(p) => emit_results(&rows, p, OutputFormat::for_path(p))?,
                None => emit(&common, &pcfg_induce::experiments::to_csv_string(&rows)?)?,
            }
            if let Some(p) = plot {
                emit_results(&rows, &p, OutputFormat::Svg)?;
            }
            Ok(())
        }
        Command::Eval { parses, gold, per_sentence, common } => {
            let dump = read_annotations(&read_text(&parses)?)?;
            let gold = load_corpus(&gold)?;
            if dump.len() != gold.len() {
                return Err(Error::LengthMismatch { left: dump.len(), right: gold.len() });
            }
            for (i, (d, g)) in dump.iter().zip(gold.entries()).enumerate() {
                if d.sentence() != &g.sentence {
                    return Err(Error::StructureMismatch(format!("sentence {i} differs from the gold tags")));
                }
            }
            let cands: Vec<_> = dump.iter().map(|a| a.countable_brackets().copied().collect()).collect();
            let golds: Vec<_> = gold.trees().map(|t| tree_brackets(t, true)).collect();
            let report = corpus_accuracy(&cands, &golds)?;
            if per_sentence {
                emit(&common, &report.per_sentence_tsv())
            } else {
                emit(&common, &format!("{report} macro_accuracy={}\n", report.macro_accuracy))
            }
        }
        Command::Compare { results, common } => {
            let rows = read_results(&results)?;
            emit(&common, &comparison_table(&compare_strategies(&rows)?))
        }
        Command::Gen { grammar, mirror, count, min_len, max_len, np, common } => {
            let mut g = match grammar {
                Some(p) => Pcfg64::load(&p)?,
                None => toy_grammar(),
            };
            if mirror {
                g = mirror_grammar(&g);
            }
            let n = g.n_nonterminals();
            let cfg = GeneratorConfig::new(g, count, min_len, max_len, common.seed.unwrap_or(0));
            let mut corpus = generate_corpus(&cfg)?;
            if !np.is_empty() {
                corpus = alias_labels(&corpus, n, &np.into_iter().collect())?;
            }
            emit(&common, &corpus.to_treebank_string())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Training => 3,
            })
        }
    }
}
