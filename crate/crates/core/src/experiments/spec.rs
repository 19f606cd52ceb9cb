use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::annotation::ConstituentClass;
use crate::error::{Error, Result};
use crate::treebank::SplitSizes;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Direct,
    Adapt,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Direct => "direct",
            Strategy::Adapt => "adapt",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "direct" => Ok(Strategy::Direct),
            "adapt" => Ok(Strategy::Adapt),
            other => Err(Error::Spec(format!("unknown strategy `{other}`"))),
        }
    }
}

/// One supervision setting of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Condition {
    Fraction(f64),
    Class(ConstituentClass),
}

impl Condition {
    pub fn label(&self) -> String {
        match self {
            Condition::Fraction(f) => format!("fraction={f}"),
            Condition::Class(c) => c.to_string(),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Fixed train/held-out/test files used by every replication.
    Files { train: PathBuf, heldout: Option<PathBuf>, test: PathBuf },
    /// One corpus re-partitioned for every replication.
    Split { corpus: PathBuf, sizes: SplitSizes },
}

/// Declarative sweep configuration.
///
/// Read from `key = value` lines (`#` starts a comment). Paths are relative
/// to the directory of the file. Corpus paths ending in `.manifest` are read as
/// manifests.
///
/// ```text
/// corpus = toy.trees
/// split = 400,50,100
/// strategy = direct, adapt
/// pretrain = pretrain.trees
/// fractions = 0, 0.25, 0.5, 0.75, 1
/// classes = HighP, BaseNP, BaseP, AllNP, NotBaseP
/// np_labels = X1
/// replications = 10
/// seed = 1
/// nonterminals = 16
/// max_iters = 50
/// tol = 1e-4
/// parallel = false
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub data: DataSource,
    pub strategies: Vec<Strategy>,
    pub pretrain: Option<PathBuf>,
    pub conditions: Vec<Condition>,
    pub replications: usize,
    pub base_seed: u64,
    pub n_nonterminals: usize,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub parallel: bool,
    /// Gold-tree labels renamed to `NP` after loading (for synthetic corpora).
    pub np_labels: BTreeSet<String>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Spec(m.to_string()));
        if self.strategies.is_empty() {
            return bad("no strategy given");
        }
        if self.strategies.contains(&Strategy::Adapt) && self.pretrain.is_none() {
            return bad("strategy adapt requires `pretrain`");
        }
        if self.conditions.is_empty() {
            return bad("no supervision conditions (`fractions` or `classes`)");
        }
        for c in &self.conditions {
            if let Condition::Fraction(f) = c {
                if !(0.0..=1.0).contains(f) {
                    return Err(Error::Spec(format!("fraction {f} outside [0,1]")));
                }
            }
        }
        if self.replications == 0 {
            return bad("replications must be at least 1");
        }
        if self.max_iterations == 0
            || self.n_nonterminals == 0
            || !(self.rel_tolerance.is_finite() && self.rel_tolerance > 0.0)
        {
            return bad("max_iters, nonterminals and tol must be positive");
        }
        Ok(())
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut kv: Vec<(String, String)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::Spec(format!("line {}: expected `key = value`", i + 1)))?;
            let key = k.trim().to_string();
            if kv.iter().any(|(seen, _)| *seen == key) {
                return Err(Error::Spec(format!("line {}: duplicate key `{key}`", i + 1)));
            }
            kv.push((key, v.trim().to_string()));
        }
        let get = |k: &str| kv.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
        let path = |k: &str| get(k).map(|v| base_dir.join(v));
        let list = |k: &str| -> Vec<&str> {
            get(k).map(|v| v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()).unwrap_or_default()
        };
        fn num<T: FromStr>(key: &str, v: Option<&str>, default: T) -> Result<T> {
            match v {
                None => Ok(default),
                Some(s) => s.parse().map_err(|_| Error::Spec(format!("bad value `{s}` for `{key}`"))),
            }
        }

        const KNOWN: [&str; 16] = [
            "train",
            "heldout",
            "test",
            "corpus",
            "split",
            "strategy",
            "pretrain",
            "fractions",
            "classes",
            "np_labels",
            "replications",
            "seed",
            "nonterminals",
            "max_iters",
            "tol",
            "parallel",
        ];
        if let Some((k, _)) = kv.iter().find(|(k, _)| !KNOWN.contains(&k.as_str())) {
            return Err(Error::Spec(format!("unknown key `{k}`")));
        }

        let data = match (path("corpus"), path("train")) {
            (Some(corpus), None) => {
                let parts = list("split");
                let sizes: Vec<usize> = parts
                    .iter()
                    .map(|s| s.parse().map_err(|_| Error::Spec(format!("bad split size `{s}`"))))
                    .collect::<Result<_>>()?;
                let [train, heldout, test] = sizes[..] else {
                    return Err(Error::Spec("`split` needs train,heldout,test sizes".into()));
                };
                DataSource::Split { corpus, sizes: SplitSizes { train, heldout, test } }
            }
            (None, Some(train)) => {
                let test = path("test").ok_or_else(|| Error::Spec("`train` requires `test`".into()))?;
                DataSource::Files { train, heldout: path("heldout"), test }
            }
            (Some(_), Some(_)) => return Err(Error::Spec("give either `corpus` or `train`, not both".into())),
            (None, None) => return Err(Error::Spec("missing `corpus` or `train`".into())),
        };

        let strategies = if get("strategy").is_some() {
            list("strategy").into_iter().map(Strategy::from_str).collect::<Result<Vec<_>>>()?
        } else {
            vec![Strategy::Direct]
        };
        let mut conditions = Vec::new();
        for f in list("fractions") {
            let x: f64 = f.parse().map_err(|_| Error::Spec(format!("bad fraction `{f}`")))?;
            conditions.push(Condition::Fraction(x));
        }
        for c in list("classes") {
            conditions.push(Condition::Class(c.parse()?));
        }

        let spec = ExperimentSpec {
            data,
            strategies,
            pretrain: path("pretrain"),
            conditions,
            replications: num("replications", get("replications"), 10)?,
            base_seed: num("seed", get("seed"), 0)?,
            n_nonterminals: num("nonterminals", get("nonterminals"), 16)?,
            max_iterations: num("max_iters", get("max_iters"), 50)?,
            rel_tolerance: num("tol", get("tol"), 1e-4)?,
            parallel: num("parallel", get("parallel"), true)?,
            np_labels: list("np_labels").into_iter().map(str::to_string).collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentSpec::parse(&text, path.parent().unwrap_or_else(|| Path::new("")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_full_spec() {
        let text = "corpus = c.trees\nsplit = 10, 5, 5\nstrategy = direct,adapt\npretrain = p.trees\n\
                    fractions = 0, 0.5, 1 # baseline\nclasses = HighP, basenp\nreplications = 3\nseed = 7\n\
                    nonterminals = 4\nmax_iters = 5\ntol = 1e-3\nparallel = false\nnp_labels = X1, X2\n";
        let s = ExperimentSpec::parse(text, Path::new("/data")).unwrap();
        assert_eq!(
            s.data,
            DataSource::Split { corpus: "/data/c.trees".into(), sizes: SplitSizes { train: 10, heldout: 5, test: 5 } }
        );
        assert_eq!(s.strategies, vec![Strategy::Direct, Strategy::Adapt]);
        assert_eq!(s.conditions.len(), 5);
        assert_eq!(s.conditions[4], Condition::Class(ConstituentClass::BaseNP));
        assert_eq!((s.replications, s.base_seed, s.n_nonterminals, s.max_iterations), (3, 7, 4, 5));
        assert!(!s.parallel);
        assert_eq!(s.np_labels.len(), 2);
    }

    #[test]
    fn defaults_and_files() {
        let s = ExperimentSpec::parse("train = a\ntest = b\nfractions = 1\n", Path::new("")).unwrap();
        assert_eq!(s.strategies, vec![Strategy::Direct]);
        assert_eq!((s.replications, s.n_nonterminals, s.max_iterations, s.rel_tolerance), (10, 16, 50, 1e-4));
        assert!(matches!(s.data, DataSource::Files { heldout: None, .. }));
    }

    #[test]
    fn invalid_specs() {
        let p = Path::new("");
        assert!(ExperimentSpec::parse("train = a\ntest = b\nstrategy = adapt\nfractions = 1\n", p).is_err());
        assert!(ExperimentSpec::parse("train = a\ntest = b\nfractions = 1.5\n", p).is_err());
        assert!(ExperimentSpec::parse("train = a\ntest = b\n", p).is_err());
        assert!(ExperimentSpec::parse("train = a\nfractions = 1\n", p).is_err());
        assert!(ExperimentSpec::parse("corpus = a\nsplit = 1,2\nfractions = 1\n", p).is_err());
        assert!(ExperimentSpec::parse("train = a\ntest = b\nfractions = 1\nbogus = 2\n", p).is_err());
        assert!(ExperimentSpec::parse("train = a\ntest = b\nfractions = 1\nfractions = 0\n", p).is_err());
        assert!(ExperimentSpec::parse("train = a\ntest = b\nclasses = VP\n", p).is_err());
    }
}
