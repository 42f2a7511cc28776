//! Seeded replicate generators behind `benchmark --scenario`.

use std::path::PathBuf;

use classcpd::ingest::{load_table, to_dataset, LoadOptions, NormalizeOptions};
use classcpd::simgen::{
    gen_cic, gen_cim, gen_dataset_concat, gen_dirichlet, gen_homogeneous_shuffle, gen_variable_k,
    LabeledDataset, LabeledSeries, VariableSource, DIRICHLET_DIM,
};
use classcpd::Segmentation;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    Cim,
    Cic,
    Dirichlet,
}

impl Builtin {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "cim" => Some(Builtin::Cim),
            "cic" => Some(Builtin::Cic),
            "dirichlet" => Some(Builtin::Dirichlet),
            _ => None,
        }
    }

    fn generate(self, seed: u64) -> LabeledSeries {
        match self {
            Builtin::Cim => gen_cim(seed),
            Builtin::Cic => gen_cic(seed),
            Builtin::Dirichlet => gen_dirichlet(seed),
        }
    }
}

/// A built-in generator or a labelled data file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    Builtin(Builtin),
    File(PathBuf),
}

impl Source {
    fn parse(s: &str) -> Result<Self, CliError> {
        if s.is_empty() {
            return Err(CliError::usage("scenario source is empty"));
        }
        Ok(Builtin::parse(s).map_or_else(|| Source::File(PathBuf::from(s)), Source::Builtin))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScenarioSpec {
    Builtin(Builtin),
    Dataset(PathBuf),
    /// `k` segments of random lengths summing to `n`.
    Variable {
        source: Source,
        n: usize,
        k: usize,
    },
    /// Homogeneous data: the shuffled largest class of the source.
    FalsePositive(Source),
}

impl ScenarioSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        if let Some(b) = Builtin::parse(s) {
            return Ok(ScenarioSpec::Builtin(b));
        }
        let Some((kind, rest)) = s.split_once(':') else {
            return Err(CliError::usage(format!("unknown scenario '{s}'")));
        };
        match kind {
            "dataset" if !rest.is_empty() => Ok(ScenarioSpec::Dataset(PathBuf::from(rest))),
            "variable" => {
                let mut parts = rest.rsplitn(3, ':');
                let (k, n, source) = (parts.next(), parts.next(), parts.next());
                let (Some(k), Some(n), Some(source)) = (k, n, source) else {
                    return Err(CliError::usage(format!(
                        "expected variable:<source>:<n>:<k>, got '{s}'"
                    )));
                };
                let num = |v: &str| {
                    v.parse::<usize>()
                        .map_err(|_| CliError::usage(format!("'{v}' is not a count in '{s}'")))
                };
                Ok(ScenarioSpec::Variable {
                    source: Source::parse(source)?,
                    n: num(n)?,
                    k: num(k)?,
                })
            }
            "fp" => Ok(ScenarioSpec::FalsePositive(Source::parse(rest)?)),
            _ => Err(CliError::usage(format!("unknown scenario '{s}'"))),
        }
    }
}

/// A scenario with its data files loaded.
pub struct Scenario {
    spec: ScenarioSpec,
    data: Option<LabeledDataset>,
    delta: f64,
}

fn load_dataset(path: &PathBuf, label: &str, delimiter: u8) -> Result<LabeledDataset, CliError> {
    let options = LoadOptions {
        delimiter,
        label: Some(label.to_string()),
        ..LoadOptions::default()
    };
    let table = load_table(path, &options)?;
    Ok(to_dataset(&table, NormalizeOptions::default())?)
}

impl Scenario {
    /// Loads any data file named by `spec`; `delta` is the minimum relative
    /// class size kept by dataset concatenation.
    pub fn load(
        spec: ScenarioSpec,
        label: &str,
        delimiter: u8,
        delta: f64,
    ) -> Result<Self, CliError> {
        let path = match &spec {
            ScenarioSpec::Dataset(p) => Some(p),
            ScenarioSpec::Variable {
                source: Source::File(p),
                ..
            }
            | ScenarioSpec::FalsePositive(Source::File(p)) => Some(p),
            _ => None,
        };
        let data = path
            .map(|p| load_dataset(p, label, delimiter))
            .transpose()?;
        Ok(Self { spec, data, delta })
    }

    /// Replicate generated from `seed`: the series and its true segmentation.
    pub fn replicate(&self, seed: u64) -> Result<LabeledSeries, CliError> {
        let data = || self.data.as_ref().expect("data file loaded");
        let series = match &self.spec {
            ScenarioSpec::Builtin(b) => b.generate(seed),
            ScenarioSpec::Dataset(_) => gen_dataset_concat(data(), self.delta, seed)?,
            ScenarioSpec::Variable { source, n, k } => {
                let source = match source {
                    Source::Builtin(Builtin::Dirichlet) => {
                        VariableSource::Dirichlet { d: DIRICHLET_DIM }
                    }
                    Source::Builtin(b) => {
                        return Err(CliError::usage(format!(
                            "variable-length segments need dirichlet or a data file, not {b:?}"
                        )))
                    }
                    Source::File(_) => VariableSource::DatasetResample(data()),
                };
                gen_variable_k(source, *n, *k, seed)?
            }
            ScenarioSpec::FalsePositive(source) => {
                let x = match source {
                    Source::Builtin(b) => {
                        gen_homogeneous_shuffle(&b.generate(seed).to_dataset(), seed)?
                    }
                    Source::File(_) => gen_homogeneous_shuffle(data(), seed)?,
                };
                let truth = Segmentation::trivial(x.n())?;
                LabeledSeries { x, truth }
            }
        };
        Ok(series)
    }
}
