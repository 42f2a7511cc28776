use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use classcpd::forest::ForestParams;
use classcpd::ingest::ScaleEstimator;
use classcpd::knn::KnnParams;
use classcpd::meanshift::MeanShiftParams;
use classcpd::{DetectionConfig, Method, RatioRule, DEFAULT_ETA};

/// Classifier-based multiple change point detection.
#[derive(Debug, Parser)]
#[command(name = "classcpd", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect change points in a delimited data file.
    Detect(DetectArgs),
    /// Run seeded replicates of a simulation scenario and report accuracy.
    Benchmark(BenchmarkArgs),
    /// Dump the approximate gain curves and log-likelihood ratios of one segment.
    GainCurve(GainCurveArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Random forest.
    Rf,
    /// k-nearest neighbours.
    Knn,
    /// Gaussian change in mean.
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CurveMethodArg {
    Rf,
    Knn,
    Mean,
    /// Predicts the prior everywhere, giving zero gains.
    Prior,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RatioArg {
    Scaled,
    Clamped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    /// Median of absolute consecutive differences.
    MedianAbsDiff,
    /// Median absolute deviation of the absolute consecutive differences.
    MadAbsDiff,
}

/// Detection settings shared by all subcommands.
#[derive(Clone, Debug, Args)]
pub struct TuningArgs {
    /// Minimum relative segment length.
    #[arg(long, env = "CLASSCPD_DELTA", default_value_t = 0.01)]
    pub delta: f64,
    /// p-value threshold of the permutation test.
    #[arg(long, env = "CLASSCPD_THRESHOLD", default_value_t = 0.02)]
    pub threshold: f64,
    #[arg(long, env = "CLASSCPD_PERMUTATIONS", default_value_t = 199)]
    pub permutations: usize,
    /// Offset of the capped logarithm.
    #[arg(long, env = "CLASSCPD_ETA", default_value_t = DEFAULT_ETA)]
    pub eta: f64,
    #[arg(long, env = "CLASSCPD_RATIO", value_enum, default_value_t = RatioArg::Scaled)]
    pub ratio: RatioArg,
    #[arg(long, env = "CLASSCPD_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "CLASSCPD_THREADS")]
    pub threads: Option<usize>,
    /// Trees per forest.
    #[arg(long, env = "CLASSCPD_TREES", default_value_t = 100)]
    pub trees: usize,
    /// Maximal tree depth; 0 grows trees to purity.
    #[arg(long, env = "CLASSCPD_MAX_DEPTH", default_value_t = 8)]
    pub max_depth: usize,
    /// Features tried per split; defaults to the square root of the dimension.
    #[arg(long, env = "CLASSCPD_MTRY")]
    pub mtry: Option<usize>,
    /// Neighbour count; defaults to the square root of the segment length.
    #[arg(long, env = "CLASSCPD_K")]
    pub k: Option<usize>,
    /// Largest series for which the kNN distance matrix is built.
    #[arg(long, env = "CLASSCPD_KNN_CAP", default_value_t = classcpd::knn::DEFAULT_KNN_CAP)]
    pub knn_cap: usize,
    /// Explicit change-in-mean threshold.
    #[arg(long, env = "CLASSCPD_GAMMA")]
    pub gamma: Option<f64>,
    /// Include wall-clock timings, which makes output differ between runs.
    #[arg(long, env = "CLASSCPD_TIMINGS")]
    pub timings: bool,
}

impl TuningArgs {
    pub fn config(&self, method: MethodArg) -> DetectionConfig {
        let method = match method {
            MethodArg::Rf => Method::RandomForest(ForestParams {
                n_trees: self.trees,
                max_depth: (self.max_depth > 0).then_some(self.max_depth),
                mtry: self.mtry,
                ..ForestParams::default()
            }),
            MethodArg::Knn => Method::Knn(KnnParams {
                k: self.k,
                cap: self.knn_cap,
            }),
            MethodArg::Mean => Method::ChangeInMean(MeanShiftParams {
                gamma: self.gamma,
                ..MeanShiftParams::default()
            }),
        };
        DetectionConfig {
            delta: self.delta,
            eta: self.eta,
            ratio_rule: match self.ratio {
                RatioArg::Scaled => RatioRule::Scaled,
                RatioArg::Clamped => RatioRule::Clamped,
            },
            threshold: self.threshold,
            permutations: self.permutations,
            seed: self.seed,
            method,
        }
    }
}

/// How a data file is read and scaled.
#[derive(Clone, Debug, Args)]
pub struct InputArgs {
    /// Delimited text file with a header row.
    #[arg(long, env = "CLASSCPD_INPUT")]
    pub input: PathBuf,
    /// Column holding class labels; excluded from the features.
    #[arg(long, env = "CLASSCPD_LABEL")]
    pub label: Option<String>,
    #[arg(long, env = "CLASSCPD_DELIMITER", default_value_t = ',')]
    pub delimiter: char,
    /// Keep features on their original scale.
    #[arg(long, env = "CLASSCPD_NO_NORMALIZE")]
    pub no_normalize: bool,
    #[arg(long, env = "CLASSCPD_SCALE_ESTIMATOR", value_enum, default_value_t = EstimatorArg::MedianAbsDiff)]
    pub scale_estimator: EstimatorArg,
}

impl InputArgs {
    pub fn estimator(&self) -> ScaleEstimator {
        match self.scale_estimator {
            EstimatorArg::MedianAbsDiff => ScaleEstimator::MedianAbsDiff,
            EstimatorArg::MadAbsDiff => ScaleEstimator::MadAbsDiff,
        }
    }
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, env = "CLASSCPD_METHOD", value_enum, default_value_t = MethodArg::Rf)]
    pub method: MethodArg,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Write the result document here instead of stdout.
    #[arg(long, env = "CLASSCPD_OUTPUT")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// cim, cic, dirichlet, dataset:<path>, variable:<source>:<n>:<k> or
    /// fp:<source>, where a source is dirichlet or a labelled file.
    #[arg(long, env = "CLASSCPD_SCENARIO")]
    pub scenario: String,
    #[arg(long, env = "CLASSCPD_METHOD", value_enum, default_value_t = MethodArg::Rf)]
    pub method: MethodArg,
    /// Number of replicates; replicate r uses seed + r.
    #[arg(long, env = "CLASSCPD_N_SIMS", default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub n_sims: u64,
    /// Label column of dataset files.
    #[arg(long, env = "CLASSCPD_LABEL", default_value = "class")]
    pub label: String,
    #[arg(long, env = "CLASSCPD_DELIMITER", default_value_t = ',')]
    pub delimiter: char,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long, env = "CLASSCPD_OUTPUT")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GainCurveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, env = "CLASSCPD_METHOD", value_enum, default_value_t = CurveMethodArg::Rf)]
    pub method: CurveMethodArg,
    /// Left end of the segment (exclusive).
    #[arg(long, env = "CLASSCPD_START", default_value_t = 0)]
    pub start: usize,
    /// Right end of the segment (inclusive); defaults to the series length.
    #[arg(long, env = "CLASSCPD_END")]
    pub end: Option<usize>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long, env = "CLASSCPD_OUTPUT")]
    pub output: Option<PathBuf>,
}
