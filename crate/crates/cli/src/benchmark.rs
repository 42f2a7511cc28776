use std::time::Instant;

use classcpd::metrics::MetricReport;
use classcpd::{detect, DetectionConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::BenchmarkArgs;
use crate::error::CliError;
use crate::output::{delimiter_byte, emit_csv};
use crate::scenario::{Scenario, ScenarioSpec};

/// One line of the benchmark table: a replicate, or the mean or standard
/// deviation over replicates.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub kind: &'static str,
    pub replicate: Option<u64>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub ari: f64,
    pub d_true_to_est: f64,
    pub d_est_to_true: f64,
    pub hausdorff: f64,
    pub n_change_points: f64,
    pub n_true_change_points: f64,
    /// Whether at least one change point was reported.
    pub detection_rate: f64,
    pub wall_seconds: Option<f64>,
}

fn run_replicate(
    scenario: &Scenario,
    config: &DetectionConfig,
    replicate: u64,
    timings: bool,
) -> Result<BenchRow, CliError> {
    let seed = config.seed.wrapping_add(replicate);
    let series = scenario.replicate(seed)?;
    let start = Instant::now();
    let result = detect(&series.x, &config.clone().seed(seed))?;
    let wall = start.elapsed().as_secs_f64();
    let m = MetricReport::new(&series.truth, &result.segmentation)?;
    Ok(BenchRow {
        kind: "replicate",
        replicate: Some(replicate),
        seed: Some(seed),
        n: Some(series.x.n()),
        ari: m.ari,
        d_true_to_est: m.d_true_to_est,
        d_est_to_true: m.d_est_to_true,
        hausdorff: m.hausdorff,
        n_change_points: m.n_est_changepoints as f64,
        n_true_change_points: series.truth.change_points().len() as f64,
        detection_rate: if m.n_est_changepoints > 0 { 1.0 } else { 0.0 },
        wall_seconds: timings.then_some(wall),
    })
}

fn aggregate(rows: &[BenchRow], kind: &'static str, f: impl Fn(&[f64]) -> f64) -> BenchRow {
    let col = |g: fn(&BenchRow) -> f64| f(&rows.iter().map(g).collect::<Vec<_>>());
    let timed = rows.iter().all(|r| r.wall_seconds.is_some());
    BenchRow {
        kind,
        replicate: None,
        seed: None,
        n: None,
        ari: col(|r| r.ari),
        d_true_to_est: col(|r| r.d_true_to_est),
        d_est_to_true: col(|r| r.d_est_to_true),
        hausdorff: col(|r| r.hausdorff),
        n_change_points: col(|r| r.n_change_points),
        n_true_change_points: col(|r| r.n_true_change_points),
        detection_rate: col(|r| r.detection_rate),
        wall_seconds: timed.then(|| col(|r| r.wall_seconds.unwrap_or(0.0))),
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Per-replicate rows followed, for more than one replicate, by mean and
/// standard deviation rows.
pub fn benchmark_rows(
    scenario: &Scenario,
    config: &DetectionConfig,
    n_sims: u64,
    timings: bool,
) -> Result<Vec<BenchRow>, CliError> {
    let mut rows: Vec<BenchRow> = if timings {
        (0..n_sims)
            .map(|r| run_replicate(scenario, config, r, true))
            .collect::<Result<_, _>>()?
    } else {
        (0..n_sims)
            .into_par_iter()
            .map(|r| run_replicate(scenario, config, r, false))
            .collect::<Result<_, _>>()?
    };
    if rows.len() > 1 {
        let summary = [aggregate(&rows, "mean", mean), aggregate(&rows, "sd", sd)];
        rows.extend(summary);
    }
    Ok(rows)
}

pub fn run(args: &BenchmarkArgs) -> Result<(), CliError> {
    let config = args.tuning.config(args.method);
    config.validate(None).map_err(CliError::usage)?;
    let spec = ScenarioSpec::parse(&args.scenario)?;
    let scenario = Scenario::load(
        spec,
        &args.label,
        delimiter_byte(args.delimiter)?,
        config.delta,
    )?;
    let rows = benchmark_rows(&scenario, &config, args.n_sims, args.tuning.timings)?;
    emit_csv(args.output.as_deref(), &rows)
}
