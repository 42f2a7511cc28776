use std::time::Instant;

use classcpd::{detect, DetectionConfig, SplitRecord};
use serde::Serialize;

use crate::args::DetectArgs;
use crate::error::CliError;
use crate::output::{emit_json, load_features, SCHEMA_VERSION};

#[derive(Debug, Serialize)]
struct InputEcho {
    path: String,
    n: usize,
    d: usize,
    columns: Vec<String>,
    /// Columns with zero scale, left as read.
    unscaled: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Timings {
    load_seconds: f64,
    detect_seconds: f64,
}

#[derive(Debug, Serialize)]
struct DetectDocument<'a> {
    version: u32,
    command: &'static str,
    input: InputEcho,
    config: &'a DetectionConfig,
    boundaries: &'a [usize],
    change_points: &'a [usize],
    split_log: &'a [SplitRecord],
    timings: Option<Timings>,
}

pub fn run(args: &DetectArgs) -> Result<(), CliError> {
    let config = args.tuning.config(args.method);
    config.validate(None).map_err(CliError::usage)?;

    let start = Instant::now();
    let table = load_features(&args.input)?;
    let loaded = start.elapsed().as_secs_f64();
    let result = detect(&table.x, &config)?;
    let detected = start.elapsed().as_secs_f64() - loaded;

    let doc = DetectDocument {
        version: SCHEMA_VERSION,
        command: "detect",
        input: InputEcho {
            path: args.input.input.display().to_string(),
            n: table.x.n(),
            d: table.x.d(),
            columns: table.columns,
            unscaled: table.unscaled,
        },
        config: &config,
        boundaries: result.segmentation.boundaries(),
        change_points: result.change_points(),
        split_log: &result.split_log,
        timings: args.tuning.timings.then_some(Timings {
            load_seconds: loaded,
            detect_seconds: detected,
        }),
    };
    emit_json(args.output.as_deref(), &doc)
}
