use classcpd::detector::{search_segment, ClassifierEngine, ForestEngine, KnnEngine, PriorEngine};
use classcpd::meanshift::mean_gain_curve;
use classcpd::{DetectionConfig, Error, Method, SegmentBounds};
use serde::Serialize;

use crate::args::{CurveMethodArg, GainCurveArgs, MethodArg};
use crate::error::CliError;
use crate::output::{emit_csv, load_features};

/// A gain-curve point (`initial`, `final` or `mean` blocks) or the
/// log-likelihood ratios of observation `s` under a guess (`likelihood`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub block: &'static str,
    pub guess: Option<usize>,
    pub s: usize,
    pub gain: Option<f64>,
    pub ell1: Option<f64>,
    pub ell2: Option<f64>,
}

fn point(block: &'static str, guess: Option<usize>, s: usize, gain: f64) -> CurveRow {
    CurveRow {
        block,
        guess,
        s,
        gain: Some(gain),
        ell1: None,
        ell2: None,
    }
}

fn classifier_rows<E: ClassifierEngine + ?Sized>(
    x: &classcpd::TimeSeriesMatrix,
    bounds: SegmentBounds,
    engine: &E,
    config: &DetectionConfig,
) -> Result<Vec<CurveRow>, CliError> {
    let r = search_segment(x, bounds, engine, config)?;
    let mut rows = Vec::new();
    for (g, curve) in r.initial_guesses.iter().zip(&r.initial_curves) {
        rows.extend(curve.iter().map(|(s, v)| point("initial", Some(*g), s, v)));
    }
    rows.extend(
        r.final_gain_curve
            .iter()
            .map(|(s, v)| point("final", Some(r.s1), s, v)),
    );
    let lm = &r.likelihoods;
    for (k, g) in lm.guesses.iter().enumerate() {
        for (j, (a, b)) in lm.ell1[k].iter().zip(&lm.ell2[k]).enumerate() {
            rows.push(CurveRow {
                block: "likelihood",
                guess: Some(*g),
                s: bounds.u + 1 + j,
                gain: None,
                ell1: Some(*a),
                ell2: Some(*b),
            });
        }
    }
    Ok(rows)
}

pub fn curve_rows(
    x: &classcpd::TimeSeriesMatrix,
    bounds: SegmentBounds,
    method: CurveMethodArg,
    config: &DetectionConfig,
) -> Result<Vec<CurveRow>, CliError> {
    match (method, &config.method) {
        (CurveMethodArg::Mean, _) => {
            let curve = mean_gain_curve(x, bounds, config.delta)?;
            Ok(curve
                .iter()
                .map(|(s, v)| point("mean", None, s, v))
                .collect())
        }
        (CurveMethodArg::Prior, _) => classifier_rows(x, bounds, &PriorEngine, config),
        (_, Method::RandomForest(p)) => {
            classifier_rows(x, bounds, &ForestEngine::new(p.clone()), config)
        }
        (_, Method::Knn(p)) => classifier_rows(x, bounds, &KnnEngine::new(x, p.clone())?, config),
        (_, Method::ChangeInMean(_)) => unreachable!("mean handled above"),
    }
}

pub fn run(args: &GainCurveArgs) -> Result<(), CliError> {
    let method = match args.method {
        CurveMethodArg::Knn => MethodArg::Knn,
        CurveMethodArg::Mean => MethodArg::Mean,
        CurveMethodArg::Rf | CurveMethodArg::Prior => MethodArg::Rf,
    };
    let config = args.tuning.config(method);
    config.validate(None).map_err(CliError::usage)?;
    let table = load_features(&args.input)?;
    let n = table.x.n();
    let end = args.end.unwrap_or(n);
    if args.start >= end || end > n {
        return Err(CliError::usage(format!(
            "segment ({}, {end}] is not inside (0, {n}]",
            args.start
        )));
    }
    let bounds = SegmentBounds {
        u: args.start,
        v: end,
    };
    let rows = curve_rows(&table.x, bounds, args.method, &config).map_err(|e| match e {
        CliError::Data(Error::SegmentTooShort { u, v }) => CliError::usage(format!(
            "segment ({u}, {v}] is too short for delta = {}",
            config.delta
        )),
        e => e,
    })?;
    emit_csv(args.output.as_deref(), &rows)
}
