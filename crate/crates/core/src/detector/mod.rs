//! Binary segmentation driven by classifier two-step search and the
//! pseudo-permutation test.

mod engine;
mod search;

pub use engine::{ClassifierEngine, CountingEngine, ForestEngine, KnnEngine, PriorEngine};
pub use search::{
    initial_guesses, pseudo_permutation_test, two_step_search, PermutationTestResult, TwoStepResult,
};

use serde::Serialize;

use crate::config::{DetectionConfig, Method};
use crate::error::{Error, Result};
use crate::meanshift::mean_binary_segmentation;
use crate::rng::StreamKey;
use crate::types::{SegmentBounds, Segmentation, TimeSeriesMatrix};

const PERMUTATION: u64 = 3;

/// One segment visited by binary segmentation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitRecord {
    pub bounds: SegmentBounds,
    pub s_hat: usize,
    /// Intermediate estimate of the two-step search; equals `s_hat` for the
    /// change-in-mean baseline.
    pub s1: usize,
    pub initial_guesses: Vec<usize>,
    /// Test statistic: the largest step-one approximate gain, or the largest
    /// mean gain for the baseline.
    pub max_gain: f64,
    /// Gain at `s_hat` on the final curve.
    pub split_gain: f64,
    /// Permutation p-value; absent for the threshold-based baseline.
    pub p_value: Option<f64>,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectionResult {
    pub segmentation: Segmentation,
    /// Visited segments in pre-order: a segment, then its left subtree, then
    /// its right subtree.
    pub split_log: Vec<SplitRecord>,
}

impl DetectionResult {
    pub fn change_points(&self) -> &[usize] {
        self.segmentation.change_points()
    }

    pub(crate) fn from_log(n: usize, split_log: Vec<SplitRecord>) -> Result<Self> {
        let accepted: Vec<usize> = split_log
            .iter()
            .filter(|r| r.accepted)
            .map(|r| r.s_hat)
            .collect();
        Ok(Self {
            segmentation: Segmentation::from_change_points(n, &accepted)?,
            split_log,
        })
    }
}

/// Whether binary segmentation stops at `(u, v]`: `v - u < 2 delta n`.
pub(crate) fn below_minimum(bounds: SegmentBounds, delta: f64, n: usize) -> bool {
    (bounds.len() as f64) < 2.0 * delta * n as f64
}

/// Stream of segment `(u, v]`, independent of the order segments are visited.
pub(crate) fn segment_key(config: &DetectionConfig, bounds: SegmentBounds) -> StreamKey {
    StreamKey::new(config.seed).derive(&[bounds.u as u64, bounds.v as u64])
}

/// Two-step search on `bounds` with the random stream binary segmentation
/// uses for that segment.
pub fn search_segment<E: ClassifierEngine + ?Sized>(
    x: &TimeSeriesMatrix,
    bounds: SegmentBounds,
    engine: &E,
    config: &DetectionConfig,
) -> Result<TwoStepResult> {
    config.validate(Some(x.n()))?;
    two_step_search(x, bounds, engine, config, segment_key(config, bounds))
}

/// Recursive binary segmentation with a classifier engine.
pub fn binary_segmentation<E: ClassifierEngine + ?Sized>(
    x: &TimeSeriesMatrix,
    engine: &E,
    config: &DetectionConfig,
) -> Result<DetectionResult> {
    config.validate(Some(x.n()))?;
    let root = SegmentBounds { u: 0, v: x.n() };
    let log = visit(x, engine, config, root)?;
    DetectionResult::from_log(x.n(), log)
}

fn visit<E: ClassifierEngine + ?Sized>(
    x: &TimeSeriesMatrix,
    engine: &E,
    config: &DetectionConfig,
    bounds: SegmentBounds,
) -> Result<Vec<SplitRecord>> {
    let n = x.n();
    if below_minimum(bounds, config.delta, n) {
        return Ok(Vec::new());
    }
    let key = segment_key(config, bounds);
    let search = match two_step_search(x, bounds, engine, config, key) {
        Ok(s) => s,
        Err(Error::SegmentTooShort { .. }) => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let test = pseudo_permutation_test(
        &search.likelihoods,
        config.delta,
        n,
        config.permutations,
        key.derive(&[PERMUTATION]),
    )?;
    let accepted = test.p_value <= config.threshold;
    let s_hat = search.s_hat;
    let mut log = vec![SplitRecord {
        bounds,
        s_hat,
        s1: search.s1,
        max_gain: test.g0,
        split_gain: search.final_gain_curve.max_gain,
        initial_guesses: search.initial_guesses,
        p_value: Some(test.p_value),
        accepted,
    }];
    if accepted {
        let left = SegmentBounds {
            u: bounds.u,
            v: s_hat,
        };
        let right = SegmentBounds {
            u: s_hat,
            v: bounds.v,
        };
        let (l, r) = rayon::join(
            || visit(x, engine, config, left),
            || visit(x, engine, config, right),
        );
        log.extend(l?);
        log.extend(r?);
    }
    Ok(log)
}

/// Runs detection with the engine named in `config.method`.
pub fn detect(x: &TimeSeriesMatrix, config: &DetectionConfig) -> Result<DetectionResult> {
    config.validate(Some(x.n()))?;
    match &config.method {
        Method::RandomForest(p) => {
            p.validate(Some(x.d()))?;
            binary_segmentation(x, &ForestEngine::new(p.clone()), config)
        }
        Method::Knn(p) => binary_segmentation(x, &KnnEngine::new(x, p.clone())?, config),
        Method::ChangeInMean(p) => mean_binary_segmentation(x, config, p),
    }
}

/// [`detect`] on a row-major `n x d` buffer.
pub fn detect_row_major(
    data: &[f64],
    n: usize,
    d: usize,
    config: &DetectionConfig,
) -> Result<DetectionResult> {
    let x = TimeSeriesMatrix::new(data.to_vec(), n, d)?;
    detect(&x, config)
}
