//! Gaussian change-in-mean baseline with known unit variance.
//!
//! Splitting `(u, v]` at `s` raises the maximised log-likelihood by
//!
//! ```text
//! G(s) = (s - u)(v - s) / (2 (v - u)) * |mean(u, s] - mean(s, v]|^2
//! ```
//!
//! Binary segmentation accepts a split when the largest gain exceeds
//! `gamma = c * d * ln(n)`.

use serde::{Deserialize, Serialize};

use crate::config::DetectionConfig;
use crate::detector::{below_minimum, DetectionResult, SplitRecord};
use crate::error::{Error, Result};
use crate::likelihood::{argmax_first, candidate_range, GainCurve};
use crate::types::{SegmentBounds, TimeSeriesMatrix};

/// Penalty constant `c`, the 95% quantile of the largest root gain on
/// homogeneous standard normal data (`n = 600`, `d = 5`, `delta = 0.01`)
/// divided by `d ln n`.
pub const DEFAULT_PENALTY: f64 = 0.315;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeanShiftParams {
    pub penalty: f64,
    /// Explicit threshold overriding `penalty * d * ln(n)`.
    pub gamma: Option<f64>,
}

impl Default for MeanShiftParams {
    fn default() -> Self {
        Self {
            penalty: DEFAULT_PENALTY,
            gamma: None,
        }
    }
}

impl MeanShiftParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            return Err(Error::invalid(format!(
                "penalty must be positive, got {}",
                self.penalty
            )));
        }
        if let Some(g) = self.gamma {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::invalid(format!(
                    "gamma must be non-negative, got {g}"
                )));
            }
        }
        Ok(())
    }

    pub fn threshold(&self, n: usize, d: usize) -> f64 {
        self.gamma
            .unwrap_or_else(|| self.penalty * d as f64 * (n as f64).ln())
    }
}

/// Column-wise prefix sums of a series.
#[derive(Clone, Debug)]
pub struct MeanPrefix {
    n: usize,
    d: usize,
    cum: Vec<f64>,
}

impl MeanPrefix {
    pub fn new(x: &TimeSeriesMatrix) -> Self {
        let (n, d) = (x.n(), x.d());
        let mut cum = vec![0.0; (n + 1) * d];
        for i in 0..n {
            for j in 0..d {
                cum[(i + 1) * d + j] = cum[i * d + j] + x.get(i, j);
            }
        }
        Self { n, d, cum }
    }

    fn sum(&self, a: usize, b: usize, j: usize) -> f64 {
        self.cum[b * self.d + j] - self.cum[a * self.d + j]
    }

    /// Gain of splitting `(u, v]` at `s`, assuming `u < s < v <= n`.
    pub fn gain(&self, u: usize, s: usize, v: usize) -> f64 {
        let (nl, nr) = ((s - u) as f64, (v - s) as f64);
        let dist2: f64 = (0..self.d)
            .map(|j| {
                let diff = self.sum(u, s, j) / nl - self.sum(s, v, j) / nr;
                diff * diff
            })
            .sum();
        nl * nr / (2.0 * (nl + nr)) * dist2
    }
}

/// Gain of splitting `(u, v]` at `s`.
pub fn mean_gain(x: &TimeSeriesMatrix, bounds: SegmentBounds, s: usize) -> Result<f64> {
    check(x, bounds)?;
    if !bounds.is_split(s) {
        return Err(Error::invalid(format!(
            "split {s} is not inside ({}, {})",
            bounds.u, bounds.v
        )));
    }
    Ok(MeanPrefix::new(x).gain(bounds.u, s, bounds.v))
}

fn check(x: &TimeSeriesMatrix, bounds: SegmentBounds) -> Result<()> {
    if bounds.v > x.n() || bounds.u >= bounds.v {
        return Err(Error::invalid(format!(
            "segment ({}, {}] is out of range for n = {}",
            bounds.u,
            bounds.v,
            x.n()
        )));
    }
    Ok(())
}

fn curve(prefix: &MeanPrefix, bounds: SegmentBounds, delta: f64) -> Result<GainCurve> {
    let range = candidate_range(bounds, delta, prefix.n).ok_or(Error::SegmentTooShort {
        u: bounds.u,
        v: bounds.v,
    })?;
    let first_split = *range.start();
    let values: Vec<f64> = range.map(|s| prefix.gain(bounds.u, s, bounds.v)).collect();
    let (k, max_gain) = argmax_first(&values);
    Ok(GainCurve {
        segment: bounds,
        first_split,
        values,
        argmax: first_split + k,
        max_gain,
    })
}

/// Mean gain over the guarded candidate splits of `(u, v]`.
pub fn mean_gain_curve(
    x: &TimeSeriesMatrix,
    bounds: SegmentBounds,
    delta: f64,
) -> Result<GainCurve> {
    check(x, bounds)?;
    curve(&MeanPrefix::new(x), bounds, delta)
}

/// Binary segmentation with the mean gain, splitting while the largest gain
/// exceeds the threshold.
pub fn mean_binary_segmentation(
    x: &TimeSeriesMatrix,
    config: &DetectionConfig,
    params: &MeanShiftParams,
) -> Result<DetectionResult> {
    config.validate(Some(x.n()))?;
    params.validate()?;
    let prefix = MeanPrefix::new(x);
    let gamma = params.threshold(x.n(), x.d());
    let mut log = Vec::new();
    visit(
        &prefix,
        config.delta,
        gamma,
        SegmentBounds { u: 0, v: x.n() },
        &mut log,
    )?;
    DetectionResult::from_log(x.n(), log)
}

fn visit(
    prefix: &MeanPrefix,
    delta: f64,
    gamma: f64,
    bounds: SegmentBounds,
    log: &mut Vec<SplitRecord>,
) -> Result<()> {
    if below_minimum(bounds, delta, prefix.n) {
        return Ok(());
    }
    let c = match curve(prefix, bounds, delta) {
        Ok(c) => c,
        Err(Error::SegmentTooShort { .. }) => return Ok(()),
        Err(e) => return Err(e),
    };
    let accepted = c.max_gain > gamma;
    log.push(SplitRecord {
        bounds,
        s_hat: c.argmax,
        s1: c.argmax,
        initial_guesses: Vec::new(),
        max_gain: c.max_gain,
        split_gain: c.max_gain,
        p_value: None,
        accepted,
    });
    if accepted {
        visit(
            prefix,
            delta,
            gamma,
            SegmentBounds {
                u: bounds.u,
                v: c.argmax,
            },
            log,
        )?;
        visit(
            prefix,
            delta,
            gamma,
            SegmentBounds {
                u: c.argmax,
                v: bounds.v,
            },
            log,
        )?;
    }
    Ok(())
}
