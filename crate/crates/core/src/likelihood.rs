//! Classifier log-likelihood ratios and approximate gain curves.
//!
//! A classifier trained to separate `(u, s]` (class 1) from `(s, v]` (class 2)
//! yields class-1 probabilities `p_i`. Each observation contributes
//!
//! ```text
//! l_{i,1} = log_eta(min(1, p_i / pi_i))
//! l_{i,2} = log_eta(min(1, (1 - p_i) / (1 - pi_i)))
//! ```
//!
//! where `pi_i` is the leave-one-out class-1 prior of observation `i`, so a
//! classifier without information contributes zero on average. By default the
//! scaled ratio enters the capped logarithm as is, bounded above by
//! `1 / pi_i`; [`RatioRule::Clamped`] instead caps it at one, which discards
//! the reward for confident correct predictions. A zero prior contributes
//! zero. The approximate gain of a split `t` is
//! `sum_{i <= t} l_{i,1} + sum_{i > t} l_{i,2}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{min_segment_len, SegmentBounds};

/// `log((1 - eta) x + eta)`, a logarithm bounded below by `log(eta)`.
#[inline]
pub fn log_eta(x: f64, eta: f64) -> f64 {
    ((1.0 - eta) * x + eta).ln()
}

/// Leave-one-out prior of class 1 for observation `i` (1-based, `u < i <= v`)
/// under the split `s`: the share of class-1 observations among the other
/// `v - u - 1` observations of the segment.
pub fn oob_prior(i: usize, s: usize, bounds: SegmentBounds) -> Result<f64> {
    let SegmentBounds { u, v } = bounds;
    if v < u + 2 {
        return Err(Error::invalid(format!(
            "segment ({u}, {v}] needs at least two observations"
        )));
    }
    if !(u < s && s < v) {
        return Err(Error::invalid(format!(
            "split {s} is not inside ({u}, {v})"
        )));
    }
    if !(u < i && i <= v) {
        return Err(Error::invalid(format!(
            "observation {i} is not in ({u}, {v}]"
        )));
    }
    Ok(prior_unchecked(i, s, u, v))
}

#[inline]
fn prior_unchecked(i: usize, s: usize, u: usize, v: usize) -> f64 {
    let left = if i <= s { s - u - 1 } else { s - u };
    left as f64 / (v - u - 1) as f64
}

/// Treatment of the prior-scaled prediction before the capped logarithm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioRule {
    /// `p / prior`, at most `1 / prior`.
    #[default]
    Scaled,
    /// `min(1, p / prior)`, so every contribution is at most zero.
    Clamped,
}

/// Scaled ratio under `rule`; a zero prior carries no information.
#[inline]
fn scaled_ratio(p: f64, prior: f64, rule: RatioRule) -> f64 {
    if prior <= 0.0 {
        return 1.0;
    }
    match rule {
        RatioRule::Scaled => p / prior,
        RatioRule::Clamped => (p / prior).min(1.0),
    }
}

/// Per-observation log-likelihood ratios `(l_1, l_2)` from class-1
/// probabilities `pred` of the observations in `(u, v]`.
pub fn likelihoods_from_predictions(
    pred: &[f64],
    s: usize,
    bounds: SegmentBounds,
    eta: f64,
    rule: RatioRule,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let SegmentBounds { u, v } = bounds;
    if pred.len() != bounds.len() {
        return Err(Error::invalid(format!(
            "expected {} predictions, got {}",
            bounds.len(),
            pred.len()
        )));
    }
    // validates bounds and split
    oob_prior(u + 1, s, bounds)?;
    let mut ell1 = Vec::with_capacity(pred.len());
    let mut ell2 = Vec::with_capacity(pred.len());
    for (offset, &p) in pred.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!(
                "prediction {p} for observation {} is outside [0, 1]",
                u + offset + 1
            )));
        }
        let prior = prior_unchecked(u + offset + 1, s, u, v);
        ell1.push(log_eta(scaled_ratio(p, prior, rule), eta));
        ell2.push(log_eta(scaled_ratio(1.0 - p, 1.0 - prior, rule), eta));
    }
    Ok((ell1, ell2))
}

/// Approximate gain as a function of the split, restricted to the guarded
/// candidate range.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GainCurve {
    pub segment: SegmentBounds,
    /// Split corresponding to `values[0]`.
    pub first_split: usize,
    pub values: Vec<f64>,
    pub argmax: usize,
    pub max_gain: f64,
}

impl GainCurve {
    pub fn value_at(&self, s: usize) -> Option<f64> {
        s.checked_sub(self.first_split)
            .and_then(|k| self.values.get(k).copied())
    }

    pub fn splits(&self) -> std::ops::Range<usize> {
        self.first_split..self.first_split + self.values.len()
    }

    /// `(split, gain)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.splits().zip(self.values.iter().copied())
    }
}

/// Candidate splits `u + 1 + m ..= v - m` with `m = ceil(delta n)`, or `None`
/// when the range is empty.
pub fn candidate_range(
    bounds: SegmentBounds,
    delta: f64,
    n: usize,
) -> Option<std::ops::RangeInclusive<usize>> {
    let m = min_segment_len(delta, n);
    let lo = bounds.u + 1 + m;
    let hi = bounds.v.checked_sub(m)?;
    (lo <= hi).then_some(lo..=hi)
}

/// Approximate gain curve over the guarded candidate range, via prefix sums.
/// Ties resolve to the smallest split.
pub fn approximate_gain_curve(
    ell1: &[f64],
    ell2: &[f64],
    bounds: SegmentBounds,
    delta: f64,
    n: usize,
) -> Result<GainCurve> {
    if ell1.len() != bounds.len() || ell2.len() != bounds.len() {
        return Err(Error::invalid(format!(
            "likelihood arrays must have length {}, got {} and {}",
            bounds.len(),
            ell1.len(),
            ell2.len()
        )));
    }
    let range = candidate_range(bounds, delta, n).ok_or(Error::SegmentTooShort {
        u: bounds.u,
        v: bounds.v,
    })?;
    let (lo, hi) = (*range.start(), *range.end());
    let values = gain_values(ell1, ell2, lo - bounds.u, hi - bounds.u);
    let (k, max_gain) = argmax_first(&values);
    Ok(GainCurve {
        segment: bounds,
        first_split: lo,
        values,
        argmax: lo + k,
        max_gain,
    })
}

/// Gains for local splits `lo..=hi`, where local split `t` puts the first `t`
/// observations in class 1.
pub(crate) fn gain_values(ell1: &[f64], ell2: &[f64], lo: usize, hi: usize) -> Vec<f64> {
    let mut gain: f64 = ell2.iter().sum();
    let mut values = Vec::with_capacity(hi + 1 - lo);
    for t in 0..=hi {
        if t >= lo {
            values.push(gain);
        }
        if t < ell1.len() {
            gain += ell1[t] - ell2[t];
        }
    }
    values
}

/// Maximum of the gain over local splits `lo..=hi` of rows visited in the
/// order `perm`.
pub(crate) fn max_gain_permuted(
    ell1: &[f64],
    ell2: &[f64],
    perm: &[usize],
    lo: usize,
    hi: usize,
) -> f64 {
    let mut gain: f64 = perm.iter().map(|&i| ell2[i]).sum();
    let mut best = f64::NEG_INFINITY;
    for (t, &i) in perm.iter().enumerate().take(hi + 1) {
        if t >= lo && gain > best {
            best = gain;
        }
        gain += ell1[i] - ell2[i];
    }
    if hi == perm.len() && gain > best {
        best = gain;
    }
    best
}

pub(crate) fn argmax_first(values: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, &g) in values.iter().enumerate() {
        if g > best.1 {
            best = (k, g);
        }
    }
    best
}

/// Step-one log-likelihood ratios of a segment: one `(l_1, l_2)` pair of
/// columns per initial guess.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LikelihoodMatrix {
    pub segment: SegmentBounds,
    pub guesses: Vec<usize>,
    /// `ell1[j][i - u - 1]`
    pub ell1: Vec<Vec<f64>>,
    pub ell2: Vec<Vec<f64>>,
}

impl LikelihoodMatrix {
    pub fn n_guesses(&self) -> usize {
        self.guesses.len()
    }

    /// Entry for observation `i` (1-based), class `k` in `{1, 2}`, guess `j`.
    pub fn get(&self, i: usize, k: usize, j: usize) -> f64 {
        let row = i - self.segment.u - 1;
        match k {
            1 => self.ell1[j][row],
            2 => self.ell2[j][row],
            _ => panic!("class index must be 1 or 2, got {k}"),
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.ell1
            .iter()
            .chain(self.ell2.iter())
            .flat_map(|c| c.iter().copied())
    }
}
