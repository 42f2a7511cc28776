use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::engine::ClassifierEngine;
use crate::config::DetectionConfig;
use crate::error::{Error, Result};
use crate::likelihood::{
    approximate_gain_curve, argmax_first, candidate_range, likelihoods_from_predictions,
    max_gain_permuted, GainCurve, LikelihoodMatrix,
};
use crate::rng::StreamKey;
use crate::types::{SegmentBounds, TimeSeriesMatrix};

const STEP_ONE: u64 = 1;
const STEP_TWO: u64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoStepResult {
    pub s_hat: usize,
    pub s1: usize,
    /// Distinct initial guesses at the quartiles of the segment.
    pub initial_guesses: Vec<usize>,
    pub likelihoods: LikelihoodMatrix,
    /// Step-one approximate gain curve of each initial guess.
    pub initial_curves: Vec<GainCurve>,
    pub final_gain_curve: GainCurve,
}

impl TwoStepResult {
    /// Largest step-one approximate gain, the statistic of the permutation
    /// test.
    pub fn max_initial_gain(&self) -> f64 {
        self.initial_curves
            .iter()
            .map(|c| c.max_gain)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `floor((3u+v)/4)`, `floor((u+v)/2)` and `floor((u+3v)/4)`, deduplicated and
/// restricted to proper splits of `(u, v]`.
pub fn initial_guesses(bounds: SegmentBounds) -> Vec<usize> {
    let SegmentBounds { u, v } = bounds;
    let mut g = vec![(3 * u + v) / 4, (u + v) / 2, (u + 3 * v) / 4];
    g.dedup();
    g.retain(|&s| bounds.is_split(s));
    g
}

/// Two-step search for a single change point in `(u, v]`.
///
/// The engine is fitted at each initial guess; the split maximising the
/// largest of the resulting approximate gains is refitted, and the maximiser
/// of the refitted curve is returned. Fit `j` uses the stream
/// `key.derive(&[step, split])`.
pub fn two_step_search<E: ClassifierEngine + ?Sized>(
    x: &TimeSeriesMatrix,
    bounds: SegmentBounds,
    engine: &E,
    config: &DetectionConfig,
    key: StreamKey,
) -> Result<TwoStepResult> {
    let n = x.n();
    let too_short = Error::SegmentTooShort {
        u: bounds.u,
        v: bounds.v,
    };
    if bounds.v > n || candidate_range(bounds, config.delta, n).is_none() {
        return Err(too_short);
    }
    let guesses = initial_guesses(bounds);
    if guesses.is_empty() {
        return Err(too_short);
    }

    let fit = |s: usize, step: u64| -> Result<(Vec<f64>, Vec<f64>)> {
        let pred = engine.predict(x, bounds, s, key.derive(&[step, s as u64]))?;
        likelihoods_from_predictions(&pred, s, bounds, config.eta, config.ratio_rule)
    };

    let step_one: Vec<(Vec<f64>, Vec<f64>)> = guesses
        .par_iter()
        .map(|&s| fit(s, STEP_ONE))
        .collect::<Result<_>>()?;
    let initial_curves = step_one
        .iter()
        .map(|(l1, l2)| approximate_gain_curve(l1, l2, bounds, config.delta, n))
        .collect::<Result<Vec<_>>>()?;

    let combined: Vec<f64> = (0..initial_curves[0].values.len())
        .map(|k| {
            initial_curves
                .iter()
                .map(|c| c.values[k])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let s1 = initial_curves[0].first_split + argmax_first(&combined).0;

    let (l1, l2) = fit(s1, STEP_TWO)?;
    let final_gain_curve = approximate_gain_curve(&l1, &l2, bounds, config.delta, n)?;

    let (ell1, ell2) = step_one.into_iter().unzip();
    Ok(TwoStepResult {
        s_hat: final_gain_curve.argmax,
        s1,
        likelihoods: LikelihoodMatrix {
            segment: bounds,
            guesses: guesses.clone(),
            ell1,
            ell2,
        },
        initial_guesses: guesses,
        initial_curves,
        final_gain_curve,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PermutationTestResult {
    /// Observed maximal approximate gain over splits and guesses.
    pub g0: f64,
    pub permuted_gains: Vec<f64>,
    pub p_value: f64,
}

fn max_gain(lm: &LikelihoodMatrix, perm: &[usize], lo: usize, hi: usize) -> f64 {
    lm.ell1
        .iter()
        .zip(&lm.ell2)
        .map(|(l1, l2)| max_gain_permuted(l1, l2, perm, lo, hi))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Pseudo-permutation test on the step-one likelihoods.
///
/// Each permutation reorders the observations of the segment, jointly for
/// both classes and all guesses, and recomputes the maximal approximate gain.
/// The p-value counts the observed statistic as one of the permutations.
pub fn pseudo_permutation_test(
    likelihoods: &LikelihoodMatrix,
    delta: f64,
    n: usize,
    permutations: usize,
    key: StreamKey,
) -> Result<PermutationTestResult> {
    let bounds = likelihoods.segment;
    let range = candidate_range(bounds, delta, n).ok_or(Error::SegmentTooShort {
        u: bounds.u,
        v: bounds.v,
    })?;
    if likelihoods.n_guesses() == 0 {
        return Err(Error::invalid("likelihood matrix has no guesses"));
    }
    let (lo, hi) = (range.start() - bounds.u, range.end() - bounds.u);
    let mut perm: Vec<usize> = (0..bounds.len()).collect();
    let g0 = max_gain(likelihoods, &perm, lo, hi);

    let mut rng = key.rng();
    let permuted_gains: Vec<f64> = (0..permutations)
        .map(|_| {
            perm.shuffle(&mut rng);
            max_gain(likelihoods, &perm, lo, hi)
        })
        .collect();
    let exceed = 1 + permuted_gains.iter().filter(|&&g| g >= g0).count();
    Ok(PermutationTestResult {
        g0,
        p_value: exceed as f64 / (permutations + 1) as f64,
        permuted_gains,
    })
}
