//! Binary random forest with out-of-bag class-probability estimates.
//!
//! Each tree is grown on a bootstrap sample of the segment's `v - u` rows
//! using Gini splits at midpoints between sorted distinct values. The
//! out-of-bag probability of an observation averages, over the trees whose
//! bootstrap sample excluded it, the class-1 frequency of the leaf it falls
//! into (or, optionally, the trees' majority votes). Observations no tree
//! left out fall back to their leave-one-out prior.

mod tree;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use tree::{FitData, TreeSettings};
pub use tree::{Node, Tree};

use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::types::{SegmentBounds, TimeSeriesMatrix};

/// A tree, its bootstrap counts and its `(vote, frequency)` per observation.
type FittedTree = (Tree, Vec<u32>, Vec<(bool, f64)>);

/// How the out-of-bag trees of an observation are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OobAggregation {
    /// Mean class-1 frequency of the leaves reached.
    #[default]
    Probability,
    /// Fraction of trees whose leaf majority is class 1.
    Vote,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows trees to purity.
    pub max_depth: Option<usize>,
    /// Features considered per split; `None` means `floor(sqrt(d))`.
    pub mtry: Option<usize>,
    /// Minimum bootstrap weight of each child.
    pub min_leaf: usize,
    pub aggregation: OobAggregation,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: Some(8),
            mtry: None,
            min_leaf: 1,
            aggregation: OobAggregation::Probability,
        }
    }
}

impl ForestParams {
    pub fn validate(&self, d: Option<usize>) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::invalid("n_trees must be at least 1"));
        }
        if self.min_leaf == 0 {
            return Err(Error::invalid("min_leaf must be at least 1"));
        }
        match (self.mtry, d) {
            (Some(0), _) => Err(Error::invalid("mtry must be at least 1")),
            (Some(k), Some(d)) if k > d => Err(Error::invalid(format!(
                "mtry = {k} exceeds the number of features {d}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn resolved_mtry(&self, d: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| (d as f64).sqrt().floor() as usize)
            .clamp(1, d.max(1))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OobPrediction {
    /// Class-1 probability for each observation of `(u, v]`.
    pub probs: Vec<f64>,
    /// Number of trees that left each observation out of their sample.
    pub oob_counts: Vec<u32>,
}

/// A forest fitted on one segment and split.
#[derive(Debug)]
pub struct RandomForest {
    bounds: SegmentBounds,
    split: usize,
    aggregation: OobAggregation,
    trees: Vec<Tree>,
    /// Bootstrap multiplicity of each observation, per tree.
    in_bag: Vec<Vec<u32>>,
    /// Class-1 vote of each tree for each observation.
    votes: Vec<Vec<bool>>,
    /// Leaf class-1 frequency of each tree for each observation.
    freqs: Vec<Vec<f64>>,
}

impl RandomForest {
    /// Fits a forest separating `(u, s]` from `(s, v]`. Tree `t` draws from
    /// the stream `key.derive(&[t])`, so the result is independent of the
    /// number of worker threads.
    pub fn fit(
        x: &TimeSeriesMatrix,
        bounds: SegmentBounds,
        s: usize,
        params: &ForestParams,
        key: StreamKey,
    ) -> Result<Self> {
        let SegmentBounds { u, v } = bounds;
        if v > x.n() || u >= v {
            return Err(Error::invalid(format!(
                "segment ({u}, {v}] is out of range for n = {}",
                x.n()
            )));
        }
        if v - u < 2 {
            return Err(Error::invalid(format!(
                "segment ({u}, {v}] needs at least two observations"
            )));
        }
        if !bounds.is_split(s) {
            return Err(Error::invalid(format!(
                "split {s} leaves a class of ({u}, {v}] empty"
            )));
        }
        params.validate(Some(x.d()))?;

        let m = v - u;
        let values = (0..x.d())
            .map(|j| (u..v).map(|i| x.get(i, j)).collect())
            .collect();
        let labels = (u + 1..=v).map(|i| i <= s).collect();
        let data = FitData::new(values, labels);
        let settings = TreeSettings {
            max_depth: params.max_depth,
            mtry: params.resolved_mtry(x.d()),
            min_leaf: params.min_leaf,
        };

        let fitted: Vec<FittedTree> = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = key.derive(&[t as u64]).rng();
                let mut counts = vec![0u32; m];
                for _ in 0..m {
                    counts[rng.random_range(0..m)] += 1;
                }
                let tree = Tree::grow(&data, &counts, &settings, &mut rng);
                let votes = (0..m).map(|i| tree.predict_local(&data, i)).collect();
                (tree, counts, votes)
            })
            .collect();

        let mut trees = Vec::with_capacity(fitted.len());
        let mut in_bag = Vec::with_capacity(fitted.len());
        let mut votes = Vec::with_capacity(fitted.len());
        let mut freqs = Vec::with_capacity(fitted.len());
        for (t, c, p) in fitted {
            trees.push(t);
            in_bag.push(c);
            let (v, f) = p.into_iter().unzip();
            votes.push(v);
            freqs.push(f);
        }
        Ok(Self {
            bounds,
            split: s,
            aggregation: params.aggregation,
            trees,
            in_bag,
            votes,
            freqs,
        })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Bootstrap multiplicities of tree `t`, indexed by offset in `(u, v]`.
    pub fn in_bag_counts(&self, t: usize) -> &[u32] {
        &self.in_bag[t]
    }

    /// Class-1 vote of tree `t` for each observation of the segment.
    pub fn tree_votes(&self, t: usize) -> &[bool] {
        &self.votes[t]
    }

    /// Leaf class-1 frequency of tree `t` for each observation.
    pub fn tree_frequencies(&self, t: usize) -> &[f64] {
        &self.freqs[t]
    }

    fn tree_output(&self, t: usize, i: usize) -> f64 {
        match self.aggregation {
            OobAggregation::Probability => self.freqs[t][i],
            OobAggregation::Vote => self.votes[t][i] as u8 as f64,
        }
    }

    /// Out-of-bag class-1 probabilities, with the leave-one-out prior where no
    /// tree left the observation out.
    pub fn predict_oob(&self) -> OobPrediction {
        let SegmentBounds { u, v } = self.bounds;
        let m = v - u;
        let mut ones = vec![0f64; m];
        let mut counts = vec![0u32; m];
        for (t, bag) in self.in_bag.iter().enumerate() {
            for i in 0..m {
                if bag[i] == 0 {
                    counts[i] += 1;
                    ones[i] += self.tree_output(t, i);
                }
            }
        }
        let probs = (0..m)
            .map(|k| {
                if counts[k] == 0 {
                    let left = if u + k < self.split {
                        self.split - u - 1
                    } else {
                        self.split - u
                    };
                    left as f64 / (m - 1) as f64
                } else {
                    ones[k] / counts[k] as f64
                }
            })
            .collect();
        OobPrediction {
            probs,
            oob_counts: counts,
        }
    }

    /// Predictions averaged over all trees, including those trained on the
    /// observation itself. Biased; kept for diagnostics.
    pub fn predict_in_sample(&self) -> Vec<f64> {
        let m = self.bounds.len();
        let n_trees = self.trees.len();
        (0..m)
            .map(|i| (0..n_trees).map(|t| self.tree_output(t, i)).sum::<f64>() / n_trees as f64)
            .collect()
    }
}

/// Fits a forest on `(u, v]` split at `s` and returns its out-of-bag
/// predictions.
pub fn fit_predict_oob(
    x: &TimeSeriesMatrix,
    bounds: SegmentBounds,
    s: usize,
    params: &ForestParams,
    key: StreamKey,
) -> Result<OobPrediction> {
    Ok(RandomForest::fit(x, bounds, s, params, key)?.predict_oob())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::oob_prior;
    use crate::rng::make_rng_stream;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_series(n1: usize, n2: usize, shift: f64, seed: u64) -> TimeSeriesMatrix {
        let mut rng = make_rng_stream(seed, 99);
        let data = (0..n1 + n2)
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut rng);
                if i < n1 {
                    z
                } else {
                    z + shift
                }
            })
            .collect();
        TimeSeriesMatrix::new(data, n1 + n2, 1).unwrap()
    }

    #[test]
    fn separated_gaussians_are_recovered() {
        let x = gaussian_series(500, 500, 10.0, 1);
        let bounds = SegmentBounds::new(0, 1000).unwrap();
        let pred =
            fit_predict_oob(&x, bounds, 500, &ForestParams::default(), StreamKey::new(1)).unwrap();
        let err: f64 = pred
            .probs
            .iter()
            .enumerate()
            .map(|(k, p)| (p - if k < 500 { 1.0 } else { 0.0 }).abs())
            .sum::<f64>()
            / 1000.0;
        assert!(err < 0.1, "mean absolute error {err}");
    }

    #[test]
    fn no_signal_predictions_track_the_prior() {
        let bounds = SegmentBounds::new(0, 200).unwrap();
        let mut total = 0.0;
        for seed in 0..20 {
            let x = gaussian_series(100, 100, 0.0, 100 + seed);
            let pred = fit_predict_oob(
                &x,
                bounds,
                100,
                &ForestParams::default(),
                StreamKey::new(seed),
            )
            .unwrap();
            total += pred.probs.iter().sum::<f64>() / 200.0;
        }
        let avg = total / 20.0;
        let prior = oob_prior(1, 100, bounds).unwrap();
        assert!((avg - prior).abs() < 0.1, "average {avg} vs prior {prior}");
    }

    #[test]
    fn single_tree_falls_back_to_prior() {
        let x = gaussian_series(30, 30, 1.0, 3);
        let bounds = SegmentBounds::new(0, 60).unwrap();
        let params = ForestParams {
            n_trees: 1,
            ..ForestParams::default()
        };
        let pred = fit_predict_oob(&x, bounds, 30, &params, StreamKey::new(3)).unwrap();
        let missing: Vec<usize> = (0..60).filter(|&k| pred.oob_counts[k] == 0).collect();
        assert!(!missing.is_empty());
        for k in missing {
            assert_eq!(pred.probs[k], oob_prior(k + 1, 30, bounds).unwrap());
        }
    }

    #[test]
    fn oob_votes_never_come_from_in_bag_trees() {
        let x = gaussian_series(40, 40, 1.0, 4);
        let bounds = SegmentBounds::new(0, 80).unwrap();
        let forest =
            RandomForest::fit(&x, bounds, 40, &ForestParams::default(), StreamKey::new(4)).unwrap();
        let oob = forest.predict_oob();
        for k in 0..80 {
            let (mut total, mut count) = (0.0, 0u32);
            for t in 0..forest.trees().len() {
                if forest.in_bag_counts(t)[k] == 0 {
                    count += 1;
                    total += forest.tree_frequencies(t)[k];
                }
            }
            assert_eq!(count, oob.oob_counts[k]);
            if count > 0 {
                assert_eq!(oob.probs[k], total / count as f64);
            }
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let x = gaussian_series(60, 60, 0.5, 5);
        let bounds = SegmentBounds::new(10, 120).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    fit_predict_oob(&x, bounds, 70, &ForestParams::default(), StreamKey::new(9))
                        .unwrap()
                })
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn trees_respect_depth_and_leaf_rules() {
        let x = gaussian_series(100, 100, 0.3, 6);
        let bounds = SegmentBounds::new(0, 200).unwrap();
        let params = ForestParams {
            n_trees: 10,
            max_depth: Some(3),
            min_leaf: 5,
            ..ForestParams::default()
        };
        let forest = RandomForest::fit(&x, bounds, 100, &params, StreamKey::new(6)).unwrap();
        for tree in forest.trees() {
            assert!(tree.depth() <= 3);
            for node in tree.nodes() {
                if let Node::Leaf {
                    weight1,
                    weight2,
                    depth,
                    ..
                } = *node
                {
                    let pure = weight1 == 0 || weight2 == 0;
                    assert!(pure || depth == 3 || weight1 + weight2 >= 5);
                    assert!(weight1 + weight2 >= 5);
                }
            }
        }
    }

    #[test]
    fn rejects_empty_class_and_tiny_segment() {
        let x = gaussian_series(5, 5, 0.0, 7);
        let p = ForestParams::default();
        let k = StreamKey::new(0);
        assert!(fit_predict_oob(&x, SegmentBounds::new(0, 10).unwrap(), 10, &p, k).is_err());
        assert!(fit_predict_oob(&x, SegmentBounds::new(0, 10).unwrap(), 0, &p, k).is_err());
        assert!(fit_predict_oob(&x, SegmentBounds { u: 3, v: 4 }, 3, &p, k).is_err());
    }
}
