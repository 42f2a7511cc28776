//! k-nearest-neighbour class probabilities with leave-one-out estimation.
//!
//! Pairwise distances over the whole series are computed once and reused for
//! every segment. Neighbours tied at the k-th distance share the remaining
//! slots equally, so predictions do not depend on row order and a segment of
//! identical points predicts exactly the leave-one-out prior.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{SegmentBounds, TimeSeriesMatrix};

pub const DEFAULT_KNN_CAP: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    /// Fixed neighbour count; `None` uses `floor(sqrt(v - u))` per segment.
    pub k: Option<usize>,
    /// Largest series the distance cache may be built for.
    pub cap: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self {
            k: None,
            cap: DEFAULT_KNN_CAP,
        }
    }
}

impl KnnParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == Some(0) {
            return Err(Error::invalid("k must be at least 1"));
        }
        if self.cap == 0 {
            return Err(Error::invalid("knn cap must be at least 1"));
        }
        Ok(())
    }

    /// Neighbour count for a segment of `len` observations.
    pub fn resolved_k(&self, len: usize) -> usize {
        let k = self
            .k
            .unwrap_or_else(|| (len as f64).sqrt().floor() as usize);
        k.clamp(1, len.saturating_sub(1).max(1))
    }
}

/// Symmetric matrix of Euclidean distances between all rows.
#[derive(Clone, Debug)]
pub struct DistanceCache {
    n: usize,
    dist: Vec<f64>,
}

impl DistanceCache {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Distance between rows `i` and `j` (0-based).
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Builds the distance cache, refusing series longer than `cap`.
pub fn build_distance_cache(x: &TimeSeriesMatrix, cap: usize) -> Result<DistanceCache> {
    let n = x.n();
    if n > cap {
        return Err(Error::TooLarge { n, cap });
    }
    let mut dist = vec![0.0; n * n];
    dist.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let xi = x.row(i);
        for (j, d) in row.iter_mut().enumerate() {
            // evaluate each unordered pair in a fixed order so d(i,j) == d(j,i)
            *d = if i < j {
                euclidean(xi, x.row(j))
            } else if i > j {
                euclidean(x.row(j), xi)
            } else {
                0.0
            };
        }
    });
    Ok(DistanceCache { n, dist })
}

/// Leave-one-out class-1 probabilities for `(u, v]` split at `s`, with
/// `k = floor(sqrt(v - u))`.
pub fn loo_predict(cache: &DistanceCache, bounds: SegmentBounds, s: usize) -> Result<Vec<f64>> {
    loo_predict_with_k(
        cache,
        bounds,
        s,
        KnnParams::default().resolved_k(bounds.len()),
    )
}

/// Leave-one-out class-1 probabilities with an explicit neighbour count.
pub fn loo_predict_with_k(
    cache: &DistanceCache,
    bounds: SegmentBounds,
    s: usize,
    k: usize,
) -> Result<Vec<f64>> {
    let SegmentBounds { u, v } = bounds;
    if v > cache.n() || v < u + 2 {
        return Err(Error::invalid(format!(
            "segment ({u}, {v}] must hold at least two of the {} cached rows",
            cache.n()
        )));
    }
    if !bounds.is_split(s) {
        return Err(Error::invalid(format!(
            "split {s} is not inside ({u}, {v})"
        )));
    }
    let m = v - u;
    if k == 0 || k >= m {
        return Err(Error::invalid(format!(
            "k = {k} must lie in [1, {}] for a segment of {m} observations",
            m - 1
        )));
    }
    // row r (0-based) is in class 1 when r < s
    let probs = (u..v)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(m - 1),
            |buf: &mut Vec<f64>, i| {
                let row = cache.row(i);
                buf.clear();
                buf.extend((u..v).filter(|&j| j != i).map(|j| row[j]));
                let (_, kth, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
                let r = *kth;
                let (mut closer, mut closer1, mut tied, mut tied1) =
                    (0usize, 0usize, 0usize, 0usize);
                for j in (u..v).filter(|&j| j != i) {
                    let dj = row[j];
                    let class1 = (j < s) as usize;
                    if dj < r {
                        closer += 1;
                        closer1 += class1;
                    } else if dj == r {
                        tied += 1;
                        tied1 += class1;
                    }
                }
                let share = (k - closer) as f64 / tied as f64;
                (closer1 as f64 + share * tied1 as f64) / k as f64
            },
        )
        .collect();
    Ok(probs)
}
