//! Agreement between segmentations: adjusted Rand index and relative
//! Hausdorff distances between boundary sets.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::Segmentation;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub ari: f64,
    /// Largest relative distance from a true boundary to its nearest estimate.
    pub d_true_to_est: f64,
    pub d_est_to_true: f64,
    pub hausdorff: f64,
    pub n_est_changepoints: usize,
}

impl MetricReport {
    pub fn new(truth: &Segmentation, estimate: &Segmentation) -> Result<Self> {
        let ari = adjusted_rand_index(truth, estimate)?;
        let (d_true_to_est, d_est_to_true, hausdorff) = hausdorff_distances(truth, estimate)?;
        Ok(Self {
            ari,
            d_true_to_est,
            d_est_to_true,
            hausdorff,
            n_est_changepoints: estimate.change_points().len(),
        })
    }
}

fn same_n(a: &Segmentation, b: &Segmentation) -> Result<usize> {
    if a.n() != b.n() {
        return Err(Error::invalid(format!(
            "segmentations cover different lengths {} and {}",
            a.n(),
            b.n()
        )));
    }
    Ok(a.n())
}

fn pairs(k: f64) -> f64 {
    k * (k - 1.0) / 2.0
}

/// Hubert-Arabie adjusted Rand index of the two partitions into segments.
pub fn adjusted_rand_index(a: &Segmentation, b: &Segmentation) -> Result<f64> {
    let n = same_n(a, b)?;
    // contingency cells are overlaps of consecutive segments: walk both
    // boundary lists in step
    let (ba, bb) = (a.boundaries(), b.boundaries());
    let (mut i, mut j, mut pos) = (1, 1, 0);
    let mut index = 0.0;
    while pos < n {
        let end = ba[i].min(bb[j]);
        index += pairs((end - pos) as f64);
        pos = end;
        if ba[i] == end {
            i += 1;
        }
        if bb[j] == end {
            j += 1;
        }
    }
    let sum_a: f64 = a.lengths().iter().map(|&l| pairs(l as f64)).sum();
    let sum_b: f64 = b.lengths().iter().map(|&l| pairs(l as f64)).sum();
    let total = pairs(n as f64);
    let expected = if total > 0.0 {
        sum_a * sum_b / total
    } else {
        0.0
    };
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return Ok(if a == b { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

/// Largest relative distance from a boundary of `a` to the nearest boundary
/// of `b`, both including `0` and `n`.
pub fn directed_hausdorff(a: &Segmentation, b: &Segmentation) -> Result<f64> {
    let n = same_n(a, b)?;
    let bb = b.boundaries();
    let worst = a
        .boundaries()
        .iter()
        .map(|&x| {
            let k = bb.partition_point(|&y| y < x);
            let right = bb.get(k).map_or(usize::MAX, |&y| y - x);
            let left = if k > 0 { x - bb[k - 1] } else { usize::MAX };
            left.min(right)
        })
        .max()
        .unwrap_or(0);
    Ok(worst as f64 / n as f64)
}

/// `(d(a, b), d(b, a), max)`.
pub fn hausdorff_distances(a: &Segmentation, b: &Segmentation) -> Result<(f64, f64, f64)> {
    let ab = directed_hausdorff(a, b)?;
    let ba = directed_hausdorff(b, a)?;
    Ok((ab, ba, ab.max(ba)))
}
