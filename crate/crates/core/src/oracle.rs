//! Exact expected gains under the Bayes classifier for piecewise i.i.d.
//! sequences on a finite support.
//!
//! With the population class probabilities the classifier log-likelihood
//! ratio of an observation `x` from segment `(a, b]` of a candidate
//! segmentation reduces to `log(p_(a,b](x) / p_(0,n](x))`, where `p_(u,v]` is
//! the length-weighted mixture of the true distributions over `(u, v]`. These
//! functions evaluate the expectations exactly so that structural properties
//! of the gain can be checked without sampling noise.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{SegmentBounds, Segmentation};

/// Probability vector over the support `0..m`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    p: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::invalid(format!("invalid probability vector {p:?}")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { p })
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn support(&self) -> usize {
        self.p.len()
    }

    /// Kullback-Leibler divergence `KL(self || other)`.
    pub fn kl(&self, other: &Self) -> f64 {
        self.p
            .iter()
            .zip(&other.p)
            .filter(|(&a, _)| a > 0.0)
            .map(|(&a, &b)| a * (a / b).ln())
            .sum()
    }

    /// Index drawn with probabilities `p`.
    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, &p) in self.p.iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        self.p.len() - 1
    }
}

/// A true segmentation with one distribution per segment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PopulationModel {
    truth: Segmentation,
    dists: Vec<DiscreteDistribution>,
}

impl PopulationModel {
    pub fn new(truth: Segmentation, dists: Vec<DiscreteDistribution>) -> Result<Self> {
        if dists.len() != truth.n_segments() {
            return Err(Error::invalid(format!(
                "{} distributions for {} segments",
                dists.len(),
                truth.n_segments()
            )));
        }
        if dists.windows(2).any(|w| w[0].support() != w[1].support()) {
            return Err(Error::invalid("distributions must share a support"));
        }
        if dists.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid(
                "adjacent segments must have distinct distributions",
            ));
        }
        Ok(Self { truth, dists })
    }

    /// Random model of length `n` with `segments` segments on a support of
    /// size `m`, all probabilities at least `0.05 / m`.
    pub fn random(rng: &mut impl Rng, n: usize, segments: usize, m: usize) -> Result<Self> {
        if segments == 0 || segments > n || m < 2 {
            return Err(Error::invalid(format!(
                "cannot build {segments} segments over n = {n} with support {m}"
            )));
        }
        let mut cuts: Vec<usize> = (1..n).collect();
        for k in 0..segments - 1 {
            let j = rng.random_range(k..cuts.len());
            cuts.swap(k, j);
        }
        cuts.truncate(segments - 1);
        let truth = Segmentation::from_change_points(n, &cuts)?;
        let dists = (0..segments)
            .map(|_| {
                let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + 0.05).collect();
                let total: f64 = raw.iter().sum();
                DiscreteDistribution::new(raw.iter().map(|r| r / total).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(truth, dists)
    }

    pub fn truth(&self) -> &Segmentation {
        &self.truth
    }

    pub fn dists(&self) -> &[DiscreteDistribution] {
        &self.dists
    }

    pub fn n(&self) -> usize {
        self.truth.n()
    }

    pub fn support(&self) -> usize {
        self.dists[0].support()
    }

    /// Distribution of observation `i` (1-based).
    pub fn distribution_of(&self, i: usize) -> &DiscreteDistribution {
        let k = self.truth.boundaries().partition_point(|&b| b < i) - 1;
        &self.dists[k]
    }

    /// `(distribution index, overlap length)` of the true segments meeting
    /// `(u, v]`.
    fn overlaps(&self, u: usize, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.truth
            .segments()
            .enumerate()
            .filter_map(move |(k, seg)| {
                let lo = seg.u.max(u);
                let hi = seg.v.min(v);
                (lo < hi).then(|| (k, hi - lo))
            })
    }

    /// Sum over observations in `(u, v]` of `E log(num(x) / den(x))`.
    fn expected_log_ratio(&self, u: usize, v: usize, num: &[f64], den: &[f64]) -> f64 {
        self.overlaps(u, v)
            .map(|(k, len)| {
                let e: f64 = self.dists[k]
                    .p
                    .iter()
                    .zip(num.iter().zip(den))
                    .filter(|(&p, _)| p > 0.0)
                    .map(|(&p, (&a, &b))| p * (a / b).ln())
                    .sum();
                len as f64 * e
            })
            .sum()
    }
}

fn check_bounds(model: &PopulationModel, bounds: SegmentBounds) -> Result<()> {
    if bounds.u >= bounds.v || bounds.v > model.n() {
        return Err(Error::invalid(format!(
            "segment ({}, {}] is out of range for n = {}",
            bounds.u,
            bounds.v,
            model.n()
        )));
    }
    Ok(())
}

/// Length-weighted mixture of the true distributions over `(u, v]`.
pub fn mixture(model: &PopulationModel, bounds: SegmentBounds) -> Result<DiscreteDistribution> {
    check_bounds(model, bounds)?;
    let mut p = vec![0.0; model.support()];
    for (k, len) in model.overlaps(bounds.u, bounds.v) {
        for (acc, &q) in p.iter_mut().zip(&model.dists[k].p) {
            *acc += len as f64 * q;
        }
    }
    let len = bounds.len() as f64;
    p.iter_mut().for_each(|x| *x /= len);
    // renormalise rounding drift
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    DiscreteDistribution::new(p)
}

/// Expected gain of the segmentation `alpha` under the Bayes classifier:
/// `sum_k sum_{i in (a_{k-1}, a_k]} E log(p_(a_{k-1}, a_k](x_i) / p_(0, n](x_i))`.
pub fn bayes_expected_gain(model: &PopulationModel, alpha: &Segmentation) -> Result<f64> {
    if alpha.n() != model.n() {
        return Err(Error::invalid(format!(
            "segmentation covers {} observations, model {}",
            alpha.n(),
            model.n()
        )));
    }
    let all = mixture(model, SegmentBounds { u: 0, v: model.n() })?;
    alpha
        .segments()
        .map(|seg| {
            let part = mixture(model, seg)?;
            Ok(model.expected_log_ratio(seg.u, seg.v, &part.p, &all.p))
        })
        .sum()
}

/// Expected gain of splitting `(u, v]` at `s`, for `s = u..=v`; the ends are
/// zero.
pub fn bayes_split_gain_curve(model: &PopulationModel, bounds: SegmentBounds) -> Result<Vec<f64>> {
    check_bounds(model, bounds)?;
    let SegmentBounds { u, v } = bounds;
    let all = mixture(model, bounds)?;
    (u..=v)
        .map(|s| {
            let mut g = 0.0;
            if s > u {
                let left = mixture(model, SegmentBounds { u, v: s })?;
                g += model.expected_log_ratio(u, s, &left.p, &all.p);
            }
            if s < v {
                let right = mixture(model, SegmentBounds { u: s, v })?;
                g += model.expected_log_ratio(s, v, &right.p, &all.p);
            }
            Ok(g)
        })
        .collect()
}

/// Expected approximate gain for `s = u..=v` when the Bayes classifier is
/// trained once at `s0`.
pub fn bayes_approximate_gain_curve(
    model: &PopulationModel,
    bounds: SegmentBounds,
    s0: usize,
) -> Result<Vec<f64>> {
    check_bounds(model, bounds)?;
    let SegmentBounds { u, v } = bounds;
    if !bounds.is_split(s0) {
        return Err(Error::invalid(format!(
            "initial guess {s0} is not inside ({u}, {v})"
        )));
    }
    let all = mixture(model, bounds)?;
    let left = mixture(model, SegmentBounds { u, v: s0 })?;
    let right = mixture(model, SegmentBounds { u: s0, v })?;
    Ok((u..=v)
        .map(|s| {
            model.expected_log_ratio(u, s, &left.p, &all.p)
                + model.expected_log_ratio(s, v, &right.p, &all.p)
        })
        .collect())
}

/// Every segmentation of `n` observations; `2^(n-1)` of them.
pub fn all_segmentations(n: usize) -> Result<Vec<Segmentation>> {
    if n == 0 || n > 20 {
        return Err(Error::invalid(format!(
            "cannot enumerate segmentations of n = {n}"
        )));
    }
    (0u32..1 << (n - 1))
        .map(|mask| {
            let cps: Vec<usize> = (1..n).filter(|&c| mask >> (c - 1) & 1 == 1).collect();
            Segmentation::from_change_points(n, &cps)
        })
        .collect()
}

/// Whether `alpha` contains every boundary of `base`.
pub fn is_oversegmentation(alpha: &Segmentation, base: &Segmentation) -> bool {
    base.boundaries()
        .iter()
        .all(|b| alpha.boundaries().binary_search(b).is_ok())
}

/// Segmentations attaining the largest expected gain, within a relative
/// tolerance `rtol`.
pub fn exhaustive_maximizers(model: &PopulationModel, rtol: f64) -> Result<Vec<Segmentation>> {
    let all = all_segmentations(model.n())?;
    let gains = all
        .iter()
        .map(|a| bayes_expected_gain(model, a))
        .collect::<Result<Vec<_>>>()?;
    let best = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = rtol * best.abs().max(1.0);
    Ok(all
        .into_iter()
        .zip(gains)
        .filter(|(_, g)| *g >= best - tol)
        .map(|(a, _)| a)
        .collect())
}

/// The maximiser of the expected gain with the fewest boundaries, or `None`
/// when that is not unique.
pub fn minimal_maximizer(model: &PopulationModel, rtol: f64) -> Result<Option<Segmentation>> {
    let maxima = exhaustive_maximizers(model, rtol)?;
    let fewest = maxima.iter().map(|a| a.n_segments()).min();
    let mut smallest: Vec<Segmentation> = maxima
        .into_iter()
        .filter(|a| Some(a.n_segments()) == fewest)
        .collect();
    Ok((smallest.len() == 1).then(|| smallest.remove(0)))
}

/// Second differences `g[s+1] - 2 g[s] + g[s-1]`, indexed by the middle
/// offset `s = 1..len-1`.
pub fn second_differences(g: &[f64]) -> Vec<f64> {
    g.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect()
}

/// Whether the split gain curve on `(u, v]` has non-negative second
/// differences at every split whose neighbours lie in the same true segment.
pub fn split_curve_is_piecewise_convex(
    model: &PopulationModel,
    bounds: SegmentBounds,
    atol: f64,
) -> Result<bool> {
    let g = bayes_split_gain_curve(model, bounds)?;
    let b = model.truth().boundaries();
    Ok(second_differences(&g).iter().enumerate().all(|(k, &dd)| {
        let s = bounds.u + k + 1;
        // s-1 and s+1 in one closed segment [a_{j-1}, a_j] means no boundary
        // strictly inside (s-1, s+1), i.e. s itself is not a true boundary
        b.binary_search(&s).is_ok() || dd >= -atol
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::make_rng_stream;
    use approx::assert_relative_eq;

    fn dist(p: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(p.to_vec()).unwrap()
    }

    fn model(b: &[usize], ps: &[&[f64]]) -> PopulationModel {
        PopulationModel::new(
            Segmentation::new(b.to_vec()).unwrap(),
            ps.iter().map(|p| dist(p)).collect(),
        )
        .unwrap()
    }

    fn two_block() -> PopulationModel {
        model(&[0, 3, 6], &[&[0.9, 0.1], &[0.1, 0.9]])
    }

    #[test]
    fn mixtures() {
        let m = model(&[0, 2, 4], &[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(
            mixture(&m, SegmentBounds { u: 0, v: 4 }).unwrap().probs(),
            &[0.5, 0.5]
        );
        assert_eq!(
            mixture(&m, SegmentBounds { u: 0, v: 2 }).unwrap().probs(),
            &[1.0, 0.0]
        );
        let m = model(&[0, 2, 5, 9], &[&[0.2, 0.8], &[0.6, 0.4], &[0.3, 0.7]]);
        let got = mixture(&m, SegmentBounds { u: 1, v: 7 }).unwrap();
        let mut want = [0.0; 2];
        for i in 2..=7 {
            for (w, p) in want.iter_mut().zip(m.distribution_of(i).probs()) {
                *w += p / 6.0;
            }
        }
        assert_relative_eq!(got.probs()[0], want[0], max_relative = 1e-12);
        assert_relative_eq!(got.probs()[1], want[1], max_relative = 1e-12);
    }

    #[test]
    fn identical_segments_give_zero_gain() {
        let m = model(&[0, 6], &[&[0.3, 0.7]]);
        for alpha in all_segmentations(6).unwrap() {
            assert!(bayes_expected_gain(&m, &alpha).unwrap().abs() < 1e-15);
        }
        assert!(PopulationModel::new(
            Segmentation::new(vec![0, 3, 6]).unwrap(),
            vec![dist(&[0.3, 0.7]), dist(&[0.3, 0.7])]
        )
        .is_err());
    }

    #[test]
    fn expected_gain_at_truth_is_weighted_kl() {
        let m = two_block();
        let g = bayes_expected_gain(&m, m.truth()).unwrap();
        let mid = dist(&[0.5, 0.5]);
        let want = 3.0 * dist(&[0.9, 0.1]).kl(&mid) + 3.0 * dist(&[0.1, 0.9]).kl(&mid);
        assert_relative_eq!(g, want, max_relative = 1e-12);
        assert_eq!(
            bayes_expected_gain(&m, &Segmentation::trivial(6).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn exhaustive_scan_recovers_truth() {
        let m = two_block();
        let maxima = exhaustive_maximizers(&m, 1e-10).unwrap();
        assert!(maxima.contains(m.truth()));
        assert!(maxima.iter().all(|a| is_oversegmentation(a, m.truth())));
        assert_eq!(
            minimal_maximizer(&m, 1e-10).unwrap().as_ref(),
            Some(m.truth())
        );
    }

    #[test]
    fn split_curve_without_change_is_zero() {
        let m = model(&[0, 4, 8], &[&[0.2, 0.8], &[0.7, 0.3]]);
        let g = bayes_split_gain_curve(&m, SegmentBounds { u: 0, v: 4 }).unwrap();
        assert!(g.iter().all(|&x| x.abs() < 1e-15));
        let g = bayes_split_gain_curve(&m, SegmentBounds { u: 0, v: 8 }).unwrap();
        let (k, _) = crate::likelihood::argmax_first(&g);
        assert_eq!(k, 4);
    }

    #[test]
    fn approximate_curve_is_linear_with_kink_at_change() {
        let m = model(&[0, 5, 12], &[&[0.2, 0.5, 0.3], &[0.6, 0.1, 0.3]]);
        let b = SegmentBounds { u: 0, v: 12 };
        for s0 in 1..12 {
            let g = bayes_approximate_gain_curve(&m, b, s0).unwrap();
            for (k, dd) in second_differences(&g).iter().enumerate() {
                if k + 1 != 5 {
                    assert!(dd.abs() < 1e-12, "s0 = {s0}, s = {}", k + 1);
                }
            }
            let (k, best) = crate::likelihood::argmax_first(&g);
            assert_eq!(k, 5);
            assert!(g.iter().enumerate().all(|(j, &x)| j == 5 || x < best));
            // increments positive before the change and negative after
            for (j, w) in g.windows(2).enumerate() {
                assert!(if j < 5 { w[1] > w[0] } else { w[1] < w[0] });
            }
        }
    }

    #[test]
    fn balanced_guess_gives_flat_curve() {
        let m = model(&[0, 4, 8, 12], &[&[0.8, 0.2], &[0.1, 0.9], &[0.8, 0.2]]);
        let g = bayes_approximate_gain_curve(&m, SegmentBounds { u: 0, v: 12 }, 6).unwrap();
        assert!(g.iter().all(|&x| x.abs() < 1e-12), "{g:?}");
    }

    #[test]
    fn two_change_points_give_convex_pieces() {
        let m = model(&[0, 3, 7, 10], &[&[0.7, 0.3], &[0.2, 0.8], &[0.5, 0.5]]);
        assert!(split_curve_is_piecewise_convex(&m, SegmentBounds { u: 0, v: 10 }, 1e-12).unwrap());
    }

    #[test]
    fn monte_carlo_agrees_with_exact_gain() {
        let m = two_block();
        let alpha = Segmentation::new(vec![0, 2, 6]).unwrap();
        let exact = bayes_expected_gain(&m, &alpha).unwrap();
        let all = mixture(&m, SegmentBounds { u: 0, v: 6 }).unwrap();
        let parts: Vec<DiscreteDistribution> =
            alpha.segments().map(|s| mixture(&m, s).unwrap()).collect();
        let labels = alpha.labels();
        let mut rng = make_rng_stream(17, 0);
        let reps = 1_000_000;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..reps {
            let mut g = 0.0;
            for i in 1..=6 {
                let x = m.distribution_of(i).sample(&mut rng);
                g += (parts[labels[i - 1]].probs()[x] / all.probs()[x]).ln();
            }
            sum += g;
            sum2 += g * g;
        }
        let mean = sum / reps as f64;
        let se = ((sum2 / reps as f64 - mean * mean) / reps as f64).sqrt();
        assert!(
            (mean - exact).abs() < 3.0 * se,
            "{mean} vs {exact} (se {se})"
        );
    }

    #[test]
    fn random_models_are_valid() {
        let mut rng = make_rng_stream(1, 0);
        for _ in 0..20 {
            let m = PopulationModel::random(&mut rng, 8, 3, 3).unwrap();
            assert_eq!(m.truth().n_segments(), 3);
            assert_eq!(m.support(), 3);
        }
        assert!(PopulationModel::random(&mut rng, 3, 4, 2).is_err());
    }
}
