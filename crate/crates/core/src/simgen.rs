//! Seeded generators for simulated and dataset-derived benchmark series.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{DetRng, StreamKey};
use crate::types::{Segmentation, TimeSeriesMatrix};

pub const CIM_SHIFT: f64 = 2.0;
pub const CIC_RHO: f64 = 0.7;
pub const DIRICHLET_BOUNDARIES: [usize; 12] =
    [0, 100, 130, 220, 320, 370, 520, 620, 740, 790, 870, 1000];
pub const DIRICHLET_DIM: usize = 20;
pub const DIRICHLET_MAX_ALPHA: f64 = 0.2;

/// A series with its true segmentation.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSeries {
    pub x: TimeSeriesMatrix,
    pub truth: Segmentation,
}

impl LabeledSeries {
    /// The series as a classification table, one class per segment.
    pub fn to_dataset(&self) -> LabeledDataset {
        LabeledDataset {
            x: self.x.clone(),
            labels: self.truth.labels(),
        }
    }
}

/// Observations with integer class labels, row order irrelevant.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub x: TimeSeriesMatrix,
    pub labels: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(x: TimeSeriesMatrix, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != x.n() {
            return Err(Error::invalid(format!(
                "{} labels for {} rows",
                labels.len(),
                x.n()
            )));
        }
        Ok(Self { x, labels })
    }

    /// Row indices of each class, classes in increasing label order.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let k = self.labels.iter().max().map_or(0, |m| m + 1);
        let mut rows = vec![Vec::new(); k];
        for (i, &l) in self.labels.iter().enumerate() {
            rows[l].push(i);
        }
        rows.retain(|r| !r.is_empty());
        rows
    }
}

fn gen_rng(seed: u64, tag: u64) -> DetRng {
    StreamKey::new(seed).derive(&[0x0053_494d, tag]).rng()
}

fn normal(rng: &mut DetRng) -> f64 {
    StandardNormal.sample(rng)
}

fn three_segments(seed: u64, tag: u64, middle: impl Fn(&mut DetRng, &mut [f64])) -> LabeledSeries {
    let (n, d) = (600, 5);
    let mut rng = gen_rng(seed, tag);
    let mut data = vec![0.0; n * d];
    for (i, row) in data.chunks_mut(d).enumerate() {
        if (200..400).contains(&i) {
            middle(&mut rng, row);
        } else {
            row.iter_mut().for_each(|v| *v = normal(&mut rng));
        }
    }
    LabeledSeries {
        x: TimeSeriesMatrix::new(data, n, d).expect("finite by construction"),
        truth: Segmentation::new(vec![0, 200, 400, 600]).expect("valid"),
    }
}

/// Change in mean: `n = 600`, `d = 5`, standard normal with mean `2` on
/// `(200, 400]`.
pub fn gen_cim(seed: u64) -> LabeledSeries {
    three_segments(seed, 1, |rng, row| {
        row.iter_mut().for_each(|v| *v = normal(rng) + CIM_SHIFT)
    })
}

/// Change in covariance: `n = 600`, `d = 5`, standard normal margins with
/// pairwise correlation `0.7` on `(200, 400]`.
pub fn gen_cic(seed: u64) -> LabeledSeries {
    // symmetric square root a I + b 11^T of (1 - rho) I + rho 11^T
    let d = 5.0;
    let a = (1.0 - CIC_RHO).sqrt();
    let b = ((1.0 + (d - 1.0) * CIC_RHO).sqrt() - a) / d;
    three_segments(seed, 2, move |rng, row| {
        let z: Vec<f64> = (0..row.len()).map(|_| normal(rng)).collect();
        let total: f64 = z.iter().sum();
        for (v, zi) in row.iter_mut().zip(&z) {
            *v = a * zi + b * total;
        }
    })
}

/// Draw from a Dirichlet distribution with possibly tiny parameters.
///
/// Uses `G = G' U^(1/alpha)` with `G' ~ Gamma(alpha + 1)`, evaluated in log
/// space so that small parameters do not underflow every coordinate to zero.
fn dirichlet_row(rng: &mut DetRng, alpha: &[f64], out: &mut [f64]) {
    let mut logs: Vec<f64> = alpha
        .iter()
        .map(|&a| {
            let g: f64 = Gamma::new(a + 1.0, 1.0)
                .expect("positive shape")
                .sample(rng);
            let u: f64 = rng.random::<f64>();
            g.ln() + (1.0 - u).ln() / a
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for l in &mut logs {
        *l = (*l - max).exp();
        total += *l;
    }
    for (o, l) in out.iter_mut().zip(&logs) {
        *o = l / total;
    }
}

fn dirichlet_alpha(rng: &mut DetRng, d: usize) -> Vec<f64> {
    (0..d)
        .map(|_| loop {
            let a = rng.random_range(0.0..DIRICHLET_MAX_ALPHA);
            if a > 0.0 {
                break a;
            }
        })
        .collect()
}

fn dirichlet_series(lengths: &[usize], d: usize, rng: &mut DetRng) -> Result<LabeledSeries> {
    let truth = Segmentation::from_lengths(lengths)?;
    let n = truth.n();
    let mut data = vec![0.0; n * d];
    for seg in truth.segments() {
        let alpha = dirichlet_alpha(rng, d);
        for row in data[seg.u * d..seg.v * d].chunks_mut(d) {
            dirichlet_row(rng, &alpha, row);
        }
    }
    Ok(LabeledSeries {
        x: TimeSeriesMatrix::new(data, n, d)?,
        truth,
    })
}

/// Dirichlet setup: `n = 1000`, `d = 20`, ten change points, per-segment
/// parameters uniform on `[0, 0.2]`.
pub fn gen_dirichlet(seed: u64) -> LabeledSeries {
    let lengths: Vec<usize> = DIRICHLET_BOUNDARIES
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect();
    dirichlet_series(&lengths, DIRICHLET_DIM, &mut gen_rng(seed, 3)).expect("fixed layout")
}

/// Concatenates the classes of a dataset in random order, each class's rows
/// shuffled, after dropping classes with fewer than `delta n` rows.
pub fn gen_dataset_concat(data: &LabeledDataset, delta: f64, seed: u64) -> Result<LabeledSeries> {
    let n = data.x.n();
    let mut classes: Vec<Vec<usize>> = data
        .classes()
        .into_iter()
        .filter(|c| c.len() as f64 >= delta * n as f64)
        .collect();
    if classes.len() < 2 {
        return Err(Error::invalid(format!(
            "{} classes have at least delta * n = {} rows, need 2",
            classes.len(),
            delta * n as f64
        )));
    }
    let mut rng = gen_rng(seed, 4);
    classes.shuffle(&mut rng);
    let mut order = Vec::with_capacity(n);
    let mut lengths = Vec::with_capacity(classes.len());
    for c in &mut classes {
        c.shuffle(&mut rng);
        lengths.push(c.len());
        order.extend_from_slice(c);
    }
    Ok(LabeledSeries {
        x: data.x.select_rows(&order)?,
        truth: Segmentation::from_lengths(&lengths)?,
    })
}

/// Segment lengths `round(n N_k)` with `N_k = 1/(10K) + 0.9 E_k / sum E`,
/// `E_k ~ Exp(1)`, repaired to sum to `n` by adjusting the largest segments.
pub fn variable_segment_lengths(n: usize, k: usize, rng: &mut DetRng) -> Result<Vec<usize>> {
    if k == 0 || n < 20 * k {
        return Err(Error::invalid(format!(
            "variable-length segments need K >= 1 and n >= 20 K, got n = {n}, K = {k}"
        )));
    }
    let e: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = e.iter().sum();
    let base = 1.0 / (10.0 * k as f64);
    let mut lengths: Vec<i64> = e
        .iter()
        .map(|&x| (n as f64 * (base + 0.9 * x / total)).round() as i64)
        .collect();
    let mut by_size: Vec<usize> = (0..k).collect();
    by_size.sort_by(|&a, &b| lengths[b].cmp(&lengths[a]).then(a.cmp(&b)));
    let residual = n as i64 - lengths.iter().sum::<i64>();
    for &idx in by_size
        .iter()
        .cycle()
        .take(residual.unsigned_abs() as usize)
    {
        lengths[idx] += residual.signum();
    }
    Ok(lengths.into_iter().map(|l| l as usize).collect())
}

/// Source of variable-length segment data.
#[derive(Clone, Copy, Debug)]
pub enum VariableSource<'a> {
    /// Dirichlet segments of dimension `d`.
    Dirichlet { d: usize },
    /// Rows resampled from a dataset's classes plus standard normal noise.
    DatasetResample(&'a LabeledDataset),
}

/// Divides each column by the square root of its average within-class
/// variance.
pub fn normalize_within_class(data: &LabeledDataset) -> Result<TimeSeriesMatrix> {
    let classes = data.classes();
    let d = data.x.d();
    let scale: Vec<f64> = (0..d)
        .map(|j| {
            let vars: Vec<f64> = classes
                .iter()
                .map(|rows| {
                    let m = rows.len() as f64;
                    let mean = rows.iter().map(|&i| data.x.get(i, j)).sum::<f64>() / m;
                    rows.iter()
                        .map(|&i| (data.x.get(i, j) - mean).powi(2))
                        .sum::<f64>()
                        / m
                })
                .collect();
            let avg = vars.iter().sum::<f64>() / vars.len() as f64;
            if avg > 0.0 {
                avg.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    data.x.map_columns(|j, v| v / scale[j])
}

/// `K` segments of random lengths summing to `n`.
pub fn gen_variable_k(
    source: VariableSource<'_>,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<LabeledSeries> {
    let mut rng = gen_rng(seed, 5);
    let lengths = variable_segment_lengths(n, k, &mut rng)?;
    match source {
        VariableSource::Dirichlet { d } => {
            if d == 0 {
                return Err(Error::invalid("dimension must be at least 1"));
            }
            dirichlet_series(&lengths, d, &mut rng)
        }
        VariableSource::DatasetResample(data) => Ok(resample_segments(data, &lengths, &mut rng)?.0),
    }
}

/// Resampled series and the class drawn for each segment.
fn resample_segments(
    data: &LabeledDataset,
    lengths: &[usize],
    rng: &mut DetRng,
) -> Result<(LabeledSeries, Vec<usize>)> {
    let classes = data.classes();
    if classes.len() < 2 {
        return Err(Error::invalid("resampling needs at least two classes"));
    }
    let x = normalize_within_class(data)?;
    let d = x.d();
    let n: usize = lengths.iter().sum();
    let mut out = Vec::with_capacity(n * d);
    let mut drawn = Vec::with_capacity(lengths.len());
    for &len in lengths {
        let class = loop {
            let c = rng.random_range(0..classes.len());
            if drawn.last() != Some(&c) {
                break c;
            }
        };
        drawn.push(class);
        let rows = &classes[class];
        for _ in 0..len {
            let r = rows[rng.random_range(0..rows.len())];
            out.extend(x.row(r).iter().map(|v| v + normal(rng)));
        }
    }
    let series = LabeledSeries {
        x: TimeSeriesMatrix::new(out, n, d)?,
        truth: Segmentation::from_lengths(lengths)?,
    };
    Ok((series, drawn))
}

/// The rows of the largest class (the first on ties) in random order.
pub fn gen_homogeneous_shuffle(data: &LabeledDataset, seed: u64) -> Result<TimeSeriesMatrix> {
    let classes = data.classes();
    let mut largest = classes
        .iter()
        .reduce(|best, c| if c.len() > best.len() { c } else { best })
        .ok_or(Error::EmptyTable)?
        .clone();
    largest.shuffle(&mut gen_rng(seed, 6));
    data.x.select_rows(&largest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn correlation(x: &TimeSeriesMatrix, rows: std::ops::Range<usize>, a: usize, b: usize) -> f64 {
        let m = rows.len() as f64;
        let mean = |j| rows.clone().map(|i| x.get(i, j)).sum::<f64>() / m;
        let (ma, mb) = (mean(a), mean(b));
        let cov = rows
            .clone()
            .map(|i| (x.get(i, a) - ma) * (x.get(i, b) - mb))
            .sum::<f64>();
        let va = rows
            .clone()
            .map(|i| (x.get(i, a) - ma).powi(2))
            .sum::<f64>();
        let vb = rows
            .clone()
            .map(|i| (x.get(i, b) - mb).powi(2))
            .sum::<f64>();
        cov / (va * vb).sqrt()
    }

    fn mean_offdiag(x: &TimeSeriesMatrix, rows: std::ops::Range<usize>) -> f64 {
        let mut acc = 0.0;
        for a in 0..5 {
            for b in a + 1..5 {
                acc += correlation(x, rows.clone(), a, b);
            }
        }
        acc / 10.0
    }

    #[test]
    fn cim_layout_and_means() {
        let mut avg = 0.0;
        for seed in 0..50 {
            let s = gen_cim(seed);
            assert_eq!(s.truth.boundaries(), &[0, 200, 400, 600]);
            avg += (200..400).flat_map(|i| s.x.row(i).to_vec()).sum::<f64>() / 1000.0;
        }
        assert_abs_diff_eq!(avg / 50.0, 2.0, epsilon = 0.05);
        assert_eq!(gen_cim(9), gen_cim(9));
        assert_ne!(gen_cim(9), gen_cim(10));
    }

    #[test]
    fn cic_correlations() {
        let (mut mid, mut outer) = (0.0, 0.0);
        for seed in 0..50 {
            let s = gen_cic(seed);
            assert_eq!(s.truth.boundaries(), &[0, 200, 400, 600]);
            mid += mean_offdiag(&s.x, 200..400);
            outer += 0.5 * (mean_offdiag(&s.x, 0..200) + mean_offdiag(&s.x, 400..600));
        }
        assert_abs_diff_eq!(mid / 50.0, 0.7, epsilon = 0.03);
        assert_abs_diff_eq!(outer / 50.0, 0.0, epsilon = 0.03);
    }

    #[test]
    fn dirichlet_rows_are_on_the_simplex() {
        let s = gen_dirichlet(4);
        assert_eq!(s.truth.boundaries(), &DIRICHLET_BOUNDARIES);
        assert_eq!(s.truth.change_points().len(), 10);
        for i in 0..s.x.n() {
            let row = s.x.row(i);
            assert!(row.iter().all(|&v| v >= 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert_eq!(gen_dirichlet(4), s);
    }

    fn iris_shaped() -> LabeledDataset {
        let rows: Vec<Vec<f64>> = (0..150).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let labels = (0..150).map(|i| i / 50).collect();
        LabeledDataset::new(TimeSeriesMatrix::from_rows(&rows).unwrap(), labels).unwrap()
    }

    #[test]
    fn concat_keeps_balanced_classes() {
        let s = gen_dataset_concat(&iris_shaped(), 0.01, 3).unwrap();
        assert_eq!(s.truth.lengths(), vec![50, 50, 50]);
        assert_eq!(s, gen_dataset_concat(&iris_shaped(), 0.01, 3).unwrap());
        // each segment holds exactly one class
        for seg in s.truth.segments() {
            let class = s.x.get(seg.u, 0) as usize / 50;
            assert!((seg.u..seg.v).all(|i| s.x.get(i, 0) as usize / 50 == class));
        }
    }

    #[test]
    fn concat_drops_small_classes() {
        let rows: Vec<Vec<f64>> = (0..1000).map(|i| vec![i as f64]).collect();
        let labels = (0..1000).map(|i| if i < 3 { 2 } else { i % 2 }).collect();
        let data =
            LabeledDataset::new(TimeSeriesMatrix::from_rows(&rows).unwrap(), labels).unwrap();
        let s = gen_dataset_concat(&data, 0.01, 1).unwrap();
        assert_eq!(s.truth.n_segments(), 2);
        assert_eq!(s.x.n(), 997);
        let single = LabeledDataset::new(data.x.clone(), vec![0; 1000]).unwrap();
        assert!(gen_dataset_concat(&single, 0.01, 1).is_err());
    }

    #[test]
    fn variable_lengths_sum_to_n() {
        for seed in 0..50 {
            let mut rng = gen_rng(seed, 99);
            let e_free = variable_segment_lengths(2000, 20, &mut rng).unwrap();
            assert_eq!(e_free.iter().sum::<usize>(), 2000);
            assert!(e_free.iter().all(|&l| l >= 10));
        }
        assert!(variable_segment_lengths(100, 20, &mut gen_rng(0, 0)).is_err());
    }

    #[test]
    fn repair_moves_each_segment_by_at_most_one() {
        for seed in 0..50 {
            let (n, k) = (1234, 17);
            let mut rng = gen_rng(seed, 98);
            let mut replay = rng.clone();
            let lengths = variable_segment_lengths(n, k, &mut rng).unwrap();
            let e: Vec<f64> = (0..k).map(|_| Exp1.sample(&mut replay)).collect();
            let total: f64 = e.iter().sum();
            for (l, x) in lengths.iter().zip(&e) {
                let raw = (n as f64 * (1.0 / (10.0 * k as f64) + 0.9 * x / total)).round();
                assert!((*l as f64 - raw).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn resampled_segments_alternate_classes() {
        let data = iris_shaped();
        for seed in 0..10 {
            let s = gen_variable_k(VariableSource::DatasetResample(&data), 400, 10, seed).unwrap();
            assert_eq!(s.x.n(), 400);
            assert_eq!(s.truth.n_segments(), 10);
            let lengths = s.truth.lengths();
            let (_, classes) = resample_segments(&data, &lengths, &mut gen_rng(seed, 7)).unwrap();
            assert!(classes.windows(2).all(|w| w[0] != w[1]));
        }
        let s = gen_variable_k(VariableSource::Dirichlet { d: 20 }, 2000, 20, 1).unwrap();
        assert_eq!(s.truth.n(), 2000);
        assert_eq!(s.truth.n_segments(), 20);
    }

    #[test]
    fn within_class_normalisation_gives_unit_average_variance() {
        let data = iris_shaped();
        let x = normalize_within_class(&data).unwrap();
        let normalized = LabeledDataset::new(x, data.labels.clone()).unwrap();
        let again = normalize_within_class(&normalized).unwrap();
        for (a, b) in again.as_slice().iter().zip(normalized.x.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn homogeneous_shuffle_takes_largest_class() {
        let cim = gen_cim(5);
        let h = gen_homogeneous_shuffle(&cim.to_dataset(), 5).unwrap();
        assert_eq!(h.n(), 200);
        let mut got: Vec<Vec<u64>> = (0..200)
            .map(|i| h.row(i).iter().map(|v| v.to_bits()).collect())
            .collect();
        let mut want: Vec<Vec<u64>> = (0..200)
            .map(|i| cim.x.row(i).iter().map(|v| v.to_bits()).collect())
            .collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);
        assert_eq!(h, gen_homogeneous_shuffle(&cim.to_dataset(), 5).unwrap());
        let dir = gen_homogeneous_shuffle(&gen_dirichlet(1).to_dataset(), 1).unwrap();
        assert_eq!(dir.n(), 150);
    }
}
