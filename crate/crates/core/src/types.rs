//! Core domain types: the observation matrix, segment bounds and segmentations.
//!
//! Boundaries are always observation counts: a boundary `b` sits after the
//! first `b` rows, and a segment `(u, v]` holds rows `u..v` (0-based).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major `n x d` matrix of observations; row order is time order.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesMatrix {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl TimeSeriesMatrix {
    /// Builds a matrix from row-major data, rejecting empty shapes and
    /// non-finite entries.
    pub fn new(data: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::invalid(format!(
                "matrix must have at least one row and column, got {n}x{d}"
            )));
        }
        if data.len() != n * d {
            return Err(Error::invalid(format!(
                "data length {} does not match shape {n}x{d}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self { data, n, d })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::invalid(format!(
                "row {i} has {} columns, expected {d}",
                rows[i].len()
            )));
        }
        Self::new(rows.concat(), rows.len(), d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Row `i` (0-based).
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    /// Copy of rows `start..end`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        Self::new(
            self.data[start * self.d..end * self.d].to_vec(),
            end - start,
            self.d,
        )
    }

    /// New matrix with rows taken in the order given by `indices`.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self::new(data, indices.len(), self.d)
    }

    pub fn map_columns(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(k, &x)| f(k % self.d, x))
            .collect();
        Self::new(data, self.n, self.d)
    }
}

/// Half-open segment `(u, v]` of observation counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SegmentBounds {
    pub u: usize,
    pub v: usize,
}

impl SegmentBounds {
    pub fn new(u: usize, v: usize) -> Result<Self> {
        if u >= v {
            return Err(Error::invalid(format!(
                "segment bounds need u < v, got ({u}, {v}]"
            )));
        }
        Ok(Self { u, v })
    }

    pub fn len(&self) -> usize {
        self.v - self.u
    }

    pub fn is_empty(&self) -> bool {
        self.u >= self.v
    }

    /// Whether `s` is a proper split, i.e. both sides are non-empty.
    pub fn is_split(&self, s: usize) -> bool {
        self.u < s && s < self.v
    }
}

/// Minimum number of observations per segment, `ceil(delta * n)`.
///
/// A relative tolerance keeps products like `0.01 * 600` from rounding up to
/// the next integer.
pub fn min_segment_len(delta: f64, n: usize) -> usize {
    let raw = delta * n as f64;
    let snapped = raw.round();
    if (raw - snapped).abs() <= 1e-9 * raw.abs().max(1.0) {
        snapped as usize
    } else {
        raw.ceil().max(0.0) as usize
    }
}

/// Ordered boundary set `{0, a_1, ..., n}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Segmentation {
    boundaries: Vec<usize>,
}

impl Segmentation {
    pub fn new(boundaries: Vec<usize>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::invalid(
                "segmentation needs at least the boundaries 0 and n",
            ));
        }
        if boundaries[0] != 0 {
            return Err(Error::invalid("segmentation must start at 0"));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "segmentation boundaries must be strictly increasing: {boundaries:?}"
            )));
        }
        Ok(Self { boundaries })
    }

    /// The single-segment segmentation `{0, n}`.
    pub fn trivial(n: usize) -> Result<Self> {
        Self::new(vec![0, n])
    }

    /// Builds `{0, n}` plus the given change points, which may be unsorted.
    pub fn from_change_points(n: usize, change_points: &[usize]) -> Result<Self> {
        let mut b = Vec::with_capacity(change_points.len() + 2);
        b.push(0);
        let mut cps = change_points.to_vec();
        cps.sort_unstable();
        b.extend(cps);
        b.push(n);
        Self::new(b)
    }

    pub fn from_lengths(lengths: &[usize]) -> Result<Self> {
        let mut b = Vec::with_capacity(lengths.len() + 1);
        b.push(0);
        let mut acc = 0;
        for &l in lengths {
            acc += l;
            b.push(acc);
        }
        Self::new(b)
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn n(&self) -> usize {
        *self.boundaries.last().expect("non-empty by construction")
    }

    /// Number of segments `K`.
    pub fn n_segments(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Interior boundaries.
    pub fn change_points(&self) -> &[usize] {
        &self.boundaries[1..self.boundaries.len() - 1]
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.boundaries.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn segments(&self) -> impl Iterator<Item = SegmentBounds> + '_ {
        self.boundaries
            .windows(2)
            .map(|w| SegmentBounds { u: w[0], v: w[1] })
    }

    /// Per-observation segment labels `0..K`.
    pub fn labels(&self) -> Vec<usize> {
        self.segments()
            .enumerate()
            .flat_map(|(k, b)| std::iter::repeat_n(k, b.len()))
            .collect()
    }

    pub fn min_segment_length(&self) -> usize {
        self.lengths().into_iter().min().unwrap_or(0)
    }
}

impl TryFrom<Vec<usize>> for Segmentation {
    type Error = Error;

    fn try_from(b: Vec<usize>) -> Result<Self> {
        Self::new(b)
    }
}

impl From<Segmentation> for Vec<usize> {
    fn from(s: Segmentation) -> Self {
        s.boundaries
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matrix_rejects_non_finite_and_empty() {
        assert!(TimeSeriesMatrix::new(vec![1.0, f64::NAN], 1, 2).is_err());
        assert!(TimeSeriesMatrix::new(vec![], 0, 1).is_err());
        assert!(TimeSeriesMatrix::new(vec![1.0; 3], 2, 2).is_err());
        let m = TimeSeriesMatrix::new(vec![1.0, 2.0, 3.0, 4.0], 2, 2).unwrap();
        assert_eq!(m.row(1), &[3.0, 4.0]);
        assert_eq!(m.column(0), vec![1.0, 3.0]);
    }

    #[test]
    fn segmentation_validation() {
        assert!(Segmentation::new(vec![0]).is_err());
        assert!(Segmentation::new(vec![1, 5]).is_err());
        assert!(Segmentation::new(vec![0, 3, 3, 5]).is_err());
        let s = Segmentation::from_change_points(10, &[7, 3]).unwrap();
        assert_eq!(s.boundaries(), &[0, 3, 7, 10]);
        assert_eq!(s.change_points(), &[3, 7]);
        assert_eq!(s.labels(), vec![0, 0, 0, 1, 1, 1, 1, 2, 2, 2]);
        assert_eq!(s.min_segment_length(), 3);
    }

    #[test]
    fn min_segment_len_snaps_exact_products() {
        assert_eq!(min_segment_len(0.01, 600), 6);
        assert_eq!(min_segment_len(0.1, 100), 10);
        assert_eq!(min_segment_len(0.01, 150), 2);
        assert_eq!(min_segment_len(0.0, 150), 0);
        assert_eq!(min_segment_len(1.0 / 200.0, 1000), 5);
    }

    proptest! {
        #[test]
        fn lengths_round_trip(lengths in proptest::collection::vec(1usize..50, 1..12)) {
            let s = Segmentation::from_lengths(&lengths).unwrap();
            prop_assert_eq!(s.lengths(), lengths.clone());
            prop_assert_eq!(Segmentation::from_lengths(&s.lengths()).unwrap(), s);
        }
    }
}
