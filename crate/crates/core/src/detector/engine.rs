use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::Result;
use crate::forest::{fit_predict_oob, ForestParams};
use crate::knn::{build_distance_cache, loo_predict_with_k, DistanceCache, KnnParams};
use crate::likelihood::oob_prior;
use crate::rng::StreamKey;
use crate::types::{SegmentBounds, TimeSeriesMatrix};

/// A classifier that, trained to separate `(u, s]` from `(s, v]`, returns an
/// unbiased class-1 probability for every observation of `(u, v]`.
pub trait ClassifierEngine: Sync {
    fn name(&self) -> &'static str;

    fn predict(
        &self,
        x: &TimeSeriesMatrix,
        bounds: SegmentBounds,
        s: usize,
        key: StreamKey,
    ) -> Result<Vec<f64>>;
}

/// Random forest with out-of-bag predictions.
#[derive(Clone, Debug, Default)]
pub struct ForestEngine {
    pub params: ForestParams,
}

impl ForestEngine {
    pub fn new(params: ForestParams) -> Self {
        Self { params }
    }
}

impl ClassifierEngine for ForestEngine {
    fn name(&self) -> &'static str {
        "random_forest"
    }

    fn predict(
        &self,
        x: &TimeSeriesMatrix,
        bounds: SegmentBounds,
        s: usize,
        key: StreamKey,
    ) -> Result<Vec<f64>> {
        Ok(fit_predict_oob(x, bounds, s, &self.params, key)?.probs)
    }
}

/// k-nearest neighbours with leave-one-out predictions over a distance cache
/// built for one series.
#[derive(Debug)]
pub struct KnnEngine {
    cache: DistanceCache,
    params: KnnParams,
}

impl KnnEngine {
    pub fn new(x: &TimeSeriesMatrix, params: KnnParams) -> Result<Self> {
        params.validate()?;
        let cache = build_distance_cache(x, params.cap)?;
        Ok(Self { cache, params })
    }

    pub fn cache(&self) -> &DistanceCache {
        &self.cache
    }
}

impl ClassifierEngine for KnnEngine {
    fn name(&self) -> &'static str {
        "knn"
    }

    fn predict(
        &self,
        _x: &TimeSeriesMatrix,
        bounds: SegmentBounds,
        s: usize,
        _key: StreamKey,
    ) -> Result<Vec<f64>> {
        let k = self.params.resolved_k(bounds.len());
        loo_predict_with_k(&self.cache, bounds, s, k)
    }
}

/// Predicts the leave-one-out prior everywhere, i.e. carries no signal.
#[derive(Clone, Copy, Debug, Default)]
pub struct PriorEngine;

impl ClassifierEngine for PriorEngine {
    fn name(&self) -> &'static str {
        "prior"
    }

    fn predict(
        &self,
        _x: &TimeSeriesMatrix,
        bounds: SegmentBounds,
        s: usize,
        _key: StreamKey,
    ) -> Result<Vec<f64>> {
        (bounds.u + 1..=bounds.v)
            .map(|i| oob_prior(i, s, bounds))
            .collect()
    }
}

/// Wraps an engine and counts its fits.
#[derive(Debug, Default)]
pub struct CountingEngine<E> {
    inner: E,
    fits: AtomicUsize,
}

impl<E> CountingEngine<E> {
    pub fn new(inner: E) -> Self {
        Self {
            inner,
            fits: AtomicUsize::new(0),
        }
    }

    pub fn fits(&self) -> usize {
        self.fits.load(Ordering::Relaxed)
    }
}

impl<E: ClassifierEngine> ClassifierEngine for CountingEngine<E> {
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    fn predict(
        &self,
        x: &TimeSeriesMatrix,
        bounds: SegmentBounds,
        s: usize,
        key: StreamKey,
    ) -> Result<Vec<f64>> {
        self.fits.fetch_add(1, Ordering::Relaxed);
        self.inner.predict(x, bounds, s, key)
    }
}

impl<E: ClassifierEngine + ?Sized> ClassifierEngine for &E {
    fn name(&self) -> &'static str {
        (**self).name()
    }

    fn predict(
        &self,
        x: &TimeSeriesMatrix,
        bounds: SegmentBounds,
        s: usize,
        key: StreamKey,
    ) -> Result<Vec<f64>> {
        (**self).predict(x, bounds, s, key)
    }
}
