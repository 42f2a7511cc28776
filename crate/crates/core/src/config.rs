use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::ForestParams;
use crate::knn::KnnParams;
use crate::likelihood::RatioRule;
use crate::meanshift::MeanShiftParams;

/// Default `eta` for the capped logarithm, `exp(-6)`.
pub const DEFAULT_ETA: f64 = 0.002_478_752_176_666_358_4;

/// Gain engine and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Method {
    RandomForest(ForestParams),
    Knn(KnnParams),
    ChangeInMean(MeanShiftParams),
}

impl Method {
    pub fn random_forest() -> Self {
        Method::RandomForest(ForestParams::default())
    }

    pub fn knn() -> Self {
        Method::Knn(KnnParams::default())
    }

    pub fn change_in_mean() -> Self {
        Method::ChangeInMean(MeanShiftParams::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    /// Minimum relative segment length.
    pub delta: f64,
    /// Offset of the capped logarithm.
    pub eta: f64,
    #[serde(default)]
    pub ratio_rule: RatioRule,
    /// p-value cutoff of the pseudo-permutation test.
    pub threshold: f64,
    pub permutations: usize,
    pub seed: u64,
    pub method: Method,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            delta: 0.01,
            eta: DEFAULT_ETA,
            ratio_rule: RatioRule::Scaled,
            threshold: 0.02,
            permutations: 199,
            seed: 0,
            method: Method::random_forest(),
        }
    }
}

impl DetectionConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    /// Checks parameter ranges, and `delta * n >= 1` when `n` is given.
    pub fn validate(&self, n: Option<usize>) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::invalid(format!(
                "delta must lie in (0, 0.5), got {}",
                self.delta
            )));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::invalid(format!(
                "eta must lie in (0, 1), got {}",
                self.eta
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if self.permutations == 0 {
            return Err(Error::invalid("permutations must be at least 1"));
        }
        if let Some(n) = n {
            if self.delta * (n as f64) < 1.0 - 1e-9 {
                return Err(Error::invalid(format!(
                    "delta * n must be at least 1 (delta = {}, n = {n})",
                    self.delta
                )));
            }
        }
        match &self.method {
            Method::RandomForest(p) => p.validate(None),
            Method::Knn(p) => p.validate(),
            Method::ChangeInMean(p) => p.validate(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_eta_is_exp_minus_six() {
        assert_eq!(DEFAULT_ETA, (-6.0f64).exp());
    }

    #[test]
    fn validation_rejects_out_of_range() {
        let ok = DetectionConfig::default();
        assert!(ok.validate(Some(600)).is_ok());
        assert!(ok.validate(Some(50)).is_err());
        assert!(ok.clone().delta(0.5).validate(None).is_err());
        let mut c = ok.clone();
        c.permutations = 0;
        assert!(c.validate(None).is_err());
        let mut c = ok;
        c.eta = 1.0;
        assert!(c.validate(None).is_err());
    }
}
