//! Nonparametric multiple change point detection with classifiers.
//!
//! A classifier trained to tell `(u, s]` from `(s, v]` yields per-observation
//! log-likelihood ratios whose sum, viewed as a function of the split, is an
//! approximate gain curve. Binary segmentation locates each split with a
//! two-step search that needs four classifier fits per segment and keeps it
//! when a permutation test on the stored ratios rejects homogeneity.
//!
//! ```no_run
//! use classcpd::{detect, simgen, DetectionConfig};
//!
//! let series = simgen::gen_cim(1);
//! let result = detect(&series.x, &DetectionConfig::default().seed(1)).unwrap();
//! println!("{:?}", result.segmentation.boundaries());
//! ```

pub mod config;
pub mod detector;
pub mod error;
pub mod forest;
pub mod ingest;
pub mod knn;
pub mod likelihood;
pub mod meanshift;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod simgen;
pub mod types;

pub use config::{DetectionConfig, Method, DEFAULT_ETA};
pub use detector::{binary_segmentation, detect, detect_row_major, DetectionResult, SplitRecord};
pub use error::{Error, Result};
pub use likelihood::RatioRule;
pub use types::{SegmentBounds, Segmentation, TimeSeriesMatrix};
