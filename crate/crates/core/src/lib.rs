//! Entropy of dynamical systems on compact and non-compact spaces.
//!
//! Topological entropy from admissible open covers, Bowen and metric
//! (`d`-) entropy from separated and spanning sets, Kolmogorov-Sinai entropy
//! over finite partitions, and the checks linking them.

pub mod covers;
pub mod error;
pub mod estimators;
pub mod measures;
pub mod metrics;
pub mod sample;
pub mod series;
pub mod systems;

pub use covers::{Compact, Cover, CoverElement, CoverKind, Interval, IntervalSet};
pub use error::{Error, Result};
pub use estimators::{Bound, EntropyReport, Estimator};
pub use measures::{FiniteMeasure, KsSeries, ChainReport};
pub use metrics::{
    compactified_distance, distance, dn_ball_contains, iterated_distance, Metric, OrbitTable,
};
pub use sample::{Provenance, WitnessSample};
pub use series::{fit_rate, GrowthSeries, Quantity, RateFit, SeriesEntry};
pub use systems::{DynamicalSystem, MapKind, Perron, Point, Sft, Space, SystemDescriptor};
