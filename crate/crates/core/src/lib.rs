//! Grid search over preprocessing, feature-selection, oversampling and
//! classifier pipelines for small tabular binary-outcome cohorts.
mod codec;
pub mod config;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod learners;
pub mod matrix;
pub mod pipeline;
pub mod preprocess;
pub mod report;
pub mod seed;
pub mod selection;
pub mod stability;
pub mod stats;
pub mod study;
pub mod synth;

pub use config::{ExperimentConfig, Overrides};
pub use data::{Dataset, FeatureKind, FeatureSchema, Schema, SplitIndex, Timepoint};
pub use error::{Error, Result};
pub use evaluation::{CvResult, InnerScheme, InnerSelection, MetricSet};
pub use learners::{Algorithm, LearnerParams, LearnerSpec, TrainedModel};
pub use matrix::Matrix;
pub use pipeline::{Assignment, Family, FamilyFilter, FittedPipeline, Metric};
pub use stability::{StabilityConfig, StabilityReport};
pub use synth::SyntheticSpec;
