//! Fixtures shared by the benchmarks.

use pipegrid_core::synth::{generate, SyntheticSpec};
use pipegrid_core::{FeatureKind, Matrix};

/// Training part of a baseline-shaped synthetic cohort (29 rows, 77 features).
pub fn baseline_training() -> (Matrix, Vec<u8>, Vec<FeatureKind>) {
    let data = generate(&SyntheticSpec::default()).expect("default spec is valid");
    let split = data.dataset.stratified_split(0.3, 1).expect("both labels present");
    let train = data.dataset.select_rows(&split.train_rows);
    (
        train.feature_matrix(),
        train.labels().expect("labelled").to_vec(),
        train.kinds(),
    )
}
