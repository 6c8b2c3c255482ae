//! Shared fixtures for the criterion benches.

use goar_core::attribution::{attr_grad, normalize, AttributedSplit};
use goar_core::data::{make_gmm, split, Dataset, GmmSpec};
use goar_core::geo::GmmPrior;
use goar_core::nn::{MlpConfig, TrainConfig};

/// Two-class mixture in `dim` dimensions, split 80/20.
pub fn mixture(dim: usize, samples_per_class: usize) -> (GmmSpec, Dataset, Dataset) {
    let spec = GmmSpec::symmetric(dim, 0.3, samples_per_class);
    let data = make_gmm(&spec, 1).expect("valid mixture");
    let (train, test) = split(&data, 0.2, 1).expect("non-empty split");
    (spec, train, test)
}

/// A network small enough to retrain many times per second.
pub fn small_mlp() -> MlpConfig {
    MlpConfig {
        hidden: vec![32, 32],
        train: TrainConfig {
            max_epochs: 20,
            batch_size: 64,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        },
    }
}

/// Train/test split carrying unit-normalized gradients of `mlp`.
pub fn gradient_split(dim: usize, samples_per_class: usize, mlp: &MlpConfig) -> (AttributedSplit, GmmPrior) {
    let (spec, train, test) = mixture(dim, samples_per_class);
    let model = mlp.fit(&train).expect("training succeeds");
    let attr_train = normalize(&attr_grad(&model, &train).expect("gradients"));
    let attr_test = normalize(&attr_grad(&model, &test).expect("gradients"));
    let split = AttributedSplit::new(train, test, attr_train, attr_test).expect("matching shapes");
    (split, GmmPrior::from_spec(&spec).expect("valid prior"))
}
