use goar_core::data::{make_gmm, split, Dataset, GmmSpec};
use goar_core::nn::{
    accuracy, fit_logistic, fit_mlp, init_mlp, Classifier, LinearModel, LogisticConfig, TrainConfig,
};
use ndarray::{Array1, Array2};
use rand::Rng;

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Sign of `x · (μ₀ − μ₁)` decides the class for equal-weight isotropic Gaussians.
fn bayes_accuracy(data: &Dataset, mu0: &[f64], mu1: &[f64]) -> f64 {
    let mid: Vec<f64> = mu0.iter().zip(mu1).map(|(a, b)| 0.5 * (a + b)).collect();
    let dir: Vec<f64> = mu0.iter().zip(mu1).map(|(a, b)| a - b).collect();
    let hits = data
        .features
        .iter()
        .zip(&data.labels)
        .filter(|(x, &y)| {
            let s: f64 = x.iter().zip(&mid).zip(&dir).map(|((x, m), d)| (x - m) * d).sum();
            (if s > 0.0 { 0 } else { 1 }) == y
        })
        .count();
    hits as f64 / data.len() as f64
}

#[test]
fn mlp_reaches_bayes_level_on_separable_mixture() {
    let spec = GmmSpec::symmetric(64, 0.3, 250);
    let data = make_gmm(&spec, 11).unwrap();
    let held_out = make_gmm(&spec, 12).unwrap();
    assert!(bayes_accuracy(&held_out, &spec.means[0], &spec.means[1]) >= 0.99);
    let (model, report) = fit_mlp(&data, &[128, 128, 128], &TrainConfig::default(), 0.0).unwrap();
    assert!(report.best_val_accuracy >= 0.99);
    assert!(accuracy(&model, &held_out).unwrap() >= 0.99);
}

#[test]
fn identical_classes_stay_near_chance() {
    let mut rng = goar_core::seed::rng(5);
    let features: Vec<Vec<f64>> = (0..600)
        .map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let labels = (0..600).map(|i| i % 2).collect();
    let data = Dataset::new("noise", features, labels, 2).unwrap();
    let (train, test) = split(&data, 0.2, 1).unwrap();
    let (model, _) = fit_mlp(&train, &[32, 32], &TrainConfig::default(), 0.0).unwrap();
    let acc = accuracy(&model, &test).unwrap();
    assert!((acc - 0.5).abs() <= 0.1, "accuracy {acc}");
}

#[test]
fn training_is_a_pure_function_of_seed() {
    let data = make_gmm(&GmmSpec::symmetric(6, 0.5, 60), 3).unwrap();
    let cfg = TrainConfig { seed: 42, ..TrainConfig::default() };
    let a = fit_mlp(&data, &[16], &cfg, 0.0).unwrap();
    let b = fit_mlp(&data, &[16], &cfg, 0.0).unwrap();
    assert_eq!(a, b);
}

#[test]
fn accuracy_of_doubled_dataset_is_unchanged() {
    let data = make_gmm(&GmmSpec::symmetric(4, 2.0, 50), 8).unwrap();
    let model = init_mlp(&[4, 8, 2], 1).unwrap();
    let doubled = data.concat(&data).unwrap();
    assert_eq!(accuracy(&model, &data).unwrap(), accuracy(&model, &doubled).unwrap());
}

#[test]
fn logistic_direction_matches_mean_difference() {
    let spec = GmmSpec::symmetric(64, 0.3, 1000);
    let data = make_gmm(&spec, 21).unwrap();
    let lm = fit_logistic(&data, &LogisticConfig::default()).unwrap();
    let w: Vec<f64> = (0..64).map(|j| lm.weights[(0, j)] - lm.weights[(1, j)]).collect();
    // With isotropic class covariance the discriminant direction Σ⁻¹(μ₀ − μ₁)
    // is the mean difference itself.
    let mean_diff: Vec<f64> = spec.means[0].iter().zip(&spec.means[1]).map(|(a, b)| a - b).collect();
    assert!(cosine(&w, &mean_diff) >= 0.99, "cosine {}", cosine(&w, &mean_diff));

}

fn objective(w: &[f64], data: &Dataset, l2: f64) -> f64 {
    // Binary problem parameterized as [w0 (d), b0, w1 (d), b1].
    let d = data.dim;
    let mut loss = 0.0;
    for (x, &y) in data.features.iter().zip(&data.labels) {
        let z: Vec<f64> = (0..2)
            .map(|k| (0..d).map(|j| w[k * (d + 1) + j] * x[j]).sum::<f64>() + w[k * (d + 1) + d])
            .collect();
        let m = z[0].max(z[1]);
        loss += m + ((z[0] - m).exp() + (z[1] - m).exp()).ln() - z[y];
    }
    loss / data.len() as f64 + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

#[test]
fn logistic_matches_long_gradient_descent() {
    let data = make_gmm(&GmmSpec::symmetric(3, 1.5, 30), 4).unwrap();
    let l2 = 1e-2;
    let d = data.dim;
    let mut w = vec![0.0; 2 * (d + 1)];
    for _ in 0..20_000 {
        let mut g = vec![0.0; w.len()];
        for (x, &y) in data.features.iter().zip(&data.labels) {
            let z: Vec<f64> = (0..2)
                .map(|k| (0..d).map(|j| w[k * (d + 1) + j] * x[j]).sum::<f64>() + w[k * (d + 1) + d])
                .collect();
            let m = z[0].max(z[1]);
            let e = [(z[0] - m).exp(), (z[1] - m).exp()];
            for k in 0..2 {
                let r = e[k] / (e[0] + e[1]) - if k == y { 1.0 } else { 0.0 };
                for j in 0..d {
                    g[k * (d + 1) + j] += r * x[j] / data.len() as f64;
                }
                g[k * (d + 1) + d] += r / data.len() as f64;
            }
        }
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= 0.2 * (gi + l2 * *wi);
        }
    }
    let lm = fit_logistic(&data, &LogisticConfig { l2, ..LogisticConfig::default() }).unwrap();
    let flat: Vec<f64> = (0..2)
        .flat_map(|k| {
            let mut row: Vec<f64> = lm.weights.row(k).to_vec();
            row.push(lm.bias[k]);
            row
        })
        .collect();
    assert!((objective(&flat, &data, l2) - objective(&w, &data, l2)).abs() < 1e-6);
    let g = lm.logistic_gradient(&data, l2);
    assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-4);
}

#[test]
fn linear_model_gradient_is_its_weight_row() {
    let lm = LinearModel::new(
        Array2::from_shape_vec((3, 2), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap(),
        Array1::zeros(3),
    )
    .unwrap();
    assert_eq!(lm.input_gradient(&[9.0, -9.0], 2).unwrap(), vec![5.0, 6.0]);
}
