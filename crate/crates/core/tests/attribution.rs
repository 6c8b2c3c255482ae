use goar_core::attribution::{
    attr_grad, attr_grad_x_input, attr_integrated_gradients, attr_random, attr_smoothgrad,
    blend_with_noise, l2_norm, Attribution, Method, NoiseBlend,
};
use goar_core::data::{make_gmm, Dataset, GmmSpec};
use goar_core::nn::{fit_mlp, init_mlp, Classifier, LinearModel, TrainConfig};
use ndarray::{Array1, Array2};

fn finite_difference(model: &impl Classifier, x: &[f64], class: usize, j: usize) -> f64 {
    let h = 1e-4;
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[j] += h;
    xm[j] -= h;
    (model.logits(&xp).unwrap()[class] - model.logits(&xm).unwrap()[class]) / (2.0 * h)
}

fn small_data() -> Dataset {
    make_gmm(&GmmSpec::symmetric(5, 0.5, 10), 3).unwrap()
}

#[test]
fn grad_matches_finite_differences() {
    let data = small_data();
    let model = init_mlp(&[5, 12, 12, 2], 8).unwrap();
    let attr = attr_grad(&model, &data).unwrap();
    for ((x, &y), v) in data.features.iter().zip(&data.labels).zip(&attr.vectors) {
        for (j, &vj) in v.iter().enumerate() {
            let fd = finite_difference(&model, x, y, j);
            if vj.abs() > 1e-6 {
                assert!(((fd - vj) / vj).abs() < 1e-4);
            }
        }
    }
}

#[test]
fn zero_weights_give_zero_attributions() {
    let data = small_data();
    let mut model = init_mlp(&[5, 4, 2], 0).unwrap();
    for l in model.layers.iter_mut() {
        l.weights.fill(0.0);
    }
    assert!(attr_grad(&model, &data).unwrap().vectors.iter().flatten().all(|&v| v == 0.0));
}

#[test]
fn grad_x_input_composes_grad_and_input() {
    let data = small_data();
    let model = init_mlp(&[5, 9, 2], 2).unwrap();
    let g = attr_grad(&model, &data).unwrap();
    let gx = attr_grad_x_input(&model, &data).unwrap();
    for ((gv, gxv), x) in g.vectors.iter().zip(&gx.vectors).zip(&data.features) {
        for j in 0..5 {
            assert_eq!(gxv[j], gv[j] * x[j]);
        }
    }
}

#[test]
fn linear_grad_is_constant_within_class() {
    let data = small_data();
    let lm = LinearModel::new(
        Array2::from_shape_vec((2, 5), (0..10).map(|v| v as f64 - 4.0).collect()).unwrap(),
        Array1::zeros(2),
    )
    .unwrap();
    let attr = attr_grad(&lm, &data).unwrap();
    for (v, &y) in attr.vectors.iter().zip(&data.labels) {
        assert_eq!(v, &lm.weights.row(y).to_vec());
    }
    let gx = attr_grad_x_input(&lm, &data).unwrap();
    for ((v, x), &y) in gx.vectors.iter().zip(&data.features).zip(&data.labels) {
        for j in 0..5 {
            assert_eq!(v[j], lm.weights[(y, j)] * x[j]);
        }
    }
}

#[test]
fn integrated_gradients_completeness_on_trained_model() {
    let data = make_gmm(&GmmSpec::symmetric(8, 0.3, 100), 5).unwrap();
    let (model, _) = fit_mlp(&data, &[32, 32], &TrainConfig::default(), 0.0).unwrap();
    let baseline = vec![0.0; 8];
    let ig = attr_integrated_gradients(&model, &data, &baseline, 256).unwrap();
    let f0 = model.logits(&baseline).unwrap();
    for ((v, x), &y) in ig.vectors.iter().zip(&data.features).zip(&data.labels) {
        let total: f64 = v.iter().sum();
        let delta = model.logits(x).unwrap()[y] - f0[y];
        assert!((total - delta).abs() / (delta.abs() + 1e-8) < 0.01, "{total} vs {delta}");
    }
}

#[test]
fn smoothgrad_error_shrinks_like_inverse_root_n() {
    let data = Dataset::new("one", vec![vec![0.3, -0.2, 0.5]], vec![1], 2).unwrap();
    let model = init_mlp(&[3, 24, 24, 2], 6).unwrap();
    let spread = |n: usize| {
        let runs: Vec<f64> = (0..40)
            .map(|s| attr_smoothgrad(&model, &data, n, 0.5, s).unwrap().vectors[0][0])
            .collect();
        let mean = runs.iter().sum::<f64>() / runs.len() as f64;
        (runs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (runs.len() - 1) as f64).sqrt()
    };
    let (s4, s64) = (spread(4), spread(64));
    // Sixteen times the samples: the spread should fall by about four.
    let ratio = s4 / s64;
    assert!(ratio > 2.5 && ratio < 6.5, "ratio {ratio}");
    let a = attr_smoothgrad(&model, &data, 16, 0.5, 1).unwrap();
    assert_eq!(a, attr_smoothgrad(&model, &data, 16, 0.5, 1).unwrap());
}

#[test]
fn random_directions_average_to_zero() {
    let data = Dataset::new("z", vec![vec![0.0; 4]; 10_000], vec![0; 10_000], 1).unwrap();
    let attr = attr_random(&data, 17).unwrap();
    for j in 0..4 {
        let mean = attr.vectors.iter().map(|v| v[j]).sum::<f64>() / 10_000.0;
        assert!(mean.abs() < 3.0 / 100.0, "coordinate {j}: {mean}");
    }
}

#[test]
fn half_blend_sits_at_forty_five_degrees() {
    let d = 512;
    let base = Attribution::new(
        (0..200).map(|i| (0..d).map(|j| ((i * 31 + j * 7) % 13) as f64 - 6.0).collect()).collect(),
        Method::Grad,
    )
    .unwrap();
    let blended = blend_with_noise(&base, NoiseBlend::new(0.5, 4).unwrap()).unwrap();
    let mut total = 0.0;
    for (v, b) in base.vectors.iter().zip(&blended.vectors) {
        let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
        total += dot / (l2_norm(v) * l2_norm(b));
    }
    let mean = total / 200.0;
    assert!((mean - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.1, "cosine {mean}");
    let unit = blend_with_noise(&base, NoiseBlend::new(1.0, 4).unwrap()).unwrap();
    assert!(unit.vectors.iter().all(|v| (l2_norm(v) - 1.0).abs() < 1e-12));
}
