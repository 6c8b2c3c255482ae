//! Per-sample feature attributions: gradient methods, random directions,
//! noise blending and ground truth from linear models.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::nn::{Classifier, LinearModel};
use crate::seed;

/// How an [`Attribution`] was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Grad,
    GradXInput,
    SmoothGrad { n_samples: usize, noise_std: f64, seed: u64 },
    IntegratedGradients { n_steps: usize },
    Random { seed: u64 },
    Blend { base: Box<Method>, lambda: f64, seed: u64 },
    GroundTruth { mode: GroundTruthMode },
    /// A fixed vector supplied by the caller.
    Given { name: String },
}

impl Method {
    /// Short display name, e.g. `"grad"` or `"blend(0.50)"`.
    pub fn label(&self) -> String {
        match self {
            Method::Grad => "grad".into(),
            Method::GradXInput => "grad_x_input".into(),
            Method::SmoothGrad { .. } => "smoothgrad".into(),
            Method::IntegratedGradients { .. } => "integrated_gradients".into(),
            Method::Random { .. } => "random".into(),
            Method::Blend { lambda, .. } => format!("blend({lambda:.2})"),
            Method::GroundTruth { .. } => "ground_truth".into(),
            Method::Given { name } => name.clone(),
        }
    }
}

/// One feature vector per dataset sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub vectors: Vec<Vec<f64>>,
    pub method: Method,
}

impl Attribution {
    pub fn new(vectors: Vec<Vec<f64>>, method: Method) -> Result<Self> {
        if let Some(first) = vectors.first() {
            let d = first.len();
            for v in &vectors {
                check_dim("attribution vector", d, v.len())?;
            }
        }
        if vectors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::non_finite(format!("{} attribution", method.label())));
        }
        Ok(Self { vectors, method })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    /// Checks that there is exactly one vector of matching length per sample.
    pub fn check_matches(&self, data: &Dataset) -> Result<()> {
        check_dim("attribution count", data.len(), self.len())?;
        if !self.is_empty() {
            check_dim("attribution dimension", data.dim, self.dim())?;
        }
        Ok(())
    }
}

/// Train and test sets together with one attribution per sample of each.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributedSplit {
    pub train: Dataset,
    pub test: Dataset,
    pub attr_train: Attribution,
    pub attr_test: Attribution,
}

impl AttributedSplit {
    pub fn new(train: Dataset, test: Dataset, attr_train: Attribution, attr_test: Attribution) -> Result<Self> {
        check_dim("test dimension", train.dim, test.dim)?;
        check_dim("test class count", train.n_classes, test.n_classes)?;
        attr_train.check_matches(&train)?;
        attr_test.check_matches(&test)?;
        Ok(Self {
            train,
            test,
            attr_train,
            attr_test,
        })
    }

    /// Uses the same feature vector for every sample.
    pub fn constant(train: Dataset, test: Dataset, feature: &[f64], method: Method) -> Result<Self> {
        let attr_train = Attribution::new(vec![feature.to_vec(); train.len()], method.clone())?;
        let attr_test = Attribution::new(vec![feature.to_vec(); test.len()], method)?;
        Self::new(train, test, attr_train, attr_test)
    }

    pub fn method_label(&self) -> String {
        self.attr_test.method.label()
    }
}

/// Which attribution to compute; the parameters of the stochastic methods
/// are carried here so experiments can be described in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttributionSpec {
    Grad,
    GradXInput,
    SmoothGrad {
        #[serde(default = "default_sg_samples")]
        n_samples: usize,
        #[serde(default = "default_sg_std")]
        noise_std: f64,
    },
    IntegratedGradients {
        #[serde(default = "default_ig_steps")]
        n_steps: usize,
    },
    Random,
}

fn default_sg_samples() -> usize {
    50
}

fn default_sg_std() -> f64 {
    0.15
}

fn default_ig_steps() -> usize {
    64
}

impl AttributionSpec {
    pub fn label(&self) -> &'static str {
        match self {
            AttributionSpec::Grad => "grad",
            AttributionSpec::GradXInput => "grad_x_input",
            AttributionSpec::SmoothGrad { .. } => "smoothgrad",
            AttributionSpec::IntegratedGradients { .. } => "integrated_gradients",
            AttributionSpec::Random => "random",
        }
    }

    /// The four gradient-based methods plus the random baseline, with default parameters.
    pub fn standard_set() -> Vec<AttributionSpec> {
        vec![
            AttributionSpec::Grad,
            AttributionSpec::GradXInput,
            AttributionSpec::SmoothGrad {
                n_samples: default_sg_samples(),
                noise_std: default_sg_std(),
            },
            AttributionSpec::IntegratedGradients {
                n_steps: default_ig_steps(),
            },
            AttributionSpec::Random,
        ]
    }

    pub fn compute(&self, model: &impl Classifier, data: &Dataset, seed: u64) -> Result<Attribution> {
        match *self {
            AttributionSpec::Grad => attr_grad(model, data),
            AttributionSpec::GradXInput => attr_grad_x_input(model, data),
            AttributionSpec::SmoothGrad { n_samples, noise_std } => {
                attr_smoothgrad(model, data, n_samples, noise_std, seed)
            }
            AttributionSpec::IntegratedGradients { n_steps } => {
                attr_integrated_gradients(model, data, &vec![0.0; data.dim], n_steps)
            }
            AttributionSpec::Random => attr_random(data, seed),
        }
    }
}

fn check_model(model: &impl Classifier, data: &Dataset) -> Result<()> {
    check_dim("attribution input", model.input_dim(), data.dim)?;
    if let Some(&label) = data.labels.iter().find(|&&y| y >= model.n_classes()) {
        return Err(Error::LabelOutOfRange {
            label,
            n_classes: model.n_classes(),
        });
    }
    Ok(())
}

fn per_sample<F>(data: &Dataset, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(usize, &[f64], usize) -> Result<Vec<f64>> + Sync,
{
    data.features
        .par_iter()
        .zip(data.labels.par_iter())
        .enumerate()
        .map(|(i, (x, &y))| f(i, x, y))
        .collect()
}

/// Gradient of the true-class logit with respect to the input.
pub fn attr_grad(model: &impl Classifier, data: &Dataset) -> Result<Attribution> {
    check_model(model, data)?;
    let vectors = per_sample(data, |_, x, y| model.input_gradient(x, y))?;
    Attribution::new(vectors, Method::Grad)
}

pub fn attr_grad_x_input(model: &impl Classifier, data: &Dataset) -> Result<Attribution> {
    check_model(model, data)?;
    let vectors = per_sample(data, |_, x, y| {
        let g = model.input_gradient(x, y)?;
        Ok(g.iter().zip(x).map(|(g, x)| g * x).collect())
    })?;
    Attribution::new(vectors, Method::GradXInput)
}

/// Mean gradient over `n_samples` Gaussian perturbations of each input.
pub fn attr_smoothgrad(
    model: &impl Classifier,
    data: &Dataset,
    n_samples: usize,
    noise_std: f64,
    seed: u64,
) -> Result<Attribution> {
    if n_samples == 0 {
        return Err(Error::invalid("smoothgrad needs at least one sample"));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::invalid(format!("noise_std must be non-negative, got {noise_std}")));
    }
    check_model(model, data)?;
    let method = Method::SmoothGrad { n_samples, noise_std, seed };
    if noise_std == 0.0 {
        // Every sample would see the clean input; skip the averaging so the
        // result is bit-for-bit the plain gradient.
        let grad = attr_grad(model, data)?;
        return Attribution::new(grad.vectors, method);
    }
    let vectors = per_sample(data, |i, x, y| {
        let mut rng = seed::rng_for(seed, "smoothgrad", i as u64);
        let mut acc = vec![0.0; x.len()];
        let mut noisy = vec![0.0; x.len()];
        for _ in 0..n_samples {
            for (n, &xi) in noisy.iter_mut().zip(x) {
                *n = xi + noise_std * rng.sample::<f64, _>(StandardNormal);
            }
            let g = model.input_gradient(&noisy, y)?;
            for (a, g) in acc.iter_mut().zip(g) {
                *a += g;
            }
        }
        Ok(acc.into_iter().map(|a| a / n_samples as f64).collect())
    })?;
    Attribution::new(vectors, method)
}

/// Integrated gradients from `baseline`, right-endpoint Riemann sum with `n_steps` points.
pub fn attr_integrated_gradients(
    model: &impl Classifier,
    data: &Dataset,
    baseline: &[f64],
    n_steps: usize,
) -> Result<Attribution> {
    if n_steps == 0 {
        return Err(Error::invalid("integrated gradients needs at least one step"));
    }
    check_dim("baseline", data.dim, baseline.len())?;
    check_model(model, data)?;
    let vectors = per_sample(data, |_, x, y| {
        let diff: Vec<f64> = x.iter().zip(baseline).map(|(x, b)| x - b).collect();
        let mut acc = vec![0.0; x.len()];
        let mut point = vec![0.0; x.len()];
        for s in 1..=n_steps {
            let alpha = s as f64 / n_steps as f64;
            for ((p, b), d) in point.iter_mut().zip(baseline).zip(&diff) {
                *p = b + alpha * d;
            }
            let g = model.input_gradient(&point, y)?;
            for (a, g) in acc.iter_mut().zip(g) {
                *a += g;
            }
        }
        Ok(acc
            .iter()
            .zip(&diff)
            .map(|(a, d)| d * a / n_steps as f64)
            .collect())
    })?;
    Attribution::new(vectors, Method::IntegratedGradients { n_steps })
}

/// Draws a direction uniformly from the unit sphere in `dim` dimensions.
pub fn unit_sphere<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = l2_norm(&v);
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Independent uniform unit-sphere directions, one per sample.
pub fn attr_random(data: &Dataset, seed: u64) -> Result<Attribution> {
    let vectors = (0..data.len())
        .map(|i| unit_sphere(&mut seed::rng_for(seed, "random-attr", i as u64), data.dim))
        .collect();
    Attribution::new(vectors, Method::Random { seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBlend {
    pub lambda: f64,
    pub seed: u64,
}

impl NoiseBlend {
    pub fn new(lambda: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::invalid(format!("blend lambda must lie in [0, 1], got {lambda}")));
        }
        Ok(Self { lambda, seed })
    }
}

/// `λ·v̂ + (1−λ)·w` per sample, with `v̂ = v/|v|` and `w` uniform on the unit
/// sphere. The mixture is left unnormalized, so its length shrinks as the two
/// parts cancel.
pub fn blend_with_noise(attr: &Attribution, blend: NoiseBlend) -> Result<Attribution> {
    let NoiseBlend { lambda, seed } = NoiseBlend::new(blend.lambda, blend.seed)?;
    let vectors = attr
        .vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = unit_sphere(&mut seed::rng_for(seed, "blend", i as u64), v.len());
            if lambda == 0.0 {
                return Ok(w);
            }
            let norm = l2_norm(v);
            if norm == 0.0 {
                return Err(Error::invalid(format!(
                    "attribution for sample {i} is zero and cannot be blended"
                )));
            }
            Ok(v.iter()
                .zip(&w)
                .map(|(v, w)| lambda * (v / norm) + (1.0 - lambda) * w)
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Attribution::new(
        vectors,
        Method::Blend {
            base: Box::new(attr.method.clone()),
            lambda,
            seed,
        },
    )
}

/// Scales every vector to unit length; zero vectors stay zero.
pub fn normalize(attr: &Attribution) -> Attribution {
    let vectors = attr
        .vectors
        .iter()
        .map(|v| {
            let n = l2_norm(v);
            if n > 0.0 {
                v.iter().map(|x| x / n).collect()
            } else {
                v.clone()
            }
        })
        .collect();
    Attribution {
        vectors,
        method: attr.method.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruthMode {
    /// `c ⊙ x`.
    #[default]
    CoefficientTimesInput,
    /// `c` alone, identical for every sample of a class.
    Coefficient,
}

/// Per-sample ground truth from a linear model, built from the contrast
/// `c = w_y − mean_{k≠y} w_k` of the true class against the others.
pub fn ground_truth_from_linear(
    lm: &LinearModel,
    data: &Dataset,
    mode: GroundTruthMode,
) -> Result<Attribution> {
    check_model(lm, data)?;
    let k = lm.weights.nrows();
    let vectors = data
        .features
        .iter()
        .zip(&data.labels)
        .map(|(x, &y)| {
            (0..x.len())
                .map(|j| {
                    let c = if k == 1 {
                        lm.weights[(0, j)]
                    } else {
                        let others: f64 = (0..k).filter(|&o| o != y).map(|o| lm.weights[(o, j)]).sum();
                        lm.weights[(y, j)] - others / (k - 1) as f64
                    };
                    match mode {
                        GroundTruthMode::CoefficientTimesInput => c * x[j],
                        GroundTruthMode::Coefficient => c,
                    }
                })
                .collect()
        })
        .collect();
    Attribution::new(vectors, Method::GroundTruth { mode })
}
