//! Dense ReLU networks with exact reverse-mode gradients, minibatch training
//! with early stopping, and L2-regularized multinomial logistic regression.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use rand_distr::Uniform;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::seed;

/// Anything that maps an input vector to class logits and can differentiate
/// a logit with respect to its input.
pub trait Classifier: Sync {
    fn input_dim(&self) -> usize;
    fn n_classes(&self) -> usize;
    fn logits(&self, x: &[f64]) -> Result<Vec<f64>>;
    /// `∂ logit[class] / ∂ x`.
    fn input_gradient(&self, x: &[f64], class: usize) -> Result<Vec<f64>>;

    fn logits_batch(&self, xs: &Array2<f64>) -> Result<Array2<f64>> {
        check_dim("batch input", self.input_dim(), xs.ncols())?;
        let mut out = Array2::zeros((xs.nrows(), self.n_classes()));
        for (row, mut o) in xs.rows().into_iter().zip(out.rows_mut()) {
            let l = self.logits(row.as_slice().expect("standard layout"))?;
            o.assign(&ArrayView1::from(l.as_slice()));
        }
        Ok(out)
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Per-sample correctness of `argmax logits == label`.
pub fn correctness(model: &impl Classifier, data: &Dataset) -> Result<Vec<bool>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_dim("classifier input", model.input_dim(), data.dim)?;
    let logits = model.logits_batch(&data.to_matrix())?;
    Ok(logits
        .rows()
        .into_iter()
        .zip(&data.labels)
        .map(|(row, &y)| argmax(&row.to_vec()) == y)
        .collect())
}

pub fn accuracy(model: &impl Classifier, data: &Dataset) -> Result<f64> {
    let c = correctness(model, data)?;
    Ok(c.iter().filter(|&&ok| ok).count() as f64 / c.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `out × in`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }
}

/// Feed-forward network: ReLU after every layer except the last, which emits raw logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub layers: Vec<Dense>,
}

impl ModelParams {
    pub fn new(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("a model needs at least one layer"));
        }
        for (i, layer) in layers.iter().enumerate() {
            check_dim("layer bias", layer.out_dim(), layer.bias.len())?;
            if i > 0 {
                check_dim("layer input", layers[i - 1].out_dim(), layer.in_dim())?;
            }
        }
        let model = Self { layers };
        model.check_finite()?;
        Ok(model)
    }

    fn check_finite(&self) -> Result<()> {
        let finite = self.layers.iter().all(|l| {
            l.weights.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite())
        });
        if finite {
            Ok(())
        } else {
            Err(Error::non_finite("model parameters"))
        }
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].in_dim()];
        sizes.extend(self.layers.iter().map(Dense::out_dim));
        sizes
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("model input", self.input_dim(), x.len())?;
        let mut a = Array1::from(x.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.weights.dot(&a) + &layer.bias;
            if i < last {
                z.mapv_inplace(relu);
            }
            a = z;
        }
        Ok(a.to_vec())
    }

    /// Logits for a batch of row vectors.
    pub fn forward_batch(&self, xs: &Array2<f64>) -> Result<Array2<f64>> {
        check_dim("model input", self.input_dim(), xs.ncols())?;
        let mut a = xs.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weights.t()) + &layer.bias;
            if i < last {
                z.mapv_inplace(relu);
            }
            a = z;
        }
        Ok(a)
    }
}

fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

impl Classifier for ModelParams {
    fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    fn n_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x)
    }

    fn input_gradient(&self, x: &[f64], class: usize) -> Result<Vec<f64>> {
        check_dim("model input", self.input_dim(), x.len())?;
        if class >= self.n_classes() {
            return Err(Error::LabelOutOfRange {
                label: class,
                n_classes: self.n_classes(),
            });
        }
        let last = self.layers.len() - 1;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = Array1::from(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.weights.dot(&a) + &layer.bias;
            a = if i < last { z.mapv(relu) } else { z.clone() };
            pre.push(z);
        }
        let mut delta = Array1::zeros(self.n_classes());
        delta[class] = 1.0;
        for i in (0..self.layers.len()).rev() {
            if i < last {
                delta.zip_mut_with(&pre[i], |d, &z| {
                    if z <= 0.0 {
                        *d = 0.0
                    }
                });
            }
            delta = self.layers[i].weights.t().dot(&delta);
        }
        Ok(delta.to_vec())
    }

    fn logits_batch(&self, xs: &Array2<f64>) -> Result<Array2<f64>> {
        self.forward_batch(xs)
    }
}

/// Builds a network with layer widths `sizes[0] → … → sizes[last]`.
///
/// Weights and biases are drawn from `U(-1/√fan_in, 1/√fan_in)`.
pub fn init_mlp(sizes: &[usize], seed: u64) -> Result<ModelParams> {
    if sizes.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least input and output sizes, got {sizes:?}"
        )));
    }
    if sizes.contains(&0) {
        return Err(Error::invalid(format!("layer sizes must be positive: {sizes:?}")));
    }
    let mut rng = seed::rng_for(seed, "init", 0);
    let layers = sizes
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
            Dense {
                weights: Array2::from_shape_fn((fan_out, fan_in), |_| rng.sample(dist)),
                bias: Array1::from_shape_fn(fan_out, |_| rng.sample(dist)),
            }
        })
        .collect();
    ModelParams::new(layers)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            batch_size: 256,
            max_epochs: 200,
            early_stop_patience: 5,
            optimizer: Optimizer::Adam,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if self.early_stop_patience == 0 {
            return Err(Error::invalid("early_stop_patience must be at least 1"));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::invalid("batch_size and max_epochs must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
}

struct AdamState {
    m: Vec<(Array2<f64>, Array1<f64>)>,
    v: Vec<(Array2<f64>, Array1<f64>)>,
    step: i32,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn check_labels(data: &Dataset, n_classes: usize, dim: usize) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_dim("training data", dim, data.dim)?;
    if let Some(&label) = data.labels.iter().find(|&&y| y >= n_classes) {
        return Err(Error::LabelOutOfRange { label, n_classes });
    }
    Ok(())
}

/// Trains with softmax cross-entropy and returns the parameters with the best
/// validation accuracy seen.
pub fn train(
    model: &ModelParams,
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
) -> Result<ModelParams> {
    train_with_report(model, train, val, cfg, 0.0).map(|(m, _)| m)
}

/// [`train`] with an optional input dropout: every coordinate of every
/// minibatch input is zeroed independently with probability `input_mask_prob`.
pub fn train_with_report(
    model: &ModelParams,
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
    input_mask_prob: f64,
) -> Result<(ModelParams, TrainReport)> {
    cfg.validate()?;
    if !(0.0..1.0).contains(&input_mask_prob) {
        return Err(Error::invalid(format!(
            "mask probability must lie in [0, 1), got {input_mask_prob}"
        )));
    }
    let n_classes = model.n_classes();
    check_labels(train, n_classes, model.input_dim())?;
    check_labels(val, n_classes, model.input_dim())?;

    let xs = train.to_matrix();
    let mut params = model.clone();
    let mut best = params.clone();
    let mut best_acc = accuracy(&params, val)?;
    let mut best_loss = mean_cross_entropy(&params, val)?;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut epochs_run = 0;

    let mut shuffle_rng = seed::rng_for(cfg.seed, "shuffle", 0);
    let mut mask_rng = seed::rng_for(cfg.seed, "input-mask", 0);
    let mut adam = AdamState {
        m: zeros_like(&params),
        v: zeros_like(&params),
        step: 0,
    };
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut shuffle_rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut xb = xs.select(Axis(0), batch);
            if input_mask_prob > 0.0 {
                xb.mapv_inplace(|v| {
                    if mask_rng.random::<f64>() < input_mask_prob {
                        0.0
                    } else {
                        v
                    }
                });
            }
            let yb: Vec<usize> = batch.iter().map(|&i| train.labels[i]).collect();
            let grads = batch_gradients(&params, &xb, &yb);
            apply_update(&mut params, &grads, cfg, &mut adam);
        }
        epochs_run = epoch;
        params.check_finite()?;
        let acc = accuracy(&params, val)?;
        let loss = mean_cross_entropy(&params, val)?;
        // Accuracy on a small validation set moves in coarse steps, so a
        // falling validation loss also counts as progress for patience.
        let improved_loss = loss < best_loss;
        if improved_loss {
            best_loss = loss;
        }
        let improved_acc = acc > best_acc;
        if improved_acc || (acc == best_acc && improved_loss) {
            best_acc = acc;
            best = params.clone();
            best_epoch = epoch;
        }
        if improved_acc || improved_loss {
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.early_stop_patience {
                break;
            }
        }
    }
    Ok((
        best,
        TrainReport {
            epochs_run,
            best_epoch,
            best_val_accuracy: best_acc,
        },
    ))
}

/// Mean softmax cross-entropy of `model` on `data`.
pub fn mean_cross_entropy(model: &impl Classifier, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let logits = model.logits_batch(&data.to_matrix())?;
    let mut total = 0.0;
    for (row, &y) in logits.rows().into_iter().zip(&data.labels) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse - row[y];
    }
    Ok(total / data.len() as f64)
}

fn zeros_like(model: &ModelParams) -> Vec<(Array2<f64>, Array1<f64>)> {
    model
        .layers
        .iter()
        .map(|l| (Array2::zeros(l.weights.raw_dim()), Array1::zeros(l.bias.len())))
        .collect()
}

/// Mean softmax cross-entropy gradient over a minibatch.
fn batch_gradients(
    model: &ModelParams,
    xb: &Array2<f64>,
    yb: &[usize],
) -> Vec<(Array2<f64>, Array1<f64>)> {
    let last = model.layers.len() - 1;
    let mut acts = Vec::with_capacity(model.layers.len() + 1);
    acts.push(xb.clone());
    for (i, layer) in model.layers.iter().enumerate() {
        let mut z = acts[i].dot(&layer.weights.t()) + &layer.bias;
        if i < last {
            z.mapv_inplace(relu);
        }
        acts.push(z);
    }
    let b = xb.nrows() as f64;
    let mut delta = acts.pop().expect("logits");
    for (mut row, &y) in delta.rows_mut().into_iter().zip(yb) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
        row[y] -= 1.0;
    }
    delta /= b;

    let mut grads = Vec::with_capacity(model.layers.len());
    for i in (0..model.layers.len()).rev() {
        let input = &acts[i];
        let gw = delta.t().dot(input);
        let gb = delta.sum_axis(Axis(0));
        if i > 0 {
            let mut prev = delta.dot(&model.layers[i].weights);
            // acts[i] is post-ReLU, so zero activations mark the inactive units.
            prev.zip_mut_with(input, |d, &a| {
                if a <= 0.0 {
                    *d = 0.0
                }
            });
            delta = prev;
        }
        grads.push((gw, gb));
    }
    grads.reverse();
    grads
}

fn apply_update(
    params: &mut ModelParams,
    grads: &[(Array2<f64>, Array1<f64>)],
    cfg: &TrainConfig,
    adam: &mut AdamState,
) {
    let lr = cfg.learning_rate;
    match cfg.optimizer {
        Optimizer::Sgd => {
            for (layer, (gw, gb)) in params.layers.iter_mut().zip(grads) {
                layer.weights.scaled_add(-lr, gw);
                layer.bias.scaled_add(-lr, gb);
            }
        }
        Optimizer::Adam => {
            adam.step += 1;
            let c1 = 1.0 - ADAM_BETA1.powi(adam.step);
            let c2 = 1.0 - ADAM_BETA2.powi(adam.step);
            for (i, (layer, (gw, gb))) in params.layers.iter_mut().zip(grads).enumerate() {
                let (mw, mb) = &mut adam.m[i];
                let (vw, vb) = &mut adam.v[i];
                adam_step(layer.weights.as_slice_mut().unwrap(), gw.as_slice().unwrap(),
                    mw.as_slice_mut().unwrap(), vw.as_slice_mut().unwrap(), lr, c1, c2);
                adam_step(layer.bias.as_slice_mut().unwrap(), gb.as_slice().unwrap(),
                    mb.as_slice_mut().unwrap(), vb.as_slice_mut().unwrap(), lr, c1, c2);
            }
        }
    }
}

fn adam_step(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], lr: f64, c1: f64, c2: f64) {
    for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
    }
}

/// Splits `data` 80/20 into train/validation with `cfg.seed`, initializes a
/// network with hidden widths `hidden`, and trains it.
pub fn fit_mlp(
    data: &Dataset,
    hidden: &[usize],
    cfg: &TrainConfig,
    input_mask_prob: f64,
) -> Result<(ModelParams, TrainReport)> {
    let mut sizes = vec![data.dim];
    sizes.extend_from_slice(hidden);
    sizes.push(data.n_classes);
    let model = init_mlp(&sizes, cfg.seed)?;
    let (tr, val) = crate::data::split(data, 0.2, seed::derive(cfg.seed, "val-split", 0))?;
    train_with_report(&model, &tr, &val, cfg, input_mask_prob)
}

/// Architecture and optimizer settings for the networks retrained at every
/// perturbation level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128, 128],
            train: TrainConfig::default(),
        }
    }
}

impl MlpConfig {
    pub fn fit(&self, data: &Dataset) -> Result<ModelParams> {
        fit_mlp(data, &self.hidden, &self.train, 0.0).map(|(m, _)| m)
    }

    /// Training seed for level `j` of a degradation curve. Level 0 keeps the
    /// base seed; later levels get independent initialisations so that
    /// chance-level retrained models do not repeat the same guesses.
    pub fn level_seed(&self, j: usize) -> u64 {
        match j {
            0 => self.train.seed,
            _ => seed::derive(self.train.seed, "retrain", j as u64),
        }
    }

    pub fn fit_level(&self, data: &Dataset, j: usize) -> Result<ModelParams> {
        let train = TrainConfig { seed: self.level_seed(j), ..self.train.clone() };
        fit_mlp(data, &self.hidden, &train, 0.0).map(|(m, _)| m)
    }
}

/// Affine classifier `logits = W x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// `c × d`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LinearModel {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        check_dim("linear bias", weights.nrows(), bias.len())?;
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::non_finite("linear model"));
        }
        Ok(Self { weights, bias })
    }

    /// Mean regularized cross-entropy, the objective minimized by [`fit_logistic`].
    pub fn logistic_objective(&self, data: &Dataset, l2: f64) -> f64 {
        let mut loss = 0.0;
        for (x, &y) in data.features.iter().zip(&data.labels) {
            let z = self.weights.dot(&ArrayView1::from(x.as_slice())) + &self.bias;
            let max = z.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss += lse - z[y];
        }
        let reg: f64 = self.weights.iter().chain(self.bias.iter()).map(|v| v * v).sum();
        loss / data.len() as f64 + 0.5 * l2 * reg
    }

    /// Gradient of [`Self::logistic_objective`], flattened class by class as `[w_k, b_k]`.
    pub fn logistic_gradient(&self, data: &Dataset, l2: f64) -> Vec<f64> {
        let (c, d) = self.weights.dim();
        let mut g = vec![0.0; c * (d + 1)];
        let n = data.len() as f64;
        for (x, &y) in data.features.iter().zip(&data.labels) {
            let p = softmax(&(self.weights.dot(&ArrayView1::from(x.as_slice())) + &self.bias));
            for (k, &pk) in p.iter().enumerate() {
                let r = (pk - if k == y { 1.0 } else { 0.0 }) / n;
                let base = k * (d + 1);
                for j in 0..d {
                    g[base + j] += r * x[j];
                }
                g[base + d] += r;
            }
        }
        for k in 0..c {
            for j in 0..d {
                g[k * (d + 1) + j] += l2 * self.weights[(k, j)];
            }
            g[k * (d + 1) + d] += l2 * self.bias[k];
        }
        g
    }

    fn from_flat(theta: &[f64], c: usize, d: usize) -> Self {
        Self {
            weights: Array2::from_shape_fn((c, d), |(k, j)| theta[k * (d + 1) + j]),
            bias: Array1::from_shape_fn(c, |k| theta[k * (d + 1) + d]),
        }
    }
}

fn softmax(z: &Array1<f64>) -> Vec<f64> {
    let max = z.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl Classifier for LinearModel {
    fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    fn n_classes(&self) -> usize {
        self.weights.nrows()
    }

    fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("linear model input", self.input_dim(), x.len())?;
        Ok((self.weights.dot(&ArrayView1::from(x)) + &self.bias).to_vec())
    }

    fn input_gradient(&self, x: &[f64], class: usize) -> Result<Vec<f64>> {
        check_dim("linear model input", self.input_dim(), x.len())?;
        if class >= self.n_classes() {
            return Err(Error::LabelOutOfRange {
                label: class,
                n_classes: self.n_classes(),
            });
        }
        Ok(self.weights.row(class).to_vec())
    }

    fn logits_batch(&self, xs: &Array2<f64>) -> Result<Array2<f64>> {
        check_dim("linear model input", self.input_dim(), xs.ncols())?;
        Ok(xs.dot(&self.weights.t()) + &self.bias)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticConfig {
    /// Ridge penalty on weights and biases; keeps the objective strictly convex
    /// on separable data.
    pub l2: f64,
    pub max_iter: usize,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            l2: 1e-2,
            max_iter: 100,
            tol: 1e-10,
        }
    }
}

/// Multinomial logistic regression by damped Newton iterations.
pub fn fit_logistic(train: &Dataset, cfg: &LogisticConfig) -> Result<LinearModel> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.l2.is_nan() || cfg.l2 <= 0.0 {
        return Err(Error::invalid("logistic l2 penalty must be positive"));
    }
    let (c, d) = (train.n_classes, train.dim);
    let p = c * (d + 1);
    let mut model = LinearModel {
        weights: Array2::zeros((c, d)),
        bias: Array1::zeros(c),
    };
    let mut objective = model.logistic_objective(train, cfg.l2);
    for _ in 0..cfg.max_iter {
        let g = model.logistic_gradient(train, cfg.l2);
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < cfg.tol {
            break;
        }
        let hessian = logistic_hessian(&model, train, cfg.l2);
        let step = hessian
            .cholesky()
            .ok_or_else(|| Error::invalid("logistic Hessian is not positive definite"))?
            .solve(&DVector::from_vec(g.clone()));
        let theta = flatten(&model);
        debug_assert_eq!(theta.len(), p);
        let decrease: f64 = g.iter().zip(step.iter()).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        let mut accepted = false;
        while t >= 1e-10 {
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            let cand = LinearModel::from_flat(&cand, c, d);
            let obj = cand.logistic_objective(train, cfg.l2);
            if obj <= objective - 1e-4 * t * decrease {
                model = cand;
                objective = obj;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        // No representable decrease left: we are at the optimum to machine precision.
        if !accepted {
            break;
        }
    }
    LinearModel::new(model.weights, model.bias)
}

fn flatten(model: &LinearModel) -> Vec<f64> {
    let (c, d) = model.weights.dim();
    let mut theta = Vec::with_capacity(c * (d + 1));
    for k in 0..c {
        theta.extend(model.weights.row(k).iter());
        theta.push(model.bias[k]);
    }
    theta
}

fn logistic_hessian(model: &LinearModel, data: &Dataset, l2: f64) -> DMatrix<f64> {
    let (c, d) = model.weights.dim();
    let q = d + 1;
    let mut h = DMatrix::<f64>::zeros(c * q, c * q);
    let n = data.len() as f64;
    let mut xt = vec![0.0; q];
    for x in &data.features {
        xt[..d].copy_from_slice(x);
        xt[d] = 1.0;
        let probs = softmax(&(model.weights.dot(&ArrayView1::from(x.as_slice())) + &model.bias));
        for k in 0..c {
            for j in k..c {
                let w = probs[k] * (if k == j { 1.0 } else { 0.0 } - probs[j]) / n;
                if w == 0.0 {
                    continue;
                }
                for a in 0..q {
                    let wa = w * xt[a];
                    for b in 0..q {
                        h[(k * q + a, j * q + b)] += wa * xt[b];
                    }
                }
            }
        }
    }
    for k in 0..c {
        for j in (k + 1)..c {
            for a in 0..q {
                for b in 0..q {
                    h[(j * q + b, k * q + a)] = h[(k * q + a, j * q + b)];
                }
            }
        }
    }
    for i in 0..c * q {
        h[(i, i)] += l2;
    }
    h
}
