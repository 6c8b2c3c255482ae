//! Coordinate-removal benchmarks: ROAR zero masking, Eval-X proxy scoring and
//! ROAD noisy Laplace imputation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::{AttributedSplit, Attribution};
use crate::data::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::evaluation::{DegradationCurve, Strategy};
use crate::nn::{correctness, fit_mlp, MlpConfig, ModelParams};
use crate::seed;

/// Which score orders the coordinates for removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ranking {
    /// Raw attribution value, largest first.
    #[default]
    Value,
    /// Absolute attribution value, largest first.
    Magnitude,
}

/// Coordinate indices from highest to lowest score; equal scores keep index order.
pub fn descending_order(v: &[f64], ranking: Ranking) -> Vec<usize> {
    let score = |i: usize| match ranking {
        Ranking::Value => v[i],
        Ranking::Magnitude => v[i].abs(),
    };
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| score(b).partial_cmp(&score(a)).unwrap_or(std::cmp::Ordering::Equal));
    order
}

/// Binary removal mask; `true` marks a coordinate to erase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelMask {
    pub bits: Vec<bool>,
}

impl PixelMask {
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Number of coordinates removed at fraction `k` of `d`.
pub fn removal_count(k: f64, d: usize) -> usize {
    (k * d as f64).round() as usize
}

/// Marks the `round(k·d)` highest-scoring coordinates of `v`.
pub fn top_k_mask(v: &[f64], k: f64, ranking: Ranking) -> Result<PixelMask> {
    if !(k > 0.0 && k <= 1.0) {
        return Err(Error::invalid(format!("removal fraction must lie in (0, 1], got {k}")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::non_finite("attribution used for masking"));
    }
    let mut bits = vec![false; v.len()];
    for &i in descending_order(v, ranking).iter().take(removal_count(k, v.len())) {
        bits[i] = true;
    }
    Ok(PixelMask { bits })
}

/// `(1 − M) ⊙ x`.
pub fn roar_impute(x: &[f64], mask: &PixelMask) -> Result<Vec<f64>> {
    check_dim("mask length", x.len(), mask.bits.len())?;
    Ok(x.iter()
        .zip(&mask.bits)
        .map(|(&v, &m)| if m { 0.0 } else { v })
        .collect())
}

/// Fills masked cells of an `h × w` grid (row-major) with the harmonic
/// interpolant of the unmasked cells, then adds Gaussian noise to them.
///
/// Each masked cell equals the mean of its in-grid 4-neighbours. When every
/// cell is masked there are no boundary values and the global mean of `x` is
/// used instead.
pub fn road_impute<R: Rng>(
    x: &[f64],
    mask: &PixelMask,
    grid_shape: (usize, usize),
    noise_std: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (h, w) = grid_shape;
    check_dim("grid size", x.len(), h * w)?;
    check_dim("mask length", x.len(), mask.bits.len())?;
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::invalid(format!("noise_std must be non-negative, got {noise_std}")));
    }
    let masked: Vec<usize> = (0..x.len()).filter(|&i| mask.bits[i]).collect();
    let mut out = x.to_vec();
    if masked.is_empty() {
        return Ok(out);
    }
    if masked.len() == x.len() {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        out.fill(mean);
    } else {
        let mut unknown = vec![usize::MAX; x.len()];
        for (u, &i) in masked.iter().enumerate() {
            unknown[i] = u;
        }
        let m = masked.len();
        let mut a = DMatrix::<f64>::zeros(m, m);
        let mut b = DVector::<f64>::zeros(m);
        for (u, &i) in masked.iter().enumerate() {
            let (r, c) = (i / w, i % w);
            let mut neighbours = Vec::with_capacity(4);
            if r > 0 {
                neighbours.push(i - w);
            }
            if r + 1 < h {
                neighbours.push(i + w);
            }
            if c > 0 {
                neighbours.push(i - 1);
            }
            if c + 1 < w {
                neighbours.push(i + 1);
            }
            a[(u, u)] = neighbours.len() as f64;
            for j in neighbours {
                if mask.bits[j] {
                    a[(u, unknown[j])] -= 1.0;
                } else {
                    b[u] += x[j];
                }
            }
        }
        let solution = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::invalid("masked region has no unmasked neighbour to interpolate from"))?;
        for (u, &i) in masked.iter().enumerate() {
            out[i] = solution[u];
        }
    }
    if noise_std > 0.0 {
        for &i in &masked {
            out[i] += noise_std * rng.sample::<f64, _>(StandardNormal);
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite("ROAD imputation"));
    }
    Ok(out)
}

/// Trains a network whose inputs are randomly zeroed with `mask_prob` during
/// training, so that it can later score masked inputs without retraining.
pub fn evalx_train_proxy(train: &Dataset, cfg: &MlpConfig, mask_prob: f64) -> Result<ModelParams> {
    fit_mlp(train, &cfg.hidden, &cfg.train, mask_prob).map(|(m, _)| m)
}

/// Ascending removal fractions in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelGrid {
    pub perturb_fractions: Vec<f64>,
}

impl PixelGrid {
    pub fn new(perturb_fractions: Vec<f64>) -> Result<Self> {
        if perturb_fractions.is_empty() {
            return Err(Error::invalid("pixel grid needs at least one fraction"));
        }
        if perturb_fractions.iter().any(|&k| !(k > 0.0 && k <= 1.0)) {
            return Err(Error::invalid("pixel grid fractions must lie in (0, 1]"));
        }
        if perturb_fractions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("pixel grid fractions must be strictly ascending"));
        }
        Ok(Self { perturb_fractions })
    }

    /// `1/d, 2/d, …, 1`: one more coordinate removed per level.
    pub fn every_coordinate(d: usize) -> Result<Self> {
        Self::new((1..=d).map(|i| i as f64 / d as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PixelOptions {
    pub mlp: MlpConfig,
    pub ranking: Ranking,
    pub road_noise_std: f64,
    /// Grid layout for ROAD; `None` treats the features as one row.
    pub grid_shape: Option<(usize, usize)>,
    pub evalx_mask_prob: f64,
    /// Seed for imputation noise.
    pub seed: u64,
}

impl Default for PixelOptions {
    fn default() -> Self {
        Self {
            mlp: MlpConfig::default(),
            ranking: Ranking::Value,
            road_noise_std: 0.1,
            grid_shape: None,
            evalx_mask_prob: 0.5,
            seed: 0,
        }
    }
}

fn impute_dataset(
    strategy: Strategy,
    data: &Dataset,
    attr: &Attribution,
    k: f64,
    opts: &PixelOptions,
    noise_seed: u64,
) -> Result<Dataset> {
    let shape = opts.grid_shape.unwrap_or((1, data.dim));
    let features = data
        .features
        .par_iter()
        .zip(attr.vectors.par_iter())
        .enumerate()
        .map(|(i, (x, v))| {
            let mask = top_k_mask(v, k, opts.ranking)?;
            match strategy {
                Strategy::Road => {
                    let mut rng = seed::rng_for(noise_seed, "road", i as u64);
                    road_impute(x, &mask, shape, opts.road_noise_std, &mut rng)
                }
                _ => roar_impute(x, &mask),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    data.with_features(features)
}

/// Removes the top-k attributed coordinates at every grid fraction and
/// records test accuracy.
///
/// ROAR and ROAD retrain a fresh network on the imputed training set at every
/// level; Eval-X trains one proxy on clean data with random input masking and
/// scores the zero-masked test sets with it. The first point of the curve is
/// the clean accuracy at `k = 0`.
pub fn run_pixel_strategy(
    strategy: Strategy,
    split: &AttributedSplit,
    grid: &PixelGrid,
    opts: &PixelOptions,
) -> Result<DegradationCurve> {
    if !strategy.is_pixel() {
        return Err(Error::invalid(format!("`{strategy}` is not a pixel strategy")));
    }
    if let Some((h, w)) = opts.grid_shape {
        check_dim("ROAD grid size", split.train.dim, h * w)?;
    }
    let mut levels = vec![0.0];
    levels.extend_from_slice(&grid.perturb_fractions);

    let proxy = match strategy {
        Strategy::Evalx => Some(evalx_train_proxy(&split.train, &opts.mlp, opts.evalx_mask_prob)?),
        _ => None,
    };
    let correct = levels
        .par_iter()
        .enumerate()
        .map(|(j, &k)| -> Result<Vec<bool>> {
            if let Some(proxy) = &proxy {
                let test = if k == 0.0 {
                    split.test.clone()
                } else {
                    impute_dataset(Strategy::Roar, &split.test, &split.attr_test, k, opts, 0)?
                };
                return correctness(proxy, &test);
            }
            let (train, test) = if k == 0.0 {
                (split.train.clone(), split.test.clone())
            } else {
                let level_seed = seed::derive(opts.seed, strategy.label(), j as u64);
                (
                    impute_dataset(strategy, &split.train, &split.attr_train, k, opts, seed::derive(level_seed, "train", 0))?,
                    impute_dataset(strategy, &split.test, &split.attr_test, k, opts, seed::derive(level_seed, "test", 0))?,
                )
            };
            let model = opts.mlp.fit_level(&train, j)?;
            correctness(&model, &test)
        })
        .collect::<Result<Vec<_>>>()?;
    DegradationCurve::from_levels(
        strategy,
        split.method_label(),
        &levels,
        &correct,
        (0..levels.len()).map(|j| opts.mlp.level_seed(j)).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_examples() {
        let v = [1.0, 2.0, 0.0];
        assert_eq!(top_k_mask(&v, 1.0 / 3.0, Ranking::Value).unwrap().bits, vec![false, true, false]);
        assert_eq!(top_k_mask(&v, 2.0 / 3.0, Ranking::Value).unwrap().bits, vec![true, true, false]);
        assert_eq!(
            top_k_mask(&[5.0; 3], 1.0 / 3.0, Ranking::Value).unwrap().bits,
            vec![true, false, false]
        );
        assert!(top_k_mask(&v, 0.0, Ranking::Value).is_err());
        assert!(top_k_mask(&v, 1.1, Ranking::Value).is_err());
        assert_eq!(
            top_k_mask(&[-3.0, 1.0, 2.0], 1.0 / 3.0, Ranking::Magnitude).unwrap().bits,
            vec![true, false, false]
        );
    }

    #[test]
    fn roar_examples() {
        let x = [3.0, 4.0, 5.0];
        let none = PixelMask { bits: vec![false; 3] };
        let all = PixelMask { bits: vec![true; 3] };
        let mid = PixelMask { bits: vec![false, true, false] };
        assert_eq!(roar_impute(&x, &none).unwrap(), x.to_vec());
        assert_eq!(roar_impute(&x, &all).unwrap(), vec![0.0; 3]);
        assert_eq!(roar_impute(&x, &mid).unwrap(), vec![3.0, 0.0, 5.0]);
        let twice = roar_impute(&roar_impute(&x, &mid).unwrap(), &mid).unwrap();
        assert_eq!(twice, vec![3.0, 0.0, 5.0]);
    }

    #[test]
    fn road_examples() {
        let mut rng = seed::rng(0);
        let mid = PixelMask { bits: vec![false, true, false] };
        let out = road_impute(&[0.0, 99.0, 2.0], &mid, (1, 3), 0.0, &mut rng).unwrap();
        assert!((out[1] - 1.0).abs() < 1e-12);
        assert_eq!((out[0], out[2]), (0.0, 2.0));
        let none = PixelMask { bits: vec![false; 3] };
        assert_eq!(road_impute(&[1.0, 2.0, 3.0], &none, (1, 3), 0.5, &mut rng).unwrap(), vec![1.0, 2.0, 3.0]);
        let all = PixelMask { bits: vec![true; 4] };
        let out = road_impute(&[1.0, 2.0, 3.0, 6.0], &all, (2, 2), 0.0, &mut rng).unwrap();
        assert_eq!(out, vec![3.0; 4]);
        assert!(road_impute(&[1.0, 2.0, 3.0], &mid, (2, 2), 0.0, &mut rng).is_err());
    }

    #[test]
    fn road_noise_only_touches_masked_cells() {
        let mut rng = seed::rng(4);
        let mask = PixelMask { bits: vec![true, false, false, true, false, false] };
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let out = road_impute(&x, &mask, (2, 3), 0.3, &mut rng).unwrap();
        for i in [1, 2, 4, 5] {
            assert_eq!(out[i], x[i]);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(PixelGrid::new(vec![]).is_err());
        assert!(PixelGrid::new(vec![0.5, 0.25]).is_err());
        assert!(PixelGrid::new(vec![0.0, 0.5]).is_err());
        assert_eq!(PixelGrid::every_coordinate(4).unwrap().perturb_fractions, vec![0.25, 0.5, 0.75, 1.0]);
    }
}
