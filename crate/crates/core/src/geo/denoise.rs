use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GmmSpec};
use crate::error::{check_dim, Error, Result};
use crate::geo::schedule::DiffusionSchedule;

/// Estimates the noise component of a diffused sample.
pub trait NoisePredictor: Sync {
    fn predict(&self, x_t: &[f64], t: usize, schedule: &DiffusionSchedule) -> Result<Vec<f64>>;
}

/// Isotropic Gaussian mixture `Σ π_k N(μ_k, σ² I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmPrior {
    pub means: Vec<Vec<f64>>,
    pub cov_scale: f64,
    pub weights: Vec<f64>,
}

impl GmmPrior {
    pub fn new(means: Vec<Vec<f64>>, cov_scale: f64, weights: Vec<f64>) -> Result<Self> {
        GmmSpec {
            means: means.clone(),
            cov_scale,
            weights: weights.clone(),
            samples_per_class: 1,
        }
        .validate()?;
        Ok(Self {
            means,
            cov_scale,
            weights,
        })
    }

    pub fn from_spec(spec: &GmmSpec) -> Result<Self> {
        Self::new(spec.means.clone(), spec.cov_scale, spec.weights.clone())
    }

    /// One component per class at the class mean, weighted by class
    /// frequency, with the pooled within-class variance per coordinate.
    pub fn from_class_statistics(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let counts = data.class_counts();
        let present: Vec<usize> = (0..data.n_classes).filter(|&k| counts[k] > 0).collect();
        let mut means = vec![vec![0.0; data.dim]; data.n_classes];
        for (x, &y) in data.features.iter().zip(&data.labels) {
            for (m, v) in means[y].iter_mut().zip(x) {
                *m += v / counts[y] as f64;
            }
        }
        let ss: f64 = data
            .features
            .iter()
            .zip(&data.labels)
            .map(|(x, &y)| sq_dist(x, &means[y], 1.0))
            .sum();
        let dof = (data.len() - present.len()).max(1) * data.dim;
        let cov_scale = (ss / dof as f64).max(1e-12);
        let n = data.len() as f64;
        Self::new(
            present.iter().map(|&k| means[k].clone()).collect(),
            cov_scale,
            present.iter().map(|&k| counts[k] as f64 / n).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    /// Pushes the prior through `x ↦ a·Q x + b` (`Q` orthogonal), given that
    /// map as `f` and `a²` as `variance_factor`.
    pub fn map_means(&self, f: impl Fn(&[f64]) -> Vec<f64>, variance_factor: f64) -> Result<Self> {
        Self::new(
            self.means.iter().map(|m| f(m)).collect(),
            self.cov_scale * variance_factor,
            self.weights.clone(),
        )
    }

    /// Log density of `x` under the mixture.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim("prior input", self.dim(), x.len())?;
        let d = x.len() as f64;
        let norm = -0.5 * d * (2.0 * std::f64::consts::PI * self.cov_scale).ln();
        let logs: Vec<f64> = self
            .means
            .iter()
            .zip(&self.weights)
            .map(|(m, &w)| w.ln() + norm - sq_dist(x, m, 1.0) / (2.0 * self.cov_scale))
            .collect();
        Ok(log_sum_exp(&logs))
    }
}

fn sq_dist(x: &[f64], m: &[f64], scale: f64) -> f64 {
    x.iter().zip(m).map(|(a, b)| (a - scale * b).powi(2)).sum()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Exact `E[ε | x_t]` for data drawn from `prior` and diffused to step `t`.
///
/// The diffused marginal is `Σ π_k N(√ᾱ μ_k, (ᾱσ² + 1 − ᾱ) I)`, whose score
/// gives `ε̂ = √(1−ᾱ) (x_t − √ᾱ m̄) / (ᾱσ² + 1 − ᾱ)` with `m̄` the
/// responsibility-weighted mean.
pub fn gmm_eps_predictor(
    prior: &GmmPrior,
    x_t: &[f64],
    t: usize,
    schedule: &DiffusionSchedule,
) -> Result<Vec<f64>> {
    check_dim("diffused sample", prior.dim(), x_t.len())?;
    if x_t.iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite(format!("diffused sample at timestep {t}")));
    }
    let a = schedule.alpha_bar(t)?;
    let sa = a.sqrt();
    let var = a * prior.cov_scale + 1.0 - a;
    let logits: Vec<f64> = prior
        .means
        .iter()
        .zip(&prior.weights)
        .map(|(m, &w)| w.ln() - sq_dist(x_t, m, sa) / (2.0 * var))
        .collect();
    let lse = log_sum_exp(&logits);
    let mut mean = vec![0.0; x_t.len()];
    for (m, l) in prior.means.iter().zip(&logits) {
        let r = (l - lse).exp();
        for (acc, mu) in mean.iter_mut().zip(m) {
            *acc += r * mu;
        }
    }
    let coef = (1.0 - a).sqrt() / var;
    Ok(x_t.iter().zip(&mean).map(|(x, m)| coef * (x - sa * m)).collect())
}

impl NoisePredictor for GmmPrior {
    fn predict(&self, x_t: &[f64], t: usize, schedule: &DiffusionSchedule) -> Result<Vec<f64>> {
        gmm_eps_predictor(self, x_t, t, schedule)
    }
}

/// Deterministic DDIM sampling from `t_start` (snapped down to the inference
/// grid) to a clean estimate. Starting at timestep 0 returns the input.
pub fn ddim_denoise(
    x_t: &[f64],
    t_start: usize,
    schedule: &DiffusionSchedule,
    eps_fn: &impl NoisePredictor,
) -> Result<Vec<f64>> {
    let mut t = schedule.snap_down(t_start);
    let mut x = x_t.to_vec();
    while t > 0 {
        let a = schedule.alpha_bar(t)?;
        let eps = eps_fn.predict(&x, t, schedule)?;
        check_dim("noise prediction", x.len(), eps.len())?;
        let x0: Vec<f64> = x
            .iter()
            .zip(&eps)
            .map(|(x, e)| (x - (1.0 - a).sqrt() * e) / a.sqrt())
            .collect();
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite(format!("DDIM estimate at timestep {t}")));
        }
        match schedule.next_lower(t) {
            Some(next) if next > 0 => {
                let an = schedule.alpha_bar(next)?;
                x = x0
                    .iter()
                    .zip(&eps)
                    .map(|(x0, e)| an.sqrt() * x0 + (1.0 - an).sqrt() * e)
                    .collect();
                t = next;
            }
            _ => return Ok(x0),
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oracle(Vec<f64>);

    impl NoisePredictor for Oracle {
        fn predict(&self, _: &[f64], _: usize, _: &DiffusionSchedule) -> Result<Vec<f64>> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn single_component_closed_form() {
        let s = DiffusionSchedule::default();
        let mu = vec![0.5, -1.0, 2.0];
        let prior = GmmPrior::new(vec![mu.clone()], 0.3, vec![1.0]).unwrap();
        let x = [0.1, 0.7, -0.4];
        for t in [1, 100, 500, 999] {
            let a = s.alphas_cumprod[t];
            let var = a * 0.3 + 1.0 - a;
            let got = gmm_eps_predictor(&prior, &x, t, &s).unwrap();
            for j in 0..3 {
                let want = (1.0 - a).sqrt() * (x[j] - a.sqrt() * mu[j]) / var;
                assert!((got[j] - want).abs() <= 1e-12 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn symmetric_prior_at_origin() {
        let s = DiffusionSchedule::default();
        let prior = GmmPrior::new(vec![vec![1.0; 4], vec![-1.0; 4]], 0.3, vec![0.5, 0.5]).unwrap();
        for t in [0, 300, 999] {
            assert!(gmm_eps_predictor(&prior, &[0.0; 4], t, &s)
                .unwrap()
                .iter()
                .all(|&e| e.abs() < 1e-15));
        }
        assert!(gmm_eps_predictor(&prior, &[f64::NAN, 0.0, 0.0, 0.0], 3, &s).is_err());
    }

    #[test]
    fn far_points_do_not_underflow() {
        let s = DiffusionSchedule::default();
        let prior = GmmPrior::new(vec![vec![1.0; 2], vec![-1.0; 2]], 1e-4, vec![0.5, 0.5]).unwrap();
        let e = gmm_eps_predictor(&prior, &[1e3, -1e3], 1, &s).unwrap();
        assert!(e.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn ddim_fixed_points() {
        let s = DiffusionSchedule::default();
        assert_eq!(ddim_denoise(&[1.0, 2.0], 0, &s, &GmmPrior::new(vec![vec![0.0; 2]], 0.3, vec![1.0]).unwrap()).unwrap(), vec![1.0, 2.0]);
        // Tiny variance collapses the posterior onto the mean.
        let mu = vec![0.3, -0.8];
        let prior = GmmPrior::new(vec![mu.clone()], 1e-12, vec![1.0]).unwrap();
        for t in [40, 400, 960] {
            let a = s.alphas_cumprod[t].sqrt();
            let out = ddim_denoise(&[a * mu[0], a * mu[1]], t, &s, &prior).unwrap();
            assert!((out[0] - mu[0]).abs() < 1e-8 && (out[1] - mu[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn ddim_inverts_forward_map_with_true_noise() {
        let s = DiffusionSchedule::default();
        let x0 = [0.4, -1.2, 0.05];
        let eps = vec![0.3, 1.1, -0.7];
        for t in [40, 80, 520, 960] {
            let a = s.alphas_cumprod[t];
            let xt: Vec<f64> = x0.iter().zip(&eps).map(|(x, e)| a.sqrt() * x + (1.0 - a).sqrt() * e).collect();
            let out = ddim_denoise(&xt, t, &s, &Oracle(eps.clone())).unwrap();
            for (o, x) in out.iter().zip(&x0) {
                assert!((o - x).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn ddim_is_deterministic() {
        let s = DiffusionSchedule::default();
        let prior = GmmPrior::new(vec![vec![1.0; 3], vec![-1.0; 3]], 0.3, vec![0.5, 0.5]).unwrap();
        let a = ddim_denoise(&[0.2, -0.1, 0.9], 600, &s, &prior).unwrap();
        let b = ddim_denoise(&[0.2, -0.1, 0.9], 600, &s, &prior).unwrap();
        assert_eq!(a, b);
    }
}
