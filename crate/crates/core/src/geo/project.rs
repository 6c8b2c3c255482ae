use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::{l2_norm, Attribution};
use crate::data::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::geo::denoise::{ddim_denoise, GmmPrior};
use crate::geo::schedule::{make_schedule, noise_signal_ratio, strength_to_timestep, DiffusionSchedule};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectionConfig {
    /// Extra diffusion time added on top of the shift, as a fraction of `T`.
    pub extra_noise_fraction: f64,
    pub inference_steps: usize,
    pub seed: u64,
    /// When false the shifted point is returned without denoising.
    pub project: bool,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            extra_noise_fraction: 0.16,
            inference_steps: 25,
            seed: 0,
            project: true,
        }
    }
}

impl ProjectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.extra_noise_fraction) {
            return Err(Error::invalid(format!(
                "extra_noise_fraction must lie in [0, 1), got {}",
                self.extra_noise_fraction
            )));
        }
        if self.inference_steps == 0 {
            return Err(Error::invalid("inference_steps must be at least 1"));
        }
        Ok(())
    }

    /// Linear schedule over 1000 steps from 1e-4 to 0.02 with this step count.
    pub fn schedule(&self) -> Result<DiffusionSchedule> {
        make_schedule(1000, 1e-4, 0.02, self.inference_steps)
    }
}

/// Shifts `x` by `−strength·v` and pulls the result back toward the prior.
///
/// The shift is matched to a diffusion time `t₁`; fresh noise lifts the point
/// to `t₂ = t₁ + extra·T` on the inference grid, and deterministic DDIM brings
/// it back to a clean sample. `data_std` is the per-coordinate spread of the
/// data in the coordinates of `prior`.
#[allow(clippy::too_many_arguments)]
pub fn project_to_manifold(
    x: &[f64],
    v: &[f64],
    strength: f64,
    cfg: &ProjectionConfig,
    prior: &GmmPrior,
    schedule: &DiffusionSchedule,
    data_std: f64,
) -> Result<Vec<f64>> {
    let mut rng = seed::rng(cfg.seed);
    let noise: Vec<f64> = (0..x.len()).map(|_| rng.sample(StandardNormal)).collect();
    project_to_manifold_with_noise(x, v, strength, &noise, cfg, prior, schedule, data_std)
}

/// [`project_to_manifold`] with the injected standard-normal noise supplied
/// by the caller.
#[allow(clippy::too_many_arguments)]
pub fn project_to_manifold_with_noise(
    x: &[f64],
    v: &[f64],
    strength: f64,
    noise: &[f64],
    cfg: &ProjectionConfig,
    prior: &GmmPrior,
    schedule: &DiffusionSchedule,
    data_std: f64,
) -> Result<Vec<f64>> {
    check_dim("feature vector", x.len(), v.len())?;
    if (l2_norm(v) - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!(
            "feature vector must have unit length, got {}",
            l2_norm(v)
        )));
    }
    let shifted: Vec<f64> = x.iter().zip(v).map(|(x, v)| x - strength * v).collect();
    project_shifted(&shifted, strength, noise, cfg, prior, schedule, data_std)
}

/// Start and end diffusion times for a shift of `strength`, or `None` when
/// the shifted point is returned as is.
fn noise_levels(
    strength: f64,
    dim: usize,
    cfg: &ProjectionConfig,
    schedule: &DiffusionSchedule,
    data_std: f64,
) -> Result<Option<(usize, usize)>> {
    cfg.validate()?;
    if schedule.inference_steps != cfg.inference_steps {
        return Err(Error::invalid(format!(
            "schedule has {} inference steps but the projection asks for {}",
            schedule.inference_steps, cfg.inference_steps
        )));
    }
    let t1 = strength_to_timestep(strength, schedule, dim, data_std)?;
    if !cfg.project {
        return Ok(None);
    }
    let total = schedule.num_train_timesteps;
    let extra = (cfg.extra_noise_fraction * total as f64).round() as usize;
    let t2 = schedule.snap_down((t1 + extra).min(total - 1));
    Ok((t2 > 0).then_some((t1, t2)))
}

fn project_shifted(
    shifted: &[f64],
    strength: f64,
    noise: &[f64],
    cfg: &ProjectionConfig,
    prior: &GmmPrior,
    schedule: &DiffusionSchedule,
    data_std: f64,
) -> Result<Vec<f64>> {
    check_dim("projection input", prior.dim(), shifted.len())?;
    check_dim("projection noise", shifted.len(), noise.len())?;
    match noise_levels(strength, shifted.len(), cfg, schedule, data_std)? {
        None => Ok(shifted.to_vec()),
        Some((t1, t2)) => denoise_from(shifted, t1, t2, noise, prior, schedule),
    }
}

fn denoise_from(
    shifted: &[f64],
    t1: usize,
    t2: usize,
    noise: &[f64],
    prior: &GmmPrior,
    schedule: &DiffusionSchedule,
) -> Result<Vec<f64>> {
    // The shift already accounts for noise level t₁; top it up to t₂.
    let coef = (noise_signal_ratio(schedule, t2)? - noise_signal_ratio(schedule, t1)?).max(0.0);
    let scale = schedule.alpha_bar(t2)?.sqrt();
    let x_t: Vec<f64> = shifted
        .iter()
        .zip(noise)
        .map(|(x, g)| scale * (x + coef * g))
        .collect();
    ddim_denoise(&x_t, t2, schedule, prior)
}

/// Affine map `z = (x − center) / scale` to the denoiser's working scale,
/// chosen so the mean per-coordinate standard deviation becomes 0.5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalScale {
    pub center: Vec<f64>,
    pub scale: f64,
}

/// Mean per-coordinate standard deviation of data in canonical coordinates.
pub const CANONICAL_STD: f64 = 0.5;

impl CanonicalScale {
    pub fn from_dataset(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let std = data.mean_coordinate_std();
        if std.is_nan() || std <= 0.0 {
            return Err(Error::invalid("data without spread cannot be rescaled"));
        }
        Ok(Self {
            center: data.mean(),
            scale: std / CANONICAL_STD,
        })
    }

    pub fn to_canonical(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.center).map(|(x, c)| (x - c) / self.scale).collect()
    }

    pub fn from_canonical(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.center).map(|(z, c)| z * self.scale + c).collect()
    }

    pub fn prior_to_canonical(&self, prior: &GmmPrior) -> Result<GmmPrior> {
        check_dim("prior dimension", self.center.len(), prior.dim())?;
        prior.map_means(|m| self.to_canonical(m), 1.0 / (self.scale * self.scale))
    }
}

/// Applies the shift-and-project step to every sample.
///
/// Sample `i` moves by `strength · v_i` (so feature vectors shorter than unit
/// length move proportionally less) and receives projection noise seeded from
/// `(cfg.seed, i)`. Projection runs in canonical coordinates; `prior` is given
/// in the data's own coordinates.
pub fn perturb_dataset(
    data: &Dataset,
    attr: &Attribution,
    strength: f64,
    cfg: &ProjectionConfig,
    prior: &GmmPrior,
    schedule: &DiffusionSchedule,
    scale: &CanonicalScale,
) -> Result<Dataset> {
    attr.check_matches(data)?;
    if !(strength >= 0.0 && strength.is_finite()) {
        return Err(Error::invalid(format!("strength must be non-negative, got {strength}")));
    }
    let canonical_prior = scale.prior_to_canonical(prior)?;
    let features = data
        .features
        .par_iter()
        .zip(attr.vectors.par_iter())
        .enumerate()
        .map(|(i, (x, v))| {
            let shifted: Vec<f64> = x.iter().zip(v).map(|(x, v)| x - strength * v).collect();
            let effective = strength * l2_norm(v) / scale.scale;
            let Some((t1, t2)) = noise_levels(effective, x.len(), cfg, schedule, CANONICAL_STD)? else {
                return Ok(shifted);
            };
            let mut rng = seed::rng_for(cfg.seed, "project", i as u64);
            let noise: Vec<f64> = (0..x.len()).map(|_| rng.sample(StandardNormal)).collect();
            let z = denoise_from(&scale.to_canonical(&shifted), t1, t2, &noise, &canonical_prior, schedule)?;
            Ok(scale.from_canonical(&z))
        })
        .collect::<Result<Vec<_>>>()?;
    data.with_features(features)
}
