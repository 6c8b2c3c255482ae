use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear-β diffusion noise schedule with a strided inference grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSchedule {
    pub num_train_timesteps: usize,
    pub betas: Vec<f64>,
    pub alphas_cumprod: Vec<f64>,
    pub inference_steps: usize,
    /// Descending, `(steps−1)·stride, …, stride, 0`.
    pub inference_timesteps: Vec<usize>,
}

pub fn make_schedule(
    num_train_timesteps: usize,
    beta_start: f64,
    beta_end: f64,
    inference_steps: usize,
) -> Result<DiffusionSchedule> {
    if num_train_timesteps < 2 {
        return Err(Error::invalid("a schedule needs at least 2 timesteps"));
    }
    if inference_steps == 0 || inference_steps > num_train_timesteps {
        return Err(Error::invalid(format!(
            "inference steps must lie in [1, {num_train_timesteps}], got {inference_steps}"
        )));
    }
    if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
        return Err(Error::invalid(format!(
            "need 0 < beta_start <= beta_end < 1, got {beta_start} and {beta_end}"
        )));
    }
    let last = (num_train_timesteps - 1) as f64;
    let betas: Vec<f64> = (0..num_train_timesteps)
        .map(|t| beta_start + (beta_end - beta_start) * t as f64 / last)
        .collect();
    let mut alphas_cumprod = Vec::with_capacity(num_train_timesteps);
    let mut prod = 1.0;
    for b in &betas {
        prod *= 1.0 - b;
        alphas_cumprod.push(prod);
    }
    let stride = num_train_timesteps / inference_steps;
    let inference_timesteps = (0..inference_steps).rev().map(|i| i * stride).collect();
    Ok(DiffusionSchedule {
        num_train_timesteps,
        betas,
        alphas_cumprod,
        inference_steps,
        inference_timesteps,
    })
}

impl Default for DiffusionSchedule {
    fn default() -> Self {
        make_schedule(1000, 1e-4, 0.02, 25).expect("default schedule is valid")
    }
}

impl DiffusionSchedule {
    pub fn alpha_bar(&self, t: usize) -> Result<f64> {
        self.alphas_cumprod.get(t).copied().ok_or_else(|| {
            Error::invalid(format!(
                "timestep {t} outside schedule of length {}",
                self.num_train_timesteps
            ))
        })
    }

    /// Largest inference timestep not above `t`.
    pub fn snap_down(&self, t: usize) -> usize {
        self.inference_timesteps
            .iter()
            .copied()
            .find(|&s| s <= t)
            .unwrap_or(0)
    }

    /// Inference timestep just below `t` on the grid, if any.
    pub fn next_lower(&self, t: usize) -> Option<usize> {
        self.inference_timesteps.iter().copied().find(|&s| s < t)
    }
}

/// `√(1−ᾱ_t) / √ᾱ_t`.
pub fn noise_signal_ratio(schedule: &DiffusionSchedule, t: usize) -> Result<f64> {
    let a = schedule.alpha_bar(t)?;
    Ok(nsr_of(a))
}

pub(crate) fn nsr_of(alpha_bar: f64) -> f64 {
    (1.0 - alpha_bar).sqrt() / alpha_bar.sqrt()
}

/// Timestep whose noise-to-signal ratio best matches a shift of `strength`.
///
/// The target ratio is `strength · data_std / (0.5 · √dim)`; ties go to the
/// smaller timestep.
pub fn strength_to_timestep(
    strength: f64,
    schedule: &DiffusionSchedule,
    dim: usize,
    data_std: f64,
) -> Result<usize> {
    if !(strength >= 0.0 && strength.is_finite()) {
        return Err(Error::invalid(format!("strength must be non-negative, got {strength}")));
    }
    if dim == 0 || !(data_std > 0.0 && data_std.is_finite()) {
        return Err(Error::invalid("dimension and data std must be positive"));
    }
    let target = strength * data_std / (0.5 * (dim as f64).sqrt());
    let mut best = 0;
    let mut best_gap = f64::INFINITY;
    for (t, &a) in schedule.alphas_cumprod.iter().enumerate() {
        let gap = (nsr_of(a) - target).abs();
        if gap < best_gap {
            best = t;
            best_gap = gap;
        }
    }
    Ok(best)
}
