//! Shift-and-project perturbation: a diffusion noise schedule, an exact
//! Gaussian-mixture noise predictor and deterministic DDIM sampling.

mod denoise;
mod project;
mod schedule;

pub use denoise::{ddim_denoise, gmm_eps_predictor, GmmPrior, NoisePredictor};
pub use project::{
    perturb_dataset, project_to_manifold, project_to_manifold_with_noise, CanonicalScale,
    ProjectionConfig, CANONICAL_STD,
};
pub use schedule::{make_schedule, noise_signal_ratio, strength_to_timestep, DiffusionSchedule};
