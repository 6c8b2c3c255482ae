use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::AttributedSplit;
use crate::error::{Error, Result};
use crate::evaluation::{DegradationCurve, Strategy};
use crate::geo::{perturb_dataset, CanonicalScale, DiffusionSchedule, GmmPrior, ProjectionConfig};
use crate::nn::{correctness, MlpConfig};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GoarConfig {
    /// Shift strengths in data units, ascending from 0.
    pub strengths: Vec<f64>,
    pub projection: ProjectionConfig,
    pub mlp: MlpConfig,
}

impl Default for GoarConfig {
    fn default() -> Self {
        Self {
            strengths: (0..=12).map(|i| i as f64 * 0.25).collect(),
            projection: ProjectionConfig::default(),
            mlp: MlpConfig::default(),
        }
    }
}

impl GoarConfig {
    /// Strengths `m · s · √d` for multipliers `m`, where `s` is the mean
    /// per-coordinate standard deviation of the training data.
    pub fn scaled_strengths(multipliers: &[f64], train: &crate::data::Dataset) -> Vec<f64> {
        let unit = train.mean_coordinate_std() * (train.dim as f64).sqrt();
        multipliers.iter().map(|m| m * unit).collect()
    }
}

/// Shifts train and test samples along their negated features at every
/// strength, projects them back toward the prior, retrains, and tracks which
/// test samples have been misclassified so far.
///
/// Every level starts from the original data. The strength-0 level is the
/// clean dataset itself.
pub fn run_goar(
    split: &AttributedSplit,
    cfg: &GoarConfig,
    prior: &GmmPrior,
    schedule: &DiffusionSchedule,
) -> Result<DegradationCurve> {
    if cfg.strengths.first() != Some(&0.0) {
        return Err(Error::invalid("the strength grid must start at 0"));
    }
    let strategy = if cfg.projection.project {
        Strategy::Goar
    } else {
        Strategy::GoarNoProjection
    };
    let scale = CanonicalScale::from_dataset(&split.train)?;
    let correct = cfg
        .strengths
        .par_iter()
        .enumerate()
        .map(|(j, &strength)| -> Result<Vec<bool>> {
            let (train, test) = if strength == 0.0 {
                (split.train.clone(), split.test.clone())
            } else {
                let level_seed = seed::derive(cfg.projection.seed, "goar-level", j as u64);
                let with_seed = |stream| ProjectionConfig {
                    seed: seed::derive(level_seed, stream, 0),
                    ..cfg.projection.clone()
                };
                (
                    perturb_dataset(&split.train, &split.attr_train, strength, &with_seed("train"), prior, schedule, &scale)?,
                    perturb_dataset(&split.test, &split.attr_test, strength, &with_seed("test"), prior, schedule, &scale)?,
                )
            };
            let model = cfg.mlp.fit_level(&train, j)?;
            correctness(&model, &test)
        })
        .collect::<Result<Vec<_>>>()?;
    DegradationCurve::from_levels(
        strategy,
        split.method_label(),
        &cfg.strengths,
        &correct,
        (0..cfg.strengths.len()).map(|j| cfg.mlp.level_seed(j)).collect(),
    )
}
