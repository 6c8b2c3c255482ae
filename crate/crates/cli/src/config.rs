//! Experiment files.
//!
//! A config is a TOML document with an optional `output_dir` and exactly one
//! `[experiment.<kind>]` table, where `<kind>` is `pitfall`, `blend_study`,
//! `openxai_corr`, `ablation` or `custom_curve`. The table holds the fields of
//! the matching study configuration; every study requires a `seed`. Unknown
//! keys anywhere are errors.
//!
//! ```toml
//! output_dir = "results/pitfall"
//!
//! [experiment.pitfall]
//! seed = 0
//! dx = [1.0, 2.0, 0.01]
//! feature = [1.0, 2.0, 0.0]
//! alternative = [2.0, 1.0, 0.0]
//! ```

use std::path::{Path, PathBuf};

use goar_core::data::GmmSpec;
use goar_core::experiments::{
    AblationConfig, BlendStudyConfig, CorrelationStudyConfig, CustomCurveConfig, DatasetSource, PitfallConfig,
};
use goar_core::geo::ProjectionConfig;
use goar_core::nn::MlpConfig;
use goar_core::pixel::PixelGrid;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Pitfall(PitfallConfig),
    BlendStudy(BlendStudyConfig),
    OpenxaiCorr(CorrelationStudyConfig),
    Ablation(AblationConfig),
    CustomCurve(CustomCurveConfig),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Pitfall(_) => "pitfall",
            Experiment::BlendStudy(_) => "blend_study",
            Experiment::OpenxaiCorr(_) => "openxai_corr",
            Experiment::Ablation(_) => "ablation",
            Experiment::CustomCurve(_) => "custom_curve",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Experiment::Pitfall(c) => c.seed,
            Experiment::BlendStudy(c) => c.seed,
            Experiment::OpenxaiCorr(c) => c.seed,
            Experiment::Ablation(c) => c.seed,
            Experiment::CustomCurve(c) => c.seed,
        }
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config_str(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}:{m}", path.display())),
        other => other,
    })
}

/// Parses and validates a config. Errors read `<line>: <message>`.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(1, |s| line_of_offset(text, s.start));
        CliError::Config(format!("{line}: {}", e.message().trim()))
    })?;
    cfg.validate().map_err(|(key, msg)| {
        let line = line_of_key(text, key).unwrap_or(1);
        CliError::Config(format!("{line}: `{key}`: {msg}"))
    })?;
    Ok(cfg)
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// First line assigning `key`, or opening a table named `key`.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        let assigns = l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='));
        let table = l.starts_with('[') && l.trim_matches(|c| c == '[' || c == ']').split('.').any(|p| p.trim() == key);
        assigns || table
    })
    .map(|i| i + 1)
}

type Invalid = (&'static str, String);

fn check(key: &'static str, r: goar_core::Result<()>) -> Result<(), Invalid> {
    r.map_err(|e| (key, e.to_string()))
}

fn check_fraction(key: &'static str, v: f64) -> Result<(), Invalid> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err((key, format!("must lie in (0, 1), got {v}")))
    }
}

fn check_multipliers(v: &[f64]) -> Result<(), Invalid> {
    let key = "strength_multipliers";
    if v.first() != Some(&0.0) {
        return Err((key, "must start at 0".into()));
    }
    if v.iter().any(|m| !m.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err((key, "must be finite and strictly ascending".into()));
    }
    Ok(())
}

fn check_common(mlp: &MlpConfig, projection: Option<&ProjectionConfig>, test_fraction: f64) -> Result<(), Invalid> {
    if mlp.hidden.contains(&0) {
        return Err(("hidden", "layer widths must be positive".into()));
    }
    check("train", mlp.train.validate())?;
    if let Some(p) = projection {
        check("projection", p.validate())?;
    }
    check_fraction("test_fraction", test_fraction)
}

fn check_gmm(gmm: &GmmSpec) -> Result<(), Invalid> {
    check("gmm", gmm.validate())
}

fn check_pixel_fractions(f: &Option<Vec<f64>>) -> Result<(), Invalid> {
    match f {
        Some(f) => check("pixel_fractions", PixelGrid::new(f.clone()).map(|_| ())),
        None => Ok(()),
    }
}

impl ExperimentConfig {
    /// Semantic checks that the deserializer cannot express. Returns the
    /// offending key and a message.
    pub fn validate(&self) -> Result<(), Invalid> {
        match &self.experiment {
            Experiment::Pitfall(c) => {
                check("dx", goar_core::data::PitfallSpec {
                    dx: c.dx.clone(),
                    eps: c.eps,
                    cluster_std: c.cluster_std,
                    samples_per_class: c.samples_per_class,
                }
                .validate())?;
                for (key, v) in [("feature", &c.feature), ("alternative", &c.alternative)] {
                    if v.len() != c.dx.len() {
                        return Err((key, format!("has {} entries but dx has {}", v.len(), c.dx.len())));
                    }
                }
                if c.rotation_dim < 2 {
                    return Err(("rotation_dim", "must be at least 2".into()));
                }
                check_common(&c.mlp, None, c.test_fraction)
            }
            Experiment::BlendStudy(c) => {
                check_gmm(&c.gmm)?;
                if c.lambdas.is_empty() || c.lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
                    return Err(("lambdas", "must be a non-empty list of values in [0, 1]".into()));
                }
                check_multipliers(&c.strength_multipliers)?;
                check_pixel_fractions(&Some(c.pixel_fractions.clone()))?;
                if let Some(s) = c.pixel_strategies.iter().find(|s| !s.is_pixel()) {
                    return Err(("pixel_strategies", format!("`{}` is not a pixel strategy", s.label())));
                }
                check_common(&c.mlp, Some(&c.projection), c.test_fraction)
            }
            Experiment::OpenxaiCorr(c) => {
                check_gmm(&c.gmm)?;
                if c.gmm.means.len() != 2 {
                    return Err(("gmm", "the correlation study needs a two-class mixture".into()));
                }
                if c.methods.len() < 3 {
                    return Err(("methods", "correlations need at least 3 methods".into()));
                }
                if c.strategies.is_empty() {
                    return Err(("strategies", "must not be empty".into()));
                }
                if let Some(k) = c.k {
                    if k == 0 || k > c.gmm.dim() {
                        return Err(("k", format!("must lie in [1, {}]", c.gmm.dim())));
                    }
                }
                check_multipliers(&c.strength_multipliers)?;
                check_pixel_fractions(&c.pixel_fractions)?;
                check_common(&c.mlp, Some(&c.projection), c.test_fraction)
            }
            Experiment::Ablation(c) => {
                check_gmm(&c.gmm)?;
                check_multipliers(&c.strength_multipliers)?;
                check_common(&c.mlp, Some(&c.projection), c.test_fraction)
            }
            Experiment::CustomCurve(c) => {
                match &c.dataset {
                    DatasetSource::Gmm(g) => check_gmm(g)?,
                    DatasetSource::Pitfall(p) => check("pitfall", p.validate())?,
                    DatasetSource::Csv { feature_columns, .. } if feature_columns.is_empty() => {
                        return Err(("feature_columns", "must name at least one column".into()));
                    }
                    DatasetSource::Csv { .. } => {}
                }
                if c.methods.is_empty() {
                    return Err(("methods", "must not be empty".into()));
                }
                if c.strategies.is_empty() {
                    return Err(("strategies", "must not be empty".into()));
                }
                check_multipliers(&c.strength_multipliers)?;
                check_pixel_fractions(&c.pixel_fractions)?;
                check_common(&c.mlp, Some(&c.projection), c.test_fraction)
            }
        }
    }
}
