//! End-to-end studies: the coordinate-removal pitfalls, the noise-blend
//! sweep, the ground-truth correlation study and the projection ablation.

use serde::{Deserialize, Serialize};

use crate::attribution::{
    attr_grad, attr_random, blend_with_noise, ground_truth_from_linear, normalize, AttributedSplit,
    Attribution, AttributionSpec, GroundTruthMode, Method, NoiseBlend,
};
use crate::data::{self, make_gmm, make_pitfall, random_rotation, rotate_dataset, Dataset, GmmSpec, PitfallSpec};
use crate::error::{Error, Result};
use crate::evaluation::{
    agreement_scores, correlation_table, default_k, normalized_area, performance_drop_score, run_goar,
    AgreementScores, BenchmarkDrops, CorrelationTable, DegradationCurve, GoarConfig, Strategy,
};
use crate::geo::{GmmPrior, ProjectionConfig};
use crate::nn::{fit_logistic, LogisticConfig, MlpConfig};
use crate::pixel::{run_pixel_strategy, PixelGrid, PixelOptions, Ranking};
use crate::seed;

/// Index of the first level whose accuracy falls below `threshold`.
pub fn first_level_below(curve: &DegradationCurve, threshold: f64) -> Option<usize> {
    curve.points.iter().position(|p| p.accuracy < threshold)
}

/// Normalized area under the accuracy curve.
pub fn accuracy_auc(curve: &DegradationCurve) -> Result<f64> {
    normalized_area(&curve.levels(), &curve.accuracies())
}

fn split_dataset(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    data::split(data, test_fraction, seed::derive(seed, "experiment-split", 0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PitfallConfig {
    pub dx: Vec<f64>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_cluster_std")]
    pub cluster_std: f64,
    #[serde(default = "default_pitfall_samples")]
    pub samples_per_class: usize,
    /// Feature whose ranking is compared against `alternative`.
    pub feature: Vec<f64>,
    /// Same relevant coordinates as `feature`, ranked differently.
    pub alternative: Vec<f64>,
    /// Dimension of the axis-aligned versus rotated comparison.
    #[serde(default = "default_rotation_dim")]
    pub rotation_dim: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub mlp: MlpConfig,
    pub seed: u64,
}

fn default_eps() -> f64 {
    0.01
}

fn default_cluster_std() -> f64 {
    0.05
}

fn default_pitfall_samples() -> usize {
    200
}

fn default_rotation_dim() -> usize {
    8
}

fn default_test_fraction() -> f64 {
    0.2
}

impl PitfallConfig {
    /// `dx = (1, 2, ε)` compared under features `(1, 2, 0)` and `(2, 1, 0)`.
    pub fn standard(seed: u64) -> Self {
        Self::for_dx(vec![1.0, 2.0, 0.01], seed)
    }

    /// The feature is `dx` with irrelevant coordinates zeroed; the
    /// alternative assigns the same values to the relevant coordinates in
    /// reverse order.
    pub fn for_dx(dx: Vec<f64>, seed: u64) -> Self {
        let eps = default_eps();
        let feature: Vec<f64> = dx.iter().map(|&v| if v.abs() > eps { v } else { 0.0 }).collect();
        let relevant: Vec<usize> = (0..dx.len()).filter(|&i| feature[i] != 0.0).collect();
        let mut alternative = feature.clone();
        for (&i, &j) in relevant.iter().zip(relevant.iter().rev()) {
            alternative[i] = feature[j];
        }
        Self {
            dx,
            eps,
            cluster_std: default_cluster_std(),
            samples_per_class: default_pitfall_samples(),
            feature,
            alternative,
            rotation_dim: default_rotation_dim(),
            test_fraction: default_test_fraction(),
            mlp: MlpConfig::default(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitfallReport {
    /// ROAR curves for `feature` and `alternative` on the same data.
    pub ranking_pair: [DegradationCurve; 2],
    /// ROAR curves for the axis-aligned and the rotated representation.
    pub rotation_pair: [DegradationCurve; 2],
}

fn pixel_options(mlp: &MlpConfig, seed: u64) -> PixelOptions {
    PixelOptions {
        mlp: mlp.clone(),
        seed: seed::derive(seed, "pixel", 0),
        ..PixelOptions::default()
    }
}

/// ROAR under two rankings of the same relevant coordinates.
pub fn pitfall_ranking_pair(cfg: &PitfallConfig) -> Result<[DegradationCurve; 2]> {
    let spec = PitfallSpec {
        dx: cfg.dx.clone(),
        eps: cfg.eps,
        cluster_std: cfg.cluster_std,
        samples_per_class: cfg.samples_per_class,
    };
    let data = make_pitfall(&spec, cfg.seed)?;
    let (train, test) = split_dataset(&data, cfg.test_fraction, cfg.seed)?;
    let grid = PixelGrid::every_coordinate(data.dim)?;
    let opts = pixel_options(&cfg.mlp, cfg.seed);
    let run = |feature: &[f64], name: &str| {
        let split = AttributedSplit::constant(
            train.clone(),
            test.clone(),
            feature,
            Method::Given { name: name.into() },
        )?;
        run_pixel_strategy(Strategy::Roar, &split, &grid, &opts)
    };
    Ok([run(&cfg.feature, "feature")?, run(&cfg.alternative, "alternative")?])
}

/// ROAR on a displacement of length `|dx|` along the first axis, and on the
/// same data after a random rotation with the feature rotated alike.
pub fn pitfall_rotation_pair(cfg: &PitfallConfig) -> Result<[DegradationCurve; 2]> {
    let d = cfg.rotation_dim;
    if d < 2 {
        return Err(Error::invalid("the rotation comparison needs at least 2 dimensions"));
    }
    let length = cfg.dx.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut dx = vec![0.0; d];
    dx[0] = length;
    let spec = PitfallSpec {
        dx: dx.clone(),
        eps: cfg.eps,
        cluster_std: cfg.cluster_std,
        samples_per_class: cfg.samples_per_class,
    };
    let data = make_pitfall(&spec, seed::derive(cfg.seed, "rotation-data", 0))?;
    let (train, test) = split_dataset(&data, cfg.test_fraction, cfg.seed)?;
    let rotation = random_rotation(d, seed::derive(cfg.seed, "rotation", 0))?;
    let rotated_dx = data::apply_matrix(&rotation, &dx)?;
    let grid = PixelGrid::every_coordinate(d)?;
    let opts = pixel_options(&cfg.mlp, cfg.seed);
    let axis = AttributedSplit::constant(
        train.clone(),
        test.clone(),
        &dx,
        Method::Given { name: "axis_aligned".into() },
    )?;
    let rotated = AttributedSplit::constant(
        rotate_dataset(&train, &rotation)?,
        rotate_dataset(&test, &rotation)?,
        &rotated_dx,
        Method::Given { name: "rotated".into() },
    )?;
    Ok([
        run_pixel_strategy(Strategy::Roar, &axis, &grid, &opts)?,
        run_pixel_strategy(Strategy::Roar, &rotated, &grid, &opts)?,
    ])
}

pub fn run_pitfall(cfg: &PitfallConfig) -> Result<PitfallReport> {
    Ok(PitfallReport {
        ranking_pair: pitfall_ranking_pair(cfg)?,
        rotation_pair: pitfall_rotation_pair(cfg)?,
    })
}

/// Multipliers `0, step, …, max` of the unit strength `s·√d`.
pub fn multiplier_grid(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step).round() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlendStudyConfig {
    #[serde(default = "default_blend_gmm")]
    pub gmm: GmmSpec,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    /// Shift strengths in units of `s·√d`, `s` the mean coordinate std.
    #[serde(default = "default_multipliers")]
    pub strength_multipliers: Vec<f64>,
    #[serde(default = "default_fractions")]
    pub pixel_fractions: Vec<f64>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub mlp: MlpConfig,
    #[serde(default)]
    pub projection: ProjectionConfig,
    /// Pixel strategies run alongside GOAR.
    #[serde(default = "default_blend_pixel")]
    pub pixel_strategies: Vec<Strategy>,
    pub seed: u64,
}

fn default_blend_gmm() -> GmmSpec {
    GmmSpec::symmetric(64, 0.3, 500)
}

fn default_lambdas() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

/// Up to 2.25 units; past that the gradient shift has carried every sample
/// across to the other cluster and further levels only repeat chance-level
/// retrains.
fn default_multipliers() -> Vec<f64> {
    multiplier_grid(2.25, 0.05)
}

fn default_fractions() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

fn default_blend_pixel() -> Vec<Strategy> {
    vec![Strategy::Roar]
}

impl BlendStudyConfig {
    /// 64-d two-class mixture with means `±(1, …, 1)` and variance 0.3.
    pub fn standard(seed: u64) -> Self {
        Self {
            gmm: default_blend_gmm(),
            lambdas: default_lambdas(),
            strength_multipliers: default_multipliers(),
            pixel_fractions: default_fractions(),
            test_fraction: default_test_fraction(),
            mlp: MlpConfig::default(),
            projection: ProjectionConfig::default(),
            pixel_strategies: default_blend_pixel(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendStudyReport {
    pub lambdas: Vec<f64>,
    pub goar: Vec<DegradationCurve>,
    /// Normalized area under each GOAR cumulative-misclassification curve.
    pub goar_auc: Vec<f64>,
    pub pixel: Vec<DegradationCurve>,
    /// Normalized area under each pixel accuracy curve, aligned with `pixel`.
    pub pixel_auc: Vec<f64>,
}

/// Trains the reference model and returns unit-normalized input gradients
/// for the train and test sets.
fn unit_gradients(train: &Dataset, test: &Dataset, mlp: &MlpConfig) -> Result<(Attribution, Attribution)> {
    let model = mlp.fit(train)?;
    Ok((normalize(&attr_grad(&model, train)?), normalize(&attr_grad(&model, test)?)))
}

/// Sweeps `v_λ = λ·v̂ + (1−λ)·w` from pure noise to the input gradient and
/// scores every blend with GOAR and the configured pixel strategies.
pub fn run_blend_study(cfg: &BlendStudyConfig) -> Result<BlendStudyReport> {
    let data = make_gmm(&cfg.gmm, cfg.seed)?;
    let (train, test) = split_dataset(&data, cfg.test_fraction, cfg.seed)?;
    let (grad_train, grad_test) = unit_gradients(&train, &test, &cfg.mlp)?;
    let prior = GmmPrior::from_spec(&cfg.gmm)?;
    let schedule = cfg.projection.schedule()?;
    let goar_cfg = GoarConfig {
        strengths: GoarConfig::scaled_strengths(&cfg.strength_multipliers, &train),
        projection: cfg.projection.clone(),
        mlp: cfg.mlp.clone(),
    };
    let grid = PixelGrid::new(cfg.pixel_fractions.clone())?;
    let opts = pixel_options(&cfg.mlp, cfg.seed);

    let mut report = BlendStudyReport {
        lambdas: cfg.lambdas.clone(),
        goar: Vec::new(),
        goar_auc: Vec::new(),
        pixel: Vec::new(),
        pixel_auc: Vec::new(),
    };
    for (i, &lambda) in cfg.lambdas.iter().enumerate() {
        let blend = |attr: &Attribution, stream: &str| {
            blend_with_noise(attr, NoiseBlend::new(lambda, seed::derive(cfg.seed, stream, i as u64))?)
        };
        let split = AttributedSplit::new(
            train.clone(),
            test.clone(),
            blend(&grad_train, "blend-train")?,
            blend(&grad_test, "blend-test")?,
        )?;
        let curve = run_goar(&split, &goar_cfg, &prior, &schedule)?;
        report.goar_auc.push(performance_drop_score(&curve)?);
        report.goar.push(curve);
        for &strategy in &cfg.pixel_strategies {
            let curve = run_pixel_strategy(strategy, &split, &grid, &opts)?;
            report.pixel_auc.push(accuracy_auc(&curve)?);
            report.pixel.push(curve);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationStudyConfig {
    #[serde(default = "default_corr_gmm")]
    pub gmm: GmmSpec,
    #[serde(default = "AttributionSpec::standard_set")]
    pub methods: Vec<AttributionSpec>,
    #[serde(default = "default_corr_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_multipliers")]
    pub strength_multipliers: Vec<f64>,
    /// Removal fractions; defaults to one coordinate per level.
    #[serde(default)]
    pub pixel_fractions: Option<Vec<f64>>,
    #[serde(default = "default_ground_truth")]
    pub ground_truth: GroundTruthMode,
    #[serde(default)]
    pub logistic: LogisticConfig,
    /// Which trained model the attribution methods explain.
    #[serde(default)]
    pub explain: ExplainedModel,
    /// Top-k size for the agreement metrics; defaults to a quarter of the features.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub ranking: Ranking,
    #[serde(default = "default_bootstrap")]
    pub n_bootstrap: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub mlp: MlpConfig,
    #[serde(default)]
    pub projection: ProjectionConfig,
    pub seed: u64,
}

/// Model whose predictions the attribution methods explain in the
/// correlation study. The benchmarks always retrain MLPs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainedModel {
    /// The logistic regression that also supplies the ground truth.
    #[default]
    Logistic,
    Mlp,
}

fn default_corr_gmm() -> GmmSpec {
    graded_gmm(20, 0.3, 300)
}

fn default_corr_strategies() -> Vec<Strategy> {
    vec![Strategy::Goar, Strategy::Roar, Strategy::Evalx]
}

fn default_ground_truth() -> GroundTruthMode {
    GroundTruthMode::Coefficient
}

fn default_bootstrap() -> usize {
    1000
}

/// Two-class means `±m` whose coordinates fall off linearly from 1 to `1/d`,
/// so features differ in importance.
pub fn graded_gmm(dim: usize, cov_scale: f64, samples_per_class: usize) -> GmmSpec {
    let m: Vec<f64> = (0..dim).map(|j| (dim - j) as f64 / dim as f64).collect();
    GmmSpec {
        means: vec![m.clone(), m.iter().map(|v| -v).collect()],
        cov_scale,
        weights: vec![0.5, 0.5],
        samples_per_class,
    }
}

impl CorrelationStudyConfig {
    pub fn standard(seed: u64) -> Self {
        Self {
            gmm: default_corr_gmm(),
            methods: AttributionSpec::standard_set(),
            strategies: default_corr_strategies(),
            strength_multipliers: default_multipliers(),
            pixel_fractions: None,
            ground_truth: default_ground_truth(),
            logistic: LogisticConfig::default(),
            explain: ExplainedModel::Logistic,
            k: None,
            ranking: Ranking::Value,
            n_bootstrap: default_bootstrap(),
            test_fraction: default_test_fraction(),
            mlp: MlpConfig::default(),
            projection: ProjectionConfig::default(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationStudyReport {
    pub methods: Vec<String>,
    pub agreements: Vec<AgreementScores>,
    pub curves: Vec<DegradationCurve>,
    pub drops: Vec<BenchmarkDrops>,
    pub table: CorrelationTable,
}

/// Scores every attribution method against logistic-regression ground truth
/// and under every benchmark, then correlates the two across methods.
pub fn run_correlation_study(cfg: &CorrelationStudyConfig) -> Result<CorrelationStudyReport> {
    let data = make_gmm(&cfg.gmm, cfg.seed)?;
    let (train, test) = split_dataset(&data, cfg.test_fraction, cfg.seed)?;
    let lm = fit_logistic(&train, &cfg.logistic)?;
    let mlp = match cfg.explain {
        ExplainedModel::Mlp => Some(cfg.mlp.fit(&train)?),
        ExplainedModel::Logistic => None,
    };
    let truth = ground_truth_from_linear(&lm, &test, cfg.ground_truth)?;
    let k = cfg.k.unwrap_or_else(|| default_k(data.dim));

    let prior = GmmPrior::from_spec(&cfg.gmm)?;
    let schedule = cfg.projection.schedule()?;
    let grid = match &cfg.pixel_fractions {
        Some(f) => PixelGrid::new(f.clone())?,
        None => PixelGrid::every_coordinate(data.dim)?,
    };
    let opts = PixelOptions {
        ranking: cfg.ranking,
        ..pixel_options(&cfg.mlp, cfg.seed)
    };
    let goar_cfg = |project| GoarConfig {
        strengths: GoarConfig::scaled_strengths(&cfg.strength_multipliers, &train),
        projection: ProjectionConfig {
            project,
            ..cfg.projection.clone()
        },
        mlp: cfg.mlp.clone(),
    };

    let mut methods = Vec::new();
    let mut agreements = Vec::new();
    let mut curves = Vec::new();
    let mut drops: Vec<BenchmarkDrops> = cfg
        .strategies
        .iter()
        .map(|s| BenchmarkDrops {
            benchmark: s.label().into(),
            drops: Vec::new(),
        })
        .collect();
    for (mi, spec) in cfg.methods.iter().enumerate() {
        let method_seed = seed::derive(cfg.seed, "method", mi as u64);
        let explain = |d: &Dataset, stream| {
            let s = seed::derive(method_seed, stream, 0);
            match &mlp {
                Some(m) => spec.compute(m, d, s),
                None => spec.compute(&lm, d, s),
            }
        };
        let attr_train = explain(&train, "train")?;
        let attr_test = explain(&test, "test")?;
        agreements.push(agreement_scores(&attr_test, &truth, k, cfg.ranking)?);
        methods.push(spec.label().to_string());
        let split = AttributedSplit::new(train.clone(), test.clone(), normalize(&attr_train), normalize(&attr_test))?;
        for (si, &strategy) in cfg.strategies.iter().enumerate() {
            let curve = match strategy {
                Strategy::Goar => run_goar(&split, &goar_cfg(true), &prior, &schedule)?,
                Strategy::GoarNoProjection => run_goar(&split, &goar_cfg(false), &prior, &schedule)?,
                pixel => run_pixel_strategy(pixel, &split, &grid, &opts)?,
            };
            drops[si].drops.push(performance_drop_score(&curve)?);
            curves.push(curve);
        }
    }
    let table = correlation_table(&drops, &agreements, cfg.n_bootstrap, seed::derive(cfg.seed, "correlation", 0))?;
    Ok(CorrelationStudyReport {
        methods,
        agreements,
        curves,
        drops,
        table,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationConfig {
    #[serde(default = "default_ablation_gmm")]
    pub gmm: GmmSpec,
    #[serde(default = "default_multipliers")]
    pub strength_multipliers: Vec<f64>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub mlp: MlpConfig,
    #[serde(default)]
    pub projection: ProjectionConfig,
    pub seed: u64,
}

fn default_ablation_gmm() -> GmmSpec {
    GmmSpec::symmetric(64, 0.3, 250)
}

impl AblationConfig {
    pub fn standard(seed: u64) -> Self {
        Self {
            gmm: default_ablation_gmm(),
            strength_multipliers: default_multipliers(),
            test_fraction: default_test_fraction(),
            mlp: MlpConfig::default(),
            projection: ProjectionConfig::default(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    /// Grad and Random under GOAR with projection.
    pub projected: [DegradationCurve; 2],
    /// Grad and Random when the shifted points are used directly.
    pub shift_only: [DegradationCurve; 2],
    pub projected_auc: [f64; 2],
    pub shift_only_auc: [f64; 2],
}

/// Compares input gradients with random directions under GOAR with and
/// without the projection step.
pub fn run_ablation(cfg: &AblationConfig) -> Result<AblationReport> {
    let data = make_gmm(&cfg.gmm, cfg.seed)?;
    let (train, test) = split_dataset(&data, cfg.test_fraction, cfg.seed)?;
    let (grad_train, grad_test) = unit_gradients(&train, &test, &cfg.mlp)?;
    let random = |d: &Dataset, stream| attr_random(d, seed::derive(cfg.seed, stream, 0));
    let grad = AttributedSplit::new(train.clone(), test.clone(), grad_train, grad_test)?;
    let rand = AttributedSplit::new(train.clone(), test.clone(), random(&train, "random-train")?, random(&test, "random-test")?)?;
    let prior = GmmPrior::from_spec(&cfg.gmm)?;
    let schedule = cfg.projection.schedule()?;
    let run = |split: &AttributedSplit, project| {
        let goar = GoarConfig {
            strengths: GoarConfig::scaled_strengths(&cfg.strength_multipliers, &train),
            projection: ProjectionConfig {
                project,
                ..cfg.projection.clone()
            },
            mlp: cfg.mlp.clone(),
        };
        run_goar(split, &goar, &prior, &schedule)
    };
    let projected = [run(&grad, true)?, run(&rand, true)?];
    let shift_only = [run(&grad, false)?, run(&rand, false)?];
    Ok(AblationReport {
        projected_auc: [performance_drop_score(&projected[0])?, performance_drop_score(&projected[1])?],
        shift_only_auc: [performance_drop_score(&shift_only[0])?, performance_drop_score(&shift_only[1])?],
        projected,
        shift_only,
    })
}

/// Where a custom run gets its data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Gmm(GmmSpec),
    Pitfall(PitfallSpec),
    Csv {
        path: std::path::PathBuf,
        label_column: String,
        feature_columns: Vec<String>,
    },
}

impl DatasetSource {
    /// The dataset and the prior GOAR projects onto.
    pub fn load(&self, seed: u64) -> Result<(Dataset, GmmPrior)> {
        match self {
            DatasetSource::Gmm(spec) => Ok((make_gmm(spec, seed)?, GmmPrior::from_spec(spec)?)),
            DatasetSource::Pitfall(spec) => {
                let data = make_pitfall(spec, seed)?;
                let variance = (spec.cluster_std * spec.cluster_std).max(1e-12);
                let prior = GmmPrior::new(vec![vec![0.0; spec.dx.len()], spec.dx.clone()], variance, vec![0.5, 0.5])?;
                Ok((data, prior))
            }
            DatasetSource::Csv {
                path,
                label_column,
                feature_columns,
            } => {
                let columns: Vec<&str> = feature_columns.iter().map(String::as_str).collect();
                let data = data::load_csv(path, label_column, &columns)?.dataset;
                let prior = GmmPrior::from_class_statistics(&data)?;
                Ok((data, prior))
            }
        }
    }
}

/// Any attribution methods under any strategies on any dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomCurveConfig {
    pub dataset: DatasetSource,
    #[serde(default = "AttributionSpec::standard_set")]
    pub methods: Vec<AttributionSpec>,
    #[serde(default = "default_custom_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_multipliers")]
    pub strength_multipliers: Vec<f64>,
    /// Removal fractions; defaults to one coordinate per level.
    #[serde(default)]
    pub pixel_fractions: Option<Vec<f64>>,
    #[serde(default)]
    pub pixel: PixelSettings,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub mlp: MlpConfig,
    #[serde(default)]
    pub projection: ProjectionConfig,
    pub seed: u64,
}

/// Pixel-strategy knobs of a custom run; the network and seed come from the
/// run itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PixelSettings {
    pub ranking: Ranking,
    pub road_noise_std: f64,
    /// Grid layout for ROAD; `None` treats the features as one row.
    pub grid_shape: Option<(usize, usize)>,
    pub evalx_mask_prob: f64,
}

impl Default for PixelSettings {
    fn default() -> Self {
        let o = PixelOptions::default();
        Self {
            ranking: o.ranking,
            road_noise_std: o.road_noise_std,
            grid_shape: o.grid_shape,
            evalx_mask_prob: o.evalx_mask_prob,
        }
    }
}

fn default_custom_strategies() -> Vec<Strategy> {
    vec![Strategy::Goar, Strategy::Roar]
}

/// Curves for every (method, strategy) pair, methods in outer order.
pub fn run_custom_curves(cfg: &CustomCurveConfig) -> Result<Vec<DegradationCurve>> {
    let (data, prior) = cfg.dataset.load(cfg.seed)?;
    let (train, test) = split_dataset(&data, cfg.test_fraction, cfg.seed)?;
    let model = cfg.mlp.fit(&train)?;
    let schedule = cfg.projection.schedule()?;
    let grid = match &cfg.pixel_fractions {
        Some(f) => PixelGrid::new(f.clone())?,
        None => PixelGrid::every_coordinate(data.dim)?,
    };
    let opts = PixelOptions {
        ranking: cfg.pixel.ranking,
        road_noise_std: cfg.pixel.road_noise_std,
        grid_shape: cfg.pixel.grid_shape,
        evalx_mask_prob: cfg.pixel.evalx_mask_prob,
        ..pixel_options(&cfg.mlp, cfg.seed)
    };
    let mut curves = Vec::new();
    for (mi, spec) in cfg.methods.iter().enumerate() {
        let method_seed = seed::derive(cfg.seed, "method", mi as u64);
        let attr_train = spec.compute(&model, &train, seed::derive(method_seed, "train", 0))?;
        let attr_test = spec.compute(&model, &test, seed::derive(method_seed, "test", 0))?;
        let split = AttributedSplit::new(train.clone(), test.clone(), normalize(&attr_train), normalize(&attr_test))?;
        for &strategy in &cfg.strategies {
            let curve = if strategy.is_pixel() {
                run_pixel_strategy(strategy, &split, &grid, &opts)?
            } else {
                let goar = GoarConfig {
                    strengths: GoarConfig::scaled_strengths(&cfg.strength_multipliers, &train),
                    projection: ProjectionConfig {
                        project: strategy == Strategy::Goar,
                        ..cfg.projection.clone()
                    },
                    mlp: cfg.mlp.clone(),
                };
                run_goar(&split, &goar, &prior, &schedule)?
            };
            curves.push(curve);
        }
    }
    Ok(curves)
}
