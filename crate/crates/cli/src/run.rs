//! Runs a parsed config and writes its artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use goar_core::evaluation::{AgreementScores, CorrelationTable, DegradationCurve, Strategy};
use goar_core::experiments::{
    run_ablation, run_blend_study, run_correlation_study, run_custom_curves, run_pitfall,
};
use serde_json::json;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::report::{self, CurveSeeds, Environment, Manifest};
use crate::svg::{emit_svg_plot, Plot, Series};

/// What a finished run wrote.
#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub dir: PathBuf,
    /// File names inside `dir`, manifest last.
    pub artifacts: Vec<String>,
    pub curves: Vec<DegradationCurve>,
    pub summary: serde_json::Value,
}

#[derive(Default)]
struct Outcome {
    curves: Vec<DegradationCurve>,
    agreements: Vec<(String, AgreementScores)>,
    correlations: Option<CorrelationTable>,
    summary: serde_json::Value,
    plots: Vec<(String, Plot)>,
}

fn x_label(strategy: Strategy) -> &'static str {
    if strategy.is_pixel() {
        "fraction of features removed"
    } else {
        "perturbation strength"
    }
}

fn curve_series(curve: &DegradationCurve, cumulative: bool) -> Series {
    Series {
        label: curve.method.clone(),
        points: curve
            .points
            .iter()
            .map(|p| (p.level, if cumulative { p.cumulative_misclassified } else { p.accuracy }))
            .collect(),
    }
}

/// Plots accuracy for pixel strategies and cumulative misclassification for
/// the shift strategies.
fn curve_plot(title: String, strategy: Strategy, curves: &[&DegradationCurve]) -> Plot {
    let cumulative = !strategy.is_pixel();
    Plot {
        title,
        x_label: x_label(strategy).into(),
        y_label: if cumulative { "cumulative misclassified" } else { "test accuracy" }.into(),
        series: curves.iter().map(|c| curve_series(c, cumulative)).collect(),
    }
}

/// One chart per strategy, series in curve order.
fn plots_by_strategy(curves: &[DegradationCurve]) -> Vec<(String, Plot)> {
    let mut groups: BTreeMap<Strategy, Vec<&DegradationCurve>> = BTreeMap::new();
    for c in curves {
        groups.entry(c.strategy).or_default().push(c);
    }
    groups
        .into_iter()
        .map(|(s, cs)| (format!("curves_{}.svg", s.label()), curve_plot(s.label().to_uppercase(), s, &cs)))
        .collect()
}

fn execute(experiment: &Experiment) -> Result<Outcome, CliError> {
    Ok(match experiment {
        Experiment::Pitfall(c) => {
            let r = run_pitfall(c)?;
            let first_below = |curve: &DegradationCurve| goar_core::experiments::first_level_below(curve, 0.6);
            let plots = vec![
                (
                    "pitfall_ranking.svg".into(),
                    curve_plot("ROAR under two rankings".into(), Strategy::Roar, &r.ranking_pair.iter().collect::<Vec<_>>()),
                ),
                (
                    "pitfall_rotation.svg".into(),
                    curve_plot("ROAR before and after rotation".into(), Strategy::Roar, &r.rotation_pair.iter().collect::<Vec<_>>()),
                ),
            ];
            let summary = json!({
                "first_level_below_0.6": {
                    "feature": first_below(&r.ranking_pair[0]),
                    "alternative": first_below(&r.ranking_pair[1]),
                    "axis_aligned": first_below(&r.rotation_pair[0]),
                    "rotated": first_below(&r.rotation_pair[1]),
                }
            });
            let mut curves = r.ranking_pair.to_vec();
            curves.extend(r.rotation_pair);
            Outcome { curves, summary, plots, ..Outcome::default() }
        }
        Experiment::BlendStudy(c) => {
            let r = run_blend_study(c)?;
            let pixel_auc: BTreeMap<String, f64> = r
                .pixel
                .iter()
                .zip(&r.pixel_auc)
                .map(|(curve, auc)| (format!("{}/{}", curve.strategy, curve.method), *auc))
                .collect();
            let summary = json!({
                "lambdas": r.lambdas,
                "goar_auc": r.goar_auc,
                "pixel_accuracy_auc": pixel_auc,
            });
            let mut curves = r.goar;
            curves.extend(r.pixel);
            Outcome { plots: plots_by_strategy(&curves), curves, summary, ..Outcome::default() }
        }
        Experiment::OpenxaiCorr(c) => {
            let r = run_correlation_study(c)?;
            let drops: BTreeMap<&str, BTreeMap<&str, f64>> = r
                .drops
                .iter()
                .map(|b| (b.benchmark.as_str(), r.methods.iter().map(String::as_str).zip(b.drops.iter().copied()).collect()))
                .collect();
            let summary = json!({ "methods": r.methods, "drop_scores": drops });
            Outcome {
                plots: plots_by_strategy(&r.curves),
                agreements: r.methods.iter().cloned().zip(r.agreements.iter().copied()).collect(),
                correlations: Some(r.table),
                curves: r.curves,
                summary,
            }
        }
        Experiment::Ablation(c) => {
            let r = run_ablation(c)?;
            let summary = json!({
                "projected": { "grad": r.projected_auc[0], "random": r.projected_auc[1] },
                "shift_only": { "grad": r.shift_only_auc[0], "random": r.shift_only_auc[1] },
            });
            let mut curves = r.projected.to_vec();
            curves.extend(r.shift_only);
            Outcome { plots: plots_by_strategy(&curves), curves, summary, ..Outcome::default() }
        }
        Experiment::CustomCurve(c) => {
            let curves = run_custom_curves(c)?;
            let drops = curves
                .iter()
                .map(|curve| {
                    let d = goar_core::evaluation::performance_drop_score(curve)?;
                    Ok((format!("{}/{}", curve.strategy, curve.method), d))
                })
                .collect::<Result<BTreeMap<_, _>, goar_core::Error>>()?;
            Outcome { plots: plots_by_strategy(&curves), curves, summary: json!({ "drop_scores": drops }), ..Outcome::default() }
        }
    })
}

fn write_artifacts(dir: &Path, outcome: &Outcome, artifacts: &mut Vec<String>) -> Result<(), CliError> {
    report::write_curves(&dir.join(report::CURVES_FILE), &outcome.curves)?;
    artifacts.push(report::CURVES_FILE.into());
    report::write_agreement(&dir.join(report::AGREEMENT_FILE), &outcome.agreements)?;
    artifacts.push(report::AGREEMENT_FILE.into());
    report::write_correlations(&dir.join(report::CORRELATIONS_FILE), outcome.correlations.as_ref())?;
    artifacts.push(report::CORRELATIONS_FILE.into());
    for (name, plot) in &outcome.plots {
        emit_svg_plot(plot, &dir.join(name))?;
        artifacts.push(name.clone());
    }
    Ok(())
}

/// Runs the experiment and writes everything into `out_dir`. If anything
/// fails after the directory exists, a manifest with `status = "failed"`
/// and the error is still written.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutputs, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let start = Instant::now();
    let mut artifacts = Vec::new();
    let result = execute(&cfg.experiment).and_then(|o| write_artifacts(out_dir, &o, &mut artifacts).map(|()| o));
    let (status, error, o) = match result {
        Ok(o) => ("complete", None, o),
        Err(e) => ("failed", Some(e), Outcome::default()),
    };
    artifacts.push(report::MANIFEST_FILE.into());
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        status,
        error: error.as_ref().map(ToString::to_string),
        experiment: cfg.experiment.kind().into(),
        config: serde_json::to_value(cfg).map_err(|e| CliError::Runtime(e.to_string()))?,
        curve_seeds: o.curves.iter().map(CurveSeeds::from).collect(),
        summary: o.summary.clone(),
        artifacts: artifacts.clone(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        environment: Environment::current(),
    };
    report::write_manifest(&out_dir.join(report::MANIFEST_FILE), &manifest)?;
    if let Some(e) = error {
        return Err(e);
    }
    Ok(RunOutputs {
        dir: out_dir.to_path_buf(),
        artifacts,
        curves: o.curves,
        summary: o.summary,
    })
}

/// Output directory: the explicit override, else the config's, else
/// `results/<experiment>`.
pub fn resolve_output_dir(cfg: &ExperimentConfig, explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results").join(cfg.experiment.kind()))
}
