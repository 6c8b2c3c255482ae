use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use goar_cli::report::CURVES_FILE;
use goar_cli::{emit_svg_plot, parse_config, resolve_output_dir, run_experiment, CliError, Experiment, ExperimentConfig, Plot, Series};
use goar_core::experiments::{BlendStudyConfig, CorrelationStudyConfig, PitfallConfig};

#[derive(Parser)]
#[command(name = "goar", version, about = "Benchmarks for feature attributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML file.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ROAR on the two-cluster pitfall data.
    Pitfall {
        /// Cluster displacement, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1,2,0.01")]
        dx: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Gradient blended with noise, scored by GOAR and the pixel benchmarks.
    Blend {
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Benchmark scores against agreement with a logistic-regression ground truth.
    Openxai {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Redraw a chart from a curves.csv.
    Plot {
        curves: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = PlotMetric::Accuracy)]
        metric: PlotMetric,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotMetric {
    Accuracy,
    Cumulative,
}

fn configure_workers() -> Result<(), CliError> {
    let Ok(value) = std::env::var("GOAR_WORKERS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("GOAR_WORKERS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn run(cfg: ExperimentConfig, out: Option<&Path>) -> Result<(), CliError> {
    cfg.validate()
        .map_err(|(key, msg)| CliError::Config(format!("`{key}`: {msg}")))?;
    let dir = resolve_output_dir(&cfg, out);
    let outputs = run_experiment(&cfg, &dir)?;
    println!("{}: wrote {} files to {}", cfg.experiment.kind(), outputs.artifacts.len(), dir.display());
    Ok(())
}

fn inline(experiment: Experiment, out: &Path) -> Result<(), CliError> {
    run(ExperimentConfig { output_dir: None, experiment }, Some(out))
}

fn plot(curves: &Path, out: &Path, metric: PlotMetric) -> Result<(), CliError> {
    let mut reader = csv::Reader::from_path(curves).map_err(|e| CliError::Config(format!("{}: {e}", curves.display())))?;
    let column = match metric {
        PlotMetric::Accuracy => "accuracy",
        PlotMetric::Cumulative => "cumulative_misclassified",
    };
    let headers = reader.headers().map_err(|e| CliError::io(curves, e))?.clone();
    let index = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("{}: missing column `{name}`", curves.display())))
    };
    let (si, mi, li, vi) = (index("strategy")?, index("method")?, index("level")?, index(column)?);
    let mut series: Vec<Series> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::io(curves, e))?;
        let number = |i: usize| {
            record[i]
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("{}: row {}: {e}", curves.display(), row + 2)))
        };
        let label = format!("{} {}", &record[si], &record[mi]);
        let point = (number(li)?, number(vi)?);
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push(point),
            None => series.push(Series { label, points: vec![point] }),
        }
    }
    let title = curves.file_stem().map_or(CURVES_FILE.into(), |s| s.to_string_lossy().into_owned());
    let chart = Plot {
        title,
        x_label: "level".into(),
        y_label: column.replace('_', " "),
        series,
    };
    emit_svg_plot(&chart, out)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    configure_workers()?;
    match cli.command {
        Command::Run { config, out } => run(parse_config(&config)?, out.as_deref()),
        Command::Pitfall { dx, out, seed } => inline(Experiment::Pitfall(PitfallConfig::for_dx(dx, seed)), &out),
        Command::Blend { lambdas, out, seed } => {
            let mut cfg = BlendStudyConfig::standard(seed);
            if let Some(l) = lambdas {
                cfg.lambdas = l;
            }
            inline(Experiment::BlendStudy(cfg), &out)
        }
        Command::Openxai { out, seed } => inline(Experiment::OpenxaiCorr(CorrelationStudyConfig::standard(seed)), &out),
        Command::Plot { curves, out, metric } => plot(&curves, &out, metric),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
