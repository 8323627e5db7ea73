//! `dataprep`: profile a CSV file, build a cleaning plan, replay it, and
//! ask for plot recommendations.
//!
//! Exit codes: 0 success, 1 other failure, 2 constraint violation after
//! execution, 3 unreadable input (CSV or plan/constraint documents).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dataprep_core::cleaner::ConstraintSet;
use dataprep_core::eda::{
    builtin_plot_rows, profile_column, profile_pair, recommend_plot, train_plot_svm, SvmConfig,
};
use dataprep_core::fixtures::{air_quality_like, house_prices_like};
use dataprep_core::pipeline::{
    constraints_from_json, eda_summary, execute_plan, export_csv, export_report, fingerprint, plan_for_bytes,
    CleaningPlan, PipelineError, PlanOptions, ReportOptions, RunReport,
};
use dataprep_core::tabular::{parse_csv, ParseOptions, TabularError};
use thiserror::Error;

#[derive(Parser)]
#[command(name = "dataprep", version, about = "Profile, clean and preprocess tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct InputArgs {
    /// CSV input file.
    file: PathBuf,
    /// Field delimiter.
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

impl InputArgs {
    fn parse_options(&self) -> ParseOptions {
        ParseOptions {
            delimiter: self.delimiter,
            ..ParseOptions::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureKind {
    HousePrices,
    AirQuality,
}

#[derive(Subcommand)]
enum Command {
    /// Print type inference, column and pair profiles, plots, rules and the
    /// missing-value report as JSON.
    Profile {
        #[command(flatten)]
        input: InputArgs,
        /// Column to rank features against.
        #[arg(long)]
        target: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build the recommended cleaning plan.
    Plan {
        #[command(flatten)]
        input: InputArgs,
        /// Constraint document the cleaned data must satisfy.
        #[arg(long)]
        constraints: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        target: Option<String>,
        /// Use the rule recommender instead of the trained model.
        #[arg(long)]
        no_model: bool,
        /// Do not copy steps between similarly named columns.
        #[arg(long)]
        no_propagation: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Execute a plan on the file it was built for.
    Run {
        file: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        /// Cleaned CSV output.
        #[arg(short, long)]
        output: PathBuf,
        /// Run report output.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Recommend a plot for one column or a pair.
    RecommendPlot {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: Option<String>,
    },
    /// Write one of the bundled synthetic datasets.
    Fixture {
        #[arg(value_enum)]
        kind: FixtureKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl From<TabularError> for CliError {
    fn from(e: TabularError) -> Self {
        CliError::Pipeline(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Pipeline(PipelineError::ConstraintViolationAfterRepair { .. }) => 2,
            CliError::Pipeline(
                PipelineError::Format { .. }
                | PipelineError::UnsupportedVersion { .. }
                | PipelineError::Tabular(
                    TabularError::EmptyInput
                    | TabularError::InvalidUtf8 { .. }
                    | TabularError::MalformedCsv { .. }
                    | TabularError::CsvSyntax { .. }
                    | TabularError::DuplicateHeader(_),
                ),
            ) => 3,
            _ => 1,
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn read_text(path: &Path) -> Result<String, CliError> {
    let bytes = read(path)?;
    String::from_utf8(bytes).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Profile {
            input,
            target,
            seed,
            output,
        } => {
            let bytes = read(&input.file)?;
            let (d, inference) = parse_csv(&bytes, &input.parse_options())?;
            let eda = eda_summary(&d, target.as_deref(), seed, &ReportOptions::default())?;
            let doc = serde_json::json!({
                "format": "dataprep-profile",
                "version": 1,
                "fingerprint": fingerprint(&bytes),
                "rows": d.row_count(),
                "type_inference": inference,
                "eda": eda,
            });
            emit(&pretty(&doc), output.as_deref())
        }
        Command::Plan {
            input,
            constraints,
            seed,
            target,
            no_model,
            no_propagation,
            output,
        } => {
            let bytes = read(&input.file)?;
            let set = match constraints {
                Some(p) => constraints_from_json(&read_text(&p)?)?,
                None => ConstraintSet::default(),
            };
            let defaults = PlanOptions::default();
            let opts = PlanOptions {
                seed,
                target,
                use_model: !no_model,
                propagation: if no_propagation { None } else { defaults.propagation.clone() },
                ..defaults
            };
            let (_, _, plan) = plan_for_bytes(&bytes, &input.parse_options(), &set, &opts)?;
            emit(&plan.to_json(), output.as_deref())
        }
        Command::Run {
            file,
            plan,
            output,
            report,
        } => {
            let bytes = read(&file)?;
            let plan = CleaningPlan::from_json(&read_text(&plan)?)?;
            match execute_plan(&bytes, &plan) {
                Ok((cleaned, rep)) => {
                    export_csv(&cleaned, &output)?;
                    if let Some(p) = report {
                        export_report(&rep, &p)?;
                    }
                    Ok(())
                }
                Err(e) => {
                    if let (Some(p), Some(partial)) = (report.as_deref(), partial_report(&e)) {
                        export_report(partial, p)?;
                    }
                    if let PipelineError::ConstraintViolationAfterRepair { violations, .. } = &e {
                        for v in violations {
                            eprintln!("violation: {} ({} rows): {}", v.description, v.rows.len(), v.message);
                        }
                    }
                    Err(e.into())
                }
            }
        }
        Command::RecommendPlot { input, x, y } => {
            let bytes = read(&input.file)?;
            let (d, _) = parse_csv(&bytes, &input.parse_options())?;
            let cx = d.column(&x)?;
            let px = profile_column(cx).map_err(PipelineError::from)?;
            let model = train_plot_svm(&builtin_plot_rows(), &SvmConfig::default()).map_err(PipelineError::from)?;
            let rec = match &y {
                Some(y) => {
                    let cy = d.column(y)?;
                    let py = profile_column(cy).map_err(PipelineError::from)?;
                    let pair = profile_pair(cx, cy).ok();
                    recommend_plot(&px, Some(&py), pair.as_ref(), Some(&model))
                }
                None => recommend_plot(&px, None, None, Some(&model)),
            };
            let doc = serde_json::json!({ "x": x, "y": y, "recommendation": rec });
            emit(&pretty(&doc), None)
        }
        Command::Fixture { kind, seed, output } => {
            let bytes = match kind {
                FixtureKind::HousePrices => house_prices_like(seed),
                FixtureKind::AirQuality => air_quality_like(seed),
            };
            std::fs::write(&output, bytes).map_err(|e| CliError::Io {
                path: output.display().to_string(),
                message: e.to_string(),
            })
        }
    }
}

fn partial_report(e: &PipelineError) -> Option<&RunReport> {
    match e {
        PipelineError::ConstraintViolationAfterRepair { partial, .. } | PipelineError::StepFailed { partial, .. } => {
            Some(partial)
        }
        _ => None,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dataprep: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
