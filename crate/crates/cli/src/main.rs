//! `resprof` — resilience profiling from the command line.
//!
//! Subcommands:
//! - `simulate` emits a synthetic fault scenario (period CSVs, catalog,
//!   ground truth) into a directory;
//! - `analyze` turns a collected window directory into a resilience report;
//! - `campaign` executes a full failure campaign from a JSON spec;
//! - `evaluate` scores a directory of reports against ground-truth labels.
//!
//! Exit codes: 0 success, 1 validation error, 2 hook failure, 3 ingestion
//! failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use resprof_core::harness::{smooth_paired_window, CampaignAbort};
use resprof_core::model::Period;
use resprof_core::{
    analyze_window, evaluate, generate, run_campaign, window_from_period_csv, window_period_to_csv,
    CampaignSpec, ContributionMeasure, HarnessError, IngestError, LabeledOutcome, MetricCatalog,
    Report, ScenarioSpec, Verdict,
};

#[derive(Parser)]
#[command(
    name = "resprof",
    version,
    about = "Resilience profiling for microservice systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MeasureArg {
    Dtw,
    Pearson,
    Euclid,
    Cid,
}

impl MeasureArg {
    fn to_measure(self, dtw_window: usize) -> ContributionMeasure {
        match self {
            MeasureArg::Dtw => ContributionMeasure::Dtw {
                warping_window_steps: dtw_window,
            },
            MeasureArg::Pearson => ContributionMeasure::Pearson,
            MeasureArg::Euclid => ContributionMeasure::Euclid,
            MeasureArg::Cid => ContributionMeasure::Cid,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic fault scenario: period CSVs, catalog, ground truth.
    Simulate {
        /// Scenario spec (JSON).
        #[arg(long)]
        spec: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Analyze a window directory (faulty.csv + normal.csv) into a report.
    Analyze {
        /// Directory holding faulty.csv and normal.csv.
        #[arg(long)]
        window: PathBuf,
        /// Catalog file: JSON object mapping metric name to class.
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long, value_enum, default_value_t = MeasureArg::Dtw)]
        measure: MeasureArg,
        /// Resilience threshold.
        #[arg(long, default_value_t = 0.4)]
        tau: f64,
        /// DTW warping window in steps.
        #[arg(long, default_value_t = 5)]
        dtw_window: usize,
        /// Moving-average smoothing window (odd; 1 disables).
        #[arg(long, default_value_t = 3)]
        smooth: usize,
        /// Sample step in seconds.
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Failure name recorded in the report; defaults to the scenario
        /// ground-truth name when present, else "window".
        #[arg(long)]
        failure: Option<String>,
        /// Report output path (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Execute a failure campaign from a campaign spec (JSON).
    Campaign {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = MeasureArg::Dtw)]
        measure: MeasureArg,
        #[arg(long, default_value_t = 0.4)]
        tau: f64,
        #[arg(long, default_value_t = 5)]
        dtw_window: usize,
        /// Ground-truth labels (JSON array of {failure, label}).
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Output directory for per-failure reports and campaign.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a directory of reports against ground-truth labels.
    Evaluate {
        /// Directory of report JSON files.
        #[arg(long)]
        reports: PathBuf,
        /// Labels file (JSON array of {failure, label}).
        #[arg(long)]
        labels: PathBuf,
        /// Threshold override; defaults to the tau shared by the reports.
        #[arg(long)]
        tau: Option<f64>,
        /// Optional output path; the evaluation always prints to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum CliError {
    Validation(String),
    Hook(String),
    Ingestion(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Hook(_) => 2,
            CliError::Ingestion(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(msg) | CliError::Hook(msg) | CliError::Ingestion(msg) => msg,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(err: HarnessError) -> Self {
        match err {
            HarnessError::Ingest(e) => CliError::Ingestion(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(err: IngestError) -> Self {
        CliError::Ingestion(err.to_string())
    }
}

/// One entry of the labels file.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct LabelEntry {
    failure: String,
    label: Verdict,
}

/// Ground-truth sidecar written next to simulated windows.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct GroundTruth {
    failure: String,
    ground_truth: Verdict,
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate { spec, out } => simulate(&spec, &out),
        Command::Analyze {
            window,
            catalog,
            measure,
            tau,
            dtw_window,
            smooth,
            step,
            failure,
            out,
        } => analyze(
            &window,
            &catalog,
            measure.to_measure(dtw_window),
            tau,
            smooth,
            step,
            failure,
            &out,
        ),
        Command::Campaign {
            spec,
            measure,
            tau,
            dtw_window,
            labels,
            out,
        } => campaign(
            &spec,
            measure.to_measure(dtw_window),
            tau,
            labels.as_deref(),
            &out,
        ),
        Command::Evaluate {
            reports,
            labels,
            tau,
            out,
        } => evaluate_reports(&reports, &labels, tau, out.as_deref()),
    }
}

fn read_text(path: &Path, what: &str) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {what} `{}`: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = read_text(path, what)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("invalid {what} `{}`: {e}", path.display())))
}

fn write_text(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| {
            CliError::Validation(format!("cannot create `{}`: {e}", parent.display()))
        })?;
    }
    fs::write(path, content)
        .map_err(|e| CliError::Validation(format!("cannot write `{}`: {e}", path.display())))
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

fn simulate(spec_path: &Path, out: &Path) -> Result<(), CliError> {
    let spec: ScenarioSpec = read_json(spec_path, "scenario spec")?;
    let scenario = generate(&spec).map_err(|e| CliError::Validation(e.to_string()))?;

    let faulty_csv = window_period_to_csv(&scenario.window, Period::Faulty, 0.0);
    let normal_csv = window_period_to_csv(&scenario.window, Period::Normal, 0.0);
    write_text(&out.join("faulty.csv"), &faulty_csv)?;
    write_text(&out.join("normal.csv"), &normal_csv)?;
    write_text(&out.join("catalog.json"), &to_pretty_json(&spec.catalog))?;
    let truth = GroundTruth {
        failure: spec.failure_preset.clone(),
        ground_truth: scenario.ground_truth,
        seed: spec.seed,
    };
    write_text(&out.join("ground_truth.json"), &to_pretty_json(&truth))?;

    println!(
        "simulated `{}` (seed {}, {} steps): ground truth {}",
        spec.failure_preset, spec.seed, spec.period_steps, scenario.ground_truth
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn analyze(
    window_dir: &Path,
    catalog_path: &Path,
    measure: ContributionMeasure,
    tau: f64,
    smooth: usize,
    step: f64,
    failure: Option<String>,
    out: &Path,
) -> Result<(), CliError> {
    let catalog: MetricCatalog = read_json(catalog_path, "catalog")?;
    let faulty_csv = fs::read_to_string(window_dir.join("faulty.csv"))
        .map_err(|e| CliError::Ingestion(format!("cannot read faulty.csv: {e}")))?;
    let normal_csv = fs::read_to_string(window_dir.join("normal.csv"))
        .map_err(|e| CliError::Ingestion(format!("cannot read normal.csv: {e}")))?;

    let failure_name = match failure {
        Some(name) => name,
        None => fs::read_to_string(window_dir.join("ground_truth.json"))
            .ok()
            .and_then(|text| serde_json::from_str::<GroundTruth>(&text).ok())
            .map(|truth| truth.failure)
            .unwrap_or_else(|| "window".to_string()),
    };

    let window = window_from_period_csv(&faulty_csv, &normal_csv, &catalog, step)?;
    let window = smooth_paired_window(&window, smooth)?;
    let report = analyze_window(&window, measure, tau, &failure_name)?;

    write_text(out, &to_pretty_json(&report))?;
    println!(
        "{}: index {:.6}, verdict {} (tau {})",
        report.failure, report.index, report.verdict, report.tau
    );
    Ok(())
}

fn read_labels(path: &Path) -> Result<BTreeMap<String, Verdict>, CliError> {
    let entries: Vec<LabelEntry> = read_json(path, "labels")?;
    Ok(entries
        .into_iter()
        .map(|entry| (entry.failure, entry.label))
        .collect())
}

fn campaign(
    spec_path: &Path,
    measure: ContributionMeasure,
    tau: f64,
    labels_path: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    let spec: CampaignSpec = read_json(spec_path, "campaign spec")?;
    let labels = labels_path.map(read_labels).transpose()?;

    let result = run_campaign(&spec, measure, tau, labels.as_ref())?;

    fs::create_dir_all(out)
        .map_err(|e| CliError::Validation(format!("cannot create `{}`: {e}", out.display())))?;
    for (index, report) in result.reports.iter().enumerate() {
        let file = out.join(format!(
            "report_{index:03}_{}.json",
            sanitize(&report.failure)
        ));
        write_text(&file, &to_pretty_json(report))?;
        println!(
            "{}: index {:.6}, verdict {}",
            report.failure, report.index, report.verdict
        );
    }
    write_text(&out.join("campaign.json"), &to_pretty_json(&result))?;

    match &result.aborted {
        None => Ok(()),
        Some(CampaignAbort::HookFailed {
            failure,
            phase,
            exit_code,
        }) => Err(CliError::Hook(format!(
            "campaign aborted: {phase:?} hook for `{failure}` exited with {exit_code}"
        ))),
        Some(CampaignAbort::IngestionFailed { failure, message }) => Err(CliError::Ingestion(
            format!("campaign aborted at `{failure}`: {message}"),
        )),
        Some(CampaignAbort::AnalysisFailed { failure, message }) => Err(CliError::Validation(
            format!("campaign aborted at `{failure}`: {message}"),
        )),
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn evaluate_reports(
    reports_dir: &Path,
    labels_path: &Path,
    tau_override: Option<f64>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let labels = read_labels(labels_path)?;

    let mut paths: Vec<PathBuf> = fs::read_dir(reports_dir)
        .map_err(|e| CliError::Validation(format!("cannot read `{}`: {e}", reports_dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|path| path.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();

    let mut reports = Vec::new();
    for path in &paths {
        let text = read_text(path, "report")?;
        match serde_json::from_str::<Report>(&text) {
            Ok(report) => reports.push(report),
            Err(_) => eprintln!("skipping `{}`: not a resilience report", path.display()),
        }
    }
    if reports.is_empty() {
        return Err(CliError::Validation(format!(
            "no reports found under `{}`",
            reports_dir.display()
        )));
    }

    let tau = match tau_override {
        Some(tau) => tau,
        None => {
            let tau = reports[0].tau;
            if reports.iter().any(|r| r.tau != tau) {
                return Err(CliError::Validation(
                    "reports disagree on tau; pass --tau to override".into(),
                ));
            }
            tau
        }
    };

    let outcomes: Vec<LabeledOutcome<f64>> = reports
        .iter()
        .filter_map(|report| {
            labels.get(&report.failure).map(|label| LabeledOutcome {
                failure_name: report.failure.clone(),
                label: *label,
                index: report.index,
            })
        })
        .collect();
    if outcomes.is_empty() {
        return Err(CliError::Validation(
            "no report matches any labeled failure".into(),
        ));
    }

    let evaluation = evaluate(&outcomes, tau).map_err(|e| CliError::Validation(e.to_string()))?;
    let rendered = to_pretty_json(&evaluation);
    print!("{rendered}");
    if let Some(path) = out {
        write_text(path, &rendered)?;
    }
    Ok(())
}
