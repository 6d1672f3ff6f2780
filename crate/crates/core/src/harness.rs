//! Campaign orchestration: runs failure windows against a real system via
//! external command hooks or against the built-in simulator, then wires
//! ingestion, ranking, indexing, and evaluation into reports.
//!
//! Failures execute strictly sequentially so injections never overlap. Hooks
//! are arbitrary `sh -c` command strings; their stdout/stderr and exit codes
//! are captured into the campaign result. The metrics-pull command of a
//! command-backed campaign receives the measured phase bounds through
//! `RESPROF_*` environment variables and must print ingestion CSV on stdout.
//!
//! Guidance for real campaigns: size `window_duration_seconds` so the system
//! processes at least 40 requests per execution (roughly 20 in each phase);
//! shorter windows leave too little signal in the user-aware metrics. The
//! harness does not enforce this, since request counts are invisible at the
//! metric layer.

use std::collections::BTreeMap;
use std::process::Output;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::ContributionMeasure;
use crate::evaluation::{evaluate, EvaluationError, EvaluationReport, LabeledOutcome};
use crate::indexing::{IndexingError, ResilienceReport, Verdict};
use crate::ingest::{
    parse_metrics_csv, resample_align, smooth_moving_average, split_windows, IngestError,
    WindowBounds,
};
use crate::lattice::{rank_by_elimination, LatticeError};
use crate::model::{validate_catalog, MetricCatalog, MetricId, PairedWindow};
use crate::scalar::Scalar;
use crate::simulator::{generate, ScenarioSpec};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid campaign spec: {0}")]
    InvalidCampaign(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Indexing(#[from] IndexingError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
}

/// One failure to execute: a name (for simulator-backed campaigns this must
/// be a preset name) and optional injection/clearance hook commands. Empty
/// hook strings are no-ops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureCase {
    pub name: String,
    #[serde(default)]
    pub inject: String,
    #[serde(default)]
    pub clear: String,
    /// Simulator-backed campaigns only: whether this scenario disseminates.
    #[serde(default)]
    pub disseminate: bool,
}

/// Where a campaign gets its metrics from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MetricSource {
    /// Synthesize windows with the scenario simulator; no waiting occurs.
    Simulator {
        base_seed: u64,
        affected_system_metrics: Vec<MetricId>,
        #[serde(default)]
        dissemination_lag_steps: usize,
        #[serde(default = "default_gain")]
        degradation_gain: f64,
        #[serde(default = "default_noise")]
        noise_std: f64,
    },
    /// Run a command after both phases; it must print ingestion CSV covering
    /// the campaign span on stdout.
    Command { command: String },
}

fn default_gain() -> f64 {
    1.5
}

fn default_noise() -> f64 {
    0.01
}

fn default_step() -> f64 {
    1.0
}

fn default_smooth() -> usize {
    3
}

/// A full campaign: the metric catalog, the shared phase duration, and the
/// ordered failure list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSpec {
    pub catalog: MetricCatalog,
    /// Duration of the injection phase and of the clearance phase.
    pub window_duration_seconds: f64,
    /// Optional; if present it must equal `window_duration_seconds` (both
    /// phases always run for the same time).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clearance_duration_seconds: Option<f64>,
    #[serde(default = "default_step")]
    pub step_seconds: f64,
    #[serde(default = "default_smooth")]
    pub smooth_window: usize,
    pub metric_source: MetricSource,
    pub failures: Vec<FailureCase>,
}

pub fn validate_campaign(spec: &CampaignSpec) -> Result<(), HarnessError> {
    let invalid = |msg: String| HarnessError::InvalidCampaign(msg);
    validate_catalog(&spec.catalog).map_err(|v| invalid(format!("catalog: {v:?}")))?;
    if spec.failures.is_empty() {
        return Err(invalid("failures list is empty".into()));
    }
    let mut names = std::collections::BTreeSet::new();
    for failure in &spec.failures {
        if !names.insert(failure.name.as_str()) {
            return Err(invalid(format!(
                "duplicate failure name `{}`",
                failure.name
            )));
        }
    }
    if spec.window_duration_seconds.is_nan() || spec.window_duration_seconds <= 0.0 {
        return Err(invalid("window_duration_seconds must be positive".into()));
    }
    if let Some(clearance) = spec.clearance_duration_seconds {
        if (clearance - spec.window_duration_seconds).abs() > 1e-9 {
            return Err(invalid(format!(
                "injection and clearance durations must match: {} vs {clearance}",
                spec.window_duration_seconds
            )));
        }
    }
    if spec.step_seconds.is_nan() || spec.step_seconds <= 0.0 {
        return Err(invalid("step_seconds must be positive".into()));
    }
    if spec.smooth_window == 0 || spec.smooth_window.is_multiple_of(2) {
        return Err(invalid(format!(
            "smooth_window must be odd, got {}",
            spec.smooth_window
        )));
    }
    let steps = period_steps(spec);
    let min_steps = match spec.metric_source {
        MetricSource::Simulator { .. } => 8,
        MetricSource::Command { .. } => 2,
    };
    if steps < min_steps {
        return Err(invalid(format!(
            "window_duration_seconds / step_seconds gives {steps} samples per period, need at least {min_steps}"
        )));
    }
    Ok(())
}

fn period_steps(spec: &CampaignSpec) -> usize {
    (spec.window_duration_seconds / spec.step_seconds).round() as usize
}

/// Which stage of a failure execution a hook belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HookPhase {
    Inject,
    Clear,
    Pull,
}

/// Captured output of one executed hook.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HookLog {
    pub failure: String,
    pub phase: HookPhase,
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Why a campaign stopped early.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CampaignAbort {
    HookFailed {
        failure: String,
        phase: HookPhase,
        exit_code: i32,
    },
    IngestionFailed {
        failure: String,
        message: String,
    },
    AnalysisFailed {
        failure: String,
        message: String,
    },
}

/// Wall-clock seconds spent per stage of one failure execution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub failure: String,
    pub inject_seconds: f64,
    pub clear_seconds: f64,
    pub analyze_seconds: f64,
}

/// Everything a campaign produced: one report per completed failure (in
/// spec order), optional evaluation against supplied labels, hook logs,
/// timings, and the abort marker when the campaign stopped early.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub reports: Vec<ResilienceReport<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvaluationReport<f64>>,
    pub timings: Vec<PhaseTiming>,
    pub hook_logs: Vec<HookLog>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<CampaignAbort>,
}

/// Ranks a validated window and folds the ranking into a resilience report.
/// Identical inputs produce identical reports.
pub fn analyze_window<T: Scalar>(
    window: &PairedWindow<T>,
    measure: ContributionMeasure,
    tau: T,
    failure_name: &str,
) -> Result<ResilienceReport<T>, HarnessError> {
    let ranked = rank_by_elimination(window, measure)?;
    let report = ResilienceReport::build(failure_name, &ranked, window.catalog(), measure, tau)?;
    Ok(report)
}

/// Runs every failure in order: inject, wait, clear, wait, pull metrics,
/// analyze. A failing hook or ingestion aborts the campaign; the partial
/// results collected so far are returned with the abort flagged.
pub fn run_campaign(
    spec: &CampaignSpec,
    measure: ContributionMeasure,
    tau: f64,
    labels: Option<&BTreeMap<String, Verdict>>,
) -> Result<CampaignResult, HarnessError> {
    validate_campaign(spec)?;
    if tau.is_nan() || tau <= 0.0 || tau >= 1.0 {
        return Err(HarnessError::Indexing(IndexingError::InvalidThreshold(tau)));
    }

    let mut result = CampaignResult {
        reports: Vec::new(),
        evaluation: None,
        timings: Vec::new(),
        hook_logs: Vec::new(),
        aborted: None,
    };

    'failures: for (index, failure) in spec.failures.iter().enumerate() {
        let wait = matches!(spec.metric_source, MetricSource::Command { .. });
        let mut timing = PhaseTiming {
            failure: failure.name.clone(),
            inject_seconds: 0.0,
            clear_seconds: 0.0,
            analyze_seconds: 0.0,
        };

        let inject_started = Instant::now();
        if let Some(abort) = run_hook(&mut result, failure, HookPhase::Inject, &failure.inject) {
            result.aborted = Some(abort);
            break 'failures;
        }
        let faulty_start = unix_now();
        if wait {
            std::thread::sleep(Duration::from_secs_f64(spec.window_duration_seconds));
        }
        timing.inject_seconds = inject_started.elapsed().as_secs_f64();

        let clear_started = Instant::now();
        if let Some(abort) = run_hook(&mut result, failure, HookPhase::Clear, &failure.clear) {
            result.aborted = Some(abort);
            break 'failures;
        }
        let clear_done = unix_now();
        if wait {
            std::thread::sleep(Duration::from_secs_f64(spec.window_duration_seconds));
        }
        timing.clear_seconds = clear_started.elapsed().as_secs_f64();

        let analyze_started = Instant::now();
        let window = match pull_window(spec, failure, index, faulty_start, clear_done) {
            Ok(window) => window,
            Err(PullError::Hook(abort)) | Err(PullError::Ingestion(abort)) => {
                result.aborted = Some(abort);
                result.timings.push(timing);
                break 'failures;
            }
        };
        match analyze_window(&window, measure, tau, &failure.name) {
            Ok(report) => result.reports.push(report),
            Err(err) => {
                result.aborted = Some(CampaignAbort::AnalysisFailed {
                    failure: failure.name.clone(),
                    message: err.to_string(),
                });
                result.timings.push(timing);
                break 'failures;
            }
        }
        timing.analyze_seconds = analyze_started.elapsed().as_secs_f64();
        result.timings.push(timing);
    }

    if let Some(labels) = labels {
        let outcomes: Vec<LabeledOutcome<f64>> = result
            .reports
            .iter()
            .filter_map(|report| {
                labels.get(&report.failure).map(|label| LabeledOutcome {
                    failure_name: report.failure.clone(),
                    label: *label,
                    index: report.index,
                })
            })
            .collect();
        if !outcomes.is_empty() {
            result.evaluation = Some(evaluate(&outcomes, tau)?);
        }
    }

    Ok(result)
}

enum PullError {
    Hook(CampaignAbort),
    Ingestion(CampaignAbort),
}

fn pull_window(
    spec: &CampaignSpec,
    failure: &FailureCase,
    index: usize,
    faulty_start: f64,
    clear_done: f64,
) -> Result<PairedWindow<f64>, PullError> {
    let steps = period_steps(spec);
    let ingestion_failed = |message: String| {
        PullError::Ingestion(CampaignAbort::IngestionFailed {
            failure: failure.name.clone(),
            message,
        })
    };
    match &spec.metric_source {
        MetricSource::Simulator {
            base_seed,
            affected_system_metrics,
            dissemination_lag_steps,
            degradation_gain,
            noise_std,
        } => {
            let scenario_spec = ScenarioSpec {
                seed: base_seed.wrapping_add(index as u64),
                catalog: spec.catalog.clone(),
                period_steps: steps,
                step_seconds: spec.step_seconds,
                failure_preset: failure.name.clone(),
                affected_system_metrics: affected_system_metrics.clone(),
                disseminate: failure.disseminate,
                dissemination_lag_steps: *dissemination_lag_steps,
                degradation_gain: *degradation_gain,
                noise_std: *noise_std,
            };
            let scenario = generate(&scenario_spec).map_err(|e| ingestion_failed(e.to_string()))?;
            smooth_paired_window(&scenario.window, spec.smooth_window)
                .map_err(|e| ingestion_failed(e.to_string()))
        }
        MetricSource::Command { command } => {
            let duration = spec.step_seconds * steps as f64;
            // snap the normal window onto the grid anchored at faulty_start
            let offset_steps = ((clear_done - faulty_start) / spec.step_seconds).ceil();
            let normal_start = faulty_start + offset_steps * spec.step_seconds;
            let bounds = WindowBounds::new(
                faulty_start,
                faulty_start + duration,
                normal_start,
                normal_start + duration,
            )
            .map_err(|e| ingestion_failed(e.to_string()))?;

            let output = std::process::Command::new("sh")
                .arg("-c")
                .arg(command)
                .env("RESPROF_FAILURE", &failure.name)
                .env("RESPROF_FAULTY_START", bounds.faulty_start.to_string())
                .env("RESPROF_FAULTY_END", bounds.faulty_end.to_string())
                .env("RESPROF_NORMAL_START", bounds.normal_start.to_string())
                .env("RESPROF_NORMAL_END", bounds.normal_end.to_string())
                .env("RESPROF_STEP_SECONDS", spec.step_seconds.to_string())
                .output()
                .map_err(|e| ingestion_failed(format!("metrics command: {e}")))?;
            if !output.status.success() {
                return Err(PullError::Hook(CampaignAbort::HookFailed {
                    failure: failure.name.clone(),
                    phase: HookPhase::Pull,
                    exit_code: output.status.code().unwrap_or(-1),
                }));
            }
            let text = String::from_utf8_lossy(&output.stdout);
            let raw = parse_metrics_csv(&text).map_err(|e| ingestion_failed(e.to_string()))?;
            let mut aligned = resample_align(
                &raw,
                &spec.catalog,
                bounds.faulty_start,
                bounds.normal_end,
                spec.step_seconds,
            )
            .map_err(|e| ingestion_failed(e.to_string()))?;
            for values in aligned.values_mut() {
                *values = smooth_moving_average(values, spec.smooth_window)
                    .map_err(|e| ingestion_failed(e.to_string()))?;
            }
            split_windows(
                &aligned,
                bounds.faulty_start,
                &bounds,
                &spec.catalog,
                spec.step_seconds,
            )
            .map_err(|e| ingestion_failed(e.to_string()))
        }
    }
}

/// Applies the centered moving average to both periods of every metric.
pub fn smooth_paired_window(
    window: &PairedWindow<f64>,
    smooth_window: usize,
) -> Result<PairedWindow<f64>, IngestError> {
    let mut faulty = BTreeMap::new();
    let mut normal = BTreeMap::new();
    for id in window.catalog().ids() {
        faulty.insert(
            id.clone(),
            smooth_moving_average(window.faulty(id).unwrap(), smooth_window)?,
        );
        normal.insert(
            id.clone(),
            smooth_moving_average(window.normal(id).unwrap(), smooth_window)?,
        );
    }
    PairedWindow::new(
        window.catalog().clone(),
        faulty,
        normal,
        window.step_seconds(),
        window.period_len(),
    )
    .map_err(IngestError::InvalidWindow)
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .expect("clock before epoch")
        .as_secs_f64()
}

/// Runs a hook command; returns the abort to raise when it fails. Empty
/// commands are skipped.
fn run_hook(
    result: &mut CampaignResult,
    failure: &FailureCase,
    phase: HookPhase,
    command: &str,
) -> Option<CampaignAbort> {
    if command.trim().is_empty() {
        return None;
    }
    let outcome: std::io::Result<Output> = std::process::Command::new("sh")
        .arg("-c")
        .arg(command)
        .output();
    match outcome {
        Ok(output) => {
            let exit_code = output.status.code().unwrap_or(-1);
            result.hook_logs.push(HookLog {
                failure: failure.name.clone(),
                phase,
                exit_code,
                stdout: String::from_utf8_lossy(&output.stdout).into_owned(),
                stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
            });
            if output.status.success() {
                None
            } else {
                Some(CampaignAbort::HookFailed {
                    failure: failure.name.clone(),
                    phase,
                    exit_code,
                })
            }
        }
        Err(err) => {
            result.hook_logs.push(HookLog {
                failure: failure.name.clone(),
                phase,
                exit_code: -1,
                stdout: String::new(),
                stderr: err.to_string(),
            });
            Some(CampaignAbort::HookFailed {
                failure: failure.name.clone(),
                phase,
                exit_code: -1,
            })
        }
    }
}
