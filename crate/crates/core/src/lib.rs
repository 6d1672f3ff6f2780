//! Resilience profiling for microservice systems.
//!
//! Given monitoring metrics collected during a failure-injection period and
//! a matching failure-clearance period, this crate ranks every metric by its
//! contribution to the overall service degradation and condenses the ranking
//! into a resilience index in `(0, 1)`: values near 1 mean the degradation
//! stayed inside the system-performance metrics, values near 0 mean it
//! reached the user-aware metrics. A threshold turns the index into a
//! PASS/FAIL verdict.
//!
//! The pipeline is:
//!
//! 1. [`ingest`] — parse raw exports, align them onto a uniform grid, smooth,
//!    and split into a paired faulty/normal window;
//! 2. [`analysis`] — build the per-metric difference matrix, extract the
//!    principal degradation signal, and score metric contributions;
//! 3. [`lattice`] — rank all metrics by greedy dominant-metric elimination;
//! 4. [`indexing`] — aggregate rank-discounted contributions per metric class
//!    and map them to the index and verdict;
//! 5. [`evaluation`] — score produced indices against ground-truth labels.
//!
//! [`simulator`] synthesizes deterministic fault scenarios for desk-scale
//! verification, and [`harness`] orchestrates full campaigns against real
//! systems (via command hooks) or the simulator.
//!
//! Numeric kernels are generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the common double-precision forms.

pub mod analysis;
pub mod evaluation;
pub mod harness;
pub mod indexing;
pub mod ingest;
pub mod lattice;
pub mod model;
pub mod scalar;
pub mod simulator;

pub use analysis::{
    build_difference_matrix, contribution, dtw_distance, pca_first_component,
    select_dominant_metric, AnalysisError, ContributionMeasure, DifferenceMatrix, PrincipalSignal,
};
pub use evaluation::{evaluate, EvaluationError, EvaluationReport, LabeledOutcome};
pub use harness::{
    analyze_window, run_campaign, validate_campaign, CampaignAbort, CampaignResult, CampaignSpec,
    FailureCase, HarnessError, MetricSource,
};
pub use indexing::{
    class_degradation, classify, resilience_index, IndexingError, RankedReportEntry,
    ResilienceReport, Verdict,
};
pub use ingest::{
    parse_exposition_text, parse_metrics_csv, resample_align, smooth_moving_average, split_windows,
    window_from_period_csv, window_period_to_csv, IngestError, RawExport, RawRecord, WindowBounds,
};
pub use lattice::{
    enumerate_lattice_path, rank_by_elimination, LatticeError, RankedEntry, RankedMetricList,
};
pub use model::{
    validate_catalog, validate_window, CatalogViolation, MetricCatalog, MetricClass, MetricId,
    MetricSeries, PairedWindow, WindowViolation,
};
pub use scalar::Scalar;
pub use simulator::{
    find_preset, generate, preset_catalog, signature_pattern, FailurePreset, GeneratedScenario,
    ScenarioSpec, SignatureShape, SimulatorError,
};

/// Double-precision paired window, the common pipeline input.
pub type Window = PairedWindow<f64>;
/// Double-precision ranked metric list.
pub type RankedMetrics = RankedMetricList<f64>;
/// Double-precision resilience report.
pub type Report = ResilienceReport<f64>;
/// Double-precision evaluation report.
pub type Evaluation = EvaluationReport<f64>;
