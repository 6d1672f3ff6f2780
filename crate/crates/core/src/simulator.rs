//! Deterministic fault-scenario simulator.
//!
//! Synthesizes paired normal/faulty metric windows that emulate common
//! failure modes at the shape level: overloads hold a sustained step, error
//! bursts form a spike train, and killed/stopped resources drop to a floor.
//! A switch controls whether the degradation disseminates to the user-aware
//! metrics, which fixes the scenario's ground truth (contained = PASS,
//! disseminated = FAIL).
//!
//! Randomness comes from a ChaCha8 stream keyed by the 64-bit scenario seed;
//! draws follow a fixed order (per metric: baseline level, then the normal
//! period, then the faulty period, metrics in catalog order), so identical
//! specs reproduce bit-identical windows on any platform.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indexing::Verdict;
use crate::model::{validate_catalog, MetricCatalog, MetricClass, MetricId, PairedWindow};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SimulatorError {
    #[error("invalid scenario spec: {0}")]
    InvalidSpec(String),
}

/// Qualitative signature of a failure in the affected metrics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignatureShape {
    /// Level shift held from onset to the end of the faulty period.
    SustainedStep,
    /// Periodic bursts from onset onward.
    SpikeTrain,
    /// Level collapse below baseline from onset onward.
    DropToFloor,
}

/// Resource family a preset belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetCategory {
    Cpu,
    Memory,
    Storage,
    Network,
    Process,
    Instance,
}

impl fmt::Display for PresetCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PresetCategory::Cpu => "cpu",
            PresetCategory::Memory => "memory",
            PresetCategory::Storage => "storage",
            PresetCategory::Network => "network",
            PresetCategory::Process => "process",
            PresetCategory::Instance => "instance",
        };
        f.write_str(name)
    }
}

/// A named failure preset: its signature shape, default magnitude (in
/// normalized metric units), and direction (+1 pushes affected metrics above
/// baseline, -1 collapses them below it).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FailurePreset {
    pub name: &'static str,
    pub category: PresetCategory,
    pub shape: SignatureShape,
    pub magnitude: f64,
    pub direction: f64,
}

#[rustfmt::skip]
const PRESETS: &[FailurePreset] = &[
    preset("cpu_overload",                  PresetCategory::Cpu,      SignatureShape::SustainedStep, 0.010,  1.0),
    preset("memory_overload",               PresetCategory::Memory,   SignatureShape::SustainedStep, 0.010,  1.0),
    preset("disk_partition_full",           PresetCategory::Storage,  SignatureShape::SpikeTrain,    0.014,  1.0),
    preset("high_disk_io_throughput",       PresetCategory::Storage,  SignatureShape::SustainedStep, 0.012,  1.0),
    preset("high_disk_io_latency",          PresetCategory::Storage,  SignatureShape::SustainedStep, 0.010,  1.0),
    preset("high_disk_io_error",            PresetCategory::Storage,  SignatureShape::SpikeTrain,    0.012,  1.0),
    preset("block_storage_service_stopped", PresetCategory::Storage,  SignatureShape::DropToFloor,   0.013, -1.0),
    preset("high_http_packet_loss",         PresetCategory::Network,  SignatureShape::SpikeTrain,    0.012,  1.0),
    preset("high_http_request_latency",     PresetCategory::Network,  SignatureShape::SustainedStep, 0.010,  1.0),
    preset("tcp_disconnection",             PresetCategory::Network,  SignatureShape::SpikeTrain,    0.014,  1.0),
    preset("port_in_use",                   PresetCategory::Network,  SignatureShape::SpikeTrain,    0.011,  1.0),
    preset("nic_down",                      PresetCategory::Network,  SignatureShape::DropToFloor,   0.013, -1.0),
    preset("network_connections_exhausted", PresetCategory::Network,  SignatureShape::SustainedStep, 0.009,  1.0),
    preset("critical_process_killed",       PresetCategory::Process,  SignatureShape::DropToFloor,   0.013, -1.0),
    preset("container_cpu_overload",        PresetCategory::Cpu,      SignatureShape::SustainedStep, 0.010,  1.0),
    preset("container_memory_overload",     PresetCategory::Memory,   SignatureShape::SustainedStep, 0.010,  1.0),
    preset("container_network_packet_loss", PresetCategory::Network,  SignatureShape::SpikeTrain,    0.012,  1.0),
    preset("container_disk_full",           PresetCategory::Storage,  SignatureShape::SpikeTrain,    0.014,  1.0),
    preset("container_instance_killed",     PresetCategory::Instance, SignatureShape::DropToFloor,   0.015, -1.0),
    preset("container_instance_suspended",  PresetCategory::Instance, SignatureShape::DropToFloor,   0.015, -1.0),
];

const fn preset(
    name: &'static str,
    category: PresetCategory,
    shape: SignatureShape,
    magnitude: f64,
    direction: f64,
) -> FailurePreset {
    FailurePreset {
        name,
        category,
        shape,
        magnitude,
        direction,
    }
}

/// All built-in failure presets.
pub fn preset_catalog() -> &'static [FailurePreset] {
    PRESETS
}

pub fn find_preset(name: &str) -> Option<&'static FailurePreset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// The non-negative magnitude profile of a preset over one faulty period.
/// The onset sits one eighth into the period.
pub fn signature_pattern(preset: &FailurePreset, period_len: usize) -> Vec<f64> {
    let onset = period_len / 8;
    let mut pattern = vec![0.0; period_len];
    match preset.shape {
        SignatureShape::SustainedStep | SignatureShape::DropToFloor => {
            for slot in pattern.iter_mut().skip(onset) {
                *slot = preset.magnitude;
            }
        }
        SignatureShape::SpikeTrain => {
            let period = (period_len / 16).max(4);
            let width = (period / 3).max(1);
            for (t, slot) in pattern.iter_mut().enumerate().skip(onset) {
                if (t - onset) % period < width {
                    *slot = preset.magnitude;
                }
            }
        }
    }
    pattern
}

fn default_gain() -> f64 {
    1.5
}

fn default_noise() -> f64 {
    0.001
}

/// Everything needed to synthesize one scenario deterministically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub catalog: MetricCatalog,
    /// Samples per period; at least 8.
    pub period_steps: usize,
    pub step_seconds: f64,
    /// Name of a preset from [`preset_catalog`].
    pub failure_preset: String,
    /// System-performance metrics the failure signature lands on.
    pub affected_system_metrics: Vec<MetricId>,
    /// When true the user-aware metrics mirror the signature and the ground
    /// truth is FAIL; when false they stay at baseline noise and it is PASS.
    pub disseminate: bool,
    #[serde(default)]
    pub dissemination_lag_steps: usize,
    #[serde(default = "default_gain")]
    pub degradation_gain: f64,
    #[serde(default = "default_noise")]
    pub noise_std: f64,
}

/// A synthesized paired window with its implied ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratedScenario {
    pub window: PairedWindow<f64>,
    pub ground_truth: Verdict,
    pub spec: ScenarioSpec,
}

fn validate_spec(spec: &ScenarioSpec) -> Result<&'static FailurePreset, SimulatorError> {
    let invalid = |msg: String| SimulatorError::InvalidSpec(msg);
    validate_catalog(&spec.catalog)
        .map_err(|violations| invalid(format!("catalog: {violations:?}")))?;
    if spec.period_steps < 8 {
        return Err(invalid(format!(
            "period_steps must be at least 8, got {}",
            spec.period_steps
        )));
    }
    if spec.step_seconds.is_nan() || spec.step_seconds <= 0.0 {
        return Err(invalid(format!(
            "step_seconds must be positive, got {}",
            spec.step_seconds
        )));
    }
    if !spec.degradation_gain.is_finite() || spec.degradation_gain <= 0.0 {
        return Err(invalid(format!(
            "degradation_gain must be positive, got {}",
            spec.degradation_gain
        )));
    }
    if !spec.noise_std.is_finite() || spec.noise_std < 0.0 {
        return Err(invalid(format!(
            "noise_std must be non-negative, got {}",
            spec.noise_std
        )));
    }
    if spec.affected_system_metrics.is_empty() {
        return Err(invalid("affected_system_metrics is empty".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for id in &spec.affected_system_metrics {
        if !seen.insert(id) {
            return Err(invalid(format!("affected metric `{id}` listed twice")));
        }
        match spec.catalog.class_of(id) {
            Some(MetricClass::SystemPerformance) => {}
            Some(MetricClass::UserAware) => {
                return Err(invalid(format!(
                    "affected metric `{id}` is user-aware, not system-performance"
                )));
            }
            None => {
                return Err(invalid(format!("affected metric `{id}` not in catalog")));
            }
        }
    }
    find_preset(&spec.failure_preset)
        .ok_or_else(|| invalid(format!("unknown failure preset `{}`", spec.failure_preset)))
}

/// Standard normal draw via the Box-Muller transform (two uniforms per
/// draw, cosine branch).
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Synthesizes the scenario described by `spec`. Identical specs produce
/// bit-identical windows.
pub fn generate(spec: &ScenarioSpec) -> Result<GeneratedScenario, SimulatorError> {
    let preset = validate_spec(spec)?;
    let len = spec.period_steps;
    let pattern = signature_pattern(preset, len);
    let signed: Vec<f64> = pattern.iter().map(|v| v * preset.direction).collect();

    // the mean signature over the affected metrics; they all carry the same
    // signed pattern, so the mean is the pattern itself
    let mean_signature = &signed;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut faulty = BTreeMap::new();
    let mut normal = BTreeMap::new();
    for (id, class) in spec.catalog.iter() {
        let level = 1.0 + 9.0 * rng.random::<f64>();
        let normal_values: Vec<f64> = (0..len)
            .map(|_| level + spec.noise_std * gaussian(&mut rng))
            .collect();
        let mut faulty_values: Vec<f64> = (0..len)
            .map(|_| level + spec.noise_std * gaussian(&mut rng))
            .collect();

        if class == MetricClass::SystemPerformance && spec.affected_system_metrics.contains(id) {
            for (value, sig) in faulty_values.iter_mut().zip(signed.iter()) {
                *value += sig;
            }
        }
        if spec.disseminate && class == MetricClass::UserAware {
            let lag = spec.dissemination_lag_steps;
            for (t, value) in faulty_values.iter_mut().enumerate() {
                if t >= lag {
                    *value += spec.degradation_gain * mean_signature[t - lag];
                }
            }
        }

        normal.insert(id.clone(), normal_values);
        faulty.insert(id.clone(), faulty_values);
    }

    let window = PairedWindow::new(spec.catalog.clone(), faulty, normal, spec.step_seconds, len)
        .map_err(|violations| {
            SimulatorError::InvalidSpec(format!("generated window invalid: {violations:?}"))
        })?;
    let ground_truth = if spec.disseminate {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    Ok(GeneratedScenario {
        window,
        ground_truth,
        spec: spec.clone(),
    })
}
