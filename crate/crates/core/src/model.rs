//! Shared domain types: metric identities, the user-aware/system-performance
//! partition, and the paired faulty/normal measurement window every analysis
//! stage consumes.
//!
//! All types are immutable after construction and safe to share across
//! concurrent analysis tasks.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Identifier of a monitoring metric, unique within a catalog.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricId(String);

impl MetricId {
    pub fn new(name: impl Into<String>) -> Self {
        MetricId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for MetricId {
    fn from(name: &str) -> Self {
        MetricId::new(name)
    }
}

impl From<String> for MetricId {
    fn from(name: String) -> Self {
        MetricId::new(name)
    }
}

/// Which side of the metric partition a metric belongs to.
///
/// User-aware metrics measure service quality as seen by callers (latency,
/// error rate, throughput); system-performance metrics measure the runtime
/// status of the infrastructure and containers underneath (CPU, memory,
/// network, disk).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricClass {
    UserAware,
    SystemPerformance,
}

impl fmt::Display for MetricClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricClass::UserAware => f.write_str("user_aware"),
            MetricClass::SystemPerformance => f.write_str("system_performance"),
        }
    }
}

/// A structural problem found while validating a [`MetricCatalog`].
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CatalogViolation {
    #[error("catalog is empty")]
    EmptyCatalog,
    #[error("catalog has no {0} metric")]
    MissingClass(MetricClass),
    #[error("duplicate metric id `{0}`")]
    DuplicateId(MetricId),
    #[error("empty metric name")]
    EmptyMetricName,
}

/// The metric universe, partitioned into user-aware and system-performance
/// entries. Every metric belongs to exactly one class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricCatalog {
    entries: BTreeMap<MetricId, MetricClass>,
}

impl MetricCatalog {
    /// Builds a catalog from `(id, class)` pairs, rejecting duplicates and
    /// empty names. Does not require both classes to be present; run
    /// [`validate_catalog`] before analysis.
    pub fn from_entries(
        entries: impl IntoIterator<Item = (MetricId, MetricClass)>,
    ) -> Result<Self, Vec<CatalogViolation>> {
        let mut map = BTreeMap::new();
        let mut violations = Vec::new();
        for (id, class) in entries {
            if id.is_empty() {
                violations.push(CatalogViolation::EmptyMetricName);
                continue;
            }
            if map.insert(id.clone(), class).is_some() {
                violations.push(CatalogViolation::DuplicateId(id));
            }
        }
        if violations.is_empty() {
            Ok(MetricCatalog { entries: map })
        } else {
            Err(violations)
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: &MetricId) -> bool {
        self.entries.contains_key(id)
    }

    pub fn class_of(&self, id: &MetricId) -> Option<MetricClass> {
        self.entries.get(id).copied()
    }

    /// All metric ids in lexicographic order.
    pub fn ids(&self) -> impl Iterator<Item = &MetricId> {
        self.entries.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MetricId, MetricClass)> {
        self.entries.iter().map(|(id, class)| (id, *class))
    }

    /// Ids of the given class, in lexicographic order.
    pub fn ids_of_class(&self, class: MetricClass) -> impl Iterator<Item = &MetricId> {
        self.entries
            .iter()
            .filter(move |(_, c)| **c == class)
            .map(|(id, _)| id)
    }
}

/// Checks the partition invariants: non-empty, and at least one metric on
/// each side of the user-aware/system-performance split.
pub fn validate_catalog(catalog: &MetricCatalog) -> Result<(), Vec<CatalogViolation>> {
    let mut violations = Vec::new();
    if catalog.is_empty() {
        violations.push(CatalogViolation::EmptyCatalog);
    } else {
        if catalog
            .ids_of_class(MetricClass::UserAware)
            .next()
            .is_none()
        {
            violations.push(CatalogViolation::MissingClass(MetricClass::UserAware));
        }
        if catalog
            .ids_of_class(MetricClass::SystemPerformance)
            .next()
            .is_none()
        {
            violations.push(CatalogViolation::MissingClass(
                MetricClass::SystemPerformance,
            ));
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Problems found while constructing a [`MetricSeries`].
#[derive(Clone, Debug, PartialEq, Error)]
pub enum SeriesError {
    #[error("series `{0}` is empty")]
    Empty(MetricId),
    #[error("series `{id}`: {timestamps} timestamps vs {values} values")]
    LengthMismatch {
        id: MetricId,
        timestamps: usize,
        values: usize,
    },
    #[error("series `{id}`: timestamp at index {index} is not strictly increasing")]
    NonMonotonicTimestamp { id: MetricId, index: usize },
    #[error("series `{id}`: non-finite value at index {index}")]
    NonFiniteValue { id: MetricId, index: usize },
}

/// A univariate metric time series on seconds-since-epoch timestamps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries<T> {
    id: MetricId,
    timestamps: Vec<f64>,
    values: Vec<T>,
}

impl<T: Scalar> MetricSeries<T> {
    pub fn new(id: MetricId, timestamps: Vec<f64>, values: Vec<T>) -> Result<Self, SeriesError> {
        if timestamps.is_empty() {
            return Err(SeriesError::Empty(id));
        }
        if timestamps.len() != values.len() {
            return Err(SeriesError::LengthMismatch {
                id,
                timestamps: timestamps.len(),
                values: values.len(),
            });
        }
        for (index, pair) in timestamps.windows(2).enumerate() {
            if pair[1] <= pair[0] {
                return Err(SeriesError::NonMonotonicTimestamp {
                    id,
                    index: index + 1,
                });
            }
        }
        for (index, value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(SeriesError::NonFiniteValue { id, index });
            }
        }
        Ok(MetricSeries {
            id,
            timestamps,
            values,
        })
    }

    pub fn id(&self) -> &MetricId {
        &self.id
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A structural problem found while validating a [`PairedWindow`].
#[derive(Clone, Debug, PartialEq, Error)]
pub enum WindowViolation {
    #[error("metric `{metric}` ({period}): length {got}, expected {expected}")]
    LengthMismatch {
        metric: MetricId,
        period: Period,
        got: usize,
        expected: usize,
    },
    #[error("faulty/normal key sets do not match the catalog")]
    KeySetMismatch,
    #[error("metric `{metric}` ({period}): non-finite value at index {index}")]
    NonFiniteValue {
        metric: MetricId,
        period: Period,
        index: usize,
    },
    #[error("step_seconds must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("window length must be positive")]
    EmptyWindow,
}

/// Which half of a paired window a value belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    Faulty,
    Normal,
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::Faulty => f.write_str("faulty"),
            Period::Normal => f.write_str("normal"),
        }
    }
}

/// Aligned faulty-period and normal-period value vectors of equal length for
/// every metric in a catalog.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedWindow<T> {
    catalog: MetricCatalog,
    faulty: BTreeMap<MetricId, Vec<T>>,
    normal: BTreeMap<MetricId, Vec<T>>,
    step_seconds: f64,
    period_len: usize,
}

impl<T: Scalar> PairedWindow<T> {
    /// Builds a paired window, returning every violation found if the parts
    /// do not line up.
    pub fn new(
        catalog: MetricCatalog,
        faulty: BTreeMap<MetricId, Vec<T>>,
        normal: BTreeMap<MetricId, Vec<T>>,
        step_seconds: f64,
        period_len: usize,
    ) -> Result<Self, Vec<WindowViolation>> {
        let window = PairedWindow {
            catalog,
            faulty,
            normal,
            step_seconds,
            period_len,
        };
        validate_window(&window)?;
        Ok(window)
    }

    pub fn catalog(&self) -> &MetricCatalog {
        &self.catalog
    }

    /// Number of samples in each period.
    pub fn period_len(&self) -> usize {
        self.period_len
    }

    pub fn step_seconds(&self) -> f64 {
        self.step_seconds
    }

    pub fn faulty(&self, id: &MetricId) -> Option<&[T]> {
        self.faulty.get(id).map(Vec::as_slice)
    }

    pub fn normal(&self, id: &MetricId) -> Option<&[T]> {
        self.normal.get(id).map(Vec::as_slice)
    }
}

/// Checks a paired window against its catalog: matching key sets, uniform
/// vector lengths, and finite values throughout.
pub fn validate_window<T: Scalar>(window: &PairedWindow<T>) -> Result<(), Vec<WindowViolation>> {
    let mut violations = Vec::new();
    if window.period_len == 0 {
        violations.push(WindowViolation::EmptyWindow);
    }
    if window.step_seconds.is_nan() || window.step_seconds <= 0.0 {
        violations.push(WindowViolation::NonPositiveStep(window.step_seconds));
    }
    let keys_match = |side: &BTreeMap<MetricId, Vec<T>>| {
        side.len() == window.catalog.len() && side.keys().all(|id| window.catalog.contains(id))
    };
    if !keys_match(&window.faulty) || !keys_match(&window.normal) {
        violations.push(WindowViolation::KeySetMismatch);
    }
    for (period, side) in [
        (Period::Faulty, &window.faulty),
        (Period::Normal, &window.normal),
    ] {
        for (metric, values) in side {
            if values.len() != window.period_len {
                violations.push(WindowViolation::LengthMismatch {
                    metric: metric.clone(),
                    period,
                    got: values.len(),
                    expected: window.period_len,
                });
                continue;
            }
            for (index, value) in values.iter().enumerate() {
                if !value.is_finite() {
                    violations.push(WindowViolation::NonFiniteValue {
                        metric: metric.clone(),
                        period,
                        index,
                    });
                }
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}
