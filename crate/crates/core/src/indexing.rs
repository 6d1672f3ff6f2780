//! Resilience indexing: rank-discounted per-class degradation scores and the
//! sigmoid index that compares them.
//!
//! Contributions are aggregated per metric class with a rank discount of
//! `1/log2(rank+1)` (the top metric is undiscounted), and the index
//! `r = 1/(1 + exp(d_user - d_system))` maps the class difference into
//! `(0, 1)`. Degradation concentrated in system-performance metrics pushes
//! `r` toward 1; degradation that reaches the user-aware metrics pushes it
//! toward 0.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::ContributionMeasure;
use crate::lattice::RankedMetricList;
use crate::model::{MetricCatalog, MetricClass, MetricId};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum IndexingError {
    #[error("ranked list is not a permutation of the catalog")]
    RankMismatch,
    #[error("threshold must lie strictly inside (0, 1), got {0}")]
    InvalidThreshold(f64),
}

/// Binary profiling outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Pass => f.write_str("PASS"),
            Verdict::Fail => f.write_str("FAIL"),
        }
    }
}

/// Sum of `contribution / log2(rank + 1)` over the ranked metrics of one
/// class; an empty class sums to 0. The ranked list must be a permutation of
/// the catalog.
pub fn class_degradation<T: Scalar>(
    ranked: &RankedMetricList<T>,
    catalog: &MetricCatalog,
    class: MetricClass,
) -> Result<T, IndexingError> {
    let full = catalog.ids().cloned().collect();
    if !ranked.is_permutation_of(&full) {
        return Err(IndexingError::RankMismatch);
    }
    let mut total = T::zero();
    for (position, entry) in ranked.entries().iter().enumerate() {
        if catalog.class_of(&entry.metric) == Some(class) {
            total = total + entry.contribution / discount::<T>(position + 1);
        }
    }
    Ok(total)
}

/// DCG-style rank discount for a 1-based rank: `log2(rank + 1)`.
fn discount<T: Scalar>(rank: usize) -> T {
    T::from_usize(rank + 1).unwrap().log2()
}

/// Maps the two class-degradation scores to the resilience index
/// `r = 1/(1 + exp(d_user - d_system))`, strictly inside `(0, 1)`.
///
/// The exponent is clamped (at ±700 in double precision) and the result is
/// nudged off the interval bounds at float resolution, so the openness of
/// the interval survives saturation.
pub fn resilience_index<T: Scalar>(d_user: T, d_system: T) -> T {
    let clamp = T::exp_clamp();
    let x = (d_user - d_system).max(-clamp).min(clamp);
    // evaluate the stable branch of the sigmoid
    let r = if x >= T::zero() {
        let e = (-x).exp();
        e / (T::one() + e)
    } else {
        T::one() / (T::one() + x.exp())
    };
    r.max(T::min_positive_value()).min(T::one() - T::epsilon())
}

/// PASS when the index strictly exceeds the threshold; the boundary
/// `r == tau` fails. The threshold must lie strictly inside `(0, 1)`.
pub fn classify<T: Scalar>(index: T, tau: T) -> Result<Verdict, IndexingError> {
    if tau.is_nan() || tau <= T::zero() || tau >= T::one() {
        return Err(IndexingError::InvalidThreshold(
            tau.to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok(if index > tau {
        Verdict::Pass
    } else {
        Verdict::Fail
    })
}

/// One ranked metric as it appears in a serialized report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedReportEntry<T> {
    pub metric: MetricId,
    pub class: MetricClass,
    pub rank: usize,
    pub contribution: T,
}

/// Full per-failure profiling outcome: class degradation scores, the
/// resilience index, the thresholded verdict, and the ranked metrics that
/// produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResilienceReport<T> {
    pub failure: String,
    pub measure: ContributionMeasure,
    pub tau: T,
    pub d_system: T,
    pub d_user: T,
    pub index: T,
    pub verdict: Verdict,
    pub ranked: Vec<RankedReportEntry<T>>,
}

impl<T: Scalar> ResilienceReport<T> {
    /// Assembles a report from a ranked list; computes both class scores,
    /// the index, and the verdict.
    pub fn build(
        failure: impl Into<String>,
        ranked: &RankedMetricList<T>,
        catalog: &MetricCatalog,
        measure: ContributionMeasure,
        tau: T,
    ) -> Result<Self, IndexingError> {
        let d_system = class_degradation(ranked, catalog, MetricClass::SystemPerformance)?;
        let d_user = class_degradation(ranked, catalog, MetricClass::UserAware)?;
        let index = resilience_index(d_user, d_system);
        let verdict = classify(index, tau)?;
        let entries = ranked
            .entries()
            .iter()
            .enumerate()
            .map(|(position, entry)| RankedReportEntry {
                metric: entry.metric.clone(),
                class: catalog
                    .class_of(&entry.metric)
                    .expect("permutation checked"),
                rank: position + 1,
                contribution: entry.contribution,
            })
            .collect();
        Ok(ResilienceReport {
            failure: failure.into(),
            measure,
            tau,
            d_system,
            d_user,
            index,
            verdict,
            ranked: entries,
        })
    }
}
