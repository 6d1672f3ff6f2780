//! Greedy elimination walk over the metric lattice.
//!
//! The power set of the metric universe, ordered by inclusion, forms a
//! lattice with the full set at the top and the empty set at the bottom.
//! Starting from the top, the walk repeatedly scores the remaining metrics
//! against the principal degradation signal of the *current* subset, records
//! the strongest contributor, and removes it. The visited path yields a
//! ranked list of every metric with its contribution at elimination time.
//!
//! Only the single greedy path is ever materialized; the explicit lattice
//! would have `2^M` nodes.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{select_dominant_metric, AnalysisError, ContributionMeasure};
use crate::model::{MetricId, PairedWindow};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum LatticeError {
    #[error("ranked list is not a permutation of the metric set")]
    NotAPermutation,
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// One ranked metric with the contribution recorded when it was eliminated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry<T> {
    pub metric: MetricId,
    pub contribution: T,
}

/// The ordered outcome of the elimination walk. Rank is the 1-based
/// position; entry `k` holds the contribution computed on the subset that
/// was live at iteration `k`, not on the full set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedMetricList<T> {
    entries: Vec<RankedEntry<T>>,
}

impl<T: Scalar> RankedMetricList<T> {
    pub fn from_entries(entries: Vec<RankedEntry<T>>) -> Self {
        RankedMetricList { entries }
    }

    pub fn entries(&self) -> &[RankedEntry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// 1-based rank of a metric, if present.
    pub fn rank_of(&self, metric: &MetricId) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| &e.metric == metric)
            .map(|i| i + 1)
    }

    pub fn metrics(&self) -> impl Iterator<Item = &MetricId> {
        self.entries.iter().map(|e| &e.metric)
    }

    /// True when the entries are exactly a permutation of `set`.
    pub fn is_permutation_of(&self, set: &BTreeSet<MetricId>) -> bool {
        if self.entries.len() != set.len() {
            return false;
        }
        let seen: BTreeSet<&MetricId> = self.metrics().collect();
        seen.len() == self.entries.len() && set.iter().all(|id| seen.contains(id))
    }
}

/// Ranks every catalog metric by repeated dominant-metric elimination.
///
/// Each iteration rebuilds the difference matrix and principal signal on the
/// metrics still in play, so contributions reflect the shrinking subset.
/// Identical inputs produce an identical list.
pub fn rank_by_elimination<T: Scalar>(
    window: &PairedWindow<T>,
    measure: ContributionMeasure,
) -> Result<RankedMetricList<T>, LatticeError> {
    let mut remaining: BTreeSet<MetricId> = window.catalog().ids().cloned().collect();
    let mut entries = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let subset: Vec<MetricId> = remaining.iter().cloned().collect();
        let (contribution, metric) = select_dominant_metric(window, &subset, measure)?;
        remaining.remove(&metric);
        entries.push(RankedEntry {
            metric,
            contribution,
        });
    }
    Ok(RankedMetricList { entries })
}

/// Expands a ranked list into the chain of lattice nodes the walk visited:
/// the full set, then each successively smaller subset, down to the empty
/// set. Consecutive nodes differ by exactly the eliminated metric.
pub fn enumerate_lattice_path<T: Scalar>(
    ranked: &RankedMetricList<T>,
    full_set: &BTreeSet<MetricId>,
) -> Result<Vec<BTreeSet<MetricId>>, LatticeError> {
    if !ranked.is_permutation_of(full_set) {
        return Err(LatticeError::NotAPermutation);
    }
    let mut path = Vec::with_capacity(full_set.len() + 1);
    let mut node = full_set.clone();
    path.push(node.clone());
    for entry in ranked.entries() {
        node.remove(&entry.metric);
        path.push(node.clone());
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MetricCatalog, MetricClass};
    use std::collections::BTreeMap;

    fn window_from(pairs: &[(&str, MetricClass, Vec<f64>, Vec<f64>)]) -> PairedWindow<f64> {
        let catalog = MetricCatalog::from_entries(
            pairs
                .iter()
                .map(|(name, class, _, _)| (MetricId::from(*name), *class)),
        )
        .unwrap();
        let faulty: BTreeMap<MetricId, Vec<f64>> = pairs
            .iter()
            .map(|(name, _, f, _)| (MetricId::from(*name), f.clone()))
            .collect();
        let normal: BTreeMap<MetricId, Vec<f64>> = pairs
            .iter()
            .map(|(name, _, _, n)| (MetricId::from(*name), n.clone()))
            .collect();
        let len = pairs[0].2.len();
        PairedWindow::new(catalog, faulty, normal, 1.0, len).unwrap()
    }

    #[test]
    fn singleton_catalog_ranks_itself() {
        let window = window_from(&[(
            "cpu",
            MetricClass::SystemPerformance,
            vec![3.0, 6.0, 4.0],
            vec![1.0, 1.0, 1.0],
        )]);
        let ranked = rank_by_elimination(&window, ContributionMeasure::Pearson).unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked.entries()[0].metric, MetricId::from("cpu"));
        assert!((ranked.entries()[0].contribution - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unchanged_metrics_rank_lexicographically_with_zero_contribution() {
        let flat = vec![2.0, 2.0, 2.0];
        let window = window_from(&[
            (
                "c_io",
                MetricClass::SystemPerformance,
                flat.clone(),
                flat.clone(),
            ),
            (
                "a_cpu",
                MetricClass::SystemPerformance,
                flat.clone(),
                flat.clone(),
            ),
            ("b_lat", MetricClass::UserAware, flat.clone(), flat.clone()),
        ]);
        let ranked = rank_by_elimination(&window, ContributionMeasure::Pearson).unwrap();
        let order: Vec<&str> = ranked.metrics().map(MetricId::as_str).collect();
        assert_eq!(order, vec!["a_cpu", "b_lat", "c_io"]);
        assert!(ranked.entries().iter().all(|e| e.contribution == 0.0));
    }

    #[test]
    fn ranked_list_is_a_permutation_of_the_catalog() {
        let window = window_from(&[
            (
                "cpu",
                MetricClass::SystemPerformance,
                vec![5.0, 9.0, 6.0],
                vec![1.0, 1.2, 0.9],
            ),
            (
                "mem",
                MetricClass::SystemPerformance,
                vec![1.0, 1.1, 1.0],
                vec![1.0, 1.0, 1.1],
            ),
            (
                "lat",
                MetricClass::UserAware,
                vec![2.0, 2.1, 2.0],
                vec![2.0, 2.0, 2.0],
            ),
        ]);
        for measure in [
            ContributionMeasure::Pearson,
            ContributionMeasure::Euclid,
            ContributionMeasure::Cid,
            ContributionMeasure::Dtw {
                warping_window_steps: 1,
            },
        ] {
            let ranked = rank_by_elimination(&window, measure).unwrap();
            let full: BTreeSet<MetricId> = window.catalog().ids().cloned().collect();
            assert!(ranked.is_permutation_of(&full), "{measure}");
        }
    }

    #[test]
    fn identical_inputs_rank_identically() {
        let window = window_from(&[
            (
                "cpu",
                MetricClass::SystemPerformance,
                vec![5.0, 9.0, 6.0, 7.0],
                vec![1.0, 1.2, 0.9, 1.1],
            ),
            (
                "mem",
                MetricClass::SystemPerformance,
                vec![1.0, 4.1, 1.0, 2.0],
                vec![1.0, 1.0, 1.1, 1.0],
            ),
            (
                "lat",
                MetricClass::UserAware,
                vec![2.0, 2.1, 5.0, 2.2],
                vec![2.0, 2.0, 2.0, 2.1],
            ),
        ]);
        let measure = ContributionMeasure::Dtw {
            warping_window_steps: 2,
        };
        let first = rank_by_elimination(&window, measure).unwrap();
        let second = rank_by_elimination(&window, measure).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn lattice_path_descends_one_metric_at_a_time() {
        let ids = ["m1", "m2", "m3", "m4"].map(MetricId::from);
        let full: BTreeSet<MetricId> = ids.iter().cloned().collect();
        let ranked = RankedMetricList::from_entries(
            ["m2", "m4", "m1", "m3"]
                .into_iter()
                .map(|name| RankedEntry {
                    metric: MetricId::from(name),
                    contribution: 1.0,
                })
                .collect(),
        );
        let path = enumerate_lattice_path(&ranked, &full).unwrap();
        assert_eq!(path.len(), 5);
        assert_eq!(path[0], full);
        assert!(path[4].is_empty());
        for (bigger, smaller) in path.windows(2).map(|w| (&w[0], &w[1])) {
            assert_eq!(bigger.len(), smaller.len() + 1);
            assert!(smaller.is_subset(bigger));
        }
        assert!(!path[1].contains(&MetricId::from("m2")));
        assert!(!path[2].contains(&MetricId::from("m4")));
    }

    #[test]
    fn singleton_path_has_two_nodes() {
        let full: BTreeSet<MetricId> = [MetricId::from("m")].into_iter().collect();
        let ranked = RankedMetricList::from_entries(vec![RankedEntry {
            metric: MetricId::from("m"),
            contribution: 0.5,
        }]);
        let path = enumerate_lattice_path(&ranked, &full).unwrap();
        assert_eq!(path.len(), 2);
        assert!(path[1].is_empty());
    }

    #[test]
    fn missing_member_is_not_a_permutation() {
        let full: BTreeSet<MetricId> = [MetricId::from("m1"), MetricId::from("m2")]
            .into_iter()
            .collect();
        let ranked = RankedMetricList::from_entries(vec![RankedEntry {
            metric: MetricId::from("m1"),
            contribution: 0.5,
        }]);
        assert_eq!(
            enumerate_lattice_path(&ranked, &full).unwrap_err(),
            LatticeError::NotAPermutation
        );
    }
}
