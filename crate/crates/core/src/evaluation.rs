//! Scoring of produced resilience indices against ground-truth verdicts:
//! cross entropy, MAE, RMSE, and thresholded accuracy/F1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indexing::{classify, IndexingError, Verdict};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvaluationError {
    #[error("no outcomes to evaluate")]
    EmptyInput,
    #[error(transparent)]
    Indexing(#[from] IndexingError),
}

/// A produced index paired with its ground-truth verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledOutcome<T> {
    pub failure_name: String,
    pub label: Verdict,
    pub index: T,
}

/// Aggregate quality of a batch of indices. PASS is the positive class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport<T> {
    pub ce: T,
    pub mae: T,
    pub rmse: T,
    pub accuracy: T,
    pub f1: T,
    pub n: usize,
    pub tau: T,
}

/// Scores the outcomes: continuous errors against the 0/1-encoded labels
/// (natural-log cross entropy with probabilities clamped away from 0 and 1),
/// plus accuracy and F1 after thresholding each index at `tau`.
pub fn evaluate<T: Scalar>(
    outcomes: &[LabeledOutcome<T>],
    tau: T,
) -> Result<EvaluationReport<T>, EvaluationError> {
    if outcomes.is_empty() {
        return Err(EvaluationError::EmptyInput);
    }
    let n = T::from_usize(outcomes.len()).unwrap();
    let eps = T::lit(1e-12).max(T::epsilon());

    let mut abs_sum = T::zero();
    let mut sq_sum = T::zero();
    let mut ce_sum = T::zero();
    let mut true_pos = 0usize;
    let mut true_neg = 0usize;
    let mut false_pos = 0usize;
    let mut false_neg = 0usize;

    for outcome in outcomes {
        let y = match outcome.label {
            Verdict::Pass => T::one(),
            Verdict::Fail => T::zero(),
        };
        let p = outcome.index;
        let diff = (y - p).abs();
        abs_sum = abs_sum + diff;
        sq_sum = sq_sum + diff * diff;
        let clamped = p.max(eps).min(T::one() - eps);
        ce_sum = ce_sum - (y * clamped.ln() + (T::one() - y) * (T::one() - clamped).ln());

        let predicted = classify(p, tau)?;
        match (outcome.label, predicted) {
            (Verdict::Pass, Verdict::Pass) => true_pos += 1,
            (Verdict::Fail, Verdict::Fail) => true_neg += 1,
            (Verdict::Fail, Verdict::Pass) => false_pos += 1,
            (Verdict::Pass, Verdict::Fail) => false_neg += 1,
        }
    }

    let accuracy = T::from_usize(true_pos + true_neg).unwrap() / n;
    let precision_denom = true_pos + false_pos;
    let recall_denom = true_pos + false_neg;
    let precision = if precision_denom == 0 {
        T::zero()
    } else {
        T::from_usize(true_pos).unwrap() / T::from_usize(precision_denom).unwrap()
    };
    let recall = if recall_denom == 0 {
        T::zero()
    } else {
        T::from_usize(true_pos).unwrap() / T::from_usize(recall_denom).unwrap()
    };
    let f1 = if precision + recall == T::zero() {
        T::zero()
    } else {
        T::lit(2.0) * precision * recall / (precision + recall)
    };

    Ok(EvaluationReport {
        ce: ce_sum / n,
        mae: abs_sum / n,
        rmse: (sq_sum / n).sqrt(),
        accuracy,
        f1,
        n: outcomes.len(),
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn outcome(label: Verdict, index: f64) -> LabeledOutcome<f64> {
        LabeledOutcome {
            failure_name: format!("case_{label}_{index}"),
            label,
            index,
        }
    }

    #[test]
    fn single_sample_absolute_errors() {
        let report = evaluate(&[outcome(Verdict::Pass, 0.75)], 0.5).unwrap();
        assert!((report.mae - 0.25).abs() < 1e-12);
        assert!((report.rmse - 0.25).abs() < 1e-12);
    }

    #[test]
    fn coin_flip_cross_entropy_is_ln_two() {
        let report = evaluate(&[outcome(Verdict::Pass, 0.5)], 0.4).unwrap();
        assert!((report.ce - 2.0f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn separated_outcomes_score_perfectly() {
        let report = evaluate(
            &[outcome(Verdict::Pass, 0.6), outcome(Verdict::Fail, 0.3)],
            0.4,
        )
        .unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.f1, 1.0);
        assert_eq!(report.n, 2);
    }

    #[test]
    fn empty_input_is_rejected() {
        let empty: [LabeledOutcome<f64>; 0] = [];
        assert_eq!(
            evaluate(&empty, 0.5).unwrap_err(),
            EvaluationError::EmptyInput
        );
    }

    #[test]
    fn all_failing_predictions_give_zero_f1() {
        let report = evaluate(
            &[outcome(Verdict::Fail, 0.2), outcome(Verdict::Fail, 0.3)],
            0.5,
        )
        .unwrap();
        assert_eq!(report.f1, 0.0);
        assert_eq!(report.accuracy, 1.0);
    }

    #[test]
    fn near_perfect_predictions_drive_errors_to_zero() {
        let outcomes = [
            outcome(Verdict::Pass, 1.0 - 1e-9),
            outcome(Verdict::Fail, 1e-9),
        ];
        let report = evaluate(&outcomes, 0.5).unwrap();
        assert!(report.ce < 1e-6);
        assert!(report.mae < 1e-6);
        assert!(report.rmse < 1e-6);
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.f1, 1.0);
    }

    proptest! {
        #[test]
        fn mae_never_exceeds_rmse(
            indices in proptest::collection::vec(0.001f64..0.999, 1..50),
            labels in proptest::collection::vec(proptest::bool::ANY, 1..50),
        ) {
            let outcomes: Vec<LabeledOutcome<f64>> = indices
                .iter()
                .zip(labels.iter().cycle())
                .map(|(p, pass)| {
                    outcome(if *pass { Verdict::Pass } else { Verdict::Fail }, *p)
                })
                .collect();
            let report = evaluate(&outcomes, 0.5).unwrap();
            prop_assert!(report.mae <= report.rmse + 1e-12);
        }

        #[test]
        fn cross_entropy_is_permutation_invariant(
            indices in proptest::collection::vec(0.001f64..0.999, 2..20),
        ) {
            let outcomes: Vec<LabeledOutcome<f64>> = indices
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    outcome(if i % 2 == 0 { Verdict::Pass } else { Verdict::Fail }, *p)
                })
                .collect();
            let mut reversed = outcomes.clone();
            reversed.reverse();
            let a = evaluate(&outcomes, 0.5).unwrap();
            let b = evaluate(&reversed, 0.5).unwrap();
            prop_assert!((a.ce - b.ce).abs() <= 1e-12);
        }
    }
}
