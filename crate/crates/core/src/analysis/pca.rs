//! First principal component of a difference matrix.
//!
//! Time points are the samples and metrics the features, so the extracted
//! component is itself a time series: the one-dimensional signal that
//! captures the largest share of the joint difference variance.

use serde::{Deserialize, Serialize};

use super::{AnalysisError, DifferenceMatrix};
use crate::scalar::Scalar;

/// The one-dimensional principal degradation signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrincipalSignal<T> {
    pub values: Vec<T>,
    pub explained_variance_ratio: T,
}

/// Projects the matrix rows onto the leading eigenvector of their covariance.
///
/// The returned series has the window's length and a fixed sign convention:
/// it is flipped, if necessary, so that the sum of its Pearson correlations
/// with the rows is non-negative. An all-zero matrix yields the zero signal
/// with an explained-variance ratio of 0.
pub fn pca_first_component<T: Scalar>(
    matrix: &DifferenceMatrix<T>,
) -> Result<PrincipalSignal<T>, AnalysisError> {
    let len = matrix.period_len();
    if len < 2 {
        return Err(AnalysisError::DegenerateInput { period_len: len });
    }
    let rows = matrix.rows();
    let m = rows.len();

    // rows are mean-centered, so the sample covariance is D D^T / (T-1)
    let denom = T::from_usize(len - 1).unwrap();
    let mut cov = vec![vec![T::zero(); m]; m];
    for i in 0..m {
        for j in i..m {
            let acc: T = rows[i]
                .iter()
                .zip(rows[j].iter())
                .map(|(a, b)| *a * *b)
                .sum();
            let value = acc / denom;
            cov[i][j] = value;
            cov[j][i] = value;
        }
    }

    let trace: T = (0..m).map(|i| cov[i][i]).sum();
    if trace <= T::zero() {
        return Ok(PrincipalSignal {
            values: vec![T::zero(); len],
            explained_variance_ratio: T::zero(),
        });
    }

    let (eigenvalues, eigenvectors) = jacobi_eigen(cov);
    let mut lead = 0;
    for (k, value) in eigenvalues.iter().enumerate() {
        if *value > eigenvalues[lead] {
            lead = k;
        }
    }

    let mut values: Vec<T> = (0..len)
        .map(|t| (0..m).map(|i| eigenvectors[i][lead] * rows[i][t]).sum())
        .collect();

    let correlation_sum: T = rows.iter().map(|row| pearson(&values, row)).sum();
    if correlation_sum < T::zero() {
        for v in values.iter_mut() {
            *v = -*v;
        }
    }

    let ratio = (eigenvalues[lead] / trace).max(T::zero()).min(T::one());
    Ok(PrincipalSignal {
        values,
        explained_variance_ratio: ratio,
    })
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns the
/// eigenvalues and the matrix of eigenvectors as columns
/// (`vectors[i][k]` = component `i` of eigenvector `k`).
#[allow(clippy::needless_range_loop)]
fn jacobi_eigen<T: Scalar>(mut a: Vec<Vec<T>>) -> (Vec<T>, Vec<Vec<T>>) {
    let n = a.len();
    let mut vectors = vec![vec![T::zero(); n]; n];
    for (i, row) in vectors.iter_mut().enumerate() {
        row[i] = T::one();
    }
    if n == 1 {
        return (vec![a[0][0]], vectors);
    }

    let norm: T = a
        .iter()
        .flat_map(|row| row.iter())
        .map(|v| *v * *v)
        .sum::<T>()
        .sqrt();
    let tolerance = T::epsilon() * norm * T::from_usize(n).unwrap();

    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a[p][q] * a[p][q];
            }
        }
        if off.sqrt() <= tolerance {
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * apq);
                let tangent = {
                    let sign = if theta < T::zero() {
                        -T::one()
                    } else {
                        T::one()
                    };
                    sign / (theta.abs() + (T::one() + theta * theta).sqrt())
                };
                let cos = T::one() / (tangent * tangent + T::one()).sqrt();
                let sin = tangent * cos;

                let app = a[p][p];
                let aqq = a[q][q];
                a[p][p] = cos * cos * app - T::lit(2.0) * sin * cos * apq + sin * sin * aqq;
                a[q][q] = sin * sin * app + T::lit(2.0) * sin * cos * apq + cos * cos * aqq;
                a[p][q] = T::zero();
                a[q][p] = T::zero();
                for k in 0..n {
                    if k != p && k != q {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = cos * akp - sin * akq;
                        a[p][k] = a[k][p];
                        a[k][q] = sin * akp + cos * akq;
                        a[q][k] = a[k][q];
                    }
                }
                for row in vectors.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = cos * vp - sin * vq;
                    row[q] = sin * vp + cos * vq;
                }
            }
        }
    }

    let eigenvalues = (0..n).map(|i| a[i][i]).collect();
    (eigenvalues, vectors)
}

/// Signed Pearson correlation; 0 when either side has zero variance.
pub(crate) fn pearson<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let n = T::from_usize(a.len()).unwrap();
    let mean_a = a.iter().copied().sum::<T>() / n;
    let mean_b = b.iter().copied().sum::<T>() / n;
    let mut cov = T::zero();
    let mut var_a = T::zero();
    let mut var_b = T::zero();
    for (x, y) in a.iter().zip(b.iter()) {
        let dx = *x - mean_a;
        let dy = *y - mean_b;
        cov = cov + dx * dy;
        var_a = var_a + dx * dx;
        var_b = var_b + dy * dy;
    }
    if var_a <= T::zero() || var_b <= T::zero() {
        return T::zero();
    }
    (cov / (var_a * var_b).sqrt()).max(-T::one()).min(T::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MetricId;

    fn matrix(rows: Vec<Vec<f64>>) -> DifferenceMatrix<f64> {
        let ids: Vec<MetricId> = (0..rows.len())
            .map(|i| MetricId::from(format!("m{i}")))
            .collect();
        DifferenceMatrix::from_rows(ids, rows).unwrap()
    }

    #[test]
    fn rank_one_matrix_recovers_the_shared_direction() {
        // rows [[1,-1],[2,-2]]: covariance [[2,4],[4,8]], leading eigenvector
        // (1,2)/sqrt(5), projection [sqrt(5), -sqrt(5)]
        let signal = pca_first_component(&matrix(vec![vec![1.0, -1.0], vec![2.0, -2.0]])).unwrap();
        let root5 = 5.0f64.sqrt();
        assert!((signal.values[0] - root5).abs() < 1e-12);
        assert!((signal.values[1] + root5).abs() < 1e-12);
        assert!((signal.explained_variance_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_row_projects_to_itself_up_to_scale() {
        let row = vec![0.5, -1.5, 1.0];
        let signal = pca_first_component(&matrix(vec![row.clone()])).unwrap();
        let rho = pearson(&signal.values, &row);
        assert!((rho - 1.0).abs() < 1e-12);
        assert!((signal.explained_variance_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_zero_matrix_yields_zero_signal() {
        let signal = pca_first_component(&matrix(vec![vec![0.0; 4], vec![0.0; 4]])).unwrap();
        assert_eq!(signal.values, vec![0.0; 4]);
        assert_eq!(signal.explained_variance_ratio, 0.0);
    }

    #[test]
    fn single_sample_is_degenerate() {
        let err = pca_first_component(&matrix(vec![vec![0.0]])).unwrap_err();
        assert!(matches!(
            err,
            AnalysisError::DegenerateInput { period_len: 1 }
        ));
    }

    #[test]
    fn sign_convention_prefers_positive_row_correlation() {
        let signal = pca_first_component(&matrix(vec![vec![-3.0, 1.0, 2.0]])).unwrap();
        assert!(pearson(&signal.values, &[-3.0, 1.0, 2.0]) > 0.0);
    }

    #[test]
    fn jacobi_diagonalizes_a_known_matrix() {
        // eigenvalues of [[2,1],[1,2]] are 3 and 1
        let (mut values, _) = jacobi_eigen::<f64>(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        values.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((values[0] - 1.0).abs() < 1e-12);
        assert!((values[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_handles_zero_variance() {
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[0.0, 2.0, 4.0]), 0.0);
        assert_eq!(pearson(&[0.0, 2.0], &[5.0, 5.0]), 0.0);
    }
}
