//! Banded dynamic time warping with a squared-difference step cost.

use crate::scalar::Scalar;

/// DTW distance between `a` and `b` under a Sakoe-Chiba band of half-width
/// `band` cells around the diagonal. The per-step cost is the square of the
/// absolute difference. The band is widened to the length difference when
/// needed so the end cell stays reachable; `band >= max(len)-1` gives the
/// unconstrained distance.
///
/// Runs in O(len_a * band) time with two rolling rows.
pub fn dtw_distance<T: Scalar>(a: &[T], b: &[T], band: usize) -> T {
    let n = a.len();
    let m = b.len();
    if n == 0 && m == 0 {
        return T::zero();
    }
    if n == 0 || m == 0 {
        return T::infinity();
    }
    let w = band.max(n.abs_diff(m));

    let inf = T::infinity();
    let mut prev = vec![inf; m + 1];
    let mut curr = vec![inf; m + 1];
    prev[0] = T::zero();
    for i in 1..=n {
        for slot in curr.iter_mut() {
            *slot = inf;
        }
        let lo = i.saturating_sub(w).max(1);
        let hi = (i + w).min(m);
        for j in lo..=hi {
            let diff = a[i - 1] - b[j - 1];
            let step = diff * diff;
            let best = prev[j].min(curr[j - 1]).min(prev[j - 1]);
            curr[j] = step + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[m]
}
