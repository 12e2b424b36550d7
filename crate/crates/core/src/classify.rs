//! Two-cluster split of estimated off-diagonal weights.
//!
//! The split is the exact one-dimensional 2-means optimum: the values are
//! sorted and every split between distinct consecutive values is scored by
//! its within-cluster sum of squares. The lower cluster is labeled
//! non-interacting.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tomography::TomographyResult;

/// Spread below which the values carry no separation evidence.
pub const DEGENERATE_SPREAD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterOutcome {
    /// 1 = interacting, in input order.
    pub labels: Vec<u8>,
    /// Means of the low and high clusters.
    pub centroids: (f64, f64),
    /// Values strictly above this are labeled 1.
    pub split_value: f64,
}

pub fn two_means_1d(values: &[f64]) -> Result<ClusterOutcome> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            available: n,
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("values", "must be finite"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[n - 1]);
    let mean = sorted.iter().sum::<f64>() / n as f64;
    if hi - lo < DEGENERATE_SPREAD {
        return Ok(ClusterOutcome {
            labels: vec![0; n],
            centroids: (mean, mean),
            split_value: hi,
        });
    }

    // Centered prefix sums keep the cost formula well conditioned.
    let centered: Vec<f64> = sorted.iter().map(|v| v - mean).collect();
    let total: f64 = centered.iter().sum();
    let mut left = 0.0;
    let mut best: Option<(f64, usize)> = None;
    for k in 1..n {
        left += centered[k - 1];
        if sorted[k - 1] == sorted[k] {
            continue;
        }
        let right = total - left;
        // WCSS = Σx² − S_L²/k − S_R²/(n−k); Σx² is constant.
        let cost = -(left * left / k as f64 + right * right / (n - k) as f64);
        // `<=` prefers the later split, i.e. the smaller interacting set.
        if best.is_none_or(|(c, _)| cost <= c) {
            best = Some((cost, k));
        }
    }
    let (_, k) = best.expect("non-degenerate input has a split");
    let split_value = sorted[k - 1];
    let low = sorted[..k].iter().sum::<f64>() / k as f64;
    let high = sorted[k..].iter().sum::<f64>() / (n - k) as f64;
    Ok(ClusterOutcome {
        labels: values.iter().map(|&v| u8::from(v > split_value)).collect(),
        centroids: (low, high),
        split_value,
    })
}

/// Labels off-diagonal entries by thresholding instead of clustering:
/// interacting iff `scale · â > threshold`.
pub fn threshold_labels(values: &[f64], scale: f64, threshold: f64) -> Vec<u8> {
    values.iter().map(|&v| u8::from(scale * v > threshold)).collect()
}

/// Off-diagonal entries of a square matrix in row-major order.
pub(crate) fn off_diagonal(m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows();
    let mut out = Vec::with_capacity(k * k.saturating_sub(1));
    for i in 0..k {
        for j in 0..k {
            if i != j {
                out.push(m[(i, j)]);
            }
        }
    }
    out
}

/// Rebuilds a `K × K` label matrix with unit diagonal from row-major
/// off-diagonal labels.
pub(crate) fn label_matrix(k: usize, labels: &[u8]) -> DMatrix<u8> {
    let mut g = DMatrix::identity(k, k);
    let mut it = labels.iter();
    for i in 0..k {
        for j in 0..k {
            if i != j {
                g[(i, j)] = *it.next().expect("one label per off-diagonal pair");
            }
        }
    }
    g
}

/// Clusters the off-diagonal entries of `â` and returns the reconstructed
/// interaction matrix (unit diagonal).
pub fn classify_edges(result: &TomographyResult) -> Result<(DMatrix<u8>, ClusterOutcome)> {
    let k = result.a_hat_obs.nrows();
    if k < 2 {
        return Err(Error::param("omega", "at least two observed agents are required"));
    }
    let outcome = two_means_1d(&off_diagonal(&result.a_hat_obs))?;
    Ok((label_matrix(k, &outcome.labels), outcome))
}

/// Known-threshold alternative to [`classify_edges`].
pub fn classify_edges_threshold(result: &TomographyResult, threshold: f64) -> Result<DMatrix<u8>> {
    let k = result.a_hat_obs.nrows();
    if k < 2 {
        return Err(Error::param("omega", "at least two observed agents are required"));
    }
    let labels = threshold_labels(&off_diagonal(&result.a_hat_obs), result.scale, threshold);
    Ok(label_matrix(k, &labels))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeMetrics {
    /// Pairs without an edge that were labeled interacting.
    pub false_detections: usize,
    /// Pairs with an edge that were labeled non-interacting.
    pub misses: usize,
    /// `(false_detections + misses) / (K (K − 1))`.
    pub error_rate: f64,
}

pub fn edge_metrics(g_hat: &DMatrix<u8>, g_true: &DMatrix<u8>) -> Result<EdgeMetrics> {
    if !g_hat.is_square() || g_hat.shape() != g_true.shape() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", g_true.shape()),
            actual: format!("{:?}", g_hat.shape()),
        });
    }
    let k = g_hat.nrows();
    let mut false_detections = 0;
    let mut misses = 0;
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            match (g_hat[(i, j)] != 0, g_true[(i, j)] != 0) {
                (true, false) => false_detections += 1,
                (false, true) => misses += 1,
                _ => {}
            }
        }
    }
    let pairs = k * k.saturating_sub(1);
    let error_rate = if pairs == 0 {
        0.0
    } else {
        (false_detections + misses) as f64 / pairs as f64
    };
    Ok(EdgeMetrics {
        false_detections,
        misses,
        error_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    use crate::rng::rng_from_seed;

    /// Brute-force WCSS of a labeling.
    fn wcss(values: &[f64], labels: &[u8]) -> f64 {
        let mut total = 0.0;
        for class in [0u8, 1] {
            let members: Vec<f64> = values
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == class)
                .map(|(&v, _)| v)
                .collect();
            if members.is_empty() {
                continue;
            }
            let m = members.iter().sum::<f64>() / members.len() as f64;
            total += members.iter().map(|v| (v - m).powi(2)).sum::<f64>();
        }
        total
    }

    /// Minimum WCSS over every threshold split.
    fn exhaustive_best(values: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for &t in values {
            let labels: Vec<u8> = values.iter().map(|&v| u8::from(v > t)).collect();
            if labels.iter().all(|&l| l == 0) {
                continue;
            }
            best = best.min(wcss(values, &labels));
        }
        best
    }

    #[test]
    fn separated_values() {
        let out = two_means_1d(&[0., 0., 0., 1., 1.]).unwrap();
        assert_eq!(out.labels, vec![0, 0, 0, 1, 1]);
        assert_eq!(out.centroids, (0.0, 1.0));
        assert_eq!(out.split_value, 0.0);
    }

    #[test]
    fn degenerate_all_equal() {
        let out = two_means_1d(&[5., 5., 5., 5.]).unwrap();
        assert_eq!(out.labels, vec![0; 4]);
        assert!(two_means_1d(&[1.0]).is_err());
        assert!(two_means_1d(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn matches_exhaustive_oracle() {
        let mut rng = rng_from_seed(77);
        let values: Vec<f64> = (0..200)
            .map(|i| {
                let z: f64 = rng.sample(StandardNormal);
                if i % 3 == 0 {
                    5.0 + z
                } else {
                    z
                }
            })
            .collect();
        let out = two_means_1d(&values).unwrap();
        let ours = wcss(&values, &out.labels);
        assert!((ours - exhaustive_best(&values)).abs() <= 1e-9 * ours.max(1.0));
        let (l, h) = out.centroids;
        assert!(l <= h);
    }

    #[test]
    fn tie_prefers_smaller_interacting_set() {
        // Symmetric layout: splitting after 0 or after 1 has equal cost.
        let out = two_means_1d(&[0., 1., 2.]).unwrap();
        assert_eq!(out.labels, vec![0, 0, 1]);
    }

    #[test]
    fn duplicates_stay_together() {
        let out = two_means_1d(&[0., 0., 1., 1., 1., 10.]).unwrap();
        for (v, l) in [0., 0., 1., 1., 1., 10.].iter().zip(&out.labels) {
            assert_eq!(*l, u8::from(*v > out.split_value));
        }
    }

    #[test]
    fn affine_invariance() {
        let mut rng = rng_from_seed(8);
        let values: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
        let base = two_means_1d(&values).unwrap().labels;
        let mapped: Vec<f64> = values.iter().map(|v| 9.2 * v + 4.0).collect();
        assert_eq!(two_means_1d(&mapped).unwrap().labels, base);
    }

    #[test]
    fn metrics_counts() {
        let g = DMatrix::from_row_slice(3, 3, &[1u8, 1, 0, 1, 1, 1, 0, 1, 1]);
        let m = edge_metrics(&g, &g).unwrap();
        assert_eq!((m.false_detections, m.misses, m.error_rate), (0, 0, 0.0));

        let mut comp = g.map(|v| 1 - v);
        comp.fill_diagonal(1);
        let m = edge_metrics(&comp, &g).unwrap();
        assert_eq!(m.error_rate, 1.0);
        assert_eq!((m.false_detections, m.misses), (2, 4));

        let mut t = DMatrix::<u8>::identity(20, 20);
        t[(0, 5)] = 1;
        t[(5, 0)] = 1;
        let mut h = t.clone();
        h[(0, 5)] = 0;
        h[(5, 0)] = 0;
        let m = edge_metrics(&h, &t).unwrap();
        assert_eq!(m.misses, 2);
        assert!((m.error_rate - 2.0 / (20.0 * 19.0)).abs() < 1e-15);
        assert!(edge_metrics(&h, &g).is_err());
    }

    #[test]
    fn label_matrix_round_trip() {
        let m = DMatrix::from_row_slice(3, 3, &[9., 1., 2., 3., 9., 4., 5., 6., 9.]);
        assert_eq!(off_diagonal(&m), vec![1., 2., 3., 4., 5., 6.]);
        let g = label_matrix(3, &[1, 0, 0, 1, 1, 0]);
        assert_eq!(g, DMatrix::from_row_slice(3, 3, &[1, 1, 0, 0, 1, 1, 1, 0, 1]));
        assert_eq!(threshold_labels(&[0.1, 0.3], 10.0, 2.0), vec![0, 1]);
    }
}
