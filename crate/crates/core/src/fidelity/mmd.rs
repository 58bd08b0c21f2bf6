//! Squared maximum mean discrepancy with a Gaussian kernel.
//!
//! Distances are accumulated row by row in a fixed order, so results do not
//! depend on how many threads rayon uses.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::record::MultiLeadRecord;

/// Concatenates the 12 leads of a record into one vector.
pub fn flatten(rec: &MultiLeadRecord) -> Vec<f64> {
    rec.samples().to_vec()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_dims(sets: &[&[Vec<f64>]]) -> Result<usize> {
    let mut dim = None;
    for v in sets.iter().flat_map(|s| s.iter()) {
        match dim {
            None => dim = Some(v.len()),
            Some(d) if d != v.len() => {
                return Err(Error::invalid(format!(
                    "vectors differ in length ({d} vs {})",
                    v.len()
                )))
            }
            _ => {}
        }
    }
    dim.ok_or_else(|| Error::invalid("no vectors"))
}

/// Symmetric matrix of squared Euclidean distances, row-major.
pub fn pairwise_sq_distances(x: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| if j > i { sq_dist(&x[i], &x[j]) } else { 0.0 }).collect())
        .collect();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            d[i * n + j] = rows[i][j];
            d[j * n + i] = rows[i][j];
        }
    }
    d
}

fn median_of_upper(d: &[f64], n: usize) -> f64 {
    let mut dists: Vec<f64> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| d[i * n + j].sqrt())
        .collect();
    dists.sort_by(f64::total_cmp);
    let m = dists.len();
    if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    }
}

/// Median of all pairwise Euclidean distances.
pub fn median_bandwidth(x: &[Vec<f64>]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: x.len(),
        });
    }
    check_dims(&[x])?;
    let bw = median_of_upper(&pairwise_sq_distances(x), x.len());
    if bw <= 0.0 {
        return Err(Error::Degenerate("median pairwise distance is zero".into()));
    }
    Ok(bw)
}

/// Total order on samples, used to put the two arguments of MMD in a fixed
/// order so the result is exactly symmetric.
fn canonical_cmp(x: &[Vec<f64>], y: &[Vec<f64>]) -> Ordering {
    x.len().cmp(&y.len()).then_with(|| {
        x.iter()
            .zip(y)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(p, q)| p.total_cmp(q))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

fn canonical<'a>(x: &'a [Vec<f64>], y: &'a [Vec<f64>]) -> (&'a [Vec<f64>], &'a [Vec<f64>]) {
    if canonical_cmp(x, y) == Ordering::Greater {
        (y, x)
    } else {
        (x, y)
    }
}

fn mean_kernel(a: &[Vec<f64>], b: &[Vec<f64>], gamma: f64) -> f64 {
    let rows: Vec<f64> = a
        .par_iter()
        .map(|u| b.iter().map(|v| (-gamma * sq_dist(u, v)).exp()).sum::<f64>())
        .collect();
    rows.iter().sum::<f64>() / (a.len() * b.len()) as f64
}

/// Biased (V-statistic) estimate
/// `mean k(x, x') + mean k(y, y') - 2 mean k(x, y)` with
/// `k(u, v) = exp(-|u - v|^2 / (2 bandwidth^2))`.
pub fn mmd2(x: &[Vec<f64>], y: &[Vec<f64>], bandwidth: f64) -> Result<f64> {
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if x.is_empty() || y.is_empty() {
        return Err(Error::invalid("both samples must be non-empty"));
    }
    check_dims(&[x, y])?;
    let (x, y) = canonical(x, y);
    let gamma = 1.0 / (2.0 * bandwidth * bandwidth);
    let kxx = mean_kernel(x, x, gamma);
    let kyy = mean_kernel(y, y, gamma);
    let kxy = mean_kernel(x, y, gamma);
    Ok(kxx + kyy - 2.0 * kxy)
}

fn block_mean(d: &[f64], n: usize, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>, gamma: f64) -> f64 {
    let count = rows.len() * cols.len();
    let total: f64 = rows
        .map(|i| cols.clone().map(|j| (-gamma * d[i * n + j]).exp()).sum::<f64>())
        .sum();
    total / count as f64
}

/// MMD^2 with the bandwidth set by the median heuristic on the pooled sample.
/// Returns `(mmd2, bandwidth)`.
pub fn mmd2_with_median_bandwidth(x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<(f64, f64)> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::invalid("both samples must be non-empty"));
    }
    check_dims(&[x, y])?;
    let (x, y) = canonical(x, y);
    let pooled: Vec<Vec<f64>> = x.iter().chain(y).cloned().collect();
    let n = pooled.len();
    let d = pairwise_sq_distances(&pooled);
    let bw = median_of_upper(&d, n);
    if bw <= 0.0 {
        return Err(Error::Degenerate("median pairwise distance is zero".into()));
    }
    let gamma = 1.0 / (2.0 * bw * bw);
    let nx = x.len();
    let kxx = block_mean(&d, n, 0..nx, 0..nx, gamma);
    let kyy = block_mean(&d, n, nx..n, nx..n, gamma);
    let kxy = block_mean(&d, n, 0..nx, nx..n, gamma);
    Ok((kxx + kyy - 2.0 * kxy, bw))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalars(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn bandwidth_of_one_pair() {
        let x = vec![vec![0.0, 0.0], vec![3.0, 4.0]];
        assert_eq!(median_bandwidth(&x).unwrap(), 5.0);
    }

    #[test]
    fn bandwidth_enumerates_pairs() {
        // pairs: |0-1| = 1, |0-3| = 3, |1-3| = 2
        assert_eq!(median_bandwidth(&scalars(&[0.0, 1.0, 3.0])).unwrap(), 2.0);
    }

    #[test]
    fn identical_vectors_have_no_bandwidth() {
        assert!(matches!(
            median_bandwidth(&scalars(&[1.0, 1.0, 1.0])),
            Err(Error::Degenerate(_))
        ));
        assert!(median_bandwidth(&scalars(&[1.0])).is_err());
    }

    #[test]
    fn mmd_of_two_points() {
        let v = mmd2(&scalars(&[0.0]), &scalars(&[1.0]), 1.0).unwrap();
        assert!((v - (2.0 - 2.0 * (-0.5f64).exp())).abs() < 1e-12);
        assert!((v - 0.78694).abs() < 1e-5);
    }

    #[test]
    fn mmd_of_identical_samples_is_zero() {
        let x = scalars(&[0.3, -1.2, 2.5, 0.0]);
        assert!(mmd2(&x, &x, 0.7).unwrap().abs() < 1e-12);
    }

    #[test]
    fn mmd_is_symmetric() {
        let x = scalars(&[0.3, -1.2, 2.5]);
        let y = scalars(&[0.1, 0.9, 1.7, -0.4]);
        assert_eq!(mmd2(&x, &y, 1.3).unwrap(), mmd2(&y, &x, 1.3).unwrap());
    }

    #[test]
    fn median_route_agrees_with_explicit_bandwidth() {
        let x = scalars(&[0.3, -1.2, 2.5, 0.8]);
        let y = scalars(&[0.1, 0.9, 1.7, -0.4, 3.0]);
        let (v, bw) = mmd2_with_median_bandwidth(&x, &y).unwrap();
        let pooled: Vec<Vec<f64>> = x.iter().chain(&y).cloned().collect();
        assert_eq!(bw, median_bandwidth(&pooled).unwrap());
        assert!((v - mmd2(&x, &y, bw).unwrap()).abs() < 1e-12);
        assert_eq!(mmd2_with_median_bandwidth(&y, &x).unwrap(), (v, bw));
    }

    #[test]
    fn mmd_rejects_bad_bandwidth_and_shapes() {
        let x = scalars(&[0.0]);
        assert!(mmd2(&x, &x, 0.0).is_err());
        assert!(mmd2(&x, &x, f64::NAN).is_err());
        assert!(mmd2(&x, &[], 1.0).is_err());
        assert!(mmd2(&x, &[vec![1.0, 2.0]], 1.0).is_err());
    }
}
