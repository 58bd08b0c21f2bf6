use crate::error::{Error, Result};

fn sorted_copy(x: &[f64]) -> Result<Vec<f64>> {
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("KS samples must not contain NaN"));
    }
    let mut v = x.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample Kolmogorov-Smirnov statistic `sup_t |F_x(t) - F_y(t)|`.
pub fn ks_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::invalid("KS distance needs two non-empty samples"));
    }
    Ok(ks_distance_sorted(&sorted_copy(x)?, &sorted_copy(y)?))
}

/// [`ks_distance`] on inputs already sorted ascending.
///
/// Steps through the merged order, consuming all copies of each value
/// before comparing the two ECDFs.
pub fn ks_distance_sorted(xs: &[f64], ys: &[f64]) -> f64 {
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let t = xs[i].min(ys[j]);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Distinct sorted values with the ECDF evaluated at each.
pub fn ecdf_table(x: &[f64]) -> Result<Vec<(f64, f64)>> {
    let v = sorted_copy(x)?;
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (k, &value) in v.iter().enumerate() {
        let f = (k + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == value => last.1 = f,
            _ => out.push((value, f)),
        }
    }
    Ok(out)
}
