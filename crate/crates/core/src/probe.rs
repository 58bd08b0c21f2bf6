//! Linear probe for MI separability: waveform features, logistic regression,
//! AUROC and bootstrap intervals.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::basic_features;
use crate::record::{Label, Lead, MultiLeadRecord};
use crate::rng::SeededRng;

pub const FEATURES_PER_LEAD: usize = 5;
pub const N_FEATURES: usize = FEATURES_PER_LEAD * 12;
pub const DEFAULT_LR: f64 = 0.1;
pub const DEFAULT_EPOCHS: usize = 500;
pub const DEFAULT_BOOTSTRAP: usize = 1000;
pub const DEFAULT_LEVEL: f64 = 0.95;

const FEATURE_KINDS: [&str; FEATURES_PER_LEAD] = ["r_amp", "st_level", "qrs_width", "t_amp", "sd"];

/// Column names, lead-major: `I_r_amp, I_st_level, ..., V6_sd`.
pub fn feature_names() -> Vec<String> {
    Lead::ALL
        .iter()
        .flat_map(|l| FEATURE_KINDS.iter().map(move |k| format!("{l}_{k}")))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: Option<Label>,
}

/// Five features per lead; beat-locked features are 0 when no R peak is found.
pub fn extract_features(rec: &MultiLeadRecord) -> FeatureVector {
    let feats = basic_features(rec);
    let mut values = Vec::with_capacity(N_FEATURES);
    for l in &feats.leads {
        let r_amp = if l.r_amplitudes.is_empty() {
            0.0
        } else {
            l.r_amplitudes.iter().sum::<f64>() / l.r_amplitudes.len() as f64
        };
        values.extend([r_amp, l.st_level, l.qrs_width, l.t_amplitude, l.sd]);
    }
    FeatureVector {
        values,
        label: rec.label,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Standardization fitted on the training set.
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    pub iterations: usize,
    pub final_loss: f64,
    /// Training loss after initialization and after every epoch.
    pub loss_history: Vec<f64>,
}

impl ProbeModel {
    /// Logit of the positive class.
    pub fn score(&self, x: &[f64]) -> f64 {
        let z: f64 = x
            .iter()
            .zip(&self.feature_mean)
            .zip(&self.feature_scale)
            .map(|((v, m), s)| (v - m) / s)
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .sum();
        z + self.bias
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.score(x))
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn loss(x: &[Vec<f64>], y: &[bool], w: &[f64], b: f64) -> f64 {
    let total: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let z = row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b;
            if yi {
                softplus(-z)
            } else {
                softplus(z)
            }
        })
        .sum();
    total / x.len() as f64
}

fn gradient(x: &[Vec<f64>], y: &[bool], w: &[f64], b: f64) -> (Vec<f64>, f64) {
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (row, &yi) in x.iter().zip(y) {
        let z = row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b;
        let r = sigmoid(z) - if yi { 1.0 } else { 0.0 };
        for (g, a) in gw.iter_mut().zip(row) {
            *g += r * a;
        }
        gb += r;
    }
    let n = x.len() as f64;
    gw.iter_mut().for_each(|g| *g /= n);
    (gw, gb / n)
}

/// Full-batch gradient descent on z-scored features. A step that would raise
/// the loss is retried at half the rate, so the loss history never increases.
pub fn train_probe(
    features: &[Vec<f64>],
    labels: &[bool],
    lr: f64,
    epochs: usize,
    rng: &mut SeededRng,
) -> Result<ProbeModel> {
    if features.len() != labels.len() {
        return Err(Error::invalid("features and labels differ in length"));
    }
    if !labels.contains(&true) || !labels.contains(&false) {
        return Err(Error::invalid("training set needs both classes"));
    }
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::invalid("learning rate must be positive"));
    }
    let dim = features[0].len();
    if features.iter().any(|r| r.len() != dim || r.iter().any(|v| !v.is_finite())) {
        return Err(Error::invalid("feature rows must share a length and be finite"));
    }

    let n = features.len() as f64;
    let mean: Vec<f64> = (0..dim).map(|j| features.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let scale: Vec<f64> = (0..dim)
        .map(|j| {
            let var = features.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let x: Vec<Vec<f64>> = features
        .iter()
        .map(|r| r.iter().zip(&mean).zip(&scale).map(|((v, m), s)| (v - m) / s).collect())
        .collect();

    let mut w: Vec<f64> = (0..dim)
        .map(|_| 0.01 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut b = 0.0;
    let mut current = loss(&x, labels, &w, b);
    let mut history = vec![current];
    let mut step = lr;
    let mut iterations = 0;
    for _ in 0..epochs {
        let (gw, gb) = gradient(&x, labels, &w, b);
        let mut accepted = false;
        for _ in 0..40 {
            let w_new: Vec<f64> = w.iter().zip(&gw).map(|(wi, g)| wi - step * g).collect();
            let b_new = b - step * gb;
            let l = loss(&x, labels, &w_new, b_new);
            if l <= current {
                w = w_new;
                b = b_new;
                current = l;
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if !accepted {
            break;
        }
        iterations += 1;
        history.push(current);
    }
    Ok(ProbeModel {
        weights: w,
        bias: b,
        feature_mean: mean,
        feature_scale: scale,
        iterations,
        final_loss: current,
        loss_history: history,
    })
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::invalid("scores and labels differ in length"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("scores contain NaN"));
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as u128;
    let n_neg = labels.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::invalid("AUROC needs both classes"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the Mann-Whitney U, kept integral
    let mut twice_u: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u128, 0u128);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        twice_u += 2 * pos * neg_below + pos * neg;
        neg_below += neg;
        i = j;
    }
    Ok(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucInterval {
    pub low: f64,
    pub high: f64,
    pub point: f64,
    pub n_resamples: usize,
    pub level: f64,
}

impl AucInterval {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains_point(&self) -> bool {
        self.low <= self.point && self.point <= self.high
    }
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile interval over stratified resamples: positives and negatives are
/// each redrawn with replacement at their own counts. Resample `i` uses
/// `rng.child(i)`, so the result is independent of thread count.
pub fn bootstrap_auc_ci(
    scores: &[f64],
    labels: &[bool],
    n_resamples: usize,
    level: f64,
    rng: &SeededRng,
) -> Result<AucInterval> {
    let point = auroc(scores, labels)?;
    if n_resamples == 0 {
        return Err(Error::invalid("n_resamples must be positive"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("level must lie in (0, 1)"));
    }
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| !l).map(|(s, _)| *s).collect();
    let mut aucs: Vec<f64> = (0..n_resamples as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.child(i);
            let mut s = Vec::with_capacity(scores.len());
            let mut l = Vec::with_capacity(scores.len());
            for _ in 0..pos.len() {
                s.push(pos[r.random_range(0..pos.len())]);
                l.push(true);
            }
            for _ in 0..neg.len() {
                s.push(neg[r.random_range(0..neg.len())]);
                l.push(false);
            }
            auroc(&s, &l).expect("stratified resample has both classes")
        })
        .collect();
    aucs.sort_unstable_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok(AucInterval {
        low: quantile_sorted(&aucs, alpha),
        high: quantile_sorted(&aucs, 1.0 - alpha),
        point,
        n_resamples,
        level,
    })
}

/// Outcome of training on one record set and scoring another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub n_train: usize,
    pub n_test: usize,
    pub iterations: usize,
    pub final_loss: f64,
    pub train_auc: f64,
    pub test_auc: f64,
    pub ci: AucInterval,
    pub seed: u64,
}

fn labelled(records: &[MultiLeadRecord]) -> Result<(Vec<Vec<f64>>, Vec<bool>)> {
    let feats: Vec<FeatureVector> = records.par_iter().map(extract_features).collect();
    let mut x = Vec::with_capacity(feats.len());
    let mut y = Vec::with_capacity(feats.len());
    for (k, f) in feats.into_iter().enumerate() {
        let label = f
            .label
            .ok_or_else(|| Error::invalid(format!("record {k} has no label")))?;
        x.push(f.values);
        y.push(label == Label::Mi);
    }
    Ok((x, y))
}

/// Trains on `train`, reports AUROC on `test` with a bootstrap interval.
/// MI is the positive class.
pub fn run_probe(
    train: &[MultiLeadRecord],
    test: &[MultiLeadRecord],
    n_resamples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    let (x_train, y_train) = labelled(train)?;
    let (x_test, y_test) = labelled(test)?;
    let root = SeededRng::new(seed);
    let model = train_probe(&x_train, &y_train, DEFAULT_LR, DEFAULT_EPOCHS, &mut root.child(0))?;
    let train_scores: Vec<f64> = x_train.iter().map(|x| model.score(x)).collect();
    let test_scores: Vec<f64> = x_test.iter().map(|x| model.score(x)).collect();
    let ci = bootstrap_auc_ci(&test_scores, &y_test, n_resamples, DEFAULT_LEVEL, &root.child(1))?;
    Ok(ProbeReport {
        n_train: train.len(),
        n_test: test.len(),
        iterations: model.iterations,
        final_loss: model.final_loss,
        train_auc: auroc(&train_scores, &y_train)?,
        test_auc: ci.point,
        ci,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auroc_examples() {
        let y = [false, false, true, true];
        assert_eq!(auroc(&[0.1, 0.4, 0.35, 0.8], &y).unwrap(), 0.75);
        assert_eq!(auroc(&[1.0, 2.0, 3.0, 4.0], &y).unwrap(), 1.0);
        assert_eq!(auroc(&[4.0, 3.0, 2.0, 1.0], &y).unwrap(), 0.0);
        assert_eq!(auroc(&[1.0; 4], &y).unwrap(), 0.5);
        assert!(auroc(&[1.0, 2.0], &[true, true]).is_err());
    }

    #[test]
    fn separable_pair_is_learned() {
        let x = vec![vec![-1.0, 0.0], vec![1.0, 0.0]];
        let y = [false, true];
        let m = train_probe(&x, &y, 0.1, 200, &mut SeededRng::new(0)).unwrap();
        assert!(m.score(&x[0]) < 0.0 && m.score(&x[1]) > 0.0);
        assert!(m.loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn training_is_deterministic() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect();
        let y: Vec<bool> = (0..20).map(|i| i % 3 == 0).collect();
        let a = train_probe(&x, &y, 0.1, 50, &mut SeededRng::new(3)).unwrap();
        let b = train_probe(&x, &y, 0.1, 50, &mut SeededRng::new(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(train_probe(&x, &[true, true], 0.1, 10, &mut SeededRng::new(0)).is_err());
    }

    #[test]
    fn perfect_separation_interval() {
        let s: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<bool> = (0..20).map(|i| i >= 10).collect();
        let ci = bootstrap_auc_ci(&s, &y, 200, 0.95, &SeededRng::new(1)).unwrap();
        assert_eq!((ci.low, ci.high, ci.point), (1.0, 1.0, 1.0));
    }

    #[test]
    fn type7_quantile() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
    }

    #[test]
    fn feature_layout() {
        let names = feature_names();
        assert_eq!(names.len(), N_FEATURES);
        assert_eq!(names[0], "I_r_amp");
        assert_eq!(names[59], "V6_sd");
    }
}
