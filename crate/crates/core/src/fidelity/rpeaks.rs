//! Threshold-and-refractory R-peak detector.

use std::collections::VecDeque;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::grid::TimeGrid;

/// Peaks must exceed this fraction of the rolling maximum.
pub const THRESHOLD_FRACTION: f64 = 0.6;
/// Minimum spacing between accepted peaks, seconds.
pub const REFRACTORY: f64 = 0.3;
/// Total span of the rolling-maximum window, seconds.
const ROLLING_WINDOW: f64 = 2.0;

fn rolling_max(x: &[f64], half: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..n {
        let hi = (i + half).min(n - 1);
        while next <= hi {
            while dq.back().is_some_and(|&b| x[b] <= x[next]) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        while dq.front().is_some_and(|&f| f + half < i) {
            dq.pop_front();
        }
        out.push(x[*dq.front().expect("window is never empty")]);
    }
    out
}

/// Local maxima above `0.6 x` the maximum within +-1 s, at least 0.3 s apart.
/// Within a refractory period the larger peak wins.
pub fn detect_r_peaks(trace: &[f64], grid: TimeGrid) -> Vec<usize> {
    let n = trace.len();
    if n < 3 {
        return Vec::new();
    }
    let half = ((ROLLING_WINDOW / 2.0) * grid.sampling_rate()).round() as usize;
    let refractory = (REFRACTORY * grid.sampling_rate()).round() as usize;
    let local_max = rolling_max(trace, half);
    let mut peaks: Vec<usize> = Vec::new();
    for i in 1..n - 1 {
        let x = trace[i];
        let is_candidate = x > 0.0
            && x > THRESHOLD_FRACTION * local_max[i]
            && x >= trace[i - 1]
            && x > trace[i + 1];
        if !is_candidate {
            continue;
        }
        match peaks.last_mut() {
            Some(last) if i - *last < refractory => {
                if x > trace[*last] {
                    *last = i;
                }
            }
            _ => peaks.push(i),
        }
    }
    peaks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PeakMatch {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl PeakMatch {
    pub fn recall(&self) -> f64 {
        let total = self.true_positives + self.false_negatives;
        if total == 0 {
            1.0
        } else {
            self.true_positives as f64 / total as f64
        }
    }

    pub fn precision(&self) -> f64 {
        let total = self.true_positives + self.false_positives;
        if total == 0 {
            1.0
        } else {
            self.true_positives as f64 / total as f64
        }
    }
}

impl std::ops::AddAssign for PeakMatch {
    fn add_assign(&mut self, o: Self) {
        self.true_positives += o.true_positives;
        self.false_positives += o.false_positives;
        self.false_negatives += o.false_negatives;
    }
}

/// One-to-one matching of sorted detections to sorted reference peaks within
/// `tolerance` samples. Reference peaks outside `scored` are ignored, as are
/// detections farther than `tolerance` outside it.
pub fn match_peaks(detected: &[usize], truth: &[usize], tolerance: usize, scored: Range<usize>) -> PeakMatch {
    let truth: Vec<usize> = truth.iter().copied().filter(|t| scored.contains(t)).collect();
    let lo = scored.start.saturating_sub(tolerance);
    let hi = scored.end + tolerance;
    let detected: Vec<usize> = detected.iter().copied().filter(|d| (lo..hi).contains(d)).collect();
    let mut used = vec![false; detected.len()];
    let mut tp = 0;
    let mut start = 0;
    for &t in &truth {
        while start < detected.len() && detected[start] + tolerance < t {
            start += 1;
        }
        let best = (start..detected.len())
            .take_while(|&k| detected[k] <= t + tolerance)
            .filter(|&k| !used[k])
            .min_by_key(|&k| detected[k].abs_diff(t));
        if let Some(k) = best {
            used[k] = true;
            tp += 1;
        }
    }
    PeakMatch {
        true_positives: tp,
        false_positives: detected.len() - tp,
        false_negatives: truth.len() - tp,
    }
}
