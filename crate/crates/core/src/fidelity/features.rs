//! Per-lead waveform summaries.
//!
//! Beat-locked features are measured on every lead at the R peaks detected on
//! lead II, so all twelve leads share one set of beat positions.

use serde::{Deserialize, Serialize};

use super::rpeaks::detect_r_peaks;
use crate::grid::TimeGrid;
use crate::record::{Lead, MultiLeadRecord};

/// Seconds after R over which the ST level is averaged.
pub const ST_WINDOW: (f64, f64) = (0.04, 0.12);
/// Seconds after R searched for the T-wave extremum.
const T_WINDOW: (f64, f64) = (0.15, 0.40);
/// Longest half-width walk when measuring QRS width, seconds.
const QRS_SEARCH: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadFeatures {
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
    pub peak_to_peak: f64,
    pub r_amplitudes: Vec<f64>,
    pub st_level: f64,
    /// Mean full width at half maximum around the R peaks, seconds.
    pub qrs_width: f64,
    /// Mean signed T-wave extremum.
    pub t_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordFeatures {
    pub r_peaks: Vec<usize>,
    pub leads: Vec<LeadFeatures>,
}

impl RecordFeatures {
    pub fn lead(&self, lead: Lead) -> &LeadFeatures {
        &self.leads[lead.index()]
    }
}

fn mean_or_zero(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Mean over beats of the mean of `trace` on `[r + lo, r + hi]`, counting only
/// windows that fit inside the record.
fn windowed_level(trace: &[f64], r_peaks: &[usize], grid: TimeGrid, window: (f64, f64)) -> f64 {
    let offsets = grid.offsets_within(window.0, window.1);
    let n = trace.len() as isize;
    mean_or_zero(r_peaks.iter().filter_map(|&r| {
        let lo = r as isize + offsets.start();
        let hi = r as isize + offsets.end();
        (lo >= 0 && hi < n && lo <= hi).then(|| {
            let seg = &trace[lo as usize..=hi as usize];
            seg.iter().sum::<f64>() / seg.len() as f64
        })
    }))
}

fn t_extremum(trace: &[f64], r_peaks: &[usize], grid: TimeGrid) -> f64 {
    let offsets = grid.offsets_within(T_WINDOW.0, T_WINDOW.1);
    let n = trace.len() as isize;
    mean_or_zero(r_peaks.iter().filter_map(|&r| {
        let lo = r as isize + offsets.start();
        let hi = r as isize + offsets.end();
        (lo >= 0 && hi < n).then(|| {
            trace[lo as usize..=hi as usize]
                .iter()
                .copied()
                .max_by(|a, b| a.abs().total_cmp(&b.abs()))
                .unwrap_or(0.0)
        })
    }))
}

fn half_max_width(trace: &[f64], r: usize, grid: TimeGrid) -> Option<f64> {
    let peak = trace[r];
    if peak == 0.0 {
        return None;
    }
    let sign = peak.signum();
    let half = peak.abs() / 2.0;
    let limit = (QRS_SEARCH * grid.sampling_rate()).round() as usize;
    let level = |k: usize| sign * trace[k];

    let mut left = r as f64 - limit as f64;
    for step in 1..=limit.min(r) {
        let k = r - step;
        if level(k) < half {
            let (a, b) = (level(k), level(k + 1));
            left = k as f64 + (half - a) / (b - a);
            break;
        }
    }
    let mut right = r as f64 + limit as f64;
    for step in 1..=limit.min(trace.len() - 1 - r) {
        let k = r + step;
        if level(k) < half {
            let (a, b) = (level(k - 1), level(k));
            right = (k - 1) as f64 + (a - half) / (a - b);
            break;
        }
    }
    Some((right - left) / grid.sampling_rate())
}

fn lead_features(trace: &[f64], r_peaks: &[usize], grid: TimeGrid) -> LeadFeatures {
    let n = trace.len() as f64;
    let mean = trace.iter().sum::<f64>() / n;
    let sd = (trace.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let max = trace.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = trace.iter().cloned().fold(f64::INFINITY, f64::min);
    LeadFeatures {
        mean,
        sd,
        peak_to_peak: max - min,
        r_amplitudes: r_peaks.iter().map(|&r| trace[r]).collect(),
        st_level: windowed_level(trace, r_peaks, grid, ST_WINDOW),
        qrs_width: mean_or_zero(r_peaks.iter().filter_map(|&r| half_max_width(trace, r, grid))),
        t_amplitude: t_extremum(trace, r_peaks, grid),
    }
}

/// Features for every lead, beat-locked to R peaks detected on lead II.
pub fn basic_features(rec: &MultiLeadRecord) -> RecordFeatures {
    let grid = rec.grid();
    let r_peaks = detect_r_peaks(rec.lead(Lead::II), grid);
    let leads = rec.leads().map(|(_, trace)| lead_features(trace, &r_peaks, grid)).collect();
    RecordFeatures { r_peaks, leads }
}
