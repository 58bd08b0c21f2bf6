//! Welch power spectral density.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::spectrum::{hann, one_sided_density};

pub const DEFAULT_SEGMENT: usize = 256;
pub const DEFAULT_OVERLAP: f64 = 0.5;
/// Band, in Hz, used to summarize spectra.
pub const CLINICAL_BAND: (f64, f64) = (0.5, 40.0);

/// One-sided spectrum in mV^2/Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Psd {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl Psd {
    pub fn resolution(&self) -> f64 {
        if self.freqs.len() > 1 {
            self.freqs[1] - self.freqs[0]
        } else {
            0.0
        }
    }

    /// Integrated power over bins with `lo <= f <= hi`.
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        let df = self.resolution();
        self.freqs
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, p)| p * df)
            .sum()
    }

    pub fn clinical_band_power(&self) -> f64 {
        self.band_power(CLINICAL_BAND.0, CLINICAL_BAND.1)
    }

    /// Frequency of the largest bin, ignoring DC.
    pub fn peak_frequency(&self) -> f64 {
        let k = (1..self.power.len())
            .max_by(|&a, &b| self.power[a].total_cmp(&self.power[b]))
            .unwrap_or(0);
        self.freqs[k]
    }

    /// Elementwise mean of spectra computed with identical settings.
    pub fn average(spectra: &[Psd]) -> Result<Psd> {
        let first = spectra.first().ok_or_else(|| Error::invalid("no spectra to average"))?;
        if spectra.iter().any(|s| s.freqs != first.freqs) {
            return Err(Error::invalid("spectra have different frequency grids"));
        }
        let n = spectra.len() as f64;
        let power = (0..first.power.len())
            .map(|k| spectra.iter().map(|s| s.power[k]).sum::<f64>() / n)
            .collect();
        Ok(Psd {
            freqs: first.freqs.clone(),
            power,
        })
    }
}

/// Averaged periodogram of mean-removed, Hann-windowed segments of
/// `segment_len` samples overlapping by `overlap`.
pub fn psd_welch(trace: &[f64], grid: TimeGrid, segment_len: usize, overlap: f64) -> Result<Psd> {
    let n = trace.len();
    if segment_len < 2 || segment_len > n {
        return Err(Error::invalid(format!(
            "segment length {segment_len} must lie in [2, {n}]"
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::invalid(format!("overlap {overlap} must lie in [0, 1)")));
    }
    let rate = grid.sampling_rate();
    let step = (segment_len - (overlap * segment_len as f64).round() as usize).max(1);
    let window = hann(segment_len);
    let mut power = vec![0.0; segment_len / 2 + 1];
    let mut count = 0usize;
    let mut start = 0;
    while start + segment_len <= n {
        let seg = &trace[start..start + segment_len];
        let mean = seg.iter().sum::<f64>() / segment_len as f64;
        let centered: Vec<f64> = seg.iter().map(|v| v - mean).collect();
        for (acc, p) in power.iter_mut().zip(one_sided_density(&centered, &window, rate)) {
            *acc += p;
        }
        count += 1;
        start += step;
    }
    for p in &mut power {
        *p /= count as f64;
    }
    let freqs = (0..power.len()).map(|k| k as f64 * rate / segment_len as f64).collect();
    Ok(Psd { freqs, power })
}
