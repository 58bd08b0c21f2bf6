//! Artifact layers and final calibration.
//!
//! Every stage is a pure function of its input record and RNG, and reduces to
//! a bit-exact copy when its amplitude is zero.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::mi::{draw_span, Span};
use crate::record::{Flag, Label, MultiLeadRecord};
use crate::spectrum::{bin_frequency, fft, ifft_real};

/// Motion bursts are confined to this many seconds either side of an R peak.
pub const MOTION_HALF_WIDTH: f64 = 0.1;
const MOTION_DECAY: f64 = 0.04;
const MOTION_FREQ: Span = (5.0, 15.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub wander_amp: f64,
    pub wander_freq: f64,
    pub mains_freq: f64,
    pub mains_amp: f64,
    pub emg_sd: f64,
    /// EMG sd multiplier for MI records.
    pub emg_mi_multiplier: f64,
    /// Pass band of the EMG noise, Hz.
    pub emg_band: Span,
    pub motion_burst_amp: f64,
    pub motion_burst_prob_per_beat: f64,
    pub fade_duration: f64,
    /// Range of the random fade exponent used for MI records.
    pub fade_mi_exponent: Span,
    pub calib_scale_range: Span,
    pub normalize: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            wander_amp: 0.1,
            wander_freq: 0.2,
            mains_freq: 50.0,
            mains_amp: 0.02,
            emg_sd: 0.02,
            emg_mi_multiplier: 1.5,
            emg_band: (5.0, 45.0),
            motion_burst_amp: 0.15,
            motion_burst_prob_per_beat: 0.1,
            fade_duration: 0.5,
            fade_mi_exponent: (1.5, 3.0),
            calib_scale_range: (0.9, 1.1),
            normalize: true,
        }
    }
}

impl NoiseConfig {
    /// No artifacts, no fade, no normalization, unit calibration.
    pub fn silent() -> Self {
        Self {
            wander_amp: 0.0,
            mains_amp: 0.0,
            emg_sd: 0.0,
            motion_burst_amp: 0.0,
            motion_burst_prob_per_beat: 0.0,
            fade_duration: 0.0,
            calib_scale_range: (1.0, 1.0),
            normalize: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wander_amp", self.wander_amp),
            ("wander_freq", self.wander_freq),
            ("mains_amp", self.mains_amp),
            ("emg_sd", self.emg_sd),
            ("emg_mi_multiplier", self.emg_mi_multiplier),
            ("motion_burst_amp", self.motion_burst_amp),
            ("fade_duration", self.fade_duration),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.mains_freq != 50.0 && self.mains_freq != 60.0 {
            return Err(Error::invalid(format!(
                "mains_freq must be 50 or 60 Hz, got {}",
                self.mains_freq
            )));
        }
        if !(0.0..=1.0).contains(&self.motion_burst_prob_per_beat) {
            return Err(Error::invalid("motion_burst_prob_per_beat must lie in [0, 1]"));
        }
        let (lo, hi) = self.emg_band;
        if !(lo >= 0.0 && lo < hi) {
            return Err(Error::invalid("emg_band must be an increasing pair"));
        }
        let (a, b) = self.fade_mi_exponent;
        if !(a > 0.0 && a <= b && b.is_finite()) {
            return Err(Error::invalid("fade_mi_exponent must be a positive range"));
        }
        let (a, b) = self.calib_scale_range;
        if !(a > 0.0 && a <= b && b.is_finite()) {
            return Err(Error::invalid("calib_scale_range must be a positive range"));
        }
        Ok(())
    }

    /// Also checks that the fade fits inside the record.
    pub fn validate_for(&self, grid: &TimeGrid) -> Result<()> {
        self.validate()?;
        if self.fade_duration >= grid.duration() {
            return Err(Error::invalid(format!(
                "fade_duration {} must be shorter than the record ({} s)",
                self.fade_duration,
                grid.duration()
            )));
        }
        Ok(())
    }
}

/// `wander_amp * sin(2 pi wander_freq t + phi)` with an independent phase per lead.
pub fn add_baseline_wander<R: Rng + ?Sized>(rec: &MultiLeadRecord, cfg: &NoiseConfig, rng: &mut R) -> MultiLeadRecord {
    let mut out = rec.clone();
    if cfg.wander_amp == 0.0 {
        return out;
    }
    let grid = rec.grid();
    for (_, trace) in out.leads_mut() {
        let phase = draw_span(rng, (0.0, 2.0 * PI));
        for (k, x) in trace.iter_mut().enumerate() {
            *x += cfg.wander_amp * (2.0 * PI * cfg.wander_freq * grid.time(k) + phase).sin();
        }
    }
    out
}

/// Powerline sinusoid with one random phase shared by all leads.
///
/// At a 100 Hz sampling rate 50 Hz lands on the Nyquist frequency, where the
/// sampled sinusoid is `sin(phi) * (-1)^k` and its amplitude depends on the
/// phase; 60 Hz aliases to 40 Hz.
pub fn add_mains<R: Rng + ?Sized>(rec: &MultiLeadRecord, cfg: &NoiseConfig, rng: &mut R) -> MultiLeadRecord {
    let mut out = rec.clone();
    if cfg.mains_amp == 0.0 {
        return out;
    }
    let grid = rec.grid();
    let phase = draw_span(rng, (0.0, 2.0 * PI));
    for (_, trace) in out.leads_mut() {
        for (k, x) in trace.iter_mut().enumerate() {
            *x += cfg.mains_amp * (2.0 * PI * cfg.mains_freq * grid.time(k) + phase).sin();
        }
    }
    out
}

/// Gaussian noise restricted to `band` by zeroing FFT bins, rescaled so its
/// expected sd is `sd`.
fn band_limited_noise<R: Rng + ?Sized>(n: usize, rate: f64, band: Span, sd: f64, rng: &mut R) -> Vec<f64> {
    let white: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut spectrum = fft(&white);
    let mut kept = 0usize;
    for (j, c) in spectrum.iter_mut().enumerate() {
        let f = bin_frequency(j, n, rate);
        if f >= band.0 && f <= band.1 {
            kept += 1;
        } else {
            *c = Default::default();
        }
    }
    if kept == 0 {
        return vec![0.0; n];
    }
    let gain = sd / (kept as f64 / n as f64).sqrt();
    ifft_real(spectrum).into_iter().map(|v| v * gain).collect()
}

pub fn emg_sd_for(label: Option<Label>, cfg: &NoiseConfig) -> f64 {
    match label {
        Some(Label::Mi) => cfg.emg_sd * cfg.emg_mi_multiplier,
        _ => cfg.emg_sd,
    }
}

/// Band-limited muscle noise; sd is scaled by `emg_mi_multiplier` for MI.
pub fn add_emg<R: Rng + ?Sized>(
    rec: &MultiLeadRecord,
    label: Option<Label>,
    cfg: &NoiseConfig,
    rng: &mut R,
) -> MultiLeadRecord {
    let mut out = rec.clone();
    let sd = emg_sd_for(label, cfg);
    if sd == 0.0 {
        return out;
    }
    let grid = rec.grid();
    for (_, trace) in out.leads_mut() {
        let noise = band_limited_noise(trace.len(), grid.sampling_rate(), cfg.emg_band, sd, rng);
        for (x, e) in trace.iter_mut().zip(noise) {
            *x += e;
        }
    }
    out
}

/// Damped oscillations around R peaks of MI records, one independent burst per
/// lead for each selected beat. Each burst stays within
/// [`MOTION_HALF_WIDTH`] of its peak and below `motion_burst_amp` in magnitude.
pub fn add_motion_bursts<R: Rng + ?Sized>(
    rec: &MultiLeadRecord,
    r_peaks: &[usize],
    label: Option<Label>,
    cfg: &NoiseConfig,
    rng: &mut R,
) -> MultiLeadRecord {
    let mut out = rec.clone();
    if label != Some(Label::Mi) || cfg.motion_burst_amp == 0.0 || cfg.motion_burst_prob_per_beat == 0.0 {
        return out;
    }
    let grid = rec.grid();
    let n = grid.n_samples() as isize;
    let offsets = grid.offsets_within(-MOTION_HALF_WIDTH, MOTION_HALF_WIDTH);
    for &r in r_peaks {
        let u: f64 = rng.random();
        if u >= cfg.motion_burst_prob_per_beat {
            continue;
        }
        for (_, trace) in out.leads_mut() {
            let amp = cfg.motion_burst_amp * draw_span(rng, (0.5, 1.0));
            let freq = draw_span(rng, MOTION_FREQ);
            let phase = draw_span(rng, (0.0, 2.0 * PI));
            for k in offsets.clone() {
                let idx = r as isize + k;
                if !(0..n).contains(&idx) {
                    continue;
                }
                let tau = k as f64 / grid.sampling_rate();
                let envelope = (-(tau / MOTION_DECAY).powi(2)).exp();
                trace[idx as usize] += amp * envelope * (2.0 * PI * freq * tau + phase).sin();
            }
        }
    }
    out
}

/// Fade exponent: 2 for Normal records, uniform in `fade_mi_exponent` for MI.
pub fn fade_exponent<R: Rng + ?Sized>(label: Option<Label>, cfg: &NoiseConfig, rng: &mut R) -> f64 {
    match label {
        Some(Label::Mi) => draw_span(rng, cfg.fade_mi_exponent),
        _ => 2.0,
    }
}

/// Multiplies the first `fade_duration` seconds by `(t / fade_duration)^p`.
pub fn apply_fade_in<R: Rng + ?Sized>(
    rec: &MultiLeadRecord,
    label: Option<Label>,
    cfg: &NoiseConfig,
    rng: &mut R,
) -> MultiLeadRecord {
    let exponent = fade_exponent(label, cfg, rng);
    fade_with_exponent(rec, cfg.fade_duration, exponent)
}

pub fn fade_with_exponent(rec: &MultiLeadRecord, fade_duration: f64, exponent: f64) -> MultiLeadRecord {
    let mut out = rec.clone();
    if fade_duration <= 0.0 {
        return out;
    }
    let grid = rec.grid();
    let ramp: Vec<f64> = grid
        .times()
        .take_while(|&t| t < fade_duration)
        .map(|t| (t / fade_duration).powf(exponent))
        .collect();
    for (_, trace) in out.leads_mut() {
        for (x, g) in trace.iter_mut().zip(&ramp) {
            *x *= g;
        }
    }
    out
}

/// Per lead: remove the mean and divide by the peak magnitude (when
/// `normalize`), then multiply by a calibration gain drawn from
/// `calib_scale_range`. Leads with nothing left after mean removal are set
/// to zero and flagged.
pub fn normalize_and_scale<R: Rng + ?Sized>(rec: &MultiLeadRecord, cfg: &NoiseConfig, rng: &mut R) -> MultiLeadRecord {
    let mut out = rec.clone();
    let mut flat = false;
    for (_, trace) in out.leads_mut() {
        let gain = draw_span(rng, cfg.calib_scale_range);
        if cfg.normalize {
            let mean = trace.iter().sum::<f64>() / trace.len() as f64;
            let peak = trace.iter().fold(0.0f64, |a, v| a.max((v - mean).abs()));
            if peak == 0.0 {
                trace.fill(0.0);
                flat = true;
                continue;
            }
            for x in trace.iter_mut() {
                *x = (*x - mean) / peak * gain;
            }
        } else {
            for x in trace.iter_mut() {
                *x *= gain;
            }
        }
    }
    if flat {
        out.provenance.flags.insert(Flag::FlatLead);
    }
    out
}
