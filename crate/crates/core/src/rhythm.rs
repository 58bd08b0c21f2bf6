//! RR-interval generation with heart-rate variability.
//!
//! Intervals are drawn from a log-normal, clamped to a physiological range and
//! then spectrally re-weighted so the tachogram's LF/HF band-power ratio lands
//! near a target. Spectral analysis always works on the tachogram resampled at
//! [`TACHOGRAM_RATE`] Hz with a natural cubic spline.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{bin_frequency, fft, hann, ifft_real};

pub const TACHOGRAM_RATE: f64 = 4.0;
/// Fewest intervals the spectral routines accept.
pub const MIN_SPECTRAL_INTERVALS: usize = 32;
/// Fewest intervals drawn per series, so shaping has spectral resolution even
/// for short records.
pub const MIN_SERIES_INTERVALS: usize = 64;
const MAX_SHAPE_ITERATIONS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RhythmConfig {
    pub log_mean: f64,
    pub log_sd: f64,
    pub target_lf_hf_ratio: f64,
    pub lf_band: (f64, f64),
    pub hf_band: (f64, f64),
    pub min_rr: f64,
    pub max_rr: f64,
}

impl Default for RhythmConfig {
    /// 70 bpm median, about 43 ms beat-to-beat spread.
    fn default() -> Self {
        Self {
            log_mean: 0.857f64.ln(),
            log_sd: 0.05,
            target_lf_hf_ratio: 1.0,
            lf_band: (0.04, 0.15),
            hf_band: (0.15, 0.40),
            min_rr: 0.4,
            max_rr: 2.0,
        }
    }
}

impl RhythmConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.log_mean.is_finite() {
            return Err(Error::invalid("log_mean must be finite"));
        }
        if !(self.log_sd.is_finite() && self.log_sd >= 0.0) {
            return Err(Error::invalid(format!(
                "log_sd must be non-negative, got {}",
                self.log_sd
            )));
        }
        if !(self.target_lf_hf_ratio.is_finite() && self.target_lf_hf_ratio > 0.0) {
            return Err(Error::invalid("target LF/HF ratio must be positive"));
        }
        if !(self.min_rr > 0.0 && self.min_rr < self.max_rr && self.max_rr.is_finite()) {
            return Err(Error::invalid(format!(
                "need 0 < min_rr < max_rr, got {} and {}",
                self.min_rr, self.max_rr
            )));
        }
        let (lf, hf) = (self.lf_band, self.hf_band);
        let band_ok = |b: (f64, f64)| b.0 > 0.0 && b.0 < b.1 && b.1.is_finite();
        if !(band_ok(lf) && band_ok(hf)) {
            return Err(Error::invalid("frequency bands must be positive and ordered"));
        }
        if lf.1 > hf.0 && hf.1 > lf.0 {
            return Err(Error::invalid("LF and HF bands overlap"));
        }
        Ok(())
    }
}

/// What [`lf_hf_shape`] did to a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeOutcome {
    /// Never passed through shaping.
    Raw,
    /// Ratio was already inside the tolerance band.
    Unchanged,
    Shaped { iterations: usize },
    /// No usable LF or HF content; returned as is.
    Degenerate,
    /// Iteration cap hit; best effort returned.
    NotConverged,
}

impl ShapeOutcome {
    pub fn is_warning(self) -> bool {
        matches!(self, ShapeOutcome::Degenerate | ShapeOutcome::NotConverged)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhythmSeries {
    rr: Vec<f64>,
    onsets: Vec<f64>,
    pub shaping: ShapeOutcome,
}

impl RhythmSeries {
    /// `onsets[k]` is the sum of the first `k` intervals, so the first beat starts at 0.
    pub fn from_rr(rr: Vec<f64>) -> Result<Self> {
        if let Some(bad) = rr.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::invalid(format!("RR intervals must be positive, got {bad}")));
        }
        let onsets = rr
            .iter()
            .scan(0.0, |acc, &v| {
                let start = *acc;
                *acc += v;
                Some(start)
            })
            .collect();
        Ok(Self {
            rr,
            onsets,
            shaping: ShapeOutcome::Raw,
        })
    }

    pub fn rr(&self) -> &[f64] {
        &self.rr
    }

    pub fn onsets(&self) -> &[f64] {
        &self.onsets
    }

    pub fn len(&self) -> usize {
        self.rr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rr.is_empty()
    }

    pub fn mean_rr(&self) -> f64 {
        mean(&self.rr)
    }

    /// Beat onsets falling strictly before `duration`.
    pub fn onsets_before(&self, duration: f64) -> impl Iterator<Item = f64> + '_ {
        self.onsets.iter().copied().take_while(move |&t| t < duration)
    }

    /// Times at which each interval ends (the tachogram abscissa).
    fn beat_times(&self) -> Vec<f64> {
        self.onsets.iter().zip(&self.rr).map(|(o, r)| o + r).collect()
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Raw clamped log-normal intervals, before any spectral shaping.
pub fn draw_rr_intervals<R: Rng + ?Sized>(cfg: &RhythmConfig, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    cfg.validate()?;
    Ok((0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            (cfg.log_mean + cfg.log_sd * z).exp().clamp(cfg.min_rr, cfg.max_rr)
        })
        .collect())
}

/// RR series long enough to cover `duration` seconds, shaped toward the
/// configured LF/HF ratio.
pub fn sample_rr_series<R: Rng + ?Sized>(cfg: &RhythmConfig, duration: f64, rng: &mut R) -> Result<RhythmSeries> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::invalid(format!("duration must be positive, got {duration}")));
    }
    cfg.validate()?;
    // Every interval is at least min_rr, so this many always reach past `duration`.
    let needed = (duration / cfg.min_rr).ceil() as usize + 1;
    let n = needed.max(MIN_SERIES_INTERVALS);
    let series = RhythmSeries::from_rr(draw_rr_intervals(cfg, n, rng)?)?;
    lf_hf_shape(&series, cfg)
}

/// Natural cubic spline through `(xs, ys)`, evaluated at `at` (clamped to the knot range).
fn natural_spline(xs: &[f64], ys: &[f64], at: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    // second derivatives m, m[0] = m[n-1] = 0; Thomas algorithm on the interior
    let mut m = vec![0.0; n];
    if n > 2 {
        let k = n - 2;
        let mut diag = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for i in 0..k {
            diag[i] = 2.0 * (h[i] + h[i + 1]);
            rhs[i] = 6.0 * ((ys[i + 2] - ys[i + 1]) / h[i + 1] - (ys[i + 1] - ys[i]) / h[i]);
        }
        for i in 1..k {
            let w = h[i] / diag[i - 1];
            diag[i] -= w * h[i];
            rhs[i] -= w * rhs[i - 1];
        }
        m[k] = rhs[k - 1] / diag[k - 1];
        for i in (0..k - 1).rev() {
            m[i + 1] = (rhs[i] - h[i + 1] * m[i + 2]) / diag[i];
        }
    }
    let mut seg = 0;
    at.iter()
        .map(|&t| {
            let t = t.clamp(xs[0], xs[n - 1]);
            while seg + 2 < n && t > xs[seg + 1] {
                seg += 1;
            }
            while seg > 0 && t < xs[seg] {
                seg -= 1;
            }
            let (i, hi) = (seg, h[seg]);
            let a = (xs[i + 1] - t) / hi;
            let b = (t - xs[i]) / hi;
            a * ys[i]
                + b * ys[i + 1]
                + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * hi * hi / 6.0
        })
        .collect()
}

fn linear_interp(xs: &[f64], ys: &[f64], at: f64) -> f64 {
    if at <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if at >= xs[last] {
        return ys[last];
    }
    let i = xs.partition_point(|&x| x <= at) - 1;
    let f = (at - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + f * (ys[i + 1] - ys[i])
}

struct Tachogram {
    times: Vec<f64>,
    values: Vec<f64>,
}

fn resample_tachogram(series: &RhythmSeries) -> Tachogram {
    let beats = series.beat_times();
    let start = beats[0];
    let span = beats[beats.len() - 1] - start;
    let m = (span * TACHOGRAM_RATE + 1e-9).floor() as usize + 1;
    let times: Vec<f64> = (0..m).map(|k| start + k as f64 / TACHOGRAM_RATE).collect();
    let values = natural_spline(&beats, &series.rr, &times);
    Tachogram { times, values }
}

fn check_len(series: &RhythmSeries) -> Result<()> {
    if series.len() < MIN_SPECTRAL_INTERVALS {
        return Err(Error::InsufficientData {
            needed: MIN_SPECTRAL_INTERVALS,
            got: series.len(),
        });
    }
    Ok(())
}

fn in_band(f: f64, band: (f64, f64)) -> bool {
    f >= band.0 && f < band.1
}

/// LF band power over HF band power of the Hann-windowed periodogram of the
/// mean-removed 4 Hz tachogram.
pub fn lf_hf_ratio(series: &RhythmSeries, cfg: &RhythmConfig) -> Result<f64> {
    check_len(series)?;
    let tach = resample_tachogram(series);
    let mu = mean(&tach.values);
    let detrended: Vec<f64> = tach.values.iter().map(|v| v - mu).collect();
    let spread = detrended.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if spread <= 1e-12 * mu.abs().max(1.0) {
        return Err(Error::Degenerate("tachogram has no variability".into()));
    }
    let n = detrended.len();
    let window = hann(n);
    let windowed: Vec<f64> = detrended.iter().zip(&window).map(|(x, w)| x * w).collect();
    let spectrum = fft(&windowed);
    let (mut lf, mut hf) = (0.0, 0.0);
    for (j, c) in spectrum.iter().enumerate().take(n / 2 + 1) {
        let f = bin_frequency(j, n, TACHOGRAM_RATE);
        if in_band(f, cfg.lf_band) {
            lf += c.norm_sqr();
        } else if in_band(f, cfg.hf_band) {
            hf += c.norm_sqr();
        }
    }
    if hf <= 0.0 {
        return Err(Error::Degenerate("no power in the HF band".into()));
    }
    Ok(lf / hf)
}

fn within_tolerance(ratio: f64, target: f64) -> bool {
    ratio >= 0.5 * target && ratio <= 2.0 * target
}

/// Re-weights LF and HF tachogram content until the LF/HF ratio lies within
/// a factor of two of `cfg.target_lf_hf_ratio`.
///
/// Each pass scales LF bins by `g` and HF bins by `1/g` with
/// `g = (target / ratio)^(1/4)`, maps the modified tachogram back onto the
/// beat times, restores the original mean and clamps to `[min_rr, max_rr]`.
/// Interval count is preserved.
pub fn lf_hf_shape(series: &RhythmSeries, cfg: &RhythmConfig) -> Result<RhythmSeries> {
    check_len(series)?;
    cfg.validate()?;
    let target = cfg.target_lf_hf_ratio;
    let mut ratio = match lf_hf_ratio(series, cfg) {
        Ok(r) if r > 0.0 => r,
        Ok(_) | Err(Error::Degenerate(_)) => {
            return Ok(RhythmSeries {
                shaping: ShapeOutcome::Degenerate,
                ..series.clone()
            })
        }
        Err(e) => return Err(e),
    };
    if within_tolerance(ratio, target) {
        return Ok(RhythmSeries {
            shaping: ShapeOutcome::Unchanged,
            ..series.clone()
        });
    }

    let original_mean = series.mean_rr();
    let mut current = series.clone();
    for iteration in 1..=MAX_SHAPE_ITERATIONS {
        let tach = resample_tachogram(&current);
        let mu = mean(&tach.values);
        let centered: Vec<f64> = tach.values.iter().map(|v| v - mu).collect();
        let n = centered.len();
        let gain = (target / ratio).powf(0.25);
        let mut spectrum = fft(&centered);
        for (j, c) in spectrum.iter_mut().enumerate() {
            let f = bin_frequency(j, n, TACHOGRAM_RATE);
            if in_band(f, cfg.lf_band) {
                *c *= gain;
            } else if in_band(f, cfg.hf_band) {
                *c /= gain;
            }
        }
        let shaped: Vec<f64> = ifft_real(spectrum).into_iter().map(|v| v + mu).collect();

        let beats = current.beat_times();
        let mut rr: Vec<f64> = beats
            .iter()
            .map(|&t| linear_interp(&tach.times, &shaped, t))
            .collect();
        let shift = original_mean - mean(&rr);
        for v in &mut rr {
            *v = (*v + shift).clamp(cfg.min_rr, cfg.max_rr);
        }
        current = RhythmSeries::from_rr(rr)?;
        ratio = match lf_hf_ratio(&current, cfg) {
            Ok(r) if r > 0.0 => r,
            _ => break,
        };
        if within_tolerance(ratio, target) {
            current.shaping = ShapeOutcome::Shaped { iterations: iteration };
            return Ok(current);
        }
    }
    current.shaping = ShapeOutcome::NotConverged;
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use std::f64::consts::PI;

    /// RR series whose intervals follow `base + sum amp*sin(2 pi f t)` at the beat times.
    fn modulated(freqs: &[f64], n: usize) -> RhythmSeries {
        let mut t = 0.0;
        let rr = (0..n)
            .map(|_| {
                let v = 0.8 + freqs.iter().map(|f| 0.02 * (2.0 * PI * f * t).sin()).sum::<f64>();
                t += v;
                v
            })
            .collect();
        RhythmSeries::from_rr(rr).unwrap()
    }

    #[test]
    fn onsets_are_exclusive_prefix_sums() {
        let s = RhythmSeries::from_rr(vec![0.5, 0.75, 1.0]).unwrap();
        assert_eq!(s.onsets(), &[0.0, 0.5, 1.25]);
        assert!(RhythmSeries::from_rr(vec![0.5, 0.0]).is_err());
    }

    #[test]
    fn zero_log_sd_is_constant_70_bpm() {
        let cfg = RhythmConfig {
            log_sd: 0.0,
            log_mean: 0.857f64.ln(),
            ..Default::default()
        };
        let s = sample_rr_series(&cfg, 10.0, &mut SeededRng::new(1)).unwrap();
        assert!(s.rr().iter().all(|&v| (v - 0.857).abs() < 1e-12));
        assert_eq!(s.shaping, ShapeOutcome::Degenerate);
    }

    #[test]
    fn series_is_deterministic() {
        let cfg = RhythmConfig::default();
        let a = sample_rr_series(&cfg, 10.0, &mut SeededRng::new(77)).unwrap();
        let b = sample_rr_series(&cfg, 10.0, &mut SeededRng::new(77)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lognormal_median() {
        // analytic median of a log-normal is exp(log_mean)
        let cfg = RhythmConfig {
            log_mean: 0.8f64.ln(),
            log_sd: 0.1,
            ..Default::default()
        };
        let mut rr = draw_rr_intervals(&cfg, 10_000, &mut SeededRng::new(5)).unwrap();
        rr.sort_by(f64::total_cmp);
        let median = 0.5 * (rr[4999] + rr[5000]);
        assert!((median - 0.8).abs() < 0.01, "median {median}");
    }

    #[test]
    fn negative_log_sd_rejected() {
        let cfg = RhythmConfig {
            log_sd: -0.1,
            ..Default::default()
        };
        assert!(matches!(
            sample_rr_series(&cfg, 10.0, &mut SeededRng::new(1)),
            Err(Error::InvalidInput(_))
        ));
        assert!(sample_rr_series(&RhythmConfig::default(), 0.0, &mut SeededRng::new(1)).is_err());
    }

    #[test]
    fn ratio_of_single_band_modulations() {
        let cfg = RhythmConfig::default();
        assert!(lf_hf_ratio(&modulated(&[0.1], 256), &cfg).unwrap() > 100.0);
        assert!(lf_hf_ratio(&modulated(&[0.3], 256), &cfg).unwrap() < 0.01);
    }

    #[test]
    fn ratio_of_balanced_modulation() {
        let r = lf_hf_ratio(&modulated(&[0.1, 0.3], 256), &RhythmConfig::default()).unwrap();
        assert!((r - 1.0).abs() <= 0.2, "ratio {r}");
    }

    #[test]
    fn spectral_routines_need_32_intervals() {
        let s = RhythmSeries::from_rr(vec![0.8; 31]).unwrap();
        let cfg = RhythmConfig::default();
        assert!(matches!(lf_hf_ratio(&s, &cfg), Err(Error::InsufficientData { needed: 32, got: 31 })));
        assert!(matches!(lf_hf_shape(&s, &cfg), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn constant_series_has_no_hf_power() {
        let s = RhythmSeries::from_rr(vec![0.8; 64]).unwrap();
        let cfg = RhythmConfig::default();
        assert!(matches!(lf_hf_ratio(&s, &cfg), Err(Error::Degenerate(_))));
        let shaped = lf_hf_shape(&s, &cfg).unwrap();
        assert_eq!(shaped.rr(), s.rr());
        assert!(shaped.shaping.is_warning());
    }

    #[test]
    fn in_band_series_passes_through() {
        let s = modulated(&[0.1, 0.3], 128);
        let shaped = lf_hf_shape(&s, &RhythmConfig::default()).unwrap();
        assert_eq!(shaped.shaping, ShapeOutcome::Unchanged);
        assert!((shaped.mean_rr() - s.mean_rr()).abs() < 1e-9);
    }

    #[test]
    fn white_tachogram_is_shaped_into_band() {
        let cfg = RhythmConfig::default();
        let mut rng = SeededRng::new(31);
        let mut shaped_any = false;
        for _ in 0..20 {
            let raw = RhythmSeries::from_rr(draw_rr_intervals(&cfg, 64, &mut rng).unwrap()).unwrap();
            let out = lf_hf_shape(&raw, &cfg).unwrap();
            shaped_any |= matches!(out.shaping, ShapeOutcome::Shaped { .. });
            let r = lf_hf_ratio(&out, &cfg).unwrap();
            assert!((0.5..=2.0).contains(&r), "ratio {r}");
            assert_eq!(out.len(), raw.len());
            assert!((out.mean_rr() / raw.mean_rr() - 1.0).abs() < 0.01);
        }
        assert!(shaped_any);
    }

    #[test]
    fn spline_reproduces_cubic_free_data() {
        // natural spline is exact on straight lines
        let xs = [0.0, 0.7, 1.1, 2.5, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let at = [0.0, 0.35, 1.0, 2.9, 3.0];
        for (t, v) in at.iter().zip(natural_spline(&xs, &ys, &at)) {
            assert!((v - (2.0 * t - 1.0)).abs() < 1e-12);
        }
    }
}
