//! Myocardial-infarction morphology.
//!
//! Parameter-level effects (Q deepening, QRS broadening, T inversion and
//! scaling) act on every beat of a record with factors drawn once per record.
//! Signal-level effects (ST plateau, beat jitter, R-peak distortions, lead
//! timing shifts) act on the projected 12-lead record.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{Flag, Lead, MultiLeadRecord};
use crate::signal::{BeatParams, MAX_SAMPLE_ATTEMPTS};

/// Closed interval `[lo, hi]`, serialized as a two-element array.
pub type Span = (f64, f64);

/// Draws uniformly from `span`. Always consumes exactly one value from `rng`.
pub(crate) fn draw_span<R: Rng + ?Sized>(rng: &mut R, span: Span) -> f64 {
    let u: f64 = rng.random();
    span.0 + (span.1 - span.0) * u
}

fn check_span(name: &str, span: Span, positive: bool) -> Result<()> {
    let ok = span.0.is_finite() && span.1.is_finite() && span.0 <= span.1;
    let sign_ok = if positive { span.0 > 0.0 } else { span.0 >= 0.0 };
    if ok && sign_ok {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} range {span:?} is invalid")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiConfig {
    pub q_deepening_factor: Span,
    /// Plateau height in mV, drawn once per record.
    pub st_elevation: Span,
    /// Seconds after the R peak over which the plateau is at full height.
    pub st_window: Span,
    /// Length of the raised-cosine edges outside `st_window`, seconds.
    pub st_ramp: f64,
    pub t_inversion_prob: f64,
    pub t_scale: Span,
    pub qrs_broadening_factor: Span,
    /// Relative sd of the per-beat amplitude multiplier.
    pub amp_jitter_sd: f64,
    pub r_distortion_mv: f64,
    pub lead_time_shift_ms: f64,
    pub affected_leads: Vec<Lead>,
}

impl Default for MiConfig {
    fn default() -> Self {
        let mut affected = vec![Lead::II, Lead::III, Lead::AVF];
        affected.extend(Lead::PRECORDIAL);
        Self {
            q_deepening_factor: (1.5, 3.0),
            st_elevation: (0.1, 0.3),
            st_window: (0.04, 0.12),
            st_ramp: 0.02,
            t_inversion_prob: 0.5,
            t_scale: (0.5, 1.5),
            qrs_broadening_factor: (1.2, 1.6),
            amp_jitter_sd: 0.05,
            r_distortion_mv: 0.05,
            lead_time_shift_ms: 10.0,
            affected_leads: affected,
        }
    }
}

impl MiConfig {
    /// Every effect switched off; the MI pipeline becomes a no-op.
    pub fn identity() -> Self {
        Self {
            q_deepening_factor: (1.0, 1.0),
            st_elevation: (0.0, 0.0),
            t_inversion_prob: 0.0,
            t_scale: (1.0, 1.0),
            qrs_broadening_factor: (1.0, 1.0),
            amp_jitter_sd: 0.0,
            r_distortion_mv: 0.0,
            lead_time_shift_ms: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_span("q_deepening_factor", self.q_deepening_factor, true)?;
        check_span("qrs_broadening_factor", self.qrs_broadening_factor, true)?;
        check_span("t_scale", self.t_scale, true)?;
        check_span("st_elevation", self.st_elevation, false)?;
        check_span("st_window", self.st_window, false)?;
        if !(0.0..=1.0).contains(&self.t_inversion_prob) {
            return Err(Error::invalid("t_inversion_prob must lie in [0, 1]"));
        }
        for (name, v) in [
            ("st_ramp", self.st_ramp),
            ("amp_jitter_sd", self.amp_jitter_sd),
            ("r_distortion_mv", self.r_distortion_mv),
            ("lead_time_shift_ms", self.lead_time_shift_ms),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn draw_effects<R: Rng + ?Sized>(&self, rng: &mut R) -> MiEffects {
        let q_factor = draw_span(rng, self.q_deepening_factor);
        let broadening = draw_span(rng, self.qrs_broadening_factor);
        let u: f64 = rng.random();
        let t_scale = draw_span(rng, self.t_scale);
        MiEffects {
            q_factor,
            broadening,
            invert_t: u < self.t_inversion_prob,
            t_scale,
        }
    }

    pub fn draw_st_height<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        draw_span(rng, self.st_elevation)
    }
}

/// Parameter-level MI factors for one record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiEffects {
    pub q_factor: f64,
    pub broadening: f64,
    pub invert_t: bool,
    pub t_scale: f64,
}

pub fn apply_mi_effects(p: &BeatParams, fx: &MiEffects) -> Result<BeatParams> {
    let mut out = *p;
    out.q.amplitude *= fx.q_factor;
    out.q.width *= fx.broadening;
    out.r.width *= fx.broadening;
    out.s.width *= fx.broadening;
    if fx.invert_t {
        out.t.amplitude = -out.t.amplitude;
    }
    out.t.amplitude *= fx.t_scale;
    out.validate()?;
    Ok(out)
}

/// Draws MI factors and applies them to one beat.
pub fn apply_mi_to_params<R: Rng + ?Sized>(p: &BeatParams, cfg: &MiConfig, rng: &mut R) -> Result<BeatParams> {
    p.validate()?;
    cfg.validate()?;
    for _ in 0..MAX_SAMPLE_ATTEMPTS {
        let fx = cfg.draw_effects(rng);
        if let Ok(out) = apply_mi_effects(p, &fx) {
            return Ok(out);
        }
    }
    Err(Error::DegenerateDistribution {
        attempts: MAX_SAMPLE_ATTEMPTS,
    })
}

fn check_peaks(rec: &MultiLeadRecord, r_peaks: &[usize]) -> Result<()> {
    match r_peaks.iter().find(|&&r| r >= rec.n_samples()) {
        Some(r) => Err(Error::invalid(format!(
            "R peak index {r} outside record of {} samples",
            rec.n_samples()
        ))),
        None => Ok(()),
    }
}

/// ST envelope in [0, 1]: exactly 1 on `st_window` after each R peak, with
/// raised-cosine edges of `st_ramp` seconds outside the window. Returns the
/// envelope and whether any window ran past the record end.
pub fn st_envelope(rec: &MultiLeadRecord, r_peaks: &[usize], cfg: &MiConfig) -> (Vec<f64>, bool) {
    let grid = rec.grid();
    let n = grid.n_samples() as isize;
    let (w0, w1) = cfg.st_window;
    let ramp = cfg.st_ramp;
    let plateau = grid.offsets_within(w0, w1);
    let outer = grid.offsets_within(w0 - ramp, w1 + ramp);
    let mut env = vec![0.0f64; grid.n_samples()];
    let mut truncated = false;
    for &r in r_peaks {
        for k in outer.clone() {
            let idx = r as isize + k;
            if idx < 0 {
                continue;
            }
            if idx >= n {
                truncated = true;
                break;
            }
            let tau = k as f64 / grid.sampling_rate();
            let e = if plateau.contains(&k) {
                1.0
            } else if k < *plateau.start() {
                0.5 * (1.0 - (std::f64::consts::PI * (tau - (w0 - ramp)) / ramp).cos())
            } else {
                0.5 * (1.0 + (std::f64::consts::PI * (tau - w1) / ramp).cos())
            };
            let slot = &mut env[idx as usize];
            *slot = slot.max(e);
        }
    }
    (env, truncated)
}

/// Adds a plateau of `height` mV after every R peak on the affected leads.
pub fn add_st_plateau(
    rec: &MultiLeadRecord,
    r_peaks: &[usize],
    height: f64,
    cfg: &MiConfig,
) -> Result<MultiLeadRecord> {
    check_peaks(rec, r_peaks)?;
    cfg.validate()?;
    let mut out = rec.clone();
    if height == 0.0 {
        return Ok(out);
    }
    let (env, truncated) = st_envelope(rec, r_peaks, cfg);
    for &lead in &cfg.affected_leads {
        for (x, e) in out.lead_mut(lead).iter_mut().zip(&env) {
            if *e != 0.0 {
                *x += height * e;
            }
        }
    }
    if truncated {
        out.provenance.flags.insert(Flag::StWindowTruncated);
    }
    Ok(out)
}

/// Draws a plateau height from `cfg.st_elevation` and applies [`add_st_plateau`].
pub fn apply_st_elevation<R: Rng + ?Sized>(
    rec: &MultiLeadRecord,
    r_peaks: &[usize],
    cfg: &MiConfig,
    rng: &mut R,
) -> Result<MultiLeadRecord> {
    let height = cfg.draw_st_height(rng);
    add_st_plateau(rec, r_peaks, height, cfg)
}

/// Random draws behind one [`apply_acute_variability`] call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcuteDraws {
    /// Multiplier for each beat window, in R-peak order.
    pub beat_scales: Vec<f64>,
    /// Circular shift applied to each lead, samples (positive delays).
    pub lead_shifts: Vec<isize>,
}

/// Whole-sample shift closest to `shift_ms` at `sampling_rate`.
pub fn shift_samples(shift_ms: f64, sampling_rate: f64) -> isize {
    (shift_ms * sampling_rate / 1000.0).round() as isize
}

/// Rotates `trace` so that `out[k] = in[k - samples]` (indices modulo length).
pub fn circular_shift(trace: &mut [f64], samples: isize) {
    if trace.is_empty() {
        return;
    }
    let s = samples.rem_euclid(trace.len() as isize) as usize;
    trace.rotate_right(s);
}

/// Zero-mean Mexican-hat bump sampled over +-40 ms, peak magnitude 1.
fn distortion_kernel(rec: &MultiLeadRecord) -> (std::ops::RangeInclusive<isize>, Vec<f64>) {
    let grid = rec.grid();
    let offsets = grid.offsets_within(-0.04, 0.04);
    let sigma = 0.01;
    let raw: Vec<f64> = offsets
        .clone()
        .map(|k| {
            let u = k as f64 / grid.sampling_rate() / sigma;
            (1.0 - u * u) * (-0.5 * u * u).exp()
        })
        .collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let centered: Vec<f64> = raw.iter().map(|v| v - mean).collect();
    let peak = centered.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let kernel = if peak > 0.0 {
        centered.iter().map(|v| v / peak).collect()
    } else {
        centered
    };
    (offsets, kernel)
}

/// Beat-to-beat amplitude jitter, R-peak distortions and lead timing shifts.
pub fn apply_acute_variability<R: Rng + ?Sized>(
    rec: &MultiLeadRecord,
    r_peaks: &[usize],
    cfg: &MiConfig,
    rng: &mut R,
) -> Result<MultiLeadRecord> {
    apply_acute_variability_traced(rec, r_peaks, cfg, rng).map(|(r, _)| r)
}

/// [`apply_acute_variability`] that also reports its random draws.
pub fn apply_acute_variability_traced<R: Rng + ?Sized>(
    rec: &MultiLeadRecord,
    r_peaks: &[usize],
    cfg: &MiConfig,
    rng: &mut R,
) -> Result<(MultiLeadRecord, AcuteDraws)> {
    check_peaks(rec, r_peaks)?;
    cfg.validate()?;
    let n = rec.n_samples();
    let mut out = rec.clone();

    // per-beat windows split halfway between consecutive R peaks
    let beat_scales: Vec<f64> = r_peaks
        .iter()
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            1.0 + cfg.amp_jitter_sd * z
        })
        .collect();
    if cfg.amp_jitter_sd != 0.0 {
        let mut start = 0;
        for (b, &scale) in beat_scales.iter().enumerate() {
            let end = match r_peaks.get(b + 1) {
                Some(&next) => (r_peaks[b] + next) / 2,
                None => n,
            };
            for (_, trace) in out.leads_mut() {
                for x in &mut trace[start..end] {
                    *x *= scale;
                }
            }
            start = end;
        }
    }

    let (offsets, kernel) = distortion_kernel(rec);
    for (_, trace) in out.leads_mut() {
        for &r in r_peaks {
            let amplitude = draw_span(rng, (-cfg.r_distortion_mv, cfg.r_distortion_mv));
            if amplitude == 0.0 {
                continue;
            }
            for (k, g) in offsets.clone().zip(&kernel) {
                let idx = r as isize + k;
                if (0..n as isize).contains(&idx) {
                    trace[idx as usize] += amplitude * g;
                }
            }
        }
    }

    let rate = rec.grid().sampling_rate();
    let mut lead_shifts = Vec::with_capacity(Lead::ALL.len());
    for (_, trace) in out.leads_mut() {
        let ms = draw_span(rng, (-cfg.lead_time_shift_ms, cfg.lead_time_shift_ms));
        let s = shift_samples(ms, rate);
        if s != 0 {
            circular_shift(trace, s);
        }
        lead_shifts.push(s);
    }
    Ok((out, AcuteDraws { beat_scales, lead_shifts }))
}
