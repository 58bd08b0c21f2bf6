//! End-to-end record synthesis and batch dataset generation.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{GenerationConfig, OutputFormat};
use crate::error::{Error, Result};
use crate::io::{self, DatasetManifest, ManifestEntry};
use crate::leads::project_to_leads;
use crate::mi::{add_st_plateau, apply_acute_variability_traced, apply_mi_effects, AcuteDraws, MiEffects};
use crate::noise::{
    add_baseline_wander, add_emg, add_mains, add_motion_bursts, fade_exponent, fade_with_exponent,
    normalize_and_scale,
};
use crate::record::{Flag, Label, Lead, MultiLeadRecord, Provenance};
use crate::rhythm::{sample_rr_series, RhythmSeries};
use crate::rng::{child_seed, SeededRng};
use crate::signal::{assemble_beat_train, sample_beat_params, BeatParams, MAX_SAMPLE_ATTEMPTS};

/// Child-stream index of each random stage.
mod stream {
    pub const RHYTHM: u64 = 0;
    pub const BEATS: u64 = 1;
    pub const MI_EFFECTS: u64 = 2;
    pub const ST_HEIGHT: u64 = 3;
    pub const ACUTE: u64 = 4;
    pub const WANDER: u64 = 5;
    pub const MAINS: u64 = 6;
    pub const EMG: u64 = 7;
    pub const MOTION: u64 = 8;
    pub const FADE: u64 = 9;
    pub const CALIBRATION: u64 = 10;
}

/// Everything produced while synthesizing one record.
#[derive(Debug, Clone)]
pub struct SynthesisTrace {
    pub label: Label,
    pub seed: u64,
    pub rhythm: RhythmSeries,
    /// Beat onsets and final kernel parameters.
    pub beats: Vec<(f64, BeatParams)>,
    /// Sample index of every R-kernel center inside the record.
    pub r_peaks: Vec<usize>,
    pub mi_effects: Option<MiEffects>,
    pub st_height: Option<f64>,
    pub acute: Option<AcuteDraws>,
    pub fade_exponent: f64,
    /// Lead projection of the beat train, before any signal-level change.
    pub projected: MultiLeadRecord,
    /// `projected` plus the ST plateau (equal to it for Normal records).
    pub st_elevated: MultiLeadRecord,
    /// After all MI effects, before artifacts.
    pub pre_noise: MultiLeadRecord,
    pub record: MultiLeadRecord,
}

impl SynthesisTrace {
    /// R peaks as they appear on `lead` after any timing shift.
    pub fn lead_r_peaks(&self, lead: Lead) -> Vec<usize> {
        let shift = self.acute.as_ref().map_or(0, |a| a.lead_shifts[lead.index()]);
        let n = self.record.n_samples() as isize;
        let mut peaks: Vec<usize> = self
            .r_peaks
            .iter()
            .map(|&r| (r as isize + shift).rem_euclid(n) as usize)
            .collect();
        peaks.sort_unstable();
        peaks
    }

    /// Mean of `st_elevated - projected` over every ST window on `lead`.
    pub fn st_offset(&self, lead: Lead, window: (f64, f64)) -> Option<f64> {
        let grid = self.projected.grid();
        let a = self.st_elevated.lead(lead);
        let b = self.projected.lead(lead);
        let mut sum = 0.0;
        let mut count = 0usize;
        for &r in &self.r_peaks {
            for k in grid.offsets_within(window.0, window.1) {
                let idx = r as isize + k;
                if (0..grid.n_samples() as isize).contains(&idx) {
                    sum += a[idx as usize] - b[idx as usize];
                    count += 1;
                }
            }
        }
        (count > 0).then(|| sum / count as f64)
    }
}

fn draw_beat(cfg: &GenerationConfig, label: Label, fx: Option<&MiEffects>, rng: &mut SeededRng) -> Result<BeatParams> {
    let dist = cfg.param_distributions.get(label);
    for _ in 0..MAX_SAMPLE_ATTEMPTS {
        let p = sample_beat_params(dist, rng)?;
        match fx {
            None => return Ok(p),
            Some(fx) => {
                if let Ok(out) = apply_mi_effects(&p, fx) {
                    return Ok(out);
                }
            }
        }
    }
    Err(Error::DegenerateDistribution {
        attempts: MAX_SAMPLE_ATTEMPTS,
    })
}

/// Synthesizes one record of class `label` from `seed`.
pub fn synthesize(cfg: &GenerationConfig, label: Label, seed: u64) -> Result<SynthesisTrace> {
    cfg.validate()?;
    let root = SeededRng::new(seed);
    let grid = cfg.grid;
    let is_mi = label == Label::Mi;

    let rhythm = sample_rr_series(&cfg.rhythm, grid.duration(), &mut root.child(stream::RHYTHM))?;
    let mi_effects = is_mi.then(|| cfg.mi.draw_effects(&mut root.child(stream::MI_EFFECTS)));

    let mut beat_rng = root.child(stream::BEATS);
    let beats = rhythm
        .onsets_before(grid.duration())
        .map(|onset| Ok((onset, draw_beat(cfg, label, mi_effects.as_ref(), &mut beat_rng)?)))
        .collect::<Result<Vec<_>>>()?;
    let r_peaks: Vec<usize> = beats
        .iter()
        .map(|(onset, p)| ((onset + p.r.center) * grid.sampling_rate()).round())
        .filter(|&i| i >= 0.0 && (i as usize) < grid.n_samples())
        .map(|i| i as usize)
        .collect();

    let source = assemble_beat_train(&beats, grid)?;
    let mut projected = project_to_leads(&source, &cfg.lead_matrix())?;
    projected.label = Some(label);
    projected.seed = seed;
    projected.provenance = Provenance::synthetic(Some(cfg.digest()));
    if rhythm.shaping.is_warning() {
        projected.provenance.flags.insert(Flag::RhythmUnshaped);
    }
    if mi_effects.is_some_and(|fx| fx.invert_t) {
        projected.provenance.flags.insert(Flag::TInversionPerRecord);
    }

    let (st_height, st_elevated, acute, pre_noise) = if is_mi {
        let height = cfg.mi.draw_st_height(&mut root.child(stream::ST_HEIGHT));
        let st = add_st_plateau(&projected, &r_peaks, height, &cfg.mi)?;
        let (acute_rec, draws) =
            apply_acute_variability_traced(&st, &r_peaks, &cfg.mi, &mut root.child(stream::ACUTE))?;
        (Some(height), st, Some(draws), acute_rec)
    } else {
        (None, projected.clone(), None, projected.clone())
    };

    let noise = &cfg.noise;
    let mut rec = add_baseline_wander(&pre_noise, noise, &mut root.child(stream::WANDER));
    rec = add_mains(&rec, noise, &mut root.child(stream::MAINS));
    rec = add_emg(&rec, Some(label), noise, &mut root.child(stream::EMG));
    rec = add_motion_bursts(&rec, &r_peaks, Some(label), noise, &mut root.child(stream::MOTION));
    let exponent = fade_exponent(Some(label), noise, &mut root.child(stream::FADE));
    rec = fade_with_exponent(&rec, noise.fade_duration, exponent);
    rec = normalize_and_scale(&rec, noise, &mut root.child(stream::CALIBRATION));

    Ok(SynthesisTrace {
        label,
        seed,
        rhythm,
        beats,
        r_peaks,
        mi_effects,
        st_height,
        acute,
        fade_exponent: exponent,
        projected,
        st_elevated,
        pre_noise,
        record: rec,
    })
}

/// Record `k` of a dataset: label from the class mix, seed `child_seed(base_seed, k)`.
pub fn synthesize_nth(cfg: &GenerationConfig, k: usize) -> Result<SynthesisTrace> {
    synthesize(cfg, cfg.class_mix.label_of(k), child_seed(cfg.base_seed, k as u64))
}

/// Records generated in parallel per chunk before being written.
const WRITE_CHUNK: usize = 256;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";
pub const BIN_FILE: &str = "records.bin";

pub fn record_id(k: usize) -> String {
    format!("rec_{k:05}")
}

/// Generates every record of `cfg` into `out_dir` and writes the manifest.
///
/// Output bytes do not depend on the number of rayon threads.
pub fn generate_dataset(cfg: &GenerationConfig, out_dir: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let total = cfg.class_mix.total();
    let digest = cfg.digest();
    let mut entries = Vec::with_capacity(total);
    let mut bin_writer = None;
    if cfg.format == OutputFormat::Bin && total > 0 {
        bin_writer = Some(io::BinWriter::create(&out_dir.join(BIN_FILE), total, cfg.grid)?);
    }

    for start in (0..total).step_by(WRITE_CHUNK) {
        let end = (start + WRITE_CHUNK).min(total);
        let records = (start..end)
            .into_par_iter()
            .map(|k| {
                let rec = synthesize_nth(cfg, k)?.record;
                if cfg.format == OutputFormat::Csv {
                    let name = format!("{}.csv", record_id(k));
                    io::write_record_csv(&rec, &out_dir.join(&name))?;
                }
                Ok(rec)
            })
            .collect::<Result<Vec<_>>>()?;
        for (k, rec) in (start..end).zip(&records) {
            let path = match cfg.format {
                OutputFormat::Csv => format!("{}.csv", record_id(k)),
                OutputFormat::Bin => BIN_FILE.to_string(),
            };
            entries.push(ManifestEntry {
                id: record_id(k),
                label: cfg.class_mix.label_of(k),
                seed: rec.seed,
                path,
            });
        }
        if let Some(w) = bin_writer.as_mut() {
            for rec in &records {
                w.write_record(rec)?;
            }
        }
    }
    if let Some(w) = bin_writer {
        w.finish()?;
    }

    let manifest = DatasetManifest {
        config_digest: digest,
        format: cfg.format,
        records: entries,
    };
    io::write_text(&out_dir.join(CONFIG_FILE), &cfg.to_json()?)?;
    io::write_text(&out_dir.join(MANIFEST_FILE), &serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Summary of one synthesized record, for inspection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceSummary {
    pub label: Label,
    pub seed: u64,
    pub n_beats: usize,
    pub mean_rr: f64,
    pub st_height: Option<f64>,
    pub mi_effects: Option<MiEffects>,
}

impl From<&SynthesisTrace> for TraceSummary {
    fn from(t: &SynthesisTrace) -> Self {
        Self {
            label: t.label,
            seed: t.seed,
            n_beats: t.beats.len(),
            mean_rr: t.rhythm.mean_rr(),
            st_height: t.st_height,
            mi_effects: t.mi_effects,
        }
    }
}
