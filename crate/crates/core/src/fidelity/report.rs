//! Cohort-level comparison report.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::{basic_features, RecordFeatures};
use super::ks::{ks_distance, ks_distance_sorted};
use super::mmd::{flatten, mmd2_with_median_bandwidth};
use super::psd::{psd_welch, CLINICAL_BAND, DEFAULT_OVERLAP, DEFAULT_SEGMENT};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::record::{Lead, MultiLeadRecord, Source, N_LEADS};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CohortClass {
    Normal,
    #[serde(rename = "MI")]
    Mi,
    Mixed,
}

/// Non-empty set of records sharing one grid.
#[derive(Debug, Clone)]
pub struct Cohort {
    records: Vec<MultiLeadRecord>,
    pub source: Source,
    pub class: CohortClass,
}

impl Cohort {
    pub fn new(records: Vec<MultiLeadRecord>, source: Source, class: CohortClass) -> Result<Self> {
        let first = records.first().ok_or_else(|| Error::invalid("cohort is empty"))?;
        let grid = first.grid();
        if records.iter().any(|r| r.grid() != grid) {
            return Err(Error::invalid("cohort records use different grids"));
        }
        Ok(Self {
            records,
            source,
            class,
        })
    }

    pub fn records(&self) -> &[MultiLeadRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn grid(&self) -> TimeGrid {
        self.records[0].grid()
    }

    /// Every sample of every record, sorted ascending.
    pub fn sorted_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.records.iter().flat_map(|r| r.samples().iter().copied()).collect();
        v.sort_unstable_by(f64::total_cmp);
        v
    }

    fn sorted_lead_values(&self, lead: Lead) -> Vec<f64> {
        let mut v: Vec<f64> = self.records.iter().flat_map(|r| r.lead(lead).iter().copied()).collect();
        v.sort_unstable_by(f64::total_cmp);
        v
    }
}

/// KS distance on the pooled sample values of two cohorts.
pub(crate) fn ks_flat(a: &Cohort, b: &Cohort) -> f64 {
    ks_distance_sorted(&a.sorted_values(), &b.sorted_values())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsSummary {
    /// One entry per lead; `None` where either side had no values.
    pub per_lead: Vec<Option<f64>>,
    pub mean: f64,
    pub sd: f64,
}

impl KsSummary {
    fn from_values(per_lead: Vec<Option<f64>>) -> Self {
        let present: Vec<f64> = per_lead.iter().flatten().copied().collect();
        let (mean, sd) = mean_sd(&present);
        Self { per_lead, mean, sd }
    }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadStats {
    pub mean: f64,
    pub sd: f64,
    pub peak_to_peak: f64,
    pub r_amplitude: f64,
    pub st_level: f64,
}

/// Per-lead feature averages over one cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub per_lead: Vec<LeadStats>,
}

impl FeatureSummary {
    fn from_features(feats: &[RecordFeatures]) -> Self {
        let avg = |f: &dyn Fn(&RecordFeatures) -> f64| feats.iter().map(f).sum::<f64>() / feats.len() as f64;
        let per_lead = (0..N_LEADS)
            .map(|l| LeadStats {
                mean: avg(&|r| r.leads[l].mean),
                sd: avg(&|r| r.leads[l].sd),
                peak_to_peak: avg(&|r| r.leads[l].peak_to_peak),
                r_amplitude: avg(&|r| {
                    let a = &r.leads[l].r_amplitudes;
                    if a.is_empty() {
                        0.0
                    } else {
                        a.iter().sum::<f64>() / a.len() as f64
                    }
                }),
                st_level: avg(&|r| r.leads[l].st_level),
            })
            .collect();
        Self { per_lead }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureKs {
    pub mean: KsSummary,
    pub sd: KsSummary,
    pub peak_to_peak: KsSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdSummary {
    pub band: (f64, f64),
    /// Mean clinical-band power per lead, mV^2.
    pub real_band_power: Vec<f64>,
    pub synthetic_band_power: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub mmd2: f64,
    pub kernel_bandwidth: f64,
    pub ks_flat: f64,
    pub ks_per_lead: KsSummary,
    pub ks_r_amplitude: KsSummary,
    pub ks_features: FeatureKs,
    /// KS between random halves of each cohort; `None` below two records.
    pub intra_ks_real: Option<f64>,
    pub intra_ks_synthetic: Option<f64>,
    pub feature_stats_real: FeatureSummary,
    pub feature_stats_synthetic: FeatureSummary,
    pub psd_summary: PsdSummary,
    pub n_real: usize,
    pub n_synthetic: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    /// Seed for the random half-splits.
    pub seed: u64,
    pub segment_len: usize,
    pub overlap: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            segment_len: DEFAULT_SEGMENT,
            overlap: DEFAULT_OVERLAP,
        }
    }
}

fn intra_ks(cohort: &Cohort, rng: &mut SeededRng) -> Option<f64> {
    if cohort.len() < 2 {
        return None;
    }
    let mut idx: Vec<usize> = (0..cohort.len()).collect();
    idx.shuffle(rng);
    let (a, b) = idx.split_at(cohort.len() / 2);
    let pick = |ids: &[usize]| {
        let mut v: Vec<f64> = ids
            .iter()
            .flat_map(|&i| cohort.records[i].samples().iter().copied())
            .collect();
        v.sort_unstable_by(f64::total_cmp);
        v
    };
    Some(ks_distance_sorted(&pick(a), &pick(b)))
}

fn per_lead_ks(
    real: &[RecordFeatures],
    synth: &[RecordFeatures],
    value: impl Fn(&RecordFeatures, usize) -> Vec<f64>,
) -> KsSummary {
    let per_lead = (0..N_LEADS)
        .map(|l| {
            let a: Vec<f64> = real.iter().flat_map(|r| value(r, l)).collect();
            let b: Vec<f64> = synth.iter().flat_map(|r| value(r, l)).collect();
            ks_distance(&a, &b).ok()
        })
        .collect();
    KsSummary::from_values(per_lead)
}

fn band_power_per_lead(cohort: &Cohort, opts: &ReportOptions) -> Result<Vec<f64>> {
    let grid = cohort.grid();
    let seg = opts.segment_len.min(grid.n_samples());
    Lead::ALL
        .iter()
        .map(|&lead| {
            let mut total = 0.0;
            for rec in cohort.records() {
                total += psd_welch(rec.lead(lead), grid, seg, opts.overlap)?
                    .band_power(CLINICAL_BAND.0, CLINICAL_BAND.1);
            }
            Ok(total / cohort.len() as f64)
        })
        .collect()
}

/// Compares a real and a synthetic cohort on every implemented metric.
pub fn fidelity_report(real: &Cohort, synthetic: &Cohort, opts: &ReportOptions) -> Result<FidelityReport> {
    if real.grid() != synthetic.grid() {
        return Err(Error::invalid("real and synthetic cohorts use different grids"));
    }
    let xs: Vec<Vec<f64>> = real.records().iter().map(flatten).collect();
    let ys: Vec<Vec<f64>> = synthetic.records().iter().map(flatten).collect();
    let (mmd2, kernel_bandwidth) = mmd2_with_median_bandwidth(&xs, &ys)?;

    let ks_flat = ks_flat(real, synthetic);
    let ks_per_lead = KsSummary::from_values(
        Lead::ALL
            .iter()
            .map(|&l| Some(ks_distance_sorted(&real.sorted_lead_values(l), &synthetic.sorted_lead_values(l))))
            .collect(),
    );

    let real_feats: Vec<RecordFeatures> = real.records().iter().map(basic_features).collect();
    let synth_feats: Vec<RecordFeatures> = synthetic.records().iter().map(basic_features).collect();
    let ks_r_amplitude = per_lead_ks(&real_feats, &synth_feats, |r, l| r.leads[l].r_amplitudes.clone());
    let ks_features = FeatureKs {
        mean: per_lead_ks(&real_feats, &synth_feats, |r, l| vec![r.leads[l].mean]),
        sd: per_lead_ks(&real_feats, &synth_feats, |r, l| vec![r.leads[l].sd]),
        peak_to_peak: per_lead_ks(&real_feats, &synth_feats, |r, l| vec![r.leads[l].peak_to_peak]),
    };

    let split = SeededRng::new(opts.seed);
    let intra_ks_real = intra_ks(real, &mut split.child(0));
    let intra_ks_synthetic = intra_ks(synthetic, &mut split.child(1));

    Ok(FidelityReport {
        mmd2,
        kernel_bandwidth,
        ks_flat,
        ks_per_lead,
        ks_r_amplitude,
        ks_features,
        intra_ks_real,
        intra_ks_synthetic,
        feature_stats_real: FeatureSummary::from_features(&real_feats),
        feature_stats_synthetic: FeatureSummary::from_features(&synth_feats),
        psd_summary: PsdSummary {
            band: CLINICAL_BAND,
            real_band_power: band_power_per_lead(real, opts)?,
            synthetic_band_power: band_power_per_lead(synthetic, opts)?,
        },
        n_real: real.len(),
        n_synthetic: synthetic.len(),
    })
}
