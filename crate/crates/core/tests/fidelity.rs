use rayon::prelude::*;

use synthecg::config::GenerationConfig;
use synthecg::fidelity::{
    basic_features, detect_r_peaks, fidelity_report, match_peaks, Cohort, CohortClass, FidelityReport, PeakMatch,
    ReportOptions,
};
use synthecg::grid::TimeGrid;
use synthecg::pipeline::synthesize;
use synthecg::rng::child_seed;
use synthecg::{Label, Lead, MultiLeadRecord, Provenance, Source};

fn cohort(label: Label, base: u64, n: usize) -> Vec<MultiLeadRecord> {
    let cfg = GenerationConfig::default();
    (0..n)
        .into_par_iter()
        .map(|k| synthesize(&cfg, label, child_seed(base, k as u64)).unwrap().record)
        .collect()
}

#[test]
fn clean_records_detect_every_beat_within_one_sample() {
    let cfg = GenerationConfig::default();
    for seed in 0..20 {
        let t = synthesize(&cfg, Label::Normal, seed).unwrap();
        let rec = &t.projected;
        let detected = detect_r_peaks(rec.lead(Lead::II), rec.grid());
        assert_eq!(detected.len(), t.r_peaks.len(), "seed {seed}");
        for (d, r) in detected.iter().zip(&t.r_peaks) {
            assert!(d.abs_diff(*r) <= 1);
        }
    }
}

#[test]
fn noisy_records_keep_high_recall() {
    let cfg = GenerationConfig::default();
    let mut total = PeakMatch::default();
    for seed in 0..40 {
        let label = if seed % 2 == 0 { Label::Normal } else { Label::Mi };
        let t = synthesize(&cfg, label, seed).unwrap();
        let n = t.record.n_samples();
        let fade = (cfg.noise.fade_duration * 100.0) as usize;
        let detected = detect_r_peaks(t.record.lead(Lead::II), t.record.grid());
        total += match_peaks(&detected, &t.lead_r_peaks(Lead::II), 5, fade..n - 25);
    }
    assert!(total.recall() >= 0.9, "{total:?}");
}

#[test]
fn mi_cohort_has_higher_st_level_on_affected_leads() {
    let normal = cohort(Label::Normal, 1, 40);
    let mi = cohort(Label::Mi, 2, 40);
    let mean_st = |recs: &[MultiLeadRecord], lead: Lead| {
        recs.iter().map(|r| basic_features(r).lead(lead).st_level).sum::<f64>() / recs.len() as f64
    };
    for &lead in &GenerationConfig::default().mi.affected_leads {
        assert!(mean_st(&mi, lead) > mean_st(&normal, lead), "{lead}");
    }
}

#[test]
fn intra_group_distance_below_inter_class() {
    let a = Cohort::new(cohort(Label::Normal, 10, 60), Source::Synthetic, CohortClass::Normal).unwrap();
    let b = Cohort::new(cohort(Label::Normal, 11, 60), Source::Synthetic, CohortClass::Normal).unwrap();
    let c = Cohort::new(cohort(Label::Mi, 12, 60), Source::Synthetic, CohortClass::Mi).unwrap();
    let opts = ReportOptions::default();
    let intra = fidelity_report(&a, &b, &opts).unwrap();
    let inter = fidelity_report(&a, &c, &opts).unwrap();
    assert!(intra.ks_flat < inter.ks_flat);
    assert!(intra.mmd2 < inter.mmd2);
}

#[test]
fn self_comparison_and_json_round_trip() {
    let recs = cohort(Label::Mi, 3, 12);
    let a = Cohort::new(recs.clone(), Source::Real, CohortClass::Mi).unwrap();
    let b = Cohort::new(recs, Source::Synthetic, CohortClass::Mi).unwrap();
    let rep = fidelity_report(&a, &b, &ReportOptions::default()).unwrap();
    assert!(rep.mmd2.abs() < 1e-6);
    assert_eq!(rep.ks_flat, 0.0);
    assert_eq!(rep.ks_per_lead.per_lead.len(), 12);
    assert_eq!((rep.n_real, rep.n_synthetic), (12, 12));
    assert!(rep.intra_ks_real.is_some());
    let text = serde_json::to_string(&rep).unwrap();
    let back: FidelityReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, rep);
}

#[test]
fn mismatched_grids_are_refused() {
    let a = Cohort::new(cohort(Label::Normal, 4, 3), Source::Real, CohortClass::Normal).unwrap();
    let other = MultiLeadRecord::zeros(TimeGrid::new(250.0, 1000).unwrap(), None, 0, Provenance::real());
    let b = Cohort::new(vec![other.clone(), other], Source::Synthetic, CohortClass::Mixed).unwrap();
    assert!(fidelity_report(&a, &b, &ReportOptions::default()).is_err());
    let mixed = vec![a.records()[0].clone(), b.records()[0].clone()];
    assert!(Cohort::new(mixed, Source::Real, CohortClass::Mixed).is_err());
    assert!(Cohort::new(Vec::new(), Source::Real, CohortClass::Mixed).is_err());
}
