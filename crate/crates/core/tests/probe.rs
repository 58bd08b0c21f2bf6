use rand::seq::SliceRandom;
use rayon::prelude::*;

use synthecg::config::GenerationConfig;
use synthecg::noise::NoiseConfig;
use synthecg::pipeline::synthesize;
use synthecg::probe::{auroc, extract_features, train_probe, FEATURES_PER_LEAD, N_FEATURES};
use synthecg::rng::child_seed;
use synthecg::{Label, Lead, MultiLeadRecord, Provenance, SeededRng};

#[test]
fn all_zero_record_gives_zero_features() {
    let rec = MultiLeadRecord::zeros(Default::default(), None, 0, Provenance::real());
    let f = extract_features(&rec);
    assert_eq!(f.values.len(), N_FEATURES);
    assert!(f.values.iter().all(|&v| v == 0.0));
}

#[test]
fn clean_normal_r_amplitude_matches_configuration() {
    let cfg = GenerationConfig {
        noise: NoiseConfig::silent(),
        ..GenerationConfig::default()
    };
    let r = cfg.param_distributions.normal.waves.r.amplitude;
    for seed in 0..20 {
        let t = synthesize(&cfg, Label::Normal, seed).unwrap();
        let f = extract_features(&t.record);
        // lead II carries the R component with unit gain
        let amp = f.values[Lead::II.index() * FEATURES_PER_LEAD];
        assert!((amp - r.mean).abs() <= 3.0 * r.sd, "seed {seed}: {amp}");
    }
}

#[test]
fn st_feature_rises_against_pre_mi_twin() {
    let cfg = GenerationConfig::default();
    for seed in 0..10 {
        let t = synthesize(&cfg, Label::Mi, seed).unwrap();
        let mi = extract_features(&t.st_elevated).values;
        let twin = extract_features(&t.projected).values;
        for &lead in &cfg.mi.affected_leads {
            let k = lead.index() * FEATURES_PER_LEAD + 1;
            assert!(mi[k] > twin[k], "seed {seed} {lead}");
        }
    }
}

fn features(label: Label, base: u64, n: usize) -> Vec<Vec<f64>> {
    let cfg = GenerationConfig::default();
    (0..n)
        .into_par_iter()
        .map(|k| extract_features(&synthesize(&cfg, label, child_seed(base, k as u64)).unwrap().record).values)
        .collect()
}

#[test]
fn permuted_labels_give_chance_auc() {
    let mut x = features(Label::Normal, 1, 100);
    x.extend(features(Label::Mi, 2, 100));
    let mut test = features(Label::Normal, 3, 100);
    test.extend(features(Label::Mi, 4, 100));
    let y: Vec<bool> = (0..200).map(|k| k >= 100).collect();
    let mut aucs = Vec::new();
    for k in 0..10 {
        let mut shuffled = y.clone();
        shuffled.shuffle(&mut SeededRng::new(k));
        let model = train_probe(&x, &shuffled, 0.1, 300, &mut SeededRng::new(k)).unwrap();
        assert!(model.loss_history.windows(2).all(|w| w[1] <= w[0]));
        let scores: Vec<f64> = test.iter().map(|v| model.score(v)).collect();
        aucs.push(auroc(&scores, &y).unwrap());
    }
    let auc = aucs.iter().sum::<f64>() / aucs.len() as f64;
    assert!((auc - 0.5).abs() <= 0.1, "{auc}");
}
