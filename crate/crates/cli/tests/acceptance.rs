//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use synthecg::config::{ClassMix, GenerationConfig};
use synthecg::fidelity::{
    detect_r_peaks, ks_distance, match_peaks, mmd2, mmd2_with_median_bandwidth, psd_welch, Cohort, CohortClass,
    PeakMatch, DEFAULT_OVERLAP, DEFAULT_SEGMENT,
};
use synthecg::io::{read_record_bin, read_record_csv, write_record_bin, write_record_csv};
use synthecg::noise::{add_baseline_wander, add_mains, NoiseConfig};
use synthecg::pipeline::{synthesize, synthesize_nth};
use synthecg::probe::{auroc, bootstrap_auc_ci, extract_features, run_probe, train_probe, DEFAULT_BOOTSTRAP};
use synthecg::rng::child_seed;
use synthecg::{Error, Label, Lead, MultiLeadRecord, SeededRng, Source};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn cohort(label: Label, base: u64, n: usize) -> Vec<MultiLeadRecord> {
    let cfg = GenerationConfig::default();
    (0..n)
        .into_par_iter()
        .map(|k| synthesize(&cfg, label, child_seed(base, k as u64)).unwrap().record)
        .collect()
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn run_generate(config: &Path, out: &Path, threads: usize, format: &str) -> (bool, Duration) {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_synthecg"))
        .args(["generate", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--threads", &threads.to_string(), "--format", format, "--seed", "20240601"])
        .output()
        .unwrap()
        .status;
    (status.success(), start.elapsed())
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = GenerationConfig {
        class_mix: ClassMix { normal: 50, mi: 50 },
        ..GenerationConfig::default()
    };
    let config = tmp.path().join("config.json");
    std::fs::write(&config, cfg.to_json().unwrap()).unwrap();
    let mut notes = Vec::new();
    let mut pass = true;
    for format in ["csv", "bin"] {
        let one = tmp.path().join(format!("{format}_t1"));
        let four = tmp.path().join(format!("{format}_t4"));
        let (ok1, d1) = run_generate(&config, &one, 1, format);
        let (ok4, d4) = run_generate(&config, &four, 4, format);
        let a = dir_contents(&one);
        let identical = ok1 && ok4 && a == dir_contents(&four);
        let manifest: serde_json::Value =
            serde_json::from_slice(&std::fs::read(one.join("manifest.json")).unwrap()).unwrap();
        let listed = manifest["records"].as_array().unwrap().len();
        let on_disk = match format {
            "csv" => a.iter().filter(|(n, _)| n.ends_with(".csv")).count(),
            _ => read_record_bin(&one.join("records.bin")).unwrap().len(),
        };
        let fast = d1 < Duration::from_secs(10) && d4 < Duration::from_secs(10);
        pass &= identical && fast && listed == 100 && on_disk == 100;
        notes.push(format!(
            "{format}: identical={identical} records={on_disk} t1={:.2}s t4={:.2}s",
            d1.as_secs_f64(),
            d4.as_secs_f64()
        ));
    }
    outcome(pass, notes.join("; "))
}

fn lead_algebra() -> Outcome {
    let cfg = GenerationConfig {
        class_mix: ClassMix { normal: 50, mi: 50 },
        ..GenerationConfig::default()
    };
    let worst = (0..100)
        .into_par_iter()
        .map(|k| {
            let p = synthesize_nth(&cfg, k).unwrap().projected;
            let mut worst: f64 = 0.0;
            for t in 0..p.n_samples() {
                let (i, ii) = (p.lead(Lead::I)[t], p.lead(Lead::II)[t]);
                worst = worst
                    .max((p.lead(Lead::III)[t] - (ii - i)).abs())
                    .max((p.lead(Lead::AVR)[t] + (i + ii) / 2.0).abs())
                    .max((p.lead(Lead::AVL)[t] - (i - ii / 2.0)).abs())
                    .max((p.lead(Lead::AVF)[t] - (ii - i / 2.0)).abs());
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    outcome(worst <= 1e-9, format!("max identity residual {worst:.3e} mV over 100 records"))
}

fn st_calibration() -> Outcome {
    let cfg = GenerationConfig::default();
    let results: Vec<(f64, f64, f64)> = (0..100u64)
        .into_par_iter()
        .map(|k| {
            let t = synthesize(&cfg, Label::Mi, child_seed(31, k)).unwrap();
            let h = t.st_height.unwrap();
            let offsets: Vec<f64> = cfg
                .mi
                .affected_leads
                .iter()
                .map(|&l| t.st_offset(l, cfg.mi.st_window).unwrap())
                .collect();
            let lo = offsets.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = offsets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let err = offsets.iter().map(|o| (o - h).abs()).fold(0.0, f64::max);
            (lo, hi, err)
        })
        .collect();
    let lo = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let hi = results.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let err = results.iter().map(|r| r.2).fold(0.0, f64::max);
    outcome(
        lo >= 0.08 && hi <= 0.32 && err <= 0.02,
        format!("offsets in [{lo:.4}, {hi:.4}] mV, max |offset - drawn height| {err:.2e} mV"),
    )
}

fn ks_oracle(x: &[f64], y: &[f64]) -> f64 {
    let (n, m) = (x.len(), y.len());
    let mut d: f64 = 0.0;
    for &z in x.iter().chain(y) {
        let cx = x.iter().filter(|&&v| v <= z).count();
        let cy = y.iter().filter(|&&v| v <= z).count();
        d = d.max((cx as f64 / n as f64 - cy as f64 / m as f64).abs());
    }
    d
}

fn auroc_oracle(s: &[f64], y: &[bool]) -> f64 {
    let (mut hits, mut pairs) = (0.0, 0usize);
    for i in (0..s.len()).filter(|&i| y[i]) {
        for j in (0..s.len()).filter(|&j| !y[j]) {
            pairs += 1;
            if s[i] > s[j] {
                hits += 1.0;
            } else if s[i] == s[j] {
                hits += 0.5;
            }
        }
    }
    hits / pairs as f64
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let draw = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
        if rng.random_bool(0.5) {
            (0..n).map(|_| rng.random_range(0..6) as f64).collect()
        } else {
            (0..n).map(|_| rng.random::<f64>()).collect()
        }
    };
    let mut ks_ok = 0;
    for _ in 0..1000 {
        let (n, m) = (rng.random_range(1..=25), rng.random_range(1..=25));
        let (x, y) = (draw(&mut rng, n), draw(&mut rng, m));
        ks_ok += (ks_distance(&x, &y).unwrap() == ks_oracle(&x, &y)) as usize;
    }
    let mut auc_ok = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=50);
        let mut y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        y[0] = true;
        y[1] = false;
        let s = draw(&mut rng, n);
        auc_ok += (auroc(&s, &y).unwrap() == auroc_oracle(&s, &y)) as usize;
    }
    let m = mmd2(&[vec![0.0]], &[vec![1.0]], 1.0).unwrap();
    let err = (m - (2.0 - 2.0 * (-0.5f64).exp())).abs();
    outcome(
        ks_ok == 1000 && auc_ok == 1000 && err <= 1e-12,
        format!("ks exact {ks_ok}/1000, auroc exact {auc_ok}/1000, mmd2 two-point error {err:.1e}"),
    )
}

/// One-sided binomial tail `P(X >= k)` for `X ~ Bin(n, 1/2)`.
fn sign_test_p(k: usize, n: usize) -> f64 {
    let mut total = 0.0;
    for i in k..=n {
        let mut c = 1.0;
        for j in 0..i {
            c = c * (n - j) as f64 / (j + 1) as f64;
        }
        total += c;
    }
    total / 2f64.powi(n as i32)
}

fn gaussian_cohort(rng: &mut ChaCha8Rng, n: usize, dim: usize, shift: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| shift + rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

fn mmd_properties() -> Outcome {
    let x: Vec<Vec<f64>> = cohort(Label::Normal, 50, 30).iter().map(synthecg::fidelity::flatten).collect();
    let y: Vec<Vec<f64>> = cohort(Label::Mi, 51, 30).iter().map(synthecg::fidelity::flatten).collect();
    let (self_mmd, _) = mmd2_with_median_bandwidth(&x, &x).unwrap();
    let symmetric = mmd2_with_median_bandwidth(&x, &y).unwrap() == mmd2_with_median_bandwidth(&y, &x).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut wins = 0;
    let mut self_small = self_mmd.abs() < 1e-12;
    for _ in 0..50 {
        let a = gaussian_cohort(&mut rng, 30, 8, 0.0);
        let b = gaussian_cohort(&mut rng, 30, 8, 0.0);
        let near: Vec<Vec<f64>> = b.iter().map(|v| v.iter().map(|x| x + 0.25).collect()).collect();
        let far: Vec<Vec<f64>> = b.iter().map(|v| v.iter().map(|x| x + 0.75).collect()).collect();
        let bw = 4.0;
        wins += (mmd2(&a, &far, bw).unwrap() > mmd2(&a, &near, bw).unwrap()) as usize;
        self_small &= mmd2(&a, &a, bw).unwrap().abs() < 1e-12;
    }
    let p = sign_test_p(wins, 50);
    outcome(
        self_small && symmetric && p < 0.01,
        format!("self mmd2 {self_mmd:.1e}, symmetric={symmetric}, larger shift wins {wins}/50 (sign test p={p:.2e})"),
    )
}

fn cohort_coherence() -> Outcome {
    let start = Instant::now();
    let mut wins = 0;
    let mut intra_sum = 0.0;
    let mut inter_sum = 0.0;
    for trial in 0..100u64 {
        let root = child_seed(6_000, trial);
        let a = Cohort::new(cohort(Label::Normal, child_seed(root, 0), 200), Source::Synthetic, CohortClass::Normal).unwrap();
        let b = Cohort::new(cohort(Label::Normal, child_seed(root, 1), 200), Source::Synthetic, CohortClass::Normal).unwrap();
        let c = Cohort::new(cohort(Label::Mi, child_seed(root, 2), 200), Source::Synthetic, CohortClass::Mi).unwrap();
        let sa = a.sorted_values();
        let intra = synthecg::fidelity::ks_distance_sorted(&sa, &b.sorted_values());
        let inter = synthecg::fidelity::ks_distance_sorted(&sa, &c.sorted_values());
        intra_sum += intra;
        inter_sum += inter;
        wins += (intra < inter) as usize;
    }
    outcome(
        wins >= 95,
        format!(
            "intra < inter in {wins}/100 trials (mean intra {:.4}, inter {:.4}; {:.0}s)",
            intra_sum / 100.0,
            inter_sum / 100.0,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn r_peak_detector() -> Outcome {
    let cfg = GenerationConfig::default();
    let fade = (cfg.noise.fade_duration * cfg.grid.sampling_rate()).ceil() as usize;
    let (clean, noisy) = (0..500u64)
        .into_par_iter()
        .map(|k| {
            let label = if k % 2 == 0 { Label::Normal } else { Label::Mi };
            let t = synthesize(&cfg, label, child_seed(70, k)).unwrap();
            let grid = t.record.grid();
            let n = grid.n_samples();
            let c = match_peaks(&detect_r_peaks(t.projected.lead(Lead::II), grid), &t.r_peaks, 1, 0..n);
            let d = match_peaks(
                &detect_r_peaks(t.record.lead(Lead::II), grid),
                &t.lead_r_peaks(Lead::II),
                5,
                fade..n - 25,
            );
            (c, d)
        })
        .reduce(
            || (PeakMatch::default(), PeakMatch::default()),
            |mut a, b| {
                a.0 += b.0;
                a.1 += b.1;
                a
            },
        );
    outcome(
        clean.recall() >= 0.95 && clean.precision() >= 0.95 && noisy.recall() >= 0.90 && noisy.precision() >= 0.90,
        format!(
            "clean recall {:.4} precision {:.4}; noisy recall {:.4} precision {:.4} (500 records)",
            clean.recall(),
            clean.precision(),
            noisy.recall(),
            noisy.precision()
        ),
    )
}

fn separability() -> Outcome {
    let start = Instant::now();
    let mut train = cohort(Label::Normal, 81, 200);
    train.extend(cohort(Label::Mi, 82, 200));
    let mut test = cohort(Label::Normal, 83, 100);
    test.extend(cohort(Label::Mi, 84, 100));
    let rep = run_probe(&train, &test, DEFAULT_BOOTSTRAP, 8).unwrap();
    let elapsed = start.elapsed();

    let feats = |recs: &[MultiLeadRecord]| -> Vec<Vec<f64>> { recs.par_iter().map(|r| extract_features(r).values).collect() };
    let x = feats(&train);
    let x_test = feats(&test);
    let y: Vec<bool> = train.iter().map(|r| r.label == Some(Label::Mi)).collect();
    let y_test: Vec<bool> = test.iter().map(|r| r.label == Some(Label::Mi)).collect();
    let controls: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|k| {
            let mut shuffled = y.clone();
            shuffled.shuffle(&mut SeededRng::new(child_seed(88, k)));
            let model = train_probe(&x, &shuffled, 0.1, 500, &mut SeededRng::new(k)).unwrap();
            let scores: Vec<f64> = x_test.iter().map(|v| model.score(v)).collect();
            auroc(&scores, &y_test).unwrap()
        })
        .collect();
    let permuted = controls.iter().sum::<f64>() / controls.len() as f64;
    let lo = controls.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = controls.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    outcome(
        rep.test_auc >= 0.95 && elapsed < Duration::from_secs(60) && (0.4..=0.6).contains(&permuted),
        format!(
            "held-out AUC {:.4} in {:.1}s; permuted-label AUC {permuted:.4} (mean of 20 permutations, range {lo:.3}-{hi:.3})",
            rep.test_auc,
            elapsed.as_secs_f64()
        ),
    )
}

fn score_sample(rng: &mut ChaCha8Rng, per_class: usize) -> (Vec<f64>, Vec<bool>) {
    let mut s = Vec::with_capacity(2 * per_class);
    let mut y = Vec::with_capacity(2 * per_class);
    for k in 0..2 * per_class {
        let pos = k >= per_class;
        let z: f64 = rng.sample(StandardNormal);
        s.push(z + if pos { 1.0 } else { 0.0 });
        y.push(pos);
    }
    (s, y)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn bootstrap() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut contains = 0;
    for trial in 0..100u64 {
        let (s, y) = score_sample(&mut rng, 50);
        let ci = bootstrap_auc_ci(&s, &y, DEFAULT_BOOTSTRAP, 0.95, &SeededRng::new(trial)).unwrap();
        contains += ci.contains_point() as usize;
    }
    let mut small = Vec::new();
    let mut large = Vec::new();
    for trial in 0..20u64 {
        let (s, y) = score_sample(&mut rng, 50);
        small.push(bootstrap_auc_ci(&s, &y, DEFAULT_BOOTSTRAP, 0.95, &SeededRng::new(1000 + trial)).unwrap().width());
        let (s, y) = score_sample(&mut rng, 200);
        large.push(bootstrap_auc_ci(&s, &y, DEFAULT_BOOTSTRAP, 0.95, &SeededRng::new(2000 + trial)).unwrap().width());
    }
    let ratio = median(small) / median(large);
    outcome(
        DEFAULT_BOOTSTRAP == 1000 && contains == 100 && (1.5..=2.5).contains(&ratio),
        format!("n_resamples {DEFAULT_BOOTSTRAP}, point inside CI {contains}/100, width ratio 100->400 {ratio:.3}"),
    )
}

fn spectral_checks() -> Outcome {
    let cfg = GenerationConfig::default();
    let noise = NoiseConfig {
        mains_freq: 60.0,
        ..NoiseConfig::default()
    };
    let errs: Vec<(f64, f64)> = (0..50u64)
        .into_par_iter()
        .map(|k| {
            let label = if k % 2 == 0 { Label::Normal } else { Label::Mi };
            let t = synthesize(&cfg, label, child_seed(100, k)).unwrap();
            let base = &t.pre_noise;
            let grid = base.grid();
            let n = grid.n_samples();
            let wander = add_baseline_wander(base, &noise, &mut SeededRng::new(k));
            let mains = add_mains(base, &noise, &mut SeededRng::new(k + 1000));
            let mut worst = (0.0f64, 0.0f64);
            for lead in Lead::ALL {
                let d: Vec<f64> = wander.lead(lead).iter().zip(base.lead(lead)).map(|(a, b)| a - b).collect();
                let f = psd_welch(&d, grid, n, 0.0).unwrap().peak_frequency();
                worst.0 = worst.0.max((f - 0.2).abs());
                let d: Vec<f64> = mains.lead(lead).iter().zip(base.lead(lead)).map(|(a, b)| a - b).collect();
                let f = psd_welch(&d, grid, DEFAULT_SEGMENT, DEFAULT_OVERLAP).unwrap().peak_frequency();
                worst.1 = worst.1.max((f - 40.0).abs());
            }
            worst
        })
        .collect();
    let w = errs.iter().map(|e| e.0).fold(0.0, f64::max);
    let m = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    outcome(
        w <= 0.5 && m <= 0.5,
        format!("max peak error: wander {w:.3} Hz from 0.2, mains {m:.3} Hz from 40 (50 records x 12 leads)"),
    )
}

fn formats() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let recs: Vec<MultiLeadRecord> = (0..20).map(|k| synthesize_nth(&GenerationConfig::default(), k).unwrap().record).collect();
    let mut csv_err: f64 = 0.0;
    for (k, rec) in recs.iter().enumerate() {
        let path = tmp.path().join(format!("{k}.csv"));
        write_record_csv(rec, &path).unwrap();
        let back = read_record_csv(&path).unwrap();
        for (a, b) in rec.samples().iter().zip(back.samples()) {
            csv_err = csv_err.max((a - b).abs());
        }
    }
    let bin = tmp.path().join("r.bin");
    write_record_bin(&recs, &bin).unwrap();
    let back = read_record_bin(&bin).unwrap();
    let bit_exact = back.len() == recs.len()
        && recs.iter().zip(&back).all(|(a, b)| {
            a.label == b.label
                && a.seed == b.seed
                && a.samples().iter().zip(b.samples()).all(|(x, y)| (*x as f32).to_bits() == (*y as f32).to_bits())
        });
    let mut bytes = std::fs::read(&bin).unwrap();
    bytes[..4].copy_from_slice(b"XXXX");
    let bad = tmp.path().join("bad.bin");
    std::fs::write(&bad, &bytes).unwrap();
    let rejected = matches!(read_record_bin(&bad), Err(Error::Format(_)));
    outcome(
        csv_err <= 1e-5 && bit_exact && rejected,
        format!("csv max error {csv_err:.2e} mV, binary bit-exact={bit_exact}, bad magic rejected={rejected}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("determinism", determinism),
        ("lead algebra", lead_algebra),
        ("ST elevation calibration", st_calibration),
        ("metric oracles", metric_oracles),
        ("MMD properties", mmd_properties),
        ("cohort coherence", cohort_coherence),
        ("R-peak detector", r_peak_detector),
        ("separability surrogate", separability),
        ("bootstrap", bootstrap),
        ("spectral checks", spectral_checks),
        ("formats", formats),
    ];
    // optional criterion numbers after `--` select a subset
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(k + 1)) {
            continue;
        }
        let r = check();
        println!("{} [{:>2}] {name}: {}", if r.pass { "PASS" } else { "FAIL" }, k + 1, r.detail);
        failed += (!r.pass) as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
