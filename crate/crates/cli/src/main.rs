//! `synthecg` command-line interface.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use synthecg::config::{GenerationConfig, OutputFormat};
use synthecg::fidelity::{ecdf_table, fidelity_report, psd_welch, Cohort, CohortClass, ReportOptions, DEFAULT_OVERLAP, DEFAULT_SEGMENT};
use synthecg::io::{load_records, read_record_bin, read_record_csv};
use synthecg::pipeline::generate_dataset;
use synthecg::probe::{extract_features, run_probe, DEFAULT_BOOTSTRAP};
use synthecg::{Label, Lead, MultiLeadRecord, Source};

#[derive(Parser)]
#[command(name = "synthecg", version, about = "Synthetic 12-lead ECG generation and validation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset from a JSON config.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Sets the record count of every class to N.
        #[arg(long, value_name = "N")]
        count_override: Option<usize>,
        /// Replaces the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_format)]
        format: Option<OutputFormat>,
        #[arg(long, value_name = "T")]
        threads: Option<usize>,
    },
    /// Compare a real and a synthetic record directory.
    Validate {
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        synthetic: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Keep per-lead detail in the report.
        #[arg(long)]
        per_lead: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train the feature probe on one directory and score another.
    Probe {
        #[arg(long)]
        train_dir: PathBuf,
        #[arg(long)]
        test_dir: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BOOTSTRAP)]
        bootstrap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the test-set feature matrix as CSV.
        #[arg(long)]
        emit_features: Option<PathBuf>,
    },
    /// Summarize one lead of a record file.
    Inspect {
        #[arg(long)]
        record: PathBuf,
        #[arg(long)]
        lead: Lead,
        /// Record position inside a binary file.
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long)]
        emit_psd: Option<PathBuf>,
        #[arg(long)]
        emit_ecdf: Option<PathBuf>,
    },
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: synthecg::Error| e.to_string())
}

enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

type Outcome = Result<(), Failure>;

trait OrData<T> {
    fn data(self) -> Result<T, Failure>;
    fn usage(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrData<T> for Result<T, E> {
    fn data(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Data(e.into()))
    }

    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .data()
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Failure::Usage(anyhow!("--threads must be at least 1"))),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().data()?;
            Ok(pool.install(f))
        }
    }
}

fn generate(
    config: &Path,
    out: &Path,
    count_override: Option<usize>,
    seed: Option<u64>,
    format: Option<OutputFormat>,
    threads: Option<usize>,
) -> Outcome {
    let mut cfg = GenerationConfig::load(config)
        .with_context(|| format!("loading config {}", config.display()))
        .usage()?;
    if let Some(n) = count_override {
        cfg.class_mix.normal = n;
        cfg.class_mix.mi = n;
    }
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(f) = format {
        cfg.format = f;
    }
    let manifest = with_threads(threads, || generate_dataset(&cfg, out))?.data()?;
    println!(
        "wrote {} records to {} (config {})",
        manifest.records.len(),
        out.display(),
        &manifest.config_digest[..12]
    );
    Ok(())
}

fn load_dir(dir: &Path) -> Result<Vec<MultiLeadRecord>, Failure> {
    if !dir.is_dir() {
        return Err(Failure::Usage(anyhow!("{} is not a directory", dir.display())));
    }
    let records = load_records(dir)
        .with_context(|| format!("loading records from {}", dir.display()))
        .data()?;
    if records.is_empty() {
        return Err(Failure::Data(anyhow!("no records in {}", dir.display())));
    }
    Ok(records)
}

fn class_of(records: &[MultiLeadRecord]) -> CohortClass {
    let first = records[0].label;
    if records.iter().any(|r| r.label != first) {
        return CohortClass::Mixed;
    }
    match first {
        Some(Label::Normal) => CohortClass::Normal,
        Some(Label::Mi) => CohortClass::Mi,
        None => CohortClass::Mixed,
    }
}

/// Drops per-lead arrays, keeping scalar summaries.
fn strip_per_lead(v: &mut Value) {
    if let Value::Object(map) = v {
        map.remove("per_lead");
        map.remove("feature_stats_real");
        map.remove("feature_stats_synthetic");
        map.remove("real_band_power");
        map.remove("synthetic_band_power");
        for child in map.values_mut() {
            strip_per_lead(child);
        }
    }
}

fn validate(real: &Path, synthetic: &Path, report: &Path, per_lead: bool, seed: u64) -> Outcome {
    let real = load_dir(real)?;
    let synth = load_dir(synthetic)?;
    let real_class = class_of(&real);
    let synth_class = class_of(&synth);
    let real = Cohort::new(real, Source::Real, real_class).data()?;
    let synth = Cohort::new(synth, Source::Synthetic, synth_class).data()?;
    let opts = ReportOptions {
        seed,
        ..ReportOptions::default()
    };
    let rep = fidelity_report(&real, &synth, &opts).data()?;
    let mut doc = serde_json::to_value(&rep).data()?;
    if !per_lead {
        strip_per_lead(&mut doc);
    }
    write_file(report, &serde_json::to_string_pretty(&doc).data()?)?;
    println!("mmd2 {:.6e}  ks_flat {:.4}", rep.mmd2, rep.ks_flat);
    Ok(())
}

fn probe(
    train_dir: &Path,
    test_dir: &Path,
    report: &Path,
    bootstrap: usize,
    seed: u64,
    emit_features: Option<&Path>,
) -> Outcome {
    if bootstrap == 0 {
        return Err(Failure::Usage(anyhow!("--bootstrap must be at least 1")));
    }
    let train = load_dir(train_dir)?;
    let test = load_dir(test_dir)?;
    let rep = run_probe(&train, &test, bootstrap, seed).data()?;
    write_file(report, &serde_json::to_string_pretty(&rep).data()?)?;
    if let Some(path) = emit_features {
        let mut text = String::from("label,");
        text.push_str(&synthecg::probe::feature_names().join(","));
        text.push('\n');
        for rec in &test {
            let f = extract_features(rec);
            text.push_str(&f.label.map_or(String::new(), |l| l.to_string()));
            for v in f.values {
                text.push_str(&format!(",{v}"));
            }
            text.push('\n');
        }
        write_file(path, &text)?;
    }
    println!(
        "test AUC {:.4} (95% CI {:.4}-{:.4}, {} resamples)",
        rep.test_auc, rep.ci.low, rep.ci.high, rep.ci.n_resamples
    );
    Ok(())
}

fn read_single(path: &Path, index: usize) -> Result<MultiLeadRecord, Failure> {
    if path.extension().is_some_and(|e| e == "bin") {
        let mut records = read_record_bin(path).data()?;
        if index >= records.len() {
            return Err(Failure::Usage(anyhow!("--index {index} but file holds {} records", records.len())));
        }
        Ok(records.swap_remove(index))
    } else {
        read_record_csv(path).data()
    }
}

fn inspect(record: &Path, lead: Lead, index: usize, emit_psd: Option<&Path>, emit_ecdf: Option<&Path>) -> Outcome {
    let rec = read_single(record, index)?;
    let grid = rec.grid();
    let trace = rec.lead(lead);
    let features = synthecg::fidelity::basic_features(&rec);
    let lf = features.lead(lead);
    let psd = psd_welch(trace, grid, DEFAULT_SEGMENT.min(grid.n_samples()), DEFAULT_OVERLAP).data()?;
    let summary = json!({
        "lead": lead.to_string(),
        "sampling_rate": grid.sampling_rate(),
        "n_samples": grid.n_samples(),
        "label": rec.label,
        "n_r_peaks": features.r_peaks.len(),
        "mean": lf.mean,
        "sd": lf.sd,
        "peak_to_peak": lf.peak_to_peak,
        "st_level": lf.st_level,
        "qrs_width": lf.qrs_width,
        "t_amplitude": lf.t_amplitude,
        "clinical_band_power": psd.clinical_band_power(),
        "peak_frequency": psd.peak_frequency(),
    });
    println!("{}", serde_json::to_string_pretty(&summary).data()?);
    if let Some(path) = emit_psd {
        let mut text = String::from("frequency_hz,power_mv2_per_hz\n");
        for (f, p) in psd.freqs.iter().zip(&psd.power) {
            text.push_str(&format!("{f},{p}\n"));
        }
        write_file(path, &text)?;
    }
    if let Some(path) = emit_ecdf {
        let mut text = String::from("value_mv,cdf\n");
        for (v, c) in ecdf_table(trace).data()? {
            text.push_str(&format!("{v},{c}\n"));
        }
        write_file(path, &text)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Generate {
            config,
            out,
            count_override,
            seed,
            format,
            threads,
        } => generate(&config, &out, count_override, seed, format, threads),
        Command::Validate {
            real,
            synthetic,
            report,
            per_lead,
            seed,
        } => validate(&real, &synthetic, &report, per_lead, seed),
        Command::Probe {
            train_dir,
            test_dir,
            report,
            bootstrap,
            seed,
            emit_features,
        } => probe(&train_dir, &test_dir, &report, bootstrap, seed, emit_features.as_deref()),
        Command::Inspect {
            record,
            lead,
            index,
            emit_psd,
            emit_ecdf,
        } => inspect(&record, lead, index, emit_psd.as_deref(), emit_ecdf.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
