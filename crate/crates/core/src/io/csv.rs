use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::record::{Lead, MultiLeadRecord, Provenance, N_LEADS};

pub const CSV_HEADER: [&str; 13] = [
    "time", "I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6",
];

/// `%g`-style formatting with six significant digits.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    }
}

pub fn write_record_csv(rec: &MultiLeadRecord, path: &Path) -> Result<()> {
    let grid = rec.grid();
    let mut out = String::with_capacity(grid.n_samples() * 13 * 10);
    out.push_str(&CSV_HEADER.join(","));
    out.push('\n');
    for k in 0..grid.n_samples() {
        out.push_str(&format!("{:.4}", grid.time(k)));
        for lead in Lead::ALL {
            out.push(',');
            out.push_str(&format_sig6(rec.lead(lead)[k]));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn parse_err(row: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        message: message.into(),
    }
}

/// Reads a record; the result is unlabeled with `Source::Real`.
///
/// Row numbers in errors are 1-based file lines (the header is row 1).
pub fn read_record_csv(path: &Path) -> Result<MultiLeadRecord> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(::csv::Trim::All)
        .from_reader(file);
    let mut rows = reader.records();
    let header = match rows.next() {
        Some(h) => h.map_err(|e| parse_err(1, e.to_string()))?,
        None => return Err(parse_err(1, "empty file")),
    };
    let got: Vec<&str> = header.iter().collect();
    if got != CSV_HEADER {
        return Err(parse_err(1, format!("expected header {}, got {}", CSV_HEADER.join(","), got.join(","))));
    }

    let mut times = Vec::new();
    let mut leads: Vec<Vec<f64>> = vec![Vec::new(); N_LEADS];
    for (i, row) in rows.enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| parse_err(line, e.to_string()))?;
        if row.len() != CSV_HEADER.len() {
            return Err(parse_err(line, format!("expected {} fields, got {}", CSV_HEADER.len(), row.len())));
        }
        for (col, cell) in row.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(line, format!("column {}: {cell:?} is not a number", CSV_HEADER[col])))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column {}: non-finite value", CSV_HEADER[col])));
            }
            if col == 0 {
                times.push(v);
            } else {
                leads[col - 1].push(v);
            }
        }
    }
    let grid = infer_grid(&times)?;
    let samples = leads.concat();
    MultiLeadRecord::from_samples(grid, samples, None, 0, Provenance::real())
}

/// Sampling rate from the time column, snapped to an integer rate when the
/// 4-decimal rounding is the only discrepancy.
fn infer_grid(times: &[f64]) -> Result<TimeGrid> {
    let n = times.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let span = times[n - 1] - times[0];
    if span <= 0.0 {
        return Err(parse_err(n as u64 + 1, "time column must increase"));
    }
    let raw = (n - 1) as f64 / span;
    let snapped = raw.round();
    let rate = if (raw - snapped).abs() <= 1e-3 * raw { snapped } else { raw };
    let tol = 1e-4 + 1e-9 * times[n - 1].abs();
    for (k, &t) in times.iter().enumerate() {
        if (t - (times[0] + k as f64 / rate)).abs() > tol {
            return Err(parse_err(k as u64 + 2, format!("time {t} breaks uniform sampling at {rate} Hz")));
        }
    }
    TimeGrid::new(rate, n)
}
