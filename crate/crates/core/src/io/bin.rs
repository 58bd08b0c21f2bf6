use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::record::{Label, MultiLeadRecord, Provenance, N_LEADS};

pub const BIN_MAGIC: &[u8; 4] = b"ECGF";
pub const BIN_VERSION: u16 = 1;
pub const BIN_HEADER_LEN: usize = 20;

fn header(n_records: u32, grid: TimeGrid) -> Result<[u8; BIN_HEADER_LEN]> {
    let n_samples = u32::try_from(grid.n_samples()).map_err(|_| Error::invalid("too many samples per lead"))?;
    let mut h = [0u8; BIN_HEADER_LEN];
    h[0..4].copy_from_slice(BIN_MAGIC);
    h[4..6].copy_from_slice(&BIN_VERSION.to_le_bytes());
    h[6..10].copy_from_slice(&n_records.to_le_bytes());
    h[10..12].copy_from_slice(&(N_LEADS as u16).to_le_bytes());
    h[12..16].copy_from_slice(&n_samples.to_le_bytes());
    h[16..20].copy_from_slice(&(grid.sampling_rate() as f32).to_le_bytes());
    Ok(h)
}

fn record_len(n_samples: usize) -> usize {
    1 + 8 + N_LEADS * n_samples * 4
}

fn encode_record(rec: &MultiLeadRecord, buf: &mut Vec<u8>) -> Result<()> {
    let label = rec
        .label
        .ok_or_else(|| Error::invalid("binary records need a label"))?;
    buf.push(label.code());
    buf.extend_from_slice(&rec.seed.to_le_bytes());
    for &v in rec.samples() {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(())
}

/// Streams records into a binary file whose record count is fixed up front.
pub struct BinWriter {
    file: std::io::BufWriter<std::fs::File>,
    path: std::path::PathBuf,
    grid: TimeGrid,
    expected: usize,
    written: usize,
    buf: Vec<u8>,
}

impl BinWriter {
    pub fn create(path: &Path, n_records: usize, grid: TimeGrid) -> Result<Self> {
        let n = u32::try_from(n_records).map_err(|_| Error::invalid("too many records"))?;
        let h = header(n, grid)?;
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut file = std::io::BufWriter::new(file);
        file.write_all(&h).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            file,
            path: path.to_path_buf(),
            grid,
            expected: n_records,
            written: 0,
            buf: Vec::with_capacity(record_len(grid.n_samples())),
        })
    }

    pub fn write_record(&mut self, rec: &MultiLeadRecord) -> Result<()> {
        if rec.grid() != self.grid {
            return Err(Error::invalid("record grid differs from the file header"));
        }
        if self.written == self.expected {
            return Err(Error::invalid("more records than declared in the header"));
        }
        self.buf.clear();
        encode_record(rec, &mut self.buf)?;
        self.file.write_all(&self.buf).map_err(|e| Error::io(&self.path, e))?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        if self.written != self.expected {
            return Err(Error::Length {
                expected: self.expected as u64,
                actual: self.written as u64,
            });
        }
        self.file.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Writes all records to one file. Every record must share a grid and carry a label.
pub fn write_record_bin(records: &[MultiLeadRecord], path: &Path) -> Result<()> {
    let grid = match records.first() {
        Some(r) => r.grid(),
        None => TimeGrid::default(),
    };
    let mut w = BinWriter::create(path, records.len(), grid)?;
    for rec in records {
        w.write_record(rec)?;
    }
    w.finish()
}

fn u16_at(b: &[u8], i: usize) -> u16 {
    u16::from_le_bytes([b[i], b[i + 1]])
}

fn u32_at(b: &[u8], i: usize) -> u32 {
    u32::from_le_bytes(b[i..i + 4].try_into().unwrap())
}

/// Reads a whole binary file. The header and total length are checked before
/// any record is decoded.
pub fn read_record_bin(path: &Path) -> Result<Vec<MultiLeadRecord>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub(crate) fn decode(bytes: &[u8]) -> Result<Vec<MultiLeadRecord>> {
    if bytes.len() < BIN_HEADER_LEN {
        return Err(Error::Length {
            expected: BIN_HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    if &bytes[0..4] != BIN_MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", String::from_utf8_lossy(&bytes[0..4]))));
    }
    let version = u16_at(bytes, 4);
    if version != BIN_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n_records = u32_at(bytes, 6) as usize;
    let n_leads = u16_at(bytes, 10) as usize;
    if n_leads != N_LEADS {
        return Err(Error::Format(format!("expected 12 leads, header says {n_leads}")));
    }
    let n_samples = u32_at(bytes, 12) as usize;
    let rate = f32::from_le_bytes(bytes[16..20].try_into().unwrap()) as f64;
    let expected = BIN_HEADER_LEN as u64 + n_records as u64 * record_len(n_samples) as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::Length {
            expected,
            actual: bytes.len() as u64,
        });
    }
    let grid = TimeGrid::new(rate, n_samples).map_err(|e| Error::Format(e.to_string()))?;

    let mut out = Vec::with_capacity(n_records);
    for chunk in bytes[BIN_HEADER_LEN..].chunks_exact(record_len(n_samples)) {
        let label = Label::from_code(chunk[0]).ok_or_else(|| Error::Format(format!("unknown label code {}", chunk[0])))?;
        let seed = u64::from_le_bytes(chunk[1..9].try_into().unwrap());
        let samples = chunk[9..]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        let rec = MultiLeadRecord::from_samples(grid, samples, Some(label), seed, Provenance::synthetic(None))
            .map_err(|e| Error::Format(e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}
