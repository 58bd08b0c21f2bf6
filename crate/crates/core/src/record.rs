use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

pub const N_LEADS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Normal,
    #[serde(rename = "MI")]
    Mi,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Normal, Label::Mi];

    pub fn code(self) -> u8 {
        match self {
            Label::Normal => 0,
            Label::Mi => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Label::Normal),
            1 => Some(Label::Mi),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Normal => "Normal",
            Label::Mi => "MI",
        })
    }
}

/// Standard 12-lead order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Lead {
    I,
    II,
    III,
    #[serde(rename = "aVR")]
    AVR,
    #[serde(rename = "aVL")]
    AVL,
    #[serde(rename = "aVF")]
    AVF,
    V1,
    V2,
    V3,
    V4,
    V5,
    V6,
}

impl Lead {
    pub const ALL: [Lead; N_LEADS] = [
        Lead::I,
        Lead::II,
        Lead::III,
        Lead::AVR,
        Lead::AVL,
        Lead::AVF,
        Lead::V1,
        Lead::V2,
        Lead::V3,
        Lead::V4,
        Lead::V5,
        Lead::V6,
    ];

    pub const PRECORDIAL: [Lead; 6] = [Lead::V1, Lead::V2, Lead::V3, Lead::V4, Lead::V5, Lead::V6];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Lead::I => "I",
            Lead::II => "II",
            Lead::III => "III",
            Lead::AVR => "aVR",
            Lead::AVL => "aVL",
            Lead::AVF => "aVF",
            Lead::V1 => "V1",
            Lead::V2 => "V2",
            Lead::V3 => "V3",
            Lead::V4 => "V4",
            Lead::V5 => "V5",
            Lead::V6 => "V6",
        }
    }
}

impl fmt::Display for Lead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Lead {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Lead::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown lead {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    Real,
    Synthetic,
}

/// Conditions recorded while a record was produced or loaded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// An ST window ran past the end of the record and was cut short.
    StWindowTruncated,
    /// T-wave inversion was decided once for the whole record.
    TInversionPerRecord,
    /// A lead had no variation left to normalize and was left at zero.
    FlatLead,
    /// The RR series had no spectral content to shape.
    RhythmUnshaped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Source,
    /// Content hash of the generation config, for synthetic records.
    pub config_digest: Option<String>,
    pub flags: BTreeSet<Flag>,
}

impl Provenance {
    pub fn synthetic(config_digest: Option<String>) -> Self {
        Self {
            source: Source::Synthetic,
            config_digest,
            flags: BTreeSet::new(),
        }
    }

    pub fn real() -> Self {
        Self {
            source: Source::Real,
            config_digest: None,
            flags: BTreeSet::new(),
        }
    }
}

/// Twelve leads on a shared grid, stored lead-major in millivolts.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLeadRecord {
    grid: TimeGrid,
    samples: Vec<f64>,
    pub label: Option<Label>,
    pub seed: u64,
    pub provenance: Provenance,
}

impl MultiLeadRecord {
    pub fn zeros(grid: TimeGrid, label: Option<Label>, seed: u64, provenance: Provenance) -> Self {
        Self {
            grid,
            samples: vec![0.0; N_LEADS * grid.n_samples()],
            label,
            seed,
            provenance,
        }
    }

    /// Builds a record from lead-major samples; all values must be finite.
    pub fn from_samples(
        grid: TimeGrid,
        samples: Vec<f64>,
        label: Option<Label>,
        seed: u64,
        provenance: Provenance,
    ) -> Result<Self> {
        let expected = N_LEADS * grid.n_samples();
        if samples.len() != expected {
            return Err(Error::invalid(format!(
                "expected {expected} samples for 12 leads, got {}",
                samples.len()
            )));
        }
        if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite sample in lead {} at index {}",
                Lead::ALL[pos / grid.n_samples()],
                pos % grid.n_samples()
            )));
        }
        Ok(Self {
            grid,
            samples,
            label,
            seed,
            provenance,
        })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn n_samples(&self) -> usize {
        self.grid.n_samples()
    }

    pub fn lead(&self, lead: Lead) -> &[f64] {
        let n = self.n_samples();
        &self.samples[lead.index() * n..(lead.index() + 1) * n]
    }

    pub fn lead_mut(&mut self, lead: Lead) -> &mut [f64] {
        let n = self.n_samples();
        &mut self.samples[lead.index() * n..(lead.index() + 1) * n]
    }

    pub fn leads(&self) -> impl Iterator<Item = (Lead, &[f64])> {
        Lead::ALL.into_iter().zip(self.samples.chunks_exact(self.n_samples()))
    }

    pub fn leads_mut(&mut self) -> impl Iterator<Item = (Lead, &mut [f64])> {
        let n = self.n_samples();
        Lead::ALL.into_iter().zip(self.samples.chunks_exact_mut(n))
    }

    /// All samples, lead-major.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    /// Pointwise `self - other`, lead-major.
    pub fn difference(&self, other: &MultiLeadRecord) -> Result<Vec<f64>> {
        if self.grid != other.grid {
            return Err(Error::invalid("records are on different grids"));
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a - b)
            .collect())
    }
}
