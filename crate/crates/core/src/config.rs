//! Generation configuration, as read from and written to JSON.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::leads::{default_lead_matrix, LeadMatrix};
use crate::mi::MiConfig;
use crate::noise::NoiseConfig;
use crate::record::Label;
use crate::rhythm::RhythmConfig;
use crate::signal::ParamDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Bin,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "bin" => Ok(Self::Bin),
            other => Err(Error::invalid(format!("unknown format {other:?}, expected csv or bin"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Bin => "bin",
        })
    }
}

/// Number of records to generate per class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassMix {
    #[serde(rename = "Normal")]
    pub normal: usize,
    #[serde(rename = "MI")]
    pub mi: usize,
}

impl Default for ClassMix {
    fn default() -> Self {
        Self { normal: 50, mi: 50 }
    }
}

impl ClassMix {
    pub fn total(&self) -> usize {
        self.normal + self.mi
    }

    pub fn count(&self, label: Label) -> usize {
        match label {
            Label::Normal => self.normal,
            Label::Mi => self.mi,
        }
    }

    /// Label of record `k`: Normal records come first, then MI.
    pub fn label_of(&self, k: usize) -> Label {
        if k < self.normal {
            Label::Normal
        } else {
            Label::Mi
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistributions {
    #[serde(rename = "Normal")]
    pub normal: ParamDistribution,
    #[serde(rename = "MI")]
    pub mi: ParamDistribution,
}

impl Default for ClassDistributions {
    fn default() -> Self {
        Self {
            normal: ParamDistribution::normal(),
            mi: ParamDistribution::mi(),
        }
    }
}

impl ClassDistributions {
    pub fn get(&self, label: Label) -> &ParamDistribution {
        match label {
            Label::Normal => &self.normal,
            Label::Mi => &self.mi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub grid: TimeGrid,
    pub class_mix: ClassMix,
    pub base_seed: u64,
    pub param_distributions: ClassDistributions,
    pub rhythm: RhythmConfig,
    pub mi: MiConfig,
    pub noise: NoiseConfig,
    /// Replaces the built-in lead matrix when present.
    pub lead_matrix: Option<LeadMatrix>,
    pub format: OutputFormat,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            grid: TimeGrid::default(),
            class_mix: ClassMix::default(),
            base_seed: 0,
            param_distributions: ClassDistributions::default(),
            rhythm: RhythmConfig::default(),
            mi: MiConfig::default(),
            noise: NoiseConfig::default(),
            lead_matrix: None,
            format: OutputFormat::Csv,
        }
    }
}

impl GenerationConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        for label in Label::ALL {
            let dist = self.param_distributions.get(label);
            dist.validate()?;
            if dist.label != label {
                return Err(Error::invalid(format!(
                    "param_distributions.{label} is labelled {}",
                    dist.label
                )));
            }
        }
        self.rhythm.validate()?;
        self.mi.validate()?;
        self.noise.validate_for(&self.grid)?;
        if let Some(m) = &self.lead_matrix {
            m.validate()?;
        }
        Ok(())
    }

    pub fn lead_matrix(&self) -> LeadMatrix {
        self.lead_matrix.clone().unwrap_or_else(default_lead_matrix)
    }

    /// Lowercase hex SHA-256 of the compact JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}
