//! Wave-component to 12-lead projection.
//!
//! Each lead is a fixed linear combination of the five wave components. Only
//! leads I and II and the six precordial rows are free; III and the augmented
//! limb leads follow from the Einthoven and Goldberger relations, so projected
//! records satisfy those relations at every sample.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{Lead, MultiLeadRecord, Provenance, N_LEADS};
use crate::signal::{SourceRecord, Wave};

pub const N_WAVES: usize = 5;
pub const MAX_GAIN: f64 = 3.0;
const IDENTITY_TOL: f64 = 1e-12;

/// 12 x 5 gains; rows in [`Lead::ALL`] order, columns P, Q, R, S, T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct LeadMatrix {
    rows: [[f64; N_WAVES]; N_LEADS],
}

impl TryFrom<Vec<Vec<f64>>> for LeadMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        LeadMatrix::from_rows(&rows)
    }
}

impl From<LeadMatrix> for Vec<Vec<f64>> {
    fn from(m: LeadMatrix) -> Self {
        m.rows.iter().map(|r| r.to_vec()).collect()
    }
}

fn combine(a: &[f64; N_WAVES], b: &[f64; N_WAVES], ca: f64, cb: f64) -> [f64; N_WAVES] {
    std::array::from_fn(|w| ca * a[w] + cb * b[w])
}

impl LeadMatrix {
    /// Builds the full matrix from the free rows.
    pub fn from_free_rows(
        lead_i: [f64; N_WAVES],
        lead_ii: [f64; N_WAVES],
        precordial: [[f64; N_WAVES]; 6],
    ) -> Result<Self> {
        let mut rows = [[0.0; N_WAVES]; N_LEADS];
        rows[Lead::I.index()] = lead_i;
        rows[Lead::II.index()] = lead_ii;
        rows[Lead::III.index()] = combine(&lead_ii, &lead_i, 1.0, -1.0);
        rows[Lead::AVR.index()] = combine(&lead_i, &lead_ii, -0.5, -0.5);
        rows[Lead::AVL.index()] = combine(&lead_i, &lead_ii, 1.0, -0.5);
        rows[Lead::AVF.index()] = combine(&lead_ii, &lead_i, 1.0, -0.5);
        rows[Lead::V1.index()..].copy_from_slice(&precordial);
        let m = Self { rows };
        m.validate()?;
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != N_LEADS || rows.iter().any(|r| r.len() != N_WAVES) {
            return Err(Error::invalid(format!(
                "lead matrix must be {N_LEADS}x{N_WAVES}, got {} rows",
                rows.len()
            )));
        }
        let mut out = [[0.0; N_WAVES]; N_LEADS];
        for (dst, src) in out.iter_mut().zip(rows) {
            dst.copy_from_slice(src);
        }
        let m = Self { rows: out };
        m.validate()?;
        Ok(m)
    }

    pub fn row(&self, lead: Lead) -> &[f64; N_WAVES] {
        &self.rows[lead.index()]
    }

    pub fn gain(&self, lead: Lead, wave: Wave) -> f64 {
        self.rows[lead.index()][wave.index()]
    }

    /// Largest deviation from the four limb-lead identities.
    pub fn identity_residual(&self) -> f64 {
        let i = self.row(Lead::I);
        let ii = self.row(Lead::II);
        let expected = [
            (Lead::III, combine(ii, i, 1.0, -1.0)),
            (Lead::AVR, combine(i, ii, -0.5, -0.5)),
            (Lead::AVL, combine(i, ii, 1.0, -0.5)),
            (Lead::AVF, combine(ii, i, 1.0, -0.5)),
        ];
        expected
            .iter()
            .flat_map(|(lead, want)| {
                self.row(*lead).iter().zip(want).map(|(a, b)| (a - b).abs())
            })
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        for (lead, row) in Lead::ALL.iter().zip(&self.rows) {
            if let Some(v) = row.iter().find(|v| !v.is_finite() || v.abs() > MAX_GAIN) {
                return Err(Error::invalid(format!(
                    "lead {lead} gain {v} is not finite or exceeds {MAX_GAIN}"
                )));
            }
        }
        let residual = self.identity_residual();
        if residual > IDENTITY_TOL {
            return Err(Error::invalid(format!(
                "limb rows violate Einthoven/Goldberger identities (residual {residual:e})"
            )));
        }
        Ok(())
    }
}

impl Default for LeadMatrix {
    fn default() -> Self {
        default_lead_matrix()
    }
}

/// Shipped gains. Lead II carries every wave at unit gain except a damped T;
/// V1 has a small r and deep S, V5 and V6 are R-dominant.
pub fn default_lead_matrix() -> LeadMatrix {
    //          P    Q    R    S    T
    let lead_i = [0.5, 0.6, 0.7, 0.4, 0.6];
    let lead_ii = [1.0, 1.0, 1.0, 1.0, 0.8];
    let precordial = [
        [0.5, 0.0, 0.3, 2.5, -0.2], // V1
        [0.6, 0.1, 0.6, 2.6, 0.8],  // V2
        [0.6, 0.3, 1.0, 2.0, 1.0],  // V3
        [0.6, 0.6, 1.4, 1.4, 1.0],  // V4
        [0.6, 0.8, 1.4, 0.8, 0.9],  // V5
        [0.6, 0.8, 1.2, 0.4, 0.7],  // V6
    ];
    LeadMatrix::from_free_rows(lead_i, lead_ii, precordial).expect("default lead matrix is valid")
}

/// Lead `l` = sum over waves of `m[l, w] * component_w`, pointwise.
pub fn project_to_leads(components: &SourceRecord, m: &LeadMatrix) -> Result<MultiLeadRecord> {
    m.validate()?;
    let grid = components.grid();
    let mut out = MultiLeadRecord::zeros(grid, None, 0, Provenance::synthetic(None));
    for (lead, trace) in out.leads_mut() {
        let row = m.row(lead);
        for w in Wave::ALL {
            let gain = row[w.index()];
            for (dst, src) in trace.iter_mut().zip(components.component(w)) {
                *dst += gain * src;
            }
        }
    }
    Ok(out)
}
