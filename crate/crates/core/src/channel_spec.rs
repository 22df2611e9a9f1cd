//! The channel-spec document: the on-disk JSON description of an AVC consumed
//! by the command-line tools.
//!
//! Ingest is looser than the internal validation: rows must sum to one within
//! `1e-6` and are renormalized on load, with a warning for every row that was
//! actually adjusted.

use serde::{Deserialize, Serialize};

use crate::channel::Avc;
use crate::error::{Error, Result};

/// Ingest tolerance on row sums.
pub const LOAD_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpecDocument {
    pub x_size: usize,
    pub s_size: usize,
    pub y_size: usize,
    /// Conditional probabilities indexed `w[s][x][y]`.
    pub w: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// A row that was renormalized on load.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadWarning {
    pub s: usize,
    pub x: usize,
    pub sum: f64,
}

impl ChannelSpecDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec document serializes")
    }

    pub fn from_avc(avc: &Avc, name: Option<String>, description: Option<String>) -> Self {
        Self {
            x_size: avc.x_size(),
            s_size: avc.s_size(),
            y_size: avc.y_size(),
            w: avc.tensor(),
            name,
            description,
        }
    }

    /// Validates the declared shape, renormalizes rows within the ingest
    /// tolerance, and builds the AVC. Shape or tolerance violations name the
    /// offending `[s][x]` indices.
    pub fn to_avc(&self) -> Result<(Avc, Vec<LoadWarning>)> {
        if self.x_size == 0 || self.s_size == 0 || self.y_size == 0 {
            return Err(Error::InvalidInput(
                "alphabet sizes must be positive".into(),
            ));
        }
        if self.w.len() != self.s_size {
            return Err(Error::InvalidInput(format!(
                "w has {} state slices, declared s_size = {}",
                self.w.len(),
                self.s_size
            )));
        }
        let mut warnings = Vec::new();
        let mut tensor = Vec::with_capacity(self.s_size);
        for (s, per_state) in self.w.iter().enumerate() {
            if per_state.len() != self.x_size {
                return Err(Error::InvalidInput(format!(
                    "w[{s}] has {} rows, declared x_size = {}",
                    per_state.len(),
                    self.x_size
                )));
            }
            let mut rows = Vec::with_capacity(self.x_size);
            for (x, row) in per_state.iter().enumerate() {
                if row.len() != self.y_size {
                    return Err(Error::InvalidInput(format!(
                        "w[{s}][{x}] has {} entries, declared y_size = {}",
                        row.len(),
                        self.y_size
                    )));
                }
                for (y, &p) in row.iter().enumerate() {
                    if !p.is_finite() || p < 0.0 {
                        return Err(Error::InvalidInput(format!(
                            "w[{s}][{x}][{y}] = {p} is not a probability"
                        )));
                    }
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > LOAD_SUM_TOL {
                    return Err(Error::InvalidInput(format!(
                        "w[{s}][{x}] sums to {sum}, expected 1 within {LOAD_SUM_TOL}"
                    )));
                }
                if (sum - 1.0).abs() > crate::prob::SUM_TOL {
                    warnings.push(LoadWarning { s, x, sum });
                    rows.push(row.iter().map(|&p| p / sum).collect());
                } else {
                    rows.push(row.clone());
                }
            }
            tensor.push(rows);
        }
        Ok((Avc::from_tensor(tensor)?, warnings))
    }
}
