use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::write_csv_atomic;
use crate::error::Result;

/// Per-unit CATE point estimates, optionally with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CateEstimates {
    pub method: String,
    pub tau_hat: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se: Option<Vec<f64>>,
}

impl CateEstimates {
    pub fn new(method: impl Into<String>, tau_hat: Vec<f64>) -> Self {
        CateEstimates {
            method: method.into(),
            tau_hat,
            se: None,
        }
    }

    pub fn len(&self) -> usize {
        self.tau_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau_hat.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.tau_hat.iter().sum::<f64>() / self.len() as f64
    }

    /// `unit_id,tau_hat,se` (se column only when standard errors exist).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        match &self.se {
            Some(se) => write_csv_atomic(
                path,
                &["unit_id", "tau_hat", "se"],
                self.tau_hat
                    .iter()
                    .zip(se)
                    .enumerate()
                    .map(|(i, (t, s))| [i.to_string(), t.to_string(), s.to_string()]),
            ),
            None => write_csv_atomic(
                path,
                &["unit_id", "tau_hat"],
                self.tau_hat
                    .iter()
                    .enumerate()
                    .map(|(i, t)| [i.to_string(), t.to_string()]),
            ),
        }
    }
}

/// `unit_id,method,tau_hat` rows for several methods.
pub fn write_long_csv(path: &Path, estimates: &[CateEstimates]) -> Result<()> {
    let rows = estimates.iter().flat_map(|e| {
        e.tau_hat
            .iter()
            .enumerate()
            .map(move |(i, t)| [i.to_string(), e.method.clone(), t.to_string()])
    });
    write_csv_atomic(path, &["unit_id", "method", "tau_hat"], rows)
}
