//! Estimation pipelines over batches of outcome records.

mod entanglement;
mod overlap;
mod purity;
mod renyi;
mod tomography;

pub use entanglement::{detect_entanglement, EntanglementVerdict, Verdict};
pub use overlap::{loschmidt_echo, overlap};
pub use purity::{bloch_terms, purity_global, purity_local, purity_local_bloch_check, BlochCheck, BlochTerms};
pub use renyi::{renyi_k_global, solve_power_traces};
pub use tomography::{project_psd, tomography, trace_distance};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::Variant;
use crate::linalg::MatrixJson;
use crate::measurement::{Dataset, Shots};
use crate::stats;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateValue {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(MatrixJson),
}

impl EstimateValue {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            EstimateValue::Scalar(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            EstimateValue::Vector(v) => Some(v),
            _ => None,
        }
    }
}

/// Everything needed to replay an estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub n_u: usize,
    /// `None` when records carry different shot counts.
    pub n_m: Option<Shots>,
    pub seed: u64,
    pub variant: Variant,
    pub d: usize,
    pub n: usize,
    pub subsystem: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub protocol: String,
    pub value: EstimateValue,
    /// Jackknife standard error over unitaries. For vectors the largest
    /// component error, for matrices the Frobenius norm of entrywise errors.
    pub std_error: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub component_errors: Vec<f64>,
    /// Trace of a matrix estimate (not renormalized).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<f64>,
    pub meta: ReportMeta,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EstimateReport {
    pub fn scalar(&self) -> f64 {
        self.value.as_scalar().unwrap_or(f64::NAN)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub(crate) fn meta_for(ds: &Dataset, subsystem: Vec<usize>) -> ReportMeta {
    let shots: Vec<Shots> = ds.records.iter().map(|r| r.shots()).collect();
    let n_m = match shots.first() {
        Some(first) if shots.iter().all(|s| s == first) => Some(*first),
        _ => None,
    };
    ReportMeta {
        n_u: ds.records.len(),
        n_m,
        seed: ds.manifest.master_seed,
        variant: ds.manifest.variant,
        d: ds.shape().local_dim(),
        n: ds.shape().num_sites(),
        subsystem,
    }
}

pub(crate) fn require_variant(ds: &Dataset, variant: Variant) -> Result<()> {
    if ds.manifest.variant != variant {
        return Err(Error::InvalidArgument(format!(
            "protocol needs a {variant} batch, got {}",
            ds.manifest.variant
        )));
    }
    if ds.records.is_empty() {
        return Err(Error::EmptyBatch);
    }
    Ok(())
}

/// Per-unitary contributions in record order, computed in parallel.
pub(crate) fn per_unitary<F>(n: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Scalar report from per-unitary contributions.
pub(crate) fn scalar_report(protocol: &str, samples: &[f64], meta: ReportMeta) -> Result<EstimateReport> {
    let (value, std_error) = stats::jackknife_mean(samples)?;
    let mut warnings = Vec::new();
    if protocol.starts_with("purity") && value <= 0.0 {
        warnings.push(format!("non-positive purity estimate {value}"));
    }
    Ok(EstimateReport {
        protocol: protocol.to_string(),
        value: EstimateValue::Scalar(value),
        std_error,
        component_errors: Vec::new(),
        trace: None,
        meta,
        warnings,
    })
}
