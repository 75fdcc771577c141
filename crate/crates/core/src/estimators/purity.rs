use serde::Serialize;

use super::{meta_for, per_unitary, require_variant, scalar_report, EstimateReport};
use crate::error::{Error, Result};
use crate::haar::{UnitaryBatch, Variant};
use crate::measurement::{kernel_quadratic_form, simulate, Dataset, HammingKernel, Shots};
use crate::state::{bloch_decompose, Bloch, DensityMatrix, QuantumState};
use crate::stats;

/// `(D+1) Σ_s avg_U est[P_U(s)²] − 1` from a global batch.
pub fn purity_global(ds: &Dataset) -> Result<EstimateReport> {
    require_variant(ds, Variant::Global)?;
    let dim = ds.shape().dim() as f64;
    let samples = per_unitary(ds.records.len(), |j| {
        Ok((dim + 1.0) * ds.records[j].est_power_sum(2)? - 1.0)
    })?;
    let all: Vec<usize> = (0..ds.shape().num_sites()).collect();
    scalar_report("purity_global", &samples, meta_for(ds, all))
}

/// Purity of the reduced state on `subsystem` from a local batch, using the
/// Hamming-weighted same-run estimator on marginalized outcomes.
pub fn purity_local(ds: &Dataset, subsystem: &[usize]) -> Result<EstimateReport> {
    require_variant(ds, Variant::Local)?;
    if subsystem.is_empty() {
        return Err(Error::InvalidArgument("empty subsystem".into()));
    }
    let sub_shape = ds.shape().subsystem(subsystem)?;
    let kernel = HammingKernel::local(sub_shape);
    let full = subsystem.len() == ds.shape().num_sites() && subsystem.iter().enumerate().all(|(i, &s)| i == s);
    let samples = per_unitary(ds.records.len(), |j| {
        let rec = &ds.records[j];
        if full {
            kernel_quadratic_form(rec, rec, &kernel, true)
        } else {
            let m = rec.marginalize(subsystem)?;
            kernel_quadratic_form(&m, &m, &kernel, true)
        }
    })?;
    scalar_report("purity_local", &samples, meta_for(ds, subsystem.to_vec()))
}

/// Ensemble second moments of the two-qubit correlators
/// `Z⁽¹⁾ = Σ(−1)^{s₁}P`, `Z⁽²⁾ = Σ(−1)^{s₂}P`, `Z⁽¹²⁾ = Σ(−1)^{s₁+s₂}P`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlochTerms {
    /// `E[(Z⁽¹⁾)²], E[(Z⁽²⁾)²], E[(Z⁽¹²⁾)²]`.
    pub moments: [f64; 3],
    pub moment_errors: [f64; 3],
    /// `¼(1 + 3E₁ + 3E₂ + 9E₁₂)`.
    pub purity: f64,
    pub purity_error: f64,
}

pub fn bloch_terms(ds: &Dataset) -> Result<BlochTerms> {
    require_variant(ds, Variant::Local)?;
    let shape = ds.shape();
    if shape.local_dim() != 2 || shape.num_sites() != 2 {
        return Err(Error::ShapeMismatch("Bloch decomposition needs two qubits".into()));
    }
    let sign = |bit: usize| if bit == 0 { 1.0 } else { -1.0 };
    let weights: [Vec<f64>; 3] = [
        (0..4).map(|s| sign(s >> 1)).collect(),
        (0..4).map(|s| sign(s & 1)).collect(),
        (0..4).map(|s| sign(s >> 1) * sign(s & 1)).collect(),
    ];
    let samples: Vec<Vec<f64>> = ds
        .records
        .iter()
        .map(|r| weights.iter().map(|w| r.est_linear_square(w)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let (m, m_err) = stats::jackknife_fn(&samples, |v| Ok(v.to_vec()))?;
    let (p, p_err) = stats::jackknife_fn(&samples, |v| Ok(vec![0.25 * (1.0 + 3.0 * v[0] + 3.0 * v[1] + 9.0 * v[2])]))?;
    Ok(BlochTerms {
        moments: [m[0], m[1], m[2]],
        moment_errors: [m_err[0], m_err[1], m_err[2]],
        purity: p[0],
        purity_error: p_err[0],
    })
}

/// Bloch terms estimated from records alongside the exact decomposition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlochCheck {
    pub terms: BlochTerms,
    /// Hamming-kernel purity from the same records.
    pub kernel_purity: f64,
    pub exact_purity: f64,
    /// `|v|², |w|², ‖R‖²`.
    pub exact_norms: [f64; 3],
}

pub fn purity_local_bloch_check(rho: &DensityMatrix, batch: &UnitaryBatch, shots: Shots, shot_seed: u64) -> Result<BlochCheck> {
    let Bloch::Matrix(b) = bloch_decompose(rho)? else {
        return Err(Error::ShapeMismatch("Bloch decomposition needs two qubits".into()));
    };
    let state = QuantumState::Mixed(rho.clone());
    let ds = simulate(&[("rho", &state)], batch, shots, shot_seed, false)?.remove(0);
    let terms = bloch_terms(&ds)?;
    let kernel_purity = purity_local(&ds, &[0, 1])?.scalar();
    Ok(BlochCheck {
        terms,
        kernel_purity,
        exact_purity: rho.purity(),
        exact_norms: [b.v().norm_squared(), b.w().norm_squared(), b.correlations().norm_squared()],
    })
}
