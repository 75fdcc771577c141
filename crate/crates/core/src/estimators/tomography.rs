use super::{meta_for, EstimateReport, EstimateValue};
use crate::error::{Error, Result};
use crate::haar::{SampledUnitary, Variant};
use crate::linalg::{c64, hermitian_deviation, trace_norm_hermitian, CMatrix, CVector, MatrixJson};
use crate::measurement::{Dataset, HammingKernel, OutcomeRecord};

/// Snapshot for one unitary: `U† diag(K p̂) U`.
fn snapshot(rec: &OutcomeRecord, u: &SampledUnitary, kernel: &HammingKernel) -> Result<CMatrix> {
    let mut w = rec.est_probabilities();
    kernel.apply(&mut w);
    let diag = CMatrix::from_diagonal(&CVector::from_iterator(w.len(), w.iter().map(|&x| c64(x, 0.0))));
    u.conjugate_adjoint(&diag)
}

/// Sum of snapshots over `lo..hi` and the sum of their squared Frobenius
/// norms, on a fixed binary tree so the result is schedule independent.
fn sum_range(ds: &Dataset, units: &[SampledUnitary], kernel: &HammingKernel, lo: usize, hi: usize) -> Result<(CMatrix, f64)> {
    if hi - lo == 1 {
        let m = snapshot(&ds.records[lo], &units[lo], kernel)?;
        let sq = m.norm_squared();
        return Ok((m, sq));
    }
    let mid = lo + (hi - lo) / 2;
    let (a, b) = rayon::join(
        || sum_range(ds, units, kernel, lo, mid),
        || sum_range(ds, units, kernel, mid, hi),
    );
    let (a, b) = (a?, b?);
    Ok((a.0 + b.0, a.1 + b.1))
}

/// Linear-inversion state estimate from records that carry their unitaries.
///
/// The local protocol weights outcomes with the Hamming kernel; the global
/// protocol uses `(D+1) P̂ − 1`, i.e. the same kernel with one site of
/// dimension `D`. The result is Hermitized but neither renormalized nor
/// projected; its trace is reported.
pub fn tomography(ds: &Dataset) -> Result<EstimateReport> {
    let units = ds
        .unitaries
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("tomography needs the measured unitaries".into()))?;
    if ds.records.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if units.len() != ds.records.len() {
        return Err(Error::ShapeMismatch(format!("{} unitaries for {} records", units.len(), ds.records.len())));
    }
    let shape = ds.shape();
    if let Some(u) = units.iter().find(|u| u.dim() != shape.dim()) {
        return Err(Error::ShapeMismatch(format!("unitary of dimension {} for shape {}", u.dim(), shape.dim())));
    }
    let kernel = match ds.manifest.variant {
        Variant::Global => HammingKernel::global(shape),
        Variant::Local => HammingKernel::local(shape),
    };
    let n = ds.records.len();
    let (sum, sum_sq) = sum_range(ds, units, &kernel, 0, n)?;
    let mean = sum / c64(n as f64, 0.0);
    let std_error = if n > 1 {
        ((sum_sq - n as f64 * mean.norm_squared()).max(0.0) / (n as f64 * (n - 1) as f64)).sqrt()
    } else {
        0.0
    };
    let herm = (&mean + mean.adjoint()) * c64(0.5, 0.0);
    let trace = herm.trace().re;
    let mut warnings = Vec::new();
    if (trace - 1.0).abs() > 1e-6 {
        warnings.push(format!("trace {trace} differs from 1"));
    }
    Ok(EstimateReport {
        protocol: "tomography".into(),
        value: EstimateValue::Matrix(MatrixJson::from_matrix(&herm, shape.local_dim(), shape.num_sites())?),
        std_error,
        component_errors: Vec::new(),
        trace: Some(trace),
        meta: meta_for(ds, (0..shape.num_sites()).collect()),
        warnings,
    })
}

/// `‖a − b‖₁` (sum of singular values, no factor ½).
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch("operands differ in shape".into()));
    }
    let diff = a - b;
    if hermitian_deviation(&diff) > 1e-8 {
        return Ok(diff.singular_values().sum());
    }
    Ok(trace_norm_hermitian(&diff))
}

/// Nearest density matrix in Frobenius norm: eigenvalues projected onto the
/// probability simplex.
pub fn project_psd(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::ShapeMismatch("projection needs a square matrix".into()));
    }
    let herm = (m + m.adjoint()) * c64(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let mut sorted: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut shift = 0.0;
    let mut acc = 0.0;
    for (i, v) in sorted.iter().enumerate() {
        acc += v;
        let t = (acc - 1.0) / (i + 1) as f64;
        if v - t > 0.0 {
            shift = t;
        }
    }
    let lam = CVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|v| c64((v - shift).max(0.0), 0.0)));
    let q = &eig.eigenvectors;
    Ok(q * CMatrix::from_diagonal(&lam) * q.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::UnitaryBatch;
    use crate::linalg::max_abs_diff;
    use crate::measurement::{simulate, Shots};
    use crate::state::{make_state, DensityMatrix, HilbertShape, QuantumState, StateKind, StateVector};

    fn shape(d: usize, n: usize) -> HilbertShape {
        HilbertShape::new(d, n).unwrap()
    }

    fn estimate(rho: &DensityMatrix, variant: Variant, n_u: usize, seed: u64) -> (CMatrix, EstimateReport) {
        let batch = UnitaryBatch::new(rho.shape(), variant, n_u, seed).unwrap();
        let st = QuantumState::Mixed(rho.clone());
        let ds = simulate(&[("s", &st)], &batch, Shots::Exact, 0, true).unwrap().remove(0);
        let r = tomography(&ds).unwrap();
        let EstimateValue::Matrix(m) = &r.value else { panic!() };
        (m.to_matrix().unwrap(), r)
    }

    #[test]
    fn maximally_mixed_is_recovered_per_unitary() {
        // Every snapshot of I/D equals I/D for the local kernel.
        let s = shape(2, 2);
        let (m, r) = estimate(&DensityMatrix::maximally_mixed(s), Variant::Local, 3, 1);
        assert!(trace_distance(&m, DensityMatrix::maximally_mixed(s).elements()).unwrap() < 1e-12);
        assert!(r.std_error < 1e-12);
    }

    #[test]
    fn bell_state_converges() {
        let s = shape(2, 2);
        let mut v = CVector::zeros(4);
        v[0] = c64(1.0, 0.0);
        v[3] = c64(1.0, 0.0);
        let rho = StateVector::normalized(s, v).unwrap().to_density();
        for variant in [Variant::Local, Variant::Global] {
            let (m, r) = estimate(&rho, variant, 10_000, 2);
            let td = trace_distance(&m, rho.elements()).unwrap();
            assert!(td < 0.1, "{variant}: {td}");
            assert!((r.trace.unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn estimator_is_linear_per_unitary() {
        let s = shape(2, 2);
        let a = make_state(StateKind::RandomMixed { ancilla_sites: 1 }, s, 3).unwrap();
        let b = make_state(StateKind::RandomPure, s, 4).unwrap();
        let lambda = 0.3;
        let mix = a.mix(&b, lambda).unwrap();
        for seed in 0..3 {
            let (ma, _) = estimate(&a, Variant::Local, 1, seed);
            let (mb, _) = estimate(&b, Variant::Local, 1, seed);
            let (mm, _) = estimate(&mix, Variant::Local, 1, seed);
            let combo = ma * c64(lambda, 0.0) + mb * c64(1.0 - lambda, 0.0);
            assert!(max_abs_diff(&combo, &mm) < 1e-12);
        }
    }

    #[test]
    fn missing_unitaries_is_an_error() {
        let s = shape(2, 1);
        let batch = UnitaryBatch::new(s, Variant::Local, 2, 0).unwrap();
        let st = QuantumState::Mixed(DensityMatrix::maximally_mixed(s));
        let ds = simulate(&[("s", &st)], &batch, Shots::Exact, 0, false).unwrap().remove(0);
        assert!(tomography(&ds).is_err());
    }

    #[test]
    fn psd_projection() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c64(1.2, 0.0), c64(-0.2, 0.0)]));
        let p = project_psd(&m).unwrap();
        assert!((p[(0, 0)].re - 1.0).abs() < 1e-12 && p[(1, 1)].norm() < 1e-12);
        let rho = make_state(StateKind::RandomMixed { ancilla_sites: 2 }, shape(2, 2), 5).unwrap();
        assert!(max_abs_diff(&project_psd(rho.elements()).unwrap(), rho.elements()) < 1e-10);
    }
}
