use super::{meta_for, per_unitary, scalar_report, EstimateReport};
use crate::error::{Error, Result};
use crate::haar::{UnitaryBatch, Variant};
use crate::linalg::CMatrix;
use crate::measurement::{kernel_quadratic_form, simulate, Dataset, HammingKernel, Shots};
use crate::state::{evolve, QuantumState, StateVector};

/// Estimate `tr ρ₁ρ₂` from two runs measured with the same unitaries.
///
/// The per-unitary cross term is symmetrized so that swapping the runs
/// gives bit-identical results.
pub fn overlap(a: &Dataset, b: &Dataset) -> Result<EstimateReport> {
    if a.manifest != b.manifest {
        return Err(Error::ManifestMismatch(format!(
            "runs use different unitary batches ({:?} vs {:?})",
            a.manifest, b.manifest
        )));
    }
    if a.records.len() != b.records.len() {
        return Err(Error::ManifestMismatch("runs have different numbers of records".into()));
    }
    if a.records.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if let Some((x, y)) = a.records.iter().zip(&b.records).find(|(x, y)| x.unitary_index != y.unitary_index) {
        return Err(Error::ManifestMismatch(format!(
            "record for unitary {} paired with unitary {}",
            x.unitary_index, y.unitary_index
        )));
    }
    let kernel = match a.manifest.variant {
        Variant::Global => HammingKernel::global(a.shape()),
        Variant::Local => HammingKernel::local(a.shape()),
    };
    let samples = per_unitary(a.records.len(), |j| {
        let (x, y) = (&a.records[j], &b.records[j]);
        let xy = kernel_quadratic_form(x, y, &kernel, false)?;
        let yx = kernel_quadratic_form(y, x, &kernel, false)?;
        Ok(0.5 * (xy + yx))
    })?;
    let all = (0..a.shape().num_sites()).collect();
    scalar_report("overlap", &samples, meta_for(a, all))
}

/// `|⟨ψ₀|e^{iH₂t}e^{−iH₁t}|ψ₀⟩|²` as the overlap of two forward-evolved
/// states measured with the same unitaries.
pub fn loschmidt_echo(
    psi0: &StateVector,
    h1: &CMatrix,
    h2: &CMatrix,
    t: f64,
    batch: &UnitaryBatch,
    shots: Shots,
    shot_seed: u64,
) -> Result<EstimateReport> {
    let s1 = QuantumState::Pure(evolve(psi0, h1, t)?);
    let s2 = QuantumState::Pure(evolve(psi0, h2, t)?);
    let ds = simulate(&[("h1", &s1), ("h2", &s2)], batch, shots, shot_seed, false)?;
    let mut report = overlap(&ds[0], &ds[1])?;
    report.protocol = "loschmidt".into();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::state::{prepare, random_hamiltonian, HilbertShape, StateKind};

    fn shape(d: usize, n: usize) -> HilbertShape {
        HilbertShape::new(d, n).unwrap()
    }

    fn runs(states: &[&QuantumState], variant: Variant, n_u: usize, shots: Shots) -> Vec<Dataset> {
        let batch = UnitaryBatch::new(states[0].shape(), variant, n_u, 31).unwrap();
        let named: Vec<(&str, &QuantumState)> = states.iter().map(|s| ("s", *s)).collect();
        simulate(&named, &batch, shots, 32, false).unwrap()
    }

    #[test]
    fn self_overlap_is_purity() {
        let st = prepare(StateKind::RandomMixed { ancilla_sites: 1 }, shape(2, 2), 1).unwrap();
        let ds = runs(&[&st, &st], Variant::Local, 4000, Shots::Exact);
        let r = overlap(&ds[0], &ds[1]).unwrap();
        let p = super::super::purity_local(&ds[0], &[0, 1]).unwrap();
        assert!((r.scalar() - p.scalar()).abs() < 1e-12);
        assert!((r.scalar() - st.purity()).abs() < 3.0 * r.std_error);
    }

    #[test]
    fn orthogonal_states() {
        let s = shape(2, 2);
        let a = QuantumState::Pure(StateVector::basis(s, 0).unwrap());
        let b = QuantumState::Pure(StateVector::basis(s, 3).unwrap());
        for variant in [Variant::Local, Variant::Global] {
            let ds = runs(&[&a, &b], variant, 10_000, Shots::Exact);
            let r = overlap(&ds[0], &ds[1]).unwrap();
            assert!(r.scalar().abs() < 3.0 * r.std_error, "{variant}: {} ± {}", r.scalar(), r.std_error);
        }
    }

    #[test]
    fn random_pure_states_and_symmetry() {
        let s = shape(2, 2);
        let a = prepare(StateKind::RandomPure, s, 2).unwrap();
        let b = prepare(StateKind::RandomPure, s, 3).unwrap();
        let truth = a.density_matrix().overlap(&b.density_matrix());
        let ds = runs(&[&a, &b], Variant::Local, 10_000, Shots::Exact);
        let ab = overlap(&ds[0], &ds[1]).unwrap();
        let ba = overlap(&ds[1], &ds[0]).unwrap();
        assert_eq!(ab.value, ba.value);
        assert_eq!(ab.std_error, ba.std_error);
        assert!((ab.scalar() - truth).abs() < 3.0 * ab.std_error);
    }

    #[test]
    fn mismatched_manifests_are_refused() {
        let s = shape(2, 2);
        let st = prepare(StateKind::RandomPure, s, 2).unwrap();
        let b1 = UnitaryBatch::new(s, Variant::Local, 5, 1).unwrap();
        let b2 = UnitaryBatch::new(s, Variant::Local, 5, 2).unwrap();
        let x = simulate(&[("a", &st)], &b1, Shots::Exact, 0, false).unwrap().remove(0);
        let y = simulate(&[("a", &st)], &b2, Shots::Exact, 0, false).unwrap().remove(0);
        assert!(matches!(overlap(&x, &y), Err(Error::ManifestMismatch(_))));
    }

    #[test]
    fn loschmidt_trivial_cases() {
        let s = shape(2, 2);
        let QuantumState::Pure(psi) = prepare(StateKind::RandomPure, s, 4).unwrap() else {
            unreachable!()
        };
        let mut r = rng::stream(5, &[]);
        let h1 = random_hamiltonian(4, &mut r);
        let h2 = random_hamiltonian(4, &mut r);
        let batch = UnitaryBatch::new(s, Variant::Local, 2000, 6).unwrap();
        let same = loschmidt_echo(&psi, &h1, &h1, 1.0, &batch, Shots::Exact, 7).unwrap();
        assert!((same.scalar() - 1.0).abs() < 3.0 * same.std_error);
        let zero = loschmidt_echo(&psi, &h1, &h2, 0.0, &batch, Shots::Exact, 7).unwrap();
        assert!((zero.scalar() - 1.0).abs() < 3.0 * zero.std_error);
    }
}
