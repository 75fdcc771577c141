use super::{meta_for, require_variant, EstimateReport, EstimateValue};
use crate::error::{Error, Result};
use crate::haar::Variant;
use crate::measurement::Dataset;
use crate::stats;
use crate::weingarten::{cycle_type_count, cycle_types, rising_factorial};

/// Recover `tr ρ², …, tr ρ^k` from ensemble moments.
///
/// `moments[i]` is the Haar average of `P_U(s)^{i+2}` for a single outcome
/// `s` (i.e. `Σ_s` divided by `dim`). Each order satisfies
/// `D(D+1)…(D+l−1) · m_l = Σ_b count(b) Π_j (tr ρ^j)^{b_j}` over cycle types
/// `b` of `l`; the `l`-cycle alone contributes `(l−1)! tr ρ^l`, so the
/// system is solved upward in `l`.
pub fn solve_power_traces(moments: &[f64], dim: usize) -> Result<Vec<f64>> {
    let mut traces: Vec<f64> = vec![1.0]; // tr ρ
    for (i, &m) in moments.iter().enumerate() {
        let l = i + 2;
        let mut rest = 0.0;
        let mut top = 0.0;
        for b in cycle_types(l) {
            let count = cycle_type_count(&b)? as f64;
            if b[l - 1] == 1 {
                top = count;
                continue;
            }
            let prod: f64 = b
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, &e)| traces[j].powi(e as i32))
                .product();
            rest += count * prod;
        }
        traces.push((rising_factorial(dim, l) * m - rest) / top);
    }
    Ok(traces[1..].to_vec())
}

/// `[tr ρ², …, tr ρ^k]` from a global batch using `k`-th order
/// U-statistics of the counts.
pub fn renyi_k_global(ds: &Dataset, k: usize) -> Result<EstimateReport> {
    require_variant(ds, Variant::Global)?;
    if k < 2 {
        return Err(Error::InvalidArgument("order must be at least 2".into()));
    }
    let dim = ds.shape().dim();
    let samples: Vec<Vec<f64>> = ds
        .records
        .iter()
        .map(|r| (2..=k).map(|l| Ok(r.est_power_sum(l)? / dim as f64)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let (value, errs) = stats::jackknife_fn(&samples, |m| solve_power_traces(m, dim))?;
    let mut warnings = Vec::new();
    if value[0] <= 0.0 {
        warnings.push(format!("non-positive purity estimate {}", value[0]));
    }
    Ok(EstimateReport {
        protocol: "renyi_k".into(),
        value: EstimateValue::Vector(value),
        std_error: errs.iter().copied().fold(0.0, f64::max),
        component_errors: errs,
        trace: None,
        meta: meta_for(ds, (0..ds.shape().num_sites()).collect()),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::purity_global;
    use crate::haar::UnitaryBatch;
    use crate::measurement::{simulate, Shots};
    use crate::state::{prepare, HilbertShape, StateKind};

    #[test]
    fn pure_state_moments_give_unit_traces() {
        let dim = 5;
        let moments: Vec<f64> = (2..=5)
            .map(|k| (1..=k).product::<usize>() as f64 / rising_factorial(dim, k))
            .collect();
        for t in solve_power_traces(&moments, dim).unwrap() {
            assert!((t - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn second_order_matches_purity_global() {
        let s = HilbertShape::new(2, 2).unwrap();
        let st = prepare(StateKind::RandomMixed { ancilla_sites: 1 }, s, 1).unwrap();
        let batch = UnitaryBatch::new(s, Variant::Global, 300, 2).unwrap();
        let ds = simulate(&[("s", &st)], &batch, Shots::Finite(40), 3, false).unwrap().remove(0);
        let r = renyi_k_global(&ds, 2).unwrap();
        let p = purity_global(&ds).unwrap();
        assert!((r.value.as_vector().unwrap()[0] - p.scalar()).abs() < 1e-12);
        assert!((r.std_error - p.std_error).abs() < 1e-12);
    }

    #[test]
    fn insufficient_shots() {
        let s = HilbertShape::new(2, 1).unwrap();
        let st = prepare(StateKind::RandomPure, s, 1).unwrap();
        let batch = UnitaryBatch::new(s, Variant::Global, 3, 2).unwrap();
        let ds = simulate(&[("s", &st)], &batch, Shots::Finite(2), 3, false).unwrap().remove(0);
        assert!(renyi_k_global(&ds, 3).is_err());
        assert!(renyi_k_global(&ds, 1).is_err());
    }
}
