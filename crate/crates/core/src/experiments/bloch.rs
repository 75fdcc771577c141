use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{bloch_terms, purity_local};
use crate::haar::{UnitaryBatch, Variant};
use crate::measurement::{simulate, Shots};
use crate::rng::{self, tag};
use crate::state::{bloch_decompose, prepare, Bloch, HilbertShape, StateKind};
use crate::stats;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramRow {
    pub observable: String,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableSummary {
    pub name: String,
    pub mean: f64,
    pub variance: f64,
    /// `√3·std` for single-site correlators, `3·std` for `Z⁽¹²⁾`.
    pub scaled_std: f64,
    /// `|v|`, `|w|` or `‖R‖` of the prepared state.
    pub reference: f64,
    /// Kolmogorov–Smirnov distance to the uniform law on
    /// `[−reference, reference]` (single-site correlators only).
    pub ks_uniform: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlochSummary {
    pub state: String,
    pub n_sites: usize,
    pub n_u: usize,
    pub seed: u64,
    pub observables: Vec<ObservableSummary>,
    pub purity_estimate: f64,
    pub purity_error: f64,
    pub exact_purity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlochDemo {
    pub summary: BlochSummary,
    pub histogram: Vec<HistogramRow>,
}

struct Correlator {
    name: &'static str,
    /// `±1` per outcome.
    weights: Vec<f64>,
    reference: f64,
    factor: f64,
}

fn histogram(name: &str, xs: &[f64], bins: usize) -> Vec<HistogramRow> {
    let mut counts = vec![0u64; bins];
    for &x in xs {
        let b = (((x + 1.0) / 2.0) * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize;
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramRow {
            observable: name.to_string(),
            bin_lo: -1.0 + 2.0 * i as f64 / bins as f64,
            bin_hi: -1.0 + 2.0 * (i + 1) as f64 / bins as f64,
            count,
        })
        .collect()
}

/// Correlators `Z_U` of one or two qubits under random local unitaries,
/// with exact outcome probabilities.
pub fn run_bloch_demo(kind: StateKind, n_sites: usize, n_u: usize, seed: u64, bins: usize) -> Result<BlochDemo> {
    if !(1..=2).contains(&n_sites) {
        return Err(Error::InvalidArgument("the Bloch demo needs 1 or 2 qubits".into()));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be positive".into()));
    }
    let shape = HilbertShape::new(2, n_sites)?;
    let state = prepare(kind, shape, rng::derive(seed, &[tag::STATE]))?;
    let rho = state.density_matrix();
    let batch = UnitaryBatch::new(shape, Variant::Local, n_u, seed)?;
    let ds = simulate(&[("s", &state)], &batch, Shots::Exact, 0, false)?.remove(0);

    let sign = |bit: usize| if bit == 0 { 1.0 } else { -1.0 };
    let correlator = |name, weights: Vec<f64>, reference, factor| Correlator {
        name,
        weights,
        reference,
        factor,
    };
    let correlators = match bloch_decompose(&rho)? {
        Bloch::Vector(v) => vec![correlator("Z", vec![1.0, -1.0], v.0.norm(), 3f64.sqrt())],
        Bloch::Matrix(m) => vec![
            correlator("Z1", (0..4).map(|s| sign(s >> 1)).collect(), m.v().norm(), 3f64.sqrt()),
            correlator("Z2", (0..4).map(|s| sign(s & 1)).collect(), m.w().norm(), 3f64.sqrt()),
            correlator(
                "Z12",
                (0..4).map(|s| sign(s >> 1) * sign(s & 1)).collect(),
                m.correlations().norm(),
                3.0,
            ),
        ],
    };

    let mut observables = Vec::new();
    let mut rows = Vec::new();
    for c in &correlators {
        let z: Vec<f64> = ds
            .records
            .iter()
            .map(|r| r.est_probabilities().iter().zip(&c.weights).map(|(p, w)| p * w).sum())
            .collect();
        let variance = stats::variance(&z)?;
        let single_site = c.factor < 2.0;
        observables.push(ObservableSummary {
            name: c.name.to_string(),
            mean: stats::mean(&z)?,
            variance,
            scaled_std: c.factor * variance.sqrt(),
            reference: c.reference,
            ks_uniform: if single_site && c.reference > 1e-9 {
                Some(stats::ks_uniform(&z, -c.reference, c.reference)?)
            } else {
                None
            },
        });
        rows.extend(histogram(c.name, &z, bins));
    }

    let (purity_estimate, purity_error) = if n_sites == 1 {
        let r = purity_local(&ds, &[0])?;
        (r.scalar(), r.std_error)
    } else {
        let t = bloch_terms(&ds)?;
        (t.purity, t.purity_error)
    };
    Ok(BlochDemo {
        summary: BlochSummary {
            state: kind.label(),
            n_sites,
            n_u,
            seed,
            observables,
            purity_estimate,
            purity_error,
            exact_purity: rho.purity(),
        },
        histogram: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_qubit_variance_and_uniformity() {
        let demo = run_bloch_demo(StateKind::RandomPure, 1, 20_000, 3, 20).unwrap();
        let z = &demo.summary.observables[0];
        assert!((z.reference - 1.0).abs() < 1e-12);
        assert!((3.0 * z.variance - 1.0).abs() < 0.03);
        assert!(z.ks_uniform.unwrap() < 0.02);
        assert_eq!(demo.histogram.iter().map(|r| r.count).sum::<u64>(), 20_000);
    }

    #[test]
    fn maximally_mixed_qubit_has_no_spread() {
        let demo = run_bloch_demo(StateKind::MaximallyMixed, 1, 500, 3, 4).unwrap();
        let z = &demo.summary.observables[0];
        assert!(z.variance < 1e-28);
        assert!(z.ks_uniform.is_none());
        assert!((demo.summary.purity_estimate - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_qubit_summary() {
        let demo = run_bloch_demo(StateKind::Ghz, 2, 5000, 4, 10).unwrap();
        let names: Vec<&str> = demo.summary.observables.iter().map(|o| o.name.as_str()).collect();
        assert_eq!(names, ["Z1", "Z2", "Z12"]);
        assert!((demo.summary.observables[2].reference - 3f64.sqrt()).abs() < 1e-12);
        let s = &demo.summary;
        assert!((s.purity_estimate - 1.0).abs() < 3.0 * s.purity_error);
        assert!(run_bloch_demo(StateKind::Ghz, 3, 10, 4, 10).is_err());
    }
}
