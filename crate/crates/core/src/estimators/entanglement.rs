use serde::Serialize;

use super::EstimateReport;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Entangled,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntanglementVerdict {
    pub verdict: Verdict,
    /// Second Rényi entropies of A, B and A∪B.
    pub entropies: [f64; 3],
    /// `S₂(A) − S₂(AB)` and `S₂(B) − S₂(AB)`.
    pub gaps: [f64; 2],
    pub gap_errors: [f64; 2],
    pub non_positive_purity: bool,
}

/// Sufficient test for bipartite entanglement: some marginal has larger
/// second Rényi entropy than the joint state, by more than three combined
/// standard errors. Failing the test says nothing about separability.
pub fn detect_entanglement(a: &EstimateReport, b: &EstimateReport, ab: &EstimateReport) -> Result<EntanglementVerdict> {
    let sa: Vec<usize> = a.meta.subsystem.clone();
    let sb: Vec<usize> = b.meta.subsystem.clone();
    if sa.iter().any(|s| sb.contains(s)) {
        return Err(Error::InvalidArgument("subsystems A and B overlap".into()));
    }
    let mut union: Vec<usize> = sa.iter().chain(&sb).copied().collect();
    union.sort_unstable();
    let mut joint = ab.meta.subsystem.clone();
    joint.sort_unstable();
    if union != joint {
        return Err(Error::InvalidArgument("joint subsystem is not A ∪ B".into()));
    }
    let purities = [a.scalar(), b.scalar(), ab.scalar()];
    let errors = [a.std_error, b.std_error, ab.std_error];
    if purities.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Ok(EntanglementVerdict {
            verdict: Verdict::Inconclusive,
            entropies: [f64::NAN; 3],
            gaps: [f64::NAN; 2],
            gap_errors: [f64::NAN; 2],
            non_positive_purity: true,
        });
    }
    let entropies = purities.map(|p| -p.log2());
    let sigma: Vec<f64> = purities.iter().zip(errors).map(|(p, e)| e / (p * std::f64::consts::LN_2)).collect();
    let gaps = [entropies[0] - entropies[2], entropies[1] - entropies[2]];
    let gap_errors = [sigma[0].hypot(sigma[2]), sigma[1].hypot(sigma[2])];
    let entangled = gaps.iter().zip(gap_errors).any(|(g, e)| *g > 0.0 && *g > 3.0 * e);
    Ok(EntanglementVerdict {
        verdict: if entangled { Verdict::Entangled } else { Verdict::Inconclusive },
        entropies,
        gaps,
        gap_errors,
        non_positive_purity: false,
    })
}
