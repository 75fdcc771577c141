use rayon::prelude::*;
use serde::Serialize;

use super::{group_in_order, ExperimentConfig};
use crate::error::Result;
use crate::estimators::{purity_global, purity_local, tomography, trace_distance, EstimateValue};
use crate::haar::{UnitaryBatch, Variant};
use crate::linalg::CMatrix;
use crate::measurement::{resample, simulate, Dataset, Shots};
use crate::rng::{self, tag};
use crate::state::{prepare, HilbertShape, QuantumState, StateKind};
use crate::stats;

/// One CSV row: a grid cell averaged over its trials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub protocol: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub d: usize,
    #[serde(rename = "N_U")]
    pub n_u: usize,
    #[serde(rename = "N_M")]
    pub n_m: String,
    pub seed: u64,
    /// Mean estimate over trials (trace distance for tomography).
    pub value: f64,
    /// Mean per-trial jackknife error.
    pub std_error: f64,
    pub truth: Option<f64>,
    /// Mean over trials of the absolute error.
    pub abs_error: f64,
    /// Standard error of `abs_error` across trials.
    pub abs_error_se: f64,
    /// Mean distance between the finite-shot estimate and the exact-mode
    /// estimate at the same unitaries; empty for `N_M = inf`.
    pub projection_error: Option<f64>,
    pub state: String,
    pub variant: Variant,
    pub trials: usize,
}

struct Group {
    state_index: usize,
    kind: StateKind,
    shape: HilbertShape,
    variant: Variant,
    n_u: usize,
}

/// Per-trial result for one `N_M`.
struct Outcome {
    value: f64,
    std_error: f64,
    abs_error: f64,
    projection_error: Option<f64>,
}

fn groups(cfg: &ExperimentConfig) -> Result<Vec<Group>> {
    cfg.validate()?;
    let shapes = cfg.shapes()?;
    let kinds = cfg.kinds()?;
    let mut out = Vec::new();
    for (state_index, &kind) in kinds.iter().enumerate() {
        for &variant in &cfg.variants {
            for &shape in &shapes {
                for &n_u in &cfg.n_u {
                    out.push(Group {
                        state_index,
                        kind,
                        shape,
                        variant,
                        n_u,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// The state for a given label and size; identical across variants, `N_U`
/// and trials so that cells differ only in the measurement settings.
fn state_for(cfg: &ExperimentConfig, g: &Group) -> Result<QuantumState> {
    let seed = rng::derive(cfg.master_seed, &[tag::STATE, g.state_index as u64, g.shape.num_sites() as u64]);
    prepare(g.kind, g.shape, seed)
}

fn run_grid<F>(cfg: &ExperimentConfig, protocol: &str, keep_unitaries: bool, estimate: F) -> Result<Vec<ScalingRow>>
where
    F: Fn(&Dataset, &QuantumState) -> Result<(f64, f64, f64, Option<CMatrix>)> + Sync,
{
    let groups = groups(cfg)?;
    let states: Vec<QuantumState> = groups.iter().map(|g| state_for(cfg, g)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..groups.len())
        .flat_map(|g| (0..cfg.trials).map(move |t| (g, t)))
        .collect();
    let results: Vec<Vec<Outcome>> = jobs
        .par_iter()
        .map(|&(gi, trial)| {
            let g = &groups[gi];
            let state = &states[gi];
            let cell = [tag::CELL, gi as u64, trial as u64];
            let batch = UnitaryBatch::new(g.shape, g.variant, g.n_u, rng::derive(cfg.master_seed, &cell))?;
            let exact = simulate(&[("s", state)], &batch, Shots::Exact, 0, keep_unitaries)?.remove(0);
            let (exact_value, exact_se, exact_err, exact_matrix) = estimate(&exact, state)?;
            cfg.n_m
                .iter()
                .map(|&n_m| match n_m {
                    Shots::Exact => Ok(Outcome {
                        value: exact_value,
                        std_error: exact_se,
                        abs_error: exact_err,
                        projection_error: None,
                    }),
                    Shots::Finite(n) => {
                        let shot_seed = rng::derive(cfg.master_seed, &[tag::SHOTS, gi as u64, trial as u64, n]);
                        let ds = resample(&exact, n, shot_seed)?;
                        let (value, std_error, abs_error, matrix) = estimate(&ds, state)?;
                        let projection_error = match (&matrix, &exact_matrix) {
                            (Some(a), Some(b)) => trace_distance(a, b)?,
                            _ => (value - exact_value).abs(),
                        };
                        Ok(Outcome {
                            value,
                            std_error,
                            abs_error,
                            projection_error: Some(projection_error),
                        })
                    }
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (gi, trials) in group_in_order(jobs.iter().map(|j| j.0).zip(results)) {
        let g = &groups[gi];
        for (mi, &n_m) in cfg.n_m.iter().enumerate() {
            let pick = |f: &dyn Fn(&Outcome) -> f64| -> Vec<f64> { trials.iter().map(|t| f(&t[mi])).collect() };
            let abs = pick(&|o| o.abs_error);
            let (abs_mean, abs_se) = stats::jackknife_mean(&abs)?;
            let projection_error = match n_m {
                Shots::Exact => None,
                Shots::Finite(_) => Some(stats::mean(&pick(&|o| o.projection_error.unwrap_or(f64::NAN)))?),
            };
            rows.push(ScalingRow {
                protocol: protocol_name(protocol, g.variant),
                n: g.shape.num_sites(),
                d: g.shape.local_dim(),
                n_u: g.n_u,
                n_m: n_m.to_string(),
                seed: cfg.master_seed,
                value: stats::mean(&pick(&|o| o.value))?,
                std_error: stats::mean(&pick(&|o| o.std_error))?,
                truth: (protocol == "purity").then(|| states[gi].purity()),
                abs_error: abs_mean,
                abs_error_se: abs_se,
                projection_error,
                state: cfg.states[g.state_index].clone(),
                variant: g.variant,
                trials: cfg.trials,
            });
        }
    }
    Ok(rows)
}

fn protocol_name(protocol: &str, variant: Variant) -> String {
    format!("{protocol}_{variant}")
}

/// Purity error versus `N_U`, `N_M` and system size.
///
/// Within a trial all `N_M` values reuse the same unitaries; the exact-mode
/// estimate at those unitaries gives the projection-noise part of the error.
pub fn run_purity_scaling(cfg: &ExperimentConfig) -> Result<Vec<ScalingRow>> {
    cfg.check_protocol("purity")?;
    run_grid(cfg, "purity", false, |ds, state| {
        let r = match ds.manifest.variant {
            Variant::Global => purity_global(ds)?,
            Variant::Local => {
                let all: Vec<usize> = (0..ds.shape().num_sites()).collect();
                purity_local(ds, &all)?
            }
        };
        let v = r.scalar();
        Ok((v, r.std_error, (v - state.purity()).abs(), None))
    })
}

/// Tomography error `‖ρ̂ − ρ‖₁` versus `N_U`, `N_M` and system size.
pub fn run_tomography_scaling(cfg: &ExperimentConfig) -> Result<Vec<ScalingRow>> {
    cfg.check_protocol("tomography")?;
    run_grid(cfg, "tomography", true, |ds, state| {
        let r = tomography(ds)?;
        let EstimateValue::Matrix(m) = &r.value else {
            unreachable!("tomography returns a matrix")
        };
        let est = m.to_matrix()?;
        let dist = trace_distance(&est, state.density_matrix().elements())?;
        Ok((dist, r.std_error, dist, Some(est)))
    })
}
