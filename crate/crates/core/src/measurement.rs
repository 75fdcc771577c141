//! Simulated randomized measurements: outcome probabilities under sampled
//! unitaries, projection noise, unbiased second-order statistics, and the
//! Hamming-distance kernel.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{BatchManifest, SampledUnitary, UnitaryBatch};
use crate::linalg::CMatrix;
use crate::rng::{self, tag};
use crate::state::{DensityMatrix, HilbertShape, QuantumState};

/// Shots per unitary; `Exact` means infinitely many (no projection noise).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shots {
    Finite(u64),
    Exact,
}

impl Shots {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "exact" | "∞" => Ok(Shots::Exact),
            other => match other.parse::<u64>() {
                Ok(0) | Err(_) => Err(Error::InvalidArgument(format!("invalid shot count `{other}`"))),
                Ok(n) => Ok(Shots::Finite(n)),
            },
        }
    }

    pub fn finite(&self) -> Option<u64> {
        match self {
            Shots::Finite(n) => Some(*n),
            Shots::Exact => None,
        }
    }
}

impl std::fmt::Display for Shots {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Shots::Finite(n) => write!(f, "{n}"),
            Shots::Exact => f.write_str("inf"),
        }
    }
}

impl Serialize for Shots {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Shots::Finite(n) => s.serialize_u64(*n),
            Shots::Exact => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Shots {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(0) => Err(serde::de::Error::custom("shot count must be positive")),
            Repr::Int(n) => Ok(Shots::Finite(n)),
            Repr::Str(s) => Shots::parse(&s).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcomes {
    /// Sparse histogram of `n_m` projective measurements.
    Shots { n_m: u64, counts: BTreeMap<usize, u64> },
    /// Exact outcome probabilities.
    Exact(Vec<f64>),
}

/// Measurement outcomes for one unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeRecord {
    pub unitary_index: usize,
    pub shape: HilbertShape,
    pub outcomes: Outcomes,
}

fn falling(n: u64, k: usize) -> f64 {
    (0..k as u64).map(|i| n.saturating_sub(i) as f64).product()
}

impl OutcomeRecord {
    pub fn exact(unitary_index: usize, shape: HilbertShape, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != shape.dim() {
            return Err(Error::ShapeMismatch(format!("{} probabilities for dimension {}", probs.len(), shape.dim())));
        }
        validate_probabilities(&probs)?;
        Ok(Self {
            unitary_index,
            shape,
            outcomes: Outcomes::Exact(probs),
        })
    }

    pub fn from_counts(unitary_index: usize, shape: HilbertShape, n_m: u64, counts: BTreeMap<usize, u64>) -> Result<Self> {
        if n_m == 0 {
            return Err(Error::InvalidArgument("n_m must be positive".into()));
        }
        if let Some((&s, _)) = counts.iter().find(|(&s, _)| s >= shape.dim()) {
            return Err(Error::InvalidArgument(format!("outcome index {s} out of range")));
        }
        let total: u64 = counts.values().sum();
        if total != n_m {
            return Err(Error::InvalidArgument(format!("counts sum to {total}, expected n_m = {n_m}")));
        }
        let counts = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        Ok(Self {
            unitary_index,
            shape,
            outcomes: Outcomes::Shots { n_m, counts },
        })
    }

    pub fn n_m(&self) -> Option<u64> {
        match &self.outcomes {
            Outcomes::Shots { n_m, .. } => Some(*n_m),
            Outcomes::Exact(_) => None,
        }
    }

    pub fn shots(&self) -> Shots {
        self.n_m().map_or(Shots::Exact, Shots::Finite)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.outcomes, Outcomes::Exact(_))
    }

    /// Dense vector of counts (finite mode) or probabilities (exact mode).
    pub fn dense(&self) -> Vec<f64> {
        match &self.outcomes {
            Outcomes::Exact(p) => p.clone(),
            Outcomes::Shots { counts, .. } => {
                let mut v = vec![0.0; self.shape.dim()];
                for (&s, &c) in counts {
                    v[s] = c as f64;
                }
                v
            }
        }
    }

    /// Unbiased estimate of each `P(s)`: `n_s / N_M` or `p_s`.
    pub fn est_probabilities(&self) -> Vec<f64> {
        let mut v = self.dense();
        if let Some(n) = self.n_m() {
            let inv = 1.0 / n as f64;
            v.iter_mut().for_each(|x| *x *= inv);
        }
        v
    }

    fn count(&self, s: usize) -> u64 {
        match &self.outcomes {
            Outcomes::Shots { counts, .. } => counts.get(&s).copied().unwrap_or(0),
            Outcomes::Exact(_) => 0,
        }
    }

    fn require_shots(&self, k: usize) -> Result<()> {
        match self.n_m() {
            Some(n) if n < k as u64 => Err(Error::InsufficientShots { needed: k as u64, got: n }),
            _ => Ok(()),
        }
    }

    /// Unbiased estimate of `P(s)²`: `n_s(n_s−1) / (N_M(N_M−1))`.
    pub fn est_square(&self, s: usize) -> Result<f64> {
        self.require_shots(2)?;
        Ok(match &self.outcomes {
            Outcomes::Exact(p) => p[s] * p[s],
            Outcomes::Shots { n_m, .. } => falling(self.count(s), 2) / falling(*n_m, 2),
        })
    }

    /// Unbiased estimate of `P(s)P(t)`; reduces to [`Self::est_square`] for `s = t`.
    pub fn est_pair(&self, s: usize, t: usize) -> Result<f64> {
        if s == t {
            return self.est_square(s);
        }
        self.require_shots(2)?;
        Ok(match &self.outcomes {
            Outcomes::Exact(p) => p[s] * p[t],
            Outcomes::Shots { n_m, .. } => (self.count(s) * self.count(t)) as f64 / falling(*n_m, 2),
        })
    }

    /// Unbiased estimate of `Σ_s P(s)^k` from falling factorials of counts.
    pub fn est_power_sum(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidArgument("power must be positive".into()));
        }
        self.require_shots(k)?;
        Ok(match &self.outcomes {
            Outcomes::Exact(p) => p.iter().map(|x| x.powi(k as i32)).sum(),
            Outcomes::Shots { n_m, counts } => {
                counts.values().map(|&c| falling(c, k)).sum::<f64>() / falling(*n_m, k)
            }
        })
    }

    /// Unbiased estimate of `(Σ_s w_s P(s))²`.
    pub fn est_linear_square(&self, weights: &[f64]) -> Result<f64> {
        if weights.len() != self.shape.dim() {
            return Err(Error::ShapeMismatch("weight vector length".into()));
        }
        self.require_shots(2)?;
        Ok(match &self.outcomes {
            Outcomes::Exact(p) => {
                let z: f64 = p.iter().zip(weights).map(|(a, b)| a * b).sum();
                z * z
            }
            Outcomes::Shots { n_m, counts } => {
                let lin: f64 = counts.iter().map(|(&s, &c)| weights[s] * c as f64).sum();
                let diag: f64 = counts.iter().map(|(&s, &c)| weights[s] * weights[s] * c as f64).sum();
                (lin * lin - diag) / falling(*n_m, 2)
            }
        })
    }

    /// Restrict outcomes to the digits of `sites` (in the order given).
    pub fn marginalize(&self, sites: &[usize]) -> Result<OutcomeRecord> {
        let sub = self.shape.subsystem(sites)?;
        let map = self.shape.restriction_map(sites)?;
        let outcomes = match &self.outcomes {
            Outcomes::Exact(p) => {
                let mut q = vec![0.0; sub.dim()];
                for (x, &px) in p.iter().enumerate() {
                    q[map[x]] += px;
                }
                Outcomes::Exact(q)
            }
            Outcomes::Shots { n_m, counts } => {
                let mut out = BTreeMap::new();
                for (&s, &c) in counts {
                    *out.entry(map[s]).or_insert(0) += c;
                }
                Outcomes::Shots { n_m: *n_m, counts: out }
            }
        };
        Ok(OutcomeRecord {
            unitary_index: self.unitary_index,
            shape: sub,
            outcomes,
        })
    }
}

fn validate_probabilities(p: &[f64]) -> Result<()> {
    if p.iter().any(|x| !x.is_finite() || *x < -1e-12) {
        return Err(Error::InvalidArgument("probabilities must be finite and nonnegative".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("probabilities sum to {total}")));
    }
    Ok(())
}

/// `P(s) = ⟨s|UρU†|s⟩`. Local unitaries are applied factor by factor.
pub fn probabilities(state: &QuantumState, u: &SampledUnitary) -> Result<Vec<f64>> {
    let dim = state.shape().dim();
    if u.dim() != dim {
        return Err(Error::ShapeMismatch(format!("unitary of dimension {} for state of dimension {dim}", u.dim())));
    }
    if let SampledUnitary::Local(f) = u {
        if f.len() != state.shape().num_sites() || f[0].nrows() != state.shape().local_dim() {
            return Err(Error::ShapeMismatch("local factors do not match state shape".into()));
        }
    }
    let mut p: Vec<f64> = match state {
        QuantumState::Pure(psi) => u.apply(psi.amplitudes()).iter().map(|z| z.norm_sqr()).collect(),
        QuantumState::Mixed(rho) => match u {
            SampledUnitary::Global(m) => probabilities_dense(rho, m),
            SampledUnitary::Local(_) => u.conjugate(rho.elements()).diagonal().iter().map(|z| z.re).collect(),
        },
    };
    for x in p.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    Ok(p)
}

/// `P(s)` from an explicit `D × D` unitary; `O(D³)`.
pub fn probabilities_dense(rho: &DensityMatrix, u: &CMatrix) -> Vec<f64> {
    let m = u * rho.elements();
    (0..u.nrows())
        .map(|s| (0..u.ncols()).map(|b| (m[(s, b)] * u[(s, b)].conj()).re).sum())
        .collect()
}

/// One multinomial draw of `n_m` shots from `p`.
pub fn sample_counts(
    p: &[f64],
    n_m: u64,
    unitary_index: usize,
    shape: HilbertShape,
    rng: &mut impl Rng,
) -> Result<OutcomeRecord> {
    if n_m == 0 {
        return Err(Error::InvalidArgument("n_m must be positive".into()));
    }
    if p.len() != shape.dim() {
        return Err(Error::ShapeMismatch("probability vector length".into()));
    }
    validate_probabilities(p)?;
    let weights: Vec<f64> = p.iter().map(|x| x.max(0.0)).collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut counts = BTreeMap::new();
    for _ in 0..n_m {
        *counts.entry(dist.sample(rng)).or_insert(0u64) += 1;
    }
    Ok(OutcomeRecord {
        unitary_index,
        shape,
        outcomes: Outcomes::Shots { n_m, counts },
    })
}

/// The kernel `o^{⊗N}`, `o = (d+1)I − J`, with entries `d^N (−d)^{−D[s,s']}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HammingKernel {
    d: usize,
    n: usize,
}

impl HammingKernel {
    pub fn new(d: usize, n: usize) -> Self {
        Self { d, n }
    }

    pub fn local(shape: HilbertShape) -> Self {
        Self::new(shape.local_dim(), shape.num_sites())
    }

    /// The global kernel treats the whole system as one site of dimension `D`.
    pub fn global(shape: HilbertShape) -> Self {
        Self::new(shape.dim(), 1)
    }

    pub fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    /// `o_{ab} = (d+1)δ_{ab} − 1`.
    pub fn local_factor(&self) -> Vec<f64> {
        let d = self.d;
        (0..d * d)
            .map(|k| if k / d == k % d { d as f64 } else { -1.0 })
            .collect()
    }

    /// `d^N (−d)^{−D[s,t]}`.
    pub fn entry(&self, s: usize, t: usize) -> f64 {
        let (mut a, mut b) = (s, t);
        let mut hamming = 0;
        for _ in 0..self.n {
            if a % self.d != b % self.d {
                hamming += 1;
            }
            a /= self.d;
            b /= self.d;
        }
        (self.d as f64).powi(self.n as i32) * (-(self.d as f64)).powi(-hamming)
    }

    /// `x ← o^{⊗N} x`, one site at a time: `O(N·D)`.
    pub fn apply(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.dim());
        let d = self.d;
        let scale = (d + 1) as f64;
        for site in 0..self.n {
            let right = d.pow((self.n - site - 1) as u32);
            let left = x.len() / (d * right);
            for l in 0..left {
                let base = l * d * right;
                for r in 0..right {
                    let fiber_sum: f64 = (0..d).map(|a| x[base + a * right + r]).sum();
                    for a in 0..d {
                        let idx = base + a * right + r;
                        x[idx] = scale * x[idx] - fiber_sum;
                    }
                }
            }
        }
    }

    pub fn dense(&self) -> nalgebra::DMatrix<f64> {
        let dim = self.dim();
        nalgebra::DMatrix::from_fn(dim, dim, |s, t| self.entry(s, t))
    }
}

/// `Σ_{s,s'} K[s,s'] est[P(s) P'(s')]`.
///
/// With `same_run`, `a` and `b` must be the same record and the U-statistic
/// estimator (diagonal removed) is used; otherwise the records are treated as
/// independent runs.
pub fn kernel_quadratic_form(a: &OutcomeRecord, b: &OutcomeRecord, kernel: &HammingKernel, same_run: bool) -> Result<f64> {
    if a.shape.dim() != kernel.dim() || b.shape.dim() != kernel.dim() {
        return Err(Error::ShapeMismatch("records do not match kernel".into()));
    }
    if same_run && a != b {
        return Err(Error::InvalidArgument("same_run requires identical records".into()));
    }
    let na = a.dense();
    let mut kb = b.dense();
    kernel.apply(&mut kb);
    let dot: f64 = na.iter().zip(&kb).map(|(x, y)| x * y).sum();
    let diag = kernel.entry(0, 0);
    match (a.n_m(), b.n_m(), same_run) {
        (Some(n), _, true) => {
            if n < 2 {
                return Err(Error::InsufficientShots { needed: 2, got: n });
            }
            Ok((dot - diag * n as f64) / falling(n, 2))
        }
        (None, _, true) => Ok(dot),
        (na_m, nb_m, false) => Ok(dot / (na_m.unwrap_or(1) as f64 * nb_m.unwrap_or(1) as f64)),
    }
}

/// Outcomes of one state measured under every unitary of a batch.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub manifest: BatchManifest,
    pub label: String,
    pub records: Vec<OutcomeRecord>,
    /// Present when the unitaries were stored alongside the outcomes.
    pub unitaries: Option<Vec<SampledUnitary>>,
}

impl Dataset {
    pub fn shape(&self) -> HilbertShape {
        self.manifest.shape
    }

    pub fn shots(&self) -> Option<Shots> {
        self.records.first().map(OutcomeRecord::shots)
    }

    /// Same records restricted to `sites`.
    pub fn marginalize(&self, sites: &[usize]) -> Result<Dataset> {
        Ok(Dataset {
            manifest: BatchManifest {
                shape: self.shape().subsystem(sites)?,
                ..self.manifest
            },
            label: self.label.clone(),
            records: self.records.iter().map(|r| r.marginalize(sites)).collect::<Result<_>>()?,
            unitaries: None,
        })
    }

    /// The first `n_u` records.
    pub fn truncate(&self, n_u: usize) -> Dataset {
        let n_u = n_u.min(self.records.len());
        Dataset {
            manifest: BatchManifest { n_u, ..self.manifest },
            label: self.label.clone(),
            records: self.records[..n_u].to_vec(),
            unitaries: self.unitaries.as_ref().map(|u| u[..n_u].to_vec()),
        }
    }
}

/// Measure each state under every unitary of `batch`.
///
/// Shot noise for state `i` under unitary `j` is drawn from the stream keyed
/// by `(shot_seed, j, i)`, so results do not depend on scheduling.
pub fn simulate(
    states: &[(&str, &QuantumState)],
    batch: &UnitaryBatch,
    shots: Shots,
    shot_seed: u64,
    keep_unitaries: bool,
) -> Result<Vec<Dataset>> {
    for (_, s) in states {
        if s.shape() != batch.shape() {
            return Err(Error::ShapeMismatch("state does not match batch shape".into()));
        }
    }
    let shape = batch.shape();
    let per_unitary: Vec<(Vec<OutcomeRecord>, Option<SampledUnitary>)> = (0..batch.len())
        .into_par_iter()
        .map(|j| {
            let u = batch.get(j)?;
            let recs = states
                .iter()
                .enumerate()
                .map(|(i, (_, state))| {
                    let p = probabilities(state, &u)?;
                    match shots {
                        Shots::Exact => Ok(OutcomeRecord {
                            unitary_index: j,
                            shape,
                            outcomes: Outcomes::Exact(p),
                        }),
                        Shots::Finite(n) => {
                            let mut r = rng::stream(shot_seed, &[tag::SHOTS, j as u64, i as u64]);
                            sample_counts(&p, n, j, shape, &mut r)
                        }
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((recs, keep_unitaries.then_some(u)))
        })
        .collect::<Result<_>>()?;

    let mut out: Vec<Dataset> = states
        .iter()
        .map(|(label, _)| Dataset {
            manifest: *batch.manifest(),
            label: label.to_string(),
            records: Vec::with_capacity(batch.len()),
            unitaries: keep_unitaries.then(Vec::new),
        })
        .collect();
    for (recs, u) in per_unitary {
        for (ds, rec) in out.iter_mut().zip(recs) {
            ds.records.push(rec);
            if let (Some(list), Some(u)) = (ds.unitaries.as_mut(), u.as_ref()) {
                list.push(u.clone());
            }
        }
    }
    Ok(out)
}

/// Draw `n_m` shots per unitary from the exact probabilities in `exact`.
///
/// Shots for unitary `j` come from the stream keyed by `(seed, j)`.
pub fn resample(exact: &Dataset, n_m: u64, seed: u64) -> Result<Dataset> {
    let records = exact
        .records
        .par_iter()
        .map(|rec| match &rec.outcomes {
            Outcomes::Exact(p) => {
                let mut r = rng::stream(seed, &[tag::SHOTS, rec.unitary_index as u64]);
                sample_counts(p, n_m, rec.unitary_index, rec.shape, &mut r)
            }
            Outcomes::Shots { .. } => Err(Error::InvalidArgument("resampling needs exact-mode records".into())),
        })
        .collect::<Result<_>>()?;
    Ok(Dataset {
        manifest: exact.manifest,
        label: exact.label.clone(),
        records,
        unitaries: exact.unitaries.clone(),
    })
}
