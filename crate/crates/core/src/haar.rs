//! Haar-random (CUE) unitaries, sampled globally or as products of
//! independent single-site factors.

use nalgebra::Matrix3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, kron_all, pauli, trace, unitarity_deviation, CMatrix, CVector, MatrixJson};
use crate::rng::{self, tag};
use crate::state::HilbertShape;

/// Draw a `dim × dim` CUE matrix: QR of a complex Ginibre matrix with the
/// phases of `diag(R)` folded into `Q`.
pub fn sample_cue(dim: usize, rng: &mut impl Rng) -> Result<CMatrix> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("CUE dimension must be >= 2, got {dim}")));
    }
    let g = CMatrix::from_fn(dim, dim, |_, _| c64(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        let rjj = r[(j, j)];
        let norm = rjj.norm();
        if norm > 0.0 {
            col *= rjj / norm;
        }
    }
    if unitarity_deviation(&q) > 1e-12 {
        q = reorthonormalize(&q);
    }
    Ok(q)
}

/// Modified Gram-Schmidt on the columns.
fn reorthonormalize(q: &CMatrix) -> CMatrix {
    let mut out = q.clone();
    for j in 0..out.ncols() {
        for i in 0..j {
            let proj = out.column(i).dotc(&out.column(j));
            let ci = out.column(i).clone_owned();
            let mut cj = out.column_mut(j);
            cj -= ci * proj;
        }
        let norm = out.column(j).norm();
        out.column_mut(j).unscale_mut(norm);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Global,
    Local,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Global => "global",
            Variant::Local => "local",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(Variant::Global),
            "local" => Ok(Variant::Local),
            _ => Err(Error::InvalidArgument(format!("unknown variant `{s}`"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything needed to regenerate a batch of unitaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchManifest {
    pub variant: Variant,
    pub shape: HilbertShape,
    pub n_u: usize,
    pub master_seed: u64,
}

/// One sampled unitary, stored in its natural form.
#[derive(Clone, Debug, PartialEq)]
pub enum SampledUnitary {
    Global(CMatrix),
    /// Per-site `d × d` factors, site 0 first.
    Local(Vec<CMatrix>),
}

impl SampledUnitary {
    pub fn assemble(&self) -> Result<CMatrix> {
        match self {
            SampledUnitary::Global(u) => Ok(u.clone()),
            SampledUnitary::Local(f) => kron_all(f),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SampledUnitary::Global(u) => u.nrows(),
            SampledUnitary::Local(f) => f.iter().map(|m| m.nrows()).product(),
        }
    }

    /// `U |ψ⟩`, applying local factors mode by mode.
    pub fn apply(&self, psi: &CVector) -> CVector {
        match self {
            SampledUnitary::Global(u) => u * psi,
            SampledUnitary::Local(factors) => {
                let d = factors[0].nrows();
                let n = factors.len();
                let mut data: Vec<_> = psi.iter().copied().collect();
                let mut scratch = Vec::new();
                for (site, f) in factors.iter().enumerate() {
                    linalg::apply_site(&mut data, &linalg::row_major(f), d, n, site, &mut scratch);
                }
                CVector::from_vec(data)
            }
        }
    }

    /// `U ρ U†` (local factors applied index by index, never assembled).
    pub fn conjugate(&self, rho: &CMatrix) -> CMatrix {
        match self {
            SampledUnitary::Global(u) => u * rho * u.adjoint(),
            SampledUnitary::Local(factors) => {
                let d = factors[0].nrows();
                let n = factors.len();
                // nalgebra storage is column-major: the flat index is
                // col * D + row, so column digits come first.
                let mut data: Vec<_> = rho.as_slice().to_vec();
                let mut scratch = Vec::new();
                for (site, f) in factors.iter().enumerate() {
                    let rm = linalg::row_major(f);
                    let conj: Vec<_> = rm.iter().map(|z| z.conj()).collect();
                    linalg::apply_site(&mut data, &rm, d, 2 * n, n + site, &mut scratch);
                    linalg::apply_site(&mut data, &conj, d, 2 * n, site, &mut scratch);
                }
                CMatrix::from_vec(rho.nrows(), rho.ncols(), data)
            }
        }
    }

    /// `U† X U`.
    pub fn conjugate_adjoint(&self, x: &CMatrix) -> Result<CMatrix> {
        match self {
            SampledUnitary::Global(u) => Ok(u.adjoint() * x * u),
            SampledUnitary::Local(f) => {
                let adj = SampledUnitary::Local(f.iter().map(|m| m.adjoint()).collect());
                Ok(adj.conjugate(x))
            }
        }
    }

    pub fn max_unitarity_deviation(&self) -> f64 {
        match self {
            SampledUnitary::Global(u) => unitarity_deviation(u),
            SampledUnitary::Local(f) => f.iter().map(unitarity_deviation).fold(0.0, f64::max),
        }
    }
}

/// An index-addressable, replayable collection of Haar-random unitaries.
///
/// The unitary at index `j` is a pure function of the manifest and `j`.
#[derive(Clone, Debug)]
pub struct UnitaryBatch {
    manifest: BatchManifest,
}

impl UnitaryBatch {
    pub fn new(shape: HilbertShape, variant: Variant, n_u: usize, master_seed: u64) -> Result<Self> {
        Self::from_manifest(BatchManifest {
            variant,
            shape,
            n_u,
            master_seed,
        })
    }

    pub fn from_manifest(manifest: BatchManifest) -> Result<Self> {
        if manifest.n_u == 0 {
            return Err(Error::EmptyBatch);
        }
        Ok(Self { manifest })
    }

    pub fn manifest(&self) -> &BatchManifest {
        &self.manifest
    }

    pub fn len(&self) -> usize {
        self.manifest.n_u
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.n_u == 0
    }

    pub fn shape(&self) -> HilbertShape {
        self.manifest.shape
    }

    pub fn variant(&self) -> Variant {
        self.manifest.variant
    }

    pub fn get(&self, index: usize) -> Result<SampledUnitary> {
        if index >= self.manifest.n_u {
            return Err(Error::InvalidArgument(format!("unitary index {index} out of range")));
        }
        let seed = self.manifest.master_seed;
        let shape = self.manifest.shape;
        match self.manifest.variant {
            Variant::Global => {
                let mut rng = rng::stream(seed, &[tag::GLOBAL_UNITARY, index as u64]);
                Ok(SampledUnitary::Global(sample_cue(shape.dim(), &mut rng)?))
            }
            Variant::Local => (0..shape.num_sites())
                .map(|site| {
                    let mut rng = rng::stream(seed, &[tag::LOCAL_UNITARY, index as u64, site as u64]);
                    sample_cue(shape.local_dim(), &mut rng)
                })
                .collect::<Result<Vec<_>>>()
                .map(SampledUnitary::Local),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Result<SampledUnitary>> + '_ {
        (0..self.len()).map(move |j| self.get(j))
    }
}

/// JSON form of a sampled unitary: one matrix, or one matrix per site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UnitaryJson {
    Global(MatrixJson),
    Local(Vec<MatrixJson>),
}

impl UnitaryJson {
    pub fn from_unitary(u: &SampledUnitary, shape: HilbertShape) -> Result<Self> {
        match u {
            SampledUnitary::Global(m) => Ok(UnitaryJson::Global(MatrixJson::from_matrix(
                m,
                shape.local_dim(),
                shape.num_sites(),
            )?)),
            SampledUnitary::Local(f) => f
                .iter()
                .map(|m| MatrixJson::from_matrix(m, shape.local_dim(), 1))
                .collect::<Result<Vec<_>>>()
                .map(UnitaryJson::Local),
        }
    }

    pub fn to_unitary(&self) -> Result<SampledUnitary> {
        let u = match self {
            UnitaryJson::Global(m) => SampledUnitary::Global(m.to_matrix()?),
            UnitaryJson::Local(f) => {
                SampledUnitary::Local(f.iter().map(MatrixJson::to_matrix).collect::<Result<Vec<_>>>()?)
            }
        };
        let dev = u.max_unitarity_deviation();
        if dev > 1e-8 {
            return Err(Error::NotUnitary(dev));
        }
        Ok(u)
    }
}

/// The rotation `Q` with `U (v·σ) U† = (Q v)·σ`, `Q_ij = tr(σ_i U σ_j U†)/2`.
pub fn rotation_of(u: &CMatrix) -> Result<Matrix3<f64>> {
    if u.nrows() != 2 || u.ncols() != 2 {
        return Err(Error::ShapeMismatch("rotation_of needs a 2x2 unitary".into()));
    }
    let dev = unitarity_deviation(u);
    if dev > 1e-10 {
        return Err(Error::NotUnitary(dev));
    }
    let ud = u.adjoint();
    Ok(Matrix3::from_fn(|i, j| {
        0.5 * trace(&(pauli(i + 1) * u * pauli(j + 1) * &ud)).re
    }))
}
