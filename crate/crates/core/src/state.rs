//! Multi-qudit quantum states: construction, reduction and Bloch-space views.
//!
//! Sites are numbered from 0. Site 0 is the most significant base-`d` digit of
//! a basis index, so `|s_0 s_1 … s_{N−1}⟩` has index `Σ_i s_i d^{N−1−i}`.

use nalgebra::{Matrix3, Matrix4, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c64, checked_pow, expm_hermitian, hermitian_deviation, hermitian_eigenvalues, kron, pauli, trace, CMatrix,
    CVector, C64, DEFAULT_DIM_CAP,
};
use crate::rng::{self, tag};

/// Local dimension, number of sites and total dimension of a lattice system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ShapeRepr", into = "ShapeRepr")]
pub struct HilbertShape {
    d: usize,
    n: usize,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct ShapeRepr {
    d: usize,
    n: usize,
}

impl TryFrom<ShapeRepr> for HilbertShape {
    type Error = Error;
    fn try_from(r: ShapeRepr) -> Result<Self> {
        HilbertShape::new(r.d, r.n)
    }
}

impl From<HilbertShape> for ShapeRepr {
    fn from(s: HilbertShape) -> Self {
        ShapeRepr { d: s.d, n: s.n }
    }
}

impl HilbertShape {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        Self::with_cap(d, n, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(d: usize, n: usize, cap: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument(format!("local dimension must be >= 2, got {d}")));
        }
        if n < 1 {
            return Err(Error::InvalidArgument("need at least one site".into()));
        }
        let dim = checked_pow(d, n, cap)?;
        Ok(Self { d, n, dim })
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn num_sites(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Base-`d` digits of `index`, site 0 first.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for slot in out.iter_mut().rev() {
            *slot = index % self.d;
            index /= self.d;
        }
        out
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &s| acc * self.d + s)
    }

    /// Shape of the subsystem made of `sites`.
    pub fn subsystem(&self, sites: &[usize]) -> Result<Self> {
        validate_sites(sites, self.n)?;
        Self::new(self.d, sites.len())
    }

    /// For each full basis index, the index of its restriction to `sites`
    /// (digits taken in the order given).
    pub fn restriction_map(&self, sites: &[usize]) -> Result<Vec<usize>> {
        validate_sites(sites, self.n)?;
        let strides: Vec<usize> = (0..self.n).map(|i| self.d.pow((self.n - 1 - i) as u32)).collect();
        Ok((0..self.dim)
            .map(|x| sites.iter().fold(0, |acc, &site| acc * self.d + (x / strides[site]) % self.d))
            .collect())
    }

    /// Base-`d` digit string of `index`, site 0 leftmost.
    pub fn bitstring(&self, index: usize) -> String {
        self.digits(index)
            .iter()
            .map(|&s| std::char::from_digit(s as u32, 36).expect("digit below 36"))
            .collect()
    }

    pub fn parse_bitstring(&self, s: &str) -> Result<usize> {
        if s.chars().count() != self.n {
            return Err(Error::InvalidArgument(format!("bitstring `{s}` does not have {} digits", self.n)));
        }
        let mut digits = Vec::with_capacity(self.n);
        for ch in s.chars() {
            match ch.to_digit(36) {
                Some(v) if (v as usize) < self.d => digits.push(v as usize),
                _ => return Err(Error::InvalidArgument(format!("invalid digit `{ch}` for d = {}", self.d))),
            }
        }
        Ok(self.index(&digits))
    }
}

pub(crate) fn validate_sites(sites: &[usize], n: usize) -> Result<()> {
    if sites.is_empty() {
        return Err(Error::InvalidArgument("site set is empty".into()));
    }
    let mut seen = vec![false; n];
    for &s in sites {
        if s >= n {
            return Err(Error::InvalidArgument(format!("site {s} out of range for {n} sites")));
        }
        if std::mem::replace(&mut seen[s], true) {
            return Err(Error::InvalidArgument(format!("site {s} listed twice")));
        }
    }
    Ok(())
}

/// A normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    shape: HilbertShape,
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(shape: HilbertShape, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != shape.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{} amplitudes for dimension {}",
                amplitudes.len(),
                shape.dim()
            )));
        }
        let norm2 = amplitudes.norm_squared();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("squared norm {norm2} is not 1")));
        }
        Ok(Self { shape, amplitudes })
    }

    /// Normalizes before validating.
    pub fn normalized(shape: HilbertShape, mut amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize zero vector".into()));
        }
        amplitudes /= c64(norm, 0.0);
        Self::new(shape, amplitudes)
    }

    pub fn basis(shape: HilbertShape, index: usize) -> Result<Self> {
        if index >= shape.dim() {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range")));
        }
        let mut v = CVector::zeros(shape.dim());
        v[index] = c64(1.0, 0.0);
        Ok(Self { shape, amplitudes: v })
    }

    pub fn shape(&self) -> HilbertShape {
        self.shape
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            shape: self.shape,
            elements: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Reduced state on `keep` via the Schmidt reshape `ρ_K = M M†`.
    pub fn reduce(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let kept = self.shape.subsystem(keep)?;
        if keep.len() == self.shape.n {
            let mut sorted = keep.to_vec();
            sorted.sort_unstable();
            if sorted == keep {
                return Ok(self.to_density());
            }
        }
        let traced: Vec<usize> = (0..self.shape.n).filter(|s| !keep.contains(s)).collect();
        let to_kept = self.shape.restriction_map(keep)?;
        let traced_dim = self.shape.d.pow(traced.len() as u32);
        let to_traced = if traced.is_empty() {
            vec![0; self.shape.dim]
        } else {
            self.shape.restriction_map(&traced)?
        };
        let mut m = CMatrix::zeros(kept.dim(), traced_dim);
        for (x, amp) in self.amplitudes.iter().enumerate() {
            m[(to_kept[x], to_traced[x])] = *amp;
        }
        Ok(DensityMatrix {
            shape: kept,
            elements: &m * m.adjoint(),
        })
    }
}

/// A density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    shape: HilbertShape,
    elements: CMatrix,
}

impl DensityMatrix {
    /// Validating constructor.
    pub fn new(shape: HilbertShape, elements: CMatrix) -> Result<Self> {
        if elements.nrows() != shape.dim() || elements.ncols() != shape.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix for dimension {}",
                elements.nrows(),
                elements.ncols(),
                shape.dim()
            )));
        }
        let herm = hermitian_deviation(&elements);
        if herm > 1e-12 {
            return Err(Error::NotHermitian(herm));
        }
        let tr = trace(&elements);
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min_ev = hermitian_eigenvalues(&elements)[0];
        if min_ev < -1e-10 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_ev:e}")));
        }
        Ok(Self { shape, elements })
    }

    pub(crate) fn new_unchecked(shape: HilbertShape, elements: CMatrix) -> Self {
        Self { shape, elements }
    }

    pub fn maximally_mixed(shape: HilbertShape) -> Self {
        let dim = shape.dim();
        Self {
            shape,
            elements: CMatrix::identity(dim, dim) / c64(dim as f64, 0.0),
        }
    }

    pub fn shape(&self) -> HilbertShape {
        self.shape
    }

    pub fn elements(&self) -> &CMatrix {
        &self.elements
    }

    pub fn purity(&self) -> f64 {
        purity_exact(self)
    }

    /// `tr(ρ σ)`.
    pub fn overlap(&self, other: &DensityMatrix) -> f64 {
        // tr(AB) = Σ_ij A_ij B_ji
        let mut acc = 0.0;
        for i in 0..self.elements.nrows() {
            for j in 0..self.elements.ncols() {
                acc += (self.elements[(i, j)] * other.elements[(j, i)]).re;
            }
        }
        acc
    }

    /// `ρ^p` by repeated multiplication.
    pub fn power_trace(&self, p: usize) -> f64 {
        let mut acc = self.elements.clone();
        for _ in 1..p {
            acc = &acc * &self.elements;
        }
        trace(&acc).re
    }

    /// `λ ρ₁ + (1−λ) ρ₂`.
    pub fn mix(&self, other: &DensityMatrix, lambda: f64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch("mixing states of different shape".into()));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!("mixing weight {lambda} outside [0, 1]")));
        }
        Ok(Self {
            shape: self.shape,
            elements: &self.elements * c64(lambda, 0.0) + &other.elements * c64(1.0 - lambda, 0.0),
        })
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self> {
        if self.shape.d != other.shape.d {
            return Err(Error::ShapeMismatch("mixed local dimensions".into()));
        }
        let shape = HilbertShape::new(self.shape.d, self.shape.n + other.shape.n)?;
        Ok(Self {
            shape,
            elements: kron(&self.elements, &other.elements)?,
        })
    }
}

/// `ρ_K = tr_{S∖K} ρ`. The kept sites appear in the order given.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let shape = rho.shape;
    let kept = shape.subsystem(keep)?;
    let traced: Vec<usize> = (0..shape.n).filter(|s| !keep.contains(s)).collect();
    let to_kept = shape.restriction_map(keep)?;
    let traced_dim = shape.d.pow(traced.len() as u32);
    let to_traced = if traced.is_empty() {
        vec![0; shape.dim]
    } else {
        shape.restriction_map(&traced)?
    };
    // full[a][t] = full index with kept digits a and traced digits t
    let mut full = vec![0usize; kept.dim() * traced_dim];
    for x in 0..shape.dim {
        full[to_kept[x] * traced_dim + to_traced[x]] = x;
    }
    let out = CMatrix::from_fn(kept.dim(), kept.dim(), |a, b| {
        (0..traced_dim)
            .map(|t| rho.elements[(full[a * traced_dim + t], full[b * traced_dim + t])])
            .sum()
    });
    Ok(DensityMatrix::new_unchecked(kept, out))
}

/// `tr ρ² = Σ_ij |ρ_ij|²`.
pub fn purity_exact(rho: &DensityMatrix) -> f64 {
    rho.elements.iter().map(|z| z.norm_sqr()).sum()
}

/// Second Rényi entropy `−log₂ p` of a purity `p`.
pub fn renyi2(purity: f64) -> Result<f64> {
    if purity.is_nan() || purity <= 0.0 {
        return Err(Error::InvalidArgument(format!("purity must be positive, got {purity}")));
    }
    Ok(-purity.log2())
}

/// Bloch vector `v_i = tr(ρ σ_i)` of a single qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector(pub Vector3<f64>);

impl BlochVector {
    pub fn norm_squared(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn to_density(&self) -> DensityMatrix {
        let mut m = pauli(0);
        for i in 0..3 {
            m += pauli(i + 1) * c64(self.0[i], 0.0);
        }
        DensityMatrix::new_unchecked(HilbertShape { d: 2, n: 1, dim: 2 }, m * c64(0.5, 0.0))
    }
}

/// Two-qubit Bloch matrix `r_{μν} = tr(ρ σ_μ ⊗ σ_ν)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochMatrix(pub Matrix4<f64>);

impl BlochMatrix {
    /// Bloch vector of qubit 0 (`r_{i0}`).
    pub fn v(&self) -> Vector3<f64> {
        Vector3::new(self.0[(1, 0)], self.0[(2, 0)], self.0[(3, 0)])
    }

    /// Bloch vector of qubit 1 (`r_{0j}`).
    pub fn w(&self) -> Vector3<f64> {
        Vector3::new(self.0[(0, 1)], self.0[(0, 2)], self.0[(0, 3)])
    }

    /// Correlation block `R_{ij} = r_{ij}`.
    pub fn correlations(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(1, 1).into_owned()
    }

    /// `(1 + |v|² + |w|² + ‖R‖²)/4`.
    pub fn purity(&self) -> f64 {
        0.25 * (1.0 + self.v().norm_squared() + self.w().norm_squared() + self.correlations().norm_squared())
    }

    pub fn to_density(&self) -> DensityMatrix {
        let mut m = CMatrix::zeros(4, 4);
        for mu in 0..4 {
            for nu in 0..4 {
                m += kron(&pauli(mu), &pauli(nu)).expect("4x4") * c64(self.0[(mu, nu)], 0.0);
            }
        }
        DensityMatrix::new_unchecked(HilbertShape { d: 2, n: 2, dim: 4 }, m * c64(0.25, 0.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bloch {
    Vector(BlochVector),
    Matrix(BlochMatrix),
}

pub fn bloch_decompose(rho: &DensityMatrix) -> Result<Bloch> {
    if rho.shape.d != 2 {
        return Err(Error::ShapeMismatch("Bloch decomposition needs qubits".into()));
    }
    let coeff = |op: &CMatrix| -> f64 { trace(&(&rho.elements * op)).re };
    match rho.shape.n {
        1 => Ok(Bloch::Vector(BlochVector(Vector3::new(
            coeff(&pauli(1)),
            coeff(&pauli(2)),
            coeff(&pauli(3)),
        )))),
        2 => {
            let mut r = Matrix4::zeros();
            for mu in 0..4 {
                for nu in 0..4 {
                    r[(mu, nu)] = coeff(&kron(&pauli(mu), &pauli(nu))?);
                }
            }
            r[(0, 0)] = 1.0;
            Ok(Bloch::Matrix(BlochMatrix(r)))
        }
        n => Err(Error::ShapeMismatch(format!("Bloch decomposition needs 1 or 2 qubits, got {n}"))),
    }
}

/// Named state families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StateKind {
    /// `|0…0⟩`.
    PureProduct,
    /// `Σ_a |a…a⟩ / √d`.
    Ghz,
    /// Haar-random pure state.
    RandomPure,
    /// Haar-random pure state on `n + ancilla_sites` sites, ancillas traced out.
    RandomMixed { ancilla_sites: usize },
    MaximallyMixed,
}

impl StateKind {
    pub fn label(&self) -> String {
        match self {
            StateKind::PureProduct => "pure_product".into(),
            StateKind::Ghz => "ghz".into(),
            StateKind::RandomPure => "random_pure".into(),
            StateKind::RandomMixed { ancilla_sites } => format!("random_mixed_{ancilla_sites}"),
            StateKind::MaximallyMixed => "maximally_mixed".into(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pure_product" => Ok(StateKind::PureProduct),
            "ghz" => Ok(StateKind::Ghz),
            "random_pure" => Ok(StateKind::RandomPure),
            "maximally_mixed" => Ok(StateKind::MaximallyMixed),
            other => other
                .strip_prefix("random_mixed_")
                .and_then(|a| a.parse().ok())
                .map(|ancilla_sites| StateKind::RandomMixed { ancilla_sites })
                .ok_or_else(|| Error::InvalidArgument(format!("unknown state kind `{other}`"))),
        }
    }
}

/// A state in whichever representation is cheapest.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl QuantumState {
    pub fn shape(&self) -> HilbertShape {
        match self {
            QuantumState::Pure(v) => v.shape(),
            QuantumState::Mixed(m) => m.shape(),
        }
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        match self {
            QuantumState::Pure(v) => v.to_density(),
            QuantumState::Mixed(m) => m.clone(),
        }
    }

    pub fn purity(&self) -> f64 {
        match self {
            QuantumState::Pure(_) => 1.0,
            QuantumState::Mixed(m) => m.purity(),
        }
    }

    pub fn reduce(&self, keep: &[usize]) -> Result<DensityMatrix> {
        match self {
            QuantumState::Pure(v) => v.reduce(keep),
            QuantumState::Mixed(m) => partial_trace(m, keep),
        }
    }
}

impl From<StateVector> for QuantumState {
    fn from(v: StateVector) -> Self {
        QuantumState::Pure(v)
    }
}

impl From<DensityMatrix> for QuantumState {
    fn from(m: DensityMatrix) -> Self {
        QuantumState::Mixed(m)
    }
}

/// Haar-random pure state: a normalized vector of i.i.d. complex Gaussians.
pub fn random_pure(shape: HilbertShape, rng: &mut impl Rng) -> StateVector {
    let v = CVector::from_iterator(
        shape.dim(),
        (0..shape.dim()).map(|_| c64(rng.sample(StandardNormal), rng.sample(StandardNormal))),
    );
    StateVector::normalized(shape, v).expect("Gaussian vector is nonzero")
}

pub fn prepare(kind: StateKind, shape: HilbertShape, seed: u64) -> Result<QuantumState> {
    let mut rng = rng::stream(seed, &[tag::STATE]);
    Ok(match kind {
        StateKind::PureProduct => QuantumState::Pure(StateVector::basis(shape, 0)?),
        StateKind::Ghz => {
            let d = shape.d;
            let step: usize = (0..shape.n).map(|i| d.pow(i as u32)).sum();
            let mut v = CVector::zeros(shape.dim());
            for a in 0..d {
                v[a * step] = c64(1.0 / (d as f64).sqrt(), 0.0);
            }
            QuantumState::Pure(StateVector::normalized(shape, v)?)
        }
        StateKind::RandomPure => QuantumState::Pure(random_pure(shape, &mut rng)),
        StateKind::RandomMixed { ancilla_sites } => {
            if ancilla_sites == 0 {
                return Err(Error::InvalidArgument("random mixed state needs ancilla sites".into()));
            }
            let total = HilbertShape::new(shape.d, shape.n + ancilla_sites)?;
            let psi = random_pure(total, &mut rng);
            let keep: Vec<usize> = (0..shape.n).collect();
            QuantumState::Mixed(psi.reduce(&keep)?)
        }
        StateKind::MaximallyMixed => QuantumState::Mixed(DensityMatrix::maximally_mixed(shape)),
    })
}

pub fn make_state(kind: StateKind, shape: HilbertShape, seed: u64) -> Result<DensityMatrix> {
    Ok(prepare(kind, shape, seed)?.density_matrix())
}

/// `exp(−iHt)|ψ⟩`.
pub fn evolve(psi: &StateVector, h: &CMatrix, t: f64) -> Result<StateVector> {
    if h.nrows() != psi.shape.dim() || h.ncols() != psi.shape.dim() {
        return Err(Error::ShapeMismatch("Hamiltonian does not match state".into()));
    }
    let u = expm_hermitian(h, t)?;
    let out = u * &psi.amplitudes;
    let norm2 = out.norm_squared();
    debug_assert!((norm2 - 1.0).abs() < 1e-10);
    StateVector::normalized(psi.shape, out)
}

/// Random Hermitian matrix `(G + G†)/2` with Gaussian `G`.
pub fn random_hamiltonian(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| c64(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    (&g + g.adjoint()) * c64(0.5, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn qubits(n: usize) -> HilbertShape {
        HilbertShape::new(2, n).unwrap()
    }

    #[test]
    fn shape_rejects_overflow_and_bad_dims() {
        assert!(matches!(HilbertShape::new(2, 15), Err(Error::DimensionCap { .. })));
        assert!(HilbertShape::new(1, 3).is_err());
        assert!(HilbertShape::new(2, 0).is_err());
        assert!(matches!(HilbertShape::new(usize::MAX, 3), Err(Error::DimensionCap { .. })));
        assert_eq!(HilbertShape::new(3, 4).unwrap().dim(), 81);
    }

    #[test]
    fn bitstrings_put_site_zero_first() {
        let s = HilbertShape::new(3, 3).unwrap();
        assert_eq!(s.bitstring(5), "012");
        assert_eq!(s.parse_bitstring("012").unwrap(), 5);
        assert!(s.parse_bitstring("013").is_err());
        assert!(s.parse_bitstring("01").is_err());
    }

    #[test]
    fn partial_trace_of_product_state() {
        let rho = StateVector::basis(qubits(2), 0).unwrap().to_density();
        let red = partial_trace(&rho, &[1]).unwrap();
        let expected = StateVector::basis(qubits(1), 0).unwrap().to_density();
        assert!(max_abs_diff(red.elements(), expected.elements()) < 1e-15);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let rho = make_state(StateKind::Ghz, qubits(2), 0).unwrap();
        let red = partial_trace(&rho, &[1]).unwrap();
        let half = DensityMatrix::maximally_mixed(qubits(1));
        assert!(max_abs_diff(red.elements(), half.elements()) < 1e-15);
        assert!((purity_exact(&red) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn partial_trace_errors() {
        let rho = DensityMatrix::maximally_mixed(qubits(2));
        assert!(partial_trace(&rho, &[]).is_err());
        assert!(partial_trace(&rho, &[2]).is_err());
        assert!(partial_trace(&rho, &[0, 0]).is_err());
    }

    #[test]
    fn partial_trace_of_random_three_qubit_state() {
        let psi = match prepare(StateKind::RandomPure, qubits(3), 11).unwrap() {
            QuantumState::Pure(p) => p,
            _ => unreachable!(),
        };
        let rho = psi.to_density();
        let a = partial_trace(&rho, &[1, 2]).unwrap();
        let b = partial_trace(&rho, &[0]).unwrap();
        assert!((trace(a.elements()).re - 1.0).abs() < 1e-12);
        assert!((purity_exact(&a) - purity_exact(&b)).abs() < 1e-12);
        // the Schmidt reshape agrees with the generic reduction
        let a2 = psi.reduce(&[1, 2]).unwrap();
        assert!(max_abs_diff(a.elements(), a2.elements()) < 1e-14);
        DensityMatrix::new(a.shape(), a.elements().clone()).unwrap();
    }

    #[test]
    fn purity_examples() {
        assert!((make_state(StateKind::RandomPure, qubits(3), 1).unwrap().purity() - 1.0).abs() < 1e-12);
        assert!((DensityMatrix::maximally_mixed(qubits(3)).purity() - 0.125).abs() < 1e-15);
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c64(0.75, 0.0), c64(0.25, 0.0)]));
        let rho = DensityMatrix::new(qubits(1), m).unwrap();
        assert!((purity_exact(&rho) - 5.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn renyi2_values() {
        assert_eq!(renyi2(1.0).unwrap(), 0.0);
        assert_eq!(renyi2(0.5).unwrap(), 1.0);
        assert_eq!(renyi2(0.25).unwrap(), 2.0);
        assert!(renyi2(0.0).is_err());
        assert!(renyi2(-0.1).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let s = qubits(1);
        let not_herm = CMatrix::from_row_slice(2, 2, &[c64(0.5, 0.0), c64(0.1, 0.0), c64(0.0, 0.0), c64(0.5, 0.0)]);
        assert!(matches!(DensityMatrix::new(s, not_herm), Err(Error::NotHermitian(_))));
        let bad_trace = CMatrix::identity(2, 2);
        assert!(DensityMatrix::new(s, bad_trace).is_err());
        let negative = CMatrix::from_diagonal(&CVector::from_vec(vec![c64(1.5, 0.0), c64(-0.5, 0.0)]));
        assert!(DensityMatrix::new(s, negative).is_err());
    }

    #[test]
    fn bloch_examples() {
        let up = StateVector::basis(qubits(1), 0).unwrap().to_density();
        match bloch_decompose(&up).unwrap() {
            Bloch::Vector(v) => assert!((v.0 - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-15),
            _ => panic!(),
        }
        match bloch_decompose(&DensityMatrix::maximally_mixed(qubits(1))).unwrap() {
            Bloch::Vector(v) => assert!(v.0.norm() < 1e-15),
            _ => panic!(),
        }
        let bell = make_state(StateKind::Ghz, qubits(2), 0).unwrap();
        match bloch_decompose(&bell).unwrap() {
            Bloch::Matrix(r) => {
                assert!(r.v().norm() < 1e-15 && r.w().norm() < 1e-15);
                assert!((r.correlations().norm_squared() - 3.0).abs() < 1e-12);
            }
            _ => panic!(),
        }
        assert!(bloch_decompose(&DensityMatrix::maximally_mixed(qubits(3))).is_err());
        assert!(bloch_decompose(&DensityMatrix::maximally_mixed(HilbertShape::new(3, 1).unwrap())).is_err());
    }

    #[test]
    fn make_state_examples() {
        for n in 1..4 {
            assert!((make_state(StateKind::PureProduct, qubits(n), 0).unwrap().purity() - 1.0).abs() < 1e-15);
        }
        let rms = make_state(StateKind::RandomMixed { ancilla_sites: 8 }, qubits(4), 3).unwrap();
        let p = rms.purity();
        assert!((1.0 / 16.0..1.0).contains(&p), "purity {p}");
        // Haar average (D_A + D_B)/(D_A D_B + 1)
        assert!((p - 272.0 / 4097.0).abs() < 0.01);
        assert!(make_state(StateKind::RandomMixed { ancilla_sites: 0 }, qubits(2), 0).is_err());
        assert!(HilbertShape::new(2, 4).and_then(|_| HilbertShape::new(2, 4 + 11)).is_err());
        // replay
        assert_eq!(
            make_state(StateKind::RandomPure, qubits(3), 9).unwrap(),
            make_state(StateKind::RandomPure, qubits(3), 9).unwrap()
        );
    }

    #[test]
    fn evolve_examples() {
        let s = qubits(1);
        let plus = StateVector::new(s, CVector::from_vec(vec![c64(FRAC_1_SQRT_2, 0.0), c64(FRAC_1_SQRT_2, 0.0)])).unwrap();
        let same = evolve(&plus, &pauli(3), 0.0).unwrap();
        assert!((same.amplitudes() - plus.amplitudes()).norm() < 1e-15);
        let out = evolve(&plus, &pauli(3), FRAC_PI_2).unwrap();
        assert!((out.amplitudes()[0] - c64(0.0, -FRAC_1_SQRT_2)).norm() < 1e-14);
        assert!((out.amplitudes()[1] - c64(0.0, FRAC_1_SQRT_2)).norm() < 1e-14);
        assert!((out.inner(&out).re - 1.0).abs() < 1e-12);
    }
}
