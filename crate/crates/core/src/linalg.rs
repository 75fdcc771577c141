//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra` dense matrices of `Complex<f64>`. Multi-site
//! operators use the big-endian digit convention: site 0 is the most
//! significant base-`d` digit of a basis index.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest Hilbert-space dimension any dense object may have unless a caller
/// configures otherwise.
pub const DEFAULT_DIM_CAP: usize = 1 << 14;

pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn check_cap(dim: u128, cap: usize) -> Result<usize> {
    if dim > cap as u128 {
        return Err(Error::DimensionCap { dim, cap });
    }
    Ok(dim as usize)
}

/// `base^exp` with overflow and cap checking.
pub fn checked_pow(base: usize, exp: usize, cap: usize) -> Result<usize> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
        if acc > cap as u128 {
            return Err(Error::DimensionCap { dim: acc, cap });
        }
    }
    Ok(acc as usize)
}

/// Kronecker product `a ⊗ b`; `a` acts on the more significant digits.
pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_cap((a.nrows() * b.nrows()) as u128, DEFAULT_DIM_CAP)?;
    check_cap((a.ncols() * b.ncols()) as u128, DEFAULT_DIM_CAP)?;
    Ok(a.kronecker(b))
}

pub fn kron_vec(a: &CVector, b: &CVector) -> Result<CVector> {
    check_cap((a.len() * b.len()) as u128, DEFAULT_DIM_CAP)?;
    Ok(a.kronecker(b))
}

/// Kronecker product of a list of matrices, first factor most significant.
pub fn kron_all(factors: &[CMatrix]) -> Result<CMatrix> {
    let mut iter = factors.iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::InvalidArgument("empty Kronecker product".into()))?
        .clone();
    iter.try_fold(first, |acc, f| kron(&acc, f))
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `max |(U†U − I)_{ij}|`.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let prod = u.adjoint() * u;
    let mut dev = 0.0f64;
    for ((i, j), z) in prod.iter().enumerate().map(|(k, z)| ((k % u.nrows(), k / u.nrows()), z)) {
        let target = if i == j { 1.0 } else { 0.0 };
        dev = dev.max((z - c64(target, 0.0)).norm());
    }
    dev
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Real eigenvalues (ascending) of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Trace norm `‖A‖₁` of a Hermitian matrix (sum of absolute eigenvalues).
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().map(|x| x.abs()).sum()
}

/// `exp(−i H t)` for Hermitian `H`, via its eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let dev = hermitian_deviation(h);
    if dev > 1e-10 {
        return Err(Error::NotHermitian(dev));
    }
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let phases = CVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&e| (c64(0.0, -e * t)).exp()),
    );
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    Ok(scaled * v.adjoint())
}

/// Apply a `d×d` factor (row-major) to one tensor index of `data`.
///
/// `data` is viewed as a `[left, d, right]` array; the factor acts on the
/// middle index. Generic over real and complex scalars.
pub fn apply_mode<T>(data: &mut [T], factor: &[T], d: usize, left: usize, right: usize, scratch: &mut Vec<T>)
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<Output = T>,
{
    debug_assert_eq!(data.len(), left * d * right);
    debug_assert_eq!(factor.len(), d * d);
    scratch.clear();
    scratch.resize(d, T::default());
    for l in 0..left {
        let base = l * d * right;
        for r in 0..right {
            for (a, slot) in scratch.iter_mut().enumerate() {
                let row = &factor[a * d..(a + 1) * d];
                let mut acc = T::default();
                for (b, &f) in row.iter().enumerate() {
                    acc = acc + f * data[base + b * right + r];
                }
                *slot = acc;
            }
            for (a, &v) in scratch.iter().enumerate() {
                data[base + a * right + r] = v;
            }
        }
    }
}

/// Apply `factor` to site `site` of an `n_sites`-digit base-`d` tensor.
pub fn apply_site<T>(data: &mut [T], factor: &[T], d: usize, n_sites: usize, site: usize, scratch: &mut Vec<T>)
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<Output = T>,
{
    let left = d.pow(site as u32);
    let right = d.pow((n_sites - site - 1) as u32);
    apply_mode(data, factor, d, left, right, scratch);
}

/// Row-major copy of a matrix's entries.
pub fn row_major(m: &CMatrix) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// JSON wire format for square operators on `(C^d)^{⊗n}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub d: usize,
    pub n: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix, d: usize, n: usize) -> Result<Self> {
        let dim = checked_pow(d, n, usize::MAX)?;
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::ShapeMismatch(format!(
                "matrix is {}x{}, expected {dim}x{dim}",
                m.nrows(),
                m.ncols()
            )));
        }
        let entries = row_major(m);
        Ok(Self {
            d,
            n,
            re: entries.iter().map(|z| z.re).collect(),
            im: entries.iter().map(|z| z.im).collect(),
        })
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let dim = checked_pow(self.d, self.n, DEFAULT_DIM_CAP)?;
        if self.re.len() != dim * dim || self.im.len() != dim * dim {
            return Err(Error::ShapeMismatch(format!(
                "expected {} entries for d={}, n={}, got re={} im={}",
                dim * dim,
                self.d,
                self.n,
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(CMatrix::from_fn(dim, dim, |i, j| {
            let k = i * dim + j;
            c64(self.re[k], self.im[k])
        }))
    }
}

pub fn pauli(i: usize) -> CMatrix {
    let z = c64(0.0, 0.0);
    let o = c64(1.0, 0.0);
    let im = c64(0.0, 1.0);
    match i {
        0 => CMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        1 => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        2 => CMatrix::from_row_slice(2, 2, &[z, -im, im, z]),
        3 => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("pauli index {i} out of range"),
    }
}
