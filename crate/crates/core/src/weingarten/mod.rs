//! Exact Haar integrals over the unitary group.
//!
//! The `k`-fold twirl `Φ⁽ᵏ⁾(O) = ∫ dU (U†)^{⊗k} O U^{⊗k}` is evaluated as
//! `Σ_{π,σ} C_{π,σ} tr(W_σ O) W_π` with `C = Q⁻¹` and
//! `Q_{π,σ} = d^{#cycles(πσ)} = tr(W_π W_σ)`. The local twirl over
//! `U = ⊗_i U_i` uses products of single-site coefficients.
//!
//! Operators on the local `k`-fold copy space of `N` sites are indexed
//! site-major: the `k` copies of site 0 form the most significant block.

mod perm;

pub use perm::{cycle_type_count, cycle_types, perm_operator, PermOperator, Permutation};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::haar::{SampledUnitary, UnitaryBatch, Variant};
use crate::linalg::{self, c64, checked_pow, kron, max_abs_diff, CMatrix, C64, DEFAULT_DIM_CAP};
use crate::rng::{self, tag};
use crate::state::HilbertShape;

/// Largest order handled.
pub const MAX_ORDER: usize = 5;

/// Gram and Weingarten matrices of `S_k` acting on `(C^d)^{⊗k}`.
#[derive(Clone, Debug, Serialize)]
pub struct WeingartenTable {
    k: usize,
    d: usize,
    perms: Vec<Permutation>,
    #[serde(serialize_with = "serialize_real_matrix")]
    gram: DMatrix<f64>,
    #[serde(serialize_with = "serialize_real_matrix")]
    weingarten: DMatrix<f64>,
}

fn serialize_real_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

impl WeingartenTable {
    pub fn new(k: usize, d: usize) -> Result<Self> {
        if k == 0 || k > MAX_ORDER {
            return Err(Error::InvalidArgument(format!("order k = {k} outside 1..={MAX_ORDER}")));
        }
        if d < 1 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if k > d {
            return Err(Error::SingularWeingarten { k, d });
        }
        let perms = Permutation::all(k);
        let m = perms.len();
        let gram = DMatrix::from_fn(m, m, |i, j| (d as f64).powi(perms[i].compose(&perms[j]).num_cycles() as i32));
        let weingarten = gram
            .clone()
            .try_inverse()
            .ok_or(Error::SingularWeingarten { k, d })?;
        Ok(Self {
            k,
            d,
            perms,
            gram,
            weingarten,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn perms(&self) -> &[Permutation] {
        &self.perms
    }

    /// `Q_{π,σ} = d^{#cycles(πσ)}`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `C = Q⁻¹`.
    pub fn weingarten(&self) -> &DMatrix<f64> {
        &self.weingarten
    }
}

/// `Π_{i=0}^{k−1} (dim + i)`.
pub fn rising_factorial(dim: usize, k: usize) -> f64 {
    (0..k).map(|i| (dim + i) as f64).product()
}

/// Per-site index maps of every `W_π` on `(C^d)^{⊗k}`.
fn site_maps(table: &WeingartenTable) -> Result<Vec<Vec<usize>>> {
    table
        .perms
        .iter()
        .map(|p| PermOperator::new(p, table.d).map(|w| w.map().to_vec()))
        .collect()
}

/// Index map of `⊗_i W_{π_i}` for the tuple encoded by `tuple` (mixed radix
/// `k!`, site 0 most significant).
fn composite_map(maps: &[Vec<usize>], tuple: usize, site_dim: usize, n_sites: usize) -> Vec<usize> {
    let m = maps.len();
    let mut choice = vec![0; n_sites];
    let mut t = tuple;
    for slot in choice.iter_mut().rev() {
        *slot = t % m;
        t /= m;
    }
    let total = site_dim.pow(n_sites as u32);
    let mut out = vec![0usize; total];
    for (x, y) in out.iter_mut().enumerate() {
        let mut rem = x;
        let mut acc = 0;
        let mut stride = 1;
        for site in (0..n_sites).rev() {
            let digit = rem % site_dim;
            rem /= site_dim;
            acc += maps[choice[site]][digit] * stride;
            stride *= site_dim;
        }
        *y = acc;
    }
    out
}

/// Local `k`-fold twirl of `o`, an operator on `((C^d)^{⊗k})^{⊗N}` in
/// site-major order, over products of independent single-site CUE unitaries.
pub fn twirl_local(o: &CMatrix, k: usize, d: usize, n_sites: usize) -> Result<CMatrix> {
    let table = WeingartenTable::new(k, d)?;
    twirl_with_table(o, &table, n_sites)
}

/// Global `k`-fold twirl of an operator on `(C^D)^{⊗k}`.
pub fn twirl_global(o: &CMatrix, k: usize, dim: usize) -> Result<CMatrix> {
    twirl_local(o, k, dim, 1)
}

pub fn twirl_with_table(o: &CMatrix, table: &WeingartenTable, n_sites: usize) -> Result<CMatrix> {
    let site_dim = checked_pow(table.d, table.k, DEFAULT_DIM_CAP)?;
    let total = checked_pow(site_dim, n_sites, DEFAULT_DIM_CAP)?;
    if o.nrows() != total || o.ncols() != total {
        return Err(Error::ShapeMismatch(format!(
            "operator is {}x{}, expected {total}x{total}",
            o.nrows(),
            o.ncols()
        )));
    }
    let maps = site_maps(table)?;
    let m = maps.len();
    let n_tuples = checked_pow(m, n_sites, usize::MAX)?;

    // b_σ = tr(W_σ O) = Σ_x O[x, w_σ(x)]
    let mut coeffs: Vec<C64> = (0..n_tuples)
        .into_par_iter()
        .map(|t| {
            let w = composite_map(&maps, t, site_dim, n_sites);
            w.iter().enumerate().map(|(x, &y)| o[(x, y)]).sum()
        })
        .collect();

    // c_π = Σ_σ Π_i C[π_i, σ_i] b_σ, contracted site by site
    let c: Vec<C64> = linalg::row_major(&table.weingarten.map(|x| c64(x, 0.0)));
    let mut scratch = Vec::new();
    for site in 0..n_sites {
        linalg::apply_site(&mut coeffs, &c, m, n_sites, site, &mut scratch);
    }

    let mut out = CMatrix::zeros(total, total);
    for (t, &coef) in coeffs.iter().enumerate() {
        if coef == c64(0.0, 0.0) {
            continue;
        }
        let w = composite_map(&maps, t, site_dim, n_sites);
        for (x, &y) in w.iter().enumerate() {
            out[(y, x)] += coef;
        }
    }
    Ok(out)
}

/// `W_{(2,1)}^{⊗N}`: the swap of two copies of an `N`-site system, site-major.
pub fn swap_site_major(d: usize, n_sites: usize) -> Result<CMatrix> {
    let swap = perm_operator(&Permutation::new(vec![1, 0])?, d)?;
    linalg::kron_all(&vec![swap; n_sites])
}

/// `o^{⊗N}` with `o = Σ_{s,s'} ((d+1)δ_{ss'} − 1) |s⟩⟨s| ⊗ |s'⟩⟨s'|`, site-major.
pub fn hamming_operator_site_major(d: usize, n_sites: usize) -> Result<CMatrix> {
    let mut o = CMatrix::zeros(d * d, d * d);
    for s in 0..d {
        for t in 0..d {
            let v = if s == t { d as f64 } else { -1.0 };
            o[(s * d + t, s * d + t)] = c64(v, 0.0);
        }
    }
    linalg::kron_all(&vec![o; n_sites])
}

/// Reorder an operator on `k` copies of an `N`-site system from copy-major
/// (`H^{⊗k}`, `H = (C^d)^{⊗N}`) to site-major order.
pub fn copy_major_to_site_major(o: &CMatrix, d: usize, k: usize, n_sites: usize) -> Result<CMatrix> {
    let perm = copy_to_site_permutation(d, k, n_sites)?;
    let dim = perm.len();
    if o.nrows() != dim || o.ncols() != dim {
        return Err(Error::ShapeMismatch("operator does not match copy space".into()));
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| o[(perm[i], perm[j])]))
}

/// For each site-major index, the copy-major index of the same basis state.
fn copy_to_site_permutation(d: usize, k: usize, n_sites: usize) -> Result<Vec<usize>> {
    let dim = checked_pow(d, k * n_sites, DEFAULT_DIM_CAP)?;
    let digit = |x: usize, pos: usize| (x / d.pow((k * n_sites - 1 - pos) as u32)) % d;
    Ok((0..dim)
        .map(|x| {
            // site-major position of (site, copy) is site * k + copy
            let mut y = 0;
            for copy in 0..k {
                for site in 0..n_sites {
                    y = y * d + digit(x, site * k + copy);
                }
            }
            y
        })
        .collect())
}

/// Reference twirls for `k = 1, 2` on one `d`-dimensional system, written
/// out without the Weingarten table:
/// `Φ₁(O) = 1·tr O / d` and
/// `Φ₂(O) = (1 tr O + S tr SO − S tr O / d − 1 tr SO / d) / (d² − 1)`.
pub fn closed_form_twirl(o: &CMatrix, k: usize, d: usize) -> Result<CMatrix> {
    let dim = checked_pow(d, k, DEFAULT_DIM_CAP)?;
    if o.nrows() != dim || o.ncols() != dim {
        return Err(Error::ShapeMismatch(format!("operator is not {dim}×{dim}")));
    }
    let df = d as f64;
    match k {
        1 => Ok(CMatrix::identity(d, d) * (o.trace() / c64(df, 0.0))),
        2 => {
            let id = CMatrix::identity(dim, dim);
            let swap = perm_operator(&Permutation::new(vec![1, 0])?, d)?;
            let tr_o = o.trace();
            let tr_so = (&swap * o).trace();
            let norm = c64(df * df - 1.0, 0.0);
            Ok((&id * tr_o + &swap * tr_so - &swap * (tr_o / df) - &id * (tr_so / df)) / norm)
        }
        _ => Err(Error::InvalidArgument(format!("no closed form for k = {k}"))),
    }
}

/// Seeded operator with i.i.d. complex Gaussian entries.
pub fn random_operator(dim: usize, seed: u64) -> CMatrix {
    let mut rng = rng::stream(seed, &[tag::OPERATOR]);
    CMatrix::from_fn(dim, dim, |_, _| {
        c64(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) / c64(2f64.sqrt(), 0.0)
    })
}

fn site_major_power(u: &SampledUnitary, k: usize) -> Result<CMatrix> {
    let factors: Vec<CMatrix> = match u {
        SampledUnitary::Global(m) => vec![m.clone()],
        SampledUnitary::Local(f) => f.clone(),
    };
    let per_site: Vec<CMatrix> = factors
        .iter()
        .map(|f| linalg::kron_all(&vec![f.clone(); k]))
        .collect::<Result<_>>()?;
    linalg::kron_all(&per_site)
}

/// Monte-Carlo estimate of the local twirl of a seeded random operator over
/// `n_u` sampled unitaries, compared entrywise with the exact twirl.
pub fn mc_twirl_check(k: usize, shape: HilbertShape, n_u: usize, seed: u64) -> Result<f64> {
    let d = shape.local_dim();
    let n = shape.num_sites();
    let total = checked_pow(d, k * n, DEFAULT_DIM_CAP)?;
    let o = random_operator(total, seed);
    let exact = twirl_local(&o, k, d, n)?;
    let batch = UnitaryBatch::new(shape, Variant::Local, n_u, seed)?;
    let terms: Vec<CMatrix> = (0..n_u)
        .into_par_iter()
        .map(|j| {
            let v = site_major_power(&batch.get(j)?, k)?;
            Ok(v.adjoint() * &o * v)
        })
        .collect::<Result<_>>()?;
    let sum = pairwise_matrix_sum(&terms);
    let avg = sum / c64(n_u as f64, 0.0);
    Ok(max_abs_diff(&avg, &exact))
}

fn pairwise_matrix_sum(items: &[CMatrix]) -> CMatrix {
    match items.len() {
        0 => panic!("empty sum"),
        1 => items[0].clone(),
        n => pairwise_matrix_sum(&items[..n / 2]) + pairwise_matrix_sum(&items[n / 2..]),
    }
}

/// `U^{⊗k}` for a single matrix, copy-major.
pub fn tensor_power(u: &CMatrix, k: usize) -> Result<CMatrix> {
    let mut acc = u.clone();
    for _ in 1..k {
        acc = kron(&acc, u)?;
    }
    Ok(acc)
}
