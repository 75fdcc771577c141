//! Symmetric-group machinery: permutations, cycle types, permutation
//! operators on the `k`-fold copy space.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c64, checked_pow, CMatrix, DEFAULT_DIM_CAP};

/// A bijection of `{0, …, k−1}`, stored as its image array.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let k = images.len();
        let mut seen = vec![false; k];
        for &i in &images {
            if i >= k || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!("{images:?} is not a permutation")));
            }
        }
        Ok(Self { images })
    }

    /// From one-based images, e.g. `[2, 3, 1]` for `1 ↦ 2, 2 ↦ 3, 3 ↦ 1`.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        if images.contains(&0) {
            return Err(Error::InvalidArgument("one-based images must be >= 1".into()));
        }
        Self::new(images.iter().map(|&i| i - 1).collect())
    }

    pub fn identity(k: usize) -> Self {
        Self { images: (0..k).collect() }
    }

    pub fn k(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.k(), other.k());
        Permutation {
            images: other.images.iter().map(|&i| self.images[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.k()];
        for (i, &p) in self.images.iter().enumerate() {
            inv[p] = i;
        }
        Permutation { images: inv }
    }

    /// Cycle lengths, unsorted.
    pub fn cycles(&self) -> Vec<usize> {
        let mut seen = vec![false; self.k()];
        let mut out = Vec::new();
        for start in 0..self.k() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.images[i];
                len += 1;
            }
            out.push(len);
        }
        out
    }

    pub fn num_cycles(&self) -> usize {
        self.cycles().len()
    }

    /// `b` with `b[l−1]` the number of cycles of length `l`.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut b = vec![0; self.k()];
        for len in self.cycles() {
            b[len - 1] += 1;
        }
        b
    }

    /// All of `S_k` in lexicographic order of the image arrays.
    pub fn all(k: usize) -> Vec<Permutation> {
        let mut current: Vec<usize> = (0..k).collect();
        let mut out = vec![Permutation { images: current.clone() }];
        // next lexicographic permutation
        while let Some(i) = (1..k).rev().find(|&i| current[i - 1] < current[i]) {
            let j = (i..k).rev().find(|&j| current[j] > current[i - 1]).expect("pivot exists");
            current.swap(i - 1, j);
            current[i..].reverse();
            out.push(Permutation { images: current.clone() });
        }
        out
    }
}

/// Number of permutations in `S_k` with cycle type `1^{b_1} 2^{b_2} …`:
/// `k! / Π_l (b_l! l^{b_l})`.
pub fn cycle_type_count(b: &[usize]) -> Result<u64> {
    let k: usize = b.iter().enumerate().map(|(i, &bl)| (i + 1) * bl).sum();
    if k != b.len() && !(b.len() > k && b[k..].iter().all(|&x| x == 0)) {
        return Err(Error::InvalidArgument(format!("cycle type {b:?} does not sum to a valid order")));
    }
    if k > 20 {
        return Err(Error::InvalidArgument("order too large".into()));
    }
    let fact = |n: usize| -> u64 { (1..=n as u64).product() };
    let denom: u64 = b
        .iter()
        .enumerate()
        .map(|(i, &bl)| fact(bl) * ((i + 1) as u64).pow(bl as u32))
        .product();
    Ok(fact(k) / denom)
}

/// All cycle types of `S_k` (as `b` vectors of length `k`).
pub fn cycle_types(k: usize) -> Vec<Vec<usize>> {
    fn partitions(remaining: usize, max_part: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining == 0 {
            out.push(current.clone());
            return;
        }
        for part in (1..=max_part.min(remaining)).rev() {
            current.push(part);
            partitions(remaining - part, part, current, out);
            current.pop();
        }
    }
    let mut parts = Vec::new();
    partitions(k, k, &mut Vec::new(), &mut parts);
    parts
        .into_iter()
        .map(|p| {
            let mut b = vec![0; k];
            for len in p {
                b[len - 1] += 1;
            }
            b
        })
        .collect()
}

/// The operator `W_π` on `(C^d)^{⊗k}`, stored as the basis map it induces.
#[derive(Clone, Debug, PartialEq)]
pub struct PermOperator {
    dim: usize,
    map: Vec<usize>,
}

impl PermOperator {
    /// `W_π |s_1 … s_k⟩ = |s_{π(1)} … s_{π(k)}⟩`.
    pub fn new(pi: &Permutation, d: usize) -> Result<Self> {
        let k = pi.k();
        let dim = checked_pow(d, k, DEFAULT_DIM_CAP)?;
        let strides: Vec<usize> = (0..k).map(|j| d.pow((k - 1 - j) as u32)).collect();
        let map = (0..dim)
            .map(|x| (0..k).map(|j| ((x / strides[pi.apply(j)]) % d) * strides[j]).sum())
            .collect();
        Ok(Self { dim, map })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `W|x⟩ = |map[x]⟩`.
    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn trace(&self) -> usize {
        self.map.iter().enumerate().filter(|(x, &y)| *x == y).count()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (x, &y) in self.map.iter().enumerate() {
            m[(y, x)] = c64(1.0, 0.0);
        }
        m
    }
}

pub fn perm_operator(pi: &Permutation, d: usize) -> Result<CMatrix> {
    Ok(PermOperator::new(pi, d)?.to_dense())
}
