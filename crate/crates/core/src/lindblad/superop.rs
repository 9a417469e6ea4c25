//! Sparse superoperators on row-major vectorized density matrices.

use std::collections::HashMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::linalg::{CMat, C};
use crate::error::{Error, Result};
use crate::Real;

/// Linear map on dim×dim operators, stored as a CSR matrix of size dim²×dim²
/// acting on vec(ρ) with ρ_ij at i·dim + j.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Superoperator<T> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C<T>>,
}

/// Accumulates superoperator terms before compression.
pub struct SuperBuilder<T> {
    dim: usize,
    entries: HashMap<(usize, usize), C<T>>,
}

fn nonzeros<T: Real>(m: &CMat<T>) -> Vec<(usize, usize, C<T>)> {
    let n = m.dim();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = m[(i, j)];
            if !v.is_zero() {
                out.push((i, j, v));
            }
        }
    }
    out
}

impl<T: Real> SuperBuilder<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: HashMap::new(),
        }
    }

    /// Adds ρ ↦ coeff·AρB.
    pub fn sandwich(&mut self, a: &CMat<T>, b: &CMat<T>, coeff: C<T>) -> Result<&mut Self> {
        let d = self.dim;
        for m in [a, b] {
            if m.dim() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: m.dim(),
                });
            }
        }
        let bz = nonzeros(b);
        for (p, q, av) in nonzeros(a) {
            for &(r, s, bv) in &bz {
                // (AρB)_ps += A_pq ρ_qr B_rs
                let e = self.entries.entry((p * d + s, q * d + r)).or_insert_with(C::zero);
                *e = *e + coeff * av * bv;
            }
        }
        Ok(self)
    }

    /// Adds ρ ↦ −i[H, ρ].
    pub fn hamiltonian(&mut self, h: &CMat<T>) -> Result<&mut Self> {
        let id = CMat::identity(self.dim);
        let i = C::new(T::zero(), T::one());
        self.sandwich(h, &id, -i)?;
        self.sandwich(&id, h, i)
    }

    /// Adds rate·(cρc† − ½{c†c, ρ}).
    pub fn dissipator(&mut self, c: &CMat<T>, rate: T) -> Result<&mut Self> {
        if rate == T::zero() {
            return Ok(self);
        }
        let cd = c.adjoint();
        let cdc = cd.matmul(c);
        let id = CMat::identity(self.dim);
        let r = C::new(rate, T::zero());
        let h = C::new(-rate * T::lit(0.5), T::zero());
        self.sandwich(c, &cd, r)?;
        self.sandwich(&cdc, &id, h)?;
        self.sandwich(&id, &cdc, h)
    }

    pub fn build(&self) -> Superoperator<T> {
        let n = self.dim * self.dim;
        let mut rows: Vec<Vec<(usize, C<T>)>> = vec![Vec::new(); n];
        for (&(r, c), &v) in &self.entries {
            if !v.is_zero() {
                rows[r].push((c, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Superoperator {
            dim: self.dim,
            row_ptr,
            cols,
            vals,
        }
    }
}

impl<T: Real> Superoperator<T> {
    /// Dimension of the underlying Hilbert space.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Size of the vectorized space, dim².
    pub fn size(&self) -> usize {
        self.dim * self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C<T>)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn apply(&self, v: &[C<T>]) -> Result<Vec<C<T>>> {
        if v.len() != self.size() {
            return Err(Error::Dimension {
                expected: self.size(),
                got: v.len(),
            });
        }
        Ok((0..self.size())
            .map(|r| self.row(r).fold(C::zero(), |acc, (c, x)| acc + x * v[c]))
            .collect())
    }

    pub fn apply_to(&self, rho: &CMat<T>) -> Result<CMat<T>> {
        let out = self.apply(rho.as_slice())?;
        CMat::from_row_major(self.dim, out)
    }

    /// self + s·other.
    pub fn add_scaled(&self, other: &Self, s: C<T>) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut b = SuperBuilder::new(self.dim);
        for r in 0..self.size() {
            for (c, v) in self.row(r) {
                let e = b.entries.entry((r, c)).or_insert_with(C::zero);
                *e = *e + v;
            }
            for (c, v) in other.row(r) {
                let e = b.entries.entry((r, c)).or_insert_with(C::zero);
                *e = *e + v * s;
            }
        }
        Ok(b.build())
    }

    pub fn to_dense(&self) -> CMat<T> {
        let mut m = CMat::zeros(self.size());
        for r in 0..self.size() {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Dense restriction to an index subset.
    pub fn block(&self, idx: &[usize]) -> CMat<T> {
        let mut pos = vec![usize::MAX; self.size()];
        for (k, &i) in idx.iter().enumerate() {
            pos[i] = k;
        }
        let mut m = CMat::zeros(idx.len());
        for (k, &r) in idx.iter().enumerate() {
            for (c, v) in self.row(r) {
                if pos[c] != usize::MAX {
                    m[(k, pos[c])] = v;
                }
            }
        }
        m
    }

    /// Index sets of the connected components of the coupling graph; each is
    /// an invariant subspace of the generator.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.size();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for r in 0..n {
            for (c, _) in self.row(r) {
                let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for i in 0..n {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort_by_key(|g| g[0]);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C<f64> {
        C::new(re, 0.0)
    }

    #[test]
    fn sandwich_matches_explicit_product() {
        let a = CMat::from_fn(3, |i, j| C::new((i + 2 * j) as f64, i as f64 - j as f64));
        let b = CMat::from_fn(3, |i, j| C::new(1.0 - (i * j) as f64, 0.5 * j as f64));
        let rho = CMat::from_fn(3, |i, j| C::new((i * 3 + j) as f64, 1.0));
        let mut sb = SuperBuilder::new(3);
        sb.sandwich(&a, &b, c(2.0)).unwrap();
        let got = sb.build().apply_to(&rho).unwrap();
        let want = a.matmul(&rho).matmul(&b).scale(c(2.0));
        for i in 0..3 {
            for j in 0..3 {
                assert!((got[(i, j)] - want[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dissipator_is_trace_free() {
        let op = CMat::from_fn(4, |i, j| if j == i + 1 { c((j as f64).sqrt()) } else { c(0.0) });
        let mut sb = SuperBuilder::new(4);
        sb.dissipator(&op, 0.7).unwrap();
        let l = sb.build();
        let rho = CMat::from_fn(4, |i, j| C::new(1.0 / (1 + i + j) as f64, (i as f64 - j as f64) * 0.1));
        let out = l.apply_to(&rho).unwrap();
        assert!(out.trace().norm() < 1e-14);
        let dense = l.to_dense();
        assert_eq!(dense.dim(), 16);
    }

    #[test]
    fn components_partition_and_block_extraction() {
        let d = CMat::from_fn(2, |i, j| if i == j { c(i as f64 + 1.0) } else { c(0.0) });
        let mut sb = SuperBuilder::new(2);
        sb.hamiltonian(&d).unwrap();
        let l = sb.build();
        let comps = l.components();
        assert_eq!(comps.len(), 4);
        let total: usize = comps.iter().map(|g| g.len()).sum();
        assert_eq!(total, 4);
        let b = l.block(&[1]);
        // −i(H₀₀ − H₁₁) on ρ₀₁
        assert!((b[(0, 0)] - C::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut sb = SuperBuilder::<f64>::new(3);
        assert!(sb.sandwich(&CMat::identity(2), &CMat::identity(3), c(1.0)).is_err());
        let l = sb.build();
        assert!(l.apply(&[c(1.0)]).is_err());
    }
}
