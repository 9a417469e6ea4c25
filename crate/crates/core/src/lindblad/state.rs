//! Density operators on the composite space.

use serde::{Deserialize, Serialize};

use super::linalg::{hermitian_eigenvalues, CMat, C};
use super::space::{CompositeSpace, Level};
use crate::error::Result;
use crate::Real;

/// Possibly sub-normalized density matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityOperator<T> {
    pub space: CompositeSpace,
    pub matrix: CMat<T>,
}

impl<T: Real> DensityOperator<T> {
    pub fn new(space: CompositeSpace, matrix: CMat<T>) -> Result<Self> {
        space.check_dim(matrix.dim())?;
        Ok(Self { space, matrix })
    }

    pub fn pure(space: CompositeSpace, psi: &[C<T>]) -> Result<Self> {
        space.check_dim(psi.len())?;
        Ok(Self {
            space,
            matrix: CMat::outer(psi),
        })
    }

    /// |a, b, n⟩⟨a, b, n|.
    pub fn basis(space: CompositeSpace, a: Level, b: Level, n: usize) -> Self {
        let mut m = CMat::zeros(space.dim());
        let i = space.index(a, b, n);
        m[(i, i)] = C::new(T::one(), T::zero());
        Self { space, matrix: m }
    }

    pub fn trace(&self) -> T {
        self.matrix.trace().re
    }

    pub fn hermiticity_defect(&self) -> T {
        self.matrix.hermiticity_defect()
    }

    pub fn min_eigenvalue(&self) -> Result<T> {
        Ok(hermitian_eigenvalues(&self.matrix)?[0])
    }

    pub fn population(&self, a: Level, b: Level, n: usize) -> T {
        let i = self.space.index(a, b, n);
        self.matrix[(i, i)].re
    }

    /// Photon-number distribution P(n).
    pub fn photon_distribution(&self) -> Vec<T> {
        let mut p = vec![T::zero(); self.space.photon_states()];
        for i in 0..self.space.dim() {
            let (_, _, n) = self.space.decompose(i);
            p[n] = p[n] + self.matrix[(i, i)].re;
        }
        p
    }

    /// Mean photon number ⟨â†â⟩.
    pub fn mean_photon_number(&self) -> T {
        self.photon_distribution()
            .into_iter()
            .enumerate()
            .map(|(n, p)| T::lit(n as f64) * p)
            .sum()
    }

    /// Population with ion `k` (0 = A, 1 = B) in an excited level.
    pub fn excited_population(&self, k: usize) -> T {
        (0..self.space.dim())
            .filter(|&i| {
                let (a, b, _) = self.space.decompose(i);
                [a, b][k].is_excited()
            })
            .map(|i| self.matrix[(i, i)].re)
            .sum()
    }

    /// Cavity traced out and restricted to the qubit levels {↑, ↓}² in the
    /// order (↑↑, ↑↓, ↓↑, ↓↓).
    pub fn qubit_block(&self) -> CMat<T> {
        let q = [Level::Up, Level::Down];
        let labels: Vec<(Level, Level)> = q.iter().flat_map(|&a| q.iter().map(move |&b| (a, b))).collect();
        CMat::from_fn(4, |i, j| {
            let (a, b) = labels[i];
            let (c, d) = labels[j];
            (0..=self.space.n_max()).fold(C::new(T::zero(), T::zero()), |acc, n| {
                acc + self.matrix[(self.space.index(a, b, n), self.space.index(c, d, n))]
            })
        })
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            space: self.space,
            matrix: self.matrix.scale(C::new(s, T::zero())),
        }
    }
}
