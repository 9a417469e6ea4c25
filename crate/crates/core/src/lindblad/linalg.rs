//! Small dense complex linear algebra: products, LU solves, the matrix
//! exponential and Hermitian eigenvalues.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

pub type C<T> = Complex<T>;

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CMat<T> {
    n: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> C<T>) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds from a row-major slice of length n².
    pub fn from_row_major(n: usize, data: Vec<C<T>>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: data.len(),
            });
        }
        Ok(Self { n, data })
    }

    /// |ψ⟩⟨ψ|.
    pub fn outer(psi: &[C<T>]) -> Self {
        Self::from_fn(psi.len(), |i, j| psi[i] * psi[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C<T>] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C<T>> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> C<T> {
        (0..self.n).fold(C::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    /// self += s·other
    pub fn axpy(&mut self, s: C<T>, other: &Self) {
        debug_assert_eq!(self.n, other.n);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + s * b;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d = *d + a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C<T>]) -> Vec<C<T>> {
        let n = self.n;
        (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(v)
                    .fold(C::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Kronecker product self ⊗ other.
    pub fn kron(&self, other: &Self) -> Self {
        let (p, q) = (self.n, other.n);
        Self::from_fn(p * q, |i, j| self[(i / q, j / q)] * other[(i % q, j % q)])
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self.data[i * n + j].norm()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt()
    }

    /// ‖A − A†‖_F.
    pub fn hermiticity_defect(&self) -> T {
        let n = self.n;
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                s = s + (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// Principal submatrix on the given indices.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |i, j| self[(idx[i], idx[j])])
    }
}

impl<T> Index<(usize, usize)> for CMat<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.n + j]
    }
}

/// LU factorization with partial pivoting.
pub struct Lu<T> {
    lu: CMat<T>,
    perm: Vec<usize>,
}

impl<T: Real> Lu<T> {
    pub fn new(a: &CMat<T>) -> Result<Self> {
        let n = a.dim();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.norm1().max(T::min_positive_value());
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if !(best > scale * T::epsilon() * T::lit(1e-3)) {
                return Err(Error::Singular);
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - f * u;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve_vec(&self, b: &[C<T>]) -> Vec<C<T>> {
        let n = self.lu.dim();
        let mut x: Vec<C<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                x[i] = x[i] - l * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                x[i] = x[i] - u * x[k];
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &CMat<T>) -> CMat<T> {
        let n = b.dim();
        let mut out = CMat::zeros(n);
        let mut col = vec![C::zero(); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = b[(i, j)];
            }
            let x = self.solve_vec(&col);
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        out
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;
const MAX_SQUARINGS: i32 = 1000;

/// Matrix exponential by [13/13] Padé approximation with scaling and squaring.
pub fn expm<T: Real>(a: &CMat<T>) -> Result<CMat<T>> {
    let n = a.dim();
    if !a.is_finite() {
        return Err(Error::Propagation("non-finite generator".into()));
    }
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = a.norm1().to_f64_lossy();
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    if s > MAX_SQUARINGS {
        return Err(Error::Propagation(format!("generator norm {norm:e} too large")));
    }
    let a = a.scale(C::new(T::lit(0.5f64.powi(s)), T::zero()));
    let b = |k: usize| C::new(T::lit(PADE13[k]), T::zero());
    let id = CMat::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    let mut inner = a6.scale(b(13));
    inner.axpy(b(11), &a4);
    inner.axpy(b(9), &a2);
    let mut u = a6.matmul(&inner);
    u.axpy(b(7), &a6);
    u.axpy(b(5), &a4);
    u.axpy(b(3), &a2);
    u.axpy(b(1), &id);
    let u = a.matmul(&u);

    let mut inner = a6.scale(b(12));
    inner.axpy(b(10), &a4);
    inner.axpy(b(8), &a2);
    let mut v = a6.matmul(&inner);
    v.axpy(b(6), &a6);
    v.axpy(b(4), &a4);
    v.axpy(b(2), &a2);
    v.axpy(b(0), &id);

    let lu = Lu::new(&v.sub(&u)).map_err(|_| Error::Propagation("singular Padé denominator".into()))?;
    let mut r = lu.solve(&v.add(&u));
    for _ in 0..s {
        r = r.matmul(&r);
    }
    if !r.is_finite() {
        return Err(Error::Propagation("exponential overflowed".into()));
    }
    Ok(r)
}

/// Eigenvalues of a real symmetric matrix (row-major, n×n) by cyclic Jacobi
/// rotations, ascending.
pub fn symmetric_eigenvalues<T: Real>(n: usize, mut a: Vec<T>) -> Result<Vec<T>> {
    if a.len() != n * n {
        return Err(Error::Dimension {
            expected: n * n,
            got: a.len(),
        });
    }
    let total: T = a.iter().map(|&x| x * x).sum::<T>().sqrt();
    let tol = total * T::epsilon() * T::lit(n as f64);
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<T>()
            .sqrt();
        if off <= tol {
            let mut ev: Vec<T> = (0..n).map(|i| a[i * n + i]).collect();
            ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
            return Ok(ev);
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(Error::Propagation("Jacobi eigenvalue iteration did not converge".into()))
}

/// Eigenvalues of a Hermitian matrix, ascending. Uses the real symmetric
/// embedding [[Re, −Im], [Im, Re]], whose spectrum is each eigenvalue twice.
pub fn hermitian_eigenvalues<T: Real>(h: &CMat<T>) -> Result<Vec<T>> {
    let n = h.dim();
    let m = 2 * n;
    let mut a = vec![T::zero(); m * m];
    for i in 0..n {
        for j in 0..n {
            // symmetrize against round-off
            let z = (h[(i, j)] + h[(j, i)].conj()) * T::lit(0.5);
            a[i * m + j] = z.re;
            a[(i + n) * m + (j + n)] = z.re;
            a[i * m + (j + n)] = -z.im;
            a[(i + n) * m + j] = z.im;
        }
    }
    let ev = symmetric_eigenvalues(m, a)?;
    Ok(ev.into_iter().step_by(2).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    fn random_mat(n: usize, seed: &[f64]) -> CMat<f64> {
        CMat::from_fn(n, |i, j| {
            let k = (i * n + j) * 2;
            c(seed[k % seed.len()], seed[(k + 1) % seed.len()])
        })
    }

    fn to_na(m: &CMat<f64>) -> DMatrix<C<f64>> {
        DMatrix::from_fn(m.dim(), m.dim(), |i, j| m[(i, j)])
    }

    #[test]
    fn expm_of_diagonal_and_nilpotent() {
        let d = CMat::from_fn(3, |i, j| if i == j { c(i as f64 - 1.0, 0.5) } else { c(0.0, 0.0) });
        let e = expm(&d).unwrap();
        for i in 0..3 {
            let z = c(i as f64 - 1.0, 0.5).exp();
            assert_relative_eq!(e[(i, i)].re, z.re, max_relative = 1e-14);
            assert_relative_eq!(e[(i, i)].im, z.im, max_relative = 1e-14);
        }
        let mut n = CMat::<f64>::zeros(2);
        n[(0, 1)] = c(3.0, 0.0);
        let e = expm(&n).unwrap();
        assert_relative_eq!(e[(0, 1)].re, 3.0, max_relative = 1e-15);
        assert_relative_eq!(e[(0, 0)].re, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn expm_rotation_with_large_norm() {
        // exp(θ[[0,-1],[1,0]]) is a rotation; exercises squaring
        let th = 40.0;
        let m = CMat::from_row_major(2, vec![c(0.0, 0.0), c(-th, 0.0), c(th, 0.0), c(0.0, 0.0)]).unwrap();
        let e = expm(&m).unwrap();
        assert!((e[(0, 0)].re - th.cos()).abs() < 1e-11);
        assert!((e[(1, 0)].re - th.sin()).abs() < 1e-11);
    }

    #[test]
    fn expm_rejects_non_finite() {
        let mut m = CMat::<f64>::zeros(2);
        m[(0, 0)] = c(f64::NAN, 0.0);
        assert!(matches!(expm(&m), Err(Error::Propagation(_))));
    }

    #[test]
    fn lu_solves_and_detects_singularity() {
        let seed = [0.3, -1.2, 0.7, 2.1, -0.4, 0.9, 1.5, -0.8, 0.2, 0.6, -1.1, 0.35, 0.05];
        let a = random_mat(5, &seed).add(&CMat::identity(5).scale(c(3.0, 0.0)));
        let x: Vec<_> = (0..5).map(|i| c(i as f64, 1.0 - i as f64)).collect();
        let b = a.matvec(&x);
        let got = Lu::new(&a).unwrap().solve_vec(&b);
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).norm() < 1e-12);
        }
        assert!(matches!(Lu::new(&CMat::<f64>::zeros(3)), Err(Error::Singular)));
    }

    #[test]
    fn hermitian_eigenvalues_match_nalgebra() {
        let seed = [0.3, -1.2, 0.7, 2.1, -0.4, 0.9, 1.5, -0.8, 0.2, 0.6, -1.1, 0.35, 0.05, 0.77];
        let a = random_mat(6, &seed);
        let h = a.add(&a.adjoint());
        let ours = hermitian_eigenvalues(&h).unwrap();
        let mut theirs: Vec<f64> = to_na(&h).symmetric_eigenvalues().iter().copied().collect();
        theirs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (o, t) in ours.iter().zip(&theirs) {
            assert!((o - t).abs() < 1e-11, "{o} vs {t}");
        }
    }

    #[test]
    fn works_in_single_precision() {
        let m = CMat::<f32>::from_fn(2, |i, j| if i == j { C::new(-1.0, 0.0) } else { C::new(0.0, 0.0) });
        let e = expm(&m).unwrap();
        assert!((e[(0, 0)].re - (-1.0f32).exp()).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn expm_matches_nalgebra(v in proptest::collection::vec(-3.0f64..3.0, 32)) {
            let a = random_mat(4, &v);
            let ours = expm(&a).unwrap();
            let theirs = to_na(&a).exp();
            let scale = theirs.iter().map(|z| z.norm()).fold(1.0, f64::max);
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert!((ours[(i, j)] - theirs[(i, j)]).norm() < 1e-10 * scale);
                }
            }
        }

        #[test]
        fn expm_of_sum_of_commuting(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let a = CMat::from_row_major(2, vec![c(x, 0.0), c(y, 0.0), c(y, 0.0), c(x, 0.0)]).unwrap();
            let e = expm(&a).unwrap();
            // eigenvalues x±y on (1,±1)/√2
            let p = (x + y).exp();
            let m = (x - y).exp();
            prop_assert!((e[(0, 0)].re - 0.5 * (p + m)).abs() < 1e-11 * p.max(m));
            prop_assert!((e[(0, 1)].re - 0.5 * (p - m)).abs() < 1e-11 * p.max(m));
        }
    }
}
