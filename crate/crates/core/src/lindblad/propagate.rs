//! Time evolution under a fixed generator, optionally conditioned on no
//! cavity photon being detected.

use num_traits::Zero;

use super::linalg::{expm, CMat, C};
use super::model::Liouvillian;
use super::state::DensityOperator;
use super::superop::Superoperator;
use crate::error::{non_negative, unit_interval, Error, Result};
use crate::Real;

/// 𝓛 − pη_d κ 𝒮.
pub fn conditional_generator<T: Real>(l: &Liouvillian<T>, p_eta_d: T, kappa: T) -> Result<Superoperator<T>> {
    unit_interval("p_eta_d", p_eta_d)?;
    non_negative("kappa", kappa)?;
    if p_eta_d.is_zero() {
        return Ok(l.generator.clone());
    }
    l.generator.add_scaled(&l.jump, C::new(-(p_eta_d * kappa), T::zero()))
}

struct Block<T> {
    idx: Vec<usize>,
    generator: CMat<T>,
}

/// Exponentiates a generator block by block over its invariant subspaces.
pub struct Propagator<T> {
    size: usize,
    dim: usize,
    blocks: Vec<Block<T>>,
}

impl<T: Real> Propagator<T> {
    pub fn new(generator: &Superoperator<T>) -> Self {
        let blocks = generator
            .components()
            .into_iter()
            .map(|idx| Block {
                generator: generator.block(&idx),
                idx,
            })
            .collect();
        Self {
            size: generator.size(),
            dim: generator.dim(),
            blocks,
        }
    }

    pub fn largest_block(&self) -> usize {
        self.blocks.iter().map(|b| b.idx.len()).max().unwrap_or(0)
    }

    /// exp(tG)·v.
    pub fn apply(&self, v: &[C<T>], t: T) -> Result<Vec<C<T>>> {
        if v.len() != self.size {
            return Err(Error::Dimension {
                expected: self.size,
                got: v.len(),
            });
        }
        non_negative("t", t)?;
        let mut out = vec![C::zero(); self.size];
        for b in &self.blocks {
            let local: Vec<C<T>> = b.idx.iter().map(|&i| v[i]).collect();
            if local.iter().all(|x| x.is_zero()) {
                continue;
            }
            let e = expm(&b.generator.scale(C::new(t, T::zero())))?;
            for (k, x) in e.matvec(&local).into_iter().enumerate() {
                out[b.idx[k]] = x;
            }
        }
        Ok(out)
    }

    pub fn propagate(&self, rho: &DensityOperator<T>, t: T) -> Result<DensityOperator<T>> {
        let out = self.apply(rho.matrix.as_slice(), t)?;
        DensityOperator::new(rho.space, CMat::from_row_major(self.dim, out)?)
    }
}

/// Unnormalized state after time `t` with no photon detected:
/// exp(t(𝓛 − pη_d κ 𝒮))ρ₀.
pub fn conditional_propagate<T: Real>(
    l: &Liouvillian<T>,
    p_eta_d: T,
    kappa: T,
    rho0: &DensityOperator<T>,
    t: T,
) -> Result<DensityOperator<T>> {
    l.space.check_dim(rho0.matrix.dim())?;
    let g = conditional_generator(l, p_eta_d, kappa)?;
    Propagator::new(&g).propagate(rho0, t)
}

/// Tolerances for the adaptive Runge–Kutta cross-check.
#[derive(Clone, Copy, Debug)]
pub struct Rk45Options<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
}

impl<T: Real> Default for Rk45Options<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-10),
            atol: T::lit(1e-12),
            max_steps: 2_000_000,
        }
    }
}

// Dormand–Prince 5(4) tableau
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates v' = Gv to time `t` with adaptive Dormand–Prince steps.
pub fn rk45_propagate<T: Real>(g: &Superoperator<T>, v0: &[C<T>], t: T, opts: &Rk45Options<T>) -> Result<Vec<C<T>>> {
    non_negative("t", t)?;
    let n = v0.len();
    let mut v = v0.to_vec();
    if t.is_zero() {
        return Ok(v);
    }
    let axpy = |base: &[C<T>], terms: &[(T, &Vec<C<T>>)], h: T| -> Vec<C<T>> {
        let mut out = base.to_vec();
        for &(c, k) in terms {
            if c.is_zero() {
                continue;
            }
            let s = c * h;
            for (o, x) in out.iter_mut().zip(k.iter()) {
                *o = *o + *x * s;
            }
        }
        out
    };
    let mut time = T::zero();
    let mut h = t / T::lit(100.0);
    let mut k1 = g.apply(&v)?;
    for _ in 0..opts.max_steps {
        if time >= t {
            return Ok(v);
        }
        if time + h > t {
            h = t - time;
        }
        let mut ks: Vec<Vec<C<T>>> = vec![k1.clone()];
        for row in A.iter().take(5) {
            let terms: Vec<(T, &Vec<C<T>>)> = row.iter().zip(&ks).map(|(&c, k)| (T::lit(c), k)).collect();
            let y = axpy(&v, &terms, h);
            ks.push(g.apply(&y)?);
        }
        let terms: Vec<(T, &Vec<C<T>>)> = A[5].iter().zip(&ks).map(|(&c, k)| (T::lit(c), k)).collect();
        let y5 = axpy(&v, &terms, h);
        let k7 = g.apply(&y5)?;
        ks.push(k7);
        let mut err = T::zero();
        for i in 0..n {
            let mut d = C::zero();
            for (s, k) in ks.iter().enumerate() {
                d = d + k[i] * T::lit(B5[s] - B4[s]);
            }
            let scale = opts.atol + opts.rtol * v[i].norm().max(y5[i].norm());
            let e = (d * h).norm() / scale;
            err = err + e * e;
        }
        let err = (err / T::lit(n as f64)).sqrt();
        if !err.is_finite() {
            return Err(Error::Propagation("Runge-Kutta step produced non-finite values".into()));
        }
        if err <= T::one() {
            time = time + h;
            v = y5;
            k1 = ks.pop().expect("seven stages");
        }
        let factor = if err.is_zero() {
            T::lit(5.0)
        } else {
            (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2)).min(T::lit(5.0))
        };
        h = h * factor;
        if h < t * T::epsilon() {
            return Err(Error::Propagation("Runge-Kutta step size underflow".into()));
        }
    }
    Err(Error::Propagation(format!(
        "Runge-Kutta integration exceeded {} steps",
        opts.max_steps
    )))
}
