//! Operators, Hamiltonian and master-equation generator for two ions
//! sharing one cavity mode.

use serde::{Deserialize, Serialize};

use super::linalg::{CMat, C};
use super::space::{CompositeSpace, IonLabel, Level};
use super::superop::{SuperBuilder, Superoperator};
use crate::error::{non_negative, Error, Result};
use crate::params::{CavityParams, IonParams};
use crate::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    /// Rotating at the cavity frequency.
    #[default]
    CavityRotating,
    Lab,
}

/// Ion–cavity couplings g_{↑k}, g_{↓k}, indexed by ion (A, B).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Couplings<T> {
    pub up: [T; 2],
    pub down: [T; 2],
}

impl<T: Real> Couplings<T> {
    pub fn uniform(g: T) -> Self {
        Self {
            up: [g; 2],
            down: [g; 2],
        }
    }
}

/// Everything the Hamiltonian needs beyond the single-ion and cavity
/// parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianTerms<T> {
    /// ↑–e detuning from the cavity for each ion.
    pub detuning: [T; 2],
    pub couplings: Couplings<T>,
    pub frame: Frame,
}

impl<T: Real> HamiltonianTerms<T> {
    pub fn from_cavity(cavity: &CavityParams<T>, frame: Frame) -> Self {
        Self {
            detuning: [cavity.delta; 2],
            couplings: Couplings::uniform(cavity.g),
            frame,
        }
    }
}

fn slot(ion: IonLabel) -> usize {
    match ion {
        IonLabel::A => 0,
        IonLabel::B => 1,
    }
}

/// Cavity annihilation operator â.
pub fn annihilation<T: Real>(space: &CompositeSpace) -> CMat<T> {
    let mut m = CMat::zeros(space.dim());
    for a in Level::ALL {
        for b in Level::ALL {
            for n in 1..=space.n_max() {
                m[(space.index(a, b, n - 1), space.index(a, b, n))] = C::new(T::lit(n as f64).sqrt(), T::zero());
            }
        }
    }
    m
}

/// |to⟩⟨from| acting on one ion, identity on the other ion and the cavity.
pub fn ion_operator<T: Real>(space: &CompositeSpace, ion: IonLabel, to: Level, from: Level) -> CMat<T> {
    let mut m = CMat::zeros(space.dim());
    for other in Level::ALL {
        for n in 0..=space.n_max() {
            let (r, c) = match ion {
                IonLabel::A => (space.index(to, other, n), space.index(from, other, n)),
                IonLabel::B => (space.index(other, to, n), space.index(other, from, n)),
            };
            m[(r, c)] = C::new(T::one(), T::zero());
        }
    }
    m
}

/// κ = 0 is allowed here so that purely coherent dynamics can be simulated.
fn check_cavity<T: Real>(cavity: &CavityParams<T>) -> Result<()> {
    non_negative("kappa", cavity.kappa)?;
    if !cavity.kappa.is_finite() {
        return Err(Error::NonPositive {
            name: "kappa",
            value: cavity.kappa.to_f64_lossy(),
        });
    }
    if let Some(w) = cavity.optical_frequency {
        crate::error::positive("optical_frequency", w)?;
    }
    Ok(())
}

fn real<T: Real>(x: T) -> C<T> {
    C::new(x, T::zero())
}

/// Two-ion Jaynes–Cummings Hamiltonian with both optical transitions of
/// each ion coupled to the cavity, using the cavity detuning and coupling
/// from `cavity` for both ions.
pub fn build_hamiltonian<T: Real>(
    space: &CompositeSpace,
    ion_a: &IonParams<T>,
    ion_b: &IonParams<T>,
    cavity: &CavityParams<T>,
    frame: Frame,
) -> Result<CMat<T>> {
    build_hamiltonian_with(space, [ion_a, ion_b], cavity, &HamiltonianTerms::from_cavity(cavity, frame))
}

pub fn build_hamiltonian_with<T: Real>(
    space: &CompositeSpace,
    ions: [&IonParams<T>; 2],
    cavity: &CavityParams<T>,
    terms: &HamiltonianTerms<T>,
) -> Result<CMat<T>> {
    check_cavity(cavity)?;
    for g in terms.couplings.up.iter().chain(&terms.couplings.down) {
        non_negative("g", *g)?;
    }
    for ion in ions {
        if !ion.delta_eg.is_finite() || !ion.omega_g.is_finite() {
            return Err(Error::Invalid("ion splittings must be finite in the simulator".into()));
        }
    }
    let offset = match terms.frame {
        Frame::CavityRotating => T::zero(),
        Frame::Lab => cavity.optical_frequency.ok_or(Error::Missing("optical_frequency"))?,
    };
    let dim = space.dim();
    let mut h = CMat::zeros(dim);
    for i in 0..dim {
        let (a, b, n) = space.decompose(i);
        let mut e = offset * T::lit(n as f64);
        for (k, level) in [a, b].into_iter().enumerate() {
            let ion = ions[k];
            let base = offset + terms.detuning[k];
            e = e + match level {
                Level::Up => T::zero(),
                Level::Down => ion.omega_g,
                Level::E => base,
                Level::EPrime => base + ion.omega_e(),
            };
        }
        h[(i, i)] = real(e);
    }
    let a_op = annihilation::<T>(space);
    let a_dag = a_op.adjoint();
    for ion in [IonLabel::A, IonLabel::B] {
        let k = slot(ion);
        for (g, lower, upper) in [
            (terms.couplings.up[k], Level::Up, Level::E),
            (terms.couplings.down[k], Level::Down, Level::EPrime),
        ] {
            if g.is_zero() {
                continue;
            }
            let sigma = ion_operator::<T>(space, ion, lower, upper);
            let term = sigma.adjoint().matmul(&a_op).add(&a_dag.matmul(&sigma));
            h.axpy(real(g), &term);
        }
    }
    Ok(h)
}

/// Options for the dissipative part of the generator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiouvillianOptions<T> {
    /// Multiplier on γ★ in the excited-manifold dephasing dissipator. With 1
    /// the optical coherence decays at γ★/2 from this term; 2 doubles it.
    pub dephasing_rate_factor: T,
}

impl<T: Real> Default for LiouvillianOptions<T> {
    fn default() -> Self {
        Self {
            dephasing_rate_factor: T::one(),
        }
    }
}

/// Master-equation generator together with the cavity jump map ρ ↦ âρâ†.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Liouvillian<T> {
    pub space: CompositeSpace,
    pub generator: Superoperator<T>,
    pub jump: Superoperator<T>,
    pub kappa: T,
}

pub fn build_liouvillian<T: Real>(
    space: &CompositeSpace,
    h: &CMat<T>,
    ions: [&IonParams<T>; 2],
    cavity: &CavityParams<T>,
    options: &LiouvillianOptions<T>,
) -> Result<Liouvillian<T>> {
    space.check_dim(h.dim())?;
    check_cavity(cavity)?;
    non_negative("dephasing_rate_factor", options.dephasing_rate_factor)?;
    for ion in ions {
        non_negative("gamma", ion.gamma())?;
        non_negative("gamma_star", ion.gamma_star)?;
    }
    let a_op = annihilation::<T>(space);
    let mut b = SuperBuilder::new(space.dim());
    b.hamiltonian(h)?;
    b.dissipator(&a_op, cavity.kappa)?;
    for ion in [IonLabel::A, IonLabel::B] {
        let p = ions[slot(ion)];
        b.dissipator(&ion_operator(space, ion, Level::Up, Level::E), p.gamma())?;
        b.dissipator(&ion_operator(space, ion, Level::Down, Level::EPrime), p.gamma())?;
        let proj = ion_operator::<T>(space, ion, Level::E, Level::E)
            .add(&ion_operator(space, ion, Level::EPrime, Level::EPrime));
        b.dissipator(&proj, options.dephasing_rate_factor * p.gamma_star)?;
    }
    let mut j = SuperBuilder::new(space.dim());
    j.sandwich(&a_op, &a_op.adjoint(), real(T::one()))?;
    Ok(Liouvillian {
        space: *space,
        generator: b.build(),
        jump: j.build(),
        kappa: cavity.kappa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::linalg::hermitian_eigenvalues;
    use proptest::prelude::*;

    fn ion(gamma: f64, gstar: f64) -> IonParams<f64> {
        IonParams {
            gamma_r: gamma,
            gamma_nr: 0.0,
            gamma_star: gstar,
            chi: 0.0,
            beta: 1.0,
            omega_g: 0.0,
            delta_eg: 5.0,
        }
    }

    fn cavity(g: f64, delta: f64) -> CavityParams<f64> {
        CavityParams {
            g,
            kappa: 1.0,
            delta,
            optical_frequency: Some(1.0e3),
            n_max: 2,
        }
    }

    #[test]
    fn uncoupled_hamiltonian_is_block_diagonal_in_photon_number() {
        let s = CompositeSpace::new(2).unwrap();
        let i = ion(0.01, 0.0);
        let h = build_hamiltonian(&s, &i, &i, &cavity(0.0, 3.0), Frame::CavityRotating).unwrap();
        for r in 0..s.dim() {
            for c in 0..s.dim() {
                if s.decompose(r).2 != s.decompose(c).2 {
                    assert!(h[(r, c)].norm() == 0.0);
                }
            }
        }
    }

    #[test]
    fn single_excitation_splitting() {
        // only ion A's ↑–e transition coupled: {|e,↑,0⟩, |↑,↑,1⟩} is closed
        let s = CompositeSpace::new(2).unwrap();
        let (g, d) = (0.3, 1.7);
        let i = ion(0.01, 0.0);
        let c = cavity(g, d);
        let terms = HamiltonianTerms {
            detuning: [d; 2],
            couplings: Couplings { up: [g, 0.0], down: [0.0; 2] },
            frame: Frame::CavityRotating,
        };
        let h = build_hamiltonian_with(&s, [&i, &i], &c, &terms).unwrap();
        let e = s.index(Level::E, Level::Up, 0);
        let p = s.index(Level::Up, Level::Up, 1);
        for k in 0..s.dim() {
            if k != e && k != p {
                assert_eq!(h[(e, k)].norm() + h[(p, k)].norm(), 0.0);
            }
        }
        let ev = hermitian_eigenvalues(&h.submatrix(&[e, p])).unwrap();
        assert!((ev[1] - ev[0] - (d * d + 4.0 * g * g).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lab_frame_needs_optical_frequency() {
        let s = CompositeSpace::new(1).unwrap();
        let i = ion(0.01, 0.0);
        let mut c = cavity(0.1, 1.0);
        let h = build_hamiltonian(&s, &i, &i, &c, Frame::Lab).unwrap();
        let vac = s.index(Level::Up, Level::Up, 0);
        let one = s.index(Level::Up, Level::Up, 1);
        assert!((h[(one, one)].re - h[(vac, vac)].re - 1.0e3).abs() < 1e-9);
        c.optical_frequency = None;
        assert!(matches!(
            build_hamiltonian(&s, &i, &i, &c, Frame::Lab),
            Err(Error::Missing("optical_frequency"))
        ));
    }

    #[test]
    fn liouvillian_rejects_mismatched_dimension() {
        let s = CompositeSpace::new(2).unwrap();
        let i = ion(0.01, 0.0);
        let h = CMat::<f64>::identity(5);
        assert!(matches!(
            build_liouvillian(&s, &h, [&i, &i], &cavity(0.1, 1.0), &LiouvillianOptions::default()),
            Err(Error::Dimension { .. })
        ));
    }

    proptest! {
        #[test]
        fn hamiltonian_is_hermitian(g in 0.0f64..1.0, d in -50.0f64..50.0, deg in 0.1f64..10.0, wg in 0.0f64..3.0) {
            let s = CompositeSpace::new(2).unwrap();
            let mut i = ion(0.01, 0.0);
            i.delta_eg = deg;
            i.omega_g = wg;
            let h = build_hamiltonian(&s, &i, &i, &cavity(g, d), Frame::CavityRotating).unwrap();
            prop_assert!(h.hermiticity_defect() <= 1e-12 * h.frobenius());
        }

        #[test]
        fn liouvillian_is_trace_free(
            g in 0.0f64..0.5, d in 1.0f64..50.0, gamma in 0.0f64..0.1, gs in 0.0f64..0.2,
            seed in proptest::collection::vec(-1.0f64..1.0, 96),
        ) {
            let s = CompositeSpace::new(2).unwrap();
            let i = ion(gamma.max(1e-6), gs);
            let c = cavity(g, d);
            let h = build_hamiltonian(&s, &i, &i, &c, Frame::CavityRotating).unwrap();
            let l = build_liouvillian(&s, &h, [&i, &i], &c, &LiouvillianOptions::default()).unwrap();
            let n = s.dim();
            let x = CMat::from_fn(n, |r, k| C::new(seed[(r * 7 + k) % 96], seed[(r + 3 * k) % 96]));
            let rho = x.add(&x.adjoint());
            let out = l.generator.apply_to(&rho).unwrap();
            prop_assert!(out.trace().norm() <= 1e-9 * rho.frobenius());
        }
    }
}
