//! Electric dipole–dipole blockade CNOT and the static pair shifts behind it.

use serde::{Deserialize, Serialize};

use crate::constants::{MU0_OVER_4PI, PLANCK, VACUUM_PERMITTIVITY};
use crate::error::{positive, Error, Result};
use crate::params::IonParams;
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec3<T>(pub [T; 3]);

impl<T: Real> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self([x, y, z])
    }

    pub fn dot(&self, other: &Self) -> T {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Self(self.0.map(|v| v * s))
    }
}

/// Geometry and moments of two neighbouring ions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipolePairParams<T> {
    /// Permanent dipole change of the excited ion (C·m).
    pub delta_mu_i: T,
    /// Permanent dipole change of its neighbour (C·m).
    pub delta_mu_j: T,
    /// Separation vector (m).
    pub r_vec: Vec3<T>,
    pub mu_hat_i: Vec3<T>,
    pub mu_hat_j: Vec3<T>,
    /// Relative dielectric constant ε of the host.
    pub epsilon: T,
    /// Mischaracterization δν of the shift (Hz).
    pub delta_nu_err: T,
    /// Magnetic moment (J/T), for the magnetic comparison.
    pub magnetic_moment: Option<T>,
}

impl<T: Real> DipolePairParams<T> {
    /// Identical ions with parallel moments perpendicular to their
    /// separation, which gives a unit angular factor.
    pub fn broadside(delta_mu: T, separation: T, epsilon: T) -> Self {
        Self {
            delta_mu_i: delta_mu,
            delta_mu_j: delta_mu,
            r_vec: Vec3::new(separation, T::zero(), T::zero()),
            mu_hat_i: Vec3::new(T::zero(), T::zero(), T::one()),
            mu_hat_j: Vec3::new(T::zero(), T::zero(), T::one()),
            epsilon,
            delta_nu_err: T::zero(),
            magnetic_moment: None,
        }
    }

    pub fn separation(&self) -> T {
        self.r_vec.norm()
    }

    fn validate(&self) -> Result<()> {
        if self.r_vec.norm() == T::zero() {
            return Err(Error::ZeroSeparation);
        }
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(8.0));
        for (name, v) in [("mu_hat_i", &self.mu_hat_i), ("mu_hat_j", &self.mu_hat_j)] {
            if (v.norm() - T::one()).abs() > tol {
                return Err(Error::Invalid(format!("{name} is not a unit vector")));
            }
        }
        positive("epsilon", self.epsilon)
    }

    /// (μ̂_i·μ̂_j) − 3(μ̂_i·r̂)(μ̂_j·r̂).
    pub fn angular_factor(&self) -> Result<T> {
        self.validate()?;
        let r_hat = self.r_vec.scale(T::one() / self.r_vec.norm());
        Ok(self.mu_hat_i.dot(&self.mu_hat_j)
            - T::lit(3.0) * self.mu_hat_i.dot(&r_hat) * self.mu_hat_j.dot(&r_hat))
    }
}

/// Signed optical frequency shift (Hz) of one ion when its neighbour is
/// excited.
pub fn electric_dipole_shift<T: Real>(pair: &DipolePairParams<T>) -> Result<T> {
    let angular = pair.angular_factor()?;
    let r = pair.separation();
    let prefactor = T::lit(4.0) * T::PI() * pair.epsilon * T::lit(VACUUM_PERMITTIVITY) * T::lit(PLANCK);
    // split the small constants to stay inside f32 range
    let scaled = (pair.delta_mu_i / prefactor) * pair.delta_mu_j / (r * r * r);
    Ok(scaled * angular)
}

/// Point magnetic dipole–dipole coupling (Hz), (μ₀/4π) μ² |angular|/(h r³).
pub fn magnetic_dipole_shift<T: Real>(pair: &DipolePairParams<T>) -> Result<T> {
    let mu = pair
        .magnetic_moment
        .ok_or(Error::Missing("magnetic_moment"))?;
    let angular = pair.angular_factor()?;
    let r = pair.separation();
    Ok(T::lit(MU0_OVER_4PI) * (mu / T::lit(PLANCK)) * mu * angular.abs() / (r * r * r))
}

/// Shift at separation `r` from a reference value, using the 1/r³ law.
pub fn scaled_shift<T: Real>(reference_shift: T, reference_r: T, r: T) -> T {
    let ratio = reference_r / r;
    reference_shift * ratio * ratio * ratio
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipoleGate<T> {
    pub fidelity: T,
    pub gate_time: T,
}

/// T_gate = 5π√3/Δν, with Δν in cycles per second.
pub fn dipole_gate_time<T: Real>(delta_nu: T) -> Result<T> {
    positive("delta_nu", delta_nu)?;
    Ok(T::lit(5.0) * T::PI() * T::lit(3.0).sqrt() / delta_nu)
}

/// CNOT fidelity 1 − (T/80)(42γ + 25γ★ + 25χ) − (43π²/128)(δν/Δν)².
///
/// The decay rates are taken from `ion`; to model off-resonant Purcell
/// enhancement pass an ion whose γ already includes it.
pub fn dipole_gate_fidelity<T: Real>(
    ion: &IonParams<T>,
    delta_nu: T,
    delta_nu_err: T,
) -> Result<DipoleGate<T>> {
    let t = dipole_gate_time(delta_nu)?;
    let rate = T::lit(42.0) * ion.gamma() + T::lit(25.0) * (ion.gamma_star + ion.chi);
    let mis = delta_nu_err / delta_nu;
    let fidelity =
        T::one() - t / T::lit(80.0) * rate - T::lit(43.0 / 128.0) * T::PI() * T::PI() * mis * mis;
    Ok(DipoleGate {
        fidelity,
        gate_time: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::NUCLEAR_MAGNETON;
    use crate::presets::er167_yso;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const DELTA_MU: f64 = 0.84e-31;

    #[test]
    fn reference_gate_point() {
        let ion = er167_yso().ion;
        let g = dipole_gate_fidelity(&ion, 250e3, 0.02 * 250e3).unwrap();
        assert!((g.fidelity - 0.987).abs() < 1e-3, "{}", g.fidelity);
        assert!((g.gate_time * 1e6 - 108.8).abs() < 0.5);
    }

    #[test]
    fn ideal_gate() {
        let mut ion = er167_yso().ion;
        ion.gamma_r = 0.0;
        ion.gamma_nr = 0.0;
        ion.gamma_star = 0.0;
        ion.chi = 0.0;
        assert_eq!(dipole_gate_fidelity(&ion, 1e5, 0.0).unwrap().fidelity, 1.0);
        assert!(dipole_gate_fidelity(&ion, 0.0, 0.0).is_err());
    }

    #[test]
    fn off_resonant_purcell_degrades_gate() {
        let mut ion = er167_yso().ion;
        ion.gamma_nr += 31.8 * ion.gamma_r;
        let g = dipole_gate_fidelity(&ion, 250e3, 5e3).unwrap();
        assert!((g.fidelity - 0.951).abs() < 2e-3, "{}", g.fidelity);
    }

    #[test]
    fn fidelity_falls_with_separation() {
        let ion = er167_yso().ion;
        let mut last = f64::INFINITY;
        for i in 0..40 {
            let r = 2e-9 + i as f64 * 0.25e-9;
            let dnu = scaled_shift(250e3, 5e-9, r);
            let f = dipole_gate_fidelity(&ion, dnu, 0.02 * dnu).unwrap().fidelity;
            assert!(f < last);
            last = f;
        }
    }

    #[test]
    fn shift_magnitudes() {
        let near = DipolePairParams::broadside(DELTA_MU, 1e-9, 3.2);
        let far = DipolePairParams::broadside(DELTA_MU, 10e-9, 3.2);
        let a = electric_dipole_shift(&near).unwrap();
        let b = electric_dipole_shift(&far).unwrap();
        assert!((a / 1e6 - 30.0).abs() < 1.0, "{a}");
        assert!((b / 1e6 - 0.030).abs() < 1e-3, "{b}");
        assert_relative_eq!(b / a, 1e-3, max_relative = 1e-12);
    }

    #[test]
    fn special_geometries() {
        let p = DipolePairParams::broadside(DELTA_MU, 1e-9, 3.2);
        assert_eq!(p.angular_factor().unwrap(), 1.0);

        // head-to-tail
        let mut q = p;
        q.mu_hat_i = Vec3::new(1.0, 0.0, 0.0);
        q.mu_hat_j = Vec3::new(1.0, 0.0, 0.0);
        assert_relative_eq!(q.angular_factor().unwrap(), -2.0, max_relative = 1e-14);

        // parallel moments at the magic angle to r̂
        let c = (1.0f64 / 3.0).sqrt();
        let s = (2.0f64 / 3.0).sqrt();
        let mut m = p;
        m.mu_hat_i = Vec3::new(c, s, 0.0);
        m.mu_hat_j = Vec3::new(c, s, 0.0);
        assert!(electric_dipole_shift(&m).unwrap().abs() < 1e-12 * electric_dipole_shift(&p).unwrap());
    }

    #[test]
    fn rejects_bad_geometry() {
        let mut p = DipolePairParams::broadside(DELTA_MU, 1e-9, 3.2);
        p.r_vec = Vec3::new(0.0, 0.0, 0.0);
        assert_eq!(electric_dipole_shift(&p), Err(Error::ZeroSeparation));
        let mut p = DipolePairParams::broadside(DELTA_MU, 1e-9, 3.2);
        p.mu_hat_i = Vec3::new(0.0, 0.0, 1.1);
        assert!(electric_dipole_shift(&p).is_err());
        let p = DipolePairParams::broadside(DELTA_MU, 1e-9, 3.2);
        assert_eq!(magnetic_dipole_shift(&p), Err(Error::Missing("magnetic_moment")));
    }

    #[test]
    fn magnetic_coupling() {
        let mut p = DipolePairParams::broadside(DELTA_MU, 1e-9, 3.2);
        p.magnetic_moment = Some(0.1618 * NUCLEAR_MAGNETON);
        let near = magnetic_dipole_shift(&p).unwrap();
        assert!((near - 0.10).abs() < 0.005, "{near}");
        p.r_vec = Vec3::new(10e-9, 0.0, 0.0);
        assert_relative_eq!(magnetic_dipole_shift(&p).unwrap(), near * 1e-3, max_relative = 1e-12);
        p.r_vec = Vec3::new(1e-9, 0.0, 0.0);
        assert!(electric_dipole_shift(&p).unwrap() / near > 1e6);
    }

    proptest! {
        #[test]
        fn inverse_cube_and_exchange_symmetry(
            r in 0.5e-9f64..50e-9,
            k in 1.1f64..10.0,
            theta_i in 0.0f64..std::f64::consts::PI,
            phi_i in 0.0f64..std::f64::consts::TAU,
            theta_j in 0.0f64..std::f64::consts::PI,
            phi_j in 0.0f64..std::f64::consts::TAU,
            mu_j in 0.1e-31f64..2e-31,
        ) {
            let unit = |t: f64, p: f64| Vec3::new(t.sin() * p.cos(), t.sin() * p.sin(), t.cos());
            let mut a = DipolePairParams::broadside(DELTA_MU, r, 3.2);
            a.delta_mu_j = mu_j;
            a.mu_hat_i = unit(theta_i, phi_i);
            a.mu_hat_j = unit(theta_j, phi_j);
            a.r_vec = Vec3::new(r * 0.6, r * 0.8, 0.0);
            let base = electric_dipole_shift(&a).unwrap();

            let mut far = a;
            far.r_vec = a.r_vec.scale(k);
            let scaled = electric_dipole_shift(&far).unwrap();
            prop_assert!((scaled * k.powi(3) - base).abs() <= 1e-12 * base.abs().max(1e-30));

            let mut swapped = a;
            swapped.delta_mu_i = a.delta_mu_j;
            swapped.delta_mu_j = a.delta_mu_i;
            swapped.mu_hat_i = a.mu_hat_j;
            swapped.mu_hat_j = a.mu_hat_i;
            swapped.r_vec = a.r_vec.scale(-1.0);
            let s = electric_dipole_shift(&swapped).unwrap();
            prop_assert!((s - base).abs() <= 1e-12 * base.abs().max(1e-30));
        }

        #[test]
        fn gate_fidelity_monotone_in_each_rate(
            bump in 1.0f64..1e3,
            which in 0usize..5,
        ) {
            let ion = er167_yso().ion;
            let base = dipole_gate_fidelity(&ion, 250e3, 5e3).unwrap().fidelity;
            let mut worse = ion;
            let (dnu, err) = match which {
                0 => { worse.gamma_nr += bump; (250e3, 5e3) }
                1 => { worse.gamma_star += bump; (250e3, 5e3) }
                2 => { worse.chi += bump; (250e3, 5e3) }
                3 => (250e3, 5e3 + bump),
                // a smaller shift means a longer gate
                _ => (250e3 / (1.0 + bump / 1e3), 5e3 / (1.0 + bump / 1e3)),
            };
            let f = dipole_gate_fidelity(&worse, dnu, err).unwrap().fidelity;
            prop_assert!(f < base);
        }
    }
}
