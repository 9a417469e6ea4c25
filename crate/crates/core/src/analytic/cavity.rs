use serde::{Deserialize, Serialize};

use crate::analytic::Vec3;
use crate::constants::HBAR;
use crate::error::{positive, Result};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetunedCavity<T> {
    /// Lorentzian suppression 1 + 4(δ/κ)² of a transition detuned by δ.
    pub line_enhancement_ratio: T,
    /// Residual Purcell factor F_p/(1 + 4(δ/κ)²).
    pub off_resonant_purcell: T,
}

pub fn detuned_cavity_effects<T: Real>(
    delta: T,
    kappa: T,
    purcell_resonant: T,
) -> Result<DetunedCavity<T>> {
    positive("kappa", kappa)?;
    let x = delta / kappa;
    let ratio = T::one() + T::lit(4.0) * x * x;
    Ok(DetunedCavity {
        line_enhancement_ratio: ratio,
        off_resonant_purcell: purcell_resonant / ratio,
    })
}

/// DC Stark detuning (rad/s) for a field collinear with Δμ, including the
/// Lorentz local-field factor (2 + ε)/3.
pub fn stark_detuning<T: Real>(delta_mu: T, field: T, epsilon: T) -> T {
    let lorentz = (T::lit(2.0) + epsilon) / T::lit(3.0);
    delta_mu / T::lit(HBAR) * field * lorentz
}

/// Vector form, Δ = (Δμ⃗·E⃗)(2 + ε)/3ħ.
pub fn stark_detuning_vec<T: Real>(delta_mu: &Vec3<T>, field: &Vec3<T>, epsilon: T) -> T {
    let lorentz = (T::lit(2.0) + epsilon) / T::lit(3.0);
    let scaled = delta_mu.scale(T::one() / T::lit(HBAR));
    scaled.dot(field) * lorentz
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::two_pi_hz;
    use approx::assert_relative_eq;

    #[test]
    fn off_resonant_purcell_at_reference_point() {
        let d = detuned_cavity_effects(two_pi_hz::<f64>(100e6), two_pi_hz(16e6), 5000.0).unwrap();
        assert!((d.line_enhancement_ratio - 157.25).abs() < 1e-9);
        assert!((d.off_resonant_purcell - 31.8).abs() < 0.3);
    }

    #[test]
    fn trivial_detunings() {
        let d = detuned_cavity_effects(0.0, 3.0, 42.0).unwrap();
        assert_eq!(d.line_enhancement_ratio, 1.0);
        assert_eq!(d.off_resonant_purcell, 42.0);
        let d = detuned_cavity_effects(1.5, 3.0, 42.0).unwrap();
        assert_eq!(d.line_enhancement_ratio, 2.0);
        assert!(detuned_cavity_effects(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn stark_shift() {
        assert_eq!(stark_detuning(0.84e-31, 0.0, 3.2), 0.0);
        // ε = 1 gives a unit Lorentz factor
        assert_relative_eq!(stark_detuning(1e-31, 1e5, 1.0), 1e-31 * 1e5 / HBAR, max_relative = 1e-14);
        let expected = 0.84e-31 * 1e5 * (2.0 + 3.2) / 3.0 / HBAR;
        assert_relative_eq!(stark_detuning(0.84e-31, 1e5, 3.2), expected, max_relative = 1e-14);
        let mu = Vec3::new(0.0, 0.84e-31, 0.0);
        let e = Vec3::new(1e5, 1e5, 0.0);
        assert_relative_eq!(stark_detuning_vec(&mu, &e, 3.2), expected, max_relative = 1e-14);
    }
}
