//! Physical parameter sets and the Purcell-derived rates every other model
//! consumes.
//!
//! All rates are angular frequencies (rad/s). Use [`crate::scalar::two_pi_hz`]
//! to enter values quoted as `2π × X Hz`.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, unit_interval, Error, Result};
use crate::Real;

/// Coefficient of γ★ in the dephasing-reduced cooperativity C★ = Cγ/(γ + 0.61γ★).
pub const COOPERATIVITY_DEPHASING_COEFF: f64 = 0.61;

/// Single-ion optical and spin rates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IonParams<T> {
    /// Radiative decay rate γ_r.
    pub gamma_r: T,
    /// Non-radiative decay rate γ_nr.
    pub gamma_nr: T,
    /// Optical pure dephasing rate γ★.
    pub gamma_star: T,
    /// Spin decoherence rate χ.
    pub chi: T,
    /// Branching ratio back to the initial ground state without a cavity.
    pub beta: T,
    /// Ground-state hyperfine splitting ω_g.
    pub omega_g: T,
    /// Splitting difference δ_eg = ω_e − ω_g.
    pub delta_eg: T,
}

impl<T: Real> IonParams<T> {
    /// Total bare decay γ = γ_r + γ_nr.
    pub fn gamma(&self) -> T {
        self.gamma_r + self.gamma_nr
    }

    /// Excited-state hyperfine splitting ω_e = ω_g + δ_eg.
    pub fn omega_e(&self) -> T {
        self.omega_g + self.delta_eg
    }

    /// Pure dephasing implied by an optical coherence time: γ★ = 1/T₂ − γ/2.
    pub fn dephasing_from_t2(gamma: T, t2: T) -> T {
        T::one() / t2 - gamma / T::lit(2.0)
    }

    pub fn validate(&self) -> Result<()> {
        non_negative("gamma_r", self.gamma_r)?;
        non_negative("gamma_nr", self.gamma_nr)?;
        non_negative("gamma_star", self.gamma_star)?;
        non_negative("chi", self.chi)?;
        non_negative("omega_g", self.omega_g)?;
        unit_interval("beta", self.beta)?;
        positive("gamma", self.gamma())
    }

    pub fn cast<U: Real>(&self) -> IonParams<U> {
        IonParams {
            gamma_r: cast(self.gamma_r),
            gamma_nr: cast(self.gamma_nr),
            gamma_star: cast(self.gamma_star),
            chi: cast(self.chi),
            beta: cast(self.beta),
            omega_g: cast(self.omega_g),
            delta_eg: cast(self.delta_eg),
        }
    }
}

/// Single-mode optical cavity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityParams<T> {
    /// Ion–cavity coupling g.
    pub g: T,
    /// Cavity energy decay rate κ.
    pub kappa: T,
    /// Ion–cavity detuning Δ.
    pub delta: T,
    /// Cavity resonance, only needed for Q conversions.
    pub optical_frequency: Option<T>,
    /// Fock-space truncation used by the simulator.
    pub n_max: usize,
}

impl<T: Real> CavityParams<T> {
    pub fn validate(&self) -> Result<()> {
        positive("g", self.g)?;
        self.validate_without_coupling()
    }

    fn validate_without_coupling(&self) -> Result<()> {
        positive("kappa", self.kappa)?;
        if let Some(w) = self.optical_frequency {
            positive("optical_frequency", w)?;
        }
        if self.n_max < 1 {
            return Err(Error::Truncation(self.n_max));
        }
        Ok(())
    }

    /// Quality factor ω_c/κ, when the resonance is known.
    pub fn quality_factor(&self) -> Option<T> {
        self.optical_frequency.map(|w| w / self.kappa)
    }

    pub fn cast<U: Real>(&self) -> CavityParams<U> {
        CavityParams {
            g: cast(self.g),
            kappa: cast(self.kappa),
            delta: cast(self.delta),
            optical_frequency: self.optical_frequency.map(cast),
            n_max: self.n_max,
        }
    }
}

/// How the Purcell factor is obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PurcellModel<T> {
    /// Bad-cavity form F_p = 4g²/(γ_r κ).
    BadCavity,
    /// F_p = R/γ_r with R = 4g²/(κ + Γ).
    General,
    /// Fixed Purcell factor; g is ignored.
    Override(T),
}

/// Every Purcell-derived quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates<T> {
    /// Bare decay γ.
    pub gamma: T,
    /// Radiative decay γ_r, carried along for downstream formulas.
    pub gamma_r: T,
    /// Pure dephasing γ★, carried along for downstream formulas.
    pub gamma_star: T,
    pub purcell: T,
    /// Enhanced decay γ′ = γ_r F_p + γ.
    pub gamma_prime: T,
    /// Bare zero-phonon-line width Γ = γ + 2γ★.
    pub zpl_width: T,
    /// Enhanced width Γ′ = γ′ + 2γ★.
    pub zpl_width_prime: T,
    /// ζ = γ_r/γ.
    pub zeta: T,
    /// Bare indistinguishability I = γ/Γ.
    pub indist: T,
    /// Enhanced indistinguishability I′ = γ′/Γ′.
    pub indist_prime: T,
    /// Cooperativity C.
    pub cooperativity: T,
    /// Dephasing-reduced cooperativity C★.
    pub cooperativity_star: T,
}

impl<T: Real> DerivedRates<T> {
    /// Excited-state lifetime 1/γ′.
    pub fn lifetime(&self) -> T {
        T::one() / self.gamma_prime
    }
}

/// C★ = Cγ/(γ + 0.61γ★).
pub fn reduced_cooperativity<T: Real>(c: T, gamma: T, gamma_star: T) -> T {
    c * gamma / (gamma + T::lit(COOPERATIVITY_DEPHASING_COEFF) * gamma_star)
}

pub fn derive_rates<T: Real>(
    ion: &IonParams<T>,
    cavity: &CavityParams<T>,
    model: PurcellModel<T>,
) -> Result<DerivedRates<T>> {
    ion.validate()?;
    positive("gamma_r", ion.gamma_r)?;
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let gamma = ion.gamma();
    let zpl_width = gamma + two * ion.gamma_star;

    let (purcell, cooperativity) = match model {
        PurcellModel::Override(fp) => {
            cavity.validate_without_coupling()?;
            non_negative("purcell", fp)?;
            (fp, fp * ion.gamma_r / gamma)
        }
        PurcellModel::BadCavity => {
            cavity.validate()?;
            let g2 = cavity.g * cavity.g;
            (
                four * g2 / (ion.gamma_r * cavity.kappa),
                four * g2 / (cavity.kappa * gamma),
            )
        }
        PurcellModel::General => {
            cavity.validate()?;
            let g2 = cavity.g * cavity.g;
            let transfer = four * g2 / (cavity.kappa + zpl_width);
            (transfer / ion.gamma_r, four * g2 / (cavity.kappa * gamma))
        }
    };

    let gamma_prime = ion.gamma_r * purcell + gamma;
    let zpl_width_prime = gamma_prime + two * ion.gamma_star;
    Ok(DerivedRates {
        gamma,
        gamma_r: ion.gamma_r,
        gamma_star: ion.gamma_star,
        purcell,
        gamma_prime,
        zpl_width,
        zpl_width_prime,
        zeta: ion.gamma_r / gamma,
        indist: gamma / zpl_width,
        indist_prime: gamma_prime / zpl_width_prime,
        cooperativity,
        cooperativity_star: reduced_cooperativity(cooperativity, gamma, ion.gamma_star),
    })
}

/// κ = ω/Q.
pub fn quality_factor_kappa<T: Real>(q: T, optical_frequency: T) -> Result<T> {
    positive("Q", q)?;
    positive("optical_frequency", optical_frequency)?;
    Ok(optical_frequency / q)
}

/// Q = ω/κ.
pub fn kappa_quality_factor<T: Real>(kappa: T, optical_frequency: T) -> Result<T> {
    positive("kappa", kappa)?;
    positive("optical_frequency", optical_frequency)?;
    Ok(optical_frequency / kappa)
}

/// Angular optical frequency of light with the given vacuum wavelength.
pub fn wavelength_to_angular<T: Real>(wavelength_m: T) -> T {
    T::two_pi() * T::lit(crate::constants::SPEED_OF_LIGHT) / wavelength_m
}

fn cast<T: Real, U: Real>(x: T) -> U {
    U::lit(x.to_f64_lossy())
}
