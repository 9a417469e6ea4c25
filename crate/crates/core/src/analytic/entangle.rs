use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, unit_interval, Result};
use crate::params::DerivedRates;
use crate::Real;

/// Parameters of one elementary link.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkParams<T> {
    /// Elementary link length L₀ (km).
    pub l0_km: T,
    /// Fiber attenuation length (km).
    pub l_att_km: T,
    /// Signal speed in fiber (m/s).
    pub signal_speed: T,
    /// Collection efficiency η_c.
    pub eta_c: T,
    /// Detector efficiency η_d.
    pub eta_d: T,
    /// Initialization wait before each attempt (s).
    pub t_init: T,
    /// Ion–ion optical detuning Δ_w (rad/s).
    pub delta_w: T,
}

impl<T: Real> LinkParams<T> {
    pub fn new(l0_km: T) -> Self {
        Self {
            l0_km,
            l_att_km: T::lit(22.0),
            signal_speed: T::lit(2.0e8),
            eta_c: T::one(),
            eta_d: T::one(),
            t_init: T::zero(),
            delta_w: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("l0_km", self.l0_km)?;
        positive("l_att_km", self.l_att_km)?;
        positive("signal_speed", self.signal_speed)?;
        unit_interval("eta_c", self.eta_c)?;
        unit_interval("eta_d", self.eta_d)?;
        non_negative("t_init", self.t_init)
    }

    /// Fiber transmission over half a link, η_t = exp(−L₀/2L_att).
    pub fn transmission(&self) -> T {
        (-self.l0_km / (T::lit(2.0) * self.l_att_km)).exp()
    }

    /// One-way signalling time L₀/c.
    pub fn signalling_time(&self) -> T {
        self.l0_km * T::lit(1e3) / self.signal_speed
    }

    /// Duration of one generation attempt, L₀/c + T_init.
    pub fn attempt_time(&self) -> T {
        self.signalling_time() + self.t_init
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntangleFidelity<T> {
    pub fidelity: T,
    /// Mean wavepacket overlap M′.
    pub overlap: T,
    /// Enhanced indistinguishability I′.
    pub indist_prime: T,
}

/// Barrett–Kok heralded entanglement fidelity
/// F = ½(1 + γ′²/(Γ′² + Δ_w²)), together with M′ and I′.
pub fn entangle_fidelity<T: Real>(rates: &DerivedRates<T>, delta_w: T) -> EntangleFidelity<T> {
    let half = T::lit(0.5);
    let gp = rates.gamma_prime;
    let zp = rates.zpl_width_prime;
    let denom = zp * zp + delta_w * delta_w;
    EntangleFidelity {
        fidelity: half * (T::one() + gp * gp / denom),
        overlap: zp * gp / denom,
        indist_prime: rates.indist_prime,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntangleEfficiency<T> {
    /// Emission into the collected mode, p = η_c F_p γ_r/γ′.
    pub emission: T,
    pub transmission: T,
    /// η = p η_t η_d.
    pub eta: T,
    /// p_en = η²/2.
    pub p_en: T,
}

pub fn entangle_efficiency<T: Real>(
    rates: &DerivedRates<T>,
    link: &LinkParams<T>,
) -> EntangleEfficiency<T> {
    let emission = link.eta_c * rates.purcell * rates.gamma_r / rates.gamma_prime;
    let transmission = link.transmission();
    let eta = emission * transmission * link.eta_d;
    EntangleEfficiency {
        emission,
        transmission,
        eta,
        p_en: eta * eta / T::lit(2.0),
    }
}

/// Lower bound on single-pulse initialization fidelity,
/// (γ_r F_p + βγ)(1 − e^{−T_init γ′})/γ′.
pub fn init_fidelity<T: Real>(rates: &DerivedRates<T>, beta: T, t_init: T) -> T {
    let gp = rates.gamma_prime;
    (rates.gamma_r * rates.purcell + beta * rates.gamma) * (T::one() - (-t_init * gp).exp()) / gp
}

/// Probability that an excitation is emitted into the cavity mode and
/// collected: η_c γ_r F_p/(γ_r F_p + γ).
pub fn emission_probability<T: Real>(rates: &DerivedRates<T>, eta_c: T) -> T {
    let enhanced = rates.gamma_r * rates.purcell;
    eta_c * enhanced / (enhanced + rates.gamma)
}
