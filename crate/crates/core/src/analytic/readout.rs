//! Cycling-transition spin readout.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, unit_interval, Error, Result};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutConfig<T> {
    /// Number of excitation pulses N.
    pub pulses: u32,
    /// Pulse period T_p (s).
    pub period: T,
    /// False-count probability per cycle ξ.
    pub xi: T,
    /// Probability that one cycle yields a detected photon, pη_d.
    pub p_eta_d: T,
}

impl<T: Real> ReadoutConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.pulses == 0 {
            return Err(Error::Invalid("readout needs at least one pulse".into()));
        }
        non_negative("period", self.period)?;
        unit_interval("xi", self.xi)?;
        unit_interval("p_eta_d", self.p_eta_d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReadoutMode {
    /// Every pulse yields a full emission opportunity.
    FixedWindow,
    /// Emission between pulses limited by the finite decay time.
    PulseTrain,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutResult<T> {
    pub fidelity: T,
    /// N T_p.
    pub duration: T,
    /// Probability that a bright ion produces no click.
    pub miss_probability: T,
}

/// Emission probability between the k-th and (k+1)-th pulse,
/// η_p(k) = (1 − (−1)^k e^{−k T_p γ′}) tanh(T_p γ′/2).
fn emission_window<T: Real>(k: u32, x: T) -> T {
    let sign = if k % 2 == 0 { T::one() } else { -T::one() };
    let kk = T::from_u32(k).expect("pulse index");
    (T::one() - sign * (-kk * x).exp()) * (x / T::lit(2.0)).tanh()
}

pub fn readout_fidelity<T: Real>(
    cfg: &ReadoutConfig<T>,
    gamma_prime: T,
    mode: ReadoutMode,
) -> Result<ReadoutResult<T>> {
    cfg.validate()?;
    let n = T::from_u32(cfg.pulses).expect("pulse count");
    let miss = match mode {
        ReadoutMode::FixedWindow => (T::one() - cfg.p_eta_d).powi(cfg.pulses as i32),
        ReadoutMode::PulseTrain => {
            positive("gamma_prime", gamma_prime)?;
            let x = cfg.period * gamma_prime;
            (1..=cfg.pulses)
                .map(|k| T::one() - cfg.p_eta_d * emission_window(k, x))
                .fold(T::one(), |acc, f| acc * f)
        }
    };
    let half = T::lit(0.5);
    Ok(ReadoutResult {
        fidelity: T::one() - n * cfg.xi * half - half * miss,
        duration: n * cfg.period,
        miss_probability: miss,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutPoint<T> {
    pub pulses: u32,
    pub period: T,
    pub fidelity: T,
}

/// Pulse-train fidelity at a fixed total readout time, for every integer
/// pulse count in `pulses`.
pub fn readout_scan<T: Real>(
    total_time: T,
    gamma_prime: T,
    xi: T,
    p_eta_d: T,
    pulses: std::ops::RangeInclusive<u32>,
) -> Result<Vec<ReadoutPoint<T>>> {
    positive("total_time", total_time)?;
    pulses
        .map(|n| {
            let period = total_time / T::from_u32(n).expect("pulse count");
            let cfg = ReadoutConfig {
                pulses: n,
                period,
                xi,
                p_eta_d,
            };
            let r = readout_fidelity(&cfg, gamma_prime, ReadoutMode::PulseTrain)?;
            Ok(ReadoutPoint {
                pulses: n,
                period,
                fidelity: r.fidelity,
            })
        })
        .collect()
}
