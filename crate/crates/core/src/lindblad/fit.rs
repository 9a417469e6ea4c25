//! Calibration of the pure-dephasing terms of the analytic gate model
//! against simulated fidelities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::LiouvillianOptions;
use super::protocol::{run_cz_protocol, GateModel, GateProtocol, KappaUnits};
use super::sweep::golden_section_max;
use crate::analytic::{exchange_gate_analytic, DephasingForm, ExchangeGateInputs};
use crate::error::{Error, Result};
use crate::Real;

/// Unmonitored simulation results at one dephasing rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DephasingSample<T> {
    pub gamma_star: T,
    pub gamma: T,
    pub kappa: T,
    pub cooperativity: T,
    pub delta_eg: T,
    /// (Δ, simulated fidelity) pairs.
    pub points: Vec<(T, T)>,
    /// Simulated maximum over Δ.
    pub peak_fidelity: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DephasingFit<T> {
    /// Slope of the fidelity loss against γ★T_gate.
    pub c1: T,
    /// Coefficient in C★ = Cγ/(γ + c2γ★).
    pub c2: T,
    /// c2 implied by each sample on its own.
    pub c2_per_sample: Vec<T>,
}

pub const MIN_DEPHASING_SAMPLES: usize = 4;

/// Least-squares fit of both coefficients. c1 regresses the gap between the
/// dephasing-free analytic curve and the simulation on γ★T_gate; c2
/// regresses C/C★ − 1 on γ★/γ, with C★ read off the simulated peak through
/// F_max = 1 − 2π/√C★.
pub fn fit_dephasing_coefficients<T: Real>(samples: &[DephasingSample<T>]) -> Result<DephasingFit<T>> {
    if samples.iter().any(|s| !(s.gamma_star > T::zero())) {
        return Err(Error::DegenerateFit("every sample needs a positive dephasing rate".into()));
    }
    let mut rates: Vec<f64> = samples.iter().map(|s| s.gamma_star.to_f64_lossy()).collect();
    rates.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    rates.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    if rates.len() < MIN_DEPHASING_SAMPLES {
        return Err(Error::DegenerateFit(format!(
            "need at least {MIN_DEPHASING_SAMPLES} distinct dephasing rates, got {}",
            rates.len()
        )));
    }
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    let (mut cxy, mut cxx) = (T::zero(), T::zero());
    let mut per = Vec::with_capacity(samples.len());
    for s in samples {
        let inputs = ExchangeGateInputs {
            cooperativity: s.cooperativity,
            kappa: s.kappa,
            gamma: s.gamma,
            gamma_star: T::zero(),
            delta_w: T::zero(),
            delta_eg: s.delta_eg,
        };
        for &(delta, f_sim) in &s.points {
            let clean = exchange_gate_analytic(&inputs, delta, DephasingForm::LinearSlope)?;
            let x = s.gamma_star * clean.gate_time;
            sxy = sxy + x * (clean.fidelity - f_sim);
            sxx = sxx + x * x;
        }
        let gap = T::one() - s.peak_fidelity;
        if !(gap > T::zero()) {
            return Err(Error::DegenerateFit("simulated peak fidelity must be below one".into()));
        }
        let c_star = (T::two_pi() / gap).powi(2);
        let x = s.gamma_star / s.gamma;
        let y = s.cooperativity / c_star - T::one();
        per.push(y / x);
        cxy = cxy + x * y;
        cxx = cxx + x * x;
    }
    if !(sxx > T::zero()) {
        return Err(Error::DegenerateFit("no detuning points to fit the dephasing slope".into()));
    }
    Ok(DephasingFit {
        c1: sxy / sxx,
        c2: cxy / cxx,
        c2_per_sample: per,
    })
}

/// Simulates each γ★/γ ratio (pη_d = 0) at the given detunings and at the
/// fidelity peak inside `peak_bracket`, then fits.
pub fn dephasing_study<T: Real>(
    base: &KappaUnits<T>,
    gamma_star_ratios: &[T],
    deltas: &[T],
    peak_bracket: (T, T),
    options: LiouvillianOptions<T>,
) -> Result<(Vec<DephasingSample<T>>, DephasingFit<T>)> {
    let samples: Vec<Result<DephasingSample<T>>> = gamma_star_ratios
        .par_iter()
        .map(|&ratio| {
            let mut units = *base;
            units.gamma_star_over_kappa = ratio * units.gamma_over_kappa;
            let model = GateModel::kappa_units(&units, options)?;
            let fid = |d: T| run_cz_protocol(&model, &GateProtocol::new(d, T::zero())).map(|r| r.fidelity);
            let points = deltas.iter().map(|&d| fid(d).map(|f| (d, f))).collect::<Result<Vec<_>>>()?;
            let (_, peak) = golden_section_max(fid, peak_bracket.0, peak_bracket.1, T::lit(1e-3))?;
            Ok(DephasingSample {
                gamma_star: units.gamma_star_over_kappa,
                gamma: units.gamma_over_kappa,
                kappa: T::one(),
                cooperativity: units.cooperativity(),
                delta_eg: units.delta_eg_over_kappa,
                points,
                peak_fidelity: peak,
            })
        })
        .collect();
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let fit = fit_dephasing_coefficients(&samples)?;
    Ok((samples, fit))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(c1: f64, c2: f64, ratio: f64) -> DephasingSample<f64> {
        let (c, kappa, gamma) = (9e4, 1.0, 4e-2 / 9e4);
        let gs = ratio * gamma;
        let inputs = ExchangeGateInputs {
            cooperativity: c,
            kappa,
            gamma,
            gamma_star: 0.0,
            delta_w: 0.0,
            delta_eg: f64::INFINITY,
        };
        let points = [60.0, 100.0, 140.0]
            .iter()
            .map(|&d| {
                let g = exchange_gate_analytic(&inputs, d, DephasingForm::LinearSlope).unwrap();
                (d, g.fidelity - c1 * gs * g.gate_time)
            })
            .collect();
        let c_star = c * gamma / (gamma + c2 * gs);
        DephasingSample {
            gamma_star: gs,
            gamma,
            kappa,
            cooperativity: c,
            delta_eg: f64::INFINITY,
            points,
            peak_fidelity: 1.0 - std::f64::consts::TAU / c_star.sqrt(),
        }
    }

    #[test]
    fn recovers_synthetic_coefficients() {
        let s: Vec<_> = [0.5, 1.0, 2.0, 3.0].iter().map(|&r| synthetic(0.29, 0.61, r)).collect();
        let fit = fit_dephasing_coefficients(&s).unwrap();
        assert!((fit.c1 - 0.29).abs() < 1e-9);
        assert!((fit.c2 - 0.61).abs() < 1e-9);
    }

    #[test]
    fn zero_dephasing_is_degenerate() {
        let mut s: Vec<_> = [0.5, 1.0, 2.0, 3.0].iter().map(|&r| synthetic(0.29, 0.61, r)).collect();
        s[0].gamma_star = 0.0;
        assert!(matches!(fit_dephasing_coefficients(&s), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn too_few_rates_rejected() {
        let s: Vec<_> = [0.5, 1.0, 1.0, 2.0].iter().map(|&r| synthetic(0.29, 0.61, r)).collect();
        assert!(matches!(fit_dephasing_coefficients(&s), Err(Error::DegenerateFit(_))));
    }
}
