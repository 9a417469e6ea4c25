//! Detuning sweeps of the simulated gate and the fidelity optimum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::protocol::{run_cz_protocol, GateModel, GateProtocol, GateSimResult};
use crate::error::{Error, Result};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint<T> {
    pub delta: T,
    pub fidelity: T,
    pub p_gate: T,
    pub p_gate_control_excited: T,
    pub gate_time: T,
    pub truncation_warning: bool,
}

impl<T: Real> From<&GateSimResult<T>> for SweepPoint<T> {
    fn from(r: &GateSimResult<T>) -> Self {
        Self {
            delta: r.delta,
            fidelity: r.fidelity,
            p_gate: r.p_gate,
            p_gate_control_excited: r.p_gate_control_excited,
            gate_time: r.gate_time,
            truncation_warning: r.truncation_warning,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve<T> {
    pub p_eta_d: T,
    pub points: Vec<SweepPoint<T>>,
    /// Refined maximum of the fidelity.
    pub optimum: SweepPoint<T>,
    /// The grid maximum sits on the first or last detuning.
    pub boundary_warning: bool,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Maximizes a unimodal function on [lo, hi]; returns (argmax, max).
pub fn golden_section_max<T: Real, E>(
    mut f: impl FnMut(T) -> std::result::Result<T, E>,
    lo: T,
    hi: T,
    rel_tol: T,
) -> std::result::Result<(T, T), E> {
    let r = T::lit(GOLDEN);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()) * T::lit(0.5) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

/// Sweeps `deltas` for every pη_d and refines each curve's maximum.
pub fn sweep_and_optimize<T: Real>(
    model: &GateModel<T>,
    base: &GateProtocol<T>,
    deltas: &[T],
    p_eta_ds: &[T],
) -> Result<Vec<SweepCurve<T>>> {
    if deltas.len() < 3 {
        return Err(Error::Invalid("a sweep needs at least three detunings".into()));
    }
    if deltas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid("detunings must be strictly increasing".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..p_eta_ds.len())
        .flat_map(|i| (0..deltas.len()).map(move |j| (i, j)))
        .collect();
    let run = |delta: T, p: T| {
        let mut proto = base.clone();
        proto.delta = delta;
        proto.p_eta_d = p;
        proto.gate_time = None;
        run_cz_protocol(model, &proto)
    };
    let results: Vec<Result<SweepPoint<T>>> = jobs
        .par_iter()
        .map(|&(i, j)| run(deltas[j], p_eta_ds[i]).map(|r| SweepPoint::from(&r)))
        .collect();
    let mut results = results.into_iter();
    let mut curves = Vec::with_capacity(p_eta_ds.len());
    for &p in p_eta_ds {
        let points: Vec<SweepPoint<T>> = results.by_ref().take(deltas.len()).collect::<Result<_>>()?;
        let (optimum, boundary_warning) = refine_optimum(model, base, p, &points)?;
        curves.push(SweepCurve {
            p_eta_d: p,
            points,
            optimum,
            boundary_warning,
        });
    }
    Ok(curves)
}

/// Golden-section refinement of a gridded curve's maximum between the grid
/// neighbours of the best point. Returns the optimum and whether the grid
/// maximum sat on an end point.
pub fn refine_optimum<T: Real>(
    model: &GateModel<T>,
    base: &GateProtocol<T>,
    p_eta_d: T,
    points: &[SweepPoint<T>],
) -> Result<(SweepPoint<T>, bool)> {
    if points.is_empty() {
        return Err(Error::Invalid("empty sweep".into()));
    }
    let run = |delta: T| {
        let mut proto = base.clone();
        proto.delta = delta;
        proto.p_eta_d = p_eta_d;
        proto.gate_time = None;
        run_cz_protocol(model, &proto)
    };
    let k = points
        .iter()
        .enumerate()
        .fold(0, |best, (i, pt)| if pt.fidelity > points[best].fidelity { i } else { best });
    let boundary = k == 0 || k == points.len() - 1;
    let lo = points[k.saturating_sub(1)].delta;
    let hi = points[(k + 1).min(points.len() - 1)].delta;
    if !(hi > lo) {
        return Ok((points[k], boundary));
    }
    let (x, _) = golden_section_max(|d| run(d).map(|r| r.fidelity), lo, hi, T::lit(1e-4))?;
    let refined = SweepPoint::from(&run(x)?);
    Ok((if refined.fidelity >= points[k].fidelity { refined } else { points[k] }, boundary))
}

/// Evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * T::lit(i as f64) / T::lit((n - 1) as f64))
            .collect(),
    }
}
