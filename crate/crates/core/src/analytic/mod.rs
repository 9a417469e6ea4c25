//! Closed-form models for every repeater step: heralded entanglement,
//! initialization, the two swapping gates, spin readout and the cavity
//! side effects that constrain them.

mod cavity;
mod dipole;
mod entangle;
mod exchange;
mod readout;

pub use cavity::{detuned_cavity_effects, stark_detuning, stark_detuning_vec, DetunedCavity};
pub use dipole::{
    dipole_gate_fidelity, dipole_gate_time, electric_dipole_shift, magnetic_dipole_shift,
    scaled_shift, DipoleGate, DipolePairParams, Vec3,
};
pub use entangle::{
    emission_probability, entangle_efficiency, entangle_fidelity, init_fidelity,
    EntangleEfficiency, EntangleFidelity, LinkParams,
};
pub use exchange::{
    exchange_gate_analytic, exchange_gate_optimum, DephasingForm, ExchangeGate,
    ExchangeGateInputs, ExchangeOptimum, ValidityFlags, DEPHASING_SLOPE_COEFF,
};
pub use readout::{readout_fidelity, readout_scan, ReadoutConfig, ReadoutMode, ReadoutPoint, ReadoutResult};
